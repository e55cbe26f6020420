"""Full rainbow matchings in edge-coloured multigraphs whose colour classes are disjoint clique unions."""

from .baseline import SolveOutcome, Status, greedy_bound_check, solve_exact_max, solve_greedy
from .generators import FAMILIES, GeneratorSpec, InfeasibleSpec, RetryExhausted, generate
from .graph import (
    Clique, ColouredMultigraph, GraphError, InstanceStats, MatchingVerdict, RainbowMatching,
    build_instance, from_arrays, instance_stats, multiplicity_cap, normalize_cliques,
    remove_vertices, verify_matching,
)
from .io import ParseError, parse_instance, parse_matching, serialize, serialize_instance, serialize_matching, serialize_trace
from .nibble import (
    AlgorithmBroke, NibbleConfig, NibbleTrace, audit_reduction, reduce_theorem1, run_nibble,
    solve_theorem1,
)

__version__ = "0.1.0"
