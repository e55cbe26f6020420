"""Randomized nibble for full rainbow matchings, plus the clique-to-K3/K2 reduction.

Colours are shuffled and cut into chunks of εn. Each iteration processes
one chunk: every chunk colour picks a uniform edge, edges that collide with
no other chosen edge go straight into the matching, every surviving vertex
is zapped with a probability that tops its chance of being hit up to p_i,
and colliding colours are then matched greedily. The last chunk is matched
greedily on whatever is left.

The live graph is held as a (K, 3) array of component vertices padded with
a sentinel vertex V that is never alive, rows ascending, grouped by colour.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .baseline import SolveOutcome, Status
from .graph import (
    ColouredMultigraph, GraphError, InstanceStats, RainbowMatching, ceil_tol, from_arrays,
    instance_stats, multiplicity_cap, normalize_cliques, verify_matching,
)
from .prediction import (
    d_of, degree_deviation, edge_deviation, step_probability_from,
)

_EDGE_A = np.array([0, 0, 1])
_EDGE_B = np.array([1, 2, 2])


class BadEpsilon(ValueError):
    pass


class NotNormalized(ValueError):
    pass


class HypothesisViolation(ValueError):
    pass


class ReductionAuditFailed(RuntimeError):
    pass


class AlgorithmBroke(Exception):
    """The run cannot continue; ``reason`` names the failing step."""

    def __init__(self, reason: str, iteration: int | None = None, detail: str = ""):
        super().__init__(f"{reason} at iteration {iteration}: {detail}" if detail else reason)
        self.reason = reason
        self.iteration = iteration
        self.detail = detail


class EmptyColourClass(AlgorithmBroke):
    def __init__(self, colour: int, iteration: int | None = None):
        super().__init__("EmptyColourClass", iteration, f"colour {colour} has no edges left")
        self.colour = colour


def default_epsilon(n: int) -> float:
    """Largest ε <= 0.1 with εn integral (at least one colour per chunk)."""
    if n <= 0:
        return 1.0
    return max(1, math.floor(0.1 * n + 1e-9)) / n


@dataclass(frozen=True)
class NibbleConfig:
    """Run parameters.

    ``epsilon=None`` picks :func:`default_epsilon`. ``strict_final_check``
    makes the final chunk give up up front when some colour has fewer than
    4|C_τ| edges; by default that bound is only recorded.
    """

    epsilon: float | None = None
    sigma1: float = 0.5
    sigma2: float = 1.0
    seed: int = 0
    max_retries: int = 3
    record_stats: bool = False
    strict_final_check: bool = False
    q_tol: float = 1e-12

    def __post_init__(self):
        if not 0 < self.sigma1 < self.sigma2:
            raise ValueError("need 0 < sigma1 < sigma2")
        if self.epsilon is not None and not 0 < self.epsilon <= 1:
            raise BadEpsilon(f"epsilon {self.epsilon} outside (0, 1]")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    @property
    def gamma(self) -> float:
        return self.sigma1 / self.sigma2

    def chunk_size(self, n: int) -> tuple[float, int]:
        """(ε, εn) for ``n`` colours; εn must be a whole number."""
        eps = default_epsilon(n) if self.epsilon is None else self.epsilon
        k = round(eps * n)
        if n > 0 and (abs(eps * n - k) > 1e-9 or k < 1):
            raise BadEpsilon(f"epsilon*n = {eps * n} is not a positive integer")
        return eps, k


@dataclass
class ChunkPlan:
    """``chunks[j]`` lists the colours of chunk j ascending; ``rank`` is each
    colour's position when the chunks are laid end to end."""

    chunks: list
    chunk_of: np.ndarray
    size: int
    rank: np.ndarray

    @property
    def tau(self) -> int:
        return len(self.chunks)

    def rank_range(self, j: int) -> tuple[int, int]:
        return j * self.size, min((j + 1) * self.size, len(self.chunk_of))


def plan_chunks(n: int, eps: float, rng) -> ChunkPlan:
    """Random permutation of the colours cut into ⌈n/εn⌉ chunks; the last may be short."""
    if not 0 < eps <= 1:
        raise BadEpsilon(f"epsilon {eps} outside (0, 1]")
    if n == 0:
        return ChunkPlan([], np.zeros(0, np.int64), 0, np.zeros(0, np.int64))
    k = round(eps * n)
    if abs(eps * n - k) > 1e-9 or k < 1:
        raise BadEpsilon(f"epsilon*n = {eps * n} is not a positive integer")
    perm = rng.permutation(n)
    chunks = [np.sort(perm[s:s + k]) for s in range(0, n, k)]
    chunk_of = np.empty(n, dtype=np.int64)
    for j, ch in enumerate(chunks):
        chunk_of[ch] = j
    rank = np.empty(n, dtype=np.int64)
    rank[np.concatenate(chunks)] = np.arange(n)
    return ChunkPlan(chunks, chunk_of, k, rank)


# -- probabilities -----------------------------------------------------------


def marking_probability_from(degrees, edge_counts) -> float:
    """1 - Π (1 - deg_v^c / e^c) over the chunk colours."""
    degrees = np.asarray(degrees, dtype=float)
    edge_counts = np.asarray(edge_counts, dtype=float)
    if (edge_counts <= 0).any():
        c = int(np.flatnonzero(edge_counts <= 0)[0])
        raise EmptyColourClass(c)
    return float(1.0 - np.prod(1.0 - degrees / edge_counts))


def zap_probability(P: float, p: float, tol: float = 1e-12) -> float:
    """Q with P + Q(1 - P) = p; raises AlgorithmBroke when Q falls outside [0, 1]."""
    if p > 1 + tol or P > p + tol:
        raise AlgorithmBroke("QOutOfRange", detail=f"P={P}, p={p}")
    if P >= 1:
        if p < 1 - tol:
            raise AlgorithmBroke("QOutOfRange", detail=f"P=1 but p={p}")
        return 0.0
    return float(min(1.0, max(0.0, (p - P) / (1 - P))))


def zap_probabilities(P: np.ndarray, p: float, alive: np.ndarray, tol: float = 1e-12,
                      iteration: int | None = None) -> np.ndarray:
    """Vectorized :func:`zap_probability` over live vertices (dead ones get 0)."""
    if p > 1 + tol:
        raise AlgorithmBroke("QOutOfRange", iteration, f"p={p} > 1")
    bad = alive & ((P > p + tol) | ((P >= 1) & (p < 1 - tol)))
    if bad.any():
        v = int(np.flatnonzero(bad)[0])
        raise AlgorithmBroke("QOutOfRange", iteration, f"vertex {v}: P={P[v]}, p={p}")
    with np.errstate(divide="ignore", invalid="ignore"):
        Q = np.where(P < 1, (p - P) / (1 - P), 0.0)
    Q = np.clip(Q, 0.0, 1.0)
    Q[~alive] = 0.0
    return Q


# -- state -------------------------------------------------------------------


@dataclass
class NibbleState:
    """Mutable run state after ``i`` completed iterations.

    Component rows are ordered by chunk, then colour, so chunk j is one
    contiguous block and processed chunks form a prefix that is cut off.
    """

    n: int
    n_vertices: int
    eps: float
    sigma1: float
    sigma2: float
    plan: ChunkPlan
    alive: np.ndarray
    comp_colour: np.ndarray
    comp_verts: np.ndarray
    comp_size: np.ndarray
    e_initial: np.ndarray
    e_now: np.ndarray
    chunk_max_degree: np.ndarray
    matching: dict = field(default_factory=dict)
    i: int = 0
    e_dev: float = 0.0
    d_dev: float = 0.0

    @property
    def gamma(self) -> float:
        return self.sigma1 / self.sigma2

    @property
    def tau(self) -> int:
        return self.plan.tau

    def rank_ptr(self) -> np.ndarray:
        """Row boundaries by colour rank: colour c owns rows ptr[rank[c]]:ptr[rank[c] + 1]."""
        return np.searchsorted(self.plan.rank[self.comp_colour], np.arange(self.n + 1))

    def copy(self) -> "NibbleState":
        return dataclasses.replace(
            self, alive=self.alive.copy(), comp_colour=self.comp_colour.copy(),
            comp_verts=self.comp_verts.copy(), comp_size=self.comp_size.copy(), e_now=self.e_now.copy(),
            chunk_max_degree=self.chunk_max_degree.copy(), matching=dict(self.matching),
        )

    def live_graph(self) -> ColouredMultigraph:
        """Unprocessed colour classes as a graph (for audits and tests)."""
        rows = self.comp_verts
        mask = rows != self.n_vertices
        return from_arrays(self.n, self.comp_colour, self.comp_size, rows[mask],
                           n_vertices=self.n_vertices, validate=False)


def init_state(g: ColouredMultigraph, cfg: NibbleConfig, rng) -> NibbleState:
    if not g.is_normalized():
        raise NotNormalized("the nibble needs cliques of size 2 or 3; normalize first")
    n, V = g.n_colours, g.n_vertices
    eps, _ = cfg.chunk_size(n)
    plan = plan_chunks(n, eps, rng)
    sizes = g.clique_sizes
    comp = np.full((g.n_cliques, 3), V, dtype=np.int32)
    comp[np.arange(3) < sizes[:, None]] = g.members
    order = np.argsort(plan.rank[g.clique_colour], kind="stable") if n else np.zeros(0, np.int64)
    comp, sizes, colour = comp[order], sizes[order], g.clique_colour[order]
    alive = np.ones(V + 1, dtype=bool)
    alive[V] = False
    e0 = g.class_edges.astype(np.int64)
    state = NibbleState(
        n=n, n_vertices=V, eps=eps, sigma1=cfg.sigma1, sigma2=cfg.sigma2, plan=plan,
        alive=alive, comp_colour=colour.astype(np.int32), comp_verts=comp,
        comp_size=sizes.astype(np.int8),
        e_initial=e0, e_now=e0.copy(), chunk_max_degree=np.zeros(plan.tau, np.int64),
    )
    _refresh_counts(state)
    return state


def _tri(s: np.ndarray) -> np.ndarray:
    return s * (s - 1) // 2


def _row_count(mask: np.ndarray) -> np.ndarray:
    """Row sums of a (K, 3) boolean array; column adds beat sum(axis=1) here."""
    return mask[:, 0].astype(np.int8) + mask[:, 1] + mask[:, 2]


def _refresh_counts(state: NibbleState) -> None:
    """Recompute e^c, per-chunk maximum degrees and the deviations e_i, d_i."""
    n, V, tau = state.n, state.n_vertices, state.tau
    # sizes are 2 or 3: a K2 adds one edge and degree 1, a K3 three edges and degree 2
    tri = state.comp_size == 3
    colour = state.comp_colour
    state.e_now = (np.bincount(colour, minlength=n)
                   + 2 * np.bincount(colour[tri], minlength=n)).astype(np.int64)
    if tau:
        ptr = state.rank_ptr()
        cmax = np.zeros(tau, dtype=np.int64)
        for j in range(state.i, tau):
            lo, hi = state.plan.rank_range(j)
            blk = slice(ptr[lo], ptr[hi])
            rows, t = state.comp_verts[blk], tri[blk]
            deg = np.zeros(V + 1, dtype=np.int64)
            for a in range(3):
                deg += np.bincount(rows[:, a], minlength=V + 1)
                deg += np.bincount(rows[t, a], minlength=V + 1)
            cmax[j] = deg[:V].max() if V else 0
        state.chunk_max_degree = cmax
    x = state.i * state.eps
    open_colours = np.flatnonzero(state.plan.chunk_of >= state.i) if tau else np.zeros(0, np.int64)
    state.e_dev = edge_deviation(state.e_initial, state.e_now, state.gamma, x, open_colours)
    state.d_dev = degree_deviation(state.chunk_max_degree, state.i, n, state.eps,
                                   state.sigma1, state.gamma, x)


def step_probability(i: int, state: NibbleState, cfg: NibbleConfig | None = None) -> tuple[float, float]:
    """(p_i, c_i) from the state's current deviations."""
    sigma2 = state.sigma2 if cfg is None else cfg.sigma2
    gamma = state.gamma if cfg is None else cfg.gamma
    return step_probability_from(i, state.eps, gamma, sigma2, state.n, state.e_dev, state.d_dev)


@dataclass
class ChunkView:
    """Components of the colours in the chunk processed next."""

    colours: np.ndarray
    rows: np.ndarray
    verts: np.ndarray
    sizes: np.ndarray
    row_colour: np.ndarray
    edge_counts: np.ndarray


def chunk_view(state: NibbleState, j: int | None = None) -> ChunkView:
    j = state.i if j is None else j
    cols = state.plan.chunks[j]
    ptr = state.rank_ptr()
    lo, hi = state.plan.rank_range(j)
    rows = np.arange(ptr[lo], ptr[hi], dtype=np.int64)
    verts = state.comp_verts[rows]
    sizes = state.comp_size[rows].astype(np.int64)
    e = np.bincount(state.comp_colour[rows], weights=_tri(sizes), minlength=state.n)[cols].astype(np.int64)
    return ChunkView(cols, rows, verts, sizes, state.comp_colour[rows].astype(np.int64), e)


def marking_probabilities(state: NibbleState, view: ChunkView, iteration: int | None = None) -> np.ndarray:
    """P(v) for every vertex (index V is the sentinel) under one uniform edge per chunk colour."""
    empty = np.flatnonzero(view.edge_counts == 0)
    if len(empty):
        raise EmptyColourClass(int(view.colours[empty[0]]), iteration)
    V = state.n_vertices
    e_of = np.zeros(state.n, dtype=float)
    e_of[view.colours] = view.edge_counts
    x = (view.sizes - 1) / e_of[view.row_colour]
    logq = np.zeros(V + 1)
    with np.errstate(divide="ignore"):
        w = np.log1p(-x)
    for a in range(3):
        col = view.verts[:, a]
        logq += np.bincount(col, weights=w, minlength=V + 1)
    P = -np.expm1(logq)
    P[V] = 0.0
    return P


def marking_probability(state: NibbleState, v: int, chunk: int | None = None) -> float:
    """P_i(v) for one vertex and one chunk (default: the next one)."""
    return float(marking_probabilities(state, chunk_view(state, chunk))[v])


def choose_edges(view: ChunkView, rng, trials: int | None = None):
    """One uniform edge per chunk colour; with ``trials`` an extra leading axis."""
    w = _tri(view.sizes)
    cum = np.cumsum(w)
    start = np.concatenate([[0], np.cumsum(view.edge_counts)[:-1]])
    shape = (len(view.colours),) if trials is None else (trials, len(view.colours))
    r = rng.integers(0, np.maximum(view.edge_counts, 1), size=shape)
    target = start + r
    pos = np.searchsorted(cum, target, side="right")
    local = target - (cum[pos] - w[pos])
    u = view.verts[pos, _EDGE_A[local]]
    v = view.verts[pos, _EDGE_B[local]]
    return u, v


def greedy_on_state(state: NibbleState, colours, ptr: np.ndarray | None = None,
                    iteration: int | None = None, reason: str = "PhiGreedyStuck") -> None:
    """Give each colour its smallest live edge (ascending colour order) and kill its ends."""
    ptr = state.rank_ptr() if ptr is None else ptr
    rank = state.plan.rank
    big = np.iinfo(np.int32).max
    alive = state.alive
    for c in sorted(int(c) for c in colours):
        rows = state.comp_verts[ptr[rank[c]]:ptr[rank[c] + 1]]
        live = alive[rows]
        first = np.where(live, rows, big).min(axis=1) if len(rows) else np.zeros(0)
        first = np.where(live.sum(axis=1) >= 2, first, big) if len(rows) else first
        if len(first) == 0 or first.min() == big:
            raise AlgorithmBroke(reason, iteration, f"colour {c} has no live edge")
        r = int(np.argmin(first))
        u, v = rows[r][live[r]][:2]
        state.matching[c] = (int(u), int(v))
        alive[u] = alive[v] = False


# -- iterations --------------------------------------------------------------


@dataclass
class IterationRecord:
    """Iteration ``i + 1``, run with p_i; deviations are before and after it."""

    i: int
    p: float
    c: float
    phi: int
    chosen: int
    killed: int
    marked: int
    zapped: int
    e_dev_prev: float
    d_dev_prev: float
    e_dev: float
    d_dev: float
    edge_counts: np.ndarray
    chunk_max_degree: np.ndarray
    phi_colours: np.ndarray | None = None
    a_prev: np.ndarray | None = None
    b_prev: np.ndarray | None = None
    L: np.ndarray | None = None
    T1: np.ndarray | None = None
    T2: np.ndarray | None = None
    e_mid: np.ndarray | None = None


def run_iteration(state: NibbleState, cfg: NibbleConfig, rng) -> IterationRecord:
    """Process chunk ``state.i`` in place and return its record."""
    i, V, n = state.i, state.n_vertices, state.n
    if not 0 <= i < state.tau - 1:
        raise ValueError(f"iteration index {i} outside [0, tau - 1)")
    p, c = step_probability(i, state, cfg)
    view = chunk_view(state, i)
    P = marking_probabilities(state, view, iteration=i + 1)
    try:
        Q = zap_probabilities(P, p, state.alive, cfg.q_tol, iteration=i + 1)
    except AlgorithmBroke as err:
        err.iteration = i + 1
        raise
    Z = rng.random(V + 1) < Q

    # Step 1: choose; Step 2: kill edges that meet no other chosen edge
    u, v = choose_edges(view, rng)
    ends = np.concatenate([u, v])
    hits = np.bincount(ends, minlength=V + 1)
    collide = (hits[u] > 1) | (hits[v] > 1)
    for col, a, b in zip(view.colours[~collide], u[~collide], v[~collide]):
        state.matching[int(col)] = (int(a), int(b))
    state.alive[u[~collide]] = False
    state.alive[v[~collide]] = False
    marked = np.zeros(V + 1, dtype=bool)
    marked[ends] = True

    # Step 3: zap
    zap = Z & state.alive
    state.alive[zap] = False

    rec = IterationRecord(
        i=i, p=p, c=c, phi=int(collide.sum()), chosen=len(view.colours),
        killed=int((~collide).sum()), marked=int(marked.sum()), zapped=int(zap.sum()),
        e_dev_prev=state.e_dev, d_dev_prev=state.d_dev, e_dev=0.0, d_dev=0.0,
        edge_counts=np.zeros(0, np.int64), chunk_max_degree=np.zeros(0, np.int64),
        phi_colours=view.colours[collide].copy(),
    )
    if cfg.record_stats:
        _component_stats(state, rec, marked | Z)

    # Step 4: greedy on the colliding colours
    greedy_on_state(state, view.colours[collide], iteration=i + 1)

    _compact(state, view)
    state.i += 1
    _refresh_counts(state)
    rec.e_dev, rec.d_dev = state.e_dev, state.d_dev
    rec.edge_counts = state.e_now.copy()
    rec.chunk_max_degree = state.chunk_max_degree.copy()
    return rec


def _component_stats(state: NibbleState, rec: IterationRecord, condemned: np.ndarray) -> None:
    """Hit counts per colour: K2's with a condemned vertex, K3's with >= 1 and >= 2."""
    V, n = state.n_vertices, state.n
    rows = state.comp_verts
    size = state.comp_size
    hit = _row_count(condemned[rows])
    col = state.comp_colour
    rec.a_prev = np.bincount(col, weights=size == 3, minlength=n).astype(np.int64)
    rec.b_prev = np.bincount(col, weights=size == 2, minlength=n).astype(np.int64)
    rec.L = np.bincount(col, weights=(size == 2) & (hit >= 1), minlength=n).astype(np.int64)
    rec.T1 = np.bincount(col, weights=(size == 3) & (hit >= 1), minlength=n).astype(np.int64)
    rec.T2 = np.bincount(col, weights=(size == 3) & (hit >= 2), minlength=n).astype(np.int64)
    live = _row_count(state.alive[rows]).astype(np.int64)
    rec.e_mid = np.bincount(col, weights=_tri(live), minlength=n).astype(np.int64)


def _compact(state: NibbleState, view: ChunkView) -> None:
    """Drop processed colours and dead vertices; re-sort rows that lost a vertex."""
    V = state.n_vertices
    keep = np.ones(len(state.comp_colour), dtype=bool)
    keep[view.rows] = False
    rows = state.comp_verts
    live = state.alive[rows]
    size = _row_count(live)
    lost = size < state.comp_size
    keep &= size >= 2
    fix = np.flatnonzero(lost & keep)
    if len(fix):
        sub = rows[fix]
        sub[~live[fix]] = V
        rows[fix] = np.sort(sub, axis=1)
    state.comp_verts = rows[keep]
    state.comp_colour = state.comp_colour[keep]
    state.comp_size = size[keep]


# -- driver ------------------------------------------------------------------


@dataclass
class NibbleTrace:
    records: list
    n: int
    n_vertices: int
    eps: float
    chunk: int
    tau: int
    sigma1: float
    sigma2: float
    seed: int
    chunk_of: np.ndarray
    e_initial: np.ndarray
    chunk_max_degree0: np.ndarray
    e_dev0: float
    d_dev0: float
    config: NibbleConfig | None = None
    stats: InstanceStats | None = None
    attempts: int = 1
    final_min_edges: int | None = None
    final_bound_ok: bool | None = None
    reduction_attempts: int | None = None

    @property
    def gamma(self) -> float:
        return self.sigma1 / self.sigma2


def _attempt(g: ColouredMultigraph, cfg: NibbleConfig, seed: int, stats):
    rng = np.random.default_rng(seed)
    state = init_state(g, cfg, rng)
    trace = NibbleTrace(
        records=[], n=state.n, n_vertices=state.n_vertices, eps=state.eps,
        chunk=state.plan.size, tau=state.tau, sigma1=cfg.sigma1, sigma2=cfg.sigma2, seed=seed,
        chunk_of=state.plan.chunk_of.copy(), e_initial=state.e_initial.copy(),
        chunk_max_degree0=state.chunk_max_degree.copy(), e_dev0=state.e_dev,
        d_dev0=state.d_dev, config=cfg, stats=stats,
    )
    try:
        while state.i < state.tau - 1:
            trace.records.append(run_iteration(state, cfg, rng))
        if state.tau:
            last = state.plan.chunks[-1]
            e_last = state.e_now[last]
            trace.final_min_edges = int(e_last.min()) if len(last) else None
            trace.final_bound_ok = bool(len(last) == 0 or e_last.min() >= 4 * len(last))
            if cfg.strict_final_check and not trace.final_bound_ok:
                raise AlgorithmBroke("FinalGreedyStuck", state.tau,
                                     f"min e^c = {int(e_last.min())} < 4|C_tau| = {4 * len(last)}")
            greedy_on_state(state, last, iteration=state.tau, reason="FinalGreedyStuck")
    except AlgorithmBroke as err:
        return state, trace, err
    return state, trace, None


def run_nibble(g: ColouredMultigraph, cfg: NibbleConfig) -> tuple[SolveOutcome, NibbleTrace]:
    """Run the nibble, retrying a broken run with seed + attempt up to ``max_retries`` times."""
    stats = instance_stats(g, multiplicity=False)
    err = None
    for attempt in range(cfg.max_retries + 1):
        state, trace, err = _attempt(g, cfg, cfg.seed + attempt, stats)
        trace.attempts = attempt + 1
        m = RainbowMatching(state.matching)
        if err is None:
            verdict = verify_matching(g, m, require_full=True)
            if not verdict:
                raise AssertionError(f"nibble produced an invalid matching: {verdict.violations[:3]}")
            return SolveOutcome(Status.FOUND, m, len(m), attempts=attempt + 1), trace
    return SolveOutcome(Status.BROKE, m, len(m), reason=err.reason, iteration=err.iteration,
                        attempts=cfg.max_retries + 1), trace


# -- reduction from general cliques ------------------------------------------


def reduce_theorem1(g: ColouredMultigraph, rng, return_outcomes: bool = False):
    """Thin each K3: keep it with probability 1/4, else keep one of its edges (1/4 each).

    Outcome codes per triangle (in clique order): 0 kept, 1 edge (v0, v1),
    2 edge (v0, v2), 3 edge (v1, v2). K2's pass through.
    """
    if not g.is_normalized():
        raise NotNormalized("reduce_theorem1 needs cliques of size 2 or 3")
    sizes = g.clique_sizes
    tri = np.flatnonzero(sizes == 3)
    outcome = rng.integers(0, 4, size=len(tri))
    starts = g.clique_ptr[:-1]
    new_sizes = sizes.copy()
    new_sizes[tri[outcome > 0]] = 2
    keep = np.ones(len(g.members), dtype=bool)
    drop_offset = np.array([0, 2, 1, 0])  # vertex left out by each single-edge outcome
    cut = tri[outcome > 0]
    keep[starts[cut] + drop_offset[outcome[outcome > 0]]] = False
    h = from_arrays(g.n_colours, g.clique_colour, new_sizes, g.members[keep],
                    n_vertices=g.n_vertices, validate=False)
    return (h, outcome) if return_outcomes else h


def theorem1_sigmas(delta: float) -> tuple[float, float]:
    return 1 + delta / 8, 1 + delta / 4


def audit_reduction(h: ColouredMultigraph, delta: float, n: int | None = None) -> bool:
    """e_c(H) >= (1 + δ/4) n for every colour and d_v(H) <= (1 + δ/8) n for every vertex."""
    n = h.n_colours if n is None else n
    s1, s2 = theorem1_sigmas(delta)
    if n == 0:
        return True
    st = instance_stats(h, multiplicity=False)
    return bool(st.e_c.min() >= s2 * n - 1e-9 and (len(st.d_v) == 0 or st.d_v.max() <= s1 * n + 1e-9))


def check_theorem1_hypotheses(g: ColouredMultigraph, delta: float) -> None:
    n = g.n_colours
    target = ceil_tol((2 + delta) * n)
    short = np.flatnonzero(g.class_sizes < target)
    if len(short):
        c = int(short[0])
        raise HypothesisViolation(f"colour {c} spans {int(g.class_sizes[c])} < {target} vertices")
    cap = multiplicity_cap(n)
    if n and g.max_multiplicity() > cap:
        raise HypothesisViolation(f"edge multiplicity {g.max_multiplicity()} exceeds {cap}")


def solve_theorem1(g: ColouredMultigraph, delta: float, cfg: NibbleConfig,
                   reduction_retries: int = 3) -> tuple[SolveOutcome, NibbleTrace | None]:
    """Normalize, thin triangles until the audit passes, then run the nibble on the result.

    The nibble runs with σ1 = 1 + δ/8 and σ2 = 1 + δ/4. Every edge of the
    reduced graph is an edge of ``g``, so its matching is returned unchanged.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    check_theorem1_hypotheses(g, delta)
    base = normalize_cliques(g, delta)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1,)))
    for attempt in range(reduction_retries + 1):
        h = reduce_theorem1(base, rng)
        if audit_reduction(h, delta):
            break
    else:
        raise ReductionAuditFailed(f"reduced graph failed the audit {reduction_retries + 1} times")
    del base
    s1, s2 = theorem1_sigmas(delta)
    out, trace = run_nibble(h, dataclasses.replace(cfg, sigma1=s1, sigma2=s2))
    trace.reduction_attempts = attempt + 1
    if out.found and not verify_matching(g, out.matching, require_full=True):
        raise AssertionError("matching of the reduced graph is not a matching of the input")
    return out, trace


__all__ = [
    "AlgorithmBroke", "BadEpsilon", "ChunkPlan", "ChunkView", "EmptyColourClass", "GraphError",
    "HypothesisViolation", "IterationRecord", "NibbleConfig", "NibbleState", "NibbleTrace",
    "NotNormalized", "ReductionAuditFailed", "audit_reduction", "check_theorem1_hypotheses",
    "choose_edges", "chunk_view", "default_epsilon", "greedy_on_state", "init_state",
    "marking_probabilities", "marking_probability", "marking_probability_from", "plan_chunks",
    "reduce_theorem1", "run_iteration", "run_nibble", "solve_theorem1", "step_probability",
    "theorem1_sigmas", "zap_probabilities", "zap_probability",
]
