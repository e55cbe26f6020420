import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brute import brute_multiplicity, random_classes, set_partitions, to_instance
from rainbowmatch.generators import gen_triangle_blowup
from rainbowmatch.graph import (
    BadColourIndex, ClassTooSmall, Clique, ColouredMultigraph, MissingColour, NotAnEdge,
    OverlappingCliques, RainbowMatching, RepeatedVertex, SharedVertex, TrivialClique,
    UnknownColour, build_instance, ceil_tol, from_arrays, instance_stats, multiplicity_cap,
    normalize_cliques, remove_vertices, split_sizes, verify_matching,
)


def g_of(spec, n_colours=None, n_vertices=None):
    cl = [Clique(c, vs) for c, vs in spec]
    n_colours = n_colours if n_colours is not None else (max((c for c, _ in spec), default=-1) + 1)
    return build_instance(cl, n_colours, n_vertices=n_vertices)


@st.composite
def instances(draw, max_colours=5, max_vertices=10):
    seed = draw(st.integers(0, 2**32 - 1))
    C = draw(st.integers(0, max_colours))
    V = draw(st.integers(2, max_vertices))
    classes = random_classes(np.random.default_rng(seed), C, V)
    return classes, to_instance(classes, n_vertices=V)


# -- build_instance ----------------------------------------------------------


def test_empty_graph():
    g = build_instance([], 0)
    assert g.n_colours == 0 and g.n_cliques == 0


def test_overlapping_cliques_rejected():
    with pytest.raises(OverlappingCliques) as exc:
        g_of([(0, [0, 1, 2]), (0, [2, 3])])
    assert (exc.value.colour, exc.value.vertex) == (0, 2)


def test_multiplicity_counts_colours():
    g = g_of([(0, [0, 1, 2]), (1, [0, 1])])
    assert g.multiplicity(0, 1) == 2
    assert g.multiplicity(1, 2) == 1
    assert g.multiplicity(0, 3) == 0


def test_trivial_clique_rejected():
    with pytest.raises(TrivialClique):
        g_of([(0, [4])])


def test_bad_colour_rejected():
    with pytest.raises(BadColourIndex):
        build_instance([Clique(3, [0, 1])], 2)


def test_repeated_vertex_rejected():
    with pytest.raises(RepeatedVertex):
        build_instance([Clique(0, [1, 1, 2])], 1)


def test_same_vertices_in_two_colours_is_fine():
    g = g_of([(0, [0, 1]), (1, [0, 1]), (2, [1, 0])])
    assert g.multiplicity(0, 1) == 3
    assert g.max_multiplicity() == 3


def test_from_arrays_regroups_by_colour():
    g = from_arrays(2, [1, 0, 1], [2, 3, 2], [5, 4, 2, 1, 0, 7, 6])
    assert [c.colour for c in g.cliques()] == [0, 1, 1]
    assert g.cliques(0)[0].vertices == (0, 1, 2)
    assert g.n_vertices == 8


# -- normalize ---------------------------------------------------------------


@pytest.mark.parametrize("t,parts", [(2, [2]), (3, [3]), (4, [2, 2]), (5, [3, 2]), (6, [3, 3]),
                                     (7, [3, 2, 2]), (8, [3, 3, 2]), (9, [3, 3, 3])])
def test_split_sizes(t, parts):
    assert sorted(split_sizes(t), reverse=True) == parts


def test_split_rule_maximizes_edges():
    # among all partitions of t into parts of size 2 and 3, the rule keeps the most edges
    for t in range(2, 10):
        best = max(
            3 * a + b
            for a in range(t // 3 + 1)
            for b in range(t // 2 + 1)
            if 3 * a + 2 * b == t
        )
        parts = split_sizes(t)
        assert sum(parts) == t
        assert sum(p * (p - 1) // 2 for p in parts) == best


def test_normalize_k5():
    g = g_of([(0, list(range(5)))])
    h = normalize_cliques(g, 0.5, n=2)  # target 5: nothing is trimmed
    assert sorted(c.size for c in h.cliques()) == [2, 3]


def test_normalize_k4_and_k6():
    h = normalize_cliques(g_of([(0, [0, 1, 2, 3])]), 2.0, n=1)
    assert [c.size for c in h.cliques()] == [2, 2]
    h = normalize_cliques(g_of([(0, list(range(6)))]), 1.0, n=2)
    assert [c.size for c in h.cliques()] == [3, 3]


def test_normalize_class_too_small():
    g = g_of([(0, [0, 1, 2]), (1, list(range(10)))])
    with pytest.raises(ClassTooSmall) as exc:
        normalize_cliques(g, 0.5)  # needs ceil(2.5*2) = 5
    assert exc.value.colour == 0


def test_normalize_trims_to_target():
    # K5 with target 3: the K2 half is dropped
    h = normalize_cliques(g_of([(0, list(range(5)))]), 0.5, n=1)
    assert [c.size for c in h.cliques()] == [3]


def test_normalize_caps_class_size():
    n, delta = 3, 0.5
    target = ceil_tol((2 + delta) * n)  # 8
    g = g_of([(0, list(range(20))), (1, list(range(9))), (2, list(range(8)))])
    h = normalize_cliques(g, delta)
    assert h.is_normalized()
    for c in range(3):
        assert target <= h.class_sizes[c] <= target + 2


def test_ceil_tol_absorbs_float_noise():
    assert ceil_tol((2 + 0.1) * 10) == 21
    assert ceil_tol(2.5 * 10) == 25
    assert ceil_tol(25.2) == 26


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.1, 0.25, 0.5, 0.8]))
@settings(max_examples=60, deadline=None)
def test_normalize_bounds_property(seed, delta):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    target = ceil_tol((2 + delta) * n)
    V = target + 12
    cliques = []
    for c in range(n):
        verts = rng.permutation(V)[: rng.integers(target, V + 1)].tolist()
        while len(verts) >= 2:
            t = int(rng.integers(2, 8))
            t = len(verts) if len(verts) - t < 2 else t
            cliques.append(Clique(c, verts[:t]))
            verts = verts[t:]
    g = build_instance(cliques, n, n_vertices=V)
    if (g.class_sizes < target).any():
        with pytest.raises(ClassTooSmall):
            normalize_cliques(g, delta)
        return
    h = normalize_cliques(g, delta)
    assert h.is_normalized()
    assert ((h.class_sizes >= target) & (h.class_sizes <= target + 2)).all()
    # every surviving component lies inside an original clique of the same colour
    for cl in h.cliques():
        assert any(set(cl.vertices) <= set(o.vertices) for o in g.cliques(cl.colour))


# -- stats -------------------------------------------------------------------


def test_stats_single_triangle():
    s = instance_stats(g_of([(0, [0, 1, 2])]))
    assert (s.n_c[0], s.e_c[0], s.a_c[0], s.b_c[0]) == (3, 3, 1, 0)
    assert list(s.d_v) == [2, 2, 2]
    assert list(s.cd_v) == [1, 1, 1]


def test_stats_counts_identity():
    g = g_of([(0, [0, 1, 2]), (0, [3, 4, 5]), (0, [6, 7]), (0, [8, 9]), (0, [10, 11])])
    s = instance_stats(g)
    assert (s.a_c[0], s.b_c[0]) == (2, 3)
    assert s.n_c[0] == 12 == 3 * 2 + 2 * 3
    assert s.e_c[0] == 9 == 3 * 2 + 3


def test_triangle_blowup_multiplicity():
    g = gen_triangle_blowup(4)
    for t in range(3):
        for u, v in itertools.combinations(range(3 * t, 3 * t + 3), 2):
            assert g.multiplicity(u, v) == 4
    assert instance_stats(g).max_multiplicity == 4


@given(instances())
@settings(max_examples=150, deadline=None)
def test_stats_properties(inst):
    classes, g = inst
    s = instance_stats(g)
    V = g.n_vertices
    for c, cls in enumerate(classes):
        assert s.n_c[c] == sum(len(cl) for cl in cls)
        assert s.e_c[c] == sum(len(cl) * (len(cl) - 1) // 2 for cl in cls)
        deg = np.zeros(V, dtype=int)
        for cl in cls:
            deg[list(cl)] += len(cl) - 1
        assert deg.sum() == 2 * s.e_c[c]
    if g.is_normalized():
        assert (s.d_v == s.d_v_tr + s.d_v_line).all()
        assert (s.d_v_tr % 2 == 0).all()
        assert (s.cd_v == s.d_v_tr // 2 + s.d_v_line).all()
    for u, v in itertools.combinations(range(V), 2):
        assert g.multiplicity(u, v) == brute_multiplicity(classes, u, v)
    assert s.max_multiplicity == max(
        [brute_multiplicity(classes, u, v) for u, v in itertools.combinations(range(V), 2)] or [0])


def test_multiplicity_cap_values():
    assert multiplicity_cap(100) == 1
    assert multiplicity_cap(3000) == 1
    assert multiplicity_cap(10**8) == int(np.floor(1e4 / np.log(1e8) ** 2))


# -- verify_matching ---------------------------------------------------------


def test_verify_empty():
    g = g_of([(0, [0, 1])])
    assert verify_matching(g, RainbowMatching(), require_full=False)
    v = verify_matching(g, RainbowMatching(), require_full=True)
    assert not v and v.violations == [MissingColour(0)]


def test_verify_shared_vertex():
    g = g_of([(0, [3, 4]), (1, [3, 5])])
    v = verify_matching(g, {0: (3, 4), 1: (3, 5)})
    assert not v
    assert SharedVertex(3) in v.violations


def test_verify_not_an_edge_and_unknown_colour():
    g = g_of([(0, [0, 1]), (0, [2, 3])])
    v = verify_matching(g, {0: (1, 2)})
    assert v.violations == [NotAnEdge(0, 1, 2)]
    v = verify_matching(g, {5: (0, 1)})
    assert UnknownColour(5) in v.violations


@given(instances(max_colours=4, max_vertices=8), st.integers(0, 2**16))
@settings(max_examples=100, deadline=None)
def test_verify_sub_matching_closed(inst, seed):
    from brute import class_edges

    classes, g = inst
    rng = np.random.default_rng(seed)
    used, m = set(), {}
    for c, es in enumerate(class_edges(classes)):
        es = [e for e in es if not set(e) & used]
        if es:
            e = es[rng.integers(len(es))]
            m[c] = e
            used |= set(e)
    assert verify_matching(g, m)
    for r in range(len(m) + 1):
        for sub in itertools.combinations(sorted(m), r):
            assert verify_matching(g, {c: m[c] for c in sub})


# -- remove_vertices ---------------------------------------------------------


def test_remove_one_vertex_of_triangle():
    h = remove_vertices(g_of([(0, [0, 1, 2])]), [1])
    assert [c.vertices for c in h.cliques()] == [(0, 2)]


def test_remove_empty_is_identity():
    g = g_of([(0, [0, 1, 2]), (1, [1, 3])])
    assert remove_vertices(g, []) == g


def test_remove_whole_pair():
    g = g_of([(0, [0, 1]), (0, [2, 3])])
    h = remove_vertices(g, [0, 1])
    assert h.class_edges[0] == g.class_edges[0] - 1


@given(instances(), st.integers(0, 2**16))
@settings(max_examples=100, deadline=None)
def test_remove_idempotent_and_commutes(inst, seed):
    _, g = inst
    rng = np.random.default_rng(seed)
    V = g.n_vertices
    perm = rng.permutation(V)
    a, b = perm[: V // 3], perm[V // 3: 2 * V // 3]
    ga = remove_vertices(g, a)
    assert remove_vertices(ga, a) == ga
    assert remove_vertices(ga, b) == remove_vertices(remove_vertices(g, b), a)
    assert remove_vertices(g, np.concatenate([a, b])) == remove_vertices(ga, b)


def test_set_partition_counts():
    # Bell numbers; the oracle enumerator is only as good as this
    assert [sum(1 for _ in set_partitions(n)) for n in range(7)] == [1, 1, 2, 5, 15, 52, 203]


def test_graph_equality_and_repr():
    g = g_of([(0, [0, 1])])
    assert isinstance(g, ColouredMultigraph)
    assert g == g_of([(0, [1, 0])])
    assert "ColouredMultigraph" in repr(g)
