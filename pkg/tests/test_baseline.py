import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brute import max_rainbow_dp, max_rainbow_product, random_classes, to_instance
from rainbowmatch.baseline import (
    Status, greedy_bound_check, solve_exact_max, solve_greedy,
)
from rainbowmatch.generators import gen_disjoint_stars, gen_k4_pair, gen_latin_addition
from rainbowmatch.graph import Clique, build_instance, verify_matching


def four_n_instance(rng, n_colours, extra=0):
    """Random instance in which every class spans at least 4 * n_colours vertices."""
    V = 4 * n_colours + extra + int(rng.integers(0, 6))
    classes = []
    for _ in range(n_colours):
        verts = rng.permutation(V)[: int(rng.integers(4 * n_colours, V + 1))].tolist()
        cls = []
        while verts:
            t = int(rng.integers(2, 5))
            if len(verts) - t < 2:
                t = len(verts)
            cls.append(tuple(verts[:t]))
            verts = verts[t:]
        classes.append(cls)
    return to_instance(classes, n_vertices=V)


def test_exact_k4_pair():
    out = solve_exact_max(gen_k4_pair())
    assert out.max_size == 2 and out.exhaustive and out.status is Status.NOT_FOUND


def test_exact_latin4():
    out = solve_exact_max(gen_latin_addition(4))
    assert out.max_size == 3


def test_exact_empty():
    out = solve_exact_max(build_instance([], 0))
    assert out.status is Status.FOUND and len(out.matching) == 0


def test_exact_require_full():
    assert solve_exact_max(gen_latin_addition(3), require_full=True).found
    out = solve_exact_max(gen_latin_addition(4), require_full=True)
    assert out.status is Status.NOT_FOUND and out.exhaustive


def test_exact_budget():
    out = solve_exact_max(gen_latin_addition(6), budget=50)
    assert not out.exhaustive and out.reason == "BudgetExhausted"
    assert verify_matching(gen_latin_addition(6), out.matching)


def test_greedy_single_pair():
    out = solve_greedy(build_instance([Clique(0, [0, 1])], 1))
    assert out.found and out.max_size == 1


def test_greedy_stars_stuck_at_third():
    g = gen_disjoint_stars(3)
    for order in ([0, 1, 2], [2, 1, 0], [1, 2, 0]):
        out = solve_greedy(g, order)
        assert out.status is Status.NOT_FOUND
        assert out.stuck_colour == order[2]
        assert len(out.matching) == 2


def test_greedy_tie_break():
    g = build_instance([Clique(0, [5, 1, 9]), Clique(0, [2, 3])], 1)
    out = solve_greedy(g)
    assert out.matching.entries[0] == (1, 5)


def test_bound_check_examples():
    g = build_instance([Clique(0, range(8)), Clique(1, range(8))], 2)
    assert greedy_bound_check(g)
    g = build_instance([Clique(0, range(12)), Clique(1, range(12)), Clique(2, range(11))], 3)
    assert not greedy_bound_check(g)
    assert greedy_bound_check(g, [0, 1])


def test_bound_check_edges():
    g = build_instance([Clique(0, [0, 1, 2]), Clique(0, [3, 4, 5]), Clique(0, [6, 7])], 1)
    assert greedy_bound_check(g, use_edges=True)  # 7 >= 4
    assert greedy_bound_check(g, [0], use_edges=True)


@pytest.mark.parametrize("seed", range(200))
def test_bound_implies_greedy(seed):
    rng = np.random.default_rng(seed)
    g = four_n_instance(rng, int(rng.integers(1, 12)))
    assert greedy_bound_check(g)
    for _ in range(3):
        out = solve_greedy(g, rng.permutation(g.n_colours).tolist())
        assert out.found
        assert verify_matching(g, out.matching, require_full=True)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=300, deadline=None)
def test_exact_matches_product_oracle(seed):
    rng = np.random.default_rng(seed)
    classes = random_classes(rng, int(rng.integers(0, 4)), int(rng.integers(2, 7)))
    g = to_instance(classes, n_vertices=max(2, max((v + 1 for c in classes for cl in c for v in cl), default=2)))
    out = solve_exact_max(g)
    assert out.exhaustive
    assert out.max_size == max_rainbow_product(classes) == max_rainbow_dp(classes)
    assert verify_matching(g, out.matching)
    assert out.found == (out.max_size == g.n_colours)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_exact_colour_relabel_invariant(seed):
    rng = np.random.default_rng(seed)
    C = int(rng.integers(1, 6))
    classes = random_classes(rng, C, int(rng.integers(2, 11)))
    perm = rng.permutation(C)
    shuffled = [classes[k] for k in perm]
    V = 11
    assert solve_exact_max(to_instance(classes, V)).max_size == \
        solve_exact_max(to_instance(shuffled, V)).max_size


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_greedy_output_always_valid(seed):
    rng = np.random.default_rng(seed)
    C = int(rng.integers(0, 8))
    g = to_instance(random_classes(rng, C, int(rng.integers(2, 15))), 15)
    out = solve_greedy(g, rng.permutation(C).tolist())
    assert verify_matching(g, out.matching)
    assert out.found == (len(out.matching) == C)
