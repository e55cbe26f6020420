import numpy as np
import pytest

from brute import max_rainbow_dp
from rainbowmatch.baseline import solve_exact_max
from rainbowmatch.generators import (
    GeneratorSpec, InfeasibleSpec, gen_disjoint_stars, gen_k4_pair, gen_latin_addition,
    gen_random_cliques, gen_random_instance, gen_triangle_blowup, generate,
)
from rainbowmatch.graph import ceil_tol, instance_stats, multiplicity_cap, verify_matching


def classes_of(g):
    return [[c.vertices for c in g.cliques(col)] for col in range(g.n_colours)]


def test_stars_n3():
    g = gen_disjoint_stars(3)
    assert g.n_colours == 3
    assert all(len(g.cliques(c)) == 2 for c in range(3))
    assert (g.class_sizes == 4).all()
    assert all(cl.size == 2 for cl in g.cliques())


def test_stars_n2_and_n5():
    assert solve_exact_max(gen_disjoint_stars(2)).max_size == 1
    g = gen_disjoint_stars(5)
    assert solve_exact_max(g).max_size == 4
    assert max_rainbow_dp(classes_of(g)) == 4


def test_stars_structure():
    n = 4
    g = gen_disjoint_stars(n)
    s = instance_stats(g)
    centres = np.flatnonzero(s.cd_v == n)
    assert len(centres) == n - 1
    # each leaf carries exactly one edge
    assert (np.sort(s.cd_v)[: n * (n - 1)] == 1).all()


def test_triangle_blowup():
    g = gen_triangle_blowup(4)
    assert (g.class_sizes == 9).all()
    assert solve_exact_max(g).max_size == 3
    assert solve_exact_max(gen_triangle_blowup(2)).max_size == 1
    g5 = gen_triangle_blowup(5)
    assert solve_exact_max(g5).max_size == 4 == max_rainbow_dp(classes_of(g5))
    assert g5.max_multiplicity() == 5


def test_k4_pair():
    g = gen_k4_pair()
    assert g.n_colours == 3 and g.n_vertices == 8
    assert (g.class_sizes == 8).all()
    assert all(len(g.cliques(c)) == 4 for c in range(3))
    assert solve_exact_max(g).max_size == 2 == max_rainbow_dp(classes_of(g))
    # each colour is a perfect matching of each K4 and the three partition its 12 edges
    edges = sorted((u, v) for c in range(3) for u, v, _ in g.edges(c))
    assert len(edges) == len(set(edges)) == 12
    for u, v, _ in g.edges(0):
        assert verify_matching(g, {0: (u, v)})


@pytest.mark.parametrize("k,full", [(1, True), (2, False), (3, True), (4, False), (5, True)])
def test_latin_addition(k, full):
    g = gen_latin_addition(k)
    assert g.n_colours == k and g.n_vertices == 2 * k
    assert all(len(g.cliques(c)) == k for c in range(k))
    out = solve_exact_max(g)
    assert out.found == full
    assert out.max_size == (k if full else k - 1)


def test_latin_addition_colouring():
    k = 4
    g = gen_latin_addition(k)
    for c in range(k):
        for u, v, _ in g.edges(c):
            i, j = u, v - k
            assert (i + j) % k == c


def test_thm2_small_audit():
    spec = GeneratorSpec("random_thm2", 100, sigma1=0.5, sigma2=1.0, seed=7)
    g = gen_random_instance(spec)
    s = instance_stats(g)
    assert g.is_normalized()
    assert s.e_c.min() >= 100
    assert s.d_v.max() <= 50
    assert s.n_c.max() <= 400
    assert s.max_multiplicity <= max(1, multiplicity_cap(100)) == 1


def test_thm1_small():
    g = gen_random_instance(GeneratorSpec("random_thm1", 10, delta=0.5, seed=3))
    assert (g.class_sizes >= 25).all()
    assert g.max_multiplicity() <= multiplicity_cap(10)


@pytest.mark.parametrize("spec", [
    GeneratorSpec("random_thm2", 60, sigma1=0.4, sigma2=1.2, seed=11),
    GeneratorSpec("random_thm1", 40, delta=0.3, seed=5),
])
def test_random_determinism(spec):
    assert generate(spec) == generate(spec)


def test_random_seeds_differ():
    a = generate(GeneratorSpec("random_thm2", 60, sigma1=0.5, sigma2=1.0, seed=1))
    b = generate(GeneratorSpec("random_thm2", 60, sigma1=0.5, sigma2=1.0, seed=2))
    assert a != b


@pytest.mark.parametrize("n,delta", [(20, 0.2), (50, 0.5), (30, 1.0)])
def test_thm1_hypotheses_hold(n, delta):
    g = generate(GeneratorSpec("random_thm1", n, delta=delta, seed=n))
    assert (g.class_sizes >= ceil_tol((2 + delta) * n)).all()
    assert g.max_multiplicity() <= multiplicity_cap(n)


def test_infeasible_specs():
    with pytest.raises(InfeasibleSpec):
        GeneratorSpec("random_thm2", 10, sigma1=1.0, sigma2=0.5)
    with pytest.raises(InfeasibleSpec):
        GeneratorSpec("random_thm2", 10, sigma1=1.0, sigma2=5.0)
    with pytest.raises(InfeasibleSpec):
        GeneratorSpec("random_thm1", 10)
    with pytest.raises(InfeasibleSpec):
        GeneratorSpec("nonsense", 10)


def test_random_cliques_valid():
    rng = np.random.default_rng(0)
    for _ in range(50):
        g = gen_random_cliques(int(rng.integers(1, 6)), int(rng.integers(2, 13)), rng)
        assert all(2 <= cl.size <= 4 for cl in g.cliques())


@pytest.mark.parametrize("family,n", [("stars", 6), ("triangle_blowup", 6), ("k4_pair", 0),
                                      ("latin_addition", 5)])
def test_generate_dispatch(family, n):
    g = generate(GeneratorSpec(family, n))
    assert g.n_colours == (3 if family == "k4_pair" else n)
