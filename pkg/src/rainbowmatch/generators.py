"""Instance families: extremal constructions, Latin addition tables, random samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Clique, ColouredMultigraph, build_instance, ceil_tol, from_arrays, multiplicity_cap

FAMILIES = ("stars", "triangle_blowup", "k4_pair", "latin_addition", "random_thm1", "random_thm2")


class InfeasibleSpec(ValueError):
    pass


class RetryExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters for one instance family.

    ``delta`` applies to ``random_thm1``, ``sigma1``/``sigma2`` to
    ``random_thm2``. ``degree_load`` is the target mean vertex degree as a
    fraction of the hard degree cap; the vertex pool is sized from it.
    ``max_multiplicity`` defaults to ⌊√n/log²n⌋ (at least 1).
    """

    family: str
    n: int
    delta: float | None = None
    sigma1: float | None = None
    sigma2: float | None = None
    seed: int = 0
    max_multiplicity: int | None = None
    degree_load: float = 0.6
    triangle_share: tuple[float, float] = (0.5, 1.0)
    clique_weights: dict = field(default_factory=lambda: {2: 0.4, 3: 0.35, 4: 0.15, 5: 0.1})
    max_rounds: int = 200

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InfeasibleSpec(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n < 0:
            raise InfeasibleSpec("n must be non-negative")
        if self.family == "random_thm1":
            if self.delta is None or self.delta <= 0:
                raise InfeasibleSpec("random_thm1 needs delta > 0")
            if self.n < 1:
                raise InfeasibleSpec("random_thm1 needs n >= 1")
        if self.family == "random_thm2":
            s1, s2 = self.sigma1, self.sigma2
            if s1 is None or s2 is None or not 0 < s1 < s2:
                raise InfeasibleSpec("random_thm2 needs 0 < sigma1 < sigma2")
            if s2 > 4:
                raise InfeasibleSpec("e_c >= sigma2*n and n_c <= 4n force sigma2 <= 4")
            if self.n < 1:
                raise InfeasibleSpec("random_thm2 needs n >= 1")
        if not 0 < self.degree_load <= 1:
            raise InfeasibleSpec("degree_load must lie in (0, 1]")

    @property
    def multiplicity(self) -> int:
        return self.max_multiplicity if self.max_multiplicity is not None else multiplicity_cap(self.n)


# -- extremal families -------------------------------------------------------


def gen_disjoint_stars(n: int) -> ColouredMultigraph:
    """n-1 stars with n leaves each; leaf i of every star carries colour i."""
    if n < 2:
        raise InfeasibleSpec("stars need n >= 2")
    cliques = []
    for s in range(n - 1):
        centre = s * (n + 1)
        cliques.extend(Clique(i, (centre, centre + 1 + i)) for i in range(n))
    return build_instance(cliques, n)


def gen_triangle_blowup(n: int) -> ColouredMultigraph:
    """n-1 disjoint triangles; every colour class is all of them."""
    if n < 2:
        raise InfeasibleSpec("triangle blow-up needs n >= 2")
    cliques = [Clique(c, (3 * t, 3 * t + 1, 3 * t + 2)) for c in range(n) for t in range(n - 1)]
    return build_instance(cliques, n)


def gen_k4_pair() -> ColouredMultigraph:
    """The 3-factorization of two disjoint K4's: colour i is perfect matching i of each."""
    factors = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]
    cliques = []
    for colour, matching in enumerate(factors):
        for base in (0, 4):
            cliques.extend(Clique(colour, (base + a, base + b)) for a, b in matching)
    return build_instance(cliques, 3)


def gen_latin_addition(k: int) -> ColouredMultigraph:
    """K_{k,k} coloured by the addition table of Z_k.

    Row i is vertex i, column j is vertex k + j, and the edge (i, j) has
    colour (i + j) mod k.
    """
    if k < 1:
        raise InfeasibleSpec("latin square order must be >= 1")
    cliques = [Clique((i + j) % k, (i, k + j)) for i in range(k) for j in range(k)]
    return build_instance(cliques, k)


# -- random instances --------------------------------------------------------


class _PairLedger:
    """Co-occurrence counts for vertex pairs, indexed by the lower triangle."""

    def __init__(self, n_vertices: int, cap: int):
        self.cap = cap
        size = n_vertices * (n_vertices - 1) // 2 + 1
        if cap == 1:
            self.bits = np.zeros(size // 8 + 1, dtype=np.uint8)
            self.counts = None
        else:
            if size > 300_000_000:
                raise InfeasibleSpec("vertex pool too large to track multiplicities above 1")
            self.counts = np.zeros(size, dtype=np.uint16 if cap > 250 else np.uint8)

    @staticmethod
    def index(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        lo = np.minimum(u, v).astype(np.int64)
        hi = np.maximum(u, v).astype(np.int64)
        return hi * (hi - 1) // 2 + lo

    def full(self, idx: np.ndarray) -> np.ndarray:
        if self.counts is None:
            return ((self.bits[idx >> 3] >> (idx & 7).astype(np.uint8)) & 1).astype(bool)
        return self.counts[idx] >= self.cap

    def add(self, idx: np.ndarray) -> None:
        if self.counts is None:
            np.bitwise_or.at(self.bits, idx >> 3, (1 << (idx & 7)).astype(np.uint8))
        else:
            np.add.at(self.counts, idx, 1)


def _clique_pair_index(rows: np.ndarray) -> np.ndarray:
    """Pair indices of a block of equally sized cliques, shape (count, t*(t-1)/2)."""
    t = rows.shape[1]
    cols = [_PairLedger.index(rows[:, a], rows[:, b]) for a in range(t) for b in range(a + 1, t)]
    return np.stack(cols, axis=1) if cols else np.zeros((len(rows), 0), np.int64)


def _place_class(rng, sizes: np.ndarray, candidates: np.ndarray, ledger: _PairLedger,
                 max_rounds: int) -> list[np.ndarray]:
    """Draw vertex-disjoint cliques of the given sizes from ``candidates``.

    A clique is redrawn while any of its pairs already sits at the
    multiplicity cap. Returns one row-block per distinct size, in ascending
    size order.
    """
    total = int(sizes.sum())
    if total > len(candidates):
        raise RetryExhausted(f"only {len(candidates)} eligible vertices for a class of {total}")
    picked = rng.choice(candidates, size=total, replace=False)
    used = np.zeros(int(candidates.max()) + 2 if len(candidates) else 1, dtype=bool)
    used[picked] = True
    blocks = []
    offset = 0
    for t in np.unique(sizes):
        cnt = int((sizes == t).sum())
        blocks.append(picked[offset:offset + cnt * t].reshape(cnt, t).copy())
        offset += cnt * t

    for _ in range(max_rounds):
        bad = [ledger.full(_clique_pair_index(b)).any(axis=1) for b in blocks]
        n_bad = sum(int(x.sum()) for x in bad)
        if n_bad == 0:
            break
        for b, mask in zip(blocks, bad):
            if mask.any():
                used[b[mask].ravel()] = False
        free = candidates[~used[candidates]]
        need = sum(int(mask.sum()) * b.shape[1] for b, mask in zip(blocks, bad))
        if need > len(free):
            raise RetryExhausted("ran out of vertices while resolving multiplicity clashes")
        fresh = rng.choice(free, size=need, replace=False)
        used[fresh] = True
        pos = 0
        for b, mask in zip(blocks, bad):
            k = int(mask.sum()) * b.shape[1]
            if k:
                b[mask] = fresh[pos:pos + k].reshape(-1, b.shape[1])
                pos += k
    else:
        raise RetryExhausted("multiplicity clashes persisted past the round limit")

    for b in blocks:
        ledger.add(_clique_pair_index(b).ravel())
    return blocks


def _assemble(n_colours, per_colour_blocks, n_vertices) -> ColouredMultigraph:
    colours, sizes, members = [], [], []
    for c, blocks in enumerate(per_colour_blocks):
        for b in blocks:
            b = np.sort(b, axis=1)
            colours.append(np.full(len(b), c, dtype=np.int64))
            sizes.append(np.full(len(b), b.shape[1], dtype=np.int64))
            members.append(b.ravel())
    if not colours:
        return from_arrays(n_colours, [], [], [], n_vertices=n_vertices)
    return from_arrays(n_colours, np.concatenate(colours), np.concatenate(sizes),
                       np.concatenate(members), n_vertices=n_vertices)


def _random_thm2(spec: GeneratorSpec) -> ColouredMultigraph:
    n, s1, s2 = spec.n, spec.sigma1, spec.sigma2
    rng = np.random.default_rng(spec.seed)
    cap_deg = math.floor(s1 * n + 1e-9)
    if cap_deg < 2:
        raise InfeasibleSpec("sigma1*n must allow degree 2 (one triangle per vertex)")
    e_target = ceil_tol(s2 * n)
    a_min = max(0, math.ceil((2 * e_target - 4 * n) / 3))
    lo, hi = spec.triangle_share
    share = rng.uniform(lo, hi, size=n)
    a = np.clip(np.round(share * e_target / 3).astype(np.int64), a_min, e_target // 3)
    b = e_target - 3 * a
    n_c = 3 * a + 2 * b
    if (n_c > 4 * n).any():
        raise InfeasibleSpec("cannot reach e_c >= sigma2*n within n_c <= 4n")

    total_degree = 2 * n * e_target
    pool = max(int(n_c.max()) + 1, math.ceil(total_degree / (spec.degree_load * cap_deg)))
    ledger = _PairLedger(pool, spec.multiplicity)
    degree = np.zeros(pool, dtype=np.int64)
    classes = []
    for c in range(n):
        sizes = np.array([3] * int(a[c]) + [2] * int(b[c]), dtype=np.int64)
        candidates = np.flatnonzero(degree + 2 <= cap_deg)
        blocks = _place_class(rng, sizes, candidates, ledger, spec.max_rounds)
        for blk in blocks:
            degree[blk.ravel()] += blk.shape[1] - 1
        classes.append(blocks)
    return _assemble(n, classes, pool)


def _random_thm1(spec: GeneratorSpec) -> ColouredMultigraph:
    n, delta = spec.n, spec.delta
    rng = np.random.default_rng(spec.seed)
    target = ceil_tol((2 + delta) * n)
    weights = spec.clique_weights
    ks = np.array(sorted(weights), dtype=np.int64)
    if ks.min() < 2:
        raise InfeasibleSpec("clique sizes must be >= 2")
    probs = np.array([weights[k] for k in ks], dtype=float)
    probs /= probs.sum()
    slack = max(1, n // 20)
    class_sizes = []
    for _ in range(n):
        want = target + int(rng.integers(0, slack + 1))
        draw = rng.choice(ks, size=want // 2 + 1, p=probs)
        cut = int(np.searchsorted(np.cumsum(draw), want)) + 1
        class_sizes.append(draw[:cut])
    incidences = sum(int(s.sum()) for s in class_sizes)
    # colour degree is at most n; aim its mean at degree_load * n / 2
    pool = max(max(int(s.sum()) for s in class_sizes) + 1,
               math.ceil(incidences / (spec.degree_load * n / 2)))
    ledger = _PairLedger(pool, spec.multiplicity)
    candidates = np.arange(pool)
    classes = [_place_class(rng, s, candidates, ledger, spec.max_rounds) for s in class_sizes]
    return _assemble(n, classes, pool)


def gen_random_instance(spec: GeneratorSpec) -> ColouredMultigraph:
    """Seeded random instance in the general-clique or the triangle/edge setting.

    ``random_thm1``: every class a disjoint union of cliques (sizes drawn from
    ``clique_weights``) with n_c >= ⌈(2+δ)n⌉. ``random_thm2``: K3/K2 classes
    with e_c >= σ2·n, n_c <= 4n and every degree at most σ1·n. Both respect
    the multiplicity cap.
    """
    if spec.family == "random_thm2":
        return _random_thm2(spec)
    if spec.family == "random_thm1":
        return _random_thm1(spec)
    raise InfeasibleSpec(f"{spec.family} is not a random family")


def gen_random_cliques(n_colours: int, n_vertices: int, rng, min_class: int = 2,
                       max_class: int | None = None, max_clique: int = 4) -> ColouredMultigraph:
    """Small unconstrained multigraph: each class a random partition of a random vertex subset."""
    max_class = n_vertices if max_class is None else min(max_class, n_vertices)
    cliques = []
    for c in range(n_colours):
        n_c = int(rng.integers(min(min_class, max_class), max_class + 1))
        verts = rng.permutation(n_vertices)[:n_c].tolist()
        while len(verts) >= 2:
            t = int(rng.integers(2, max_clique + 1))
            if len(verts) - t == 1:
                t = len(verts) if len(verts) <= max_clique else t - 1
            t = min(t, len(verts))
            cliques.append(Clique(c, verts[:t]))
            verts = verts[t:]
    return build_instance(cliques, n_colours, n_vertices=n_vertices)


def generate(spec: GeneratorSpec) -> ColouredMultigraph:
    """Dispatch on ``spec.family``."""
    if spec.family == "stars":
        return gen_disjoint_stars(spec.n)
    if spec.family == "triangle_blowup":
        return gen_triangle_blowup(spec.n)
    if spec.family == "k4_pair":
        return gen_k4_pair()
    if spec.family == "latin_addition":
        return gen_latin_addition(spec.n)
    return gen_random_instance(spec)
