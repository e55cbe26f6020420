"""Edge-coloured multigraphs whose colour classes are disjoint unions of cliques.

A graph is stored as a flat CSR layout: cliques are grouped by colour, each
clique keeps its vertices in ascending order, and ``clique_ptr`` delimits the
member slices. Multiplicity is never stored; it follows from two vertices
sharing a clique in several colours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np


class GraphError(ValueError):
    """Base class for instance validation failures."""

    clique_index: int | None = None


class BadColourIndex(GraphError):
    def __init__(self, colour: int, n_colours: int, clique_index: int | None = None):
        super().__init__(f"colour {colour} outside [0, {n_colours})")
        self.colour = colour
        self.clique_index = clique_index


class TrivialClique(GraphError):
    def __init__(self, size: int, clique_index: int | None = None):
        super().__init__(f"clique of size {size}; cliques need at least 2 vertices")
        self.size = size
        self.clique_index = clique_index


class RepeatedVertex(GraphError):
    def __init__(self, vertex: int, clique_index: int | None = None):
        super().__init__(f"vertex {vertex} listed twice in one clique")
        self.vertex = vertex
        self.clique_index = clique_index


class NegativeVertex(GraphError):
    def __init__(self, vertex: int, clique_index: int | None = None):
        super().__init__(f"vertex id {vertex} is negative")
        self.vertex = vertex
        self.clique_index = clique_index


class OverlappingCliques(GraphError):
    def __init__(self, colour: int, vertex: int, clique_index: int | None = None):
        super().__init__(f"colour {colour}: vertex {vertex} lies in two cliques")
        self.colour = colour
        self.vertex = vertex
        self.clique_index = clique_index


class ClassTooSmall(GraphError):
    def __init__(self, colour: int, n_c: int, required: int):
        super().__init__(f"colour {colour} spans {n_c} vertices, need at least {required}")
        self.colour = colour
        self.n_c = n_c
        self.required = required


def ceil_tol(x: float) -> int:
    """Ceiling that ignores float noise, so ceil((2 + 0.1) * 10) == 21."""
    return math.ceil(x - 1e-9 * max(1.0, abs(x)))


@dataclass(frozen=True)
class Clique:
    colour: int
    vertices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(int(v) for v in self.vertices))

    @property
    def size(self) -> int:
        return len(self.vertices)


class ColouredMultigraph:
    """Immutable edge-coloured multigraph built from per-colour clique lists.

    Cliques are renumbered so that colour 0 comes first; within a colour the
    input order is kept. ``clique_colour[k]`` and
    ``members[clique_ptr[k]:clique_ptr[k + 1]]`` describe clique ``k``.
    """

    __slots__ = (
        "n_colours", "n_vertices", "clique_colour", "clique_ptr", "members",
        "colour_ptr", "_cache",
    )

    def __init__(self, n_colours, n_vertices, clique_colour, clique_ptr, members):
        self.n_colours = int(n_colours)
        self.n_vertices = int(n_vertices)
        self.clique_colour = clique_colour
        self.clique_ptr = clique_ptr
        self.members = members
        self.colour_ptr = np.searchsorted(
            clique_colour, np.arange(self.n_colours + 1), side="left"
        ).astype(np.int64)
        self._cache: dict = {}
        for arr in (clique_colour, clique_ptr, members):
            arr.setflags(write=False)

    # -- shape -----------------------------------------------------------

    @property
    def n_cliques(self) -> int:
        return len(self.clique_colour)

    @property
    def clique_sizes(self) -> np.ndarray:
        if "sizes" not in self._cache:
            self._cache["sizes"] = np.diff(self.clique_ptr)
        return self._cache["sizes"]

    @property
    def member_clique(self) -> np.ndarray:
        """Clique index of every entry of ``members``."""
        if "member_clique" not in self._cache:
            self._cache["member_clique"] = np.repeat(
                np.arange(self.n_cliques, dtype=np.int64), self.clique_sizes
            )
        return self._cache["member_clique"]

    @property
    def class_sizes(self) -> np.ndarray:
        """n_c: number of vertices covered by each colour class."""
        if "n_c" not in self._cache:
            self._cache["n_c"] = np.bincount(
                self.clique_colour, weights=self.clique_sizes, minlength=self.n_colours
            ).astype(np.int64)
        return self._cache["n_c"]

    @property
    def class_edges(self) -> np.ndarray:
        """e_c: number of edges of each colour."""
        if "e_c" not in self._cache:
            s = self.clique_sizes.astype(np.int64)
            self._cache["e_c"] = np.bincount(
                self.clique_colour, weights=s * (s - 1) // 2, minlength=self.n_colours
            ).astype(np.int64)
        return self._cache["e_c"]

    def is_normalized(self) -> bool:
        return bool(self.n_cliques == 0 or self.clique_sizes.max() <= 3)

    # -- views -----------------------------------------------------------

    def clique_range(self, colour: int) -> range:
        return range(int(self.colour_ptr[colour]), int(self.colour_ptr[colour + 1]))

    def clique(self, k: int) -> Clique:
        lo, hi = self.clique_ptr[k], self.clique_ptr[k + 1]
        return Clique(int(self.clique_colour[k]), tuple(self.members[lo:hi].tolist()))

    def cliques(self, colour: int | None = None) -> list[Clique]:
        ks = range(self.n_cliques) if colour is None else self.clique_range(colour)
        return [self.clique(k) for k in ks]

    @property
    def classes(self) -> tuple[tuple[Clique, ...], ...]:
        return tuple(tuple(self.cliques(c)) for c in range(self.n_colours))

    def edges(self, colour: int) -> Iterator[tuple[int, int, int]]:
        """Yield ``(u, v, clique_index)`` with u < v for every edge of a colour."""
        for k in self.clique_range(colour):
            vs = self.members[self.clique_ptr[k]:self.clique_ptr[k + 1]].tolist()
            for a in range(len(vs)):
                for b in range(a + 1, len(vs)):
                    yield vs[a], vs[b], k

    def has_edge(self, colour: int, u: int, v: int) -> bool:
        if not 0 <= colour < self.n_colours or u == v:
            return False
        lo, hi = self.clique_ptr[self.colour_ptr[colour]], self.clique_ptr[self.colour_ptr[colour + 1]]
        seg = self.members[lo:hi]
        hit_u = np.flatnonzero(seg == u)
        hit_v = np.flatnonzero(seg == v)
        if len(hit_u) == 0 or len(hit_v) == 0:
            return False
        ku, kv = np.searchsorted(self.clique_ptr, [lo + hit_u[0], lo + hit_v[0]], side="right")
        return bool(ku == kv)

    def multiplicity(self, u: int, v: int) -> int:
        """Number of colours in which u and v share a clique."""
        if u == v:
            return 0
        mc = self.member_clique
        cu = mc[self.members == u]
        cv = mc[self.members == v]
        return int(len(np.intersect1d(cu, cv)))

    def pair_counts(self) -> tuple[np.ndarray, np.ndarray]:
        """All co-occurring vertex pairs as keys ``u * n_vertices + v`` (u < v) with counts."""
        keys = []
        sizes = self.clique_sizes
        V = np.int64(max(self.n_vertices, 1))
        for t in np.unique(sizes):
            ks = np.flatnonzero(sizes == t)
            rows = self.members[self.clique_ptr[ks][:, None] + np.arange(t)].astype(np.int64)
            for a in range(t):
                for b in range(a + 1, t):
                    keys.append(rows[:, a] * V + rows[:, b])
        if not keys:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        return np.unique(np.concatenate(keys), return_counts=True)

    def max_multiplicity(self) -> int:
        if "max_mult" not in self._cache:
            _, counts = self.pair_counts()
            self._cache["max_mult"] = int(counts.max()) if len(counts) else 0
        return self._cache["max_mult"]

    # -- comparison ------------------------------------------------------

    def canonical(self) -> tuple:
        """Hashable form: per colour, the sorted tuple of sorted cliques."""
        return (self.n_colours,) + tuple(
            tuple(sorted(c.vertices for c in self.cliques(col))) for col in range(self.n_colours)
        )

    def __eq__(self, other):
        if not isinstance(other, ColouredMultigraph):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self):
        return hash(self.canonical())

    def __repr__(self):
        return (f"ColouredMultigraph(n_colours={self.n_colours}, n_vertices={self.n_vertices}, "
                f"cliques={self.n_cliques})")


def from_arrays(n_colours: int, clique_colour, clique_sizes, members,
                n_vertices: int | None = None, validate: bool = True) -> ColouredMultigraph:
    """Build a graph from flat arrays; cliques are regrouped by colour (stable)."""
    clique_colour = np.asarray(clique_colour, dtype=np.int64)
    clique_sizes = np.asarray(clique_sizes, dtype=np.int64)
    members = np.asarray(members, dtype=np.int64)
    if len(clique_colour) != len(clique_sizes) or clique_sizes.sum() != len(members):
        raise ValueError("clique arrays have inconsistent lengths")
    ptr = np.zeros(len(clique_sizes) + 1, dtype=np.int64)
    np.cumsum(clique_sizes, out=ptr[1:])

    if validate:
        _validate_cliques(n_colours, clique_colour, clique_sizes, ptr, members)

    order = np.argsort(clique_colour, kind="stable")
    regroup = not np.array_equal(order, np.arange(len(order)))
    if regroup:
        sizes_sorted = clique_sizes[order]
        new_ptr = np.zeros_like(ptr)
        np.cumsum(sizes_sorted, out=new_ptr[1:])
        idx = np.repeat(ptr[order] - new_ptr[:-1], sizes_sorted) + np.arange(len(members))
        members = members[idx]
        clique_colour = clique_colour[order]
        clique_sizes, ptr = sizes_sorted, new_ptr

    if len(members) > 1:
        # vertices ascending inside each clique
        same = np.ones(len(members) - 1, dtype=bool)
        same[ptr[1:-1] - 1] = False
        if np.any((members[1:] < members[:-1]) & same):
            cid = np.repeat(np.arange(len(clique_sizes)), clique_sizes)
            members = members[np.lexsort((members, cid))]
    if validate:
        inverse = order if regroup else None
        _validate_overlaps(n_colours, clique_colour, ptr, members, inverse)
    if n_vertices is None:
        n_vertices = int(members.max()) + 1 if len(members) else 0
    elif len(members) and members.max() >= n_vertices:
        raise GraphError(f"vertex {int(members.max())} >= declared vertex count {n_vertices}")
    return ColouredMultigraph(
        n_colours, n_vertices, clique_colour.astype(np.int32), ptr, members.astype(np.int32)
    )


def _validate_cliques(n_colours, clique_colour, clique_sizes, ptr, members) -> None:
    if len(clique_colour) == 0:
        return
    bad = np.flatnonzero((clique_colour < 0) | (clique_colour >= n_colours))
    if len(bad):
        k = int(bad[0])
        raise BadColourIndex(int(clique_colour[k]), n_colours, k)
    small = np.flatnonzero(clique_sizes < 2)
    if len(small):
        k = int(small[0])
        raise TrivialClique(int(clique_sizes[k]), k)
    neg = np.flatnonzero(members < 0)
    if len(neg):
        k = int(np.searchsorted(ptr, neg[0], side="right") - 1)
        raise NegativeVertex(int(members[neg[0]]), k)


def _validate_overlaps(n_colours, clique_colour, ptr, members, inverse) -> None:
    """Check vertex-disjointness within each colour on colour-grouped arrays.

    ``inverse`` maps grouped clique positions back to input positions so
    errors name the clique as the caller listed it.
    """
    if len(members) == 0:
        return
    colour_ptr = np.searchsorted(clique_colour, np.arange(n_colours + 1))
    for c in range(n_colours):
        k0, k1 = colour_ptr[c], colour_ptr[c + 1]
        lo, hi = ptr[k0], ptr[k1]
        if hi - lo < 2:
            continue
        seg = members[lo:hi]
        order = np.argsort(seg, kind="stable")
        s = seg[order]
        dup = np.flatnonzero(s[1:] == s[:-1])
        if not len(dup):
            continue
        pos = order[dup + 1] + lo
        ks = np.searchsorted(ptr, pos, side="right") - 1
        first = np.searchsorted(ptr, order[dup] + lo, side="right") - 1
        orig = ks if inverse is None else inverse[ks]
        j = int(np.argmin(orig))
        vertex = int(s[dup[j]])
        if first[j] == ks[j]:
            raise RepeatedVertex(vertex, int(orig[j]))
        raise OverlappingCliques(c, vertex, int(orig[j]))


def build_instance(cliques: Iterable[Clique], n_colours: int,
                   n_vertices: int | None = None) -> ColouredMultigraph:
    """Validate a clique list and freeze it into a :class:`ColouredMultigraph`.

    Raises :class:`OverlappingCliques`, :class:`TrivialClique`,
    :class:`BadColourIndex` (and :class:`RepeatedVertex` for a clique that
    lists a vertex twice). ``clique_index`` on the error is the position in
    the input list.
    """
    cliques = list(cliques)
    colours = [c.colour for c in cliques]
    sizes = [len(c.vertices) for c in cliques]
    flat = [v for c in cliques for v in c.vertices]
    return from_arrays(n_colours, colours, sizes, flat, n_vertices=n_vertices)


# -- normalization -----------------------------------------------------------


def split_sizes(t: int) -> list[int]:
    """Part sizes (3s first, then 2s) used to break a K_t into K3's and K2's."""
    if t < 2:
        raise TrivialClique(t)
    if t <= 3:
        return [t]
    r = t % 3
    if r == 0:
        return [3] * (t // 3)
    if r == 2:
        return [3] * (t // 3) + [2]
    return [3] * ((t - 4) // 3) + [2, 2]


def normalize_cliques(g: ColouredMultigraph, delta: float, n: int | None = None) -> ColouredMultigraph:
    """Split every clique into K3's/K2's, then trim each class down towards ⌈(2+δ)n⌉.

    Splitting keeps every vertex. Trimming drops whole components, pairs
    before triangles and lower clique index first, as long as the class keeps
    at least ⌈(2+δ)n⌉ vertices; the result has at most ⌈(2+δ)n⌉ + 2.
    """
    n = g.n_colours if n is None else n
    target = ceil_tol((2 + delta) * n)
    n_c = g.class_sizes
    short = np.flatnonzero(n_c < target)
    if len(short):
        c = int(short[0])
        raise ClassTooSmall(c, int(n_c[c]), target)

    split = _split_all(g)
    sizes = split.clique_sizes
    keep = np.ones(split.n_cliques, dtype=bool)
    for c in range(split.n_colours):
        lo, hi = split.colour_ptr[c], split.colour_ptr[c + 1]
        total = int(n_c[c])
        s = sizes[lo:hi]
        for k in np.concatenate([np.flatnonzero(s == 2), np.flatnonzero(s == 3)]):
            if total - s[k] >= target:
                total -= int(s[k])
                keep[lo + k] = False
    return _subset_cliques(split, keep)


def _split_all(g: ColouredMultigraph) -> ColouredMultigraph:
    sizes = g.clique_sizes
    if g.is_normalized():
        return g
    new_sizes = []
    new_colour = []
    for k in range(g.n_cliques):
        parts = split_sizes(int(sizes[k]))
        new_sizes.extend(parts)
        new_colour.extend([int(g.clique_colour[k])] * len(parts))
    return from_arrays(g.n_colours, new_colour, new_sizes, g.members,
                       n_vertices=g.n_vertices, validate=False)


def _subset_cliques(g: ColouredMultigraph, keep: np.ndarray) -> ColouredMultigraph:
    sizes = g.clique_sizes
    member_keep = np.repeat(keep, sizes)
    return from_arrays(g.n_colours, g.clique_colour[keep], sizes[keep], g.members[member_keep],
                       n_vertices=g.n_vertices, validate=False)


def remove_vertices(g: ColouredMultigraph, s: Iterable[int]) -> ColouredMultigraph:
    """Delete vertices; cliques shrink and vanish once fewer than two vertices remain."""
    s = np.fromiter((int(v) for v in s), dtype=np.int64)
    s = s[(s >= 0) & (s < g.n_vertices)]
    if len(s) == 0:
        return g
    gone = np.zeros(g.n_vertices, dtype=bool)
    gone[s] = True
    alive = ~gone[g.members]
    new_sizes = np.bincount(g.member_clique[alive], minlength=g.n_cliques)
    keep_clique = new_sizes >= 2
    member_keep = alive & keep_clique[g.member_clique]
    return from_arrays(g.n_colours, g.clique_colour[keep_clique], new_sizes[keep_clique],
                       g.members[member_keep], n_vertices=g.n_vertices, validate=False)


# -- statistics --------------------------------------------------------------


@dataclass
class InstanceStats:
    n_c: np.ndarray
    e_c: np.ndarray
    a_c: np.ndarray
    b_c: np.ndarray
    d_v: np.ndarray
    cd_v: np.ndarray
    d_v_tr: np.ndarray
    d_v_line: np.ndarray
    max_multiplicity: int | None = None

    @property
    def n_colours(self) -> int:
        return len(self.n_c)


def instance_stats(g: ColouredMultigraph, multiplicity: bool = True) -> InstanceStats:
    """Per-colour and per-vertex counts.

    ``d_v`` counts incident edges with multiplicity, ``cd_v`` the number of
    colours covering v. ``d_v_tr``/``d_v_line`` restrict to K3/K2 components,
    so ``d_v == d_v_tr + d_v_line`` once the graph is normalized.
    """
    sizes = g.clique_sizes
    C, V = g.n_colours, g.n_vertices
    col = g.clique_colour
    a_c = np.bincount(col[sizes == 3], minlength=C).astype(np.int64)
    b_c = np.bincount(col[sizes == 2], minlength=C).astype(np.int64)
    msize = np.repeat(sizes, sizes).astype(np.int64)
    d_v = np.bincount(g.members, weights=msize - 1, minlength=V).astype(np.int64)
    cd_v = np.bincount(g.members, minlength=V).astype(np.int64)
    d_tr = 2 * np.bincount(g.members[msize == 3], minlength=V).astype(np.int64)
    d_line = np.bincount(g.members[msize == 2], minlength=V).astype(np.int64)
    return InstanceStats(
        n_c=g.class_sizes.copy(), e_c=g.class_edges.copy(), a_c=a_c, b_c=b_c,
        d_v=d_v, cd_v=cd_v, d_v_tr=d_tr, d_v_line=d_line,
        max_multiplicity=g.max_multiplicity() if multiplicity else None,
    )


def multiplicity_cap(n: int) -> int:
    """⌊√n / log² n⌋, floored at 1 (natural log)."""
    if n < 3:
        return 1
    return max(1, int(math.floor(math.sqrt(n) / math.log(n) ** 2)))


# -- matchings ---------------------------------------------------------------


@dataclass(frozen=True)
class RainbowMatching:
    """Partial map colour -> edge, stored with u < v."""

    entries: Mapping[int, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        norm = {int(c): (min(int(u), int(v)), max(int(u), int(v)))
                for c, (u, v) in self.entries.items()}
        object.__setattr__(self, "entries", dict(sorted(norm.items())))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.items())

    def __contains__(self, colour):
        return colour in self.entries

    def colours(self) -> list[int]:
        return list(self.entries)

    def vertices(self) -> list[int]:
        return [x for e in self.entries.values() for x in e]

    def restrict(self, colours: Iterable[int]) -> "RainbowMatching":
        keep = set(colours)
        return RainbowMatching({c: e for c, e in self.entries.items() if c in keep})


@dataclass(frozen=True)
class SharedVertex:
    vertex: int


@dataclass(frozen=True)
class NotAnEdge:
    colour: int
    u: int
    v: int


@dataclass(frozen=True)
class UnknownColour:
    colour: int


@dataclass(frozen=True)
class MissingColour:
    colour: int


@dataclass
class MatchingVerdict:
    accepted: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.accepted


def verify_matching(g: ColouredMultigraph, m: RainbowMatching | Mapping[int, Sequence[int]],
                    require_full: bool = False) -> MatchingVerdict:
    if not isinstance(m, RainbowMatching):
        m = RainbowMatching(dict(m))
    violations = []
    seen: set[int] = set()
    reported: set[int] = set()
    for c, (u, v) in m:
        if not 0 <= c < g.n_colours:
            violations.append(UnknownColour(c))
        elif not g.has_edge(c, u, v):
            violations.append(NotAnEdge(c, u, v))
        for x in (u, v):
            if x in seen and x not in reported:
                violations.append(SharedVertex(x))
                reported.add(x)
            seen.add(x)
    if require_full:
        violations.extend(MissingColour(c) for c in range(g.n_colours) if c not in m)
    return MatchingVerdict(not violations, violations)
