"""Exact branch-and-bound oracle and the deterministic greedy matcher."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import ColouredMultigraph, RainbowMatching


class Status(enum.Enum):
    FOUND = "found"
    NOT_FOUND = "not_found"
    BROKE = "broke"


@dataclass
class SolveOutcome:
    """Result of any solver.

    ``matching`` holds the best matching seen (full when FOUND). For the
    exact solver ``exhaustive`` certifies that the search finished, so a
    NOT_FOUND there is a proof. ``reason``/``iteration`` describe a break or
    the colour greedy got stuck on.
    """

    status: Status
    matching: RainbowMatching = field(default_factory=RainbowMatching)
    max_size: int = 0
    exhaustive: bool = False
    reason: str | None = None
    iteration: int | None = None
    stuck_colour: int | None = None
    attempts: int = 1

    @property
    def found(self) -> bool:
        return self.status is Status.FOUND


# -- greedy ------------------------------------------------------------------


def smallest_edge(members: np.ndarray, ptr: np.ndarray, alive: np.ndarray):
    """Lexicographically smallest surviving edge among cliques ``ptr``-delimited in ``members``.

    Vertices are ascending inside each clique and cliques of one colour are
    disjoint, so the edge is the first two live vertices of the clique that
    owns the smallest live vertex sitting in a clique with at least two live
    vertices. Returns ``(u, v, local_clique)`` or None.
    """
    if len(members) == 0:
        return None
    live = alive[members]
    counts = np.add.reduceat(live.astype(np.int64), ptr[:-1]) if len(ptr) > 1 else np.zeros(0)
    ok = counts >= 2
    if not ok.any():
        return None
    sizes = np.diff(ptr)
    cand = live & np.repeat(ok, sizes)
    pos = np.flatnonzero(cand)
    vals = members[pos]
    j = pos[int(np.argmin(vals))]
    k = int(np.searchsorted(ptr, j, side="right") - 1)
    seg = np.flatnonzero(live[ptr[k]:ptr[k + 1]])
    u, v = members[ptr[k] + seg[0]], members[ptr[k] + seg[1]]
    return int(u), int(v), k


def greedy_extend(g: ColouredMultigraph, colours: Sequence[int], alive: np.ndarray,
                  entries: dict) -> int | None:
    """Match ``colours`` in order into ``entries``, clearing used vertices in ``alive``.

    Returns the first colour with no surviving edge, or None on success.
    """
    base = g.clique_ptr
    for c in colours:
        c = int(c)
        k0, k1 = g.colour_ptr[c], g.colour_ptr[c + 1]
        lo = base[k0]
        hit = smallest_edge(g.members[lo:base[k1]], base[k0:k1 + 1] - lo, alive)
        if hit is None:
            return c
        u, v, _ = hit
        entries[c] = (u, v)
        alive[u] = alive[v] = False
    return None


def solve_greedy(g: ColouredMultigraph, order: Sequence[int] | None = None) -> SolveOutcome:
    """Give each colour in turn its smallest surviving edge and delete both endpoints."""
    order = range(g.n_colours) if order is None else order
    alive = np.ones(g.n_vertices, dtype=bool)
    entries: dict = {}
    stuck = greedy_extend(g, order, alive, entries)
    m = RainbowMatching(entries)
    if stuck is None and len(m) == g.n_colours:
        return SolveOutcome(Status.FOUND, m, len(m))
    return SolveOutcome(Status.NOT_FOUND, m, len(m), reason="GreedyStuck", stuck_colour=stuck)


def greedy_bound_check(g: ColouredMultigraph, colours: Sequence[int] | None = None,
                       use_edges: bool = False) -> bool:
    """True when every listed class has at least 4 * |colours| vertices (or edges).

    A deleted vertex costs a class at most two vertices (itself plus a
    stranded K2 partner), so each greedy step costs at most four and the
    greedy never gets stuck. The edge form assumes cliques of size <= 3.
    """
    colours = np.arange(g.n_colours) if colours is None else np.asarray(list(colours), dtype=np.int64)
    if len(colours) == 0:
        return True
    counts = g.class_edges if use_edges else g.class_sizes
    return bool(counts[colours].min() >= 4 * len(colours))


# -- exact -------------------------------------------------------------------


class _BudgetExhausted(Exception):
    pass


def solve_exact_max(g: ColouredMultigraph, budget: int = 10**7,
                    require_full: bool = False) -> SolveOutcome:
    """Maximum rainbow matching by branch and bound over vertex bitmasks.

    Branches on the colour with the fewest surviving edges. In maximum mode a
    colour may also be left unmatched. The bound is the smaller of the number
    of colours that still have an edge and half the vertices those edges
    touch. With ``require_full`` the search only looks for a full matching.
    """
    C = g.n_colours
    edges = []
    for c in range(C):
        es = sorted((u, v) for u, v, _ in g.edges(c))
        edges.append([(u, v, (1 << u) | (1 << v)) for u, v in es])

    best: list = [0, {}]
    nodes = [0]

    def avail(c, used):
        return [e for e in edges[c] if not e[2] & used]

    def rec(used, left, cur):
        nodes[0] += 1
        if nodes[0] > budget:
            raise _BudgetExhausted
        if len(cur) > best[0]:
            best[0], best[1] = len(cur), dict(cur)
            if best[0] == C:
                return True
        options = []
        union = 0
        for c in left:
            a = avail(c, used)
            if not a:
                if require_full:
                    return False
                continue
            options.append((len(a), c, a))
            for e in a:
                union |= e[2]
        bound = len(cur) + min(len(options), bin(union).count("1") // 2)
        if bound <= best[0]:
            return False
        if not options:
            return False
        options.sort(key=lambda t: (t[0], t[1]))
        _, c, a = options[0]
        rest = [t[1] for t in options[1:]]
        for u, v, mask in a:
            cur[c] = (u, v)
            if rec(used | mask, rest, cur):
                return True
            del cur[c]
        if not require_full:
            return rec(used, rest, cur)
        return False

    exhaustive = True
    try:
        rec(0, list(range(C)), {})
    except _BudgetExhausted:
        exhaustive = False
    size, entries = best
    m = RainbowMatching(entries)
    status = Status.FOUND if size == C else Status.NOT_FOUND
    return SolveOutcome(status, m, size, exhaustive=exhaustive or status is Status.FOUND,
                        reason=None if exhaustive else "BudgetExhausted")
