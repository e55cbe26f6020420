"""Trajectory lab: predicted edge counts, deviation audits, collision and
recurrence checks, and Monte-Carlo replays of one iteration from a frozen state.

The recurrence and collision constants only exist asymptotically. Here
they are regression thresholds calibrated on a reference ensemble
(thm2, n=5000, sigma1=0.5, sigma2=1.0, eps=0.05, seeds 0..19) and frozen
below; a trace that needs larger constants is drift, not a disproof.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nibble import (
    NibbleConfig, NibbleState, NibbleTrace, choose_edges, chunk_view, init_state,
    marking_probabilities, run_iteration, step_probability, zap_probabilities,
)
from .prediction import (
    d_of, degree_deviation, edge_deviation, edge_target, step_probability_from,
)

# 2x the 99th percentile of |Phi| / (eps^2 n) over the reference ensemble (p99 = 2.11)
COLLISION_THRESHOLD = 4.23
# 2x the largest minimal constants over the reference ensemble (5.0 and 6.09)
T3_DEFAULT = 10.0
T5_DEFAULT = 12.2


class InconsistentTrace(ValueError):
    pass


# -- prediction --------------------------------------------------------------


@dataclass
class TrajectoryPrediction:
    """d(x) = 1 - γx and e_c(x) = e_c(0) d(x)², with e_c(0) = e_c / n."""

    gamma: float
    e0: np.ndarray
    n: int

    def d(self, x):
        return d_of(self.gamma, x)

    def e(self, x):
        return self.e0 * self.d(x) ** 2

    def edges(self, x):
        """Predicted absolute edge counts e_c(x)·n."""
        return edge_target(self.e0 * self.n, self.gamma, x)


def _initial_edges(stats):
    if hasattr(stats, "e_c"):
        return np.asarray(stats.e_c)
    if hasattr(stats, "e_initial"):
        return np.asarray(stats.e_initial)
    return np.asarray(stats)


def prediction_for(stats, gamma: float | NibbleConfig, n: int | None = None) -> TrajectoryPrediction:
    """Build a prediction from instance stats, a trace or raw initial edge counts."""
    if isinstance(gamma, NibbleConfig):
        gamma = gamma.gamma
    e = _initial_edges(stats).astype(float)
    n = len(e) if n is None else n
    return TrajectoryPrediction(float(gamma), e / n if n else e, n)


def predict(x: float, stats, gamma: float | NibbleConfig, n: int | None = None):
    """(d(x), per-colour e_c(x)) in units of n."""
    if not 0 <= x <= 1:
        raise ValueError("x must lie in [0, 1]")
    pred = prediction_for(stats, gamma, n)
    return pred.d(x), pred.e(x)


# -- deviations --------------------------------------------------------------


@dataclass
class DeviationSeries:
    """Deviations at iteration boundaries 0..τ-1, recomputed from raw counts."""

    e_dev: np.ndarray
    d_dev: np.ndarray
    max_relative: np.ndarray
    residuals: list
    mismatches: list = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.mismatches

    @property
    def worst_relative(self) -> float:
        return float(self.max_relative.max()) if len(self.max_relative) else 0.0


def _open_colours(trace: NibbleTrace, i: int) -> np.ndarray:
    return np.flatnonzero(trace.chunk_of >= i)


def deviation_series(trace: NibbleTrace, prediction: TrajectoryPrediction | None = None) -> DeviationSeries:
    """Recompute e_i, d_i (and p_i, c_i) from the recorded counts and compare with the solver.

    ``residuals[i]`` holds e^c(i) - e_c(iε)n for the colours still open at
    boundary i. Disagreements are collected in ``mismatches``; a malformed
    trace raises :class:`InconsistentTrace`.
    """
    n, eps, gamma = trace.n, trace.eps, trace.gamma
    if prediction is None:
        prediction = prediction_for(trace.e_initial, gamma, n)
    e_initial = prediction.e0 * n
    for k, rec in enumerate(trace.records):
        if rec.i != k:
            raise InconsistentTrace(f"record {k} carries index {rec.i}")
        if len(rec.edge_counts) != n or len(rec.chunk_max_degree) != trace.tau:
            raise InconsistentTrace(f"record {k} has malformed count arrays")
        if rec.killed + rec.phi != rec.chosen:
            raise InconsistentTrace(f"record {k}: killed + phi != chunk size")
    if len(trace.records) > max(trace.tau - 1, 0):
        raise InconsistentTrace("more records than iterations")

    counts = [trace.e_initial] + [r.edge_counts for r in trace.records]
    degrees = [trace.chunk_max_degree0] + [r.chunk_max_degree for r in trace.records]
    solver_e = [trace.e_dev0] + [r.e_dev for r in trace.records]
    solver_d = [trace.d_dev0] + [r.d_dev for r in trace.records]
    e_dev, d_dev, rel, residuals, bad = [], [], [], [], []
    for i, (cnt, deg) in enumerate(zip(counts, degrees)):
        x = i * eps
        open_c = _open_colours(trace, i)
        e = edge_deviation(e_initial, cnt, gamma, x, open_c)
        d = degree_deviation(deg, i, n, eps, trace.sigma1, gamma, x)
        pred = edge_target(e_initial[open_c], gamma, x)
        res = cnt[open_c] - pred
        residuals.append(res)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.abs(res) / pred
        rel.append(float(np.nanmax(r)) if len(r) else 0.0)
        e_dev.append(e)
        d_dev.append(d)
        if e != solver_e[i]:
            bad.append((i, "e_dev", solver_e[i], e))
        if d != solver_d[i]:
            bad.append((i, "d_dev", solver_d[i], d))
    for k, rec in enumerate(trace.records):
        if rec.e_dev_prev != e_dev[k] or rec.d_dev_prev != d_dev[k]:
            bad.append((k, "prev", (rec.e_dev_prev, rec.d_dev_prev), (e_dev[k], d_dev[k])))
        p, c = step_probability_from(k, eps, gamma, trace.sigma2, n, e_dev[k], d_dev[k])
        if p != rec.p or c != rec.c:
            bad.append((k, "p", (rec.p, rec.c), (p, c)))
    return DeviationSeries(np.array(e_dev), np.array(d_dev), np.array(rel), residuals, bad)


# -- collisions --------------------------------------------------------------


@dataclass
class CollisionReport:
    ratio: np.ndarray
    threshold: float
    flagged: list

    @property
    def passed(self) -> bool:
        return not self.flagged


def collision_check(trace: NibbleTrace, threshold: float = COLLISION_THRESHOLD) -> CollisionReport:
    """Compare |Φ_{i+1}| with threshold·ε²n; flags are informational."""
    scale = trace.eps ** 2 * trace.n
    phi = np.array([r.phi for r in trace.records], dtype=float)
    ratio = phi / scale if scale else phi
    flagged = [int(k) for k in np.flatnonzero(ratio > threshold)]
    return CollisionReport(ratio, threshold, flagged)


# -- recurrences -------------------------------------------------------------


@dataclass(frozen=True)
class RecurrenceThresholds:
    """Constants for d_{i+1} <= d_i + t3 ε³ n and
    e_{i+1} <= e_i (1 + t4 ε / d(iε)) + t5 ε² n + 16 d_i / σ2.

    ``t4=None`` means 16/σ2 - 2, the value the analysis derives.
    """

    t3: float = T3_DEFAULT
    t4: float | None = None
    t5: float = T5_DEFAULT

    def __post_init__(self):
        if self.t3 <= 0 or self.t5 <= 0 or (self.t4 is not None and self.t4 <= 0):
            raise ValueError("recurrence constants must be positive")

    def t4_for(self, sigma2: float) -> float:
        return 16.0 / sigma2 - 2.0 if self.t4 is None else self.t4


@dataclass
class RecurrenceReport:
    passed: bool
    failures: list
    min_t3: float
    min_t5: float
    t4: float
    t2: float
    outside_t2: list


def recurrence_check(trace: NibbleTrace, thresholds: RecurrenceThresholds | None = None,
                     n: int | None = None, eps: float | None = None) -> RecurrenceReport:
    """Check both recurrences on every consecutive pair of boundaries.

    Also reports the smallest t3, t5 that would pass (t4 fixed) and the
    boundaries where e_i leaves the regime e_i <= t2 n, t2 = σ2(1-γ)²/2, in
    which the analysis applies; those are only flagged.
    """
    thresholds = thresholds or RecurrenceThresholds()
    n = trace.n if n is None else n
    eps = trace.eps if eps is None else eps
    gamma, s2 = trace.gamma, trace.sigma2
    t4 = thresholds.t4_for(s2)
    e = np.array([trace.e_dev0] + [r.e_dev for r in trace.records], dtype=float)
    d = np.array([trace.d_dev0] + [r.d_dev for r in trace.records], dtype=float)
    failures = []
    need3, need5 = 0.0, 0.0
    for i in range(len(e) - 1):
        slack3 = d[i + 1] - d[i]
        grow = e[i] * (1 + t4 * eps / d_of(gamma, i * eps)) + 16 * d[i] / s2
        slack5 = e[i + 1] - grow
        if n and eps:
            need3 = max(need3, slack3 / (eps ** 3 * n))
            need5 = max(need5, slack5 / (eps ** 2 * n))
        if slack3 > thresholds.t3 * eps ** 3 * n:
            failures.append((i + 1, "d"))
        if slack5 > thresholds.t5 * eps ** 2 * n:
            failures.append((i + 1, "e"))
    t2 = s2 * (1 - gamma) ** 2 / 2
    outside = [int(i) for i in np.flatnonzero(e > t2 * n)]
    return RecurrenceReport(not failures, failures, need3, need5, t4, t2, outside)


# -- frozen-state replays ----------------------------------------------------


@dataclass
class HitStats:
    """Replay averages for one frozen state.

    Per monitored colour: K2/K3 counts b, a and mean/SE of L (K2's with a
    condemned vertex), T1 (K3's with >= 1) and T2 (K3's with >= 2). Per
    sampled vertex: empirical condemnation frequency.
    """

    p: float
    trials: int
    colours: np.ndarray
    a: np.ndarray
    b: np.ndarray
    L_mean: np.ndarray
    L_se: np.ndarray
    T1_mean: np.ndarray
    T1_se: np.ndarray
    T2_mean: np.ndarray
    T2_se: np.ndarray
    vertices: np.ndarray
    vertex_freq: np.ndarray

    @property
    def vertex_se(self) -> float:
        return float(np.sqrt(self.p * (1 - self.p) / self.trials))


def _default_colours(state: NibbleState, limit: int) -> np.ndarray:
    later = np.flatnonzero(state.plan.chunk_of > state.i)
    return later[:limit]


def component_hit_stats(state: NibbleState, rng, trials: int, cfg: NibbleConfig | None = None,
                        colours=None, vertices=None, batch_size: int = 2000,
                        colour_limit: int = 12, vertex_sample: int = 200) -> HitStats:
    """Replay Steps 1-3 of the next iteration ``trials`` times without touching ``state``.

    A vertex is condemned when it is marked or its zap bit is 1. Monitored
    colours default to the first ``colour_limit`` colours of later chunks;
    vertices default to a sample of live vertices.
    """
    V = state.n_vertices
    p, _ = step_probability(state.i, state, cfg)
    view = chunk_view(state, state.i)
    P = marking_probabilities(state, view)
    Q = zap_probabilities(P, p, state.alive, 1e-12 if cfg is None else cfg.q_tol)

    colours = _default_colours(state, colour_limit) if colours is None else np.asarray(colours)
    colours = np.unique(colours.astype(np.int64))
    sel = np.isin(state.comp_colour, colours)
    rows = state.comp_verts[sel]
    size = state.comp_size[sel]
    local = np.searchsorted(colours, state.comp_colour[sel])
    m = len(colours)
    a = np.bincount(local, weights=size == 3, minlength=m).astype(np.int64)
    b = np.bincount(local, weights=size == 2, minlength=m).astype(np.int64)
    onehot = np.zeros((len(rows), m))
    onehot[np.arange(len(rows)), local] = 1.0

    if vertices is None:
        live = np.flatnonzero(state.alive[:V])
        vertices = np.sort(rng.choice(live, size=min(vertex_sample, len(live)), replace=False))
    vertices = np.asarray(vertices, dtype=np.int64)

    # only vertices that are watched need zap bits; everything else maps to a dump column
    watched = np.unique(np.concatenate([rows.ravel(), vertices, [V]]))
    pos = np.full(V + 1, len(watched), dtype=np.int64)
    pos[watched] = np.arange(len(watched))
    pos[V] = len(watched)
    q_w = np.append(Q[watched], 0.0)
    rows_w, vert_w = pos[rows], pos[vertices]

    sums = np.zeros((3, m))
    sq = np.zeros((3, m))
    vcount = np.zeros(len(vertices))
    done = 0
    while done < trials:
        B = min(batch_size, trials - done)
        cond = rng.random((B, len(q_w))) < q_w
        u, v = choose_edges(view, rng, trials=B)
        r = np.arange(B)[:, None]
        cond[r, pos[u]] = True
        cond[r, pos[v]] = True
        cond[:, -1] = False
        hits = cond[:, rows_w].sum(axis=2)
        feats = (
            ((size == 2) & (hits >= 1)),
            ((size == 3) & (hits >= 1)),
            ((size == 3) & (hits >= 2)),
        )
        for f, arr in enumerate(feats):
            per = arr.astype(float) @ onehot
            sums[f] += per.sum(axis=0)
            sq[f] += (per ** 2).sum(axis=0)
        vcount += cond[:, vert_w].sum(axis=0)
        done += B
    mean = sums / trials
    var = np.maximum(sq / trials - mean ** 2, 0.0) * trials / max(trials - 1, 1)
    se = np.sqrt(var / trials)
    return HitStats(p, trials, colours, a, b, mean[0], se[0], mean[1], se[1], mean[2], se[2],
                    vertices, vcount / trials)


def hit_bounds(stats: HitStats) -> dict:
    """Deviation of the replay means from 2pb (K2 hits) and 3pa (K3 hits), with allowances.

    ``*_ok`` compare |E - main term| against the allowance 4p²b (resp.
    16p²a) plus three standard errors.
    """
    p = stats.p
    dl = np.abs(stats.L_mean - 2 * p * stats.b)
    dt = np.abs(stats.T1_mean - 3 * p * stats.a)
    al = 4 * p ** 2 * stats.b + 3 * stats.L_se
    at = 16 * p ** 2 * stats.a + 3 * stats.T1_se
    return {"L_dev": dl, "L_allow": al, "L_ok": dl <= al,
            "T1_dev": dt, "T1_allow": at, "T1_ok": dt <= at}


def walk_states(g, cfg: NibbleConfig, at, seed: int | None = None):
    """Yield ``(k, state)`` before iteration ``k + 1`` for each k in ``at``, following one run.

    The state is live: callers may read it (or replay from it) but must not
    change it. Use :func:`frozen_states` for independent copies.
    """
    at = sorted(set(int(k) for k in at))
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    state = init_state(g, cfg, rng)
    for k in range(at[-1] + 1 if at else 0):
        if k in at:
            yield k, state
        if k < at[-1]:
            run_iteration(state, cfg, rng)


def frozen_states(g, cfg: NibbleConfig, at, seed: int | None = None) -> dict:
    """Snapshots of one run taken before iteration ``k + 1`` for each k in ``at``."""
    return {k: state.copy() for k, state in walk_states(g, cfg, at, seed)}
