"""Closed-form trajectory of the nibble: d(x) = 1 - γx and e_c(x) = e_c(0) d(x)².

Both the solver and the trajectory lab evaluate deviations through these
helpers, so recomputed values agree bit for bit.
"""

from __future__ import annotations

import numpy as np


def d_of(gamma: float, x):
    return 1.0 - gamma * x


def edge_target(e_initial, gamma: float, x):
    """Predicted edge count e_c(x)·n given the initial count e_c."""
    return np.asarray(e_initial, dtype=float) * d_of(gamma, x) ** 2


def degree_target(n: int, eps: float, sigma1: float, gamma: float, x) -> float:
    """Predicted per-chunk degree ε σ1 d(x) n."""
    return eps * sigma1 * d_of(gamma, x) * n


def edge_deviation(e_initial, e_now, gamma: float, x, colours) -> float:
    """max over ``colours`` of |e_c(x)·n - e^c|, 0 for an empty set."""
    colours = np.asarray(colours, dtype=np.int64)
    if len(colours) == 0:
        return 0.0
    pred = edge_target(np.asarray(e_initial)[colours], gamma, x)
    return float(np.max(np.abs(pred - np.asarray(e_now)[colours])))


def degree_deviation(chunk_max_degree, first_open_chunk: int, n: int, eps: float,
                     sigma1: float, gamma: float, x) -> float:
    """max over open chunks of (max_v d_v^{C_j} - ε σ1 d(x) n)^+."""
    tail = np.asarray(chunk_max_degree)[first_open_chunk:]
    if len(tail) == 0:
        return 0.0
    return float(max(0.0, float(tail.max()) - degree_target(n, eps, sigma1, gamma, x)))


def step_probability_from(i: int, eps: float, gamma: float, sigma2: float, n: int,
                          e_dev: float, d_dev: float) -> tuple[float, float]:
    """p_i = εγ/d(iε) + c_i with c_i = (2 d_i d(iε) + 2εγ e_i) / (σ2 d(iε)³ n)."""
    d = d_of(gamma, i * eps)
    c = (2.0 * d_dev * d + 2.0 * eps * gamma * e_dev) / (sigma2 * d ** 3 * n)
    return eps * gamma / d + c, c
