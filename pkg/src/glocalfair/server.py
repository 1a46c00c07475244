"""Server side: Gini coefficients over model weights, clustered aggregation,
and the plain data-proportional averaging baseline.

Client updates are grouped by 1-D k-means on their Gini coefficients (solved
exactly by dynamic programming on the sorted values, cluster count picked by
the elbow rule) and each cluster is down-weighted exponentially in its mean
Gini, so flatter (fairer) weight distributions dominate the aggregate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericError, ShapeError

log = logging.getLogger(__name__)


@dataclass
class ClientUpdate:
    """One client's contribution to a round."""

    client_id: int
    params: np.ndarray
    sample_count: int
    gini: float | None = None

    def __post_init__(self):
        if self.sample_count < 1:
            raise ConfigurationError("sample_count must be >= 1")


@dataclass
class ClusterSummary:
    cluster_id: int
    members: list[int]
    mean_gini: float
    data_total: int
    weight: float


def gini(params: np.ndarray) -> float:
    """Gini coefficient of the absolute parameter values.

    Sort-based formula G = (2 sum_i i*x_(i)) / (w * sum x) - (w+1)/w over the
    ascending-sorted absolute values; equals the pairwise double-sum
    sum_ab |x_a - x_b| / (2 w^2 mean).
    """
    p = np.asarray(params, dtype=np.float64).ravel()
    if p.size == 0:
        raise ConfigurationError("gini of empty vector")
    x = np.sort(np.abs(p))
    total = x.sum()
    if total == 0.0:
        log.warning("gini: all parameters are zero; returning 0 (degenerate)")
        return 0.0
    w = x.size
    idx = np.arange(1, w + 1)
    return float(2.0 * (idx * x).sum() / (w * total) - (w + 1) / w)


def lorenz_points(params: np.ndarray) -> np.ndarray:
    """Cumulative |weight| share vs population fraction, from (0,0) to (1,1)."""
    p = np.asarray(params, dtype=np.float64).ravel()
    if p.size == 0:
        raise ConfigurationError("lorenz_points of empty vector")
    x = np.sort(np.abs(p))
    total = x.sum()
    w = x.size
    pop = np.arange(w + 1) / w
    if total == 0.0:
        mass = pop.copy()  # degenerate: treat as perfect equality
    else:
        mass = np.concatenate(([0.0], np.cumsum(x) / total))
    return np.column_stack([pop, mass])


def _segment_sse_fn(sorted_vals: np.ndarray):
    """Closure computing SSE of sorted_vals[i:j] from prefix sums, O(1)."""
    s1 = np.concatenate(([0.0], np.cumsum(sorted_vals)))
    s2 = np.concatenate(([0.0], np.cumsum(sorted_vals**2)))

    def sse(i: int, j: int) -> float:
        n = j - i
        if n <= 0:
            return 0.0
        s = s1[j] - s1[i]
        return (s2[j] - s2[i]) - s * s / n

    return sse


def _kmeans_1d_dp(sorted_vals: np.ndarray, k: int) -> tuple[float, list[int]]:
    """Exact 1-D k-means via contiguous-segment DP. Returns (SSE, boundaries)."""
    n = sorted_vals.size
    sse = _segment_sse_fn(sorted_vals)
    # cost[m][j]: best SSE of first j points in m clusters
    INF = float("inf")
    cost = np.full((k + 1, n + 1), INF)
    split = np.zeros((k + 1, n + 1), dtype=np.int64)
    cost[0][0] = 0.0
    for m in range(1, k + 1):
        for j in range(m, n + 1):
            best, best_i = INF, m - 1
            for i in range(m - 1, j):
                c = cost[m - 1][i] + sse(i, j)
                if c < best:
                    best, best_i = c, i
            cost[m][j] = best
            split[m][j] = best_i
    # recover segment boundaries
    bounds = [n]
    j = n
    for m in range(k, 0, -1):
        j = int(split[m][j])
        bounds.append(j)
    bounds.reverse()
    return float(cost[k][n]), bounds  # bounds: [0, ..., n], k+1 entries


def cluster_ginis(ginis, k_max: int) -> tuple[int, np.ndarray]:
    """Cluster Gini values; returns (cluster count p, assignment array).

    Exact 1-D k-means per k, then p = argmax of the discrete second difference
    of SSE(k) (the elbow); p=1 when n<3 or the SSE curve is flat within 1e-12.
    Cluster ids are 0..p-1 in ascending Gini order.
    """
    vals = np.asarray(ginis, dtype=np.float64).ravel()
    n = vals.size
    if n == 0:
        raise ConfigurationError("cluster_ginis of empty input")
    if k_max < 1:
        raise ConfigurationError("k_max must be >= 1")
    order = np.argsort(vals, kind="stable")
    sorted_vals = vals[order]
    k_hi = min(k_max, n, len(np.unique(sorted_vals)))
    sses, bound_sets = [], []
    for k in range(1, k_hi + 1):
        s, b = _kmeans_1d_dp(sorted_vals, k)
        sses.append(s)
        bound_sets.append(b)
    if n < 3 or sses[0] < 1e-12:
        p = 1
    elif k_hi < 3:
        p = 1
    else:
        # second difference defined at interior k only; ties -> smaller p
        second = [sses[k - 2] - 2 * sses[k - 1] + sses[k] for k in range(2, k_hi)]
        p = 2 + int(np.argmax(second))
    bounds = bound_sets[p - 1]
    assignment = np.empty(n, dtype=np.int64)
    for cid in range(p):
        seg = order[bounds[cid] : bounds[cid + 1]]
        assignment[seg] = cid
    return p, assignment


def fedavg(updates: list[ClientUpdate]) -> np.ndarray:
    """Data-proportional average of client parameter vectors."""
    coeffs, mat = _canonical(updates)
    d = coeffs  # here coeffs are raw sample counts
    total = d.sum()
    return (d / total) @ mat


def _canonical(updates: list[ClientUpdate]) -> tuple[np.ndarray, np.ndarray]:
    """Sample counts and stacked params, sorted by client id ascending."""
    if not updates:
        raise ConfigurationError("no updates to aggregate")
    ordered = sorted(updates, key=lambda u: u.client_id)
    dim = ordered[0].params.size
    for u in ordered:
        if u.params.size != dim:
            raise ShapeError("updates have inconsistent parameter lengths")
    mat = np.stack([u.params for u in ordered])
    counts = np.array([u.sample_count for u in ordered], dtype=np.float64)
    return counts, mat


def aggregate(
    global_params: np.ndarray,
    updates: list[ClientUpdate],
    gamma: float,
    k_max: int,
) -> tuple[np.ndarray, list[ClusterSummary]]:
    """Gini-clustered, fairness-weighted aggregation.

    Per-update coefficient c_j = d_j * exp(-gamma * meanGini(cluster of j)) / Z
    with Z = sum_i D_i * exp(-gamma * meanGini_i); the final sum runs over
    updates in client-id order, matching fedavg bitwise when gamma=0.
    Non-finite updates are rejected and logged.
    """
    kept = []
    for u in updates:
        if np.all(np.isfinite(u.params)):
            kept.append(u)
        else:
            log.error("rejecting non-finite update from client %d", u.client_id)
    if not kept:
        raise ConfigurationError("no finite updates to aggregate")
    ordered = sorted(kept, key=lambda u: u.client_id)
    for u in ordered:
        if u.gini is None:
            u.gini = gini(u.params)
    ginis = np.array([u.gini for u in ordered])
    p, assignment = cluster_ginis(ginis, k_max)
    counts, mat = _canonical(ordered)
    if counts.sum() == 0:
        raise ConfigurationError("zero total data")

    mean_g = np.array([ginis[assignment == c].mean() for c in range(p)])
    data_tot = np.array(
        [counts[assignment == c].sum() for c in range(p)], dtype=np.float64
    )
    factor = np.exp(-gamma * mean_g)
    z = (data_tot * factor).sum()
    coeffs = counts * factor[assignment] / z
    new_params = coeffs @ mat
    if not np.all(np.isfinite(new_params)):
        raise NumericError("aggregation produced non-finite parameters")

    summaries = []
    ids = np.array([u.client_id for u in ordered])
    for c in range(p):
        summaries.append(
            ClusterSummary(
                cluster_id=c,
                members=[int(i) for i in ids[assignment == c]],
                mean_gini=float(mean_g[c]),
                data_total=int(data_tot[c]),
                weight=float(data_tot[c] * factor[c] / z),
            )
        )
    return new_params, summaries


def cluster_diagnostics(updates: list[ClientUpdate], k_max: int) -> list[ClusterSummary]:
    """Cluster summaries with data-proportional weights (no reweighting).

    Used by the plain-averaging mode so its round log carries the same
    diagnostics as the fairness-aware mode.
    """
    ordered = sorted(updates, key=lambda u: u.client_id)
    for u in ordered:
        if u.gini is None:
            u.gini = gini(u.params)
    ginis = np.array([u.gini for u in ordered])
    p, assignment = cluster_ginis(ginis, k_max)
    counts = np.array([u.sample_count for u in ordered], dtype=np.float64)
    ids = np.array([u.client_id for u in ordered])
    total = counts.sum()
    out = []
    for c in range(p):
        mask = assignment == c
        out.append(
            ClusterSummary(
                cluster_id=c,
                members=[int(i) for i in ids[mask]],
                mean_gini=float(ginis[mask].mean()),
                data_total=int(counts[mask].sum()),
                weight=float(counts[mask].sum() / total),
            )
        )
    return out
