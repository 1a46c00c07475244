"""Group confusion rates and fairness / utility metrics.

Rates with an empty denominator are `None`, never silently 0, so a
degenerate shard (e.g. a group with no positives) is visible downstream.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, UndefinedMetricError

log = logging.getLogger(__name__)


@dataclass
class RateSet:
    """Confusion rates for one population (a group, or everyone)."""

    tpr: float | None
    fpr: float | None
    fnr: float | None
    tnr: float | None
    n_pos: int
    n_neg: int
    pos_rate: float | None  # Pr(predicted positive)


@dataclass
class GroupRates:
    overall: RateSet
    by_group: dict[int, RateSet]


def _as_binary(v, name: str) -> np.ndarray:
    a = np.asarray(v)
    if not np.isin(a, (0, 1)).all():
        raise ShapeError(f"{name} must contain only 0/1 entries")
    return a.astype(np.int64)


def _rate_set(pred: np.ndarray, y: np.ndarray) -> RateSet:
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    tp = int(((pred == 1) & (y == 1)).sum())
    fp = int(((pred == 1) & (y == 0)).sum())
    tpr = tp / n_pos if n_pos else None
    fnr = 1.0 - tpr if n_pos else None
    fpr = fp / n_neg if n_neg else None
    tnr = 1.0 - fpr if n_neg else None
    total = n_pos + n_neg
    pos_rate = float((pred == 1).mean()) if total else None
    return RateSet(tpr, fpr, fnr, tnr, n_pos, n_neg, pos_rate)


def group_rates(predictions, labels, groups) -> GroupRates:
    """Confusion rates overall and per binary group, by direct counting."""
    pred = _as_binary(predictions, "predictions")
    y = _as_binary(labels, "labels")
    g = _as_binary(groups, "groups")
    if not (pred.shape == y.shape == g.shape):
        raise ShapeError(
            f"length mismatch: {pred.shape}, {y.shape}, {g.shape}"
        )
    return GroupRates(
        overall=_rate_set(pred, y),
        by_group={gv: _rate_set(pred[g == gv], y[g == gv]) for gv in (0, 1)},
    )


def dpd(predictions, groups) -> float:
    """Demographic parity difference |Pr(Y=1|G=1) - Pr(Y=1|G=0)|."""
    pred = _as_binary(predictions, "predictions")
    g = _as_binary(groups, "groups")
    if pred.shape != g.shape:
        raise ShapeError("predictions and groups differ in length")
    rates = []
    for gv in (0, 1):
        mask = g == gv
        if not mask.any():
            raise UndefinedMetricError(f"group {gv} is empty")
        rates.append(pred[mask].mean())
    return float(abs(rates[1] - rates[0]))


def eod(predictions, labels, groups) -> float:
    """Equalized-odds difference: the larger of the TPR gap and FPR gap."""
    r = group_rates(predictions, labels, groups)
    g0, g1 = r.by_group[0], r.by_group[1]
    if g0.tpr is None or g1.tpr is None:
        raise UndefinedMetricError("a group has no positive samples")
    if g0.fpr is None or g1.fpr is None:
        raise UndefinedMetricError("a group has no negative samples")
    return float(max(abs(g0.tpr - g1.tpr), abs(g0.fpr - g1.fpr)))


def dp_dis(predictions, groups) -> float:
    """Max deviation of a group's positive-prediction rate from the overall rate."""
    pred = _as_binary(predictions, "predictions")
    g = _as_binary(groups, "groups")
    if pred.shape != g.shape:
        raise ShapeError("predictions and groups differ in length")
    if pred.size == 0:
        raise UndefinedMetricError("empty population")
    overall = pred.mean()
    devs = []
    for gv in np.unique(g):
        devs.append(abs(pred[g == gv].mean() - overall))
    return float(max(devs))


def fned_fped(rates: GroupRates) -> tuple[float, float]:
    """Summed absolute deviation of group FNR / FPR from the overall rate.

    Groups whose rate is undefined are skipped (and logged). The max-deviation
    variant is logged at debug level for diagnostics.
    """
    fned = fped = 0.0
    fn_devs, fp_devs = [], []
    for gv, rs in rates.by_group.items():
        if rs.fnr is None or rates.overall.fnr is None:
            log.warning("FNED: skipping group %s (undefined FNR)", gv)
        else:
            fn_devs.append(abs(rs.fnr - rates.overall.fnr))
        if rs.fpr is None or rates.overall.fpr is None:
            log.warning("FPED: skipping group %s (undefined FPR)", gv)
        else:
            fp_devs.append(abs(rs.fpr - rates.overall.fpr))
    fned = float(sum(fn_devs))
    fped = float(sum(fp_devs))
    log.debug(
        "FNED/FPED max-deviation variant: %s / %s",
        max(fn_devs, default=0.0),
        max(fp_devs, default=0.0),
    )
    return fned, fped


def utility(predictions, labels) -> float:
    """Plain accuracy."""
    pred = _as_binary(predictions, "predictions")
    y = _as_binary(labels, "labels")
    if pred.shape != y.shape:
        raise ShapeError("predictions and labels differ in length")
    if pred.size == 0:
        raise UndefinedMetricError("empty population")
    return float((pred == y).mean())


def discrepancy(per_client_accuracies) -> float:
    """Spread (max - min) of client accuracies."""
    acc = np.asarray(per_client_accuracies, dtype=np.float64)
    if acc.size == 0:
        raise UndefinedMetricError("no clients")
    return float(acc.max() - acc.min())
