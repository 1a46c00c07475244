"""Fairness-constraint functions and the two-player constrained trainer.

Each client poses training as: minimize BCE subject to every group's FNR and
FPR staying within an allowed deviation of the overall rates. The model
player descends on BCE plus dual-weighted differentiable surrogates of the
constraints; the dual player ascends on the exact (indicator) constraint
values measured on the validation split.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import nn
from .errors import ConfigurationError, NumericError
from .metrics import GroupRates, group_rates

log = logging.getLogger(__name__)

N_CONSTRAINTS = 4  # FNR above / FNR below / FPR above / FPR below


@dataclass
class ConstraintSpec:
    tau_fnr: float = 0.1
    tau_fpr: float = 0.08
    surrogate: str = "sigmoid"  # or "hinge"
    kappa: float = 5.0
    eta_lambda: float = 0.05
    radius: float = 10.0  # l1 bound on the dual vector
    inner_iters: int = 30
    warmup_epochs: int = 1
    # optional theoretical step-size schedule bounds; all three enable it
    b_theta: float | None = None
    b_delta_hat: float | None = None
    b_delta: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.tau_fnr <= 1.0 and 0.0 <= self.tau_fpr <= 1.0):
            raise ConfigurationError("tau values must lie in [0, 1]")
        if self.kappa <= 0 or self.eta_lambda <= 0 or self.radius <= 0:
            raise ConfigurationError("kappa, eta_lambda and radius must be positive")
        if self.surrogate not in ("sigmoid", "hinge"):
            raise ConfigurationError(f"unknown surrogate {self.surrogate!r}")
        if self.inner_iters < 0 or self.warmup_epochs < 0:
            raise ConfigurationError("inner_iters and warmup_epochs must be >= 0")

    def schedule_step_sizes(self, horizon: int) -> tuple[float, float]:
        """Theoretical step sizes from the supplied norm bounds."""
        if None in (self.b_theta, self.b_delta_hat, self.b_delta):
            raise ConfigurationError("schedule requires b_theta, b_delta_hat, b_delta")
        m = N_CONSTRAINTS
        eta_theta = self.b_theta / (self.b_delta_hat * math.sqrt(2 * horizon))
        eta_lam = math.sqrt((m + 1) * math.log(m + 1) / (horizon * self.b_delta**2))
        return eta_theta, eta_lam

    @property
    def use_schedule(self) -> bool:
        return None not in (self.b_theta, self.b_delta_hat, self.b_delta)


@dataclass
class DualState:
    lam: np.ndarray = field(default_factory=lambda: np.zeros(N_CONSTRAINTS))


def constraint_values(rates: GroupRates, spec: ConstraintSpec) -> np.ndarray:
    """Four deviation constraints; positive entries are violation magnitudes.

    [0] max_g FNR_g - FNR_overall - tau_fnr
    [1] FNR_overall - min_g FNR_g - tau_fnr
    [2] max_g FPR_g - FPR_overall - tau_fpr
    [3] FPR_overall - min_g FPR_g - tau_fpr

    On a shard holding only one group the deviations are identically zero, so
    the constraints degrade to their absolute form: the shard's own rate must
    stay below the threshold ([0]/[2]; [1]/[3] are inactive). A rate whose
    denominator is empty leaves the affected constraints inactive (with a
    warning), never silently satisfied at 0.
    """
    out = np.empty(N_CONSTRAINTS)
    diversity = sum(
        1 for r in rates.by_group.values() if (r.n_pos + r.n_neg) > 0
    )
    for ci, (attr, tau) in enumerate(
        [("fnr", spec.tau_fnr), ("fpr", spec.tau_fpr)]
    ):
        overall = getattr(rates.overall, attr)
        grp = [getattr(r, attr) for r in rates.by_group.values()]
        grp = [v for v in grp if v is not None]
        if overall is None or not grp:
            log.warning("constraint on %s inactive: undefined rates", attr.upper())
            out[2 * ci] = -tau
            out[2 * ci + 1] = -tau
        elif diversity < 2:
            out[2 * ci] = overall - tau
            out[2 * ci + 1] = -tau
        else:
            out[2 * ci] = max(grp) - overall - tau
            out[2 * ci + 1] = overall - min(grp) - tau
    return out


def surrogate_rates(
    net: nn.DenseNet,
    X: np.ndarray,
    labels: np.ndarray,
    groups: np.ndarray,
    kappa: float,
    kind: str,
) -> tuple[dict, dict]:
    """Differentiable FNR/FPR estimates per group and overall.

    Returns (values, dlogits) keyed by ("fnr"|"fpr", group) with group in
    {0, 1, "overall"}; dlogits maps each key to d(rate)/d(logit) per sample.
    Missing cells (no positives / negatives) contribute value None and zero
    gradient.
    """
    logits, _ = nn.forward(net, X)
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits in surrogate_rates")
    y = np.asarray(labels)
    g = np.asarray(groups)
    n = logits.size
    values: dict = {}
    dlogits: dict = {}

    def one(mask: np.ndarray, sign: float, key):
        # sign=-1 estimates the miss rate on positives (FNR), +1 the false
        # alarm rate on negatives (FPR)
        cnt = int(mask.sum())
        grad = np.zeros(n)
        if cnt == 0:
            values[key] = None
            dlogits[key] = grad
            return
        z = logits[mask]
        if kind == "sigmoid":
            s = nn.sigmoid(sign * kappa * z)
            val = s.mean()
            grad[mask] = sign * kappa * s * (1.0 - s) / cnt
        else:  # hinge: mean of min(1, max(0, 1 + sign*kappa*z))
            raw = 1.0 + sign * kappa * z
            val = np.clip(raw, 0.0, 1.0).mean()
            active = (raw > 0.0) & (raw < 1.0)
            gm = np.zeros(cnt)
            gm[active] = sign * kappa / cnt
            grad[mask] = gm
        values[key] = float(val)
        dlogits[key] = grad

    for gv in (0, 1, "overall"):
        sel = np.ones(n, dtype=bool) if gv == "overall" else (g == gv)
        one(sel & (y == 1), -1.0, ("fnr", gv))
        one(sel & (y == 0), +1.0, ("fpr", gv))
    return values, dlogits


def _surrogate_constraint_dlogits(
    net: nn.DenseNet,
    X: np.ndarray,
    y: np.ndarray,
    g: np.ndarray,
    spec: ConstraintSpec,
    absolute: bool = False,
) -> list[np.ndarray]:
    """d(surrogate g_i)/d(logit) for the four constraints on this batch.

    The max/min group in each constraint is the one realized by the exact
    indicator rates on the batch (a valid subgradient choice, ties toward the
    lower group index); cells missing from the batch contribute zero. With
    ``absolute`` (single-group shard) the [0]/[2] constraints bound the
    overall rate directly and [1]/[3] are inactive.
    """
    logits, _ = nn.forward(net, X)
    exact = group_rates((logits >= 0.0).astype(int), y, g)
    _, dl = surrogate_rates(net, X, y, g, spec.kappa, spec.surrogate)

    if absolute:
        zero = np.zeros(logits.size)
        return [dl[("fnr", "overall")], zero, dl[("fpr", "overall")], zero]

    grads = []
    for attr in ("fnr", "fpr"):
        grp = {
            gv: getattr(exact.by_group[gv], attr)
            for gv in (0, 1)
            if getattr(exact.by_group[gv], attr) is not None
        }
        zero = np.zeros(logits.size)
        if not grp or getattr(exact.overall, attr) is None:
            grads.extend([zero, zero])
            continue
        # ties toward the lower group index
        g_max = min((gv for gv, v in grp.items() if v == max(grp.values())))
        g_min = min((gv for gv, v in grp.items() if v == min(grp.values())))
        ov = dl[(attr, "overall")]
        grads.append(dl[(attr, g_max)] - ov)  # max_g rate - overall - tau
        grads.append(ov - dl[(attr, g_min)])  # overall - min_g rate - tau
    return grads


def theta_step(
    net: nn.DenseNet,
    X: np.ndarray,
    y: np.ndarray,
    g: np.ndarray,
    dual: DualState,
    spec: ConstraintSpec,
    opt: nn.OptimizerState,
    absolute: bool = False,
) -> tuple[nn.DenseNet, nn.OptimizerState]:
    """One model-player step on BCE + sum_i lambda_i * surrogate g_i."""
    logits, probs = nn.forward(net, X)
    dlogit = (probs - np.asarray(y, dtype=np.float64)) / len(y)
    if np.any(dual.lam != 0.0):
        for lam_i, gi in zip(
            dual.lam, _surrogate_constraint_dlogits(net, X, y, g, spec, absolute)
        ):
            if lam_i != 0.0:
                dlogit = dlogit + lam_i * gi
    grad = nn.backward_from_dlogits(net, X, dlogit)
    new_params, new_opt = nn.opt_step(net.params, grad, opt)
    return net.with_params(new_params), new_opt


def lambda_step(
    dual: DualState, g: np.ndarray, eta_lambda: float, radius: float
) -> DualState:
    """Projected dual ascent: clamp to >= 0, then radial l1 rescale."""
    lam = dual.lam + eta_lambda * np.asarray(g, dtype=np.float64)
    lam = np.maximum(lam, 0.0)
    norm = lam.sum()
    if norm > radius:
        lam = lam * (radius / norm)
    return DualState(lam)


@dataclass
class TraceRecord:
    iteration: int
    lam: np.ndarray
    g: np.ndarray
    train_loss: float
    val_loss: float


@dataclass
class ShardData:
    """Train/validation arrays for one client (features, labels, groups)."""

    X_train: np.ndarray
    y_train: np.ndarray
    g_train: np.ndarray
    X_val: np.ndarray
    y_val: np.ndarray
    g_val: np.ndarray


class _Minibatcher:
    """Reshuffling minibatch cycle with a private RNG."""

    def __init__(self, n: int, batch_size: int, rng: np.random.Generator):
        self.n = n
        self.batch_size = min(batch_size, n)
        self.rng = rng
        self._queue: list[np.ndarray] = []

    def next(self) -> np.ndarray:
        if not self._queue:
            perm = self.rng.permutation(self.n)
            self._queue = [
                perm[i : i + self.batch_size]
                for i in range(0, self.n, self.batch_size)
            ][::-1]
        return self._queue.pop()


def _validation_state(net, data: ShardData, spec) -> tuple[np.ndarray, float]:
    logits, probs = nn.forward(net, data.X_val)
    rates = group_rates((logits >= 0.0).astype(int), data.y_val, data.g_val)
    g = constraint_values(rates, spec)
    return g, nn.bce_loss(probs, data.y_val)


def run_constrained_training(
    net: nn.DenseNet,
    data: ShardData,
    spec: ConstraintSpec,
    opt_config: nn.OptimizerConfig,
    seed: int,
    batch_size: int = 64,
) -> tuple[nn.DenseNet, list[TraceRecord]]:
    """Warmup epochs of plain training, then the constrained two-player game.

    Returns the recorded iterate minimizing max_i max(0, g_i) on the
    validation split, ties broken by lowest validation BCE, plus the trace.
    """
    if data.X_train.shape[0] == 0:
        raise ConfigurationError("empty training split")
    if data.X_val.shape[0] == 0:
        raise ConfigurationError("empty validation split")
    rng = np.random.default_rng(seed)
    batcher = _Minibatcher(data.X_train.shape[0], batch_size, rng)

    if spec.use_schedule:
        eta_theta, eta_lambda = spec.schedule_step_sizes(max(spec.inner_iters, 1))
        opt_config = replace(opt_config, learning_rate=eta_theta)
    else:
        eta_lambda = spec.eta_lambda

    opt = nn.OptimizerState.fresh(opt_config, net.params.size)
    n_batches = math.ceil(data.X_train.shape[0] / batcher.batch_size)
    for _ in range(spec.warmup_epochs * n_batches):
        idx = batcher.next()
        grad = nn.backward(net, data.X_train[idx], data.y_train[idx])
        new_params, opt = nn.opt_step(net.params, grad, opt)
        net = net.with_params(new_params)

    absolute = (
        np.unique(np.concatenate([data.g_train, data.g_val])).size < 2
    )
    dual = DualState()
    trace: list[TraceRecord] = []
    candidates: list[tuple[float, float, nn.DenseNet]] = []

    def record(iteration: int, current: nn.DenseNet, train_loss: float):
        g_val, val_loss = _validation_state(current, data, spec)
        trace.append(TraceRecord(iteration, dual.lam.copy(), g_val, train_loss, val_loss))
        candidates.append((float(np.maximum(g_val, 0.0).max()), val_loss, current))
        return g_val

    _, p0 = nn.forward(net, data.X_train)
    g_val = record(0, net, nn.bce_loss(p0, data.y_train))
    for j in range(1, spec.inner_iters + 1):
        idx = batcher.next()
        Xb, yb, gb = data.X_train[idx], data.y_train[idx], data.g_train[idx]
        net, opt = theta_step(net, Xb, yb, gb, dual, spec, opt, absolute)
        dual = lambda_step(dual, g_val, eta_lambda, spec.radius)
        _, pb = nn.forward(net, Xb)
        g_val = record(j, net, nn.bce_loss(pb, yb))

    best = min(candidates, key=lambda c: (c[0], c[1]))
    return best[2], trace
