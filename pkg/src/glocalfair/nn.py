"""Minimal dense neural-network engine in double precision.

A network is a flat float64 parameter vector plus a shape description:
per layer, a row-major [out x in] weight matrix followed by a bias vector.
Hidden layers use ReLU, the output is a single logit. Everything here is
pure and deterministic: repeated calls with identical inputs give bitwise
identical outputs.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    BadMagicError,
    ConfigurationError,
    NumericError,
    ParamCountMismatchError,
    ShapeError,
    TruncatedPayloadError,
    VersionMismatchError,
)

CHECKPOINT_MAGIC = b"GLF1"
CHECKPOINT_VERSION = 1


def layer_shapes(input_dim: int, hidden_dims: list[int]) -> list[tuple[int, int]]:
    """(out, in) shape of each weight matrix, input to output order."""
    dims = [input_dim] + list(hidden_dims) + [1]
    return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]


def param_count(input_dim: int, hidden_dims: list[int]) -> int:
    return sum(o * i + o for o, i in layer_shapes(input_dim, hidden_dims))


@dataclass
class DenseNet:
    """Feed-forward binary classifier with a flat parameter vector."""

    input_dim: int
    hidden_dims: list[int]
    params: np.ndarray
    seed: int = 0

    def __post_init__(self):
        expected = param_count(self.input_dim, self.hidden_dims)
        if self.params.shape != (expected,):
            raise ShapeError(
                f"params has shape {self.params.shape}, expected ({expected},)"
            )

    def with_params(self, params: np.ndarray) -> "DenseNet":
        return replace(self, params=np.asarray(params, dtype=np.float64))


def _check_dims(input_dim: int, hidden_dims: list[int]) -> None:
    if input_dim <= 0:
        raise ConfigurationError(f"input_dim must be positive, got {input_dim}")
    for h in hidden_dims:
        if h <= 0:
            raise ConfigurationError(f"hidden dims must be positive, got {hidden_dims}")


def init_params(input_dim: int, hidden_dims: list[int], seed: int) -> np.ndarray:
    """Glorot-uniform weights, zero biases; deterministic per (shape, seed)."""
    _check_dims(input_dim, hidden_dims)
    rng = np.random.default_rng(seed)
    parts = []
    for out, inp in layer_shapes(input_dim, hidden_dims):
        limit = np.sqrt(6.0 / (inp + out))
        parts.append(rng.uniform(-limit, limit, size=out * inp))
        parts.append(np.zeros(out))
    return np.concatenate(parts)


def make_net(input_dim: int, hidden_dims: list[int], seed: int) -> DenseNet:
    return DenseNet(input_dim, list(hidden_dims), init_params(input_dim, hidden_dims, seed), seed)


def _unpack(net: DenseNet):
    """Split the flat vector into (W, b) pairs (views, no copies)."""
    layers = []
    pos = 0
    for out, inp in layer_shapes(net.input_dim, net.hidden_dims):
        w = net.params[pos : pos + out * inp].reshape(out, inp)
        pos += out * inp
        b = net.params[pos : pos + out]
        pos += out
        layers.append((w, b))
    return layers


def _forward_cached(net: DenseNet, X: np.ndarray):
    """Forward pass keeping pre/post activations for backprop."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise ShapeError(f"X has shape {X.shape}, expected (n, {net.input_dim})")
    layers = _unpack(net)
    acts = [X]
    h = X
    for w, b in layers[:-1]:
        z = h @ w.T + b
        h = np.maximum(z, 0.0)
        acts.append(h)
    w, b = layers[-1]
    logits = (acts[-1] @ w.T + b).ravel()
    return logits, acts


def sigmoid(z: np.ndarray) -> np.ndarray:
    # numerically stable on both tails
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(net: DenseNet, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Logits and logistic probabilities for each row of X."""
    logits, _ = _forward_cached(net, X)
    return logits, sigmoid(logits)


BCE_EPS = 1e-12


def bce_loss(probabilities: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy with probability clamping."""
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape:
        raise ShapeError(f"lengths differ: {p.shape} vs {y.shape}")
    if p.size == 0:
        raise ConfigurationError("bce_loss of empty input")
    p = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def backward_from_dlogits(net: DenseNet, X: np.ndarray, dlogits: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. params of any scalar loss given dloss/dlogit per row."""
    logits, acts = _forward_cached(net, X)
    dlogits = np.asarray(dlogits, dtype=np.float64)
    if dlogits.shape != logits.shape:
        raise ShapeError(f"dlogits shape {dlogits.shape} != logits {logits.shape}")
    layers = _unpack(net)
    grads = [None] * len(layers)
    delta = dlogits[:, None]  # (n, out) of current layer
    for li in range(len(layers) - 1, -1, -1):
        w, _ = layers[li]
        h_in = acts[li]
        gw = delta.T @ h_in
        gb = delta.sum(axis=0)
        grads[li] = (gw, gb)
        if li > 0:
            delta = (delta @ w) * (acts[li] > 0)
    return np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])


def backward(
    net: DenseNet,
    X: np.ndarray,
    labels: np.ndarray,
    sample_weights: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient of the weighted-mean BCE w.r.t. the flat parameter vector.

    Weights are normalized by their sum, so duplicating a sample is the same
    as doubling its weight. An all-zero weight vector yields a zero gradient.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n = X.shape[0]
    if y.shape != (n,):
        raise ShapeError(f"labels shape {y.shape} != ({n},)")
    if sample_weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(sample_weights, dtype=np.float64)
        if w.shape != (n,):
            raise ShapeError(f"sample_weights shape {w.shape} != ({n},)")
        if np.any(w < 0):
            raise ConfigurationError("sample_weights must be nonnegative")
    total = w.sum()
    if total == 0.0:
        return np.zeros_like(net.params)
    logits, _ = _forward_cached(net, X)
    p = sigmoid(logits)
    dlogits = w * (p - y) / total
    return backward_from_dlogits(net, X, dlogits)


@dataclass
class OptimizerConfig:
    kind: str = "sgd-momentum"  # or "adam"
    learning_rate: float = 0.01
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.kind not in ("sgd-momentum", "adam"):
            raise ConfigurationError(f"unknown optimizer kind {self.kind!r}")


@dataclass
class OptimizerState:
    config: OptimizerConfig
    velocity: np.ndarray = None  # sgd-momentum, or Adam first moment
    second_moment: np.ndarray = None
    step: int = 0

    @classmethod
    def fresh(cls, config: OptimizerConfig, n_params: int) -> "OptimizerState":
        return cls(config, np.zeros(n_params), np.zeros(n_params), 0)


def opt_step(
    params: np.ndarray, gradient: np.ndarray, state: OptimizerState
) -> tuple[np.ndarray, OptimizerState]:
    """One SGD-momentum or Adam update; returns fresh arrays, state advanced."""
    g = np.asarray(gradient, dtype=np.float64)
    if g.shape != params.shape:
        raise ShapeError(f"gradient shape {g.shape} != params {params.shape}")
    if not np.all(np.isfinite(g)):
        raise NumericError("non-finite gradient; step aborted")
    cfg = state.config
    eta = cfg.learning_rate
    if cfg.kind == "sgd-momentum":
        v = cfg.momentum * state.velocity + g
        new_params = params - eta * v
        new_state = OptimizerState(cfg, v, state.second_moment, state.step + 1)
    else:
        t = state.step + 1
        m = cfg.beta1 * state.velocity + (1.0 - cfg.beta1) * g
        s = cfg.beta2 * state.second_moment + (1.0 - cfg.beta2) * g * g
        m_hat = m / (1.0 - cfg.beta1**t)
        s_hat = s / (1.0 - cfg.beta2**t)
        new_params = params - eta * m_hat / (np.sqrt(s_hat) + cfg.eps)
        new_state = OptimizerState(cfg, m, s, t)
    if not np.all(np.isfinite(new_params)):
        raise NumericError("non-finite parameters after optimizer step")
    return new_params, new_state


def save_checkpoint(net: DenseNet, path) -> None:
    header = json.dumps(
        {
            "format_version": CHECKPOINT_VERSION,
            "input_dim": net.input_dim,
            "hidden_dims": list(net.hidden_dims),
            "activations": {"hidden": "relu", "output": "logistic"},
            "param_count": int(net.params.size),
            "creation_seed": int(net.seed),
        }
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        f.write(np.asarray(net.params, dtype="<f8").tobytes())


def load_checkpoint(path) -> DenseNet:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise BadMagicError(f"bad magic {blob[:4]!r}")
    if len(blob) < 8:
        raise TruncatedPayloadError("file ends inside the header length field")
    (hlen,) = struct.unpack("<I", blob[4:8])
    if len(blob) < 8 + hlen:
        raise TruncatedPayloadError("file ends inside the header")
    try:
        header = json.loads(blob[8 : 8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise TruncatedPayloadError(f"unreadable header: {e}") from e
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise VersionMismatchError(
            f"format version {header.get('format_version')} != {CHECKPOINT_VERSION}"
        )
    n = header["param_count"]
    payload = blob[8 + hlen :]
    if len(payload) < 8 * n:
        raise TruncatedPayloadError(
            f"payload has {len(payload)} bytes, header claims {8 * n}"
        )
    params = np.frombuffer(payload[: 8 * n], dtype="<f8").astype(np.float64)
    expected = param_count(header["input_dim"], header["hidden_dims"])
    if n != expected:
        raise ParamCountMismatchError(
            f"header param_count {n} inconsistent with architecture ({expected})"
        )
    return DenseNet(
        header["input_dim"], list(header["hidden_dims"]), params, header["creation_seed"]
    )
