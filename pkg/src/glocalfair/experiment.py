"""Config-driven federated round loop, evaluation and reporting.

A run directory holds config.json, a JSON-Lines metrics log (one object per
round), the partition manifest and the final checkpoint. Everything logged
is fully determined by the config, including under parallel client workers.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .client import LocalResult, client_seed, local_update
from .constraints import ConstraintSpec
from .data import (
    ClientShard,
    SynthSpec,
    TabularDataset,
    load_adult_csv,
    partition,
    split_70_10_20,
    synth_generate,
)
from .errors import ConfigurationError, GlocalfairError, UndefinedMetricError
from .metrics import discrepancy, dp_dis, dpd, eod, utility
from .server import (
    ClientUpdate,
    ClusterSummary,
    aggregate,
    cluster_diagnostics,
    fedavg,
)

log = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    dataset: dict
    n_clients: int = 4
    partition: dict = field(default_factory=lambda: {"mode": "dirichlet", "alpha": 10.0})
    rounds: int = 30
    participation: float = 0.75
    hidden_dims: list[int] = field(default_factory=lambda: [32, 16])
    optimizer: dict = field(
        default_factory=lambda: {"kind": "sgd-momentum", "learning_rate": 0.01, "momentum": 0.9}
    )
    constraints: dict = field(default_factory=dict)
    batch_size: int = 64
    gamma: float = 0.6
    k_max: int = 10
    aggregation: str = "glocalfair"
    seed: int = 0
    out_dir: str = "runs/run"
    attribute: str | None = None  # sensitive attribute used in the constraints

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigurationError("rounds must be >= 1")
        if not (0.0 < self.participation <= 1.0):
            raise ConfigurationError("participation must be in (0, 1]")
        if math.ceil(self.participation * self.n_clients) < 1:
            raise ConfigurationError("participation selects no client")
        if self.gamma < 0:
            raise ConfigurationError("gamma must be >= 0")
        if self.aggregation not in ("glocalfair", "fedavg"):
            raise ConfigurationError(f"unknown aggregation mode {self.aggregation!r}")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def constraint_spec(self) -> ConstraintSpec:
        return ConstraintSpec(**self.constraints)

    def optimizer_config(self) -> nn.OptimizerConfig:
        return nn.OptimizerConfig(**self.optimizer)


def build_dataset(cfg: ExperimentConfig) -> TabularDataset:
    ds = dict(cfg.dataset)
    kind = ds.pop("type", None)
    if kind == "adult_csv":
        return load_adult_csv(ds["path"], ds.get("schema"))
    if kind == "synthetic":
        seed = ds.pop("seed", cfg.seed)
        spec = SynthSpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in ds.items()})
        return synth_generate(spec, seed)
    raise ConfigurationError(f"unknown dataset type {kind!r}")


def build_shards(cfg: ExperimentConfig, dataset: TabularDataset) -> list[ClientShard]:
    mode = cfg.partition.get("mode")
    if mode == "four-combination":
        shards = partition(dataset, 4, "four-combination", cfg.seed)
    elif mode == "dirichlet":
        shards = partition(
            dataset,
            cfg.n_clients,
            float(cfg.partition["alpha"]),
            cfg.seed,
            attribute=cfg.attribute,
            min_samples=int(cfg.partition.get("min_samples", 20)),
        )
    else:
        raise ConfigurationError(f"unknown partition mode {mode!r}")
    for shard in shards:
        split_70_10_20(shard, client_seed(cfg.seed, 0, 10_000 + shard.client_id))
    return shards


def _predict(net: nn.DenseNet, X: np.ndarray) -> np.ndarray:
    logits, _ = nn.forward(net, X)
    return (logits >= 0.0).astype(np.int64)


def _safe(fn, *args) -> float | None:
    try:
        return fn(*args)
    except UndefinedMetricError:
        return None


def _mean_std(values: list[float | None]) -> dict:
    defined = [v for v in values if v is not None]
    return {
        "values": values,
        "mean": float(np.mean(defined)) if defined else None,
        "std": float(np.std(defined)) if defined else None,
        "excluded": len(values) - len(defined),
    }


def evaluate(
    net: nn.DenseNet,
    dataset: TabularDataset,
    shards: list[ClientShard],
    attributes: list[str],
) -> dict:
    """Global metrics on the pooled client test splits, local per client."""
    test_idx = np.sort(np.concatenate([s.test for s in shards]))
    pred = _predict(net, dataset.features[test_idx])
    y = dataset.labels[test_idx]
    global_metrics = {"utility": utility(pred, y)}
    for attr in attributes:
        g = dataset.sensitive[attr][test_idx]
        global_metrics[attr] = {
            "eod": _safe(eod, pred, y, g),
            "dpd": _safe(dpd, pred, g),
            "dp_dis": _safe(dp_dis, pred, g),
        }
    accs = []
    local_fair = {attr: {"eod": [], "dp_dis": []} for attr in attributes}
    for shard in shards:
        pc = _predict(net, dataset.features[shard.test])
        yc = dataset.labels[shard.test]
        accs.append(utility(pc, yc))
        for attr in attributes:
            gc = dataset.sensitive[attr][shard.test]
            local_fair[attr]["eod"].append(_safe(eod, pc, yc, gc))
            local_fair[attr]["dp_dis"].append(_safe(dp_dis, pc, gc))
    local = {
        attr: {k: _mean_std(v) for k, v in local_fair[attr].items()}
        for attr in attributes
    }
    return {
        "global": global_metrics,
        "local": local,
        "client_accuracies": accs,
        "dis": discrepancy(accs),
    }


def _round_clients(
    cfg: ExperimentConfig,
    net_shape: nn.DenseNet,
    global_params: np.ndarray,
    dataset: TabularDataset,
    shards: list[ClientShard],
    selected: list[int],
    round_index: int,
    attribute: str,
    workers: int,
) -> list[LocalResult]:
    spec = cfg.constraint_spec()
    opt = cfg.optimizer_config()

    def run_one(cid: int) -> LocalResult:
        return local_update(
            global_params,
            net_shape,
            shards[cid],
            dataset,
            attribute,
            spec,
            opt,
            client_seed(cfg.seed, round_index, cid),
            cfg.batch_size,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, selected))
    else:
        results = [run_one(cid) for cid in selected]
    return sorted(results, key=lambda r: r.update.client_id)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> Path:
    """Execute the federated round loop; returns the run directory."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w", encoding="utf-8") as f:
        json.dump(cfg.to_dict(), f, indent=2, sort_keys=True)

    dataset = build_dataset(cfg)
    shards = build_shards(cfg, dataset)
    attribute = cfg.attribute or next(iter(dataset.sensitive))
    attributes = list(dataset.sensitive)
    write_partition_manifest(shards, out / "partition_manifest.txt")

    net = nn.make_net(dataset.features.shape[1], cfg.hidden_dims, cfg.seed)
    n = len(shards)
    n_select = math.ceil(cfg.participation * n)

    with open(out / "metrics.jsonl", "w", encoding="utf-8") as mlog:
        for t in range(1, cfg.rounds + 1):
            sel_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 7777, t]))
            selected = sorted(sel_rng.choice(n, size=n_select, replace=False).tolist())
            try:
                results = _round_clients(
                    cfg, net, net.params, dataset, shards, selected, t, attribute, workers
                )
                updates = [r.update for r in results]
                if cfg.aggregation == "glocalfair":
                    new_params, clusters = aggregate(net.params, updates, cfg.gamma, cfg.k_max)
                else:
                    new_params = fedavg(updates)
                    clusters = cluster_diagnostics(updates, cfg.k_max)
                net = net.with_params(new_params)
                record = evaluate(net, dataset, shards, attributes)
            except GlocalfairError:
                mlog.flush()
                log.error("run aborted in round %d", t)
                raise
            record["round"] = t
            record["selected"] = selected
            record["clusters"] = [dataclasses.asdict(c) for c in clusters]
            record["constraint_violation_max"] = {
                str(r.update.client_id): max(
                    float(np.maximum(rec.g, 0.0).max()) for rec in r.trace
                )
                for r in results
            }
            mlog.write(json.dumps(record, sort_keys=True) + "\n")
    nn.save_checkpoint(net, out / "final.ckpt")
    return out


def write_partition_manifest(shards: list[ClientShard], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in shards:
            f.write(f"client {s.client_id}: {' '.join(map(str, s.indices.tolist()))}\n")
            for name in ("train", "validation", "test"):
                idx = getattr(s, name)
                if idx is not None:
                    f.write(f"  {name}: {' '.join(map(str, idx.tolist()))}\n")


def read_final_metrics(run_dir) -> dict:
    path = Path(run_dir) / "metrics.jsonl"
    last = None
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if line.strip():
                last = line
    if last is None:
        raise GlocalfairError(f"{path}: empty metrics log")
    return json.loads(last)


def report(run_dirs: list, fmt: str = "text") -> tuple[str, int]:
    """Comparison table over runs; returns (rendered table, exit code)."""
    header = [
        "run", "utility", "eod", "dp_dis", "dis",
        "local_eod_mean", "local_eod_std", "local_dpdis_mean", "local_dpdis_std",
        "gamma", "tau_fnr", "tau_fpr", "alpha",
    ]
    rows, had_error = [], False
    for run_dir in sorted(run_dirs, key=lambda d: Path(d).name):
        name = Path(run_dir).name
        try:
            final = read_final_metrics(run_dir)
            with open(Path(run_dir) / "config.json", encoding="utf-8") as f:
                cfg = json.load(f)
        except (OSError, GlocalfairError, json.JSONDecodeError) as e:
            rows.append([name, f"ERROR: {e}"] + [""] * (len(header) - 2))
            had_error = True
            continue
        attr = cfg.get("attribute") or sorted(final["local"])[0]
        if attr not in final["local"]:
            attr = sorted(final["local"])[0]
        cons = cfg.get("constraints", {})

        def num(v):
            return "" if v is None else f"{v:.4f}"

        rows.append([
            name,
            num(final["global"]["utility"]),
            num(final["global"][attr]["eod"]),
            num(final["global"][attr]["dp_dis"]),
            num(final["dis"]),
            num(final["local"][attr]["eod"]["mean"]),
            num(final["local"][attr]["eod"]["std"]),
            num(final["local"][attr]["dp_dis"]["mean"]),
            num(final["local"][attr]["dp_dis"]["std"]),
            str(cfg.get("gamma", "")),
            str(cons.get("tau_fnr", "")),
            str(cons.get("tau_fpr", "")),
            str(cfg.get("partition", {}).get("alpha", "")),
        ])
    if fmt == "csv":
        lines = [",".join(header)] + [",".join(map(str, r)) for r in rows]
        return "\n".join(lines) + "\n", 1 if had_error else 0
    widths = [max(len(str(header[i])), *(len(str(r[i])) for r in rows)) if rows else len(header[i]) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    for r in rows:
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines) + "\n", 1 if had_error else 0
