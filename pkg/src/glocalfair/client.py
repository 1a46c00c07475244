"""One federated client: constrained local training on its own shard."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .constraints import ConstraintSpec, ShardData, TraceRecord, run_constrained_training
from .data import ClientShard, TabularDataset
from .errors import ConfigurationError
from .server import ClientUpdate


def shard_arrays(dataset: TabularDataset, shard: ClientShard, attribute: str) -> ShardData:
    g = dataset.sensitive[attribute]
    return ShardData(
        X_train=dataset.features[shard.train],
        y_train=dataset.labels[shard.train],
        g_train=g[shard.train],
        X_val=dataset.features[shard.validation],
        y_val=dataset.labels[shard.validation],
        g_val=g[shard.validation],
    )


def client_seed(global_seed: int, round_index: int, client_id: int) -> int:
    """Stable per-(round, client) seed so schedules are reproducible and
    independent across clients."""
    ss = np.random.SeedSequence([global_seed, round_index, client_id])
    return int(ss.generate_state(1)[0])


@dataclass
class LocalResult:
    update: ClientUpdate
    trace: list[TraceRecord]


def local_update(
    global_params: np.ndarray,
    net_shape: nn.DenseNet,
    shard: ClientShard,
    dataset: TabularDataset,
    attribute: str,
    spec: ConstraintSpec,
    opt_config: nn.OptimizerConfig,
    round_seed: int,
    batch_size: int = 64,
) -> LocalResult:
    """Run constrained training from the global parameters; emit the update."""
    if shard.train is None or shard.validation is None:
        raise ConfigurationError(f"client {shard.client_id}: shard has no splits")
    if global_params.size != net_shape.params.size:
        raise ConfigurationError("global params do not match the architecture")
    net = net_shape.with_params(global_params.copy())
    data = shard_arrays(dataset, shard, attribute)
    best, trace = run_constrained_training(
        net, data, spec, opt_config, round_seed, batch_size
    )
    update = ClientUpdate(
        client_id=shard.client_id,
        params=best.params,
        sample_count=len(shard.train),
    )
    return LocalResult(update, trace)
