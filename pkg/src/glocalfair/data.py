"""Dataset ingestion, synthetic generation, client partitioning and splits."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import (
    ConfigurationError,
    EmptyFileError,
    InfeasiblePartitionError,
    NumericParseError,
    UnknownColumnError,
)

log = logging.getLogger(__name__)


@dataclass
class ColumnInfo:
    name: str
    kind: str  # "continuous" | "categorical"
    mean: float | None = None
    scale: float | None = None
    categories: list[str] | None = None


@dataclass
class TabularDataset:
    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int 0/1
    sensitive: dict[str, np.ndarray]  # name -> (n,) int 0/1
    columns: list[ColumnInfo] = field(default_factory=list)
    n_dropped: int = 0

    @property
    def n(self) -> int:
        return self.features.shape[0]


@dataclass
class ClientShard:
    client_id: int
    indices: np.ndarray  # all rows owned by this client
    train: np.ndarray = None
    validation: np.ndarray = None
    test: np.ndarray = None


# Adult Income schema: column name -> kind. The label and sensitive columns
# are handled specially by load_adult_csv.
ADULT_SCHEMA = {
    "age": "continuous",
    "workclass": "categorical",
    "fnlwgt": "continuous",
    "education": "categorical",
    "education-num": "continuous",
    "marital-status": "categorical",
    "occupation": "categorical",
    "relationship": "categorical",
    "race": "categorical",
    "sex": "categorical",
    "capital-gain": "continuous",
    "capital-loss": "continuous",
    "hours-per-week": "continuous",
    "native-country": "categorical",
    "income": "label",
}


def load_adult_csv(path, schema: dict[str, str] | None = None) -> TabularDataset:
    """Load an Adult-Income-style CSV.

    Label is income > 50K; sensitive attributes are gender (male=1) and race
    (white=1). Continuous columns are z-standardized, categoricals one-hot
    encoded; rows containing "?" are dropped and counted.
    """
    schema = dict(schema or ADULT_SCHEMA)
    try:
        df = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise EmptyFileError(f"{path}: empty or headerless file") from e
    if df.empty:
        raise EmptyFileError(f"{path}: no data rows")
    unknown = set(df.columns) - set(schema)
    if unknown:
        raise UnknownColumnError(f"columns not in schema: {sorted(unknown)}")
    missing = set(schema) - set(df.columns)
    if missing:
        raise UnknownColumnError(f"schema columns absent from file: {sorted(missing)}")

    before = len(df)
    df = df[~df.apply(lambda r: (r == "?").any(), axis=1)].reset_index(drop=True)
    n_dropped = before - len(df)
    if n_dropped:
        log.info("dropped %d rows with missing values", n_dropped)
    if df.empty:
        raise EmptyFileError(f"{path}: all rows had missing values")

    label_col = next(c for c, k in schema.items() if k == "label")
    labels = df[label_col].str.contains(">50K").to_numpy().astype(np.int64)

    sensitive = {
        "gender": (df["sex"].str.strip().str.lower() == "male").to_numpy().astype(np.int64),
        "race": (df["race"].str.strip().str.lower() == "white").to_numpy().astype(np.int64),
    }

    blocks, columns = [], []
    for name, kind in schema.items():
        if kind == "label":
            continue
        col = df[name]
        if kind == "continuous":
            try:
                vals = col.astype(np.float64).to_numpy()
            except ValueError as e:
                raise NumericParseError(f"column {name!r}: {e}") from e
            mean = vals.mean()
            scale = vals.std()
            if scale == 0.0:
                scale = 1.0
            blocks.append(((vals - mean) / scale)[:, None])
            columns.append(ColumnInfo(name, kind, float(mean), float(scale)))
        elif kind == "categorical":
            cats = sorted(col.unique())
            onehot = np.column_stack([(col == c).to_numpy() for c in cats])
            blocks.append(onehot.astype(np.float64))
            columns.append(ColumnInfo(name, kind, categories=cats))
        else:
            raise ConfigurationError(f"unknown column kind {kind!r} for {name!r}")
    features = np.hstack(blocks)
    return TabularDataset(features, labels, sensitive, columns, n_dropped)


@dataclass
class SynthSpec:
    """Two-group Gaussian generator with per-group class separation.

    Positives of group g are shifted by class_sep[g] along the first feature
    axis; a smaller separation makes that group's positives harder to detect,
    injecting an FNR gap into unconstrained models. The group id is appended
    as a feature so constrained models can act on it.
    """

    group_sizes: tuple[int, int] = (5000, 5000)
    positive_rates: tuple[float, float] = (0.5, 0.5)
    class_sep: tuple[float, float] = (2.0, 2.0)
    group_shift: float = 0.0  # group-1 offset along the second feature axis
    noise_scale: float = 1.0
    n_features: int = 4  # informative features, before the group column


def synth_generate(spec: SynthSpec, seed: int) -> TabularDataset:
    rng = np.random.default_rng(seed)
    X_parts, y_parts, g_parts = [], [], []
    for g in (0, 1):
        n = spec.group_sizes[g]
        n_pos = int(round(spec.positive_rates[g] * n))
        y = np.concatenate([np.ones(n_pos, dtype=np.int64), np.zeros(n - n_pos, dtype=np.int64)])
        X = rng.normal(0.0, spec.noise_scale, size=(n, spec.n_features))
        X[:, 0] += spec.class_sep[g] * y
        if g == 1:
            X[:, 1 % spec.n_features] += spec.group_shift
        X_parts.append(X)
        y_parts.append(y)
        g_parts.append(np.full(n, g, dtype=np.int64))
    X = np.vstack(X_parts)
    y = np.concatenate(y_parts)
    g = np.concatenate(g_parts)
    perm = rng.permutation(len(y))
    X, y, g = X[perm], y[perm], g[perm]
    features = np.column_stack([X, g.astype(np.float64)])
    cols = [ColumnInfo(f"x{i}", "continuous") for i in range(spec.n_features)]
    cols.append(ColumnInfo("group", "continuous"))
    return TabularDataset(features, y, {"group": g}, cols)


def partition(
    dataset: TabularDataset,
    n_clients: int,
    alpha,
    seed: int,
    attribute: str | None = None,
    min_samples: int = 20,
) -> list[ClientShard]:
    """Distribute rows across clients.

    alpha="four-combination": exactly 4 clients, one per (gender x race) cell.
    alpha=float: per-client group-proportion vectors drawn from a symmetric
    Dirichlet(alpha); larger alpha means closer to IID.
    """
    if n_clients < 1:
        raise ConfigurationError("n_clients must be >= 1")
    if dataset.n == 0:
        raise ConfigurationError("empty dataset")
    if alpha == "four-combination":
        return _partition_four_combination(dataset)
    if n_clients * min_samples > dataset.n:
        raise InfeasiblePartitionError(
            f"{n_clients} clients x {min_samples} min samples > {dataset.n} rows"
        )
    attribute = attribute or next(iter(dataset.sensitive))
    groups = dataset.sensitive[attribute]
    rng = np.random.default_rng(seed)

    sizes = np.full(n_clients, dataset.n // n_clients, dtype=np.int64)
    sizes[: dataset.n % n_clients] += 1
    props = rng.dirichlet([float(alpha)] * 2, size=n_clients)

    pools = {gv: list(rng.permutation(np.flatnonzero(groups == gv))) for gv in (0, 1)}
    shards = []
    for cid in range(n_clients):
        want1 = int(round(props[cid][1] * sizes[cid]))
        want = {1: want1, 0: int(sizes[cid]) - want1}
        take: list[int] = []
        for gv in (0, 1):
            got = min(want[gv], len(pools[gv]))
            take.extend(pools[gv][:got])
            del pools[gv][:got]
            short = want[gv] - got
            other = 1 - gv
            if short > 0:  # pool exhausted; fill from the other group
                take.extend(pools[other][:short])
                del pools[other][:short]
        shards.append(ClientShard(cid, np.sort(np.array(take, dtype=np.int64))))
    # leftovers from rounding go to the last clients round-robin
    leftovers = pools[0] + pools[1]
    for i, idx in enumerate(leftovers):
        cid = i % n_clients
        shards[cid].indices = np.sort(np.append(shards[cid].indices, idx))
    for s in shards:
        if len(s.indices) < min_samples:
            raise InfeasiblePartitionError(
                f"client {s.client_id} received {len(s.indices)} < {min_samples} samples"
            )
    return shards


def _partition_four_combination(dataset: TabularDataset) -> list[ClientShard]:
    if not {"gender", "race"} <= set(dataset.sensitive):
        raise ConfigurationError(
            "four-combination mode needs 'gender' and 'race' sensitive attributes"
        )
    gender = dataset.sensitive["gender"]
    race = dataset.sensitive["race"]
    shards = []
    cid = 0
    for gv in (1, 0):  # male then female
        for rv in (1, 0):  # white then non-white
            idx = np.flatnonzero((gender == gv) & (race == rv))
            shards.append(ClientShard(cid, idx))
            cid += 1
    return shards


def split_70_10_20(shard: ClientShard, seed: int) -> ClientShard:
    """Seeded shuffle, then a 70/10/20 train/validation/test split."""
    rng = np.random.default_rng(seed)
    idx = shard.indices[rng.permutation(len(shard.indices))]
    n = len(idx)
    counts = [int(np.floor(f * n)) for f in (0.7, 0.1, 0.2)]
    rem = n - sum(counts)
    for i in range(rem):  # distribute remainder train, val, test, train, ...
        counts[i % 3] += 1
    a, b = counts[0], counts[0] + counts[1]
    shard.train = np.sort(idx[:a])
    shard.validation = np.sort(idx[a:b])
    shard.test = np.sort(idx[b:])
    return shard
