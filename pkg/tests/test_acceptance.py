"""Acceptance suite: one test per release criterion.

Each test prints a single ``criterion NN: PASS/FAIL`` line (visible with
``pytest -s``) and asserts the same condition. The desk-scale comparisons
(9-13) run small federated experiments; expensive artifacts are shared
through module-scoped fixtures.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from glocalfair import nn, server
from glocalfair.adultgen import write_adult_like_csv
from glocalfair.client import client_seed, local_update
from glocalfair.constraints import ConstraintSpec
from glocalfair.data import SynthSpec, partition, split_70_10_20, synth_generate
from glocalfair.experiment import (
    ExperimentConfig,
    build_dataset,
    build_shards,
    read_final_metrics,
    run_experiment,
)
from glocalfair.metrics import group_rates
from glocalfair.server import ClientUpdate, _kmeans_1d_dp, aggregate, fedavg, gini


def verdict(num: int, ok: bool, detail: str) -> None:
    print(f"criterion {num:02d}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num}: {detail}"


# ---------------------------------------------------------------- 1-8: properties


def test_criterion_01_gradient_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for trial in range(20):
        input_dim = int(rng.integers(2, 6))
        hidden = list(rng.integers(2, 5, size=int(rng.integers(0, 3))))
        net = nn.make_net(input_dim, hidden, seed=trial)
        # fully random parameters: the default zero biases can park a ReLU
        # pre-activation exactly on its kink, where central differences and
        # the subgradient legitimately disagree
        net = net.with_params(rng.normal(scale=0.7, size=net.params.size))
        n = 8
        X = rng.normal(size=(n, input_dim))
        y = rng.integers(0, 2, n).astype(float)
        grad = nn.backward(net, X, y)
        fd = np.empty_like(grad)
        eps = 1e-6
        for i in range(net.params.size):
            up, dn = net.params.copy(), net.params.copy()
            up[i] += eps
            dn[i] -= eps
            lu = nn.bce_loss(nn.forward(net.with_params(up), X)[1], y)
            ld = nn.bce_loss(nn.forward(net.with_params(dn), X)[1], y)
            fd[i] = (lu - ld) / (2 * eps)
        rel = np.max(np.abs(grad - fd)) / (np.max(np.abs(fd)) + 1e-300)
        worst = max(worst, rel)
    dt = time.perf_counter() - t0
    verdict(1, worst < 1e-6 and dt < 10.0, f"max rel err {worst:.2e}, {dt:.1f}s")


def pairwise_gini(x):
    x = np.abs(np.asarray(x, dtype=np.float64))
    w = x.size
    mean = x.mean()
    if mean == 0.0:
        return 0.0
    diffs = np.abs(x[:, None] - x[None, :]).sum()
    return diffs / (2 * w * w * mean)


def test_criterion_02_gini_equivalence():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 1001))
        x = rng.normal(scale=rng.uniform(0.1, 5.0), size=n)
        worst = max(worst, abs(gini(x) - pairwise_gini(x)))
    hand = gini(np.ones(4)) == 0.0 and gini(np.array([0.0, 0, 0, 1])) == 0.75
    verdict(2, worst < 1e-9 and hand, f"max |sort-pairwise| {worst:.2e}, hand cases {hand}")


def random_updates(rng, n=None, dim=None):
    n = n or int(rng.integers(2, 11))
    dim = dim or int(rng.integers(3, 51))
    ids = rng.permutation(n * 2)[:n]
    return [
        ClientUpdate(int(cid), rng.normal(size=dim), int(rng.integers(1, 101)))
        for cid in ids
    ]


def test_criterion_03_fedavg_degeneracy():
    rng = np.random.default_rng(2)
    ok = True
    for _ in range(50):
        ups = random_updates(rng)
        dim = ups[0].params.size
        agg, _ = aggregate(np.zeros(dim), ups, gamma=0.0, k_max=5)
        ok = ok and np.array_equal(agg, fedavg(ups))
    verdict(3, ok, "aggregate(gamma=0) bitwise equals fedavg on 50 update sets")


def small_synth_config(out_dir, **over):
    base = dict(
        dataset={
            "type": "synthetic",
            "group_sizes": [400, 800],
            "positive_rates": [0.5, 0.5],
            "class_sep": [1.0, 3.0],
            "seed": 99,
        },
        n_clients=4,
        partition={"mode": "dirichlet", "alpha": 10.0},
        rounds=2,
        participation=1.0,
        hidden_dims=[8],
        optimizer={"kind": "sgd-momentum", "learning_rate": 0.05, "momentum": 0.9},
        constraints={"inner_iters": 5, "warmup_epochs": 1},
        batch_size=64,
        gamma=0.6,
        k_max=4,
        aggregation="glocalfair",
        seed=12,
        out_dir=str(out_dir),
    )
    base.update(over)
    return ExperimentConfig(**base)


def read_log(run_dir):
    return (Path(run_dir) / "metrics.jsonl").read_bytes()


def test_criterion_04_pipeline_degeneracy(tmp_path):
    common = dict(gamma=0.0, constraints={"inner_iters": 0, "warmup_epochs": 1})
    a = run_experiment(small_synth_config(tmp_path / "glf", aggregation="glocalfair", **common))
    b = run_experiment(small_synth_config(tmp_path / "avg", aggregation="fedavg", **common))
    ok = read_log(a) == read_log(b)
    verdict(4, ok, "gamma=0, J=0 metrics log bitwise identical to plain-averaging mode")


def lloyd_1d(x, k, rng):
    best = np.inf
    for _ in range(100):
        centers = rng.choice(x, size=k, replace=False)
        for _ in range(100):
            assign = np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)
            new = np.array(
                [x[assign == c].mean() if np.any(assign == c) else centers[c] for c in range(k)]
            )
            if np.allclose(new, centers):
                break
            centers = new
        sse = float(((x - centers[assign]) ** 2).sum())
        best = min(best, sse)
    return best


def test_criterion_05_kmeans_optimality():
    rng = np.random.default_rng(3)
    ok = True
    for _ in range(50):
        n = int(rng.integers(3, 51))
        x = np.sort(rng.normal(size=n) * rng.uniform(0.5, 3.0))
        k = int(rng.integers(1, min(6, n) + 1))
        dp_sse, _ = _kmeans_1d_dp(x, k)
        ok = ok and dp_sse <= lloyd_1d(x, k, rng) + 1e-9
    verdict(5, ok, "DP SSE <= best of 100 Lloyd restarts on all 50 instances")


@pytest.fixture(scope="module")
def constrained_clients():
    """Per-client constrained training on the seeded biased dataset
    (10^4 samples, 8 clients, alpha=10): shared by criteria 6 and 7."""
    ds = synth_generate(
        SynthSpec(
            group_sizes=(3000, 7000),
            positive_rates=(0.5, 0.5),
            class_sep=(0.8, 3.0),
        ),
        seed=5,
    )
    shards = [
        split_70_10_20(s, client_seed(5, 0, 10_000 + s.client_id))
        for s in partition(ds, 8, alpha=10.0, seed=5)
    ]
    net = nn.make_net(ds.features.shape[1], [8], seed=0)
    spec = ConstraintSpec(
        tau_fnr=0.1, tau_fpr=1.0, inner_iters=120, warmup_epochs=2, eta_lambda=0.5
    )
    cfg = nn.OptimizerConfig(learning_rate=0.1)
    results = []
    for s in shards:
        results.append(
            local_update(net.params, net, s, ds, "group", spec, cfg, s.client_id, 128)
        )
    return ds, shards, results, spec


def test_criterion_06_lambda_feasibility(constrained_clients):
    _, _, results, spec = constrained_clients
    records = [t for r in results for t in r.trace]
    ok = all(np.all(t.lam >= 0.0) and t.lam.sum() <= spec.radius + 1e-12 for t in records)
    verdict(6, ok, f"{len(records)} recorded duals all nonnegative with l1 norm <= R")


def test_criterion_07_constraint_satisfaction(constrained_clients):
    t0 = time.perf_counter()
    ds, shards, results, spec = constrained_clients
    hits = 0
    gaps = []
    for s, r in zip(shards, results):
        net = nn.DenseNet(ds.features.shape[1], [8], r.update.params)
        logits, _ = nn.forward(net, ds.features[s.validation])
        rates = group_rates(
            (logits >= 0).astype(int),
            ds.labels[s.validation],
            ds.sensitive["group"][s.validation],
        )
        f0, f1 = rates.by_group[0].fnr, rates.by_group[1].fnr
        gap = abs(f0 - f1) if f0 is not None and f1 is not None else 0.0
        gaps.append(gap)
        hits += gap <= spec.tau_fnr + 0.05
    dt = time.perf_counter() - t0
    verdict(
        7,
        hits >= 7 and dt < 300.0,
        f"{hits}/8 clients with val FNR gap <= tau+0.05 (gaps {[f'{g:.2f}' for g in gaps]}), {dt:.0f}s",
    )


def test_criterion_08_determinism(tmp_path):
    a = run_experiment(small_synth_config(tmp_path / "w1"), workers=1)
    b = run_experiment(small_synth_config(tmp_path / "w3"), workers=3)
    ok = read_log(a) == read_log(b)
    ok = ok and np.array_equal(
        nn.load_checkpoint(a / "final.ckpt").params,
        nn.load_checkpoint(b / "final.ckpt").params,
    )
    verdict(8, ok, "identical logs and checkpoints across worker counts")


# ------------------------------------------------- 9-13: desk-scale paper trends


@pytest.fixture(scope="module")
def adult_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("adult") / "adult.csv"
    write_adult_like_csv(path, 6000, seed=0)
    return path


def adult_config(csv_path, mode, out_dir, **over):
    base = dict(
        dataset={"type": "adult_csv", "path": str(csv_path)},
        n_clients=4,
        partition={"mode": "four-combination"},
        rounds=30,
        participation=0.75,
        hidden_dims=[32, 16],
        optimizer={"kind": "sgd-momentum", "learning_rate": 0.01, "momentum": 0.9},
        constraints=(
            {"inner_iters": 30, "warmup_epochs": 1, "tau_fnr": 0.1,
             "tau_fpr": 0.08, "eta_lambda": 0.05}
            if mode == "glocalfair"
            else {"inner_iters": 0, "warmup_epochs": 2}
        ),
        batch_size=64,
        gamma=0.6 if mode == "glocalfair" else 0.0,
        k_max=10,
        aggregation=mode,
        seed=42,
        out_dir=str(out_dir),
        attribute="gender",
    )
    base.update(over)
    return ExperimentConfig(**base)


def test_criterion_09_global_fairness_four_combination(adult_csv, tmp_path):
    t0 = time.perf_counter()
    res = {}
    for mode in ("glocalfair", "fedavg"):
        out = run_experiment(adult_config(adult_csv, mode, tmp_path / mode))
        m = read_final_metrics(out)
        res[mode] = (m["global"]["utility"], m["global"]["gender"]["eod"])
    (u_g, e_g), (u_f, e_f) = res["glocalfair"], res["fedavg"]
    dt = time.perf_counter() - t0
    ok = e_g <= 0.5 * e_f and abs(u_g - u_f) <= 0.05 and dt < 600.0
    verdict(
        9,
        ok,
        f"EOD {e_g:.3f} vs {e_f:.3f} (ratio {e_g / e_f:.2f}), "
        f"utility {u_g:.3f} vs {u_f:.3f}, {dt:.0f}s",
    )


def test_criterion_10_local_fairness(adult_csv, tmp_path):
    # per-client gender EOD is undefined on single-gender shards, so the
    # local-fairness comparison uses a heterogeneous mixed-gender partition
    res = {}
    for mode in ("glocalfair", "fedavg"):
        out = run_experiment(
            adult_config(
                adult_csv,
                mode,
                tmp_path / mode,
                n_clients=8,
                partition={"mode": "dirichlet", "alpha": 2.0},
                constraints=(
                    {"inner_iters": 100, "warmup_epochs": 1, "tau_fnr": 0.1,
                     "tau_fpr": 0.08, "eta_lambda": 1.0}
                    if mode == "glocalfair"
                    else {"inner_iters": 0, "warmup_epochs": 2}
                ),
            )
        )
        loc = read_final_metrics(out)["local"]["gender"]["eod"]
        res[mode] = (loc["mean"], loc["std"])
    (m_g, s_g), (m_f, s_f) = res["glocalfair"], res["fedavg"]
    ok = m_g <= 0.7 * m_f and s_g < s_f
    verdict(10, ok, f"client EOD mean {m_g:.3f} vs {m_f:.3f}, std {s_g:.3f} vs {s_f:.3f}")


def synth_bench_config(out_dir, **over):
    base = dict(
        dataset={"type": "synthetic", "group_sizes": [3000, 7000],
                 "positive_rates": [0.5, 0.5], "class_sep": [0.8, 3.0], "seed": 5},
        n_clients=8,
        partition={"mode": "dirichlet", "alpha": 10.0},
        rounds=20,
        participation=0.75,
        hidden_dims=[16, 8],
        optimizer={"kind": "sgd-momentum", "learning_rate": 0.05, "momentum": 0.9},
        constraints={"inner_iters": 60, "warmup_epochs": 1, "tau_fnr": 0.1,
                     "tau_fpr": 0.08, "eta_lambda": 0.5},
        batch_size=64,
        gamma=0.6,
        k_max=10,
        aggregation="glocalfair",
        seed=42,
        out_dir=str(out_dir),
        attribute="group",
    )
    base.update(over)
    return ExperimentConfig(**base)


def test_criterion_11_gamma_monotonicity(tmp_path):
    res = {}
    for gamma in (0.2, 0.6):
        out = run_experiment(synth_bench_config(tmp_path / f"g{gamma}", gamma=gamma))
        m = read_final_metrics(out)
        res[gamma] = (m["global"]["utility"], m["global"]["group"]["eod"])
    (u2, e2), (u6, e6) = res[0.2], res[0.6]
    ok = e6 < e2 and u6 <= u2 + 0.01
    verdict(11, ok, f"EOD {e6:.3f} @0.6 < {e2:.3f} @0.2, utility {u6:.3f} vs {u2:.3f}")


def tail_mean_eod(run_dir, attribute, k=5):
    lines = Path(run_dir, "metrics.jsonl").read_text().splitlines()[-k:]
    vals = [json.loads(l)["global"][attribute]["eod"] for l in lines]
    return sum(vals) / len(vals)


def test_criterion_12_heterogeneity_robustness(tmp_path):
    # converged EOD estimated as the mean over the last 5 rounds to damp
    # round-to-round selection noise
    eods = {}
    for mode in ("glocalfair", "fedavg"):
        for alpha in (100.0, 0.1):
            out = run_experiment(
                synth_bench_config(
                    tmp_path / f"{mode}{alpha}",
                    rounds=30,
                    partition={"mode": "dirichlet", "alpha": alpha},
                    aggregation=mode,
                    gamma=0.6 if mode == "glocalfair" else 0.0,
                    constraints=(
                        {"inner_iters": 100, "warmup_epochs": 1, "tau_fnr": 0.1,
                         "tau_fpr": 0.08, "eta_lambda": 1.0}
                        if mode == "glocalfair"
                        else {"inner_iters": 0, "warmup_epochs": 2}
                    ),
                )
            )
            eods[(mode, alpha)] = tail_mean_eod(out, "group")
    dg = eods[("glocalfair", 0.1)] - eods[("glocalfair", 100.0)]
    df = eods[("fedavg", 0.1)] - eods[("fedavg", 100.0)]
    verdict(12, dg <= df, f"EOD degradation {dg:+.4f} vs plain averaging {df:+.4f}")


def precision_recall(cfg):
    ds = build_dataset(cfg)
    shards = build_shards(cfg, ds)
    net = nn.load_checkpoint(Path(cfg.out_dir) / "final.ckpt")
    idx = np.sort(np.concatenate([s.test for s in shards]))
    logits, _ = nn.forward(net, ds.features[idx])
    pred, y = (logits >= 0).astype(int), ds.labels[idx]
    tp = int(((pred == 1) & (y == 1)).sum())
    prec = tp / max(int((pred == 1).sum()), 1)
    rec = tp / max(int((y == 1).sum()), 1)
    return prec, rec


def test_criterion_13_constraint_emphasis(tmp_path):
    ok = True
    details = []
    for seed in (42, 7):
        for emphasis in ("fpr", "fnr"):
            taus = (
                {"tau_fnr": 1.0, "tau_fpr": 0.05}
                if emphasis == "fpr"
                else {"tau_fnr": 0.05, "tau_fpr": 1.0}
            )
            cfg = synth_bench_config(
                tmp_path / f"{seed}{emphasis}",
                seed=seed,
                constraints={"inner_iters": 100, "warmup_epochs": 1,
                             "eta_lambda": 1.0, **taus},
            )
            run_experiment(cfg)
            prec, rec = precision_recall(cfg)
            good = prec >= rec if emphasis == "fpr" else rec >= prec
            ok = ok and good
            details.append(f"s{seed} {emphasis}: P {prec:.2f} R {rec:.2f}")
    verdict(13, ok, "; ".join(details))
