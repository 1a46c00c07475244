"""Command-line surface: run / partition / metrics / gini / report.

Exit codes: 0 success, 1 usage or config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import nn
from .data import load_adult_csv
from .errors import ConfigurationError, GlocalfairError, IngestionError
from .experiment import (
    ExperimentConfig,
    build_dataset,
    build_shards,
    evaluate,
    report,
    run_experiment,
    write_partition_manifest,
)
from .server import gini, lorenz_points


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="glocalfair")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a federated experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None)
    run.add_argument("--workers", type=int, default=1)

    part = sub.add_parser("partition", help="write the client partition manifest")
    part.add_argument("--config", required=True)
    part.add_argument("--manifest", required=True)

    met = sub.add_parser("metrics", help="evaluate a checkpoint on a dataset")
    met.add_argument("--checkpoint", required=True)
    met.add_argument("--data", required=True, help="experiment config describing the data")

    gin = sub.add_parser("gini", help="Gini coefficient of a checkpoint's weights")
    gin.add_argument("--checkpoint", required=True)
    gin.add_argument("--lorenz", default=None, help="write the Lorenz curve CSV here")

    rep = sub.add_parser("report", help="tabulate final metrics across runs")
    rep.add_argument("--runs", nargs="+", required=True)
    rep.add_argument("--format", choices=("csv", "text"), default="text")
    return p


def _load_config(path, seed=None, out=None) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(path)
    if seed is not None:
        cfg.seed = seed
    if out is not None:
        cfg.out_dir = out
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _load_config(args.config, args.seed, args.out)
            out = run_experiment(cfg, workers=args.workers)
            print(f"run complete: {out}")
        elif args.command == "partition":
            cfg = _load_config(args.config)
            dataset = build_dataset(cfg)
            shards = build_shards(cfg, dataset)
            write_partition_manifest(shards, args.manifest)
            print(f"manifest written: {args.manifest}")
        elif args.command == "metrics":
            cfg = _load_config(args.data)
            net = nn.load_checkpoint(args.checkpoint)
            dataset = build_dataset(cfg)
            shards = build_shards(cfg, dataset)
            record = evaluate(net, dataset, shards, list(dataset.sensitive))
            print(json.dumps(record, indent=2, sort_keys=True))
        elif args.command == "gini":
            net = nn.load_checkpoint(args.checkpoint)
            print(f"gini {gini(net.params):.6f}")
            if args.lorenz:
                pts = lorenz_points(net.params)
                with open(args.lorenz, "w", newline="", encoding="utf-8") as f:
                    w = csv.writer(f)
                    w.writerow(["population_fraction", "weight_fraction"])
                    w.writerows(pts.tolist())
        elif args.command == "report":
            table, code = report(args.runs, args.format)
            sys.stdout.write(table)
            return code
    except (ConfigurationError, IngestionError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except GlocalfairError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
