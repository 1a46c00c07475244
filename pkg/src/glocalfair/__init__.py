"""Deterministic federated-learning fairness simulator.

Clients train under group FNR/FPR deviation constraints via a two-player
proxy-Lagrangian game; the server clusters updates by the Gini coefficient
of their weight distributions and aggregates with fairness-aware cluster
weights. A plain data-proportional averaging baseline is included for
controlled comparison.
"""

from .constraints import ConstraintSpec, DualState, ShardData, run_constrained_training
from .data import SynthSpec, TabularDataset, load_adult_csv, partition, synth_generate
from .experiment import ExperimentConfig, evaluate, report, run_experiment
from .metrics import discrepancy, dp_dis, dpd, eod, fned_fped, group_rates, utility
from .nn import DenseNet, OptimizerConfig, OptimizerState, make_net
from .server import ClientUpdate, aggregate, cluster_ginis, fedavg, gini, lorenz_points

__all__ = [
    "ConstraintSpec", "DualState", "ShardData", "run_constrained_training",
    "SynthSpec", "TabularDataset", "load_adult_csv", "partition", "synth_generate",
    "ExperimentConfig", "evaluate", "report", "run_experiment",
    "discrepancy", "dp_dis", "dpd", "eod", "fned_fped", "group_rates", "utility",
    "DenseNet", "OptimizerConfig", "OptimizerState", "make_net",
    "ClientUpdate", "aggregate", "cluster_ginis", "fedavg", "gini", "lorenz_points",
]

__version__ = "0.1.0"
