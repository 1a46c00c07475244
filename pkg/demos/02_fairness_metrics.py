"""
Group fairness metrics on a biased predictor
============================================

Shows how demographic parity, equalized odds and the error-deviation metrics
react when a classifier misses positives from one group far more often than
from the other.
"""

import numpy as np

from glocalfair.metrics import dp_dis, dpd, eod, fned_fped, group_rates, utility

rng = np.random.default_rng(7)

n = 4000
group = (rng.uniform(size=n) < 0.4).astype(int)  # 40% group 0, 60% group 1
labels = (rng.uniform(size=n) < 0.35).astype(int)

# the predictor catches 90% of group-1 positives but only 55% of group-0's,
# with a mild false-alarm rate everywhere
pred = np.zeros(n, dtype=int)
pos = labels == 1
pred[pos & (group == 1)] = (rng.uniform(size=(pos & (group == 1)).sum()) < 0.90).astype(int)
pred[pos & (group == 0)] = (rng.uniform(size=(pos & (group == 0)).sum()) < 0.55).astype(int)
neg = labels == 0
pred[neg] = (rng.uniform(size=neg.sum()) < 0.08).astype(int)

rates = group_rates(pred, labels, group)
for gv in (0, 1):
    r = rates.by_group[gv]
    print(f"group {gv}: TPR {r.tpr:.3f}  FPR {r.fpr:.3f}  FNR {r.fnr:.3f}")

print(f"utility (accuracy)     : {utility(pred, labels):.3f}")
print(f"demographic parity diff: {dpd(pred, group):.3f}")
print(f"equalized odds diff    : {eod(pred, labels, group):.3f}")
print(f"DP-Dis (vs overall)    : {dp_dis(pred, group):.3f}")
fned, fped = fned_fped(rates)
print(f"FNED {fned:.3f}  FPED {fped:.3f}")

# rates on empty cells are reported as None, never silently as zero
tiny = group_rates(np.array([1, 0]), np.array([0, 0]), np.array([0, 1]))
print("TPR with no positives present:", tiny.overall.tpr)
