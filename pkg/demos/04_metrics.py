"""
Judging a trained generator
===========================

Kolmogorov-Smirnov acceptance and relative entropy on small examples.
"""

import numpy as np

from qgan.metrics import ks_bound, ks_statistic, relative_entropy

print(f"KS bound for 500 samples at alpha=0.05: {ks_bound(500):.4f}")

rng = np.random.default_rng(0)
p = np.array([0.05, 0.2, 0.3, 0.2, 0.1, 0.08, 0.05, 0.02])
a = rng.choice(8, 500, p=p)
b = rng.choice(8, 500, p=p)
c = rng.choice(8, 500)
for name, other in (("same law", b), ("uniform", c)):
    res = ks_statistic(a, other)
    print(f"{name:8s} statistic {res.statistic:.4f} accepted {res.accepted}")

print(f"D(point mass || uniform) = {relative_entropy(np.eye(8)[0], np.full(8, 1 / 8)):.4f} (ln 8)")
print(f"D([0.75, 0.25] || [0.5, 0.5]) = {relative_entropy([0.75, 0.25], [0.5, 0.5]):.4f}")
