"""Goodness-of-fit measures: two-sample Kolmogorov-Smirnov and relative entropy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SMOOTHING = 1e-8


def ks_bound(sample_size: int, alpha: float = 0.05) -> float:
    """Acceptance bound ``sqrt(ln(2 / alpha) / s)``."""
    return float(np.sqrt(np.log(2.0 / alpha) / sample_size))


@dataclass(frozen=True)
class KsResult:
    statistic: float
    sample_size: int
    alpha: float
    bound: float

    @property
    def accepted(self) -> bool:
        return self.statistic <= self.bound


def ks_statistic(samples_p, samples_q, alpha: float = 0.05) -> KsResult:
    """Largest gap between the empirical CDFs of two sample sets.

    The bound uses the smaller of the two sample sizes.
    """
    p = np.sort(np.asarray(samples_p, dtype=float).ravel())
    q = np.sort(np.asarray(samples_q, dtype=float).ravel())
    if p.size == 0 or q.size == 0:
        raise ValueError("KS statistic needs non-empty sample sets")
    points = np.union1d(p, q)
    cdf_p = np.searchsorted(p, points, side="right") / p.size
    cdf_q = np.searchsorted(q, points, side="right") / q.size
    stat = float(np.max(np.abs(cdf_p - cdf_q)))
    s = min(p.size, q.size)
    return KsResult(stat, s, alpha, ks_bound(s, alpha))


def relative_entropy(p, q, smoothing: float = SMOOTHING) -> float:
    """``sum_x p(x) ln(p(x) / q(x))`` in nats.

    Cells with ``p = 0`` contribute nothing.  If ``q`` vanishes somewhere on
    the support of ``p`` it is smoothed by adding ``smoothing`` to every cell
    and renormalising.
    """
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.size} vs {q.size}")
    p = p / p.sum()
    q = q / q.sum()
    support = p > 0
    if np.any(q[support] <= 0):
        q = (q + smoothing) / (1 + smoothing * q.size)
    return float(max(np.sum(p[support] * np.log(p[support] / q[support])), 0.0))
