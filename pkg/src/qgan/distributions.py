"""Target distributions on the generator grid.

Continuous laws are truncated and rounded onto an equidistant grid of
``2**n`` points spanning ``[low, high]``.  Two truncation rules exist:

``"continuous"``
    draws outside ``[low, high]`` are rejected before rounding, so the end
    cells only collect half a rounding cell.  This is how the training sets
    are generated.
``"rounded"``
    draws are rounded first and rejected if they fall off the grid, so every
    cell (end cells included) is a full rounding cell
    ``[x_j - h/2, x_j + h/2)``.  Pricing presets use this rule.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .generator import EmpiricalDistribution, tuple_to_index
from .statevector import as_generator

KINDS = ("lognormal", "triangular", "bimodal", "gaussian2d", "file")
TRUNCATIONS = ("continuous", "rounded")


@dataclass
class TargetSpec:
    kind: str
    params: dict = field(default_factory=dict)
    low: float = 0.0
    high: float = 7.0
    num_qubits: int = 3
    truncation: str = "continuous"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.truncation not in TRUNCATIONS:
            raise ValueError(f"unknown truncation rule {self.truncation!r}")
        if self.kind != "gaussian2d" and not self.low < self.high:
            raise ValueError("need low < high")
        p = self.params
        if self.kind == "lognormal" and p.get("sigma", 0) <= 0:
            raise ValueError("lognormal sigma must be positive")
        if self.kind == "triangular":
            lo, up, mode = p.get("lower"), p.get("upper"), p.get("mode")
            if lo is None or up is None or mode is None or not up > lo or not lo <= mode <= up:
                raise ValueError("triangular needs lower < upper and mode within [lower, upper]")
        if self.kind == "bimodal" and (p.get("sigma1", 0) <= 0 or p.get("sigma2", 0) <= 0):
            raise ValueError("bimodal sigmas must be positive")

    @classmethod
    def lognormal(cls, mu=1.0, sigma=1.0, **kw) -> "TargetSpec":
        return cls("lognormal", {"mu": mu, "sigma": sigma}, **kw)

    @classmethod
    def triangular(cls, lower=0.0, upper=7.0, mode=2.0, **kw) -> "TargetSpec":
        return cls("triangular", {"lower": lower, "upper": upper, "mode": mode}, **kw)

    @classmethod
    def bimodal(cls, mu1=0.5, sigma1=1.0, mu2=3.5, sigma2=0.5, weight=0.5, **kw) -> "TargetSpec":
        return cls("bimodal", {"mu1": mu1, "sigma1": sigma1, "mu2": mu2, "sigma2": sigma2, "weight": weight}, **kw)

    @classmethod
    def gaussian2d(cls, mean=(3.5, 3.5), cov=((2.0, 1.2), (1.2, 2.0)), low=(0.0, 0.0), high=(7.0, 7.0),
                   registers=(3, 3)) -> "TargetSpec":
        """Correlated 2-D Gaussian, a stand-in for multivariate market data."""
        return cls("gaussian2d", {"mean": list(mean), "cov": [list(r) for r in cov], "low": list(low),
                                  "high": list(high), "registers": list(registers)},
                   num_qubits=int(sum(registers)))

    @property
    def grid_size(self) -> int:
        return 2**self.num_qubits

    @property
    def step(self) -> float:
        return (self.high - self.low) / (self.grid_size - 1)

    @property
    def affine(self) -> tuple[float, float]:
        return (self.step, self.low)

    def continuous_law(self):
        p = self.params
        if self.kind == "lognormal":
            return stats.lognorm(s=p["sigma"], scale=np.exp(p["mu"]))
        if self.kind == "triangular":
            width = p["upper"] - p["lower"]
            return stats.triang(c=(p["mode"] - p["lower"]) / width, loc=p["lower"], scale=width)
        if self.kind == "bimodal":
            return _Mixture(p)
        raise ValueError(f"{self.kind} targets have no univariate law")


class _Mixture:
    def __init__(self, p):
        self.w = p.get("weight", 0.5)
        self.a = stats.norm(p["mu1"], p["sigma1"])
        self.b = stats.norm(p["mu2"], p["sigma2"])

    def cdf(self, x):
        return self.w * self.a.cdf(x) + (1 - self.w) * self.b.cdf(x)

    def pdf(self, x):
        return self.w * self.a.pdf(x) + (1 - self.w) * self.b.pdf(x)

    def mean(self):
        return self.w * self.a.mean() + (1 - self.w) * self.b.mean()

    def std(self):
        m = self.mean()
        second = self.w * (self.a.var() + self.a.mean() ** 2) + (1 - self.w) * (self.b.var() + self.b.mean() ** 2)
        return float(np.sqrt(second - m**2))

    def rvs(self, size, random_state):
        pick = random_state.random(size) < self.w
        return np.where(pick, self.a.rvs(size, random_state=random_state),
                        self.b.rvs(size, random_state=random_state))


def _raw_draws(spec: TargetSpec, size: int, rng) -> np.ndarray:
    if spec.kind == "bimodal":
        return spec.continuous_law().rvs(size, rng)
    return spec.continuous_law().rvs(size=size, random_state=rng)


def _gaussian2d_draws(spec: TargetSpec, count: int, rng) -> np.ndarray:
    p = spec.params
    low, high, regs = np.array(p["low"], float), np.array(p["high"], float), np.array(p["registers"])
    step = (high - low) / (2**regs - 1)
    out = []
    have = 0
    while have < count:
        x = rng.multivariate_normal(p["mean"], p["cov"], size=2 * (count - have) + 16)
        if spec.truncation == "continuous":
            x = x[np.all((x >= low) & (x <= high), axis=1)]
        j = np.rint((x - low) / step).astype(np.int64)
        j = j[np.all((j >= 0) & (j < 2**regs), axis=1)]
        out.append(j)
        have += len(j)
    return np.concatenate(out)[:count]


def sample_target(spec: TargetSpec, count: int, seed=None) -> np.ndarray:
    """Draw ``count`` grid indices from the truncated, rounded target.

    Rejected draws are replaced by fresh ones.  Multivariate targets return
    an array of shape ``(count, d)`` of per-register indices.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if spec.kind == "file":
        raise ValueError("file targets are ingested, not sampled")
    rng = as_generator(seed)
    if spec.kind == "gaussian2d":
        return _gaussian2d_draws(spec, count, rng)
    out = []
    have = 0
    while have < count:
        x = _raw_draws(spec, 2 * (count - have) + 16, rng)
        if spec.truncation == "continuous":
            x = x[(x >= spec.low) & (x <= spec.high)]
        j = np.rint((x - spec.low) / spec.step).astype(np.int64)
        j = j[(j >= 0) & (j < spec.grid_size)]
        out.append(j)
        have += j.size
    return np.concatenate(out)[:count]


def cell_edges(spec: TargetSpec) -> np.ndarray:
    """Boundaries of the ``2**n`` cells that round onto each grid point."""
    centres = spec.low + spec.step * np.arange(spec.grid_size)
    edges = np.concatenate([centres - spec.step / 2, [centres[-1] + spec.step / 2]])
    if spec.truncation == "continuous":
        edges = np.clip(edges, spec.low, spec.high)
    return edges


def analytic_discretized(spec: TargetSpec) -> np.ndarray:
    """Exact probability of every grid cell under the truncated law."""
    if spec.kind in ("file", "gaussian2d"):
        raise ValueError(f"no closed-form discretisation for {spec.kind} targets")
    cdf = spec.continuous_law().cdf(cell_edges(spec))
    p = np.diff(cdf)
    return p / p.sum()


def empirical(samples, registers: Sequence[int]) -> EmpiricalDistribution:
    """Histogram of grid samples (flat indices, or per-register tuples)."""
    registers = tuple(registers)
    samples = np.asarray(samples)
    if samples.ndim == 2:
        samples = tuple_to_index(samples, registers)
    return EmpiricalDistribution(np.bincount(samples, minlength=2 ** sum(registers)), registers)


def expected_payoff(probs, strike, values=None) -> float:
    """``E[max(S - K, 0)]`` for a distribution over grid values."""
    probs = np.asarray(probs, dtype=float)
    if values is None:
        values = np.arange(probs.size)
    return float(np.sum(probs * np.maximum(np.asarray(values) - strike, 0.0)))


@dataclass
class IngestResult:
    distribution: EmpiricalDistribution
    samples: np.ndarray
    affine: list[tuple[float, float]]


def ingest_samples(path, registers: Sequence[int] = (3,), low=None, high=None) -> IngestResult:
    """Read one value per line (or comma-separated rows for several registers)
    and map it onto the grid.

    Without explicit bounds the data range is used.  Values outside given
    bounds are clipped with a warning.
    """
    registers = tuple(registers)
    d = len(registers)
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != d:
                raise ValueError(f"{path}:{lineno}: expected {d} column(s), got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric value {row!r}") from None
    if not rows:
        raise ValueError(f"{path}: no samples")
    raw = np.array(rows)
    low = raw.min(axis=0) if low is None else np.broadcast_to(np.asarray(low, float), (d,))
    high = raw.max(axis=0) if high is None else np.broadcast_to(np.asarray(high, float), (d,))
    sizes = 2 ** np.array(registers)
    span = np.where(high > low, high - low, 1.0)
    step = span / (sizes - 1)
    outside = (raw < low) | (raw > high)
    if np.any(outside):
        warnings.warn(f"{int(outside.sum())} value(s) outside [{low}, {high}] clipped to the grid", stacklevel=2)
    j = np.clip(np.rint((np.clip(raw, low, high) - low) / step), 0, sizes - 1).astype(np.int64)
    dist = empirical(j if d > 1 else j[:, 0], registers)
    affine = [(float(s), float(lo)) for s, lo in zip(step, low)]
    return IngestResult(dist, j if d > 1 else j[:, 0], affine)


def write_distribution_csv(path, probs) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "probability"])
        for i, p in enumerate(probs):
            w.writerow([i, repr(float(p))])
