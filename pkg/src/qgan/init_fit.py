"""Least-squares fit of a shallow circuit to a discretised normal density.

The fitted circuit (depth 1, linear CZ chain, started from ``|0...0>``)
serves as the ``fitted_normal`` generator input state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .generator import AnsatzShape, batched_probabilities, fit_shape
from .statevector import as_generator
from .training import probability_gradient

MAX_FIT_QUBITS = 4


def discretized_normal(mu: float, sigma: float, num_qubits: int = 3, low: float = 0.0, step: float = 1.0):
    """Normal density evaluated on the grid points and renormalised."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = low + step * np.arange(2**num_qubits)
    q = stats.norm.pdf(x, mu, sigma)
    return q / q.sum()


@dataclass
class FitProblem:
    target: np.ndarray
    shape: AnsatzShape = None
    restarts: int = 10
    max_iter: int = 3000
    tol: float = 1e-14
    seed: int = 0
    initial: np.ndarray | None = None

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=float)
        if abs(self.target.sum() - 1) > 1e-9:
            raise ValueError("target must sum to 1")
        n = int(self.target.size).bit_length() - 1
        if self.shape is None:
            self.shape = fit_shape(n)
        if self.shape.dim != self.target.size:
            raise ValueError("target length does not match the circuit")

    @classmethod
    def from_samples(cls, samples, num_qubits: int = 3, **kw) -> "FitProblem":
        samples = np.asarray(samples, dtype=float)
        return cls(discretized_normal(samples.mean(), samples.std(), num_qubits), **kw)


@dataclass
class FitResult:
    angles: np.ndarray
    residual: float
    history: list

    def to_dict(self, mu=None, sigma=None) -> dict:
        return {"mu": mu, "sigma": sigma, "angles": self.angles.ravel().tolist(), "residual": self.residual}


def fit_residual(shape: AnsatzShape, angles, target) -> float:
    """``sum_i (p_i - q_i)^2`` for the circuit started from ``|0...0>``."""
    zero = np.zeros(shape.dim)
    zero[0] = 1.0
    p = batched_probabilities(shape, angles, zero)[0]
    return float(np.sum((p - np.asarray(target)) ** 2))


def _descend(shape, start, target, max_iter, tol):
    zero = np.zeros(shape.dim)
    zero[0] = 1.0
    theta = start.ravel().copy()
    p = batched_probabilities(shape, theta, zero)[0]
    loss = float(np.sum((p - target) ** 2))
    history = [loss]
    step = 1.0
    for _ in range(max_iter):
        grad = 2 * probability_gradient(shape, theta, zero) @ (p - target)
        gsq = float(grad @ grad)
        if gsq < tol**2:
            break
        # Armijo backtracking; only improving steps are accepted
        step *= 2.0
        while step > 1e-12:
            cand = theta - step * grad
            pc = batched_probabilities(shape, cand, zero)[0]
            lc = float(np.sum((pc - target) ** 2))
            if lc <= loss - 1e-4 * step * gsq:
                break
            step *= 0.5
        else:
            break
        improvement = loss - lc
        theta, p, loss = cand, pc, lc
        history.append(loss)
        if improvement < tol:
            break
    return theta, loss, history


def fit_normal_init(problem: FitProblem) -> FitResult:
    """Gradient descent with backtracking from several random starts; the
    best residual wins.  Gradients of the probabilities use parameter shifts."""
    shape = problem.shape
    if shape.n > MAX_FIT_QUBITS:
        raise ValueError(f"normal-init fitting is limited to {MAX_FIT_QUBITS} qubits")
    rng = as_generator(problem.seed)
    starts = [rng.uniform(-np.pi, np.pi, shape.num_params) for _ in range(problem.restarts)]
    if problem.initial is not None:
        starts.insert(0, np.asarray(problem.initial, dtype=float))
    best = None
    for start in starts:
        theta, loss, history = _descend(shape, start, problem.target, problem.max_iter, problem.tol)
        if best is None or loss < best.residual:
            best = FitResult(theta.reshape(shape.param_shape), loss, history)
    return best


def save_fit(path, result: FitResult, mu=None, sigma=None) -> None:
    Path(path).write_text(json.dumps(result.to_dict(mu, sigma), indent=2))


def load_fit(path) -> dict:
    return json.loads(Path(path).read_text())
