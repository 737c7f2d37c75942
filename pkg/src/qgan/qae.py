"""Amplitude estimation of a European call payoff.

Register layout of the oracle ``A`` (``n`` grid qubits):

* qubits ``0 .. n-1``: the loaded distribution ``sum_i sqrt(p_i) |i>``
* qubit ``n``: comparator ancilla, flipped when ``i > K``
* qubit ``n + 1``: payoff ancilla, rotated so that ``P[1] = f(i)`` with
  ``f(i) = (i - K) / (2**n - K - 1)``
* qubits ``n + 2 ..``: evaluation register of the phase estimation

The payoff rotation uses exact angles and the comparator acts on basis
states directly; neither is decomposed into elementary arithmetic gates.
Discounting is ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .generator import GeneratorModel
from .statevector import (
    Gate,
    Statevector,
    apply_circuit,
    apply_gate,
    circuit_unitary,
    cp,
    global_phase,
    h,
    inverse_circuit,
    marginal_probabilities,
    mcx,
    phase_flip,
    swap,
    ucry,
    unitary,
)

MAX_QUBITS = 18


def amplitude_loader(probs) -> list[Gate]:
    """Exact state preparation of ``sum_i sqrt(p_i) |i>`` from ``|0...0>``.

    A tree of uniformly controlled RY gates, most significant qubit first;
    each rotation splits the mass of a prefix between its two children.
    """
    probs = np.asarray(probs, dtype=float)
    n = int(probs.size).bit_length() - 1
    if probs.size != 2**n or n < 1:
        raise ValueError("probability vector length must be a power of two")
    if np.any(probs < 0):
        raise ValueError("probabilities must be non-negative")
    probs = probs / probs.sum()
    gates = []
    for level in range(n):
        q = n - 1 - level
        # mass of each prefix (values of qubits above q) split by qubit q
        blocks = probs.reshape(2**level, 2, 2**q)
        mass = blocks.sum(axis=2)
        total = mass.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(total > 0, mass[:, 1] / np.where(total > 0, total, 1), 0.0)
        angles = 2 * np.arcsin(np.sqrt(np.clip(frac, 0, 1)))
        # prefix value c is read from qubits q+1 .. n-1 with q+1 as LSB, but the
        # reshape above orders prefixes with qubit n-1 most significant: same thing
        controls = list(range(q + 1, n))
        gates.append(ucry(controls, q, angles))
    return gates


@dataclass
class QaeProblem:
    """A European call payoff to be estimated.

    ``loader`` is either a :class:`GeneratorModel` or a probability vector
    over the ``2**n`` grid values (loaded exactly).
    """

    loader: object
    strike: int
    eval_qubits: int = 8

    def __post_init__(self):
        if isinstance(self.loader, GeneratorModel):
            if len(self.loader.shape.registers) != 1:
                raise ValueError("pricing needs a univariate generator")
            self.num_qubits = self.loader.shape.n
        else:
            self.loader = np.asarray(self.loader, dtype=float)
            self.num_qubits = int(self.loader.size).bit_length() - 1
            if self.loader.size != 2**self.num_qubits:
                raise ValueError("probability vector length must be a power of two")
        if not 0 <= self.strike < 2**self.num_qubits:
            raise ValueError("strike must lie on the grid")
        if self.strike >= 2**self.num_qubits - 1:
            raise ValueError("strike at the top grid value leaves no payoff range (f undefined)")
        if self.eval_qubits < 1:
            raise ValueError("need at least one evaluation qubit")

    @property
    def payoff_scale(self) -> int:
        return 2**self.num_qubits - self.strike - 1

    @property
    def oracle_qubits(self) -> int:
        return self.num_qubits + 2

    @property
    def objective_qubit(self) -> int:
        return self.num_qubits + 1

    def probabilities(self) -> np.ndarray:
        if isinstance(self.loader, GeneratorModel):
            return self.loader.probabilities()
        return self.loader / self.loader.sum()

    def loader_circuit(self) -> list[Gate]:
        if isinstance(self.loader, GeneratorModel):
            return self.loader.circuit()
        return amplitude_loader(self.loader)


def payoff_fraction(i, strike: int, num_qubits: int):
    """``f(i) = (i - K) / (2**n - K - 1)`` above the strike, ``0`` below."""
    i = np.asarray(i, dtype=float)
    return np.where(i > strike, (i - strike) / (2**num_qubits - strike - 1), 0.0)


def build_oracle_a(problem: QaeProblem) -> list[Gate]:
    n, k = problem.num_qubits, problem.strike
    grid = list(range(n))
    values = np.arange(2**n)
    comparator = mcx(grid, n, values > k)
    # controls: grid qubits then the comparator, so control value = i + 2**n * c
    angles = np.zeros(2 ** (n + 1))
    angles[2**n + values] = np.where(values > k, 2 * np.arcsin(np.sqrt(payoff_fraction(values, k, n))), 0.0)
    payoff = ucry(grid + [n], n + 1, angles)
    return problem.loader_circuit() + [comparator, payoff]


def objective_probability(problem: QaeProblem) -> float:
    """``P[1]`` on the payoff ancilla after ``A|0>``, read from the statevector."""
    state = apply_circuit(Statevector.zero(problem.oracle_qubits), build_oracle_a(problem))
    return float(marginal_probabilities(state, [problem.objective_qubit])[1])


def grover_operator(problem: QaeProblem) -> list[Gate]:
    """``Q = -A S_0 A^dagger S_good`` on the oracle register.

    ``S_0`` flips the sign of ``|0...0>`` and ``S_good`` the sign of states
    with the payoff ancilla in ``|1>``.  On the span of the good and bad
    components ``Q`` rotates by ``2 theta_a`` with ``sin^2 theta_a = a``.
    """
    a_gates = build_oracle_a(problem)
    width = problem.oracle_qubits
    zero_table = np.zeros(2**width, dtype=bool)
    zero_table[0] = True
    return (
        [phase_flip([problem.objective_qubit], [False, True])]
        + inverse_circuit(a_gates)
        + [phase_flip(list(range(width)), zero_table)]
        + a_gates
        + [global_phase(np.pi)]
    )


def qft(qubits) -> list[Gate]:
    """Quantum Fourier transform ``|x> -> 2**(-m/2) sum_y e^{2 pi i x y / 2**m} |y>``
    with ``qubits[0]`` the least significant bit."""
    qubits = list(qubits)
    m = len(qubits)
    gates = []
    for j in range(m - 1, -1, -1):
        gates.append(h(qubits[j]))
        for l in range(j - 1, -1, -1):
            gates.append(cp(qubits[l], qubits[j], np.pi / 2 ** (j - l)))
    for j in range(m // 2):
        gates.append(swap(qubits[j], qubits[m - 1 - j]))
    return gates


def inverse_qft(qubits) -> list[Gate]:
    return inverse_circuit(qft(qubits))


@dataclass
class QaeResult:
    amplitude: float
    payoff: float
    grid_estimate: int
    eval_qubits: int
    error_bound: float
    ci: tuple[float, float]
    distribution: dict = field(repr=False, default_factory=dict)

    def report(self, source: str = "") -> dict:
        return {"method": "qae", "estimate": self.payoff, "ci": list(self.ci),
                "samples_or_m": self.eval_qubits, "distribution_source": source}


def amplitude_error_bound(a: float, m: int) -> float:
    """Phase error ``pi / 2**m`` pushed through ``a = sin^2``:
    ``2 pi sqrt(a (1 - a)) / M + pi^2 / M^2``."""
    big_m = 2**m
    return float(2 * np.pi * np.sqrt(a * (1 - a)) / big_m + np.pi**2 / big_m**2)


def qae_distribution(problem: QaeProblem) -> np.ndarray:
    """Probabilities of the evaluation-register outcomes ``y = 0 .. 2**m - 1``."""
    n_or = problem.oracle_qubits
    m = problem.eval_qubits
    total = n_or + m
    if total > MAX_QUBITS:
        raise ValueError(f"{total} qubits exceed the simulation limit of {MAX_QUBITS}")
    oracle = list(range(n_or))
    evals = list(range(n_or, total))
    state = apply_circuit(Statevector.zero(total), build_oracle_a(problem))
    state = apply_circuit(state, [h(q) for q in evals])
    q_mat = circuit_unitary(grover_operator(problem), oracle)
    power = q_mat
    for j, ctrl in enumerate(evals):
        if j:
            power = power @ power
        state = apply_gate(state, unitary(power, oracle), controls=(ctrl,))
    state = apply_circuit(state, inverse_qft(evals))
    return marginal_probabilities(state, evals)


def run_qae(problem: QaeProblem) -> QaeResult:
    """Phase estimation on ``Q``; the most likely amplitude estimate wins.

    Outcomes ``y`` and ``2**m - y`` map to the same amplitude and are pooled;
    ties go to the smaller ``y``.
    """
    m = problem.eval_qubits
    big_m = 2**m
    dist = qae_distribution(problem)
    pooled = {}
    for y, prob in enumerate(dist):
        y_red = min(y, big_m - y)
        pooled[y_red] = pooled.get(y_red, 0.0) + float(prob)
    best_p = max(pooled.values())
    y_best = min(y for y, p in pooled.items() if p >= best_p - 1e-12)
    a = float(np.sin(np.pi * y_best / big_m) ** 2)
    scale = problem.payoff_scale
    bound = amplitude_error_bound(a, m)
    ci = (scale * max(a - bound, 0.0), scale * min(a + bound, 1.0))
    return QaeResult(a, a * scale, y_best, m, float(np.pi / big_m), ci,
                     {float(np.sin(np.pi * y / big_m) ** 2): p for y, p in sorted(pooled.items())})


@dataclass
class McResult:
    estimate: float
    ci_halfwidth: float
    samples: int

    @property
    def ci(self) -> tuple[float, float]:
        return (self.estimate - self.ci_halfwidth, self.estimate + self.ci_halfwidth)

    def report(self, source: str = "") -> dict:
        return {"method": "mc", "estimate": self.estimate, "ci": list(self.ci),
                "samples_or_m": self.samples, "distribution_source": source}


def monte_carlo_payoff(samples, strike: float) -> McResult:
    """Sample mean of ``max(s - K, 0)`` with a 95% normal confidence interval."""
    s = np.asarray(samples, dtype=float).ravel()
    if s.size == 0:
        raise ValueError("no samples")
    payoff = np.maximum(s - strike, 0.0)
    sd = payoff.std(ddof=1) if s.size > 1 else 0.0
    return McResult(float(payoff.mean()), float(1.96 * sd / np.sqrt(s.size)), int(s.size))


def write_report(path, report: dict) -> None:
    Path(path).write_text(json.dumps(report, indent=2))
