"""Variational quantum generator.

The ansatz is a layer of RY rotations followed by ``k`` repetitions of an
entangling block of CZ gates and another RY layer.  Parameters are stored as
an array of shape ``(k + 1, n)``: row ``l`` holds the angles of rotation
layer ``l``, column ``i`` the qubit.  Flattening in C order therefore lists
layer 0 for qubits ``0..n-1`` first.

For multivariate models the ``n`` qubits are split into registers, register
0 occupying the least significant bits of the basis index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .statevector import (
    Gate,
    Statevector,
    apply_circuit,
    as_generator,
    cz,
    h,
    probabilities,
    ry,
    sample_counts,
)

ENTANGLERS = ("ring", "linear")


@dataclass(frozen=True)
class AnsatzShape:
    n: int
    k: int
    registers: tuple[int, ...] = ()
    entangler: str = "ring"

    def __post_init__(self):
        if self.n < 1 or self.k < 0:
            raise ValueError("need n >= 1 and k >= 0")
        regs = tuple(self.registers) or (self.n,)
        if sum(regs) != self.n or min(regs) < 1:
            raise ValueError(f"registers {regs} do not partition {self.n} qubits")
        if self.entangler not in ENTANGLERS:
            raise ValueError(f"unknown entangler {self.entangler!r}")
        object.__setattr__(self, "registers", regs)

    @property
    def num_params(self) -> int:
        return (self.k + 1) * self.n

    @property
    def param_shape(self) -> tuple[int, int]:
        return (self.k + 1, self.n)

    @property
    def dim(self) -> int:
        return 2**self.n


def entangling_pairs(n: int, entangler: str = "ring") -> list[tuple[int, int]]:
    """CZ pairs of one entangling block.

    The ring connects ``i`` to ``(i + 1) mod n``; for ``n == 2`` both ring
    edges are the same gate so it is emitted once.
    """
    if n == 1:
        return []
    if entangler == "linear" or n == 2:
        return [(i, i + 1) for i in range(n - 1)]
    return [(i, (i + 1) % n) for i in range(n)]


def _check_theta(shape: AnsatzShape, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.size != shape.num_params:
        raise ValueError(f"expected {shape.num_params} parameters, got {theta.size}")
    return theta.reshape(shape.param_shape)


def build_circuit(shape: AnsatzShape, theta) -> list[Gate]:
    theta = _check_theta(shape, theta)
    pairs = entangling_pairs(shape.n, shape.entangler)
    gates = [ry(q, theta[0, q]) for q in range(shape.n)]
    for layer in range(1, shape.k + 1):
        gates += [cz(a, b) for a, b in pairs]
        gates += [ry(q, theta[layer, q]) for q in range(shape.n)]
    return gates


@dataclass
class InputStateSpec:
    """Generator input state and the rule used to initialise the parameters.

    ``kind`` is ``"uniform"``, ``"zero"`` or ``"fitted_normal"``; the latter
    needs ``angles`` produced by :func:`qgan.init_fit.fit_normal_init` (a
    depth-1 circuit with a linear CZ chain).  ``init`` is ``"perturb"``
    (uniform on ``[-delta, delta]``) or ``"random"`` (uniform on
    ``[-pi, pi]``).
    """

    kind: str = "uniform"
    mu: float | None = None
    sigma: float | None = None
    angles: list[float] | None = None
    init: str = "perturb"
    delta: float = 0.1

    def __post_init__(self):
        if self.kind not in ("uniform", "zero", "fitted_normal"):
            raise ValueError(f"unknown input kind {self.kind!r}")
        if self.init not in ("perturb", "random"):
            raise ValueError(f"unknown init rule {self.init!r}")
        if self.init == "perturb" and self.delta <= 0:
            raise ValueError("delta must be positive")

    @classmethod
    def uniform(cls, delta: float = 0.1) -> "InputStateSpec":
        return cls("uniform", delta=delta)

    @classmethod
    def random(cls) -> "InputStateSpec":
        return cls("zero", init="random")

    @classmethod
    def fitted_normal(cls, angles, mu=None, sigma=None, delta: float = 0.1) -> "InputStateSpec":
        return cls("fitted_normal", mu=mu, sigma=sigma, angles=[float(a) for a in angles], delta=delta)


def fit_shape(n: int) -> AnsatzShape:
    """Shape of the shallow circuit used to load a fitted normal input."""
    return AnsatzShape(n, 1, entangler="linear")


def input_circuit(spec: InputStateSpec, n: int) -> list[Gate]:
    if spec.kind == "uniform":
        return [h(q) for q in range(n)]
    if spec.kind == "zero":
        return []
    if spec.angles is None:
        raise RuntimeError("fitted_normal input requires fitted angles; run fit_normal_init first")
    return build_circuit(fit_shape(n), spec.angles)


def prepare_input(spec: InputStateSpec, shape: AnsatzShape) -> Statevector:
    return apply_circuit(Statevector.zero(shape.n), input_circuit(spec, shape.n))


def init_params(shape: AnsatzShape, spec: InputStateSpec, seed=None) -> np.ndarray:
    rng = as_generator(seed)
    bound = np.pi if spec.init == "random" else spec.delta
    return rng.uniform(-bound, bound, size=shape.param_shape)


def generator_state(shape: AnsatzShape, theta, spec: InputStateSpec) -> Statevector:
    return apply_circuit(prepare_input(spec, shape), build_circuit(shape, theta))


def generator_probabilities(shape: AnsatzShape, theta, spec: InputStateSpec) -> np.ndarray:
    return probabilities(generator_state(shape, theta, spec))


def _cz_signs(n: int, pairs) -> np.ndarray:
    idx = np.arange(2**n)
    signs = np.ones(2**n)
    for a, b in pairs:
        signs[((idx >> a) & 1) & ((idx >> b) & 1) == 1] *= -1
    return signs


def batched_probabilities(shape: AnsatzShape, thetas, input_amplitudes) -> np.ndarray:
    """Probabilities for a stack of parameter sets, shape ``(B, 2**n)``.

    Fast path for training: all gates of the ansatz are real, so with a real
    input state the simulation stays in real arithmetic and the whole batch
    is propagated at once.
    """
    n = shape.n
    thetas = np.asarray(thetas, dtype=float).reshape(-1, *shape.param_shape)
    batch = thetas.shape[0]
    psi = np.broadcast_to(np.real(input_amplitudes), (batch, 2**n)).copy()
    signs = _cz_signs(n, entangling_pairs(n, shape.entangler))
    for layer in range(shape.k + 1):
        if layer:
            psi *= signs
        for q in range(n):
            view = psi.reshape(batch, 2 ** (n - 1 - q), 2, 2**q)
            c = np.cos(thetas[:, layer, q] / 2)[:, None, None]
            s = np.sin(thetas[:, layer, q] / 2)[:, None, None]
            a0 = view[:, :, 0, :].copy()
            a1 = view[:, :, 1, :]
            view[:, :, 0, :] = c * a0 - s * a1
            view[:, :, 1, :] = s * a0 + c * a1
    return psi**2


def index_to_tuple(index, registers: Sequence[int]) -> np.ndarray:
    """Split flat basis indices into per-register values (register 0 = LSBs).

    Returns an integer array of shape ``(..., len(registers))``.
    """
    index = np.asarray(index, dtype=np.int64)
    out = []
    shift = 0
    for width in registers:
        out.append((index >> shift) & ((1 << width) - 1))
        shift += width
    return np.stack(out, axis=-1)


def tuple_to_index(values, registers: Sequence[int]) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    if values.ndim == 1 and len(registers) == 1:
        values = values[:, None]
    index = np.zeros(values.shape[:-1], dtype=np.int64)
    shift = 0
    for d, width in enumerate(registers):
        if np.any((values[..., d] < 0) | (values[..., d] >= 1 << width)):
            raise ValueError(f"register {d} value out of range")
        index |= values[..., d] << shift
        shift += width
    return index


def grid_map(j, affine: tuple[float, float] = (1.0, 0.0)):
    """Map grid index ``j`` to ``slope * j + offset``."""
    slope, offset = affine
    if slope == 0:
        raise ValueError("affine slope must be non-zero")
    return slope * np.asarray(j) + offset


def grid_index(value, affine: tuple[float, float] = (1.0, 0.0)):
    """Nearest grid index of a real value (inverse of :func:`grid_map`)."""
    slope, offset = affine
    return np.rint((np.asarray(value) - offset) / slope).astype(np.int64)


@dataclass
class EmpiricalDistribution:
    """Counts over a (possibly multi-register) grid, indexed by flat basis index."""

    counts: np.ndarray
    registers: tuple[int, ...]

    def __post_init__(self):
        self.counts = np.asarray(self.counts)
        self.registers = tuple(self.registers)
        if self.counts.shape != (2 ** sum(self.registers),):
            raise ValueError("counts length must equal the grid size")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @property
    def total(self):
        return self.counts.sum()

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    def samples(self) -> np.ndarray:
        """Flat grid indices, one per count, in ascending order."""
        return np.repeat(np.arange(self.counts.size), self.counts.astype(np.int64))

    def sample_tuples(self) -> np.ndarray:
        return index_to_tuple(self.samples(), self.registers)


@dataclass
class GeneratorModel:
    shape: AnsatzShape
    theta: np.ndarray
    input_spec: InputStateSpec = field(default_factory=InputStateSpec)
    affine: list[tuple[float, float]] | None = None

    def __post_init__(self):
        self.theta = _check_theta(self.shape, self.theta).copy()
        if self.affine is None:
            self.affine = [(1.0, 0.0)] * len(self.shape.registers)
        self.affine = [tuple(map(float, a)) for a in self.affine]

    @classmethod
    def initialise(cls, shape: AnsatzShape, spec: InputStateSpec, seed=None, affine=None) -> "GeneratorModel":
        return cls(shape, init_params(shape, spec, seed), spec, affine)

    def input_amplitudes(self) -> np.ndarray:
        return prepare_input(self.input_spec, self.shape).amplitudes

    def circuit(self) -> list[Gate]:
        """Input preparation followed by the ansatz."""
        return input_circuit(self.input_spec, self.shape.n) + build_circuit(self.shape, self.theta)

    def probabilities(self) -> np.ndarray:
        return generator_probabilities(self.shape, self.theta, self.input_spec)

    def sample(self, shots: int, seed=None) -> EmpiricalDistribution:
        return sample_generator(self, shots, seed)

    def values(self, index) -> np.ndarray:
        """Affine-mapped grid values for flat indices, shape ``(..., d)``."""
        tup = index_to_tuple(index, self.shape.registers)
        return np.stack([grid_map(tup[..., d], a) for d, a in enumerate(self.affine)], axis=-1)

    def to_dict(self) -> dict:
        spec = self.input_spec
        return {
            "n": self.shape.n,
            "k": self.shape.k,
            "registers": list(self.shape.registers),
            "entangler": self.shape.entangler,
            "theta": self.theta.ravel().tolist(),
            "input_spec": {
                "kind": spec.kind,
                "mu": spec.mu,
                "sigma": spec.sigma,
                "angles": spec.angles,
                "init": spec.init,
                "delta": spec.delta,
            },
            "affine": [list(a) for a in self.affine],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorModel":
        shape = AnsatzShape(data["n"], data["k"], tuple(data["registers"]), data.get("entangler", "ring"))
        return cls(shape, np.array(data["theta"], dtype=float), InputStateSpec(**data["input_spec"]),
                   [tuple(a) for a in data["affine"]])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "GeneratorModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def sample_generator(model: GeneratorModel, shots: int, seed=None) -> EmpiricalDistribution:
    counts = sample_counts(model.probabilities(), shots, seed)
    return EmpiricalDistribution(counts, model.shape.registers)
