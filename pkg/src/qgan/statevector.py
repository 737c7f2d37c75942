"""Dense statevector simulator.

Basis index ``j`` encodes qubit 0 as the least significant bit, i.e. the
amplitude of ``|q_{n-1} ... q_1 q_0>`` lives at ``j = sum_t q_t 2**t``.
``RY(theta) = exp(-i theta Y / 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-10


@dataclass(frozen=True)
class Gate:
    """A single circuit operation.

    ``name`` selects the kind, ``qubits`` lists the qubits it acts on (for
    controlled kinds the controls come first, the target last) and ``params``
    carries angles, lookup tables or matrices.
    """

    name: str
    qubits: tuple[int, ...]
    params: object = None

    def inverse(self) -> "Gate":
        if self.name in ("ry", "cry", "cp", "global_phase"):
            return Gate(self.name, self.qubits, -self.params)
        if self.name == "ucry":
            return Gate(self.name, self.qubits, -np.asarray(self.params))
        if self.name == "unitary":
            return Gate(self.name, self.qubits, np.asarray(self.params).conj().T)
        # h, x, z, cz, cx, swap, mcx, phase_flip are involutions
        return self


def ry(qubit: int, theta: float) -> Gate:
    return Gate("ry", (qubit,), float(theta))


def h(qubit: int) -> Gate:
    return Gate("h", (qubit,))


def x(qubit: int) -> Gate:
    return Gate("x", (qubit,))


def z(qubit: int) -> Gate:
    return Gate("z", (qubit,))


def cz(a: int, b: int) -> Gate:
    return Gate("cz", (a, b))


def cx(control: int, target: int) -> Gate:
    return Gate("cx", (control, target))


def cry(control: int, target: int, theta: float) -> Gate:
    return Gate("cry", (control, target), float(theta))


def cp(control: int, target: int, phi: float) -> Gate:
    """Controlled phase ``diag(1, 1, 1, e^{i phi})``."""
    return Gate("cp", (control, target), float(phi))


def swap(a: int, b: int) -> Gate:
    return Gate("swap", (a, b))


def ucry(controls: Sequence[int], target: int, angles) -> Gate:
    """Uniformly controlled RY: angle ``angles[c]`` when the controls read ``c``.

    ``controls[0]`` is the least significant bit of ``c``.
    """
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (2 ** len(controls),):
        raise ValueError("ucry needs one angle per control value")
    return Gate("ucry", (*controls, target), angles)


def mcx(controls: Sequence[int], target: int, table) -> Gate:
    """X on ``target`` for every control value ``c`` with ``table[c]`` true."""
    table = np.asarray(table, dtype=bool)
    if table.shape != (2 ** len(controls),):
        raise ValueError("mcx needs one table entry per control value")
    return Gate("mcx", (*controls, target), table)


def phase_flip(qubits: Sequence[int], table) -> Gate:
    """Reflection ``I - 2P`` where ``P`` projects onto the basis states whose
    value on ``qubits`` is marked in ``table``."""
    table = np.asarray(table, dtype=bool)
    if table.shape != (2 ** len(qubits),):
        raise ValueError("phase_flip needs one table entry per register value")
    return Gate("phase_flip", tuple(qubits), table)


def unitary(matrix, qubits: Sequence[int]) -> Gate:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (2 ** len(qubits),) * 2:
        raise ValueError("matrix dimension does not match the qubit count")
    return Gate("unitary", tuple(qubits), matrix)


def global_phase(phi: float) -> Gate:
    return Gate("global_phase", (), float(phi))


def _ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


_H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]])
_Z = np.diag([1, -1])
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])


@dataclass
class Statevector:
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 2 or amps.size & (amps.size - 1):
            raise ValueError("amplitude vector length must be 2**q with q >= 1")
        self.amplitudes = amps

    @property
    def num_qubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    @classmethod
    def zero(cls, num_qubits: int) -> "Statevector":
        if num_qubits < 1:
            raise ValueError("need at least one qubit")
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(amps)

    @classmethod
    def from_probabilities(cls, probs) -> "Statevector":
        """State with real non-negative amplitudes ``sqrt(p_j)``."""
        probs = np.asarray(probs, dtype=float)
        return cls(np.sqrt(probs / probs.sum()))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def evolve(self, gates: Iterable[Gate]) -> "Statevector":
        return apply_circuit(self, gates)


def _check_qubits(qubits: Sequence[int], n: int) -> None:
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"repeated qubit index in {tuple(qubits)}")
    for q in qubits:
        if not 0 <= q < n:
            raise ValueError(f"qubit index {q} out of range for {n} qubits")


def _register_values(qubits: Sequence[int], n: int) -> np.ndarray:
    idx = np.arange(2**n)
    vals = np.zeros(2**n, dtype=np.int64)
    for pos, q in enumerate(qubits):
        vals |= ((idx >> q) & 1) << pos
    return vals


def _apply_matrix(psi, matrix, targets, controls, ctrl_values, n):
    """Apply ``matrix`` to ``targets`` of the tensor ``psi`` (shape (2,)*n) on
    the slice where each control qubit equals its ``ctrl_values`` entry."""
    index = [slice(None)] * n
    for c, v in zip(controls, ctrl_values):
        index[n - 1 - c] = v
    index = tuple(index)
    sub = psi[index]
    ctrl_axes = sorted(n - 1 - c for c in controls)

    def sub_axis(q):
        ax = n - 1 - q
        return ax - sum(1 for a in ctrl_axes if a < ax)

    r = len(targets)
    src = [sub_axis(t) for t in reversed(targets)]
    moved = np.moveaxis(sub, src, list(range(r)))
    shape = moved.shape
    out = (matrix @ moved.reshape(2**r, -1)).reshape(shape)
    psi[index] = np.moveaxis(out, list(range(r)), src)


def _bits(value: int, width: int) -> list[int]:
    return [(value >> i) & 1 for i in range(width)]


def apply_gate(state: Statevector, gate: Gate, controls: Sequence[int] = ()) -> Statevector:
    """Return the image of ``state`` under ``gate``.

    Extra ``controls`` condition the whole gate on those qubits being ``|1>``.
    """
    n = state.num_qubits
    controls = tuple(controls)
    _check_qubits(gate.qubits + controls, n)
    name = gate.name

    if name in ("phase_flip", "global_phase"):
        amps = state.amplitudes.copy()
        cond = np.ones(2**n, dtype=bool)
        for c in controls:
            cond &= ((np.arange(2**n) >> c) & 1).astype(bool)
        if name == "phase_flip":
            cond &= gate.params[_register_values(gate.qubits, n)]
            amps[cond] *= -1
        else:
            amps[cond] *= np.exp(1j * gate.params)
        return Statevector(amps)

    psi = state.amplitudes.reshape((2,) * n).copy()
    ones = [1] * len(controls)

    if name in ("ry", "h", "x", "z"):
        mat = {"h": _H, "x": _X, "z": _Z}.get(name)
        if mat is None:
            mat = _ry_matrix(gate.params)
        _apply_matrix(psi, mat, gate.qubits, controls, ones, n)
    elif name in ("cz", "cx", "cry", "cp"):
        c, t = gate.qubits
        if name == "cz":
            mat = _Z
        elif name == "cx":
            mat = _X
        elif name == "cry":
            mat = _ry_matrix(gate.params)
        else:
            mat = np.diag([1, np.exp(1j * gate.params)])
        _apply_matrix(psi, mat, (t,), (c, *controls), [1, *ones], n)
    elif name == "swap":
        _apply_matrix(psi, _SWAP, gate.qubits, controls, ones, n)
    elif name in ("ucry", "mcx"):
        *ctrl, t = gate.qubits
        for value, p in enumerate(gate.params):
            if name == "mcx":
                if not p:
                    continue
                mat = _X
            else:
                if p == 0.0:
                    continue
                mat = _ry_matrix(p)
            _apply_matrix(psi, mat, (t,), (*ctrl, *controls), _bits(value, len(ctrl)) + ones, n)
    elif name == "unitary":
        _apply_matrix(psi, gate.params, gate.qubits, controls, ones, n)
    else:
        raise ValueError(f"unknown gate kind {name!r}")
    return Statevector(psi.reshape(-1))


def apply_circuit(state: Statevector, gates: Iterable[Gate], controls: Sequence[int] = ()) -> Statevector:
    for gate in gates:
        state = apply_gate(state, gate, controls)
    return state


def inverse_circuit(gates: Sequence[Gate]) -> list[Gate]:
    return [g.inverse() for g in reversed(gates)]


def circuit_qubits(gates: Iterable[Gate]) -> list[int]:
    qs = set()
    for g in gates:
        qs.update(g.qubits)
    return sorted(qs)


def circuit_unitary(gates: Sequence[Gate], qubits: Sequence[int] | None = None) -> np.ndarray:
    """Dense matrix of ``gates`` restricted to ``qubits`` (default: their support).

    ``qubits[0]`` is the least significant bit of the matrix index.
    """
    if qubits is None:
        qubits = circuit_qubits(gates)
    qubits = list(qubits)
    if not qubits:
        raise ValueError("circuit acts on no qubits")
    relabel = {q: i for i, q in enumerate(qubits)}
    local = []
    for g in gates:
        try:
            local.append(Gate(g.name, tuple(relabel[q] for q in g.qubits), g.params))
        except KeyError as exc:
            raise ValueError(f"gate {g.name} touches qubit {exc.args[0]} outside {qubits}") from None
    r = len(qubits)
    dim = 2**r
    cols = np.empty((dim, dim), dtype=complex)
    for j in range(dim):
        basis = np.zeros(dim, dtype=complex)
        basis[j] = 1
        cols[:, j] = apply_circuit(Statevector(basis), local).amplitudes
    return cols


def apply_operator_power_controlled(
    state: Statevector,
    operator: Sequence[Gate],
    power: int,
    control: int,
    qubits: Sequence[int] | None = None,
) -> Statevector:
    """Apply ``operator**power`` to ``state`` conditioned on ``control`` being ``|1>``.

    The operator is compiled into a dense unitary on its support and raised
    to the requested power, so the cost does not grow with ``power``.
    """
    if power < 0:
        raise ValueError("power must be non-negative")
    if qubits is None:
        qubits = circuit_qubits(operator)
    if control in qubits:
        raise ValueError(f"control qubit {control} overlaps the operator support")
    mat = np.linalg.matrix_power(circuit_unitary(operator, qubits), power)
    return apply_gate(state, unitary(mat, qubits), controls=(control,))


def probabilities(state: Statevector) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2


def marginal_probabilities(state: Statevector, qubits: Sequence[int]) -> np.ndarray:
    """Outcome distribution of measuring ``qubits`` (``qubits[0]`` is the LSB)."""
    n = state.num_qubits
    _check_qubits(qubits, n)
    vals = _register_values(qubits, n)
    return np.bincount(vals, weights=probabilities(state), minlength=2 ** len(qubits))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_counts(probs, shots: int, seed=None) -> np.ndarray:
    """Multinomial outcome counts for ``shots`` measurements of ``probs``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    return as_generator(seed).multinomial(shots, p / p.sum())


def sample(state: Statevector, shots: int, seed=None) -> np.ndarray:
    """Counts over the ``2**q`` basis states from ``shots`` measurements."""
    return sample_counts(probabilities(state), shots, seed)
