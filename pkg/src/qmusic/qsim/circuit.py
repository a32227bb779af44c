"""Gate list circuits and a dense statevector executor.

Qubit 0 is the most significant bit of the amplitude index, so a register
``q0 q1 ... q_{n-1}`` addresses amplitude ``sum_k b_k 2^(n-1-k)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError, NotUnitaryError
from .states import StateVector, num_qubits_for

UNITARY_TOL = 1e-12

_FIXED = {
    "H": np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128),
}


def ry_matrix(beta: float) -> np.ndarray:
    c, s = np.cos(beta / 2), np.sin(beta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz_matrix(beta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * beta), np.exp(0.5j * beta)])


def _check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> None:
    err = np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))
    if err > tol * max(1.0, np.sqrt(u.shape[0])):
        raise NotUnitaryError(f"gate matrix is not unitary (||U^H U - I|| = {err:.3e})")


@dataclass(frozen=True, eq=False)
class Gate:
    """One gate application.

    ``kind`` is one of H, X, Y, Z, SWAP, RY, RZ, GPHASE or UNITARY. GPHASE has
    no targets: it multiplies the branch selected by ``controls`` by
    ``exp(j*params[0])``, which is how a global-phase rotation acting on an
    untracked register shows up once it is controlled.
    """

    kind: str
    targets: tuple[int, ...] = ()
    params: tuple[float, ...] = ()
    controls: tuple[int, ...] = ()
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        qubits = self.targets + self.controls
        if len(set(qubits)) != len(qubits):
            raise DimensionError(f"{self.kind}: a qubit appears twice")
        u = self.base_matrix()
        if u.shape != (2 ** len(self.targets),) * 2:
            raise DimensionError(f"{self.kind}: matrix shape {u.shape} does not fit {len(self.targets)} targets")
        if self.kind == "UNITARY":
            _check_unitary(u)

    def base_matrix(self) -> np.ndarray:
        k = self.kind
        if k in _FIXED:
            return _FIXED[k]
        if k == "RY":
            return ry_matrix(self.params[0])
        if k == "RZ":
            return rz_matrix(self.params[0])
        if k == "GPHASE":
            return np.array([[np.exp(1j * self.params[0])]])
        if k == "UNITARY":
            return np.asarray(self.matrix, dtype=np.complex128)
        raise ValueError(f"unknown gate kind {k!r}")

    def inverse(self) -> "Gate":
        if self.kind in ("H", "X", "Y", "Z", "SWAP"):
            return self
        if self.kind in ("RY", "RZ", "GPHASE"):
            return Gate(self.kind, self.targets, (-self.params[0],), self.controls)
        return Gate("UNITARY", self.targets, (), self.controls, self.base_matrix().conj().T)

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets


@dataclass
class Circuit:
    num_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def append(self, gate: Gate) -> "Circuit":
        for q in gate.qubits:
            if not 0 <= q < self.num_qubits:
                raise DimensionError(f"qubit {q} out of range for {self.num_qubits}-qubit circuit")
        self.gates.append(gate)
        return self

    def extend(self, other: "Circuit", offset: int = 0) -> "Circuit":
        """Append ``other``'s gates with every qubit index shifted by ``offset``."""
        for g in other.gates:
            self.append(
                Gate(g.kind, tuple(q + offset for q in g.targets), g.params,
                     tuple(q + offset for q in g.controls), g.matrix)
            )
        return self

    def h(self, q: int) -> "Circuit":
        return self.append(Gate("H", (q,)))

    def x(self, q: int) -> "Circuit":
        return self.append(Gate("X", (q,)))

    def ry(self, q: int, beta: float) -> "Circuit":
        return self.append(Gate("RY", (q,), (beta,)))

    def rz(self, q: int, beta: float) -> "Circuit":
        return self.append(Gate("RZ", (q,), (beta,)))

    def cz(self, a: int, b: int) -> "Circuit":
        return self.append(Gate("Z", (b,), controls=(a,)))

    def cnot(self, control: int, target: int) -> "Circuit":
        return self.append(Gate("X", (target,), controls=(control,)))

    def swap(self, a: int, b: int) -> "Circuit":
        return self.append(Gate("SWAP", (a, b)))

    def gphase(self, phi: float, controls=()) -> "Circuit":
        return self.append(Gate("GPHASE", (), (phi,), tuple(controls)))

    def unitary(self, matrix, targets, controls=()) -> "Circuit":
        return self.append(Gate("UNITARY", tuple(targets), (), tuple(controls), np.asarray(matrix)))

    def inverse(self) -> "Circuit":
        return Circuit(self.num_qubits, [g.inverse() for g in reversed(self.gates)])

    def to_matrix(self) -> np.ndarray:
        """Dense unitary of the whole circuit (columns are images of basis states)."""
        d = 2**self.num_qubits
        return apply_gates(np.eye(d, dtype=np.complex128), self.gates, self.num_qubits)

    def __len__(self) -> int:
        return len(self.gates)


def apply_gate(psi: np.ndarray, gate: Gate, num_qubits: int) -> np.ndarray:
    """Apply one gate to ``psi`` of shape (2**n,) or (2**n, batch)."""
    shape = psi.shape
    t = psi.reshape((2,) * num_qubits + (-1,))
    axes = list(gate.controls) + list(gate.targets)
    front = list(range(len(axes)))
    t = np.moveaxis(t, axes, front).copy()
    sel = (1,) * len(gate.controls)
    sub = t[sel]
    u = gate.base_matrix()
    t[sel] = (u @ sub.reshape(u.shape[0], -1)).reshape(sub.shape)
    return np.moveaxis(t, front, axes).reshape(shape)


def apply_gates(psi: np.ndarray, gates, num_qubits: int) -> np.ndarray:
    for g in gates:
        psi = apply_gate(psi, g, num_qubits)
    return psi


def run_circuit(circuit: Circuit, state: StateVector) -> StateVector:
    if state.num_qubits != circuit.num_qubits:
        raise DimensionError(
            f"circuit acts on {circuit.num_qubits} qubits, state has {state.num_qubits}"
        )
    num_qubits_for(state.dim)
    out = apply_gates(state.amplitudes, circuit.gates, circuit.num_qubits)
    return StateVector(out)
