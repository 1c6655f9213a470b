"""Dense statevector simulation of a small rotation-plus-CNOT gate set.

Conventions, fixed so that results are reproducible bit for bit:

- qubit 0 is the most significant bit of a basis-state index, so on three
  qubits the index 5 corresponds to the bitstring "101" read qubit 0 first;
- rotations follow the half-angle convention exp(-i*angle*G/2), e.g.
  RY(a) = [[cos a/2, -sin a/2], [sin a/2, cos a/2]];
- controlled gates apply their target unitary iff every control is |1>, and
  control qubits are always listed before the target.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .seeding import rng_from_key

MAX_QUBITS = 20

_ARITY = {
    "H": 1,
    "RX": 1,
    "RY": 1,
    "RZ": 1,
    "CRX": 2,
    "CRY": 2,
    "CRZ": 2,
    "CNOT": 2,
    "CCX": 3,
}
_TAKES_ANGLE = frozenset({"RX", "RY", "RZ", "CRX", "CRY", "CRZ"})
GATE_KINDS = tuple(_ARITY)
BASIS_KINDS = ("H", "RX", "RY", "RZ", "CNOT")

_SQRT_HALF = 1.0 / math.sqrt(2.0)
_H_MATRIX = np.array([[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]], dtype=complex)
_X_MATRIX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def _rotation_matrix(axis: str, angle: float) -> np.ndarray:
    half = 0.5 * angle
    c = math.cos(half)
    s = math.sin(half)
    if axis == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if axis == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    return np.array([[cmath.exp(-1j * half), 0.0], [0.0, cmath.exp(1j * half)]])


@dataclass(frozen=True)
class Gate:
    """One gate: a kind, the qubits it touches (controls first), and an angle
    for the rotation kinds."""

    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if len(qubits) != _ARITY[self.kind]:
            raise ValueError(
                f"{self.kind} takes {_ARITY[self.kind]} qubit(s), got {len(qubits)}"
            )
        if any(q < 0 for q in qubits):
            raise ValueError(f"negative qubit index in {qubits}")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"duplicate qubit index in {qubits}")
        takes_angle = self.kind in _TAKES_ANGLE
        if takes_angle and self.angle is None:
            raise ValueError(f"{self.kind} requires an angle")
        if not takes_angle and self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")
        if takes_angle:
            object.__setattr__(self, "angle", float(self.angle))


def h(q: int) -> Gate:
    return Gate("H", (q,))


def rx(q: int, angle: float) -> Gate:
    return Gate("RX", (q,), angle)


def ry(q: int, angle: float) -> Gate:
    return Gate("RY", (q,), angle)


def rz(q: int, angle: float) -> Gate:
    return Gate("RZ", (q,), angle)


def crx(control: int, target: int, angle: float) -> Gate:
    return Gate("CRX", (control, target), angle)


def cry(control: int, target: int, angle: float) -> Gate:
    return Gate("CRY", (control, target), angle)


def crz(control: int, target: int, angle: float) -> Gate:
    return Gate("CRZ", (control, target), angle)


def cnot(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


def ccx(control_a: int, control_b: int, target: int) -> Gate:
    return Gate("CCX", (control_a, control_b, target))


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Statevector on n_qubits qubits; amplitudes indexed with qubit 0 as the
    most significant bit."""

    n_qubits: int
    amplitudes: np.ndarray


def zero_state(n_qubits: int) -> QuantumState:
    """All-zeros computational basis state |0...0>."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return QuantumState(n_qubits, amps)


def _apply_single(amps: np.ndarray, qubit: int, matrix: np.ndarray) -> np.ndarray:
    psi = amps.reshape(2**qubit, 2, -1)
    lo = psi[:, 0, :]
    hi = psi[:, 1, :]
    out = np.empty_like(psi)
    out[:, 0, :] = matrix[0, 0] * lo + matrix[0, 1] * hi
    out[:, 1, :] = matrix[1, 0] * lo + matrix[1, 1] * hi
    return out.reshape(amps.shape)


def _apply_controlled(
    amps: np.ndarray,
    n_qubits: int,
    controls: tuple[int, ...],
    target: int,
    matrix: np.ndarray,
) -> np.ndarray:
    psi = amps.reshape((2,) * n_qubits).copy()
    selector: list[object] = [slice(None)] * n_qubits
    for c in controls:
        selector[c] = 1
    sub = psi[tuple(selector)]
    # Fixing each control axis by an integer drops it, shifting later axes left.
    axis = target - sum(1 for c in controls if c < target)
    moved = np.moveaxis(sub, axis, 0)
    lo = moved[0].copy()
    hi = moved[1].copy()
    moved[0] = matrix[0, 0] * lo + matrix[0, 1] * hi
    moved[1] = matrix[1, 0] * lo + matrix[1, 1] * hi
    return psi.reshape(amps.shape)


def apply_gate(state: QuantumState, gate: Gate) -> QuantumState:
    """Apply one gate and return the new state; the input is not mutated."""
    n = state.n_qubits
    for q in gate.qubits:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for {n}-qubit state")
    kind = gate.kind
    if kind == "H":
        out = _apply_single(state.amplitudes, gate.qubits[0], _H_MATRIX)
    elif kind in ("RX", "RY", "RZ"):
        out = _apply_single(state.amplitudes, gate.qubits[0], _rotation_matrix(kind, gate.angle))
    elif kind == "CNOT":
        out = _apply_controlled(state.amplitudes, n, gate.qubits[:1], gate.qubits[1], _X_MATRIX)
    elif kind == "CCX":
        out = _apply_controlled(state.amplitudes, n, gate.qubits[:2], gate.qubits[2], _X_MATRIX)
    else:  # CRX / CRY / CRZ
        matrix = _rotation_matrix(kind[1:], gate.angle)
        out = _apply_controlled(state.amplitudes, n, gate.qubits[:1], gate.qubits[1], matrix)
    return QuantumState(n, out)


@dataclass(frozen=True)
class Circuit:
    """An ordered gate list on a fixed number of qubits."""

    n_qubits: int
    gates: tuple[Gate, ...]

    def __post_init__(self) -> None:
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        object.__setattr__(self, "gates", tuple(self.gates))
        for gate in self.gates:
            for q in gate.qubits:
                if q >= self.n_qubits:
                    raise IndexError(
                        f"gate {gate.kind} touches qubit {q} on a {self.n_qubits}-qubit circuit"
                    )


def run(circuit: Circuit) -> QuantumState:
    """Run the circuit on |0...0> and return the final state."""
    state = zero_state(circuit.n_qubits)
    for gate in circuit.gates:
        state = apply_gate(state, gate)
    return state


def adjoint(circuit: Circuit) -> Circuit:
    """Inverse circuit: gates reversed, every rotation angle negated."""
    inverted = []
    for gate in reversed(circuit.gates):
        if gate.angle is None:
            inverted.append(gate)
        else:
            inverted.append(Gate(gate.kind, gate.qubits, -gate.angle))
    return Circuit(circuit.n_qubits, tuple(inverted))


def compose(first: Circuit, second: Circuit) -> Circuit:
    """Concatenate two circuits: `first` runs before `second`."""
    if first.n_qubits != second.n_qubits:
        raise ValueError(
            f"cannot compose circuits on {first.n_qubits} and {second.n_qubits} qubits"
        )
    return Circuit(first.n_qubits, first.gates + second.gates)


@dataclass(frozen=True)
class ShotCounts:
    """Measurement outcome histogram keyed by bitstring, qubit 0 first."""

    shots: int
    counts: dict[str, int]


def sample(state: QuantumState, shots: int, seed: int) -> ShotCounts:
    """Draw `shots` computational-basis measurements from the Born distribution."""
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    probs = np.abs(state.amplitudes) ** 2
    probs = probs / probs.sum()
    rng = rng_from_key(seed)
    outcomes = rng.choice(len(probs), size=shots, p=probs)
    values, freqs = np.unique(outcomes, return_counts=True)
    n = state.n_qubits
    counts = {format(int(v), f"0{n}b"): int(c) for v, c in zip(values, freqs)}
    return ShotCounts(shots, counts)


def prob_all_zero(state: QuantumState) -> float:
    """Probability of the all-zeros outcome."""
    return float(np.abs(state.amplitudes[0]) ** 2)


def logical_depth(circuit: Circuit) -> int:
    """Greedy left-to-right layering depth: each gate lands in the earliest
    layer after every gate that shares one of its qubits."""
    frontier = [0] * circuit.n_qubits
    depth = 0
    for gate in circuit.gates:
        layer = max(frontier[q] for q in gate.qubits) + 1
        for q in gate.qubits:
            frontier[q] = layer
        depth = max(depth, layer)
    return depth


_QUARTER = math.pi / 4.0


def _ccx_basis(a: int, b: int, t: int) -> list[Gate]:
    return [
        h(t),
        cnot(b, t),
        rz(t, -_QUARTER),
        cnot(a, t),
        rz(t, _QUARTER),
        cnot(b, t),
        rz(t, -_QUARTER),
        cnot(a, t),
        rz(b, _QUARTER),
        rz(t, _QUARTER),
        h(t),
        cnot(a, b),
        rz(a, _QUARTER),
        rz(b, -_QUARTER),
        cnot(a, b),
    ]


def decompose(circuit: Circuit) -> Circuit:
    """Rewrite to the {H, RX, RY, RZ, CNOT} basis.

    Controlled rotations expand to two CNOTs with half-angle rotations on the
    target (CRX via an H basis change around a CRZ expansion); CCX expands to
    the six-CNOT construction with H and RZ(+-pi/4). The result equals the
    original up to a global phase.
    """
    gates: list[Gate] = []
    for gate in circuit.gates:
        if gate.kind in BASIS_KINDS:
            gates.append(gate)
            continue
        if gate.kind == "CCX":
            a, b, t = gate.qubits
            gates.extend(_ccx_basis(a, b, t))
            continue
        c, t = gate.qubits
        half = 0.5 * gate.angle
        if gate.kind == "CRY":
            gates.extend([ry(t, half), cnot(c, t), ry(t, -half), cnot(c, t)])
        elif gate.kind == "CRZ":
            gates.extend([rz(t, half), cnot(c, t), rz(t, -half), cnot(c, t)])
        else:  # CRX: conjugate the CRZ expansion by H on the target
            gates.extend([h(t), rz(t, half), cnot(c, t), rz(t, -half), cnot(c, t), h(t)])
    return Circuit(circuit.n_qubits, tuple(gates))
