"""Data-encoding circuits for the eleven quantum kernel tags, plus the
min-max angle scaler that maps feature vectors into [0, pi]."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Gate, ccx, cnot, crx, cry, h, ry, rz

QUANTUM_KERNEL_TAGS = (
    "QK0", "QK1", "QK2", "QK3", "QK4", "QK5", "QK6", "QK7", "QK8", "QK9", "QK10",
)
KERNEL_TAGS = QUANTUM_KERNEL_TAGS + ("RBF",)


@dataclass(frozen=True, eq=False)
class AngleScaler:
    """Per-feature min-max bounds fitted on training data."""

    mins: np.ndarray
    maxs: np.ndarray

    @property
    def n_features(self) -> int:
        return self.mins.size


def fit_scaler(training: np.ndarray) -> AngleScaler:
    """Fit per-feature minima and maxima over a 2-D array of training rows."""
    arr = np.asarray(training, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"training data must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("training data contains non-finite values")
    return AngleScaler(arr.min(axis=0), arr.max(axis=0))


def scale(scaler: AngleScaler, x: np.ndarray) -> np.ndarray:
    """Map a feature vector to angles in [0, pi].

    Each feature maps linearly so the fitted minimum lands on 0 and the
    fitted maximum on pi; out-of-range values clamp to the ends, and a
    feature that was constant during fitting maps to pi/2.
    """
    vec = np.asarray(x, dtype=float).ravel()
    if vec.size != scaler.n_features:
        raise ValueError(f"expected {scaler.n_features} features, got {vec.size}")
    span = scaler.maxs - scaler.mins
    safe = np.where(span > 0, span, 1.0)
    angles = np.pi * (vec - scaler.mins) / safe
    angles = np.where(span > 0, angles, np.pi / 2.0)
    return np.clip(angles, 0.0, np.pi)


def build_feature_map(kernel: str, angles: np.ndarray) -> Circuit:
    """Build the encoding circuit for one quantum kernel tag, one qubit per
    feature angle.

    QK0 encodes with a bare RY(a_i) layer. Every other tag starts from the
    QK1 layer (H then RY(a_i) on each qubit) and appends its entangling tail:

    - QK2/QK3: a neighbour staircase of CRY/CRX(a_{i+1}) with control i and
      target i+1;
    - QK4: CRY(a_i) from each qubit i onto the last qubit;
    - QK5: QK4 with an RZ(a_i) on the last qubit after each CRY;
    - QK6: staircase CNOT(i, i+1), each followed by RY(a_{i+1}) on the target;
    - QK7/QK8: CNOT(i, last) each followed by RY(a_i)/RZ(a_i) on the last
      qubit;
    - QK9: QK7 plus a closing RZ(a_j) on every qubit;
    - QK10: QK9 with each CNOT replaced by a Toffoli whose controls are i and
      i+1 (wrapping to 0 when i+1 is the target); with two qubits there is no
      free second control, so it falls back to the QK9 CNOT.
    """
    if kernel == "RBF":
        raise ValueError("RBF is the classical baseline kernel; it has no circuit")
    if kernel not in QUANTUM_KERNEL_TAGS:
        raise ValueError(f"unknown kernel tag {kernel!r}")
    a = np.asarray(angles, dtype=float).ravel()
    n = a.size
    if n < 1:
        raise ValueError("at least one feature angle is required")
    if kernel not in ("QK0", "QK1") and n < 2:
        raise ValueError(f"{kernel} needs at least two qubits, got {n}")

    if kernel == "QK0":
        return Circuit(n, tuple(ry(i, a[i]) for i in range(n)))

    last = n - 1
    gates: list[Gate] = [h(i) for i in range(n)]
    gates += [ry(i, a[i]) for i in range(n)]
    if kernel == "QK2":
        gates += [cry(i, i + 1, a[i + 1]) for i in range(n - 1)]
    elif kernel == "QK3":
        gates += [crx(i, i + 1, a[i + 1]) for i in range(n - 1)]
    elif kernel == "QK4":
        gates += [cry(i, last, a[i]) for i in range(n - 1)]
    elif kernel == "QK5":
        for i in range(n - 1):
            gates += [cry(i, last, a[i]), rz(last, a[i])]
    elif kernel == "QK6":
        for i in range(n - 1):
            gates += [cnot(i, i + 1), ry(i + 1, a[i + 1])]
    elif kernel == "QK7":
        for i in range(n - 1):
            gates += [cnot(i, last), ry(last, a[i])]
    elif kernel == "QK8":
        for i in range(n - 1):
            gates += [cnot(i, last), rz(last, a[i])]
    elif kernel in ("QK9", "QK10"):
        for i in range(n - 1):
            if kernel == "QK10" and n > 2:
                second = i + 1 if i + 1 < last else 0
                gates.append(ccx(i, second, last))
            else:
                gates.append(cnot(i, last))
            gates.append(ry(last, a[i]))
        gates += [rz(j, a[j]) for j in range(n)]
    return Circuit(n, tuple(gates))


@dataclass(frozen=True)
class KernelInfo:
    """Catalog entry for one kernel tag."""

    tag: str
    classical: bool
    description: str
    gate_formula: str
    notes: str = ""


_CATALOG = (
    KernelInfo(
        "QK0", False,
        "RY(a_i) on every qubit; plain angle encoding, no entanglement",
        "n",
        notes="an H-only layer would give a constant kernel, so angles are encoded with RY",
    ),
    KernelInfo("QK1", False, "H then RY(a_i) on every qubit", "2n"),
    KernelInfo(
        "QK2", False,
        "QK1 layer, then a CRY(a_{i+1}) staircase with control i and target i+1",
        "3n - 1",
    ),
    KernelInfo("QK3", False, "QK2 with CRX in place of CRY", "3n - 1"),
    KernelInfo(
        "QK4", False,
        "QK1 layer, then CRY(a_i) from each qubit onto the last qubit",
        "3n - 1",
    ),
    KernelInfo(
        "QK5", False,
        "QK4 with an RZ(a_i) on the last qubit after each CRY",
        "4n - 2",
    ),
    KernelInfo(
        "QK6", False,
        "QK1 layer, then staircase CNOT(i, i+1) each followed by RY(a_{i+1}) on the target",
        "4n - 2",
    ),
    KernelInfo(
        "QK7", False,
        "QK1 layer, then CNOT(i, last) each followed by RY(a_i) on the last qubit",
        "4n - 2",
    ),
    KernelInfo(
        "QK8", False,
        "QK7 with RZ in place of the inserted RY gates",
        "4n - 2",
        notes="only the gates between the CNOTs change; the H+RY base layer stays",
    ),
    KernelInfo(
        "QK9", False,
        "QK7 plus a closing RZ(a_j) on every qubit",
        "5n - 2",
    ),
    KernelInfo(
        "QK10", False,
        "QK9 with each CNOT replaced by a Toffoli with controls i and i+1",
        "5n - 2",
        notes="the second control wraps to qubit 0 when i+1 is the target; two-qubit inputs fall back to CNOT",
    ),
    KernelInfo(
        "RBF", True,
        "classical radial basis function baseline exp(-gamma * squared distance); no circuit",
        "-",
    ),
)


def kernel_catalog() -> tuple[KernelInfo, ...]:
    """All kernel tags with descriptions and gate-count formulas."""
    return _CATALOG


def gate_count(kernel: str, n_features: int) -> int:
    """Number of gates build_feature_map emits for the tag at n_features."""
    if kernel == "RBF":
        raise ValueError("RBF is classical; it has no gate count")
    if kernel not in QUANTUM_KERNEL_TAGS:
        raise ValueError(f"unknown kernel tag {kernel!r}")
    n = int(n_features)
    if n < 1 or (kernel not in ("QK0", "QK1") and n < 2):
        raise ValueError(f"{kernel} is not defined at {n} feature(s)")
    if kernel == "QK0":
        return n
    if kernel == "QK1":
        return 2 * n
    if kernel in ("QK2", "QK3", "QK4"):
        return 3 * n - 1
    if kernel in ("QK5", "QK6", "QK7", "QK8"):
        return 4 * n - 2
    return 5 * n - 2  # QK9, QK10


def catalog_json() -> str:
    """The catalog serialized as a JSON array of entries."""
    entries = [
        {
            "tag": info.tag,
            "classical": info.classical,
            "description": info.description,
            "gate_formula": info.gate_formula,
            "notes": info.notes,
        }
        for info in _CATALOG
    ]
    return json.dumps(entries, indent=2, sort_keys=True)
