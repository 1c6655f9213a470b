"""Fidelity kernel estimators, the classical RBF baseline, Gram matrix
assembly with deterministic per-entry seeding, and a concentration probe."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .circuit import adjoint, compose, prob_all_zero, run, sample
from .featuremaps import QUANTUM_KERNEL_TAGS, build_feature_map
from .seeding import rng_from_key


@dataclass(frozen=True)
class KernelEstimate:
    """One kernel value; shots is None for exact statevector evaluation."""

    value: float
    shots: int | None
    stderr: float


def encode_state(kernel: str, angles: np.ndarray) -> np.ndarray:
    """Amplitudes of the feature-map circuit run on the all-zeros state."""
    return run(build_feature_map(kernel, angles)).amplitudes


def _check_pair(x_i: np.ndarray, x_j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x_i, dtype=float).ravel()
    b = np.asarray(x_j, dtype=float).ravel()
    if a.size != b.size:
        raise ValueError(f"feature vectors differ in length: {a.size} vs {b.size}")
    return a, b


def fidelity_exact(kernel: str, x_i: np.ndarray, x_j: np.ndarray) -> KernelEstimate:
    """Squared overlap |<phi(x_j)|phi(x_i)>|^2 via statevector inner product."""
    a, b = _check_pair(x_i, x_j)
    value = float(np.abs(np.vdot(encode_state(kernel, b), encode_state(kernel, a))) ** 2)
    return KernelEstimate(value, None, 0.0)


def fidelity_shots(
    kernel: str, x_i: np.ndarray, x_j: np.ndarray, shots: int, seed: int
) -> KernelEstimate:
    """Estimate the overlap by running the encoder for x_j followed by the
    inverse encoder for x_i and counting all-zeros outcomes."""
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    a, b = _check_pair(x_i, x_j)
    circ = compose(build_feature_map(kernel, b), adjoint(build_feature_map(kernel, a)))
    counts = sample(run(circ), shots, seed)
    zeros = "0" * circ.n_qubits
    p = counts.counts.get(zeros, 0) / shots
    return KernelEstimate(p, shots, math.sqrt(p * (1.0 - p) / shots))


def rbf(x_i: np.ndarray, x_j: np.ndarray, gamma: float) -> float:
    """Classical baseline exp(-gamma * ||x_i - x_j||^2)."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    a, b = _check_pair(x_i, x_j)
    return float(np.exp(-gamma * np.sum((a - b) ** 2)))


def default_gamma(training: np.ndarray) -> float:
    """1 / (n_features * mean per-feature variance); 1.0 on zero variance."""
    arr = np.asarray(training, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"training data must be a non-empty 2-D array, got shape {arr.shape}")
    mean_var = float(arr.var(axis=0).mean())
    if mean_var == 0.0:
        return 1.0
    return 1.0 / (arr.shape[1] * mean_var)


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """A rows-by-cols kernel matrix together with how it was estimated."""

    kernel: str
    mode: str  # "exact" or "shots"
    shots: int | None
    values: np.ndarray

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def gram(
    kernel: str,
    rows: np.ndarray,
    cols: np.ndarray | None = None,
    *,
    mode: str = "exact",
    shots: int | None = None,
    seed: int = 0,
    gamma: float | None = None,
) -> GramMatrix:
    """Assemble the kernel matrix between two sets of feature vectors.

    With cols omitted (or equal to rows) the matrix is square and the upper
    triangle is mirrored, so it is symmetric by construction. In shot mode
    each entry draws from its own generator keyed by (seed, i, j), which
    makes the result independent of evaluation order; mirrored entries are
    never re-estimated. Quantum tags expect scaled angles; RBF uses the raw
    vectors with gamma (default_gamma of rows when gamma is None).
    """
    if mode not in ("exact", "shots"):
        raise ValueError(f"mode must be 'exact' or 'shots', got {mode!r}")
    row_arr = np.atleast_2d(np.asarray(rows, dtype=float))
    col_arr = row_arr if cols is None else np.atleast_2d(np.asarray(cols, dtype=float))
    if row_arr.shape[1] != col_arr.shape[1]:
        raise ValueError(
            f"row and col vectors differ in length: {row_arr.shape[1]} vs {col_arr.shape[1]}"
        )
    square = cols is None or (row_arr.shape == col_arr.shape and np.array_equal(row_arr, col_arr))

    if kernel == "RBF":
        if mode != "exact":
            raise ValueError("the classical RBF kernel has no shot mode")
        g = default_gamma(row_arr) if gamma is None else float(gamma)
        if g <= 0:
            raise ValueError(f"gamma must be positive, got {g}")
        d2 = np.sum((row_arr[:, None, :] - col_arr[None, :, :]) ** 2, axis=2)
        values = np.exp(-g * d2)
        if square:
            values = np.triu(values) + np.triu(values, 1).T
        return GramMatrix(kernel, "exact", None, values)

    if kernel not in QUANTUM_KERNEL_TAGS:
        raise ValueError(f"unknown kernel tag {kernel!r}")

    if mode == "exact":
        row_states = np.array([encode_state(kernel, x) for x in row_arr])
        col_states = row_states if square else np.array([encode_state(kernel, x) for x in col_arr])
        overlaps = row_states.conj() @ col_states.T
        values = np.abs(overlaps) ** 2
        if square:
            values = np.triu(values) + np.triu(values, 1).T
        return GramMatrix(kernel, "exact", None, values)

    n_shots = 10_000 if shots is None else int(shots)
    if n_shots < 1:
        raise ValueError(f"shots must be positive, got {n_shots}")
    values = np.empty((row_arr.shape[0], col_arr.shape[0]))
    for i, x_i in enumerate(row_arr):
        for j, x_j in enumerate(col_arr):
            if square and j < i:
                values[i, j] = values[j, i]
                continue
            rng = rng_from_key(seed, i, j)
            values[i, j] = _shot_entry(kernel, x_i, x_j, n_shots, rng)
    return GramMatrix(kernel, "shots", n_shots, values)


def _shot_entry(
    kernel: str, x_i: np.ndarray, x_j: np.ndarray, shots: int, rng: np.random.Generator
) -> float:
    circ = compose(build_feature_map(kernel, x_j), adjoint(build_feature_map(kernel, x_i)))
    probs = np.abs(run(circ).amplitudes) ** 2
    probs = probs / probs.sum()
    outcomes = rng.choice(len(probs), size=shots, p=probs)
    return float(np.count_nonzero(outcomes == 0) / shots)


def psd_clip(matrix: GramMatrix) -> GramMatrix:
    """Symmetrize, clip negative eigenvalues to zero, and reconstruct.

    Exact fidelity Grams are already positive semidefinite up to roundoff,
    so they pass through essentially unchanged; shot-mode Grams can pick up
    small negative eigenvalues that this removes before SVM training.
    """
    if matrix.rows != matrix.cols:
        raise ValueError(f"psd_clip needs a square matrix, got {matrix.rows}x{matrix.cols}")
    sym = 0.5 * (matrix.values + matrix.values.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    clipped = np.clip(eigvals, 0.0, None)
    rebuilt = (eigvecs * clipped) @ eigvecs.T
    rebuilt = 0.5 * (rebuilt + rebuilt.T)
    return replace(matrix, values=rebuilt)


@dataclass(frozen=True)
class ConcentrationRow:
    """Mean and variance of kernel values over random pairs at one width."""

    n_qubits: int
    mean: float
    variance: float


def concentration_probe(
    kernel: str, n_qubits_range: Iterable[int], pairs: int, seed: int
) -> list[ConcentrationRow]:
    """Sample off-diagonal kernel values over uniform random angle pairs in
    [0, pi]^n for each width and report their mean and population variance.

    A shrinking variance as n grows is the concentration signature that makes
    large-width fidelity kernels hard to estimate from shots.
    """
    widths = [int(n) for n in n_qubits_range]
    if not widths:
        raise ValueError("n_qubits_range is empty")
    if pairs < 2:
        raise ValueError(f"need at least 2 pairs, got {pairs}")
    out = []
    for n in widths:
        rng = rng_from_key(seed, n)
        xs = rng.uniform(0.0, np.pi, size=(pairs, n))
        ys = rng.uniform(0.0, np.pi, size=(pairs, n))
        vals = np.array([fidelity_exact(kernel, x, y).value for x, y in zip(xs, ys)])
        out.append(ConcentrationRow(n, float(vals.mean()), float(vals.var())))
    return out


def gram_to_csv(matrix: GramMatrix, path: str | Path) -> None:
    """Write the matrix row-major as CSV with a one-line metadata header."""
    shots = "-" if matrix.shots is None else str(matrix.shots)
    lines = [f"# kernel={matrix.kernel} mode={matrix.mode} shots={shots} rows={matrix.rows} cols={matrix.cols}"]
    for row in matrix.values:
        lines.append(",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def gram_from_csv(path: str | Path) -> GramMatrix:
    """Read a matrix written by gram_to_csv."""
    text = Path(path).read_text().strip().splitlines()
    if not text or not text[0].startswith("#"):
        raise ValueError(f"{path}: missing Gram metadata header")
    meta = {}
    for token in text[0].lstrip("#").split():
        key, _, val = token.partition("=")
        meta[key] = val
    try:
        kernel = meta["kernel"]
        mode = meta["mode"]
        shots = None if meta["shots"] == "-" else int(meta["shots"])
        rows, cols = int(meta["rows"]), int(meta["cols"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: malformed Gram metadata header") from exc
    values = np.array([[float(v) for v in line.split(",")] for line in text[1:]])
    if values.shape != (rows, cols):
        raise ValueError(f"{path}: header says {rows}x{cols}, payload is {values.shape}")
    return GramMatrix(kernel, mode, shots, values)
