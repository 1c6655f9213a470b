"""Principal component features, an SMO-trained C-SVM on precomputed Gram
matrices, and threshold/ranking evaluation metrics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernel import GramMatrix
from .seeding import rng_from_key


@dataclass(eq=False)
class PcaModel:
    """Top-k principal axes of centered training data.

    components has shape (k, dimension) with orthonormal rows; eigenvalues
    are the matching population-covariance eigenvalues in descending order;
    total_variance is the sum over all covariance eigenvalues, not just the
    retained ones.
    """

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    total_variance: float


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude entry is positive."""
    out = components.copy()
    for row in out:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            row *= -1.0
    return out


def pca_fit(samples: np.ndarray, k: int) -> PcaModel:
    """Fit the top-k principal components of the sample rows.

    When the dimension exceeds the sample count the eigenproblem is solved
    on the samples-by-samples inner product matrix instead of the full
    covariance, which is what makes flattened-image inputs tractable.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"samples must be a 2-D array, got shape {X.shape}")
    m, d = X.shape
    if m < 2:
        raise ValueError(f"need at least 2 samples, got {m}")
    if not np.all(np.isfinite(X)):
        raise ValueError("samples contain non-finite values")
    if not 1 <= k <= min(m - 1, d):
        raise ValueError(f"k must be in 1..{min(m - 1, d)}, got {k}")
    mean = X.mean(axis=0)
    Xc = X - mean
    total_variance = float(np.sum(Xc**2) / m)
    if d > m:
        small = (Xc @ Xc.T) / m
        eigvals, eigvecs = np.linalg.eigh(small)
        order = np.argsort(eigvals)[::-1][:k]
        top = eigvals[order]
        if top[-1] <= 1e-12 * max(top[0], 1.0):
            raise ValueError(f"data rank is below k={k}")
        components = (Xc.T @ eigvecs[:, order]).T / np.sqrt(m * top)[:, None]
    else:
        cov = (Xc.T @ Xc) / m
        eigvals, eigvecs = np.linalg.eigh(cov)
        order = np.argsort(eigvals)[::-1][:k]
        top = eigvals[order]
        components = eigvecs[:, order].T
    return PcaModel(mean, _fix_signs(components), np.asarray(top, dtype=float), total_variance)


def pca_transform(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """Project one vector onto the fitted components."""
    vec = np.asarray(x, dtype=float).ravel()
    if vec.size != model.mean.size:
        raise ValueError(f"expected dimension {model.mean.size}, got {vec.size}")
    return model.components @ (vec - model.mean)


def contribution_ratios(model: PcaModel) -> tuple[np.ndarray, np.ndarray]:
    """Per-component variance fractions and their running sum.

    Returns (cr, ccr) where cr[i] = eigenvalue_i / total_variance and ccr is
    the cumulative sum of cr.
    """
    if model.total_variance <= 0:
        raise ValueError("total variance is zero; the data had no spread")
    cr = np.asarray(model.eigenvalues, dtype=float) / model.total_variance
    return cr, np.cumsum(cr)


@dataclass(eq=False)
class SvmModel:
    """Dual C-SVM solution over a precomputed training Gram matrix."""

    dual_coefficients: np.ndarray
    labels: np.ndarray
    bias: float
    support_indices: np.ndarray
    C: float
    kernel: str

    def to_dict(self) -> dict:
        return {
            "dual_coefficients": [float(a) for a in self.dual_coefficients],
            "labels": [int(y) for y in self.labels],
            "bias": float(self.bias),
            "support_indices": [int(i) for i in self.support_indices],
            "C": float(self.C),
            "kernel": self.kernel,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        return cls(
            np.asarray(d["dual_coefficients"], dtype=float),
            np.asarray(d["labels"], dtype=int),
            float(d["bias"]),
            np.asarray(d["support_indices"], dtype=int),
            float(d["C"]),
            str(d["kernel"]),
        )


def _take_step(
    K: np.ndarray,
    y: np.ndarray,
    alphas: np.ndarray,
    i: int,
    j: int,
    C: float,
    b: float,
) -> tuple[bool, float]:
    """Jointly optimize the pair (alpha_i, alpha_j); returns (changed, new_b)."""
    if i == j:
        return False, b
    ai, aj = alphas[i], alphas[j]
    Ei = float((alphas * y) @ K[i] + b - y[i])
    Ej = float((alphas * y) @ K[j] + b - y[j])
    if y[i] != y[j]:
        low, high = max(0.0, aj - ai), min(C, C + aj - ai)
    else:
        low, high = max(0.0, ai + aj - C), min(C, ai + aj)
    if high - low < 1e-12:
        return False, b
    eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
    if eta >= -1e-12:
        return False, b
    aj_new = aj - y[j] * (Ei - Ej) / eta
    aj_new = min(high, max(low, aj_new))
    if abs(aj_new - aj) < 1e-10:
        return False, b
    # The constraint update keeps ai in [0, C] mathematically; clip away the
    # float drift so bound membership stays an exact comparison.
    ai_new = min(C, max(0.0, ai + y[i] * y[j] * (aj - aj_new)))
    b1 = b - Ei - y[i] * (ai_new - ai) * K[i, i] - y[j] * (aj_new - aj) * K[i, j]
    b2 = b - Ej - y[i] * (ai_new - ai) * K[i, j] - y[j] * (aj_new - aj) * K[j, j]
    alphas[i], alphas[j] = ai_new, aj_new
    if 0.0 < ai_new < C:
        return True, b1
    if 0.0 < aj_new < C:
        return True, b2
    return True, 0.5 * (b1 + b2)


def svm_train_smo(
    gram: GramMatrix | np.ndarray,
    labels: np.ndarray,
    C: float = 1.0,
    tol: float = 1e-3,
    max_passes: int = 100,
    seed: int = 0,
) -> SvmModel:
    """Solve the C-SVM dual over a precomputed Gram matrix by sequential
    minimal optimization.

    Pairwise updates run over a seeded random sweep order; the partner for a
    KKT-violating point is the one with the largest error gap |E_i - E_j|,
    ties broken by the lowest index, falling back through the remaining
    candidates in that order if the best pair cannot move. Training stops
    after max_passes consecutive sweeps without an update. The bias is
    re-estimated at the end by averaging over unbounded support vectors, so
    the whole procedure is deterministic for a fixed seed.
    """
    if isinstance(gram, GramMatrix):
        kernel_tag = gram.kernel
        K = np.asarray(gram.values, dtype=float)
    else:
        kernel_tag = "precomputed"
        K = np.asarray(gram, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"training Gram must be square, got shape {K.shape}")
    y = np.asarray(labels, dtype=float).ravel()
    n = y.size
    if n != K.shape[0]:
        raise ValueError(f"{n} labels for a {K.shape[0]}-row Gram")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if len(np.unique(y)) < 2:
        raise ValueError("training labels must contain both classes")
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    if max_passes < 1:
        raise ValueError(f"max_passes must be positive, got {max_passes}")

    alphas = np.zeros(n)
    b = 0.0
    rng = rng_from_key(seed)
    quiet_sweeps = 0
    while quiet_sweeps < max_passes:
        changed = 0
        for i in rng.permutation(n):
            Ei = float((alphas * y) @ K[i] + b - y[i])
            r = y[i] * Ei
            if not ((r < -tol and alphas[i] < C) or (r > tol and alphas[i] > 0)):
                continue
            errors = (alphas * y) @ K + b - y
            gaps = np.abs(Ei - errors)
            gaps[i] = -1.0
            for j in np.argsort(-gaps, kind="stable"):
                stepped, b = _take_step(K, y, alphas, int(i), int(j), C, b)
                if stepped:
                    changed += 1
                    break
        quiet_sweeps = quiet_sweeps + 1 if changed == 0 else 0

    eps = 1e-10 * max(C, 1.0)
    alphas[alphas < eps] = 0.0
    alphas[alphas > C - eps] = C
    support = np.flatnonzero(alphas > 0)
    raw_scores = (alphas * y) @ K
    unbounded = np.flatnonzero((alphas > 0) & (alphas < C))
    if unbounded.size:
        bias = float(np.mean(y[unbounded] - raw_scores[unbounded]))
    else:
        # Every support vector sits on a box bound, so any bias inside the
        # KKT feasibility interval works; take its midpoint.
        lo, hi = -np.inf, np.inf
        for idx in range(n):
            edge = y[idx] - raw_scores[idx]
            if (alphas[idx] == 0.0 and y[idx] > 0) or (alphas[idx] == C and y[idx] < 0):
                lo = max(lo, edge)
            else:
                hi = min(hi, edge)
        if np.isfinite(lo) and np.isfinite(hi):
            bias = float(0.5 * (lo + hi))
        elif np.isfinite(lo):
            bias = float(lo)
        elif np.isfinite(hi):
            bias = float(hi)
        else:
            bias = 0.0
    return SvmModel(alphas, y.astype(int), bias, support, float(C), kernel_tag)


def svm_decision(model: SvmModel, kernel_row: np.ndarray) -> float:
    """Decision value for one test point given its kernel values against the
    training set; the predicted label is +1 when the value is >= 0."""
    row = np.asarray(kernel_row, dtype=float).ravel()
    if row.size != model.labels.size:
        raise ValueError(f"expected {model.labels.size} kernel values, got {row.size}")
    return float(row @ (model.dual_coefficients * model.labels) + model.bias)


def decision_scores(model: SvmModel, kernel_rows: np.ndarray) -> np.ndarray:
    """svm_decision applied to every row of a test-by-train kernel matrix."""
    rows = np.atleast_2d(np.asarray(kernel_rows, dtype=float))
    if rows.shape[1] != model.labels.size:
        raise ValueError(f"expected {model.labels.size} kernel columns, got {rows.shape[1]}")
    return rows @ (model.dual_coefficients * model.labels) + model.bias


def dual_objective(gram: GramMatrix | np.ndarray, labels: np.ndarray, alphas: np.ndarray) -> float:
    """The C-SVM dual objective sum(alpha) - 0.5 * alpha' (yy' * K) alpha."""
    K = gram.values if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=float)
    y = np.asarray(labels, dtype=float).ravel()
    a = np.asarray(alphas, dtype=float).ravel()
    return float(a.sum() - 0.5 * (a * y) @ K @ (a * y))


@dataclass
class EvalReport:
    """Confusion counts at threshold zero plus the ranking curve."""

    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f1: float
    accuracy: float
    roc_points: list[tuple[float, float]] = field(default_factory=list)
    auc: float = 0.0

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "roc_points": [[float(x), float(y)] for x, y in self.roc_points],
            "auc": self.auc,
        }


def evaluate(scores: np.ndarray, truth: np.ndarray) -> EvalReport:
    """Score a binary anomaly detector: +1 is the positive class.

    The confusion matrix thresholds scores at zero (>= 0 predicts +1).
    The ROC curve sweeps thresholds over the distinct scores in descending
    order, grouping ties into single vertices, and the AUC is the trapezoid
    area under it; F1 is 0 when there are no true positives.
    """
    s = np.asarray(scores, dtype=float).ravel()
    t = np.asarray(truth).ravel().astype(int)
    if s.size != t.size:
        raise ValueError(f"{s.size} scores for {t.size} labels")
    if s.size == 0:
        raise ValueError("nothing to evaluate")
    if not np.all(np.isin(t, (-1, 1))):
        raise ValueError("truth labels must be -1 or +1")
    n_pos = int(np.sum(t == 1))
    n_neg = int(np.sum(t == -1))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("evaluation needs both classes present")

    pred = np.where(s >= 0, 1, -1)
    tp = int(np.sum((pred == 1) & (t == 1)))
    fp = int(np.sum((pred == 1) & (t == -1)))
    tn = int(np.sum((pred == -1) & (t == -1)))
    fn = int(np.sum((pred == -1) & (t == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / s.size

    order = np.argsort(-s, kind="stable")
    sorted_scores = s[order]
    sorted_truth = t[order]
    cum_tp = np.cumsum(sorted_truth == 1)
    cum_fp = np.cumsum(sorted_truth == -1)
    distinct = np.flatnonzero(np.diff(sorted_scores, append=-np.inf))
    points = [(0.0, 0.0)]
    points += [(cum_fp[i] / n_neg, cum_tp[i] / n_pos) for i in distinct]
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    auc = float(np.sum(np.diff(xs) * (ys[1:] + ys[:-1]) * 0.5))
    return EvalReport(tp, fp, tn, fn, precision, recall, f1, accuracy, points, auc)
