"""Binary linear SVM trained from scratch, plus the evaluation report.

The trainer minimizes 0.5 * ||w||^2 + C * sum_i hinge(y_i * (w.x_i + b)) with
labels in {+1, -1}. It runs a seeded stochastic subgradient phase with
averaged iterates, then a deterministic polish that alternates an exact line
search over the bias with decaying subgradient steps on the weights, keeping
the best objective seen. Everything is reproducible for a fixed seed.
"""

import time
import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    c: float


@dataclass(frozen=True)
class EvalReport:
    """Confusion counts and percentage metrics over a test set."""

    accuracy: float
    precision: float
    recall: float
    test_time_seconds: float
    n_test: int
    tp: int
    fp: int
    tn: int
    fn: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "test_time_s": self.test_time_seconds,
            "n_test": self.n_test,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
        }


def split(labels, train_fraction: float, rng_seed: int):
    """Seeded stratified split; returns (train_idx, test_idx) index arrays.

    Per-class counts are rounded, then clamped so both splits see every class
    whenever a class has at least 2 members. Classes with a single member fall
    back to an unstratified shuffle with a warning.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    if n == 0:
        raise ValueError("empty label set")
    if not (0.0 < train_fraction < 1.0):
        raise ValueError(f"train fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(rng_seed)
    classes = np.unique(labels)
    if any(np.count_nonzero(labels == c) < 2 for c in classes) and len(classes) > 1:
        warnings.warn("a class has fewer than 2 members; falling back to unstratified split")
        order = rng.permutation(n)
        n_train = min(max(int(round(train_fraction * n)), 1), n - 1)
        return np.sort(order[:n_train]), np.sort(order[n_train:])
    train_parts, test_parts = [], []
    for c in classes:
        idx = np.flatnonzero(labels == c)
        order = idx[rng.permutation(idx.shape[0])]
        n_train = int(round(train_fraction * idx.shape[0]))
        n_train = min(max(n_train, 1), idx.shape[0] - 1)
        train_parts.append(order[:n_train])
        test_parts.append(order[n_train:])
    return np.sort(np.concatenate(train_parts)), np.sort(np.concatenate(test_parts))


def _objective(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, c: float) -> float:
    margins = y * (x @ w + b)
    return 0.5 * float(w @ w) + c * float(np.maximum(0.0, 1.0 - margins).sum())


def _best_bias(w: np.ndarray, x: np.ndarray, y: np.ndarray, c: float, b0: float) -> float:
    # For fixed w the objective is piecewise linear in b; its minimum sits at
    # one of the hinge breakpoints b = y_i - w.x_i (or at the current b).
    scores = x @ w
    reg = 0.5 * float(w @ w)
    candidates = np.append(y - scores, b0)
    best_b, best_f = b0, np.inf
    for start in range(0, candidates.shape[0], 1024):
        block = candidates[start : start + 1024]
        losses = np.maximum(0.0, 1.0 - y[None, :] * (scores[None, :] + block[:, None]))
        totals = reg + c * losses.sum(axis=1)
        i = int(np.argmin(totals))
        if totals[i] < best_f:
            best_b, best_f = float(block[i]), float(totals[i])
    return best_b


def train_svm(x, y, c: float = 1.0, epochs: int = 100, rng_seed: int = 0) -> LinearModel:
    """Train on features x (n, d) and labels y in {+1, -1}."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError(f"inconsistent shapes x={x.shape}, y={y.shape}")
    if x.shape[0] < 2 or len(np.unique(y)) < 2:
        raise ValueError("need at least 2 samples covering both labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +1 or -1")
    n, d = x.shape
    rng = np.random.default_rng(rng_seed)
    lam = 1.0 / (n * c)

    w = np.zeros(d)
    b = 0.0
    w_avg = np.zeros(d)
    b_avg = 0.0
    n_avg = 0
    t = 0
    best_w, best_b = w.copy(), b
    best_f = _objective(w, b, x, y, c)

    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            violated = y[i] * (x[i] @ w + b) < 1.0
            w *= 1.0 - eta * lam
            if violated:
                w += (eta / n) * y[i] * x[i]
                b += y[i] / t
            w_avg += (w - w_avg) / (n_avg + 1)
            b_avg += (b - b_avg) / (n_avg + 1)
            n_avg += 1
        f = _objective(w_avg, b_avg, x, y, c)
        if f < best_f:
            best_f, best_w, best_b = f, w_avg.copy(), b_avg

    # Deterministic polish: exact bias line search alternated with decaying
    # full-batch subgradient steps on the weights.
    w, b = best_w.copy(), best_b
    for round_idx in range(40):
        b = _best_bias(w, x, y, c, b)
        f = _objective(w, b, x, y, c)
        if f < best_f:
            best_f, best_w, best_b = f, w.copy(), b
        for s in range(60):
            margins = y * (x @ w + b)
            viol = margins < 1.0
            grad = w - c * (y[viol] @ x[viol])
            step = 1.0 / (round_idx * 60 + s + 2)
            w = w - step * grad
            f = _objective(w, b, x, y, c)
            if f < best_f:
                best_f, best_w, best_b = f, w.copy(), float(b)
    return LinearModel(weights=best_w, bias=float(best_b), c=float(c))


def predict(model: LinearModel, x: np.ndarray):
    """Label and margin for one feature vector; a margin of 0 maps to +1."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.weights.shape:
        raise ValueError(f"feature length {x.shape} != model length {model.weights.shape}")
    margin = float(model.weights @ x + model.bias)
    return (1 if margin >= 0 else -1), margin


def decision_values(model: LinearModel, x: np.ndarray) -> np.ndarray:
    """Margins for a feature matrix (n, d)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.weights.shape[0]:
        raise ValueError(f"feature matrix {x.shape} does not match model")
    return x @ model.weights + model.bias


def evaluate(model: LinearModel, x, y) -> EvalReport:
    """Score a labeled test set; timing covers only the scoring pass.

    Precision (and recall) default to 100 when their denominator is zero.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.shape[0] == 0:
        raise ValueError("empty test set")
    start = time.perf_counter()
    margins = x @ model.weights + model.bias
    pred = np.where(margins >= 0, 1, -1)
    elapsed = time.perf_counter() - start
    tp = int(np.count_nonzero((pred == 1) & (y == 1)))
    fp = int(np.count_nonzero((pred == 1) & (y == -1)))
    tn = int(np.count_nonzero((pred == -1) & (y == -1)))
    fn = int(np.count_nonzero((pred == -1) & (y == 1)))
    n_test = x.shape[0]
    accuracy = 100.0 * (tp + tn) / n_test
    precision = 100.0 * tp / (tp + fp) if tp + fp > 0 else 100.0
    recall = 100.0 * tp / (tp + fn) if tp + fn > 0 else 100.0
    return EvalReport(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        test_time_seconds=elapsed,
        n_test=n_test,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
    )
