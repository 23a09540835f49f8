"""Logistic-regression scores and the threshold hypothesis family built on them."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit

from .entropy import BenefitParams, OrderLike, OutcomeCounts, between_group_from_counts, entropy_from_count_arrays
from .group_fairness import GroupRates, rates_from_counts

# scores are kept strictly inside (0, 1)
_SCORE_EPS = 1e-15


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    iterations: int = 0
    final_loss: float = float("nan")
    converged: bool = False
    loss_history: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "iterations": self.iterations,
            "final_loss": self.final_loss,
            "converged": self.converged,
        })

    @classmethod
    def from_json(cls, text: str) -> "LogisticModel":
        d = json.loads(text)
        return cls(np.asarray(d["weights"], dtype=float), d["bias"], d["iterations"],
                   d["final_loss"], d["converged"])


def logistic_loss_and_grad(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, l2: float = 0.0):
    """Mean negative log-likelihood (+ l2/2 |w|^2) and its gradient in (w, b)."""
    z = x @ w + b
    loss = -np.mean(y * log_expit(z) + (1 - y) * log_expit(-z)) + 0.5 * l2 * float(w @ w)
    resid = expit(z) - y
    gw = x.T @ resid / y.size + l2 * w
    gb = float(np.mean(resid))
    return float(loss), gw, gb


def train_logistic(x, y, step: float = 0.1, max_iter: int = 5000, tol: float = 1e-6,
                   l2: float = 0.0, checkpoint_every: int = 100) -> LogisticModel:
    """Full-batch gradient descent from zero weights.

    Stops when the gradient's max-norm drops below ``tol`` or after
    ``max_iter`` steps. Deterministic: the same data gives the same weights.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise ValueError("x must be (n, d) with one label per row")
    if y.size < 2:
        raise ValueError("need at least two samples")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be binary")
    if np.all(y == y[0]):
        raise ValueError("labels contain a single class; logistic regression is degenerate")
    w = np.zeros(x.shape[1])
    b = 0.0
    history = []
    converged = False
    it = 0
    loss = float("nan")
    for it in range(max_iter + 1):
        loss, gw, gb = logistic_loss_and_grad(w, b, x, y, l2)
        if it % checkpoint_every == 0:
            history.append(loss)
        if max(np.max(np.abs(gw), initial=0.0), abs(gb)) < tol:
            converged = True
            break
        if it == max_iter:
            break
        w = w - step * gw
        b = b - step * gb
    return LogisticModel(w, b, it, loss, converged, history)


def predict_scores(model: LogisticModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.weights.size:
        raise ValueError(f"expected {model.weights.size} features, got shape {x.shape}")
    return np.clip(expit(x @ model.weights + model.bias), _SCORE_EPS, 1 - _SCORE_EPS)


def threshold_grid(points: int = 201) -> np.ndarray:
    """Thresholds 0, 1/(points-1), ..., 1; the default grid has step 0.005."""
    return np.arange(points) / (points - 1)


@dataclass(frozen=True)
class ThresholdHypothesis:
    """Predict 1 iff score >= threshold."""

    index: int
    threshold: float

    def predict(self, scores) -> np.ndarray:
        return (np.asarray(scores) >= self.threshold).astype(np.int64)


def evaluate_hypothesis(h: ThresholdHypothesis, scores, labels) -> OutcomeCounts:
    scores = np.asarray(scores)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    pred = h.predict(scores)
    return OutcomeCounts(labels.size, int(np.sum((pred == 1) & (labels == 0))),
                         int(np.sum((pred == 0) & (labels == 1))))


def _threshold_counts(scores, labels, thresholds):
    neg = np.sort(scores[labels == 0])
    pos = np.sort(scores[labels == 1])
    fp = neg.size - np.searchsorted(neg, thresholds, side="left")
    fn = np.searchsorted(pos, thresholds, side="left")
    return fp, fn


@dataclass(frozen=True)
class HypothesisSpace:
    """A finite hypothesis family with cached per-group confusion counts.

    ``group_fp``/``group_fn`` have shape (H, G). ``group_positives`` may be
    None for spaces built straight from counts; conditional rates are then
    unavailable.
    """

    thresholds: np.ndarray
    group_sizes: np.ndarray
    group_fp: np.ndarray
    group_fn: np.ndarray
    group_positives: np.ndarray | None = None

    @classmethod
    def from_scores(cls, scores, labels, groups=None, thresholds=None, n_groups: int | None = None):
        scores = np.asarray(scores, dtype=float)
        labels = np.asarray(labels).astype(np.int64)
        if scores.shape != labels.shape or scores.ndim != 1:
            raise ValueError("scores and labels must be equal-length 1-D arrays")
        thr = threshold_grid() if thresholds is None else np.asarray(thresholds, dtype=float)
        groups = np.zeros(labels.size, dtype=np.int64) if groups is None else np.asarray(groups).astype(np.int64)
        G = int(groups.max()) + 1 if n_groups is None else n_groups
        sizes = np.bincount(groups, minlength=G)
        if np.any(sizes == 0):
            raise ValueError(f"empty group(s): {np.flatnonzero(sizes == 0).tolist()}")
        fp = np.empty((thr.size, G), dtype=np.int64)
        fn = np.empty((thr.size, G), dtype=np.int64)
        for g in range(G):
            sel = groups == g
            fp[:, g], fn[:, g] = _threshold_counts(scores[sel], labels[sel], thr)
        positives = np.bincount(groups, weights=labels, minlength=G).astype(np.int64)
        return cls(thr, sizes, fp, fn, positives)

    @classmethod
    def from_counts(cls, n: int, n_fp, n_fn, thresholds=None):
        fp = np.asarray(n_fp, dtype=np.int64).reshape(-1, 1)
        fn = np.asarray(n_fn, dtype=np.int64).reshape(-1, 1)
        if np.any(fp + fn > n) or np.any(fp < 0) or np.any(fn < 0):
            raise ValueError("invalid outcome counts")
        thr = np.linspace(0, 1, fp.shape[0]) if thresholds is None else np.asarray(thresholds, dtype=float)
        return cls(thr, np.array([n]), fp, fn, None)

    def __len__(self):
        return self.thresholds.size

    @property
    def n(self) -> int:
        return int(self.group_sizes.sum())

    @property
    def n_groups(self) -> int:
        return self.group_sizes.size

    @property
    def n_fp(self) -> np.ndarray:
        return self.group_fp.sum(axis=1)

    @property
    def n_fn(self) -> np.ndarray:
        return self.group_fn.sum(axis=1)

    def hypothesis(self, index: int) -> ThresholdHypothesis:
        return ThresholdHypothesis(int(index), float(self.thresholds[index]))

    def counts(self, index: int) -> OutcomeCounts:
        return OutcomeCounts(self.n, int(self.n_fp[index]), int(self.n_fn[index]))

    def risks(self) -> np.ndarray:
        return (self.n_fp + self.n_fn) / self.n

    def entropies(self, params: BenefitParams, order: OrderLike) -> np.ndarray:
        return entropy_from_count_arrays(self.n, self.n_fp, self.n_fn, params, order)

    def between_terms(self, params: BenefitParams, order: OrderLike) -> np.ndarray:
        return between_group_from_counts(self.group_sizes, self.group_fp, self.group_fn, params, order)

    def group_rates(self, index: int) -> GroupRates:
        if self.group_positives is None:
            raise ValueError("this hypothesis space carries no label information")
        return rates_from_counts(self.group_sizes, self.group_positives,
                                 self.group_fp[index], self.group_fn[index])
