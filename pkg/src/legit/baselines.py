"""Reference models: majority class, logistic regression on perturbation
parameters, and mean-distance rankers/classifiers over character embeddings.

All predictors share the scorer's metrics output so one harness compares
every model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingleClass
from .index import EmbeddingMatrix
from .metrics import precision_recall_f1

LOGREG_TOL = 1e-6
LOGREG_MAX_ITERS = 50_000


# ---------------------------------------------------------------------------
# majority class

@dataclass(frozen=True)
class MajorityClassifier:
    """Constant predictor; ties on the training split resolve to legible."""

    legible: bool

    @classmethod
    def fit(cls, labels: list[bool]) -> "MajorityClassifier":
        if not labels:
            raise ValueError("labels must be nonempty")
        pos = sum(labels)
        return cls(legible=pos >= len(labels) - pos)

    def predict(self, *_args) -> bool:
        return self.legible


@dataclass(frozen=True)
class MajorityRanker:
    """Constant predictor; ties on the training split resolve to the second."""

    preferred: int

    @classmethod
    def fit(cls, preferences: list[int]) -> "MajorityRanker":
        if not preferences:
            raise ValueError("preferences must be nonempty")
        ones = sum(1 for p in preferences if p == 1)
        return cls(preferred=1 if ones > len(preferences) - ones else 2)

    def predict(self, *_args) -> int:
        return self.preferred


# ---------------------------------------------------------------------------
# logistic regression on perturbation parameters

def _sigmoid_vec(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass
class LogRegPhi:
    """Logistic regression over raw perturbation parameters, fitted by
    full-batch gradient descent on standardized features."""

    weights: np.ndarray
    bias: float
    feat_mean: np.ndarray
    feat_std: np.ndarray
    fitted: bool = False

    @classmethod
    def fit(cls, features, labels, lr: float = 0.5,
            tol: float = LOGREG_TOL, max_iters: int = LOGREG_MAX_ITERS) -> "LogRegPhi":
        x = np.asarray(features, dtype=np.float64)
        y = np.asarray(labels, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] != y.shape[0] or x.shape[0] == 0:
            raise ValueError("features must be (n, d) aligned with labels")
        classes = np.unique(y)
        if classes.size < 2:
            raise SingleClass(f"need both classes to fit, got only {classes.tolist()}")
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std[std == 0.0] = 1.0
        xs = (x - mean) / std
        w = np.zeros(x.shape[1])
        b = 0.0
        n = x.shape[0]
        for _ in range(max_iters):
            p = _sigmoid_vec(xs @ w + b)
            err = p - y
            gw = xs.T @ err / n
            gb = float(err.mean())
            if math.sqrt(float(gw @ gw) + gb * gb) < tol:
                break
            w -= lr * gw
            b -= lr * gb
        return cls(weights=w, bias=b, feat_mean=mean, feat_std=std, fitted=True)

    def decision(self, features) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        xs = (x - self.feat_mean) / self.feat_std
        return xs @ self.weights + self.bias

    def predict(self, features) -> np.ndarray:
        return self.decision(features) > 0.0

    def predict_one(self, *feats: float) -> bool:
        return bool(self.predict(np.array(feats))[0])


def logreg_grad(features, labels, w: np.ndarray, b: float) -> tuple[np.ndarray, float]:
    """Analytic log-loss gradient at (w, b); exposed for verification."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    p = _sigmoid_vec(x @ w + b)
    err = p - y
    return x.T @ err / x.shape[0], float(err.mean())


# ---------------------------------------------------------------------------
# mean-distance rankers and threshold classifier

def mean_char_distance(w: str, wi: str, matrix: EmbeddingMatrix) -> float:
    """Average per-character cosine distance over aligned positions."""
    if len(w) != len(wi) or not w:
        raise ValueError("w and wi must be nonempty strings of equal length")
    total = 0.0
    for a, b in zip(w, wi):
        if a != b:
            total += matrix.distance(ord(a), ord(b))
        else:
            matrix.row(ord(a))  # membership check; identical chars are distance 0
    return total / len(w)


def imgdot_rank(w: str, w1: str, w2: str, matrix: EmbeddingMatrix) -> int:
    """Prefer the perturbation with lower mean distance to the original;
    tie prefers the first."""
    d1 = mean_char_distance(w, w1, matrix)
    d2 = mean_char_distance(w, w2, matrix)
    return 1 if d1 <= d2 else 2


def embedding_rank(w: str, w1: str, w2: str, embeddings: EmbeddingMatrix) -> int:
    """Same rule as imgdot_rank over an ingested embedding matrix."""
    return imgdot_rank(w, w1, w2, embeddings)


@dataclass(frozen=True)
class ThresholdClassifier:
    """Legible iff mean per-character cosine similarity >= threshold."""

    threshold: float

    @classmethod
    def fit(cls, similarities, labels) -> "ThresholdClassifier":
        """Choose the threshold maximizing F1 on the training split, sweeping
        all midpoints between consecutive distinct similarity values."""
        sims = np.asarray(similarities, dtype=np.float64)
        labs = np.asarray(labels, dtype=bool)
        if sims.shape != labs.shape or sims.size == 0:
            raise ValueError("similarities and labels must be nonempty and aligned")
        distinct = np.unique(sims)
        candidates = [distinct[0] - 1.0]
        candidates += [(a + b) / 2.0 for a, b in zip(distinct, distinct[1:])]
        candidates += [distinct[-1] + 1.0]
        best_t, best_f1 = candidates[0], -1.0
        for t in candidates:
            pred = sims >= t
            _, _, f1 = precision_recall_f1(labs, pred)
            if f1 > best_f1:
                best_t, best_f1 = t, f1
        return cls(threshold=float(best_t))

    def predict(self, similarity: float) -> bool:
        return similarity >= self.threshold


def mean_char_similarity(w: str, wi: str, matrix: EmbeddingMatrix) -> float:
    """1 - mean per-character cosine distance (identity maps to 1.0)."""
    return 1.0 - mean_char_distance(w, wi, matrix)


def imgdot_classify_fit(train_pairs, matrix: EmbeddingMatrix) -> ThresholdClassifier:
    """Fit the similarity threshold from (w, wi, legible) training triples."""
    sims = [mean_char_similarity(w, wi, matrix) for w, wi, _ in train_pairs]
    labels = [bool(leg) for _, _, leg in train_pairs]
    return ThresholdClassifier.fit(np.array(sims), np.array(labels))


def imgdot_classify(clf: ThresholdClassifier, w: str, wi: str,
                    matrix: EmbeddingMatrix) -> bool:
    return clf.predict(mean_char_similarity(w, wi, matrix))
