"""Trainable legibility scorer over visual-similarity features.

A scorer maps a (word, perturbation) pair to a scalar legibility score via
hand-crafted features: per-character cosine distances, replacement fraction
and positions, and optional external-embedding distances. Two heads are
provided: a linear model and a one-hidden-layer network with rectified
activations and dropout.

Training is multitask over labeled pairs. Each pair contributes
per-word classification losses and a pairwise ranking loss, with
label-dependent masking:

- L1 (first more legible): classify the first word legible, rank first
  above second; the second word's own legibility is unknown and masked.
- L2: symmetric.
- BL (both legible): both classification terms with target legible;
  ranking masked.
- NL (neither legible): both classification terms with target illegible;
  ranking masked.

Both words of a pair are scored with the same shared weights. Scores
threshold at 0 for classification (strictly above is legible) and compare
by argmax for ranking (tie prefers the first).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import BL, L1, L2, NL, LABELS
from .errors import FormatError, NonFiniteLoss, UnknownCodepoint
from .index import EmbeddingMatrix, NeighborTable

BASE_FEATURE_NAMES = (
    "dist_mean", "dist_max", "dist_min_replaced", "frac_replaced",
    "len_norm", "pos_mean", "pos_var", "rank1_count",
)
LEN_NORM = 14.0
MODEL_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# features

class FeatureExtractor:
    """Deterministic feature map over (word, perturbation) pairs.

    ``external`` optionally appends, per ingested embedding matrix, the mean
    per-character distance under that embedding.
    """

    def __init__(self, matrix: EmbeddingMatrix, table: NeighborTable,
                 external: dict[str, EmbeddingMatrix] | None = None):
        self.matrix = matrix
        self.table = table
        self.external = dict(external or {})
        self._ext_order = tuple(sorted(self.external))

    @property
    def dim(self) -> int:
        return len(BASE_FEATURE_NAMES) + len(self._ext_order)

    def feature_names(self) -> tuple[str, ...]:
        return BASE_FEATURE_NAMES + tuple(f"ext_{m}_dist_mean" for m in self._ext_order)

    def config(self) -> dict:
        return {"external": list(self._ext_order), "dim": self.dim}

    def extract(self, w: str, wi: str) -> np.ndarray:
        if len(w) != len(wi) or not w:
            raise ValueError("w and wi must be nonempty strings of equal length")
        for ch in w + wi:
            if ord(ch) not in self.matrix:
                raise UnknownCodepoint(ord(ch))
        length = len(w)
        dists = np.zeros(length, dtype=np.float64)
        replaced = []
        for i, (a, b) in enumerate(zip(w, wi)):
            if a != b:
                replaced.append(i)
                dists[i] = self.matrix.distance(ord(a), ord(b))
        if replaced:
            rel = np.array(replaced, dtype=np.float64)
            rel = rel / (length - 1) if length > 1 else rel * 0.0
            pos_mean = float(rel.mean())
            pos_var = float(rel.var())
            dist_min = float(dists[replaced].min())
            rank1 = sum(1 for i in replaced
                        if self.table.kth_neighbor(ord(w[i]), 1) == ord(wi[i]))
        else:
            pos_mean = pos_var = dist_min = 0.0
            rank1 = 0
        feats = [
            float(dists.mean()),
            float(dists.max()),
            dist_min,
            len(replaced) / length,
            length / LEN_NORM,
            pos_mean,
            pos_var,
            float(rank1),
        ]
        for model_id in self._ext_order:
            ext = self.external[model_id]
            total = 0.0
            for a, b in zip(w, wi):
                if a != b:
                    total += ext.distance(ord(a), ord(b))
            feats.append(total / length)
        out = np.array(feats, dtype=np.float64)
        if not np.all(np.isfinite(out)):
            raise ValueError(f"non-finite feature for ({w!r}, {wi!r})")
        return out

    __call__ = extract


# ---------------------------------------------------------------------------
# losses (scalar, float64, numerically stable)

def softplus(x: float) -> float:
    """log(1 + e^x) without overflow."""
    return math.log1p(math.exp(-abs(x))) + max(x, 0.0)


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def loss_classify(s: float, y: int) -> float:
    """Binary cross-entropy of sigma(s) against y (1 = legible)."""
    return y * softplus(-s) + (1 - y) * softplus(s)


def dloss_classify(s: float, y: int) -> float:
    return sigmoid(s) - y


def loss_contrastive(s1: float, s2: float, y: int) -> float:
    """Pairwise ranking loss; y = 0 means the first word is more legible.

    Decreases as the preferred score exceeds the other; equals ln 2 at
    s1 = s2; symmetric under swapping both the scores and the preference.
    """
    return (1 - y) * softplus(s2 - s1) + y * softplus(s1 - s2)


def dloss_contrastive(s1: float, s2: float, y: int) -> tuple[float, float]:
    if y == 0:
        g = sigmoid(s2 - s1)
        return -g, g
    g = sigmoid(s1 - s2)
    return g, -g


def loss_multitask(s1: float, s2: float, label: str) -> float:
    """Label-masked sum of the classification and ranking terms."""
    if label == L1:
        return loss_classify(s1, 1) + loss_contrastive(s1, s2, 0)
    if label == L2:
        return loss_classify(s2, 1) + loss_contrastive(s1, s2, 1)
    if label == BL:
        return loss_classify(s1, 1) + loss_classify(s2, 1)
    if label == NL:
        return loss_classify(s1, 0) + loss_classify(s2, 0)
    raise ValueError(f"label must be one of {LABELS}, got {label!r}")


def dloss_multitask(s1: float, s2: float, label: str) -> tuple[float, float]:
    if label == L1:
        dc1, dc2 = dloss_contrastive(s1, s2, 0)
        return dloss_classify(s1, 1) + dc1, dc2
    if label == L2:
        dc1, dc2 = dloss_contrastive(s1, s2, 1)
        return dc1, dloss_classify(s2, 1) + dc2
    if label == BL:
        return dloss_classify(s1, 1), dloss_classify(s2, 1)
    if label == NL:
        return dloss_classify(s1, 0), dloss_classify(s2, 0)
    raise ValueError(f"label must be one of {LABELS}, got {label!r}")


# ---------------------------------------------------------------------------
# models

class LegibilityScorer:
    """Linear or one-hidden-layer scoring head with shared-weight pair scoring."""

    def __init__(self, kind: str, params: dict[str, np.ndarray], dropout: float = 0.0,
                 feature_config: dict | None = None,
                 extractor: FeatureExtractor | None = None):
        if kind not in ("linear", "mlp"):
            raise ValueError(f"kind must be 'linear' or 'mlp', got {kind!r}")
        if not 0.0 <= dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        self.kind = kind
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
        self.dropout = dropout if kind == "mlp" else 0.0
        self.feature_config = feature_config or {}
        self.extractor = extractor

    @classmethod
    def linear(cls, dim: int, feature_config: dict | None = None,
               extractor: FeatureExtractor | None = None) -> "LegibilityScorer":
        params = {"w": np.zeros(dim), "b": np.zeros(1)}
        return cls("linear", params, 0.0, feature_config, extractor)

    @classmethod
    def mlp(cls, dim: int, hidden: int = 16, dropout: float = 0.1, seed: int = 0,
            feature_config: dict | None = None,
            extractor: FeatureExtractor | None = None) -> "LegibilityScorer":
        rng = np.random.default_rng(seed)
        params = {
            "W1": rng.normal(0.0, math.sqrt(2.0 / dim), size=(hidden, dim)),
            "b1": np.zeros(hidden),
            "w2": rng.normal(0.0, math.sqrt(2.0 / hidden), size=hidden),
            "b2": np.zeros(1),
        }
        return cls("mlp", params, dropout, feature_config, extractor)

    @property
    def dim(self) -> int:
        return self.params["w"].shape[0] if self.kind == "linear" else self.params["W1"].shape[1]

    # -- forward / backward ------------------------------------------------

    def _forward(self, f: np.ndarray, mask: np.ndarray | None = None):
        """Return (score, cache); ``mask`` is an inverted-dropout multiplier."""
        if self.kind == "linear":
            s = float(self.params["w"] @ f + self.params["b"][0])
            return s, (f,)
        h_pre = self.params["W1"] @ f + self.params["b1"]
        h = np.maximum(h_pre, 0.0)
        h_drop = h * mask if mask is not None else h
        s = float(self.params["w2"] @ h_drop + self.params["b2"][0])
        return s, (f, h_pre, h_drop, mask)

    def _backward(self, cache, d_s: float) -> dict[str, np.ndarray]:
        if self.kind == "linear":
            (f,) = cache
            return {"w": d_s * f, "b": np.array([d_s])}
        f, h_pre, h_drop, mask = cache
        d_hdrop = d_s * self.params["w2"]
        d_h = d_hdrop * mask if mask is not None else d_hdrop
        d_hpre = d_h * (h_pre > 0)
        return {"W1": np.outer(d_hpre, f), "b1": d_hpre,
                "w2": d_s * h_drop, "b2": np.array([d_s])}

    def _dropout_mask(self, rng: np.random.Generator | None) -> np.ndarray | None:
        if self.kind != "mlp" or self.dropout == 0.0 or rng is None:
            return None
        keep = 1.0 - self.dropout
        return (rng.random(self.params["b1"].shape[0]) < keep) / keep

    # -- public scoring API --------------------------------------------------

    def score_features(self, f: np.ndarray) -> float:
        """Evaluation-mode score: deterministic, dropout disabled."""
        s, _ = self._forward(np.asarray(f, dtype=np.float64))
        return s

    def _require_extractor(self) -> FeatureExtractor:
        if self.extractor is None:
            raise ValueError("scorer has no feature extractor attached")
        return self.extractor

    def score(self, w: str, wi: str) -> float:
        return self.score_features(self._require_extractor().extract(w, wi))

    def classify(self, w: str, wi: str) -> bool:
        """Legible iff the score is strictly positive."""
        return self.score(w, wi) > 0.0

    def rank(self, w: str, w1: str, w2: str) -> int:
        """1 or 2, whichever scores higher; ties prefer 1."""
        ex = self._require_extractor()
        s1 = self.score_features(ex.extract(w, w1))
        s2 = self.score_features(ex.extract(w, w2))
        return 1 if s1 >= s2 else 2

    # -- parameter plumbing --------------------------------------------------

    def clone_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        for k, v in params.items():
            self.params[k][...] = v

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "dropout": self.dropout,
            "feature_config": self.feature_config,
            "params": {k: v.tolist() for k, v in self.params.items()},
        }
        return json.dumps(doc, ensure_ascii=False)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, text: str,
                  extractor: FeatureExtractor | None = None) -> "LegibilityScorer":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise FormatError("model file is not valid JSON") from e
        if doc.get("version") != MODEL_FORMAT_VERSION:
            raise FormatError(f"unsupported model format version {doc.get('version')!r}")
        if doc.get("kind") not in ("linear", "mlp"):
            raise FormatError(f"unknown model kind {doc.get('kind')!r}")
        params = {k: np.array(v, dtype=np.float64) for k, v in doc["params"].items()}
        return cls(doc["kind"], params, float(doc.get("dropout", 0.0)),
                   doc.get("feature_config") or {}, extractor)

    @classmethod
    def load(cls, path: str | Path,
             extractor: FeatureExtractor | None = None) -> "LegibilityScorer":
        return cls.from_json(Path(path).read_text(encoding="utf-8"), extractor)


def load_default_scorer(extractor: FeatureExtractor | None = None) -> LegibilityScorer:
    """The bundled pretrained scorer (see scripts/build_default_scorer.py)."""
    from importlib import resources
    text = (resources.files("legit") / "assets" / "scorer_default.json").read_text(
        encoding="utf-8")
    return LegibilityScorer.from_json(text, extractor)


# ---------------------------------------------------------------------------
# training

@dataclass(frozen=True)
class TrainExample:
    """Features of both perturbations of one labeled pair."""

    f1: np.ndarray
    f2: np.ndarray
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.05
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 10
    seed: int = 0
    dropout: float = 0.1
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.lr < 0 or self.weight_decay < 0:
            raise ValueError("rates must be nonnegative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch_size, max_epochs, and patience must be >= 1")


class AdamW:
    """Adaptive-moment gradient descent with decoupled weight decay."""

    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for k, p in self.params.items():
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * (g * g)
            m_hat = self.m[k] / (1 - self.beta1 ** self.t)
            v_hat = self.v[k] / (1 - self.beta2 ** self.t)
            p -= self.lr * (m_hat / (np.sqrt(v_hat) + self.eps) + self.weight_decay * p)


def evaluate_loss(model: LegibilityScorer, examples: list[TrainExample]) -> float:
    """Mean multitask loss in evaluation mode."""
    if not examples:
        raise ValueError("examples must be nonempty")
    total = 0.0
    for ex in examples:
        s1, _ = model._forward(ex.f1)
        s2, _ = model._forward(ex.f2)
        total += loss_multitask(s1, s2, ex.label)
    return total / len(examples)


def train(model: LegibilityScorer, train_set: list[TrainExample],
          val_set: list[TrainExample], cfg: TrainConfig
          ) -> tuple[LegibilityScorer, list[dict]]:
    """Mini-batch training with early stopping on validation loss.

    Deterministic given cfg.seed: fixed shuffle, fixed per-example dropout
    draws, fixed in-batch summation order. The returned model carries the
    weights of the best validation epoch.
    """
    if not train_set or not val_set:
        raise ValueError("train and validation sets must be nonempty")
    model.dropout = cfg.dropout if model.kind == "mlp" else 0.0
    rng = np.random.default_rng(cfg.seed)
    opt = AdamW(model.params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    history: list[dict] = []
    best_val = math.inf
    best_params = model.clone_params()
    bad_epochs = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train_set))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            grads = model.zero_grads()
            batch_loss = 0.0
            for idx in batch:
                ex = train_set[int(idx)]
                m1 = model._dropout_mask(rng)
                m2 = model._dropout_mask(rng)
                s1, c1 = model._forward(ex.f1, m1)
                s2, c2 = model._forward(ex.f2, m2)
                batch_loss += loss_multitask(s1, s2, ex.label)
                d1, d2 = dloss_multitask(s1, s2, ex.label)
                for k, g in model._backward(c1, d1).items():
                    grads[k] += g
                for k, g in model._backward(c2, d2).items():
                    grads[k] += g
            scale = 1.0 / len(batch)
            batch_loss *= scale
            if not math.isfinite(batch_loss):
                raise NonFiniteLoss(
                    "training loss is not finite",
                    diagnostics={"epoch": epoch, "batch_start": int(start),
                                 "param_norms": {k: float(np.linalg.norm(v))
                                                 for k, v in model.params.items()}})
            for k in grads:
                grads[k] *= scale
            opt.step(grads)
            epoch_loss += batch_loss * len(batch)
        val_loss = evaluate_loss(model, val_set)
        history.append({"epoch": epoch, "train_loss": epoch_loss / len(train_set),
                        "val_loss": val_loss})
        if val_loss < best_val:
            best_val = val_loss
            best_params = model.clone_params()
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= cfg.patience:
                break
    model.set_params(best_params)
    return model, history


def grad_check(model: LegibilityScorer, example: TrainExample,
               h: float = 1e-5, eps: float = 1e-6) -> float:
    """Max relative error between analytic and central-difference gradients
    of the multitask loss, dropout disabled."""
    def total_loss() -> float:
        s1, _ = model._forward(example.f1)
        s2, _ = model._forward(example.f2)
        return loss_multitask(s1, s2, example.label)

    s1, c1 = model._forward(example.f1)
    s2, c2 = model._forward(example.f2)
    d1, d2 = dloss_multitask(s1, s2, example.label)
    analytic = model.zero_grads()
    for k, g in model._backward(c1, d1).items():
        analytic[k] += g
    for k, g in model._backward(c2, d2).items():
        analytic[k] += g

    worst = 0.0
    for k, p in model.params.items():
        flat = p.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = total_loss()
            flat[i] = orig - h
            down = total_loss()
            flat[i] = orig
            numeric = (up - down) / (2 * h)
            a = float(analytic[k].ravel()[i])
            worst = max(worst, abs(a - numeric) / max(abs(a), eps))
    return worst
