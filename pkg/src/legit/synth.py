"""Synthetic legibility data for smoke training, demos, and sanity checks.

Builds labeled perturbation pairs whose ground truth is known by
construction: a perturbed word counts as legible iff its mean
per-character distance to the original stays below a visual threshold.
The resulting pairs exercise the full multitask training path (all four
labels occur) while remaining cheap enough for test suites.
"""

from __future__ import annotations

import itertools
import string
from dataclasses import dataclass

import numpy as np

from .dataset import BL, L1, L2, NL
from .index import NeighborTable
from .metrics import accuracy, precision_recall_f1
from .perturb import PerturbParams, derive_seed, perturb_word
from .scorer import FeatureExtractor, LegibilityScorer, TrainExample

SYNTH_TAU = 0.08     # mean-distance threshold defining ground-truth legibility
SYNTH_WORD_LEN = 8
SYNTH_MAX_RANK = 40


@dataclass(frozen=True)
class SyntheticPair:
    """One constructed pair with known per-word legibility."""

    word: str
    w1: str
    w2: str
    legible1: bool
    legible2: bool
    example: TrainExample

    @property
    def label(self) -> str:
        return self.example.label


def synthetic_words() -> list[str]:
    """All 3-letter combinations tiled to 8 characters (17576 words)."""
    return ["".join(t) for t in itertools.product(string.ascii_lowercase, repeat=3)]


def make_synthetic_pairs(words: list[str], extractor: FeatureExtractor,
                         table: NeighborTable, seed: int,
                         tau: float = SYNTH_TAU) -> list[SyntheticPair]:
    """One labeled pair per base word, deterministic in ``seed``.

    Replacement fractions are uniform on [0, 1] and ranks uniform on
    [1, 40); the pair label follows from the per-word ground truth.
    """
    out = []
    rng = np.random.default_rng(seed)
    for i, stem in enumerate(words):
        w = (stem * 3)[:SYNTH_WORD_LEN]
        n1, k1 = float(rng.uniform(0, 1)), int(rng.integers(1, SYNTH_MAX_RANK))
        n2, k2 = float(rng.uniform(0, 1)), int(rng.integers(1, SYNTH_MAX_RANK))
        p1 = perturb_word(w, PerturbParams(n1, k1, table.model_id), table,
                          derive_seed(seed, 2 * i))
        p2 = perturb_word(w, PerturbParams(n2, k2, table.model_id), table,
                          derive_seed(seed, 2 * i + 1))
        f1 = extractor.extract(w, p1.perturbed)
        f2 = extractor.extract(w, p2.perturbed)
        legible1 = bool(f1[0] < tau)
        legible2 = bool(f2[0] < tau)
        if legible1 and legible2:
            label = BL
        elif not legible1 and not legible2:
            label = NL
        elif legible1:
            label = L1
        else:
            label = L2
        out.append(SyntheticPair(w, p1.perturbed, p2.perturbed, legible1, legible2,
                                 TrainExample(f1, f2, label)))
    return out


def train_examples(pairs: list[SyntheticPair]) -> list[TrainExample]:
    return [p.example for p in pairs]


def classification_eval(pairs: list[SyntheticPair],
                        model: LegibilityScorer) -> tuple[float, float, float]:
    """Precision/recall/F1 over the classification examples each pair label
    implies: BL/NL speak for both words, L1/L2 only for the preferred one."""
    y_true: list[bool] = []
    y_pred: list[bool] = []
    for p in pairs:
        s1 = model.score_features(p.example.f1) > 0
        s2 = model.score_features(p.example.f2) > 0
        if p.label in (BL, NL):
            y_true += [p.label == BL] * 2
            y_pred += [s1, s2]
        elif p.label == L1:
            y_true.append(True)
            y_pred.append(s1)
        else:
            y_true.append(True)
            y_pred.append(s2)
    return precision_recall_f1(y_true, y_pred)


def ranking_eval(pairs: list[SyntheticPair], model: LegibilityScorer) -> float:
    """Accuracy on the strict-preference pairs (ties predict the first)."""
    true_pref = []
    pred_pref = []
    for p in pairs:
        if p.label not in (L1, L2):
            continue
        true_pref.append(1 if p.label == L1 else 2)
        s1 = model.score_features(p.example.f1)
        s2 = model.score_features(p.example.f2)
        pred_pref.append(1 if s1 >= s2 else 2)
    return accuracy(true_pref, pred_pref)
