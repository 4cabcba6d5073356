"""Pairwise legibility annotations and the datasets derived from them.

An annotation compares two perturbations of the same word with one of four
labels: L1 (first more legible), L2 (second more legible), BL (both legible),
NL (neither legible). From these we derive:

- a binary classification set (BL marks both legible, NL both illegible,
  a strict preference marks only the preferred word and excludes the other);
- a ranking set (strict preferences only);
- "hard" subsets where metadata alone cannot solve the task;
- inter-annotator agreement statistics over triple-annotated test pairs.

Splits are made at the word level so that no word leaks across train,
validation, and test.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import FormatError, MissingMetadata, WrongAnnotationCount
from .perturb import PerturbParams

L1, L2, BL, NL = "L1", "L2", "BL", "NL"
LABELS = (L1, L2, BL, NL)
SPLITS = ("train", "val", "test")

SPLIT_FRACTIONS = (0.65, 0.15, 0.20)
MIN_WORD_LEN = 4
MAX_WORD_LEN = 14
HARD_RANKING_THRESHOLD = 0.1
HARD_CLASSIFICATION_THRESHOLD = 0.4

# published corpus statistics, used by the ingest report (warn, never fail)
EXPECTED_STATS = {
    "train": {"pairs": 14622, "words": 4940, "classification": 20217, "ranking": 9027},
    "val": {"pairs": 3326, "words": 1140, "classification": 4639, "ranking": 2013},
    "test": {"pairs": 3712, "words": 1520, "classification": 4774, "ranking": 2650},
    "total": {"pairs": 21660, "words": 7600, "classification": 29630, "ranking": 13690},
}


@dataclass(frozen=True)
class PairAnnotation:
    """One annotator's judgment of a (w1, w2) perturbation pair."""

    word: str
    w1: str
    w2: str
    label: str
    annotator_id: str = ""
    split: str = "train"
    phi1: PerturbParams | None = None
    phi2: PerturbParams | None = None
    pair_id: str | None = None

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        if len(self.w1) != len(self.word) or len(self.w2) != len(self.word):
            raise ValueError("w1 and w2 must be perturbations of word (equal length)")

    @property
    def key(self):
        """Identity of the underlying pair, shared by its annotations."""
        return self.pair_id if self.pair_id is not None else (self.word, self.w1, self.w2)

    def to_dict(self) -> dict:
        d = {"word": self.word, "w1": self.w1, "w2": self.w2, "label": self.label,
             "annotator": self.annotator_id, "split": self.split}
        if self.phi1 is not None:
            d["phi1"] = self.phi1.to_dict()
        if self.phi2 is not None:
            d["phi2"] = self.phi2.to_dict()
        if self.pair_id is not None:
            d["pair_id"] = self.pair_id
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PairAnnotation":
        return cls(
            word=d["word"], w1=d["w1"], w2=d["w2"], label=d["label"],
            annotator_id=str(d.get("annotator", "")), split=d.get("split", "train"),
            phi1=PerturbParams.from_dict(d["phi1"]) if d.get("phi1") else None,
            phi2=PerturbParams.from_dict(d["phi2"]) if d.get("phi2") else None,
            pair_id=d.get("pair_id"),
        )


@dataclass(frozen=True)
class ClassificationExample:
    word: str
    perturbed: str
    legible: bool
    source_pair: str | tuple
    phi: PerturbParams | None = None

    def to_dict(self) -> dict:
        d = {"word": self.word, "perturbed": self.perturbed, "legible": self.legible}
        if isinstance(self.source_pair, str):
            d["pair_id"] = self.source_pair
        if self.phi is not None:
            d["phi"] = self.phi.to_dict()
        return d


@dataclass(frozen=True)
class RankingExample:
    word: str
    w1: str
    w2: str
    preferred: int  # 1 or 2
    source_pair: str | tuple = ""
    phi1: PerturbParams | None = None
    phi2: PerturbParams | None = None

    def __post_init__(self):
        if self.preferred not in (1, 2):
            raise ValueError("preferred must be 1 or 2")

    def to_dict(self) -> dict:
        d = {"word": self.word, "w1": self.w1, "w2": self.w2, "preferred": self.preferred}
        if isinstance(self.source_pair, str) and self.source_pair:
            d["pair_id"] = self.source_pair
        if self.phi1 is not None:
            d["phi1"] = self.phi1.to_dict()
        if self.phi2 is not None:
            d["phi2"] = self.phi2.to_dict()
        return d


@dataclass(frozen=True)
class SplitSpec:
    """Word-level split; every pair of a word lives in that word's split."""

    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for name in SPLITS:
            words = getattr(self, name)
            overlap = seen.intersection(words)
            if overlap:
                raise ValueError(f"words appear in multiple splits: {sorted(overlap)[:5]}")
            for w in words:
                if not MIN_WORD_LEN <= len(w) <= MAX_WORD_LEN:
                    raise ValueError(f"word {w!r} outside length bounds "
                                     f"[{MIN_WORD_LEN}, {MAX_WORD_LEN}]")
            seen.update(words)

    def __len__(self) -> int:
        return len(self.train) + len(self.val) + len(self.test)


def _split_lookup(spec: SplitSpec) -> dict[str, str]:
    table: dict[str, str] = {}
    for name in SPLITS:
        for w in getattr(spec, name):
            table[w] = name
    return table


def split_of(spec: SplitSpec, word: str) -> str:
    table = _split_lookup(spec)
    if word not in table:
        raise KeyError(f"word {word!r} not in any split")
    return table[word]


def filter_vocab(words: list[str]) -> list[str]:
    """Lowercase, keep alphabetic-only words of length 4..14, dedupe in order."""
    out: list[str] = []
    seen: set[str] = set()
    for raw in words:
        w = raw.strip().lower()
        if not w.isalpha():
            continue
        if not MIN_WORD_LEN <= len(w) <= MAX_WORD_LEN:
            continue
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


def split_words(words: list[str], fractions: tuple[float, float, float] = SPLIT_FRACTIONS,
                seed: int = 0) -> SplitSpec:
    """Random word-level split with the given train/val/test fractions."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    rng = np.random.default_rng(seed)
    order = [words[i] for i in rng.permutation(len(words))]
    n = len(order)
    n_train = int(round(fractions[0] * n))
    n_val = int(round((fractions[0] + fractions[1]) * n)) - n_train
    return SplitSpec(train=tuple(order[:n_train]),
                     val=tuple(order[n_train:n_train + n_val]),
                     test=tuple(order[n_train + n_val:]))


def derive_classification(pairs: list[PairAnnotation]) -> list[ClassificationExample]:
    """BL marks both legible, NL both illegible; a strict preference marks only
    the preferred perturbation legible and excludes the other (its legibility
    is unknown)."""
    out: list[ClassificationExample] = []
    for p in pairs:
        pid = p.key if isinstance(p.key, str) else p.key
        if p.label == BL:
            out.append(ClassificationExample(p.word, p.w1, True, pid, p.phi1))
            out.append(ClassificationExample(p.word, p.w2, True, pid, p.phi2))
        elif p.label == NL:
            out.append(ClassificationExample(p.word, p.w1, False, pid, p.phi1))
            out.append(ClassificationExample(p.word, p.w2, False, pid, p.phi2))
        elif p.label == L1:
            out.append(ClassificationExample(p.word, p.w1, True, pid, p.phi1))
        else:  # L2
            out.append(ClassificationExample(p.word, p.w2, True, pid, p.phi2))
    return out


def derive_ranking(pairs: list[PairAnnotation]) -> list[RankingExample]:
    """Strict preferences only; BL and NL pairs carry no ranking signal."""
    out: list[RankingExample] = []
    for p in pairs:
        if p.label in (L1, L2):
            out.append(RankingExample(p.word, p.w1, p.w2, 1 if p.label == L1 else 2,
                                      p.key if isinstance(p.key, str) else "",
                                      p.phi1, p.phi2))
    return out


def hard_ranking_subset(examples: list[RankingExample],
                        threshold: float = HARD_RANKING_THRESHOLD) -> list[RankingExample]:
    """Pairs whose corruption fractions are close: (n1-n2)^2/(n1*n2) < threshold.

    The statistic is undefined when either n is zero; such pairs cannot be
    "similarly parameterized" in the intended sense and are excluded.
    """
    out = []
    for ex in examples:
        if ex.phi1 is None or ex.phi2 is None:
            raise MissingMetadata(f"ranking example for {ex.word!r} lacks phi metadata")
        n1, n2 = ex.phi1.n, ex.phi2.n
        if n1 <= 0 or n2 <= 0:
            continue
        if (n1 - n2) ** 2 / (n1 * n2) < threshold:
            out.append(ex)
    return out


def hard_classification_subset(examples: list[ClassificationExample],
                               threshold: float = HARD_CLASSIFICATION_THRESHOLD
                               ) -> list[ClassificationExample]:
    """Heavily corrupted words only: n strictly greater than the threshold."""
    out = []
    for ex in examples:
        if ex.phi is None:
            raise MissingMetadata(f"classification example for {ex.word!r} lacks phi metadata")
        if ex.phi.n > threshold:
            out.append(ex)
    return out


def fleiss_kappa(counts) -> float:
    """Fleiss' kappa from an (items x categories) matrix of rating counts.

    Every item must have the same number of ratings r >= 2. When chance
    agreement is exactly 1 (all ratings in a single category) the statistic
    is 0/0; we define it as 1.0 since observed agreement is also perfect.
    """
    m = np.asarray(counts, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError("counts must be a nonempty 2-D matrix")
    if (m < 0).any() or (m != np.floor(m)).any():
        raise ValueError("counts must be nonnegative integers")
    r = m[0].sum()
    if r < 2:
        raise WrongAnnotationCount(f"need at least 2 ratings per item, got {int(r)}")
    if not np.all(m.sum(axis=1) == r):
        raise WrongAnnotationCount("every item must have the same number of ratings")
    n_items = m.shape[0]
    p_cat = m.sum(axis=0) / (n_items * r)
    p_item = ((m * m).sum(axis=1) - r) / (r * (r - 1))
    p_bar = p_item.mean()
    p_e = float((p_cat * p_cat).sum())
    if p_e == 1.0:
        return 1.0
    return float((p_bar - p_e) / (1.0 - p_e))


@dataclass(frozen=True)
class AgreementReport:
    frac_all3: float
    frac_2of3: float
    frac_none: float
    filtered: tuple[PairAnnotation, ...]  # majority-labeled; full disagreement removed

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.frac_all3, self.frac_2of3, self.frac_none)


def agreement_stats(annotations: list[PairAnnotation]) -> AgreementReport:
    """Agreement fractions over triple-annotated pairs, plus the filtered set.

    Pairs where all three annotators chose different labels are dropped;
    the rest keep their majority label under annotator id "majority".
    """
    groups: dict = {}
    order: list = []
    for a in annotations:
        if a.key not in groups:
            groups[a.key] = []
            order.append(a.key)
        groups[a.key].append(a)
    for key, members in groups.items():
        if len(members) != 3:
            raise WrongAnnotationCount(
                f"pair {key!r} has {len(members)} annotations, expected 3")
    n_all = n_two = n_none = 0
    filtered: list[PairAnnotation] = []
    for key in order:
        members = groups[key]
        tally = Counter(a.label for a in members)
        top_label, top_count = tally.most_common(1)[0]
        if top_count == 3:
            n_all += 1
        elif top_count == 2:
            n_two += 1
        else:
            n_none += 1
            continue
        filtered.append(replace(members[0], label=top_label, annotator_id="majority"))
    total = len(order)
    if total == 0:
        raise WrongAnnotationCount("no annotations given")
    return AgreementReport(n_all / total, n_two / total, n_none / total, tuple(filtered))


def save_annotations(annotations: list[PairAnnotation], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in annotations:
            fh.write(json.dumps(a.to_dict(), ensure_ascii=False) + "\n")


def load_annotations(path: str | Path, force_split: str | None = None) -> list[PairAnnotation]:
    """Read annotation JSONL; ``force_split`` overrides any per-record split
    (used when the file's name already names the split)."""
    path = Path(path)
    out: list[PairAnnotation] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(f"{path}:{lineno}: invalid JSON") from e
            if force_split is not None:
                d["split"] = force_split
            try:
                out.append(PairAnnotation.from_dict(d))
            except (KeyError, ValueError) as e:
                raise FormatError(f"{path}:{lineno}: {e}") from e
    return out


@dataclass
class LegitDataset:
    """All annotations plus per-split derived views."""

    pairs: list[PairAnnotation] = field(default_factory=list)

    def by_split(self, split: str) -> list[PairAnnotation]:
        return [p for p in self.pairs if p.split == split]

    def distinct_pairs(self, split: str) -> int:
        return len({p.key for p in self.by_split(split)})

    def distinct_words(self, split: str) -> int:
        return len({p.word for p in self.by_split(split)})

    def resolved(self, split: str) -> list[PairAnnotation]:
        """One annotation per pair: majority vote where triple-annotated,
        pass-through otherwise."""
        members = self.by_split(split)
        per_pair = Counter(p.key for p in members)
        if members and set(per_pair.values()) == {3}:
            return list(agreement_stats(members).filtered)
        return members

    def classification(self, split: str) -> list[ClassificationExample]:
        return derive_classification(self.resolved(split))

    def ranking(self, split: str) -> list[RankingExample]:
        return derive_ranking(self.resolved(split))


@dataclass(frozen=True)
class IngestReport:
    rows: tuple[tuple[str, str, int, int], ...]  # (split, stat, actual, expected)

    @property
    def warnings(self) -> list[str]:
        return [f"{split}/{stat}: expected {exp}, found {act}"
                for split, stat, act, exp in self.rows if act != exp]

    def __str__(self) -> str:
        lines = [f"{'split':<8}{'stat':<16}{'actual':>8}{'expected':>10}  match"]
        for split, stat, act, exp in self.rows:
            lines.append(f"{split:<8}{stat:<16}{act:>8}{exp:>10}  {'yes' if act == exp else 'NO'}")
        return "\n".join(lines)


def ingest_legit(path: str | Path) -> tuple[LegitDataset, IngestReport]:
    """Load an annotation corpus and report its statistics against the
    published ones. Mismatches warn in the report; they never fail."""
    path = Path(path)
    pairs: list[PairAnnotation] = []
    if path.is_dir():
        found = False
        for split in SPLITS:
            f = path / f"{split}.jsonl"
            if f.exists():
                found = True
                pairs.extend(load_annotations(f, force_split=split))
        if not found:
            raise FormatError(f"{path}: no train/val/test .jsonl files found")
    else:
        pairs = load_annotations(path)
    ds = LegitDataset(pairs)
    rows = []
    totals = {"pairs": 0, "words": 0, "classification": 0, "ranking": 0}
    for split in SPLITS:
        actual = {
            "pairs": ds.distinct_pairs(split),
            "words": ds.distinct_words(split),
            "classification": len(ds.classification(split)),
            "ranking": len(ds.ranking(split)),
        }
        for stat, value in actual.items():
            totals[stat] += value
            rows.append((split, stat, value, EXPECTED_STATS[split][stat]))
    for stat, value in totals.items():
        rows.append(("total", stat, value, EXPECTED_STATS["total"][stat]))
    return ds, IngestReport(tuple(rows))
