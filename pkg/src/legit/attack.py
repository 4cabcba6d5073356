"""Legibility-filtered corpus perturbation, victim degradation, recovery.

The pipeline mirrors a black-box robustness experiment: perturb a corpus
with visually similar substitutions, keep only candidates a legibility
scorer accepts, measure how much a victim classifier degrades at each
corruption level, and measure how well the original words can be
recovered from the perturbed forms (exact and stem match).

Sentences are tokenized on whitespace; each token's alphabetic core is
perturbed while leading/trailing punctuation passes through, as do tokens
containing characters outside the substitution tables. Determinism: one
master seed derives per-sentence and per-word child seeds, so sentences
could be processed in parallel without changing any output.
"""

from __future__ import annotations

import json
import string
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import SchemaMismatch, VictimUnavailable
from .index import EmbeddingMatrix, NeighborTable
from .metrics import accuracy as _accuracy
from .metrics import roc_auc
from .perturb import ParamPrior, PerturbParams, derive_seed, perturb_word, sample_params
from .scorer import LegibilityScorer
from .stem import porter_stem

DEFAULT_N_LEVELS = (0.3, 0.7, 1.0)
RESAMPLE_BUDGET = 10
# Attack-side prior: low ranks so the legibility filter keeps words even at
# full replacement (rank-1 substitutes are near-identical glyphs).
DEFAULT_ATTACK_PRIOR = ParamPrior(mu_k=3.0, var_k=4.0, mu_n=0.5, var_n=0.2)
FIXTURE_CORPUS = "attack_fixture.jsonl"
_PUNCT = string.punctuation


# ---------------------------------------------------------------------------
# corpus perturbation

@dataclass(frozen=True)
class PerturbedToken:
    """One whitespace token before and after perturbation."""

    original: str
    perturbed: str
    word: str            # alphabetic core; "" when the token passed through
    perturbed_word: str
    phi: PerturbParams | None
    seed: int | None
    attempts: int        # candidate draws spent (0 = no eligible core)
    score: float | None  # legibility score of the kept candidate, if filtered

    @property
    def changed(self) -> bool:
        return self.original != self.perturbed


@dataclass(frozen=True)
class PerturbedSentence:
    tokens: tuple[PerturbedToken, ...]

    @property
    def text(self) -> str:
        return " ".join(t.perturbed for t in self.tokens)

    @property
    def original_text(self) -> str:
        return " ".join(t.original for t in self.tokens)


@dataclass(frozen=True)
class PerturbedCorpus:
    sentences: tuple[PerturbedSentence, ...]
    threshold: float
    seed: int

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.sentences]

    def word_pairs(self) -> list[tuple[str, str]]:
        """(original core, perturbed core) for every eligible word."""
        return [(t.word, t.perturbed_word)
                for s in self.sentences for t in s.tokens if t.word]


def _split_token(token: str) -> tuple[str, str, str]:
    """(prefix punctuation, core, suffix punctuation)."""
    left = token.lstrip(_PUNCT)
    prefix = token[:len(token) - len(left)]
    core = left.rstrip(_PUNCT)
    suffix = left[len(core):]
    return prefix, core, suffix


def perturb_corpus(texts: Sequence[str], prior: ParamPrior,
                   tables: Mapping[str, NeighborTable],
                   scorer: LegibilityScorer | None, threshold: float = 0.0,
                   seed: int = 0, resample: int = RESAMPLE_BUDGET,
                   fixed_n: float | None = None) -> PerturbedCorpus:
    """Perturb every word of every sentence, keeping only candidates the
    scorer rates strictly above ``threshold``.

    Per word, perturbation parameters are drawn from ``prior`` (``fixed_n``
    pins the replacement fraction for level sweeps) and the candidate is
    resampled up to ``resample`` times before falling back to the original
    word. ``scorer=None`` disables the filter. Output is fully determined
    by ``seed``.
    """
    if not tables:
        raise ValueError("tables must be nonempty")
    models = sorted(tables)
    sentences = []
    for s_idx, text in enumerate(texts):
        sentence_seed = derive_seed(seed, s_idx)
        tokens = []
        for t_idx, token in enumerate(text.split()):
            prefix, core, suffix = _split_token(token)
            eligible = bool(core) and all(
                ord(ch) in tables[m] for m in models for ch in core)
            if not eligible:
                tokens.append(PerturbedToken(token, token, "", "", None, None, 0, None))
                continue
            rng = np.random.default_rng(derive_seed(sentence_seed, t_idx))
            kept: tuple[str, PerturbParams | None, int | None, float | None] | None = None
            attempts = 0
            for _ in range(max(1, resample)):
                attempts += 1
                phi = sample_params(prior, models, rng)
                if fixed_n is not None:
                    phi = PerturbParams(n=fixed_n, k=phi.k, model_id=phi.model_id)
                word_seed = int(rng.integers(2 ** 63))
                cand = perturb_word(core, phi, tables[phi.model_id], word_seed)
                if cand.is_identity:
                    kept = (core, phi, word_seed, None)
                    break
                if scorer is None:
                    kept = (cand.perturbed, phi, word_seed, None)
                    break
                score = scorer.score(core, cand.perturbed)
                if score > threshold:
                    kept = (cand.perturbed, phi, word_seed, score)
                    break
            if kept is None:
                kept = (core, None, None, None)
            perturbed_core, phi, word_seed, score = kept
            tokens.append(PerturbedToken(
                original=token, perturbed=prefix + perturbed_core + suffix,
                word=core, perturbed_word=perturbed_core, phi=phi,
                seed=word_seed, attempts=attempts, score=score))
        sentences.append(PerturbedSentence(tuple(tokens)))
    return PerturbedCorpus(tuple(sentences), threshold, seed)


# ---------------------------------------------------------------------------
# victim degradation

@dataclass(frozen=True)
class BucketMetrics:
    """Victim performance at one corruption level."""

    n: float
    accuracy: float
    auc: float
    accuracy_delta: float  # clean minus perturbed; positive = degradation
    auc_delta: float


@dataclass(frozen=True)
class DegradationReport:
    clean_accuracy: float
    clean_auc: float
    buckets: tuple[BucketMetrics, ...]

    def to_csv(self) -> str:
        """Plot-ready rows: the clean corpus appears as n=0."""
        lines = ["n,accuracy,auc,accuracy_delta,auc_delta",
                 f"0.0,{self.clean_accuracy:.6f},{self.clean_auc:.6f},0.000000,0.000000"]
        for b in self.buckets:
            lines.append(f"{b.n},{b.accuracy:.6f},{b.auc:.6f},"
                         f"{b.accuracy_delta:.6f},{b.auc_delta:.6f}")
        return "\n".join(lines) + "\n"

    def save_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def _score_column(responses: list[dict[str, float]],
                  positive_key: str | None) -> np.ndarray:
    if positive_key is None:
        keys = {k for r in responses for k in r}
        if len(keys) != 1:
            raise SchemaMismatch(
                f"victim returned {sorted(keys)!r}; pass positive_key to pick one")
        positive_key = keys.pop()
    try:
        return np.array([r[positive_key] for r in responses], dtype=np.float64)
    except KeyError as e:
        raise SchemaMismatch(f"victim response lacks label {positive_key!r}") from e


def victim_eval(client, texts: Sequence[str], labels: Sequence[int],
                perturbed: Mapping[float, Sequence[str]],
                positive_key: str | None = None) -> DegradationReport:
    """Accuracy and AUC of a victim on the clean corpus and each perturbed
    variant, with degradation deltas per corruption level.

    ``client`` is anything with ``score_texts`` (see victim transports);
    failures surface as VictimUnavailable/SchemaMismatch from the client.
    """
    if len(texts) != len(labels) or not texts:
        raise ValueError("texts and labels must be nonempty and aligned")
    for level, variant in perturbed.items():
        if len(variant) != len(texts):
            raise ValueError(f"perturbed corpus at n={level} is not aligned 1:1")
    y = np.asarray(labels, dtype=bool)
    clean_scores = _score_column(client.score_texts(list(texts)), positive_key)
    clean_acc = _accuracy(y, clean_scores >= 0.5)
    clean_auc = roc_auc(y, clean_scores)
    buckets = []
    for level in sorted(perturbed):
        scores = _score_column(client.score_texts(list(perturbed[level])), positive_key)
        acc = _accuracy(y, scores >= 0.5)
        auc = roc_auc(y, scores)
        buckets.append(BucketMetrics(
            n=float(level), accuracy=acc, auc=auc,
            accuracy_delta=clean_acc - acc, auc_delta=clean_auc - auc))
    return DegradationReport(clean_acc, clean_auc, tuple(buckets))


# ---------------------------------------------------------------------------
# word recovery

def _char_distance(a: str, b: str, matrix: EmbeddingMatrix) -> float:
    if a == b:
        return 0.0
    if ord(a) not in matrix or ord(b) not in matrix:
        return 1.0  # characters we cannot see count as fully dissimilar
    return matrix.distance(ord(a), ord(b))


def _word_distance(wi: str, v: str, matrix: EmbeddingMatrix) -> float:
    """Mean per-character distance; unaligned tail positions count 1.0."""
    aligned = sum(_char_distance(a, b, matrix) for a, b in zip(wi, v))
    longer = max(len(wi), len(v))
    return (aligned + (longer - min(len(wi), len(v)))) / longer


class DictionaryRecoverer:
    """Visual nearest-neighbor lookup of a perturbed word in a vocabulary.

    Same-length words are searched first (mean per-character cosine
    distance, ties broken lexicographically); if none exists, candidates
    of nearest length are compared instead.
    """

    def __init__(self, vocab: Iterable[str], matrix: EmbeddingMatrix):
        words = sorted(set(vocab))
        if not words:
            raise ValueError("vocab must be nonempty")
        self.matrix = matrix
        self._by_length: dict[int, list[str]] = {}
        for w in words:
            self._by_length.setdefault(len(w), []).append(w)

    def recover(self, wi: str) -> str:
        lengths = self._by_length.keys()
        diff = min(abs(length - len(wi)) for length in lengths)
        candidates = [w for length in lengths if abs(length - len(wi)) == diff
                      for w in self._by_length[length]]
        return min(candidates,
                   key=lambda v: (_word_distance(wi, v, self.matrix), v))

    def recover_batch(self, words: Sequence[str]) -> list[str]:
        return [self.recover(w) for w in words]


class ExternalRecoverer:
    """Recovery via a child process speaking JSONL on stdin/stdout.

    Requests are ``{"id": ..., "word": ...}`` and responses
    ``{"id": ..., "word": ...}``, so any external model can be wired in.
    """

    def __init__(self, command: str | list[str]):
        import shlex
        import subprocess
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            self.proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.PIPE, text=True, encoding="utf-8")
        except OSError as e:
            raise VictimUnavailable(f"cannot start recoverer {argv!r}: {e}") from e

    def recover(self, wi: str) -> str:
        return self.recover_batch([wi])[0]

    def recover_batch(self, words: Sequence[str]) -> list[str]:
        out = []
        for i, word in enumerate(words):
            line = json.dumps({"id": i, "word": word}, ensure_ascii=False)
            try:
                assert self.proc.stdin is not None and self.proc.stdout is not None
                self.proc.stdin.write(line + "\n")
                self.proc.stdin.flush()
                reply = self.proc.stdout.readline()
            except (BrokenPipeError, OSError) as e:
                raise VictimUnavailable(f"recoverer pipe failed: {e}") from e
            if not reply:
                raise VictimUnavailable("recoverer closed its output")
            try:
                doc = json.loads(reply)
            except json.JSONDecodeError as e:
                raise SchemaMismatch(f"recoverer reply is not JSON: {reply!r}") from e
            if not isinstance(doc, dict) or doc.get("id") != i or "word" not in doc:
                raise SchemaMismatch(f"bad recoverer reply: {doc!r}")
            out.append(str(doc["word"]))
        return out

    def close(self) -> None:
        if self.proc.poll() is None:
            if self.proc.stdin is not None:
                self.proc.stdin.close()
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except Exception:
                self.proc.kill()

    def __enter__(self) -> "ExternalRecoverer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def dictionary_recover(wi: str, vocab: Iterable[str],
                       matrix: EmbeddingMatrix) -> str:
    """One-shot form of DictionaryRecoverer for a single word."""
    return DictionaryRecoverer(vocab, matrix).recover(wi)


@dataclass(frozen=True)
class RecoveryReport:
    """Recovery outcomes for one corruption level."""

    n: float
    total: int
    exact: int
    stem_matches: int

    def __post_init__(self):
        if not 0 <= self.exact <= self.stem_matches <= self.total:
            raise ValueError("need 0 <= exact <= stem_matches <= total")

    @property
    def accuracy(self) -> float:
        return self.stem_matches / self.total if self.total else 0.0

    @property
    def exact_accuracy(self) -> float:
        return self.exact / self.total if self.total else 0.0


def recovery_eval(pairs: Iterable[tuple[str, str, float]], recoverer,
                  stemmer=porter_stem,
                  levels: Sequence[float] = DEFAULT_N_LEVELS) -> list[RecoveryReport]:
    """Exact- and stem-match recovery per corruption level.

    ``pairs`` are (original, perturbed, n) triples; each is assigned to
    the nearest level. A prediction counts once for exact match and once
    for stem match (exact implies stem, so exact <= stem <= total).
    """
    if not levels:
        raise ValueError("levels must be nonempty")
    counts = {level: [0, 0, 0] for level in levels}  # total, exact, stem
    for w, wi, n in pairs:
        level = min(levels, key=lambda lv: (abs(lv - n), lv))
        predicted = recoverer.recover(wi)
        bucket = counts[level]
        bucket[0] += 1
        if predicted == w:
            bucket[1] += 1
        if stemmer(predicted) == stemmer(w):
            bucket[2] += 1
    return [RecoveryReport(n=level, total=c[0], exact=c[1], stem_matches=c[2])
            for level, c in ((lv, counts[lv]) for lv in levels)]


def recovery_csv(reports: Sequence[RecoveryReport]) -> str:
    lines = ["n,total,exact,stem_matches,accuracy,exact_accuracy"]
    for r in reports:
        lines.append(f"{r.n},{r.total},{r.exact},{r.stem_matches},"
                     f"{r.accuracy:.6f},{r.exact_accuracy:.6f}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# end-to-end sweep

def load_fixture_corpus() -> tuple[list[str], list[int]]:
    """The bundled 200-sentence labeled corpus for offline experiments."""
    from .victim import load_labeled_corpus
    path = resources.files("legit") / "assets" / FIXTURE_CORPUS
    return load_labeled_corpus(str(path))


@dataclass(frozen=True)
class AttackReport:
    degradation: DegradationReport
    recovery: tuple[RecoveryReport, ...]
    perturbed: dict[float, PerturbedCorpus]

    def to_json(self) -> str:
        doc = {
            "clean": {"accuracy": self.degradation.clean_accuracy,
                      "auc": self.degradation.clean_auc},
            "buckets": [
                {"n": b.n, "accuracy": b.accuracy, "auc": b.auc,
                 "accuracy_delta": b.accuracy_delta, "auc_delta": b.auc_delta}
                for b in self.degradation.buckets],
            "recovery": [
                {"n": r.n, "total": r.total, "exact": r.exact,
                 "stem_matches": r.stem_matches, "accuracy": r.accuracy}
                for r in self.recovery],
        }
        return json.dumps(doc, indent=2, ensure_ascii=False)


def attack_sweep(texts: Sequence[str], labels: Sequence[int], victim_client,
                 tables: Mapping[str, NeighborTable], matrix: EmbeddingMatrix,
                 scorer: LegibilityScorer | None, threshold: float = 0.0,
                 prior: ParamPrior = DEFAULT_ATTACK_PRIOR,
                 n_levels: Sequence[float] = DEFAULT_N_LEVELS,
                 seed: int = 0, vocab: Iterable[str] | None = None,
                 recoverer=None) -> AttackReport:
    """Perturb at each n level, measure victim degradation and recovery.

    ``vocab`` defaults to the distinct alphabetic words of the clean
    corpus; ``recoverer`` defaults to the dictionary recoverer over it.
    """
    perturbed: dict[float, PerturbedCorpus] = {}
    for i, level in enumerate(n_levels):
        perturbed[float(level)] = perturb_corpus(
            texts, prior, tables, scorer, threshold=threshold,
            seed=derive_seed(seed, i), fixed_n=float(level))
    degradation = victim_eval(
        victim_client, texts, labels,
        {level: corpus.texts for level, corpus in perturbed.items()})
    if recoverer is None:
        if vocab is None:
            vocab = {t.word for c in perturbed.values()
                     for s in c.sentences for t in s.tokens if t.word}
        recoverer = DictionaryRecoverer(vocab, matrix)
    pairs = [(w, wi, level)
             for level, corpus in perturbed.items()
             for w, wi in corpus.word_pairs()]
    recovery = recovery_eval(pairs, recoverer, levels=[float(lv) for lv in n_levels])
    return AttackReport(degradation, tuple(recovery), perturbed)
