"""Event-sourced core of the live human-annotation service.

The service issues batches of rendered word pairs to annotators, records
exactly one of four labels per (annotator, pair), injects author-labeled
gold pairs as hidden quality checks, disqualifies annotators whose gold
accuracy drops below threshold, and advances through annotation rounds
whose sampling priors contract adaptively.

Every state transition is decided once under a lock, appended to a JSONL
event log, and then applied by the same code that replay uses. Rebuilding
a service from its log therefore reproduces the exact same state, and
dataset exports are pure functions of the log (byte-for-byte identical on
replay). Randomness (pair generation, gold injection, batch order) is
drawn from generators derived from the master seed and the current event
count, so a replayed service also continues deterministically.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, IO, Mapping

import numpy as np

from .dataset import LABELS, PairAnnotation, agreement_stats, filter_vocab, split_words
from .errors import (
    AlreadyLabeled,
    Disqualified,
    FormatError,
    NoOpenRound,
    NotReserved,
    RoundOpen,
)
from .index import NeighborTable
from .perturb import ParamPrior, PerturbParams, adaptive_update, derive_seed, generate_pair

GOLD_ASSET = "gold_pairs.jsonl"


@dataclass(frozen=True)
class ServiceConfig:
    """Operational knobs of the annotation service."""

    batch_size: int = 20
    gold_rate: float = 1.0 / 20.0     # per-slot injection probability
    gold_min_attempts: int = 10       # gold attempts before disqualification applies
    gold_threshold: float = 0.70      # minimum gold accuracy to stay active
    reservation_ttl: float = 900.0    # seconds before an unserved batch returns
    test_annotations: int = 3         # labels required per test-split pair
    trainval_annotations: int = 1     # labels required per train/val pair
    words_per_round: int | None = None  # None: one third of the vocabulary
    pairs_per_word: int = 1
    prior1: ParamPrior = field(default_factory=ParamPrior)
    prior2: ParamPrior = field(default_factory=ParamPrior)

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "gold_rate": self.gold_rate,
            "gold_min_attempts": self.gold_min_attempts,
            "gold_threshold": self.gold_threshold,
            "reservation_ttl": self.reservation_ttl,
            "test_annotations": self.test_annotations,
            "trainval_annotations": self.trainval_annotations,
            "words_per_round": self.words_per_round,
            "pairs_per_word": self.pairs_per_word,
            "prior1": self.prior1.to_dict(),
            "prior2": self.prior2.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ServiceConfig":
        d = dict(d)
        d["prior1"] = ParamPrior.from_dict(d["prior1"])
        d["prior2"] = ParamPrior.from_dict(d["prior2"])
        return cls(**d)


@dataclass(frozen=True)
class GoldPair:
    """An author-labeled pair injected into batches as a quality check."""

    word: str
    w1: str
    w2: str
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"gold label must be one of {LABELS}")


def load_gold_pairs(path: str | Path | None = None) -> list[GoldPair]:
    """Read gold pairs from JSONL; defaults to the bundled fixture set."""
    if path is None:
        path = str(resources.files("legit") / "assets" / GOLD_ASSET)
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
                out.append(GoldPair(word=d["word"], w1=d["w1"], w2=d["w2"],
                                    label=d["label"]))
            except (json.JSONDecodeError, KeyError, ValueError) as e:
                raise FormatError(f"{path}:{lineno}: {e}") from e
    if not out:
        raise FormatError(f"{path}: no gold pairs")
    return out


@dataclass(frozen=True)
class AnnotatorState:
    """Public snapshot of one annotator's progress and standing."""

    id: str
    completed: int
    gold_correct: int
    gold_attempted: int
    status: str  # "active" | "disqualified"

    @property
    def gold_accuracy(self) -> float:
        return self.gold_correct / self.gold_attempted if self.gold_attempted else 1.0

    def to_dict(self) -> dict:
        return {"id": self.id, "completed": self.completed,
                "gold_correct": self.gold_correct,
                "gold_attempted": self.gold_attempted, "status": self.status}


class _Annotator:
    __slots__ = ("id", "token", "completed", "gold_correct", "gold_attempted",
                 "disqualified")

    def __init__(self, annotator_id: str, token: str):
        self.id = annotator_id
        self.token = token
        self.completed = 0
        self.gold_correct = 0
        self.gold_attempted = 0
        self.disqualified = False

    def snapshot(self) -> AnnotatorState:
        return AnnotatorState(
            id=self.id, completed=self.completed, gold_correct=self.gold_correct,
            gold_attempted=self.gold_attempted,
            status="disqualified" if self.disqualified else "active")


class _Pair:
    __slots__ = ("pair_id", "round_index", "word", "w1", "w2", "phi1", "phi2",
                 "split")

    def __init__(self, pair_id: str, round_index: int, word: str, w1: str,
                 w2: str, phi1: PerturbParams, phi2: PerturbParams, split: str):
        self.pair_id = pair_id
        self.round_index = round_index
        self.word = word
        self.w1 = w1
        self.w2 = w2
        self.phi1 = phi1
        self.phi2 = phi2
        self.split = split


class _Round:
    __slots__ = ("index", "prior1", "prior2", "pair_ids")

    def __init__(self, index: int, prior1: ParamPrior, prior2: ParamPrior):
        self.index = index
        self.prior1 = prior1
        self.prior2 = prior2
        self.pair_ids: list[str] = []


@dataclass(frozen=True)
class ExportResult:
    """A dataset export: annotation JSONL plus summary statistics."""

    annotations_jsonl: str
    stats: dict

    @property
    def stats_json(self) -> str:
        return json.dumps(self.stats, indent=2, sort_keys=True, ensure_ascii=False)

    def to_json(self) -> str:
        return json.dumps({"annotations": self.annotations_jsonl,
                           "stats": self.stats},
                          indent=2, sort_keys=True, ensure_ascii=False)


class AnnotationService:
    """Batch issuance, label capture, gold checks, rounds, and export.

    All public methods are thread-safe; writes are serialized through one
    lock and appended to the event log before being applied.
    """

    def __init__(self, vocab: list[str], tables: Mapping[str, NeighborTable],
                 *, config: ServiceConfig | None = None,
                 gold: list[GoldPair] | None = None, seed: int = 0,
                 log_path: str | Path | None = None,
                 clock: Callable[[], float] = time.time):
        config = config or ServiceConfig()
        gold = gold if gold is not None else load_gold_pairs()
        words = [w for w in filter_vocab(vocab)
                 if all(ord(ch) in t for t in tables.values() for ch in w)]
        if not words:
            raise ValueError("no usable vocabulary words (after filtering)")
        spec = split_words(words, seed=seed)
        self._new_instance(tables, clock, log_path=None)
        rng = np.random.default_rng(derive_seed(seed, 0))
        gold_rows = []
        gold_ids: set[str] = set()
        for g in gold:
            pid = self._fresh_id(rng, gold_ids)
            gold_ids.add(pid)
            gold_rows.append({"pair_id": pid, "word": g.word, "w1": g.w1,
                              "w2": g.w2, "label": g.label})
        init = {
            "event": "init", "seed": seed, "config": config.to_dict(),
            "vocab": words,
            "splits": {"train": list(spec.train), "val": list(spec.val),
                       "test": list(spec.test)},
            "gold": gold_rows,
        }
        self._open_log(log_path, truncate=True)
        self._append(init)

    # ------------------------------------------------------------------
    # construction and replay

    def _new_instance(self, tables: Mapping[str, NeighborTable],
                      clock: Callable[[], float],
                      log_path: str | Path | None) -> None:
        self._tables = dict(tables)
        self._models = sorted(self._tables)
        self._clock = clock
        self._lock = threading.RLock()
        self._log: IO[str] | None = None
        self._log_path = Path(log_path) if log_path is not None else None
        self.events: list[dict] = []
        self.seed = 0
        self.config = ServiceConfig()
        self._vocab: list[str] = []
        self._split_of: dict[str, str] = {}
        self._gold: dict[str, GoldPair] = {}
        self._pairs: dict[str, _Pair] = {}
        self._rounds: list[_Round] = []
        self._annotators: dict[str, _Annotator] = {}
        self._tokens: dict[str, str] = {}
        self._used_words: set[str] = set()
        self._labels: list[dict] = []
        self._labels_by_pair: dict[str, list[tuple[str, str]]] = {}
        self._labeled: set[tuple[str, str]] = set()
        self._reservations: dict[str, dict[str, float]] = {}

    def _open_log(self, log_path: str | Path | None, truncate: bool) -> None:
        if log_path is None:
            return
        self._log_path = Path(log_path)
        mode = "w" if truncate else "a"
        self._log = open(self._log_path, mode, encoding="utf-8")

    @classmethod
    def from_log(cls, path: str | Path, tables: Mapping[str, NeighborTable],
                 *, clock: Callable[[], float] = time.time,
                 resume: bool = False) -> "AnnotationService":
        """Rebuild a service by replaying its event log.

        Replay applies recorded events verbatim (no RNG involved). With
        ``resume`` the log file is reopened for appending so the service
        can keep operating; otherwise it is read-only state.
        """
        svc = cls.__new__(cls)
        svc._new_instance(tables, clock, log_path=None)
        with open(path, "r", encoding="utf-8") as fh:
            lines = [line for line in (raw.strip() for raw in fh) if line]
        if not lines:
            raise FormatError(f"{path}: empty event log")
        for lineno, line in enumerate(lines, 1):
            try:
                event = json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(f"{path}:{lineno}: invalid JSON") from e
            if lineno == 1 and event.get("event") != "init":
                raise FormatError(f"{path}: first event must be init")
            svc.events.append(event)
            svc._apply(event)
        if resume:
            svc._open_log(path, truncate=False)
        return svc

    @classmethod
    def from_events(cls, events: list[dict],
                    tables: Mapping[str, NeighborTable],
                    *, clock: Callable[[], float] = time.time) -> "AnnotationService":
        """Rebuild from an in-memory event list (see ``from_log``)."""
        svc = cls.__new__(cls)
        svc._new_instance(tables, clock, log_path=None)
        if not events or events[0].get("event") != "init":
            raise FormatError("first event must be init")
        for event in events:
            svc.events.append(event)
            svc._apply(event)
        return svc

    def close(self) -> None:
        if self._log is not None:
            self._log.close()
            self._log = None

    def __enter__(self) -> "AnnotationService":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # ------------------------------------------------------------------
    # event plumbing

    def _append(self, event: dict) -> None:
        """Record an event and apply it; the single write path."""
        if self._log is not None:
            self._log.write(json.dumps(event, ensure_ascii=False) + "\n")
            self._log.flush()
        self.events.append(event)
        self._apply(event)

    def _apply(self, ev: dict) -> None:
        kind = ev["event"]
        if kind == "init":
            self.seed = ev["seed"]
            self.config = ServiceConfig.from_dict(ev["config"])
            self._vocab = list(ev["vocab"])
            self._split_of = {w: s for s, ws in ev["splits"].items() for w in ws}
            for row in ev["gold"]:
                self._gold[row["pair_id"]] = GoldPair(
                    word=row["word"], w1=row["w1"], w2=row["w2"],
                    label=row["label"])
        elif kind == "round":
            self._rounds.append(_Round(
                ev["index"], ParamPrior.from_dict(ev["prior1"]),
                ParamPrior.from_dict(ev["prior2"])))
        elif kind == "pair":
            pair = _Pair(ev["pair_id"], ev["round"], ev["word"], ev["w1"],
                         ev["w2"], PerturbParams.from_dict(ev["phi1"]),
                         PerturbParams.from_dict(ev["phi2"]), ev["split"])
            self._pairs[pair.pair_id] = pair
            self._rounds[-1].pair_ids.append(pair.pair_id)
            self._used_words.add(pair.word)
        elif kind == "session":
            annotator_id, token = ev["annotator"], ev["token"]
            if annotator_id not in self._annotators:
                self._annotators[annotator_id] = _Annotator(annotator_id, token)
            self._tokens[token] = annotator_id
        elif kind == "batch":
            expiry = ev["time"] + self.config.reservation_ttl
            for pid in ev["pairs"]:
                self._reservations.setdefault(pid, {})[ev["annotator"]] = expiry
        elif kind == "label":
            self._labels.append(ev)
            annotator = self._annotators[ev["annotator"]]
            annotator.completed += 1
            if ev["is_gold"]:
                annotator.gold_attempted += 1
                annotator.gold_correct += bool(ev["gold_correct"])
            self._labels_by_pair.setdefault(ev["pair_id"], []).append(
                (ev["annotator"], ev["label"]))
            self._labeled.add((ev["annotator"], ev["pair_id"]))
            held = self._reservations.get(ev["pair_id"])
            if held is not None:
                held.pop(ev["annotator"], None)
        elif kind == "disqualified":
            self._annotators[ev["annotator"]].disqualified = True
        else:
            raise FormatError(f"unknown event type {kind!r}")

    # ------------------------------------------------------------------
    # derived state

    def _required(self, pair: _Pair) -> int:
        if pair.split == "test":
            return self.config.test_annotations
        return self.config.trainval_annotations

    def _valid_labels(self, pair_id: str) -> list[tuple[str, str]]:
        """Labels that still count (their annotator is not disqualified)."""
        return [(a, lbl) for a, lbl in self._labels_by_pair.get(pair_id, [])
                if not self._annotators[a].disqualified]

    def _active_reservations(self, pair_id: str, now: float,
                             exclude: str | None = None) -> int:
        held = self._reservations.get(pair_id, {})
        return sum(1 for a, expiry in held.items()
                   if expiry > now and a != exclude)

    def _pair_complete(self, pair_id: str) -> bool:
        pair = self._pairs[pair_id]
        return len(self._valid_labels(pair_id)) >= self._required(pair)

    @property
    def round_index(self) -> int:
        """Index of the latest round, 0 before any round exists."""
        return self._rounds[-1].index if self._rounds else 0

    @property
    def round_closed(self) -> bool:
        """True when there is no round or every pair got its labels."""
        if not self._rounds:
            return True
        return all(self._pair_complete(pid) for pid in self._rounds[-1].pair_ids)

    def pair_words(self, pair_id: str) -> tuple[str, str]:
        """The two rendered forms of a pair (pool or gold), for image serving."""
        if pair_id in self._pairs:
            pair = self._pairs[pair_id]
            return pair.w1, pair.w2
        if pair_id in self._gold:
            g = self._gold[pair_id]
            return g.w1, g.w2
        raise KeyError(pair_id)

    def annotator_state(self, annotator_id: str) -> AnnotatorState:
        return self._annotators[annotator_id].snapshot()

    def _resolve(self, token: str) -> _Annotator:
        annotator_id = self._tokens.get(token)
        if annotator_id is None:
            raise ValueError("unknown session token")
        return self._annotators[annotator_id]

    @staticmethod
    def _fresh_id(rng: np.random.Generator, taken: set[str] | dict) -> str:
        while True:
            pid = rng.bytes(8).hex()
            if pid not in taken:
                return pid

    def _rng(self) -> np.random.Generator:
        """Generator derived from the master seed and the event count, so a
        replayed service continues with the exact same draws."""
        return np.random.default_rng(derive_seed(self.seed, len(self.events)))

    # ------------------------------------------------------------------
    # operations

    def create_session(self, annotator_id: str) -> str:
        """Issue (or re-issue) the session token for an annotator."""
        if not annotator_id or not isinstance(annotator_id, str):
            raise ValueError("annotator_id must be a nonempty string")
        with self._lock:
            existing = self._annotators.get(annotator_id)
            if existing is not None:
                if existing.disqualified:
                    raise Disqualified(f"annotator {annotator_id!r} is disqualified")
                return existing.token
            token = hashlib.sha256(
                f"{self.seed}:{annotator_id}".encode("utf-8")).hexdigest()[:32]
            self._append({"event": "session", "annotator": annotator_id,
                          "token": token})
            return token

    def get_batch(self, token: str) -> list[dict]:
        """Reserve and describe the next batch of pairs for an annotator.

        Up to ``batch_size`` pending pool pairs are reserved; each slot
        additionally injects a gold pair with probability ``gold_rate``.
        The combined batch is shuffled so gold items are indistinguishable.
        Returns descriptors with image URLs only; the underlying words are
        never sent to the client.
        """
        with self._lock:
            annotator = self._resolve(token)
            if annotator.disqualified:
                raise Disqualified(f"annotator {annotator.id!r} is disqualified")
            if not self._rounds:
                raise NoOpenRound("no annotation round has been opened")
            if self.round_closed:
                raise NoOpenRound("current round is complete; advance it")
            now = self._clock()
            pool: list[str] = []
            for pid in self._rounds[-1].pair_ids:
                if len(pool) == self.config.batch_size:
                    break
                if (annotator.id, pid) in self._labeled:
                    continue
                pair = self._pairs[pid]
                taken = (len(self._valid_labels(pid))
                         + self._active_reservations(pid, now, exclude=annotator.id))
                if taken < self._required(pair):
                    pool.append(pid)
            rng = self._rng()
            batch = list(pool)
            gold_avail = sorted(
                g for g in self._gold
                if (annotator.id, g) not in self._labeled)
            for _ in range(len(pool)):
                if gold_avail and rng.random() < self.config.gold_rate:
                    pick = int(rng.integers(len(gold_avail)))
                    batch.append(gold_avail.pop(pick))
            if not batch:
                return []
            perm = rng.permutation(len(batch))
            batch = [batch[int(i)] for i in perm]
            self._append({"event": "batch", "annotator": annotator.id,
                          "pairs": batch, "time": now})
            return [{"pair_id": pid, "img1": f"/img/{pid}/1.png",
                     "img2": f"/img/{pid}/2.png"} for pid in batch]

    def submit_label(self, token: str, pair_id: str, label: str) -> dict:
        """Record one label for a reserved pair; returns ack plus status."""
        if label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {label!r}")
        with self._lock:
            annotator = self._resolve(token)
            if annotator.disqualified:
                raise Disqualified(f"annotator {annotator.id!r} is disqualified")
            if pair_id not in self._pairs and pair_id not in self._gold:
                raise NotReserved(f"unknown pair {pair_id!r}")
            if (annotator.id, pair_id) in self._labeled:
                raise AlreadyLabeled(
                    f"annotator {annotator.id!r} already labeled {pair_id!r}")
            now = self._clock()
            expiry = self._reservations.get(pair_id, {}).get(annotator.id)
            if expiry is None or expiry <= now:
                raise NotReserved(
                    f"pair {pair_id!r} is not reserved by {annotator.id!r}")
            gold = self._gold.get(pair_id)
            self._append({
                "event": "label", "annotator": annotator.id, "pair_id": pair_id,
                "label": label, "time": now, "is_gold": gold is not None,
                "gold_correct": (label == gold.label) if gold is not None else None,
            })
            if (not annotator.disqualified
                    and annotator.gold_attempted >= self.config.gold_min_attempts
                    and (annotator.gold_correct / annotator.gold_attempted)
                    < self.config.gold_threshold):
                self._append({"event": "disqualified", "annotator": annotator.id,
                              "time": now})
            return {"ok": True, "annotator": annotator.snapshot().to_dict()}

    def advance_round(self, force: bool = False) -> dict:
        """Open the next round: contract priors, generate a fresh pair pool.

        The first call opens round 1 with the configured priors; later
        calls require the current round to be complete (``force`` abandons
        any stragglers) and apply the adaptive midpoint contraction.
        """
        with self._lock:
            if self._rounds and not self.round_closed and not force:
                raise RoundOpen(
                    f"round {self.round_index} still has unlabeled pairs")
            if not self._rounds:
                prior1, prior2 = self.config.prior1, self.config.prior2
            else:
                prior1, prior2 = adaptive_update(
                    self._rounds[-1].prior1, self._rounds[-1].prior2)
            available = [w for w in self._vocab if w not in self._used_words]
            if not available:
                raise ValueError("vocabulary exhausted: no words left to annotate")
            per_round = self.config.words_per_round
            if per_round is None:
                per_round = max(1, math.ceil(len(self._vocab) / 3))
            chosen = available[:per_round]
            rng = self._rng()
            index = self.round_index + 1
            events = [{"event": "round", "index": index,
                       "prior1": prior1.to_dict(), "prior2": prior2.to_dict()}]
            taken = set(self._pairs) | set(self._gold)
            for word in chosen:
                for _ in range(self.config.pairs_per_word):
                    pair_seed = int(rng.integers(2 ** 63))
                    pp = generate_pair(word, prior1, prior2, self._models,
                                       self._tables, pair_seed)
                    pid = self._fresh_id(rng, taken)
                    taken.add(pid)
                    events.append({
                        "event": "pair", "pair_id": pid, "round": index,
                        "word": word, "w1": pp.w1.perturbed,
                        "w2": pp.w2.perturbed,
                        "phi1": pp.w1.params.to_dict(),
                        "phi2": pp.w2.params.to_dict(),
                        "split": self._split_of[word], "seed": pair_seed,
                    })
            for event in events:
                self._append(event)
            return {"index": index, "pairs": len(events) - 1,
                    "prior1": prior1.to_dict(), "prior2": prior2.to_dict()}

    def export_dataset(self) -> ExportResult:
        """All valid labels as annotation JSONL plus summary statistics.

        A label is valid when it is not gold and its annotator is not
        disqualified. Test pairs whose three valid labels all disagree are
        dropped. The result is a pure function of the event log.
        """
        with self._lock:
            valid = [ev for ev in self._labels
                     if not ev["is_gold"]
                     and not self._annotators[ev["annotator"]].disqualified]
            voided = sum(1 for ev in self._labels
                         if not ev["is_gold"]
                         and self._annotators[ev["annotator"]].disqualified)
            gold_count = sum(1 for ev in self._labels if ev["is_gold"])
            by_pair: dict[str, list[dict]] = {}
            for ev in valid:
                by_pair.setdefault(ev["pair_id"], []).append(ev)
            complete_test: list[str] = []
            dropped: set[str] = set()
            for pid, evs in by_pair.items():
                pair = self._pairs[pid]
                if pair.split != "test" or len(evs) != self.config.test_annotations:
                    continue
                complete_test.append(pid)
                if len({ev["label"] for ev in evs}) == len(evs):
                    dropped.add(pid)
            kept = [ev for ev in valid if ev["pair_id"] not in dropped]
            lines = []
            split_stats: dict[str, dict[str, int]] = {}
            for ev in kept:
                pair = self._pairs[ev["pair_id"]]
                ann = PairAnnotation(
                    word=pair.word, w1=pair.w1, w2=pair.w2, label=ev["label"],
                    annotator_id=ev["annotator"], split=pair.split,
                    phi1=pair.phi1, phi2=pair.phi2, pair_id=pair.pair_id)
                lines.append(json.dumps(ann.to_dict(), ensure_ascii=False))
                s = split_stats.setdefault(pair.split, {"labels": 0, "pairs": 0})
                s["labels"] += 1
            for split, s in split_stats.items():
                s["pairs"] = len({ev["pair_id"] for ev in kept
                                  if self._pairs[ev["pair_id"]].split == split})
            agreement = {"all3": 0.0, "two_of3": 0.0, "none": 0.0}
            if complete_test:
                anns = []
                for pid in complete_test:
                    pair = self._pairs[pid]
                    for ev in by_pair[pid]:
                        anns.append(PairAnnotation(
                            word=pair.word, w1=pair.w1, w2=pair.w2,
                            label=ev["label"], annotator_id=ev["annotator"],
                            split="test", phi1=pair.phi1, phi2=pair.phi2,
                            pair_id=pid))
                report = agreement_stats(anns)
                agreement = {"all3": report.frac_all3,
                             "two_of3": report.frac_2of3,
                             "none": report.frac_none}
            stats = {
                "labels_exported": len(kept),
                "labels_voided": voided,
                "gold_labels": gold_count,
                "pairs_dropped_disagreement": len(dropped),
                "rounds": self.round_index,
                "splits": split_stats,
                "agreement": agreement,
                "annotators": {
                    a.id: a.snapshot().to_dict()
                    for a in sorted(self._annotators.values(), key=lambda x: x.id)
                },
            }
            jsonl = "\n".join(lines) + "\n" if lines else ""
            return ExportResult(annotations_jsonl=jsonl, stats=stats)
