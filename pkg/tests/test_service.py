"""Tests for the event-sourced annotation service and its HTTP front end."""

from __future__ import annotations

import itertools
import json
import math
import urllib.error
import urllib.request

import pytest

from legit.dataset import derive_classification, derive_ranking, load_annotations
from legit.errors import (
    AlreadyLabeled,
    Disqualified,
    FormatError,
    NoOpenRound,
    NotReserved,
    RoundOpen,
)
from legit.perturb import ParamPrior
from legit.server import serve_annotation
from legit.service import (
    AnnotationService,
    AnnotatorState,
    GoldPair,
    ServiceConfig,
    load_gold_pairs,
)


def make_vocab(count: int) -> list[str]:
    words = ["".join(p) for p in itertools.product("abcdeghk", repeat=4)]
    assert len(words) >= count
    return words[:count]


GOLD = [GoldPair(word="gold", w1="gold", w2="gѳΙδ", label="L1"),
        GoldPair(word="mark", w1="mɑrk", w2="mɑrk", label="BL"),
        GoldPair(word="pine", w1="ƥΐπё", w2="ƥΐπё", label="NL")]


class FakeClock:
    def __init__(self, start: float = 1000.0):
        self.now = start

    def __call__(self) -> float:
        return self.now


def make_service(tables, vocab_size=60, clock=None, gold=None,
                 **config_kw) -> AnnotationService:
    defaults = dict(words_per_round=20, gold_rate=0.0)
    defaults.update(config_kw)
    return AnnotationService(
        make_vocab(vocab_size), tables, config=ServiceConfig(**defaults),
        gold=gold if gold is not None else GOLD, seed=11,
        clock=clock or FakeClock())


def label_everything(svc: AnnotationService, bot_ids, answer="BL",
                     gold_answer=None):
    """Scripted bots label every pair they are served until the round closes."""
    tokens = {b: svc.create_session(b) for b in bot_ids}
    for _ in range(200):
        if svc.round_closed:
            return
        progress = False
        for bot, token in tokens.items():
            if svc.annotator_state(bot).status != "active":
                continue
            for item in svc.get_batch(token):
                pid = item["pair_id"]
                is_gold = pid in svc._gold
                lbl = gold_answer(svc._gold[pid]) if is_gold and gold_answer else answer
                try:
                    svc.submit_label(token, pid, lbl)
                    progress = True
                except (AlreadyLabeled, Disqualified):
                    pass
        if not progress:
            return
    raise AssertionError("bots did not converge")


class TestGoldAsset:
    def test_bundled_gold_pairs(self):
        pairs = load_gold_pairs()
        assert len(pairs) == 40
        for g in pairs:
            assert g.label in ("L1", "L2", "BL", "NL")
            assert len(g.w1) == len(g.word) == len(g.w2)

    def test_bad_label_rejected(self):
        with pytest.raises(ValueError):
            GoldPair(word="a", w1="a", w2="a", label="XX")

    def test_missing_file(self, tmp_path):
        empty = tmp_path / "gold.jsonl"
        empty.write_text("")
        with pytest.raises(FormatError):
            load_gold_pairs(empty)


class TestSessions:
    def test_token_issued_and_idempotent(self, tables):
        svc = make_service(tables)
        token = svc.create_session("alice")
        assert isinstance(token, str) and len(token) == 32
        assert svc.create_session("alice") == token
        assert svc.annotator_state("alice").status == "active"

    def test_distinct_annotators_distinct_tokens(self, tables):
        svc = make_service(tables)
        assert svc.create_session("a") != svc.create_session("b")

    def test_empty_id_rejected(self, tables):
        svc = make_service(tables)
        with pytest.raises(ValueError):
            svc.create_session("")

    def test_unknown_token_rejected(self, tables):
        svc = make_service(tables)
        svc.advance_round()
        with pytest.raises(ValueError):
            svc.get_batch("bogus")


class TestRounds:
    def test_batch_before_first_round(self, tables):
        svc = make_service(tables)
        token = svc.create_session("alice")
        with pytest.raises(NoOpenRound):
            svc.get_batch(token)

    def test_first_round_uses_configured_priors(self, tables):
        prior1 = ParamPrior(mu_k=10, var_k=4, mu_n=0.3, var_n=0.1)
        prior2 = ParamPrior(mu_k=10, var_k=4, mu_n=0.7, var_n=0.1)
        svc = make_service(tables, prior1=prior1, prior2=prior2)
        info = svc.advance_round()
        assert info["index"] == 1
        assert info["pairs"] == 20
        assert info["prior1"] == prior1.to_dict()
        assert info["prior2"] == prior2.to_dict()

    def test_advance_while_open_rejected(self, tables):
        svc = make_service(tables)
        svc.advance_round()
        with pytest.raises(RoundOpen):
            svc.advance_round()

    def test_adaptive_midpoint_contraction(self, tables):
        prior1 = ParamPrior(mu_k=25, var_k=10, mu_n=0.3, var_n=0.2)
        prior2 = ParamPrior(mu_k=25, var_k=10, mu_n=0.7, var_n=0.2)
        svc = make_service(tables, prior1=prior1, prior2=prior2)
        svc.advance_round()
        info = svc.advance_round(force=True)
        assert info["index"] == 2
        assert info["prior1"]["mu_n"] == pytest.approx(0.4)
        assert info["prior2"]["mu_n"] == pytest.approx(0.6)
        assert info["prior1"]["var_n"] == pytest.approx(0.2 * 0.7)

    def test_three_waves(self, tables):
        svc = make_service(tables, words_per_round=5)
        indexes = [svc.advance_round(force=True)["index"] for _ in range(3)]
        assert indexes == [1, 2, 3]

    def test_rounds_consume_distinct_words(self, tables):
        svc = make_service(tables, words_per_round=10)
        svc.advance_round()
        first = {p.word for p in svc._pairs.values()}
        svc.advance_round(force=True)
        second = {p.word for p in svc._pairs.values() if p.round_index == 2}
        assert len(first) == 10 and len(second) == 10
        assert not first & second

    def test_default_round_size_is_a_third(self, tables):
        svc = make_service(tables, vocab_size=60, words_per_round=None)
        info = svc.advance_round()
        assert info["pairs"] == math.ceil(60 / 3)

    def test_vocabulary_exhaustion(self, tables):
        svc = make_service(tables, vocab_size=10, words_per_round=10)
        svc.advance_round()
        with pytest.raises(ValueError):
            svc.advance_round(force=True)

    def test_pairs_inherit_word_split(self, tables):
        svc = make_service(tables)
        svc.advance_round()
        for pair in svc._pairs.values():
            assert pair.split == svc._split_of[pair.word]
            assert len(pair.w1) == len(pair.word) == len(pair.w2)


class TestBatches:
    def test_pool_of_100_reserves_20(self, tables):
        svc = make_service(tables, vocab_size=150, words_per_round=100)
        svc.advance_round()
        token = svc.create_session("alice")
        batch = svc.get_batch(token)
        assert len(batch) == 20
        reserved = sum(len(v) for v in svc._reservations.values())
        assert reserved == 20

    def test_pool_of_7_gives_7(self, tables):
        svc = make_service(tables, vocab_size=10, words_per_round=7)
        svc.advance_round()
        batch = svc.get_batch(svc.create_session("alice"))
        assert len(batch) == 7

    def test_descriptors_expose_only_images(self, tables):
        svc = make_service(tables)
        svc.advance_round()
        for item in svc.get_batch(svc.create_session("alice")):
            assert set(item) == {"pair_id", "img1", "img2"}
            assert item["img1"] == f"/img/{item['pair_id']}/1.png"
            assert item["img2"] == f"/img/{item['pair_id']}/2.png"

    def test_trainval_pair_not_shared_between_annotators(self, tables):
        svc = make_service(tables, vocab_size=40, words_per_round=20)
        svc.advance_round()
        a = set(p["pair_id"] for p in svc.get_batch(svc.create_session("a")))
        b = set(p["pair_id"] for p in svc.get_batch(svc.create_session("b")))
        for pid in a & b:
            assert svc._pairs[pid].split == "test"

    def test_test_pair_capped_at_three_reservations(self, tables):
        svc = make_service(tables, vocab_size=40, words_per_round=20)
        svc.advance_round()
        test_ids = {pid for pid, p in svc._pairs.items() if p.split == "test"}
        assert test_ids
        holders: dict[str, int] = {pid: 0 for pid in test_ids}
        for bot in ("a", "b", "c", "d", "e"):
            for item in svc.get_batch(svc.create_session(bot)):
                if item["pair_id"] in holders:
                    holders[item["pair_id"]] += 1
        assert all(count <= 3 for count in holders.values())
        assert max(holders.values()) == 3

    def test_reservation_ttl_expires(self, tables):
        clock = FakeClock()
        svc = make_service(tables, vocab_size=30, words_per_round=5,
                           clock=clock, reservation_ttl=900.0)
        svc.advance_round()
        first = svc.get_batch(svc.create_session("a"))
        assert len(first) == 5
        token_b = svc.create_session("b")
        blocked = [p["pair_id"] for p in svc.get_batch(token_b)
                   if svc._pairs[p["pair_id"]].split != "test"]
        assert blocked == []
        clock.now += 901.0
        after = {p["pair_id"] for p in svc.get_batch(token_b)}
        assert {p["pair_id"] for p in first} <= after

    def test_own_reservation_renewable(self, tables):
        svc = make_service(tables, vocab_size=30, words_per_round=5)
        svc.advance_round()
        token = svc.create_session("a")
        first = {p["pair_id"] for p in svc.get_batch(token)}
        again = {p["pair_id"] for p in svc.get_batch(token)}
        assert first == again

    def test_exhausted_pool_returns_empty(self, tables):
        svc = make_service(tables, vocab_size=30, words_per_round=5)
        svc.advance_round()
        svc.get_batch(svc.create_session("a"))
        token_b = svc.create_session("b")
        leftovers = [p for p in svc.get_batch(token_b)
                     if svc._pairs[p["pair_id"]].split != "test"]
        assert leftovers == []

    def test_closed_round_raises(self, tables):
        svc = make_service(tables, vocab_size=10, words_per_round=3)
        svc.advance_round()
        label_everything(svc, ["a", "b", "c"])
        with pytest.raises(NoOpenRound):
            svc.get_batch(svc.create_session("d"))

    def test_gold_injection_rate(self, tables):
        """Monte-Carlo on the per-slot injection sampler: over 200 batches of
        20 slots at rate 1/20, served gold items follow Binomial(4000, 0.05);
        the [140, 260] window is past 4 sigma on both sides."""
        clock = FakeClock()
        svc = make_service(tables, vocab_size=30, words_per_round=20,
                           clock=clock, gold=load_gold_pairs(),
                           gold_rate=1.0 / 20.0)
        svc.advance_round()
        token = svc.create_session("collector")
        total_gold = 0
        for _ in range(200):
            batch = svc.get_batch(token)
            total_gold += sum(1 for p in batch if p["pair_id"] in svc._gold)
            assert len(batch) >= 20
            clock.now += 1000.0  # expire reservations so the pool refills
        assert 140 <= total_gold <= 260
        assert total_gold > 0


class TestLabels:
    def test_submit_and_ack(self, tables):
        svc = make_service(tables)
        svc.advance_round()
        token = svc.create_session("alice")
        pid = svc.get_batch(token)[0]["pair_id"]
        ack = svc.submit_label(token, pid, "L1")
        assert ack["ok"] is True
        assert ack["annotator"]["completed"] == 1

    def test_double_label_rejected(self, tables):
        svc = make_service(tables)
        svc.advance_round()
        token = svc.create_session("alice")
        pid = svc.get_batch(token)[0]["pair_id"]
        svc.submit_label(token, pid, "L1")
        with pytest.raises(AlreadyLabeled):
            svc.submit_label(token, pid, "L2")

    def test_invalid_label_rejected(self, tables):
        svc = make_service(tables)
        svc.advance_round()
        token = svc.create_session("alice")
        pid = svc.get_batch(token)[0]["pair_id"]
        with pytest.raises(ValueError):
            svc.submit_label(token, pid, "MAYBE")

    def test_unreserved_pair_rejected(self, tables):
        svc = make_service(tables)
        svc.advance_round()
        token = svc.create_session("alice")
        unreserved = next(iter(svc._pairs))
        with pytest.raises(NotReserved):
            svc.submit_label(token, unreserved, "L1")
        with pytest.raises(NotReserved):
            svc.submit_label(token, "no-such-pair", "L1")

    def test_expired_reservation_rejected(self, tables):
        clock = FakeClock()
        svc = make_service(tables, clock=clock, reservation_ttl=900.0)
        svc.advance_round()
        token = svc.create_session("alice")
        pid = svc.get_batch(token)[0]["pair_id"]
        clock.now += 901.0
        with pytest.raises(NotReserved):
            svc.submit_label(token, pid, "L1")


def disqualify(svc: AnnotationService, bot: str, correct: int, wrong: int) -> str:
    """Feed a bot enough gold answers to reach the given gold tally."""
    token = svc.create_session(bot)
    answered = {"right": 0, "wrong": 0}
    for _ in range(400):
        if answered["right"] >= correct and answered["wrong"] >= wrong:
            break
        for item in svc.get_batch(token):
            gold = svc._gold.get(item["pair_id"])
            if gold is None:
                continue
            if answered["right"] < correct:
                svc.submit_label(token, item["pair_id"], gold.label)
                answered["right"] += 1
            elif answered["wrong"] < wrong:
                wrong_label = "NL" if gold.label != "NL" else "BL"
                svc.submit_label(token, item["pair_id"], wrong_label)
                answered["wrong"] += 1
            if svc.annotator_state(bot).status == "disqualified":
                return token
    return token


class TestGoldScoring:
    def make_gold_service(self, tables, **kw):
        return make_service(tables, vocab_size=60, words_per_round=30,
                            gold=load_gold_pairs(), gold_rate=1.0, **kw)

    def test_disqualified_at_6_of_10(self, tables):
        svc = self.make_gold_service(tables)
        svc.advance_round()
        disqualify(svc, "weak", correct=6, wrong=4)
        state = svc.annotator_state("weak")
        assert state.gold_attempted == 10
        assert state.gold_correct == 6
        assert state.gold_accuracy == pytest.approx(0.6)
        assert state.status == "disqualified"

    def test_seven_of_ten_stays_active(self, tables):
        svc = self.make_gold_service(tables)
        svc.advance_round()
        disqualify(svc, "ok", correct=7, wrong=3)
        state = svc.annotator_state("ok")
        assert state.gold_attempted == 10
        assert state.status == "active"

    def test_no_disqualification_below_min_attempts(self, tables):
        svc = self.make_gold_service(tables)
        svc.advance_round()
        disqualify(svc, "new", correct=0, wrong=9)
        state = svc.annotator_state("new")
        assert state.gold_attempted == 9
        assert state.status == "active"

    def test_disqualification_locks_out(self, tables):
        svc = self.make_gold_service(tables)
        svc.advance_round()
        token = disqualify(svc, "weak", correct=0, wrong=10)
        with pytest.raises(Disqualified):
            svc.get_batch(token)
        with pytest.raises(Disqualified):
            svc.create_session("weak")
        pid = next(iter(svc._pairs))
        with pytest.raises(Disqualified):
            svc.submit_label(token, pid, "BL")

    def test_voided_labels_excluded_and_pairs_reopen(self, tables):
        svc = self.make_gold_service(tables)
        svc.advance_round()
        token = svc.create_session("weak")
        labeled_pool = []
        while svc.annotator_state("weak").status == "active":
            for item in svc.get_batch(token):
                gold = svc._gold.get(item["pair_id"])
                try:
                    if gold is None:
                        svc.submit_label(token, item["pair_id"], "BL")
                        labeled_pool.append(item["pair_id"])
                    else:
                        svc.submit_label(token, item["pair_id"],
                                         "NL" if gold.label != "NL" else "BL")
                except (AlreadyLabeled, Disqualified):
                    break
            else:
                continue
            break
        assert labeled_pool, "bot should have labeled pool pairs before removal"
        export = svc.export_dataset()
        assert export.annotations_jsonl == ""
        assert export.stats["labels_voided"] == len(labeled_pool)
        for pid in labeled_pool:
            assert not svc._pair_complete(pid)


class TestExport:
    def test_empty_export(self, tables):
        svc = make_service(tables)
        export = svc.export_dataset()
        assert export.annotations_jsonl == ""
        assert export.stats["labels_exported"] == 0
        assert export.stats["agreement"] == {"all3": 0.0, "two_of3": 0.0,
                                             "none": 0.0}

    def test_unanimous_bots(self, tables):
        svc = make_service(tables, vocab_size=30, words_per_round=12)
        svc.advance_round()
        label_everything(svc, ["a", "b", "c"], answer="BL")
        export = svc.export_dataset()
        assert export.stats["agreement"] == {"all3": 1.0, "two_of3": 0.0,
                                             "none": 0.0}
        assert export.stats["pairs_dropped_disagreement"] == 0

    def test_annotation_requirements_met(self, tables):
        svc = make_service(tables, vocab_size=30, words_per_round=12)
        svc.advance_round()
        label_everything(svc, ["a", "b", "c"], answer="BL")
        assert svc.round_closed
        counts: dict[str, set] = {}
        for ev in svc._labels:
            counts.setdefault(ev["pair_id"], set()).add(ev["annotator"])
        for pid, pair in svc._pairs.items():
            need = 3 if pair.split == "test" else 1
            assert len(counts[pid]) == need, (pid, pair.split)

    def test_three_way_disagreement_dropped(self, tables):
        svc = make_service(tables, vocab_size=30, words_per_round=12)
        svc.advance_round()
        test_pid = next(pid for pid, p in svc._pairs.items()
                        if p.split == "test")
        labels = iter(["L1", "L2", "BL"])
        tokens = {b: svc.create_session(b) for b in ("a", "b", "c")}
        for bot, token in tokens.items():
            while True:
                batch = svc.get_batch(token)
                if any(p["pair_id"] == test_pid for p in batch):
                    svc.submit_label(token, test_pid, next(labels))
                    break
        export = svc.export_dataset()
        assert export.stats["pairs_dropped_disagreement"] == 1
        for line in export.annotations_jsonl.splitlines():
            assert json.loads(line)["pair_id"] != test_pid

    def test_majority_pair_kept_with_all_labels(self, tables):
        svc = make_service(tables, vocab_size=30, words_per_round=12)
        svc.advance_round()
        test_pid = next(pid for pid, p in svc._pairs.items()
                        if p.split == "test")
        labels = iter(["L1", "L1", "L2"])
        for bot in ("a", "b", "c"):
            token = svc.create_session(bot)
            while True:
                batch = svc.get_batch(token)
                if any(p["pair_id"] == test_pid for p in batch):
                    svc.submit_label(token, test_pid, next(labels))
                    break
        export = svc.export_dataset()
        rows = [json.loads(line) for line in export.annotations_jsonl.splitlines()
                if json.loads(line)["pair_id"] == test_pid]
        assert [r["label"] for r in rows] == ["L1", "L1", "L2"]
        assert export.stats["agreement"]["two_of3"] == 1.0

    def test_gold_never_exported(self, tables):
        svc = make_service(tables, vocab_size=30, words_per_round=10,
                           gold=load_gold_pairs(), gold_rate=1.0)
        svc.advance_round()
        label_everything(svc, ["a", "b", "c"], answer="BL",
                         gold_answer=lambda g: g.label)
        export = svc.export_dataset()
        assert export.stats["gold_labels"] > 0
        gold_ids = set(svc._gold)
        for line in export.annotations_jsonl.splitlines():
            assert json.loads(line)["pair_id"] not in gold_ids

    def test_round_trip_into_dataset(self, tables, tmp_path):
        svc = make_service(tables, vocab_size=30, words_per_round=12)
        svc.advance_round()
        label_everything(svc, ["a", "b", "c"], answer="L1")
        export = svc.export_dataset()
        path = tmp_path / "export.jsonl"
        path.write_text(export.annotations_jsonl, encoding="utf-8")
        anns = load_annotations(path)
        assert len(anns) == export.stats["labels_exported"]
        assert derive_ranking(anns), "L1 labels must yield ranking examples"
        assert len(derive_classification(anns)) == len(anns)
        for a in anns:
            assert a.phi1 is not None and a.phi2 is not None


class TestReplay:
    def run_session(self, tables, tmp_path):
        clock = FakeClock()
        log = tmp_path / "events.jsonl"
        svc = AnnotationService(
            make_vocab(30), tables,
            config=ServiceConfig(words_per_round=12, gold_rate=0.2),
            gold=GOLD, seed=11, log_path=log, clock=clock)
        svc.advance_round()
        label_everything(svc, ["a", "b", "c"], answer="BL",
                         gold_answer=lambda g: g.label)
        return svc, log, clock

    def test_export_reproduced_byte_for_byte(self, tables, tmp_path):
        svc, log, clock = self.run_session(tables, tmp_path)
        original = svc.export_dataset()
        replica = AnnotationService.from_log(log, tables, clock=clock)
        replayed = replica.export_dataset()
        assert replayed.annotations_jsonl == original.annotations_jsonl
        assert replayed.stats_json == original.stats_json
        assert replayed.to_json() == original.to_json()

    def test_replay_from_event_list(self, tables, tmp_path):
        svc, log, clock = self.run_session(tables, tmp_path)
        replica = AnnotationService.from_events(svc.events, tables, clock=clock)
        assert replica.export_dataset().to_json() == svc.export_dataset().to_json()

    def test_replayed_service_continues_identically(self, tables, tmp_path):
        svc, log, clock = self.run_session(tables, tmp_path)
        replica = AnnotationService.from_log(log, tables, clock=clock)
        info_a = svc.advance_round()
        info_b = replica.advance_round()
        assert info_a == info_b
        pairs_a = [(p.pair_id, p.word, p.w1, p.w2) for p in svc._pairs.values()
                   if p.round_index == 2]
        pairs_b = [(p.pair_id, p.word, p.w1, p.w2) for p in replica._pairs.values()
                   if p.round_index == 2]
        assert pairs_a == pairs_b

    def test_corrupt_log_rejected(self, tables, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"event": "session"}\n', encoding="utf-8")
        with pytest.raises(FormatError):
            AnnotationService.from_log(bad, tables)
        empty = tmp_path / "empty.jsonl"
        empty.write_text("", encoding="utf-8")
        with pytest.raises(FormatError):
            AnnotationService.from_log(empty, tables)


@pytest.fixture(scope="module")
def live_server(tables, atlas):
    svc = AnnotationService(
        make_vocab(40), tables,
        config=ServiceConfig(words_per_round=15, gold_rate=0.0),
        gold=GOLD, seed=3)
    svc.advance_round()
    server = serve_annotation(svc, atlas, port=0)
    yield server
    server.stop()


def http_post(base: str, path: str, doc: dict) -> dict:
    req = urllib.request.Request(
        base + path, data=json.dumps(doc).encode("utf-8"),
        headers={"Content-Type": "application/json"}, method="POST")
    with urllib.request.urlopen(req, timeout=10) as resp:
        return json.loads(resp.read())


def http_get(base: str, path: str):
    return urllib.request.urlopen(base + path, timeout=10)


class TestHTTP:
    def test_full_annotation_flow(self, live_server):
        base = live_server.url
        session = http_post(base, "/session", {"annotator_id": "carol"})
        assert session["annotator"]["status"] == "active"
        token = session["token"]
        batch = json.loads(http_get(base, f"/batch?token={token}").read())["pairs"]
        assert batch
        png = http_get(base, batch[0]["img1"]).read()
        assert png[:8] == b"\x89PNG\r\n\x1a\n"
        png2 = http_get(base, batch[0]["img2"]).read()
        assert png2[:8] == b"\x89PNG\r\n\x1a\n"
        ack = http_post(base, "/label", {"token": token,
                                         "pair_id": batch[0]["pair_id"],
                                         "label": "BL"})
        assert ack["ok"] is True
        export = json.loads(http_get(base, "/admin/export").read())
        assert export["stats"]["labels_exported"] >= 1

    def test_error_statuses(self, live_server):
        base = live_server.url
        token = http_post(base, "/session", {"annotator_id": "carol"})["token"]
        with pytest.raises(urllib.error.HTTPError) as err:
            http_post(base, "/label", {"token": token, "pair_id": "nope",
                                       "label": "BL"})
        assert err.value.code == 409
        assert json.loads(err.value.read())["error"] == "NotReserved"
        with pytest.raises(urllib.error.HTTPError) as err:
            http_post(base, "/label", {"token": "bogus", "pair_id": "x",
                                       "label": "BL"})
        assert err.value.code == 400
        with pytest.raises(urllib.error.HTTPError) as err:
            http_post(base, "/admin/round/advance", {})
        assert err.value.code == 409
        assert json.loads(err.value.read())["error"] == "RoundOpen"
        with pytest.raises(urllib.error.HTTPError) as err:
            http_get(base, "/img/doesnotexist/1.png")
        assert err.value.code == 404
        with pytest.raises(urllib.error.HTTPError) as err:
            http_get(base, "/nope")
        assert err.value.code == 404

    def test_disqualified_maps_to_403(self, tables, atlas):
        svc = AnnotationService(
            make_vocab(40), tables,
            config=ServiceConfig(words_per_round=20, gold_rate=1.0),
            gold=load_gold_pairs(), seed=5)
        svc.advance_round()
        token = disqualify(svc, "weak", correct=0, wrong=10)
        with serve_annotation(svc, atlas, port=0) as server:
            with pytest.raises(urllib.error.HTTPError) as err:
                http_get(server.url, f"/batch?token={token}")
            assert err.value.code == 403
            assert json.loads(err.value.read())["error"] == "Disqualified"

    def test_cors_headers(self, live_server):
        base = live_server.url
        req = urllib.request.Request(base + "/batch", method="OPTIONS")
        with urllib.request.urlopen(req, timeout=10) as resp:
            assert resp.status == 204
            assert resp.headers["Access-Control-Allow-Origin"] == "*"
        with http_get(base, "/admin/export") as resp:
            assert resp.headers["Access-Control-Allow-Origin"] == "*"

    def test_bad_json_body(self, live_server):
        req = urllib.request.Request(
            live_server.url + "/session", data=b"not json{",
            headers={"Content-Type": "application/json"}, method="POST")
        with pytest.raises(urllib.error.HTTPError) as err:
            urllib.request.urlopen(req, timeout=10)
        assert err.value.code == 400
