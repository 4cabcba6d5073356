"""Tests for the legibility scorer: features, losses, models, training.

Loss identities (ln 2 at the decision boundary, naive-formula agreement)
are asserted at 1e-12 or tighter. Analytic gradients are checked against
central finite differences with a 1e-4 relative-error bound.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from legit.dataset import BL, L1, L2, NL
from legit.errors import FormatError, NonFiniteLoss, UnknownCodepoint
from legit.index import EmbeddingMatrix
from legit.scorer import (
    BASE_FEATURE_NAMES,
    AdamW,
    FeatureExtractor,
    LegibilityScorer,
    TrainConfig,
    TrainExample,
    dloss_classify,
    dloss_contrastive,
    dloss_multitask,
    evaluate_loss,
    grad_check,
    loss_classify,
    loss_contrastive,
    loss_multitask,
    sigmoid,
    softplus,
    train,
)

LN2 = math.log(2.0)


def make_example(rng: np.random.Generator, dim: int, label: str) -> TrainExample:
    return TrainExample(f1=rng.normal(size=dim), f2=rng.normal(size=dim), label=label)


class TestLossPrimitives:
    def test_softplus_at_zero(self) -> None:
        assert softplus(0.0) == pytest.approx(LN2, abs=1e-15)

    def test_softplus_matches_naive_in_safe_range(self) -> None:
        for x in np.linspace(-30, 30, 121):
            assert softplus(float(x)) == pytest.approx(
                math.log(1 + math.exp(x)), rel=1e-12)

    def test_softplus_stable_at_extremes(self) -> None:
        assert softplus(1000.0) == 1000.0
        assert softplus(-1000.0) == 0.0

    def test_sigmoid_stable_and_symmetric(self) -> None:
        assert sigmoid(0.0) == 0.5
        assert sigmoid(1000.0) == 1.0
        assert sigmoid(-1000.0) == pytest.approx(0.0, abs=1e-300)
        for x in (-5.0, -0.3, 2.0):
            assert sigmoid(x) + sigmoid(-x) == pytest.approx(1.0, abs=1e-15)


class TestClassifyLoss:
    def test_ln2_at_boundary(self) -> None:
        assert loss_classify(0.0, 1) == pytest.approx(LN2, abs=1e-15)
        assert loss_classify(0.0, 0) == pytest.approx(LN2, abs=1e-15)

    def test_hand_value(self) -> None:
        assert loss_classify(-1.0, 1) == pytest.approx(math.log1p(math.e), abs=1e-15)

    def test_matches_naive_formula(self) -> None:
        # The naive formula is only well conditioned for moderate scores;
        # beyond that the stable version is the more accurate of the two.
        rng = np.random.default_rng(0)
        for _ in range(200):
            s = float(rng.uniform(-6, 6))
            y = int(rng.integers(2))
            naive = -(y * math.log(sigmoid(s)) + (1 - y) * math.log(1 - sigmoid(s)))
            assert loss_classify(s, y) == pytest.approx(naive, abs=1e-12)

    def test_extreme_scores_stay_finite(self) -> None:
        assert loss_classify(1000.0, 1) == 0.0
        assert loss_classify(-1000.0, 1) == 1000.0

    def test_derivative_matches_finite_difference(self) -> None:
        h = 1e-6
        for s in (-3.0, -0.2, 0.0, 1.7):
            for y in (0, 1):
                numeric = (loss_classify(s + h, y) - loss_classify(s - h, y)) / (2 * h)
                assert dloss_classify(s, y) == pytest.approx(numeric, abs=1e-8)


class TestContrastiveLoss:
    def test_ln2_at_equal_scores(self) -> None:
        assert loss_contrastive(0.7, 0.7, 0) == pytest.approx(LN2, abs=1e-15)
        assert loss_contrastive(-2.0, -2.0, 1) == pytest.approx(LN2, abs=1e-15)

    def test_symmetric_under_joint_swap(self) -> None:
        rng = np.random.default_rng(1)
        for _ in range(100):
            s1, s2 = rng.normal(scale=3, size=2)
            assert loss_contrastive(s1, s2, 0) == pytest.approx(
                loss_contrastive(s2, s1, 1), abs=1e-15)

    def test_decreases_as_preferred_score_grows(self) -> None:
        losses = [loss_contrastive(s1, 0.0, 0) for s1 in (-1.0, 0.0, 1.0, 2.0)]
        assert losses == sorted(losses, reverse=True)

    def test_derivative_matches_finite_difference(self) -> None:
        h = 1e-6
        for s1, s2, y in ((-1.0, 0.5, 0), (2.0, 2.0, 1), (0.3, -0.7, 0)):
            d1, d2 = dloss_contrastive(s1, s2, y)
            n1 = (loss_contrastive(s1 + h, s2, y)
                  - loss_contrastive(s1 - h, s2, y)) / (2 * h)
            n2 = (loss_contrastive(s1, s2 + h, y)
                  - loss_contrastive(s1, s2 - h, y)) / (2 * h)
            assert d1 == pytest.approx(n1, abs=1e-8)
            assert d2 == pytest.approx(n2, abs=1e-8)


class TestMultitaskLoss:
    def test_label_compositions(self) -> None:
        s1, s2 = 0.8, -0.4
        assert loss_multitask(s1, s2, L1) == pytest.approx(
            loss_classify(s1, 1) + loss_contrastive(s1, s2, 0), abs=1e-15)
        assert loss_multitask(s1, s2, L2) == pytest.approx(
            loss_classify(s2, 1) + loss_contrastive(s1, s2, 1), abs=1e-15)
        assert loss_multitask(s1, s2, BL) == pytest.approx(
            loss_classify(s1, 1) + loss_classify(s2, 1), abs=1e-15)
        assert loss_multitask(s1, s2, NL) == pytest.approx(
            loss_classify(s1, 0) + loss_classify(s2, 0), abs=1e-15)

    def test_both_labels_ignore_ranking(self) -> None:
        assert loss_multitask(1.0, -2.0, BL) == pytest.approx(
            loss_multitask(-2.0, 1.0, BL), abs=1e-15)
        assert loss_multitask(1.0, -2.0, NL) == pytest.approx(
            loss_multitask(-2.0, 1.0, NL), abs=1e-15)

    def test_l1_masks_second_word_classification(self) -> None:
        # Varying s2 must only move the ranking term.
        for s2 in (-3.0, 0.0, 2.0):
            residual = loss_multitask(0.5, s2, L1) - loss_contrastive(0.5, s2, 0)
            assert residual == pytest.approx(loss_classify(0.5, 1), abs=1e-15)

    def test_invalid_label_rejected(self) -> None:
        with pytest.raises(ValueError):
            loss_multitask(0.0, 0.0, "XX")
        with pytest.raises(ValueError):
            dloss_multitask(0.0, 0.0, "XX")

    def test_gradients_respect_masking(self) -> None:
        d1, d2 = dloss_multitask(0.3, -0.9, BL)
        assert d1 == pytest.approx(dloss_classify(0.3, 1), abs=1e-15)
        assert d2 == pytest.approx(dloss_classify(-0.9, 1), abs=1e-15)
        d1, d2 = dloss_multitask(0.3, -0.9, NL)
        assert d1 == pytest.approx(dloss_classify(0.3, 0), abs=1e-15)


class TestFeatureExtractor:
    def test_dim_and_names(self, matrix, table) -> None:
        ex = FeatureExtractor(matrix, table)
        assert ex.dim == len(BASE_FEATURE_NAMES) == 8
        assert ex.feature_names() == BASE_FEATURE_NAMES

    def test_identity_perturbation(self, matrix, table) -> None:
        f = FeatureExtractor(matrix, table)("abc", "abc")
        expected = np.zeros(8)
        expected[4] = 3 / 14.0
        np.testing.assert_allclose(f, expected, atol=0)

    def test_single_replacement_hand_check(self, matrix, table) -> None:
        ex = FeatureExtractor(matrix, table)
        f = ex.extract("ab", "cb")
        d = matrix.distance(ord("a"), ord("c"))
        assert f[0] == pytest.approx(d / 2, abs=1e-15)
        assert f[1] == pytest.approx(d, abs=1e-15)
        assert f[2] == pytest.approx(d, abs=1e-15)
        assert f[3] == 0.5
        assert f[4] == pytest.approx(2 / 14.0, abs=1e-15)
        assert f[5] == 0.0  # only position 0 replaced
        assert f[6] == 0.0
        expected_rank1 = float(table.kth_neighbor(ord("a"), 1) == ord("c"))
        assert f[7] == expected_rank1

    def test_full_replacement_fraction(self, matrix, table) -> None:
        f = FeatureExtractor(matrix, table)("ab", "cd")
        assert f[3] == 1.0
        assert f[5] == 0.5  # positions 0 and 1 normalized by length-1

    def test_position_stats_on_longer_word(self, matrix, table) -> None:
        f = FeatureExtractor(matrix, table)("abcde", "abcdX")
        assert f[5] == 1.0  # last position only
        assert f[6] == 0.0

    def test_rejects_length_mismatch_and_empty(self, matrix, table) -> None:
        ex = FeatureExtractor(matrix, table)
        with pytest.raises(ValueError):
            ex.extract("ab", "abc")
        with pytest.raises(ValueError):
            ex.extract("", "")

    def test_rejects_unknown_codepoint(self, matrix, table) -> None:
        with pytest.raises(UnknownCodepoint):
            FeatureExtractor(matrix, table).extract("ab", "a\U0001f600")

    def test_external_embeddings_append_features(self, matrix, table) -> None:
        cps = tuple(ord(c) for c in "abcd")
        rng = np.random.default_rng(5)
        ext = {
            "m2": EmbeddingMatrix("m2", 3, cps,
                                  rng.random((4, 3)).astype(np.float32) + 0.1),
            "m1": EmbeddingMatrix("m1", 3, cps,
                                  rng.random((4, 3)).astype(np.float32) + 0.1),
        }
        fx = FeatureExtractor(matrix, table, external=ext)
        assert fx.dim == 10
        assert fx.feature_names()[8:] == ("ext_m1_dist_mean", "ext_m2_dist_mean")
        assert fx.config() == {"external": ["m1", "m2"], "dim": 10}
        f = fx.extract("ab", "cb")
        assert f[8] == pytest.approx(ext["m1"].distance(ord("a"), ord("c")) / 2)
        assert f[9] == pytest.approx(ext["m2"].distance(ord("a"), ord("c")) / 2)


class TestModels:
    def test_linear_zero_init_scores_zero(self) -> None:
        model = LegibilityScorer.linear(8)
        assert model.score_features(np.ones(8)) == 0.0
        assert model.dim == 8

    def test_linear_score_is_affine(self) -> None:
        model = LegibilityScorer.linear(3)
        model.set_params({"w": np.array([1.0, -2.0, 0.5]), "b": np.array([0.25])})
        f = np.array([2.0, 1.0, 4.0])
        assert model.score_features(f) == pytest.approx(2 - 2 + 2 + 0.25, abs=1e-15)

    def test_mlp_init_deterministic_by_seed(self) -> None:
        a = LegibilityScorer.mlp(8, hidden=4, seed=3)
        b = LegibilityScorer.mlp(8, hidden=4, seed=3)
        c = LegibilityScorer.mlp(8, hidden=4, seed=4)
        for k in a.params:
            np.testing.assert_array_equal(a.params[k], b.params[k])
        assert any(not np.array_equal(a.params[k], c.params[k]) for k in a.params)
        assert a.dim == 8

    def test_invalid_kind_and_dropout_rejected(self) -> None:
        with pytest.raises(ValueError):
            LegibilityScorer("cnn", {})
        with pytest.raises(ValueError):
            LegibilityScorer.mlp(8, dropout=1.0)

    def test_eval_mode_is_deterministic(self) -> None:
        model = LegibilityScorer.mlp(8, dropout=0.5, seed=0)
        f = np.linspace(-1, 1, 8)
        assert model.score_features(f) == model.score_features(f)

    def test_dropout_mask_statistics(self) -> None:
        model = LegibilityScorer.mlp(8, hidden=1000, dropout=0.3, seed=0)
        mask = model._dropout_mask(np.random.default_rng(0))
        keep = 1.0 - 0.3
        assert set(np.unique(mask)) <= {0.0, 1.0 / keep}
        assert abs((mask > 0).mean() - keep) < 0.05

    def test_classification_threshold_is_strict(self, matrix, table) -> None:
        fx = FeatureExtractor(matrix, table)
        model = LegibilityScorer.linear(fx.dim, extractor=fx)
        assert model.score("ab", "cb") == 0.0
        assert model.classify("ab", "cb") is False

    def test_rank_tie_prefers_first(self, matrix, table) -> None:
        fx = FeatureExtractor(matrix, table)
        model = LegibilityScorer.linear(fx.dim, extractor=fx)
        assert model.rank("ab", "cb", "db") == 1

    def test_scoring_without_extractor_rejected(self) -> None:
        with pytest.raises(ValueError):
            LegibilityScorer.linear(8).score("ab", "cb")


class TestSerialization:
    def test_roundtrip_preserves_params_exactly(self, tmp_path) -> None:
        model = LegibilityScorer.mlp(8, hidden=5, dropout=0.2, seed=9,
                                     feature_config={"external": [], "dim": 8})
        path = tmp_path / "model.json"
        model.save(path)
        loaded = LegibilityScorer.load(path)
        assert loaded.kind == "mlp"
        assert loaded.dropout == 0.2
        assert loaded.feature_config == {"external": [], "dim": 8}
        for k in model.params:
            np.testing.assert_array_equal(loaded.params[k], model.params[k])
        f = np.linspace(-2, 2, 8)
        assert loaded.score_features(f) == model.score_features(f)

    def test_rejects_bad_json(self) -> None:
        with pytest.raises(FormatError):
            LegibilityScorer.from_json("{not json")

    def test_rejects_wrong_version(self) -> None:
        with pytest.raises(FormatError):
            LegibilityScorer.from_json(
                '{"version": 99, "kind": "linear", "params": {}}')

    def test_rejects_unknown_kind(self) -> None:
        with pytest.raises(FormatError):
            LegibilityScorer.from_json(
                '{"version": 1, "kind": "tree", "params": {}}')


class TestGradCheck:
    @pytest.mark.parametrize("label", [L1, L2, BL, NL])
    def test_linear_gradients(self, label: str) -> None:
        rng = np.random.default_rng(17)
        model = LegibilityScorer.linear(8)
        model.set_params({"w": rng.normal(size=8), "b": rng.normal(size=1)})
        err = grad_check(model, make_example(rng, 8, label))
        assert err < 1e-4

    @pytest.mark.parametrize("label", [L1, L2, BL, NL])
    def test_mlp_gradients(self, label: str) -> None:
        rng = np.random.default_rng(23)
        model = LegibilityScorer.mlp(8, hidden=6, dropout=0.0, seed=2)
        err = grad_check(model, make_example(rng, 8, label))
        assert err < 1e-4


class TestAdamW:
    def test_first_step_is_signed_learning_rate(self) -> None:
        # With zero moment state, m_hat = g and v_hat = g*g, so the first
        # update is lr * g / (|g| + eps) regardless of gradient scale.
        params = {"w": np.array([1.0, -2.0])}
        opt = AdamW(params, lr=0.1)
        opt.step({"w": np.array([0.5, -400.0])})
        np.testing.assert_allclose(params["w"], [0.9, -1.9], atol=1e-7)

    def test_zero_lr_is_noop(self) -> None:
        params = {"w": np.array([3.0])}
        AdamW(params, lr=0.0, weight_decay=0.5).step({"w": np.array([1.0])})
        assert params["w"][0] == 3.0

    def test_decoupled_weight_decay(self) -> None:
        params = {"w": np.array([2.0])}
        AdamW(params, lr=0.1, weight_decay=0.5).step({"w": np.array([0.0])})
        assert params["w"][0] == pytest.approx(2.0 * (1 - 0.1 * 0.5), abs=1e-15)


def synthetic_examples(n: int, dim: int, seed: int) -> list[TrainExample]:
    """Pairs whose label is decided by the first feature, linearly separable."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        f1 = rng.normal(size=dim)
        f2 = rng.normal(size=dim)
        leg1, leg2 = f1[0] > 0, f2[0] > 0
        if leg1 and leg2:
            label = BL
        elif not leg1 and not leg2:
            label = NL
        elif leg1:
            label = L1
        else:
            label = L2
        out.append(TrainExample(f1=f1, f2=f2, label=label))
    return out


class TestTraining:
    def test_loss_decreases_on_separable_task(self) -> None:
        train_set = synthetic_examples(200, 4, seed=1)
        val_set = synthetic_examples(60, 4, seed=2)
        model = LegibilityScorer.linear(4)
        cfg = TrainConfig(lr=0.05, batch_size=32, max_epochs=15, patience=15, seed=0)
        model, history = train(model, train_set, val_set, cfg)
        assert history[-1]["val_loss"] < history[0]["val_loss"]
        assert history[0]["train_loss"] > 1.0  # ~2 ln 2 at zero init

    def test_training_is_bit_deterministic(self) -> None:
        train_set = synthetic_examples(80, 4, seed=3)
        val_set = synthetic_examples(30, 4, seed=4)
        cfg = TrainConfig(lr=0.02, batch_size=16, max_epochs=6, patience=6,
                          seed=5, dropout=0.2)
        m1, h1 = train(LegibilityScorer.mlp(4, hidden=8, seed=7), train_set,
                       val_set, cfg)
        m2, h2 = train(LegibilityScorer.mlp(4, hidden=8, seed=7), train_set,
                       val_set, cfg)
        assert h1 == h2
        for k in m1.params:
            np.testing.assert_array_equal(m1.params[k], m2.params[k])

    def test_restores_best_validation_epoch(self) -> None:
        train_set = synthetic_examples(100, 4, seed=8)
        val_set = synthetic_examples(40, 4, seed=9)
        model = LegibilityScorer.linear(4)
        cfg = TrainConfig(lr=0.3, batch_size=16, max_epochs=25, patience=3, seed=0)
        model, history = train(model, train_set, val_set, cfg)
        best = min(h["val_loss"] for h in history)
        assert evaluate_loss(model, val_set) == pytest.approx(best, abs=1e-12)

    def test_zero_lr_leaves_params_unchanged(self) -> None:
        train_set = synthetic_examples(40, 4, seed=10)
        val_set = synthetic_examples(20, 4, seed=11)
        model = LegibilityScorer.linear(4)
        cfg = TrainConfig(lr=0.0, batch_size=8, max_epochs=2, patience=2, seed=0)
        model, _ = train(model, train_set, val_set, cfg)
        np.testing.assert_array_equal(model.params["w"], np.zeros(4))

    def test_non_finite_loss_carries_diagnostics(self) -> None:
        bad = [TrainExample(f1=np.array([np.nan] * 4), f2=np.zeros(4), label=BL)]
        val = synthetic_examples(5, 4, seed=12)
        with pytest.raises(NonFiniteLoss) as exc:
            train(LegibilityScorer.linear(4), bad, val,
                  TrainConfig(max_epochs=1, patience=1))
        assert set(exc.value.diagnostics) >= {"epoch", "batch_start", "param_norms"}

    def test_empty_sets_rejected(self) -> None:
        with pytest.raises(ValueError):
            train(LegibilityScorer.linear(4), [], synthetic_examples(5, 4, 0),
                  TrainConfig())
        with pytest.raises(ValueError):
            evaluate_loss(LegibilityScorer.linear(4), [])

    def test_linear_fits_separable_task_to_high_accuracy(self) -> None:
        train_set = synthetic_examples(300, 4, seed=13)
        model = LegibilityScorer.linear(4)
        cfg = TrainConfig(lr=0.1, batch_size=32, max_epochs=30, patience=30, seed=0)
        model, _ = train(model, train_set, synthetic_examples(60, 4, seed=14), cfg)
        # Check sign agreement on derivable single-word labels.
        correct = total = 0
        for ex in synthetic_examples(100, 4, seed=15):
            for f, known, target in ((ex.f1, ex.label in (L1, BL, NL),
                                      ex.label in (L1, BL)),
                                     (ex.f2, ex.label in (L2, BL, NL),
                                      ex.label in (L2, BL))):
                if known:
                    total += 1
                    correct += (model.score_features(f) > 0) == target
        assert correct / total > 0.9
