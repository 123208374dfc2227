"""
训练循环、测试时纠正与评估测试
"""
import numpy as np
import pytest

from models.core import Assignment, ConfidenceGrid, ScoreVariant, SymbolPrior
from models.errors import ConfigurationError
from utils.alignment import AlignmentConfig, align
from utils.oracle import brute_force_cop
from utils.perception import GlyphConfig, SoftmaxModel, forward, gen_dataset, glyph_prototypes, grad_step
from utils.symmetry import symmetry_group
from utils.trainer import (
    EpochStats,
    TrainConfig,
    build_score_model,
    correct_prediction,
    evaluate,
    modal_share,
    predict_ttc,
    pseudo_label,
    symbol_accuracy,
    train,
)
from utils.verifiers import build_verifier
from tests.conftest import random_grid


def _oracle_model(k, glyph, sigma=None):
    """在无噪声字形上完全正确（或按 sigma 重新标号）的分类器"""
    prototypes = glyph_prototypes(k, glyph)
    sigma = list(range(k)) if sigma is None else sigma
    weights = np.zeros((k, glyph.feature_dim))
    for j in range(k):
        weights[sigma[j]] = 50.0 * prototypes[j]
    return SoftmaxModel(weights=weights, bias=np.zeros(k))


class TestMetrics:

    @pytest.mark.unit
    def test_symbol_accuracy(self):
        preds = [Assignment.of([0, 1]), Assignment.of([1, 1])]
        truths = [Assignment.of([0, 1]), Assignment.of([0, 1])]
        assert symbol_accuracy(preds, truths) == 0.75

    @pytest.mark.unit
    def test_modal_share(self):
        preds = [Assignment.of([0, 0, 0]), Assignment.of([0, 1, 2])]
        assert modal_share(preds, 3) == pytest.approx(4 / 6)

    @pytest.mark.unit
    def test_epoch_stats_row_columns(self):
        stats = EpochStats(0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.5)
        row = stats.to_row()
        assert tuple(row) == (
            "epoch", "mean_rank_K", "mean_verifications", "fraction_exhausted",
            "pseudo_label_accuracy", "symbol_accuracy", "adjusted_accuracy", "wall_time_s",
        )
        assert row["wall_time_s"] == 0.5

    @pytest.mark.unit
    def test_consistency_score_model_uses_argmax(self, small_grid):
        model = build_score_model(ScoreVariant.LEX_CONSISTENCY_THEN_PRODUCT, small_grid)
        assert model.reference_prediction == Assignment.of([0, 0])
        assert build_score_model(ScoreVariant.INDEPENDENT_PRODUCT, small_grid).reference_prediction is None


class TestTrainConfig:

    @pytest.mark.boundary
    @pytest.mark.parametrize("kwargs", [
        {"epochs": 0},
        {"batch_size": 0},
        {"lr": 0.0},
        {"dcs_budget": 0},
        {"threads": 0},
    ])
    def test_rejects_invalid_values(self, kwargs):
        with pytest.raises(ConfigurationError):
            TrainConfig(**kwargs)

    @pytest.mark.unit
    def test_to_dict(self):
        cfg = TrainConfig(align=AlignmentConfig(prior=SymbolPrior.uniform(2)), score_variant=ScoreVariant.LEX_CONSISTENCY_THEN_PRODUCT)
        data = cfg.to_dict()
        assert data["score"] == "lex"
        assert data["align"]["prior"] == [0.5, 0.5]
        assert data["align"]["scope"] == "batch"


class TestTrain:
    """无标签训练循环"""

    @pytest.mark.unit
    def test_accept_all_reduces_to_self_training(self):
        # 长度为 1 的排序任务接受任意赋值
        verifier = build_verifier('sort', k=4, length=1)
        glyph = GlyphConfig(feature_dim=8, noise_sigma=0.2, seed=2)
        dataset = gen_dataset(verifier, 24, glyph, seed=2)
        model = SoftmaxModel.initialize(4, 8, seed=6, scale=0.5)
        cfg = TrainConfig(epochs=1, batch_size=64, lr=0.3, record_timing=False)

        expected = grad_step(
            model,
            [(s.features, forward(model, s).argmax()) for s in dataset],
            cfg.lr,
        )
        trained, history = train(model, dataset, verifier, cfg)

        np.testing.assert_allclose(trained.weights, expected.weights, atol=1e-12)
        np.testing.assert_allclose(trained.bias, expected.bias, atol=1e-12)
        assert history[0].mean_rank_K == 1.0
        assert history[0].mean_verifications == 1.0
        assert history[0].fraction_exhausted == 0.0

    @pytest.mark.unit
    def test_deterministic_under_seed(self, small_sort_dataset, sort_verifier):
        cfg = TrainConfig(epochs=2, batch_size=8, lr=0.5, seed=3, record_timing=False,
                          align=AlignmentConfig(prior=small_sort_dataset.empirical_prior))
        model = SoftmaxModel.initialize(6, small_sort_dataset.feature_dim, seed=3)
        first_model, first_history = train(model, small_sort_dataset, sort_verifier, cfg)
        second_model, second_history = train(model, small_sort_dataset, sort_verifier, cfg)
        assert first_history == second_history
        np.testing.assert_array_equal(first_model.weights, second_model.weights)

    @pytest.mark.unit
    def test_thread_count_does_not_change_results(self, small_sort_dataset, sort_verifier):
        base = dict(epochs=1, batch_size=10, lr=0.5, seed=1, record_timing=False)
        model = SoftmaxModel.initialize(6, small_sort_dataset.feature_dim, seed=1)
        serial = train(model, small_sort_dataset, sort_verifier, TrainConfig(threads=1, **base))
        pooled = train(model, small_sort_dataset, sort_verifier, TrainConfig(threads=4, **base))
        assert serial[1] == pooled[1]
        np.testing.assert_array_equal(serial[0].weights, pooled[0].weights)

    @pytest.mark.unit
    def test_stats_are_well_formed(self, addition_verifier):
        glyph = GlyphConfig(feature_dim=4, noise_sigma=0.3, seed=9)
        dataset = gen_dataset(addition_verifier, 60, glyph, seed=9)
        cfg = TrainConfig(epochs=3, batch_size=16, lr=0.5, align=AlignmentConfig(prior=dataset.empirical_prior))
        model = SoftmaxModel.initialize(2, 4, seed=9)
        _, history = train(model, dataset, addition_verifier, cfg)
        assert [s.epoch for s in history] == [0, 1, 2]
        for stats in history:
            assert stats.mean_rank_K >= 1.0
            for rate in (stats.fraction_exhausted, stats.pseudo_label_accuracy,
                         stats.symbol_accuracy, stats.adjusted_accuracy):
                assert 0.0 <= rate <= 1.0
            assert stats.wall_time >= 0.0

    @pytest.mark.unit
    def test_zero_model_first_batch_breaks_ties_by_index(self, addition_verifier):
        # 全零模型输出均匀分布，batch 对齐后仍然均匀，按下标取到 0+0=00
        glyph = GlyphConfig(feature_dim=4, noise_sigma=0.3, seed=5)
        dataset = gen_dataset(addition_verifier, 20, glyph, seed=5)
        cfg = TrainConfig(epochs=1, batch_size=20, lr=0.01, record_timing=False,
                          align=AlignmentConfig(prior=SymbolPrior.uniform(2)))
        _, history = train(SoftmaxModel.zeros(2, 4), dataset, addition_verifier, cfg)
        zeros = sum(s == 0 for t in dataset.truths() for s in t.symbols)
        assert history[0].mean_rank_K == 1.0
        assert history[0].pseudo_label_accuracy == pytest.approx(zeros / (20 * 4))

    @pytest.mark.unit
    def test_epoch_summary_is_logged(self, small_sort_dataset, sort_verifier, caplog):
        cfg = TrainConfig(epochs=1, batch_size=10, lr=0.5, record_timing=False)
        model = SoftmaxModel.initialize(6, small_sort_dataset.feature_dim, seed=2)
        with caplog.at_level("INFO", logger="utils.trainer"):
            train(model, small_sort_dataset, sort_verifier, cfg)
        summary = [r.getMessage() for r in caplog.records if r.getMessage().startswith("epoch 0:")]
        assert len(summary) == 1
        assert "heap_ops=" in summary[0]
        assert "mean_K=" in summary[0]

    @pytest.mark.unit
    def test_sequence_scope_matches_per_item_pseudo_labels(self, rng, addition_verifier):
        glyph = GlyphConfig(feature_dim=4, noise_sigma=0.3, seed=3)
        dataset = gen_dataset(addition_verifier, 6, glyph, seed=3)
        cfg = TrainConfig(align=AlignmentConfig(prior=SymbolPrior.uniform(2), scope="sequence"))
        model = SoftmaxModel.initialize(2, 4, seed=3, scale=1.0)
        for sample in dataset:
            grid = forward(model, sample)
            expected = brute_force_cop(
                align(grid, cfg.align), build_score_model(cfg.score_variant, align(grid, cfg.align)),
                addition_verifier,
            )
            assert pseudo_label(grid, sample, addition_verifier, cfg, anneal=1.0).assignment == expected

    @pytest.mark.boundary
    def test_length_mismatch_fails_before_training(self, small_sort_dataset):
        verifier = build_verifier('sort', k=6, length=5)
        model = SoftmaxModel.zeros(6, small_sort_dataset.feature_dim)
        with pytest.raises(ConfigurationError):
            train(model, small_sort_dataset, verifier, TrainConfig(epochs=1))

    @pytest.mark.boundary
    def test_symbol_count_mismatch(self, small_sort_dataset, sort_verifier):
        model = SoftmaxModel.zeros(5, small_sort_dataset.feature_dim)
        with pytest.raises(ConfigurationError):
            train(model, small_sort_dataset, sort_verifier, TrainConfig(epochs=1))

    @pytest.mark.unit
    def test_pseudo_labels_are_feasible_optimum(self, rng, small_sort_dataset, sort_verifier):
        cfg = TrainConfig(dcs_budget=6 ** 4)
        for sample in small_sort_dataset.samples[:5]:
            grid = random_grid(rng, 4, 6)
            result = pseudo_label(grid, sample, sort_verifier, cfg, anneal=0.0)
            expected = brute_force_cop(grid, build_score_model(cfg.score_variant, grid), sort_verifier)
            assert result.assignment == expected


class TestTestTimeCorrection:

    @pytest.fixture
    def sort3(self):
        return build_verifier('sort', k=4, length=3)

    @pytest.fixture
    def near_tie_grid(self):
        return ConfidenceGrid.from_rows([
            [0.05, 0.44, 0.46, 0.05],
            [0.05, 0.46, 0.44, 0.05],
            [0.03, 0.03, 0.04, 0.90],
        ])

    @pytest.mark.unit
    def test_near_tie_is_corrected(self, sort3, near_tie_grid):
        assert near_tie_grid.argmax() == Assignment.of([2, 1, 3])
        result = correct_prediction(near_tie_grid, sort3, ScoreVariant.INDEPENDENT_PRODUCT, budget=64)
        assert not result.uncorrected
        assert result.assignment == Assignment.of([1, 2, 3])
        assert sort3(result.assignment)

    @pytest.mark.unit
    def test_verified_prediction_is_kept(self, sort3):
        grid = ConfidenceGrid.from_rows([
            [0.7, 0.1, 0.1, 0.1],
            [0.1, 0.7, 0.1, 0.1],
            [0.1, 0.1, 0.1, 0.7],
        ])
        result = correct_prediction(grid, sort3, ScoreVariant.INDEPENDENT_PRODUCT, budget=64)
        assert result.assignment == Assignment.of([0, 1, 3])
        assert result.rank == 1

    @pytest.mark.boundary
    def test_budget_one_leaves_prediction_uncorrected(self, sort3, near_tie_grid):
        result = correct_prediction(near_tie_grid, sort3, ScoreVariant.INDEPENDENT_PRODUCT, budget=1)
        assert result.uncorrected
        assert result.rank is None
        assert result.assignment == Assignment.of([2, 1, 3])

    @pytest.mark.unit
    def test_predict_ttc_outputs_satisfy_verifier(self, small_sort_dataset, sort_verifier):
        model = SoftmaxModel.initialize(6, small_sort_dataset.feature_dim, seed=4, scale=1.0)
        for sample in small_sort_dataset:
            result = predict_ttc(model, sample, sort_verifier, ScoreVariant.INDEPENDENT_PRODUCT, budget=1000)
            if not result.uncorrected:
                assert sort_verifier(result.assignment)


class TestEvaluate:

    @pytest.mark.unit
    def test_perfect_model(self, small_sort_dataset, sort_verifier, clean_glyph):
        metrics = evaluate(_oracle_model(6, clean_glyph), small_sort_dataset, sort_verifier)
        assert metrics.raw_accuracy == 1.0
        assert metrics.ttc_accuracy == 1.0
        assert metrics.adjusted_accuracy == 1.0
        assert metrics.verified_fraction == 1.0
        assert metrics.uncorrected_fraction == 0.0
        assert metrics.mean_rank_K == 1.0
        assert metrics.n_symbols == 40 * 4

    @pytest.mark.unit
    def test_model_correct_up_to_group_permutation(self):
        verifier = build_verifier('alldiff', k=4, length=3)
        glyph = GlyphConfig(feature_dim=8, noise_sigma=0.0, seed=1)
        dataset = gen_dataset(verifier, 30, glyph, seed=1)
        model = _oracle_model(4, glyph, sigma=[1, 2, 3, 0])
        group = symmetry_group(verifier, 4, [3])
        metrics = evaluate(model, dataset, verifier, group=group)
        assert metrics.adjusted_accuracy == 1.0
        assert metrics.raw_accuracy < 1.0
        assert list(metrics.to_row()) == list(metrics.CSV_COLUMNS)


# ============================================
# 完整训练运行（默认 lr / batch / epochs）
# ============================================

SEEDS = range(5)


def _cli_training(*argv):
    """按命令行默认值跑一次完整训练，返回 (params, outcome)"""
    import main
    from handlers.train_handlers import run_training, training_params

    args = main.build_parser().parse_args(["train", *argv])
    params = training_params(args)
    return params, run_training(params, threads=1, record_timing=False)


def _addition_base2(seed, *extra):
    return _cli_training("--task", "addition", "--base", "2", "--digits", "1",
                         "--n", "2000", "--sigma", "0.3", "--seed", str(seed), *extra)


@pytest.fixture(scope="module")
def aligned_runs():
    return [_addition_base2(seed)[1] for seed in SEEDS]


@pytest.fixture(scope="module")
def unaligned_runs():
    return [_addition_base2(seed, "--no-align")[1] for seed in SEEDS]


class TestTrainingRuns:
    """二进制加法上的塌缩对照与效率趋势"""

    @pytest.mark.slow
    def test_defaults_are_the_documented_ones(self):
        params, _ = _cli_training("--task", "addition", "--base", "2", "--n", "8", "--epochs", "1")
        assert params["lr"] == 0.001
        assert params["batch"] == 32
        assert params["init_scale"] == 0.0
        assert params["align"] is True
        assert params["align_scope"] == "batch"

    @pytest.mark.slow
    def test_alignment_reaches_high_accuracy(self, aligned_runs):
        accuracies = [run.metrics.raw_accuracy for run in aligned_runs]
        assert sum(acc >= 0.95 for acc in accuracies) >= 4, accuracies

    @pytest.mark.slow
    def test_without_alignment_predictions_collapse(self, unaligned_runs):
        shares = [run.metrics.modal_share for run in unaligned_runs]
        assert sum(share > 0.9 for share in shares) >= 3, shares

    @pytest.mark.slow
    def test_ttc_never_worse_than_raw(self, aligned_runs):
        wins = [run.metrics.ttc_accuracy >= run.metrics.raw_accuracy for run in aligned_runs]
        assert sum(wins) >= 4

    @pytest.mark.slow
    def test_ttc_outputs_are_verified(self, aligned_runs):
        for run in aligned_runs:
            assert run.metrics.verified_fraction >= 1.0 - run.metrics.uncorrected_fraction - 1e-12

    @pytest.mark.slow
    def test_rank_shrinks_over_training(self, aligned_runs):
        first = np.mean([run.history[0].mean_rank_K for run in aligned_runs])
        last = np.mean([run.history[-1].mean_rank_K for run in aligned_runs])
        assert last <= first

    @pytest.mark.slow
    def test_base10_final_rank_within_one_percent_of_space(self):
        _, outcome = _cli_training("--task", "addition", "--base", "10", "--digits", "1",
                                   "--n", "300", "--seed", "0")
        assert outcome.history[-1].mean_rank_K <= 100
        assert outcome.metrics.uncorrected_fraction < 1.0
