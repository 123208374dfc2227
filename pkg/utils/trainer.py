"""
验证学习训练循环

每个 batch：前向 -> 分布对齐 -> DCS 求解 COP -> 以最优可行解为伪标签 -> 一步梯度下降。
另外提供测试时纠正（TTC）与考虑对称性的评估。
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from models.core import Assignment, ConfidenceGrid, ScoreModel, ScoreVariant
from models.errors import ConfigurationError, ContractViolation
from utils.alignment import AlignmentConfig, align_all, anneal_schedule
from utils.dcs import CopResult, solve_cop
from utils.perception import Dataset, Sample, SoftmaxModel, forward, grad_step, predict, predict_proba
from utils.symmetry import Permutation, min_perm_empirical_error
from utils.verifiers import Verifier

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """训练配置；align 为 None 时关闭分布对齐"""
    epochs: int = 10
    batch_size: int = 32
    lr: float = 0.001
    align: Optional[AlignmentConfig] = None
    anneal_epochs: Optional[int] = None
    score_variant: ScoreVariant = ScoreVariant.INDEPENDENT_PRODUCT
    dcs_budget: int = 1000
    seed: int = 0
    threads: int = 1
    record_timing: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigurationError(f"epochs 必须 >= 1，实际 {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size 必须 >= 1，实际 {self.batch_size}")
        if self.lr <= 0:
            raise ConfigurationError(f"lr 必须 > 0，实际 {self.lr}")
        if self.dcs_budget < 1:
            raise ConfigurationError(f"dcs_budget 必须 >= 1，实际 {self.dcs_budget}")
        if self.threads < 1:
            raise ConfigurationError(f"threads 必须 >= 1，实际 {self.threads}")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "align": None if self.align is None else {
                "prior": list(self.align.prior.probs),
                "row_renormalize": self.align.row_renormalize,
                "scope": self.align.scope,
            },
            "anneal_epochs": self.anneal_epochs,
            "score": self.score_variant.value,
            "dcs_budget": self.dcs_budget,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    mean_rank_K: float
    mean_verifications: float
    fraction_exhausted: float
    pseudo_label_accuracy: float
    symbol_accuracy: float
    adjusted_accuracy: float
    wall_time: float

    CSV_COLUMNS = (
        "epoch", "mean_rank_K", "mean_verifications", "fraction_exhausted",
        "pseudo_label_accuracy", "symbol_accuracy", "adjusted_accuracy", "wall_time_s",
    )

    def to_row(self) -> dict:
        row = asdict(self)
        row["wall_time_s"] = row.pop("wall_time")
        return {col: row[col] for col in self.CSV_COLUMNS}


@dataclass(frozen=True)
class TtcResult:
    """测试时纠正的结果；uncorrected 表示预算内未找到可行解，assignment 为原始 argmax"""
    assignment: Assignment
    uncorrected: bool
    rank: Optional[int]
    verifications: int


@dataclass(frozen=True)
class EvalMetrics:
    n_symbols: int
    raw_accuracy: float
    ttc_accuracy: float
    adjusted_accuracy: float
    verified_fraction: float
    uncorrected_fraction: float
    modal_share: float
    mean_rank_K: float

    CSV_COLUMNS = (
        "n_symbols", "raw_accuracy", "ttc_accuracy", "adjusted_accuracy",
        "verified_fraction", "uncorrected_fraction", "modal_share", "mean_rank_K",
    )

    def to_row(self) -> dict:
        return {col: getattr(self, col) for col in self.CSV_COLUMNS}


def symbol_accuracy(preds: Sequence[Assignment], truths: Sequence[Assignment]) -> float:
    """符号级准确率"""
    if len(preds) != len(truths):
        raise ContractViolation(f"预测数 {len(preds)} 与真值数 {len(truths)} 不一致")
    total = sum(len(t) for t in truths)
    if total == 0:
        return 0.0
    correct = sum(1 for p, t in zip(preds, truths) for x, y in zip(p.symbols, t.symbols) if x == y)
    return correct / total


def modal_share(preds: Sequence[Assignment], k: int) -> float:
    """预测中出现最多的符号所占比例，用于观察塌缩"""
    flat = np.fromiter((s for a in preds for s in a.symbols), dtype=np.int64)
    if flat.size == 0:
        return 0.0
    return float(np.bincount(flat, minlength=k).max() / flat.size)


def build_score_model(variant: ScoreVariant, grid: ConfidenceGrid) -> ScoreModel:
    """一致性类打分以该矩阵的 argmax 作为参照预测"""
    reference = grid.argmax() if variant.uses_consistency else None
    return ScoreModel(variant, reference)


@contextmanager
def _mapper(threads: int) -> Iterator[Callable]:
    """threads > 1 时用线程池，结果按输入顺序返回"""
    if threads <= 1:
        yield lambda fn, items: list(map(fn, items))
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield lambda fn, items: list(pool.map(fn, items))


def _check_compatible(model: SoftmaxModel, dataset: Dataset, verifier: Verifier) -> None:
    verifier.check_length(dataset.length)
    if model.num_symbols != verifier.num_symbols:
        raise ConfigurationError(
            f"模型符号数 {model.num_symbols} 与 {verifier.name} 任务符号数 {verifier.num_symbols} 不一致"
        )
    if model.feature_dim != dataset.feature_dim:
        raise ConfigurationError(
            f"模型特征维度 {model.feature_dim} 与数据特征维度 {dataset.feature_dim} 不一致"
        )


def _solve_labels(
    grids: Sequence[ConfidenceGrid],
    samples: Sequence[Sample],
    verifier: Verifier,
    cfg: TrainConfig,
    anneal: float,
    mapper: Callable,
) -> List[CopResult]:
    if cfg.align is not None and anneal > 0:
        grids = align_all(grids, cfg.align.with_anneal(anneal))

    def solve(item: Tuple[ConfidenceGrid, Sample]) -> CopResult:
        grid, sample = item
        score_model = build_score_model(cfg.score_variant, grid)
        return solve_cop(grid, score_model, verifier.bind(sample.positions), cfg.dcs_budget)

    return mapper(solve, list(zip(grids, samples)))


def pseudo_label(
    grid: ConfidenceGrid,
    sample: Sample,
    verifier: Verifier,
    cfg: TrainConfig,
    anneal: float,
) -> CopResult:
    """
    对齐后求解 COP，得到单个样本的伪标签

    Args:
        grid: 模型对该样本的置信度矩阵
        sample: 样本（提供验证器需要的位置信息）
        verifier: 任务验证器
        cfg: 训练配置，决定对齐方式、打分变体与预算
        anneal: 当前轮的对齐强度，0 表示不对齐

    Returns:
        CopResult: 最优可行赋值及其排名；预算耗尽时 exhausted 为 True
    """
    return _solve_labels([grid], [sample], verifier, cfg, anneal, lambda fn, items: list(map(fn, items)))[0]


def train(
    model: SoftmaxModel,
    dataset: Dataset,
    verifier: Verifier,
    cfg: TrainConfig,
    group: Optional[Sequence[Permutation]] = None,
) -> Tuple[SoftmaxModel, List[EpochStats]]:
    """
    无标签训练；每轮重新计算全部伪标签，结果只依赖种子

    每个 batch 先整体对齐（或逐条对齐，由 cfg.align.scope 决定），
    再并行求解各样本的 COP，最后用伪标签做一步梯度下降。

    Args:
        model: 初始模型
        dataset: 训练数据，真值只用于统计伪标签准确率
        verifier: 任务验证器
        cfg: 训练配置
        group: 任务对称群，用于计算对称调整后的准确率

    Returns:
        Tuple[SoftmaxModel, List[EpochStats]]: 训练后的模型与逐轮统计
    """
    _check_compatible(model, dataset, verifier)
    group = list(group) if group else [Permutation.identity(verifier.num_symbols)]
    rng = np.random.default_rng(cfg.seed)
    features = dataset.features_array()
    samples = dataset.samples
    truths = dataset.truths()
    n = len(dataset)
    history: List[EpochStats] = []

    align_desc = "off" if cfg.align is None else cfg.align.scope
    logger.info(
        f"开始训练: task={verifier.name}, n={n}, epochs={cfg.epochs}, batch={cfg.batch_size}, "
        f"lr={cfg.lr:g}, score={cfg.score_variant.value}, align={align_desc}, budget={cfg.dcs_budget}"
    )

    with _mapper(cfg.threads) as mapper:
        for epoch in range(cfg.epochs):
            started = time.perf_counter()
            anneal = anneal_schedule(epoch, cfg.epochs, cfg.anneal_epochs) if cfg.align is not None else 0.0
            order = rng.permutation(n)
            work = 0
            verifications = 0
            heap_operations = 0
            exhausted = 0
            label_correct = 0
            label_total = 0

            for offset in range(0, n, cfg.batch_size):
                idx = order[offset:offset + cfg.batch_size]
                probs = predict_proba(model, features[idx])
                grids = [ConfidenceGrid(probs[b]) for b in range(len(idx))]
                results = _solve_labels(grids, [samples[j] for j in idx], verifier, cfg, anneal, mapper)

                batch = []
                for j, result in zip(idx, results):
                    batch.append((features[j], result.assignment))
                    work += result.work
                    verifications += result.verifications
                    heap_operations += result.heap_operations
                    exhausted += int(result.exhausted)
                    truth = truths[j]
                    label_correct += sum(1 for x, y in zip(result.assignment.symbols, truth.symbols) if x == y)
                    label_total += len(truth)
                model = grad_step(model, batch, cfg.lr)

            preds = predict(model, dataset)
            stats = EpochStats(
                epoch=epoch,
                mean_rank_K=work / n,
                mean_verifications=verifications / n,
                fraction_exhausted=exhausted / n,
                pseudo_label_accuracy=label_correct / label_total,
                symbol_accuracy=symbol_accuracy(preds, truths),
                adjusted_accuracy=1.0 - min_perm_empirical_error(preds, truths, group),
                wall_time=time.perf_counter() - started if cfg.record_timing else 0.0,
            )
            history.append(stats)
            logger.info(
                f"epoch {epoch}: anneal={anneal:.3f}, mean_K={stats.mean_rank_K:.2f}, "
                f"heap_ops={heap_operations / n:.1f}, exhausted={stats.fraction_exhausted:.3f}, "
                f"pseudo_acc={stats.pseudo_label_accuracy:.4f}, acc={stats.symbol_accuracy:.4f}, "
                f"adj_acc={stats.adjusted_accuracy:.4f}"
            )
            if stats.fraction_exhausted > 0:
                logger.warning(f"epoch {epoch} 有 {100 * stats.fraction_exhausted:.1f}% 的样本在预算内未找到可行解")

    return model, history


def correct_prediction(
    grid: ConfidenceGrid,
    verifier: Callable[[Assignment], bool],
    score_variant: ScoreVariant,
    budget: int,
) -> TtcResult:
    """在给定置信度矩阵上求解 COP；预算耗尽时返回原始 argmax 并标记 uncorrected"""
    result = solve_cop(grid, build_score_model(score_variant, grid), verifier, budget)
    if result.exhausted:
        return TtcResult(grid.argmax(), uncorrected=True, rank=None, verifications=result.verifications)
    return TtcResult(result.assignment, uncorrected=False, rank=result.rank, verifications=result.verifications)


def predict_ttc(
    model: SoftmaxModel,
    sample: Sample,
    verifier: Verifier,
    score_variant: ScoreVariant,
    budget: int,
) -> TtcResult:
    """测试时纠正：不做对齐，直接在模型输出上求解"""
    return correct_prediction(forward(model, sample), verifier.bind(sample.positions), score_variant, budget)


def evaluate(
    model: SoftmaxModel,
    dataset: Dataset,
    verifier: Verifier,
    group: Optional[Sequence[Permutation]] = None,
    score_variant: ScoreVariant = ScoreVariant.INDEPENDENT_PRODUCT,
    budget: int = 1000,
) -> EvalMetrics:
    """
    在数据集上评估原始预测与测试时纠正

    Returns:
        EvalMetrics: 原始 / TTC / 对称调整后的准确率，以及验证通过率和塌缩程度
    """
    _check_compatible(model, dataset, verifier)
    group = list(group) if group else [Permutation.identity(verifier.num_symbols)]
    truths = dataset.truths()
    raw = predict(model, dataset)
    ttc = [predict_ttc(model, s, verifier, score_variant, budget) for s in dataset]
    ttc_preds = [r.assignment for r in ttc]
    verified = sum(1 for r, s in zip(ttc, dataset) if verifier.bind(s.positions)(r.assignment))
    corrected_ranks = [r.rank for r in ttc if r.rank is not None]
    n = len(dataset)
    return EvalMetrics(
        n_symbols=sum(len(t) for t in truths),
        raw_accuracy=symbol_accuracy(raw, truths),
        ttc_accuracy=symbol_accuracy(ttc_preds, truths),
        adjusted_accuracy=1.0 - min_perm_empirical_error(raw, truths, group),
        verified_fraction=verified / n,
        uncorrected_fraction=sum(1 for r in ttc if r.uncorrected) / n,
        modal_share=modal_share(raw, verifier.num_symbols),
        mean_rank_K=float(np.mean(corrected_ranks)) if corrected_ranks else 0.0,
    )
