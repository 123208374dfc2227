"""
各子命令共用的参数定义与解析
"""
import argparse
import logging
import re
from typing import List, Optional

import numpy as np

from config.settings import (
    DCS_BUDGET, FEATURE_DIM, NOISE_SIGMA, SCORE, SEED, SHIFT_RANGE, SYMMETRY_CHECK_LENGTH,
    SYMMETRY_CHESS_BOARDS, SYMMETRY_MAX_K, THREADS,
)
from models.core import ScoreVariant, SymbolPrior
from models.errors import CapabilityError, ConfigurationError
from utils.perception import Dataset, GlyphConfig, gen_dataset, random_board, read_dataset
from utils.symmetry import MAX_SEQUENCES_PER_LENGTH, OrbitReport, Permutation, analyze_symmetry, symmetry_group
from utils.verifiers import TaskKind, Verifier, build_verifier

logger = logging.getLogger(__name__)

TASK_CHOICES = [kind.value for kind in TaskKind]
SCORE_CHOICES = [variant.value for variant in ScoreVariant]


# ============================================
# 参数定义
# ============================================

def add_task_arguments(parser: argparse.ArgumentParser, required: bool = True, include_pieces: bool = True) -> None:
    group = parser.add_argument_group("任务参数")
    group.add_argument("--task", required=required, choices=TASK_CHOICES, help="任务名")
    group.add_argument("--base", type=int, default=10, help="addition 的进制（符号数 k = base）")
    group.add_argument("--digits", type=int, default=1, help="addition 每个加数的位数")
    group.add_argument("--k", type=int, default=None, help="sort / match / alldiff 的符号数")
    group.add_argument("--len", dest="length", type=int, default=None, help="序列长度（chess 为棋子个数）")
    if include_pieces:
        group.add_argument("--pieces", type=int, default=None, help="chess 的棋子种类数（按名称字典序取前 p 种）")


def add_glyph_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("数据参数")
    group.add_argument("--n", type=int, default=1000, help="样本数")
    group.add_argument("--sigma", type=float, default=NOISE_SIGMA, help="字形高斯噪声标准差")
    group.add_argument("--feature-dim", type=int, default=FEATURE_DIM, help="字形特征维度")
    group.add_argument("--shift", type=int, default=SHIFT_RANGE, help="字形循环平移范围")


def add_seed_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=SEED, help="随机种子")


def add_solver_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("求解参数")
    group.add_argument("--score", choices=SCORE_CHOICES, default=SCORE, help="打分方式")
    group.add_argument("--budget", type=int, default=DCS_BUDGET, help="每个样本的 DCS 枚举预算")
    group.add_argument("--threads", type=int, default=THREADS, help="并行求解线程数（默认取 VL_THREADS）")


# ============================================
# 参数解析
# ============================================

def verifier_from_args(args: argparse.Namespace) -> Verifier:
    return build_verifier(
        args.task,
        base=args.base,
        digits=args.digits,
        k=args.k,
        length=args.length,
        pieces=getattr(args, "pieces", None),
    )


def glyph_from_args(args: argparse.Namespace) -> GlyphConfig:
    return GlyphConfig(
        feature_dim=args.feature_dim,
        noise_sigma=args.sigma,
        shift_range=args.shift,
        seed=args.seed,
    )


def load_or_generate(args: argparse.Namespace, verifier: Verifier) -> Dataset:
    """有 --data 时读文件，否则按种子现场生成"""
    if getattr(args, "data", None):
        dataset = read_dataset(args.data, verifier)
        logger.info(f"已读取数据集 {args.data}: n={len(dataset)}")
        return dataset
    return gen_dataset(verifier, args.n, glyph_from_args(args), seed=args.seed)


def parse_range(raw: str) -> List[int]:
    """'2..5' 或 '2,3,7' 形式的整数列表"""
    text = str(raw).strip()
    match = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", text)
    try:
        if match:
            start, stop = int(match.group(1)), int(match.group(2))
            if stop < start:
                raise ConfigurationError(f"区间 {raw!r} 的上界小于下界")
            return list(range(start, stop + 1))
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigurationError(f"无法解析整数列表 {raw!r}，应为 'a..b' 或逗号分隔") from None
    if not values:
        raise ConfigurationError(f"整数列表 {raw!r} 为空")
    return values


def resolve_prior(name: str, k: int, dataset: Optional[Dataset] = None) -> SymbolPrior:
    if name == "uniform":
        return SymbolPrior.uniform(k)
    if name == "empirical":
        if dataset is None:
            raise ConfigurationError("empirical 先验需要数据集")
        return dataset.empirical_prior
    raise ConfigurationError(f"未知的先验 {name!r}，可选: uniform, empirical")


# ============================================
# 对称性
# ============================================

def symmetry_lengths(verifier: Verifier, check_length: Optional[int] = None) -> List[int]:
    """长度可变的任务检查 1..check_length，其余只检查任务长度"""
    k = verifier.num_symbols
    if not verifier.length_generic:
        return [verifier.sequence_length]
    limit = check_length or SYMMETRY_CHECK_LENGTH
    lengths = [n for n in range(1, limit + 1) if k ** n <= MAX_SEQUENCES_PER_LENGTH]
    if len(lengths) < limit:
        logger.warning(f"k={k} 时只检查到长度 {max(lengths, default=0)}，所得群可能是真实对称群的超集")
    if not lengths:
        raise CapabilityError(f"k={k} 过大，无法穷举任何长度的序列")
    return lengths


def symmetry_predicates(verifier: Verifier, seed: int, boards: int = SYMMETRY_CHESS_BOARDS) -> list:
    """chess 在若干随机棋盘上分别验证；长度可变任务按输入长度取验证函数"""
    if verifier.kind is TaskKind.CHESS:
        rng = np.random.default_rng(seed)
        return [verifier.bind(random_board(verifier.sequence_length, rng)) for _ in range(boards)]
    if verifier.length_generic:
        return [lambda a: verifier.resized(len(a))(a)]
    return [verifier]


def task_symmetry(
    verifier: Verifier,
    prior: SymbolPrior,
    seed: int,
    check_length: Optional[int] = None,
    max_k: int = SYMMETRY_MAX_K,
) -> OrbitReport:
    return analyze_symmetry(
        symmetry_predicates(verifier, seed),
        verifier.num_symbols,
        symmetry_lengths(verifier, check_length),
        prior,
        max_k=max_k,
    )


def task_group(verifier: Verifier, seed: int) -> List[Permutation]:
    """评估用的对称群；超出穷举能力时退回单位群"""
    try:
        return symmetry_group(
            symmetry_predicates(verifier, seed),
            verifier.num_symbols,
            symmetry_lengths(verifier, verifier.sequence_length),
            max_k=SYMMETRY_MAX_K,
        )
    except CapabilityError as e:
        logger.warning(f"无法计算对称群，使用单位群计算调整后准确率: {e}")
        return [Permutation.identity(verifier.num_symbols)]
