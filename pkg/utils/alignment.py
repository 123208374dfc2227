"""
分布对齐

按先验 P 缩放模型输出，使每个符号的预测总质量等于 位置数 * P_j：
    g'_{i,j} = L * P_j * g_{i,j} / sum_m g_{m,j}
列和既可以在单条序列的 l 个位置上求（scope=sequence），
也可以在一个 batch 内全部 N*l 个位置上求（scope=batch）。
用于抑制训练早期塌缩到 0+0=00 之类的捷径解。
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from models.core import EPSILON, ConfidenceGrid, SymbolPrior
from models.errors import ContractViolation

logger = logging.getLogger(__name__)

ALIGN_SCOPES = ("batch", "sequence")


@dataclass(frozen=True)
class AlignmentConfig:
    prior: SymbolPrior
    anneal: float = 1.0
    row_renormalize: bool = True
    scope: str = "batch"

    def __post_init__(self) -> None:
        if not 0.0 <= self.anneal <= 1.0:
            raise ContractViolation(f"anneal 必须在 [0, 1] 之间，实际 {self.anneal}")
        if self.scope not in ALIGN_SCOPES:
            raise ContractViolation(f"未知的对齐范围 {self.scope!r}，可选: {', '.join(ALIGN_SCOPES)}")

    def with_anneal(self, anneal: float) -> "AlignmentConfig":
        return AlignmentConfig(
            prior=self.prior, anneal=anneal, row_renormalize=self.row_renormalize, scope=self.scope,
        )


def _rescale(values: np.ndarray, cfg: AlignmentConfig) -> np.ndarray:
    """对堆叠后的 (L, k) 矩阵按列和缩放、行归一并按 anneal 混合"""
    total_rows = values.shape[0]
    column_sums = np.maximum(values.sum(axis=0), EPSILON)
    aligned = total_rows * cfg.prior.as_array()[np.newaxis, :] * values / column_sums[np.newaxis, :]

    if cfg.row_renormalize:
        row_sums = aligned.sum(axis=1, keepdims=True)
        # 整行为 0 时（先验在该行所有符号上都为 0）退回原始分布
        zero_rows = row_sums[:, 0] <= 0
        row_sums[zero_rows] = 1.0
        aligned = aligned / row_sums
        aligned[zero_rows] = values[zero_rows]

    if cfg.anneal < 1.0:
        aligned = cfg.anneal * aligned + (1.0 - cfg.anneal) * values
    return aligned


def align(grid: ConfidenceGrid, cfg: AlignmentConfig) -> ConfidenceGrid:
    """
    对单条序列做对齐，列和在整条序列的 l 个位置上求

    Args:
        grid: 模型输出的 l x k 置信度矩阵
        cfg: 先验、退火系数与是否行归一

    Returns:
        ConfidenceGrid: 对齐后的矩阵；anneal 为 0 时原样返回
    """
    if cfg.prior.size != grid.cols:
        raise ContractViolation(f"先验长度 {cfg.prior.size} 与符号数 {grid.cols} 不一致")
    if cfg.anneal == 0.0:
        return grid
    return ConfidenceGrid(_rescale(grid.values, cfg), stochastic=cfg.row_renormalize)


def align_batch(grids: Sequence[ConfidenceGrid], cfg: AlignmentConfig) -> List[ConfidenceGrid]:
    """
    对一个 batch 的矩阵整体对齐，列和在 batch 内全部位置上求

    单条序列只有 l 个位置，列和噪声很大；在整个 batch 上统计时，
    对齐只修正模型整体的符号偏置，而不会抹平单个样本内部的差异。
    N=1 时与 align 完全一致。

    Args:
        grids: 同一 batch 中各样本的置信度矩阵，列数必须相同
        cfg: 对齐配置（scope 字段在此不起作用）

    Returns:
        List[ConfidenceGrid]: 与输入顺序一致的对齐结果
    """
    if not grids:
        return []
    cols = {g.cols for g in grids}
    if len(cols) != 1:
        raise ContractViolation(f"batch 内符号数不一致: {sorted(cols)}")
    if cfg.prior.size != grids[0].cols:
        raise ContractViolation(f"先验长度 {cfg.prior.size} 与符号数 {grids[0].cols} 不一致")
    if cfg.anneal == 0.0:
        return list(grids)

    stacked = np.concatenate([g.values for g in grids], axis=0)
    aligned = _rescale(stacked, cfg)
    bounds = np.cumsum([g.rows for g in grids])[:-1]
    return [ConfidenceGrid(part, stochastic=cfg.row_renormalize) for part in np.split(aligned, bounds)]


def align_all(grids: Sequence[ConfidenceGrid], cfg: AlignmentConfig) -> List[ConfidenceGrid]:
    """按 cfg.scope 对一组矩阵做对齐"""
    if cfg.scope == "batch":
        return align_batch(grids, cfg)
    return [align(g, cfg) for g in grids]


def anneal_schedule(epoch: int, total_epochs: int, anneal_epochs: Optional[int] = None) -> float:
    """前 anneal_epochs 轮（默认 ceil(total/2)）从 1 线性衰减到 0，之后为 0"""
    if total_epochs < 1 or not 0 <= epoch < total_epochs:
        raise ContractViolation(f"epoch 必须在 [0, {total_epochs}) 之间，实际 {epoch}")
    horizon = math.ceil(total_epochs / 2) if not anneal_epochs else anneal_epochs
    if epoch >= horizon:
        return 0.0
    return 1.0 - epoch / horizon
