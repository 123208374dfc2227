"""
打分函数

乘积置信度、一致性计数以及二者的字典序组合。乘积一律在对数空间计算。
DCS 与穷举 oracle 共用 ranking_key，保证并列时的次序一致。
"""
import math
from typing import Tuple

from models.core import Assignment, ConfidenceGrid, ScoreKey, ScoreModel, ScoreVariant
from models.errors import ContractViolation

RankingKey = Tuple[int, float, Tuple[int, ...]]


def _check_lengths(grid: ConfidenceGrid, a: Assignment) -> None:
    if len(a) != grid.rows:
        raise ContractViolation(f"赋值长度 {len(a)} 与置信度矩阵行数 {grid.rows} 不一致")
    a.check_alphabet(grid.cols)


def log_product_score(grid: ConfidenceGrid, a: Assignment) -> float:
    """sum_i log g[i, a_i]，按位置顺序逐项累加"""
    _check_lengths(grid, a)
    log_values = grid.log_values
    total = 0.0
    for i, s in enumerate(a.symbols):
        total += float(log_values[i, s])
    return total


def product_score(grid: ConfidenceGrid, a: Assignment) -> float:
    """prod_i g[i, a_i]（仅用于展示，内部比较使用对数值）"""
    return math.exp(log_product_score(grid, a))


def consistency_score(a: Assignment, prediction: Assignment) -> int:
    """与预测 f(X) 逐位置相同的个数"""
    if len(a) != len(prediction):
        raise ContractViolation(f"赋值长度 {len(a)} 与预测长度 {len(prediction)} 不一致")
    return sum(1 for x, y in zip(a.symbols, prediction.symbols) if x == y)


def score_key(model: ScoreModel, grid: ConfidenceGrid, a: Assignment) -> ScoreKey:
    """把三种打分方式统一成一个全序键"""
    model.check_grid(grid)
    variant = model.variant
    if variant is ScoreVariant.INDEPENDENT_PRODUCT:
        return ScoreKey(0, log_product_score(grid, a))
    _check_lengths(grid, a)
    consistency = consistency_score(a, model.reference_prediction)
    if variant is ScoreVariant.CONSISTENCY_COUNT:
        return ScoreKey(consistency, -math.inf)
    return ScoreKey(consistency, log_product_score(grid, a))


def ranking_key(key: ScoreKey, a: Assignment) -> RankingKey:
    """升序排序即为枚举顺序：分数降序，并列时按符号下标字典序升序"""
    return (-key.primary, -key.log_secondary, a.symbols)
