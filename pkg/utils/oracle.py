"""
穷举参照实现，用于与 DCS 做差分测试

与 DCS 共用 score_key / ranking_key，并列时的次序完全一致。
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

from models.core import Assignment, ConfidenceGrid, ScoreKey, ScoreModel
from models.errors import CapabilityError
from utils.scoring import ranking_key, score_key

logger = logging.getLogger(__name__)

# 穷举空间上限 k^l
MAX_ORACLE_SPACE = 1_000_000

Ranking = List[Tuple[Assignment, ScoreKey]]


@dataclass(frozen=True)
class OracleResult:
    full_ranking: Tuple[Tuple[Assignment, ScoreKey], ...]
    best_feasible: Optional[Assignment]

    @property
    def best_feasible_rank(self) -> Optional[int]:
        """最优可行解在完整排序中的名次（从 1 开始）"""
        if self.best_feasible is None:
            return None
        for rank, (a, _) in enumerate(self.full_ranking, start=1):
            if a == self.best_feasible:
                return rank
        return None


def brute_force_ranking(
    grid: ConfidenceGrid,
    model: ScoreModel,
    max_space: int = MAX_ORACLE_SPACE,
) -> Ranking:
    """枚举全部 k^l 个赋值并按枚举顺序排序"""
    space = grid.cols ** grid.rows
    if space > max_space:
        raise CapabilityError(f"赋值空间 {grid.cols}^{grid.rows}={space} 超过穷举上限 {max_space}")
    model.check_grid(grid)
    scored = []
    for symbols in itertools.product(range(grid.cols), repeat=grid.rows):
        a = Assignment(symbols)
        scored.append((a, score_key(model, grid, a)))
    scored.sort(key=lambda item: ranking_key(item[1], item[0]))
    return scored


def brute_force_cop(
    grid: ConfidenceGrid,
    model: ScoreModel,
    verifier: Callable[[Assignment], bool],
    max_space: int = MAX_ORACLE_SPACE,
) -> Optional[Assignment]:
    """可行集中打分最高的赋值；无可行解时返回 None"""
    for a, _ in brute_force_ranking(grid, model, max_space):
        if verifier(a):
            return a
    return None


def oracle_result(
    grid: ConfidenceGrid,
    model: ScoreModel,
    verifier: Optional[Callable[[Assignment], bool]] = None,
    max_space: int = MAX_ORACLE_SPACE,
) -> OracleResult:
    ranking = brute_force_ranking(grid, model, max_space)
    best = None
    if verifier is not None:
        best = next((a for a, _ in ranking if verifier(a)), None)
    return OracleResult(full_ranking=tuple(ranking), best_feasible=best)
