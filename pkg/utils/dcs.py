"""
动态组合排序（Dynamic Combinatorial Sorting）

按打分非增顺序惰性地枚举全部 k^l 个赋值，第一个通过验证的赋值即为 COP 最优解。

流程：
1. 每个位置按优先级对 k 个符号排序，各位置取第 0 名得到 S_1；
2. 每个已输出的赋值在堆中占一项，键为其剩余后继中的最优者；
   弹出堆顶后输出该后继（已输出过的跳过），把后继自身的条目入堆，
   父条目去掉这个后继后重新入堆。
"""
import heapq
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Optional, Set, Tuple

from models.core import Assignment, ConfidenceGrid, ScoreKey, ScoreModel, ScoreVariant
from models.errors import ContractViolation, TaskDefinitionError
from utils.scoring import RankingKey, ranking_key, score_key

logger = logging.getLogger(__name__)

Cursor = Tuple[int, ...]
VerifierFn = Callable[[Assignment], bool]


@dataclass(frozen=True)
class PositionOrder:
    """每个位置上符号的优先级顺序（降序），per_position[p][r] 是位置 p 第 r 名的符号"""
    per_position: Tuple[Tuple[int, ...], ...]
    _rank_of: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.per_position:
            raise ContractViolation("PositionOrder 至少需要一个位置")
        k = len(self.per_position[0])
        rank_of = []
        for p, order in enumerate(self.per_position):
            if sorted(order) != list(range(k)):
                raise ContractViolation(f"位置 {p} 的顺序不是 0..{k - 1} 的排列: {order}")
            ranks = [0] * k
            for r, s in enumerate(order):
                ranks[s] = r
            rank_of.append(tuple(ranks))
        object.__setattr__(self, "_rank_of", tuple(rank_of))

    @property
    def length(self) -> int:
        return len(self.per_position)

    @property
    def num_symbols(self) -> int:
        return len(self.per_position[0])

    def cursor_of(self, a: Assignment) -> Cursor:
        """赋值在各位置上的名次向量"""
        if len(a) != self.length:
            raise ContractViolation(f"赋值长度 {len(a)} 与顺序长度 {self.length} 不一致")
        return tuple(self._rank_of[p][s] for p, s in enumerate(a.symbols))

    def assignment_at(self, cursor: Cursor) -> Assignment:
        return Assignment(tuple(self.per_position[p][r] for p, r in enumerate(cursor)))


def build_order(grid: ConfidenceGrid, model: ScoreModel) -> PositionOrder:
    """按位置优先级降序排列符号，同优先级按符号下标升序

    独立乘积：按置信度；一致性类打分：预测符号排第一，其余按置信度
    （纯一致性计数下其余符号优先级相同，因此按下标）。
    """
    model.check_grid(grid)
    log_values = grid.log_values
    k = grid.cols
    reference = model.reference_prediction
    orders = []
    for p in range(grid.rows):
        row = log_values[p]
        if model.variant is ScoreVariant.CONSISTENCY_COUNT:
            rest = sorted(s for s in range(k) if s != reference[p])
            order = [reference[p]] + rest
        else:
            by_confidence = sorted(range(k), key=lambda s: (-float(row[s]), s))
            if model.variant is ScoreVariant.LEX_CONSISTENCY_THEN_PRODUCT:
                predicted = reference[p]
                order = [predicted] + [s for s in by_confidence if s != predicted]
            else:
                order = by_confidence
        orders.append(tuple(order))
    return PositionOrder(tuple(orders))


def first_assignment(order: PositionOrder) -> Assignment:
    """各位置取第 0 名，即全局最高分赋值 S_1"""
    return order.assignment_at((0,) * order.length)


def successors(a: Assignment, cursor: Cursor, order: PositionOrder) -> List[Assignment]:
    """每个尚未到末名的位置各推进一名，其余位置不变"""
    if order.cursor_of(a) != tuple(cursor):
        raise ContractViolation(f"cursor {cursor} 与赋值 {a.symbols} 不一致")
    last = order.num_symbols - 1
    result = []
    for p, r in enumerate(cursor):
        if r < last:
            advanced = list(cursor)
            advanced[p] = r + 1
            result.append(order.assignment_at(tuple(advanced)))
    return result


@dataclass
class HeapEntry:
    """堆中的一项：父赋值及其尚未弹出的后继（按枚举顺序升序）"""
    parent: Assignment
    cursor: Cursor
    remaining: List[Tuple[RankingKey, Assignment, ScoreKey]]
    index: int = 0

    @property
    def best_successor_key(self) -> ScoreKey:
        return self.remaining[self.index][2]

    @property
    def sort_key(self) -> RankingKey:
        return self.remaining[self.index][0]

    def exhausted(self) -> bool:
        return self.index >= len(self.remaining)


@dataclass
class EnumeratorState:
    """单个枚举过程的可变状态，只归一个调用方所有"""
    heap: List[Tuple[RankingKey, int, HeapEntry]] = field(default_factory=list)
    visited: Set[Tuple[int, ...]] = field(default_factory=set)
    emitted_count: int = 0
    verification_count: int = 0
    heap_operations: int = 0
    last_key: Optional[ScoreKey] = None
    _counter: Iterator[int] = field(default_factory=itertools.count, repr=False)

    @classmethod
    def start(cls, grid: ConfidenceGrid, model: ScoreModel, order: PositionOrder) -> "EnumeratorState":
        """输出 S_1 并把它的条目入堆"""
        state = cls()
        first = first_assignment(order)
        state.visited.add(first.symbols)
        state.emitted_count = 1
        state.last_key = score_key(model, grid, first)
        _push_entry(state, grid, model, order, first)
        return state

    def push(self, entry: HeapEntry) -> None:
        heapq.heappush(self.heap, (entry.sort_key, next(self._counter), entry))
        self.heap_operations += 1


def _push_entry(
    state: EnumeratorState,
    grid: ConfidenceGrid,
    model: ScoreModel,
    order: PositionOrder,
    parent: Assignment,
) -> None:
    cursor = order.cursor_of(parent)
    scored = []
    for succ in successors(parent, cursor, order):
        key = score_key(model, grid, succ)
        scored.append((ranking_key(key, succ), succ, key))
    if not scored:
        return
    scored.sort(key=lambda item: item[0])
    state.push(HeapEntry(parent=parent, cursor=cursor, remaining=scored))


def next_assignment(
    state: EnumeratorState,
    grid: ConfidenceGrid,
    model: ScoreModel,
    order: PositionOrder,
) -> Optional[Assignment]:
    """输出下一个最高分且未输出过的赋值；全部 k^l 个输出完毕后返回 None"""
    while state.heap:
        _, _, entry = heapq.heappop(state.heap)
        state.heap_operations += 1
        _, candidate, key = entry.remaining[entry.index]
        entry.index += 1
        if not entry.exhausted():
            state.push(entry)
        if candidate.symbols in state.visited:
            # 不同父节点可能给出同一个后继
            continue
        state.visited.add(candidate.symbols)
        state.emitted_count += 1
        state.last_key = key
        _push_entry(state, grid, model, order, candidate)
        return candidate
    return None


def iter_ranking(grid: ConfidenceGrid, model: ScoreModel) -> Iterator[Tuple[Assignment, ScoreKey]]:
    """按枚举顺序产出 (赋值, 打分键)"""
    order = build_order(grid, model)
    state = EnumeratorState.start(grid, model, order)
    yield first_assignment(order), state.last_key
    while True:
        a = next_assignment(state, grid, model, order)
        if a is None:
            return
        yield a, state.last_key


def enumerate_ranking(
    grid: ConfidenceGrid,
    model: ScoreModel,
    limit: Optional[int] = None,
) -> List[Tuple[Assignment, ScoreKey]]:
    return list(itertools.islice(iter_ranking(grid, model), limit))


@dataclass(frozen=True)
class CopResult:
    """COP 求解结果

    exhausted 为 True 时 assignment 是未通过验证的第 1 名赋值，rank 为 None。
    """
    assignment: Assignment
    rank: Optional[int]
    verifications: int
    exhausted: bool
    key: ScoreKey
    heap_operations: int = 0

    @property
    def best_unverified(self) -> Optional[Assignment]:
        return self.assignment if self.exhausted else None

    @property
    def work(self) -> int:
        """统计用的名次：成功时为 K，预算耗尽时为验证次数"""
        return self.rank if self.rank is not None else self.verifications


def _verify(verifier: VerifierFn, a: Assignment) -> bool:
    try:
        return bool(verifier(a))
    except Exception as e:
        raise TaskDefinitionError(f"验证函数在赋值 {a.symbols} 上抛出异常: {e}") from e


def solve_cop(
    grid: ConfidenceGrid,
    model: ScoreModel,
    verifier: VerifierFn,
    budget: int,
) -> CopResult:
    """
    依次验证枚举出的赋值，返回第一个通过验证的赋值及其名次 K（从 1 开始）

    Args:
        grid: 置信度矩阵
        model: 打分方式
        verifier: 验证函数，只会按枚举顺序被调用
        budget: 最多验证的赋值个数

    Returns:
        CopResult: 预算耗尽时 exhausted 为 True，assignment 为第 1 名赋值

    Raises:
        TaskDefinitionError: 验证函数自身抛出异常
    """
    if budget < 1:
        raise ContractViolation(f"budget 必须 >= 1，实际 {budget}")
    order = build_order(grid, model)
    state = EnumeratorState.start(grid, model, order)
    first = first_assignment(order)
    first_key = state.last_key

    candidate: Optional[Assignment] = first
    while candidate is not None:
        state.verification_count += 1
        if _verify(verifier, candidate):
            return CopResult(
                assignment=candidate,
                rank=state.emitted_count,
                verifications=state.verification_count,
                exhausted=False,
                key=state.last_key,
                heap_operations=state.heap_operations,
            )
        if state.emitted_count >= budget:
            break
        candidate = next_assignment(state, grid, model, order)

    logger.debug(f"COP 预算耗尽: budget={budget}, 已验证 {state.verification_count} 个赋值, 返回第 1 名 {first.symbols}")
    return CopResult(
        assignment=first,
        rank=None,
        verifications=state.verification_count,
        exhausted=True,
        key=first_key,
        heap_operations=state.heap_operations,
    )
