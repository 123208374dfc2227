"""
验证函数的对称群与任务误差界

对称群 G：所有使 V_KB(S) == V_KB(sigma(S)) 对全部 S 成立的符号置换 sigma。
在 G 的作用下做轨道分解，得到：
    r_up  = sum_{s 不是不动点} P_s
    r_avg = sum_s P_s / |O_s|
以及在 G 内取最优置换后的经验误差。

群通过穷举 k! 个置换、穷举给定长度内的全部序列求得；长度截断时得到的是真实对称群的超集。
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

from models.core import Assignment, SymbolPrior
from models.errors import CapabilityError, ContractViolation

logger = logging.getLogger(__name__)

# 穷举置换的符号数上限（8! = 40320）
MAX_EXHAUSTIVE_K = 8

# 单个长度下穷举序列数上限
MAX_SEQUENCES_PER_LENGTH = 1_000_000

Predicate = Callable[[Assignment], bool]


@dataclass(frozen=True, order=True)
class Permutation:
    """0..k-1 上的双射，mapping[s] = sigma(s)"""
    mapping: Tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ContractViolation(f"不是双射: {self.mapping}")

    @classmethod
    def identity(cls, k: int) -> "Permutation":
        return cls(tuple(range(k)))

    @classmethod
    def swap(cls, k: int, i: int, j: int) -> "Permutation":
        mapping = list(range(k))
        mapping[i], mapping[j] = mapping[j], mapping[i]
        return cls(tuple(mapping))

    @property
    def size(self) -> int:
        return len(self.mapping)

    def is_identity(self) -> bool:
        return all(i == s for i, s in enumerate(self.mapping))

    def compose(self, other: "Permutation") -> "Permutation":
        """(self ∘ other)(s) = self(other(s))"""
        return Permutation(tuple(self.mapping[s] for s in other.mapping))

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for i, s in enumerate(self.mapping):
            inv[s] = i
        return Permutation(tuple(inv))

    def apply(self, a: Assignment) -> Assignment:
        return Assignment(tuple(self.mapping[s] for s in a.symbols))


@dataclass(frozen=True)
class OrbitReport:
    """对称性分析结果"""
    k: int
    group: Tuple[Permutation, ...]
    orbits: Tuple[Tuple[int, ...], ...]
    fixed_points: Tuple[int, ...]
    r_up: float
    r_avg: float
    check_length: int
    lengths: Tuple[int, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "group_order": len(self.group),
            "group": [list(p.mapping) for p in self.group],
            "orbits": [list(o) for o in self.orbits],
            "fixed_points": list(self.fixed_points),
            "r_up": self.r_up,
            "r_avg": self.r_avg,
            "check_length": self.check_length,
            "lengths": list(self.lengths),
        }


class UnionFind:
    """按秩合并的并查集"""

    def __init__(self, items: Iterable[int]):
        self.parent = {x: x for x in items}
        self.rank = {x: 0 for x in self.parent}

    def find(self, x: int) -> int:
        root = self.parent[x]
        if self.parent[root] != root:
            root = self.parent[x] = self.find(root)
        return root

    def union(self, x: int, y: int) -> None:
        x, y = self.find(x), self.find(y)
        if x == y:
            return
        if self.rank[x] < self.rank[y]:
            x, y = y, x
        elif self.rank[x] == self.rank[y]:
            self.rank[x] += 1
        self.parent[y] = x

    def groups(self) -> List[Tuple[int, ...]]:
        buckets: Dict[int, List[int]] = {}
        for x in self.parent:
            buckets.setdefault(self.find(x), []).append(x)
        return sorted(tuple(sorted(members)) for members in buckets.values())


def check_group(group: Sequence[Permutation], k: int) -> None:
    """校验群公理：含单位元、对复合与求逆封闭"""
    members = set(group)
    if any(p.size != k for p in members):
        raise ContractViolation(f"置换大小与 k={k} 不一致")
    if Permutation.identity(k) not in members:
        raise ContractViolation("置换集合不含单位元")
    if len(members) == math.factorial(k):
        # 全对称群
        return
    for p in members:
        if p.inverse() not in members:
            raise ContractViolation(f"置换集合对求逆不封闭: {p.mapping}")
        for q in members:
            if p.compose(q) not in members:
                raise ContractViolation(
                    f"置换集合对复合不封闭: {p.mapping} ∘ {q.mapping}"
                )


def _truth_table(predicates: Sequence[Predicate], k: int, length: int) -> np.ndarray:
    """形状为 (谓词数, k^length) 的布尔表，序列按 k 进制编码（高位在前）"""
    table = np.empty((len(predicates), k ** length), dtype=bool)
    for idx, symbols in enumerate(itertools.product(range(k), repeat=length)):
        a = Assignment(symbols)
        for row, predicate in enumerate(predicates):
            table[row, idx] = bool(predicate(a))
    return table


def symmetry_group(
    verifier: Union[Predicate, Sequence[Predicate]],
    k: int,
    lengths: Sequence[int],
    *,
    max_k: int = MAX_EXHAUSTIVE_K,
) -> List[Permutation]:
    """返回在所有给定长度、所有序列上保持 V_KB 取值不变的全部置换

    verifier 可以是多个谓词（如 chess 在若干棋盘上的验证函数），置换须对每一个都保持不变。
    """
    if k > max_k:
        raise CapabilityError(f"k={k} 超过穷举上限 {max_k}（需要枚举 {k}! 个置换）")
    if not lengths:
        raise ContractViolation("lengths 不能为空")
    predicates = list(verifier) if isinstance(verifier, (list, tuple)) else [verifier]

    tables = []
    for length in sorted(set(lengths)):
        if k ** length > MAX_SEQUENCES_PER_LENGTH:
            raise CapabilityError(f"长度 {length} 下序列数 {k}^{length} 超过穷举上限")
        table = _truth_table(predicates, k, length)
        # sequences[idx] 为第 idx 个序列的符号矩阵
        sequences = np.array(list(itertools.product(range(k), repeat=length)), dtype=np.int64)
        weights = k ** np.arange(length - 1, -1, -1, dtype=np.int64)
        tables.append((table, sequences, weights))

    group = []
    for mapping in itertools.permutations(range(k)):
        sigma = np.asarray(mapping, dtype=np.int64)
        invariant = True
        for table, sequences, weights in tables:
            permuted_index = sigma[sequences] @ weights
            if not np.array_equal(table[:, permuted_index], table):
                invariant = False
                break
        if invariant:
            group.append(Permutation(tuple(mapping)))

    check_group(group, k)
    logger.debug(f"对称群: k={k}, lengths={list(lengths)}, |G|={len(group)}")
    return group


def orbit_decomposition(group: Sequence[Permutation], k: int) -> List[Tuple[int, ...]]:
    """G 作用下的轨道划分（按最小元素排序）"""
    check_group(group, k)
    uf = UnionFind(range(k))
    for sigma in group:
        for s in range(k):
            uf.union(s, sigma.mapping[s])
    return uf.groups()


def task_error_bounds(orbits: Sequence[Sequence[int]], prior: SymbolPrior) -> Tuple[float, float]:
    """
    由对称轨道与符号先验计算任务误差界

    Args:
        orbits: 对称群在符号上的轨道划分，须恰好覆盖全部符号
        prior: 符号先验

    Returns:
        Tuple[float, float]: (r_up, r_avg)
    """
    covered = sorted(s for orbit in orbits for s in orbit)
    if covered != list(range(prior.size)):
        raise ContractViolation(f"轨道未恰好覆盖全部 {prior.size} 个符号: {orbits}")
    up_terms = []
    avg_terms = []
    for orbit in orbits:
        for s in orbit:
            p = prior.probs[s]
            if len(orbit) > 1:
                up_terms.append(p)
            avg_terms.append(p / len(orbit))
    return math.fsum(up_terms), math.fsum(avg_terms)


def fixed_points(orbits: Sequence[Sequence[int]]) -> Tuple[int, ...]:
    return tuple(sorted(orbit[0] for orbit in orbits if len(orbit) == 1))


def analyze_symmetry(
    verifier: Union[Predicate, Sequence[Predicate]],
    k: int,
    lengths: Sequence[int],
    prior: SymbolPrior,
    *,
    max_k: int = MAX_EXHAUSTIVE_K,
) -> OrbitReport:
    group = symmetry_group(verifier, k, lengths, max_k=max_k)
    orbits = orbit_decomposition(group, k)
    r_up, r_avg = task_error_bounds(orbits, prior)
    return OrbitReport(
        k=k,
        group=tuple(sorted(group)),
        orbits=tuple(orbits),
        fixed_points=fixed_points(orbits),
        r_up=r_up,
        r_avg=r_avg,
        check_length=max(lengths),
        lengths=tuple(sorted(set(lengths))),
    )


def min_perm_empirical_error(
    preds: Sequence[Assignment],
    truths: Sequence[Assignment],
    group: Sequence[Permutation],
) -> float:
    """
    在对称群内取最优置换后的符号级错误率

    Args:
        preds: 模型预测
        truths: 真值
        group: 任务对称群，至少包含恒等置换

    Returns:
        float: min_sigma 错误率，取值 [0, 1]
    """
    if len(preds) != len(truths):
        raise ContractViolation(f"预测数 {len(preds)} 与真值数 {len(truths)} 不一致")
    if not group:
        raise ContractViolation("group 不能为空")
    for p, t in zip(preds, truths):
        if len(p) != len(t):
            raise ContractViolation(f"预测 {p.symbols} 与真值 {t.symbols} 长度不一致")
    if not preds:
        return 0.0
    flat_preds = np.fromiter((s for a in preds for s in a.symbols), dtype=np.int64)
    flat_truths = np.fromiter((s for a in truths for s in a.symbols), dtype=np.int64)
    if flat_preds.size == 0:
        return 0.0
    best = 1.0
    for sigma in group:
        mapping = np.asarray(sigma.mapping, dtype=np.int64)
        if flat_preds.max() >= mapping.size:
            raise ContractViolation(f"预测符号超出置换大小 {mapping.size}")
        error = float(np.mean(mapping[flat_preds] != flat_truths))
        best = min(best, error)
    return best
