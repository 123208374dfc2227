"""
核心领域类型

符号表、先验分布、赋值序列、置信度矩阵和打分模型。
构造完成后均为不可变值，可在线程间共享。
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional, Sequence, Tuple

import numpy as np

from models.errors import ContractViolation

# 取对数前的置信度下限，避免出现 -inf
EPSILON = 1e-12

# 行随机性（每行和为 1）的容差
ROW_SUM_TOLERANCE = 1e-9

# 先验分布归一化容差
PRIOR_SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Alphabet:
    """符号表 C = {c_1, ..., c_k}"""
    size: int
    names: Tuple[str, ...]

    def __post_init__(self) -> None:
        if self.size < 2:
            raise ContractViolation(f"符号表大小必须 >= 2，实际 {self.size}")
        if len(self.names) != self.size:
            raise ContractViolation(f"符号名数量 {len(self.names)} 与大小 {self.size} 不一致")
        if len(set(self.names)) != self.size:
            raise ContractViolation(f"符号名必须互不相同: {self.names}")

    @classmethod
    def of_size(cls, k: int) -> "Alphabet":
        return cls(size=k, names=tuple(str(i) for i in range(k)))

    @classmethod
    def named(cls, names: Iterable[str]) -> "Alphabet":
        names = tuple(names)
        return cls(size=len(names), names=names)


@dataclass(frozen=True)
class SymbolPrior:
    """符号的自然分布 P"""
    probs: Tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.probs:
            raise ContractViolation("先验分布不能为空")
        if any(p < 0 for p in self.probs):
            raise ContractViolation(f"先验概率必须非负: {self.probs}")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > PRIOR_SUM_TOLERANCE:
            raise ContractViolation(f"先验概率之和必须为 1，实际 {total!r}")

    @property
    def size(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    @classmethod
    def uniform(cls, k: int) -> "SymbolPrior":
        if k < 1:
            raise ContractViolation(f"符号数必须为正，实际 {k}")
        probs = [1.0 / k] * k
        # 修正浮点误差，保证 fsum 精确为 1
        probs[-1] = 1.0 - math.fsum(probs[:-1])
        return cls(tuple(probs))

    @classmethod
    def from_counts(cls, counts: Sequence[float]) -> "SymbolPrior":
        """由符号频数得到经验先验"""
        total = math.fsum(counts)
        if total <= 0:
            raise ContractViolation("频数之和必须为正")
        probs = [c / total for c in counts]
        probs[-1] = max(0.0, 1.0 - math.fsum(probs[:-1]))
        return cls(tuple(probs))


@dataclass(frozen=True, order=True)
class Assignment:
    """长度为 l 的符号序列 S，COP 的决策变量

    比较顺序为符号下标的字典序，供确定性的平局处理使用。
    """
    symbols: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.symbols) < 1:
            raise ContractViolation("赋值长度必须 >= 1")
        if any(s < 0 for s in self.symbols):
            raise ContractViolation(f"符号下标必须非负: {self.symbols}")

    @classmethod
    def of(cls, symbols: Iterable[int]) -> "Assignment":
        return cls(tuple(int(s) for s in symbols))

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[int]:
        return iter(self.symbols)

    def __getitem__(self, index: int) -> int:
        return self.symbols[index]

    def check_alphabet(self, k: int) -> None:
        if any(s >= k for s in self.symbols):
            raise ContractViolation(f"符号下标超出符号表大小 {k}: {self.symbols}")

    def to_list(self) -> list:
        return list(self.symbols)


@dataclass(frozen=True, eq=False)
class ConfidenceGrid:
    """l x k 的逐位置符号概率矩阵 g(X)

    stochastic=False 只用于对齐后未重新按行归一化的矩阵。
    """
    values: np.ndarray
    stochastic: bool = True
    _log_values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ContractViolation(f"置信度矩阵必须是非空二维矩阵，实际形状 {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ContractViolation("置信度矩阵包含非有限值")
        if np.any(values < 0):
            raise ContractViolation("置信度矩阵必须非负")
        if self.stochastic:
            row_sums = values.sum(axis=1)
            if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOLERANCE):
                raise ContractViolation(f"置信度矩阵每行之和必须为 1，实际 {row_sums.tolist()}")
        values.setflags(write=False)
        log_values = np.log(np.maximum(values, EPSILON))
        log_values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_log_values", log_values)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]], stochastic: bool = True) -> "ConfidenceGrid":
        return cls(np.asarray(rows, dtype=float), stochastic=stochastic)

    @property
    def rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def cols(self) -> int:
        return int(self.values.shape[1])

    @property
    def log_values(self) -> np.ndarray:
        """截断到 EPSILON 后的对数置信度"""
        return self._log_values

    def argmax(self) -> Assignment:
        # np.argmax 在并列时取最小下标
        return Assignment.of(np.argmax(self.values, axis=1))

    def to_rows(self) -> list:
        return self.values.tolist()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConfidenceGrid):
            return NotImplemented
        return self.stochastic == other.stochastic and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash((self.values.shape, self.values.tobytes(), self.stochastic))


class ScoreVariant(str, Enum):
    """打分方式，三种都满足单调性"""
    INDEPENDENT_PRODUCT = "independent"
    CONSISTENCY_COUNT = "consistency"
    LEX_CONSISTENCY_THEN_PRODUCT = "lex"

    @property
    def uses_consistency(self) -> bool:
        return self is not ScoreVariant.INDEPENDENT_PRODUCT

    @property
    def uses_product(self) -> bool:
        return self is not ScoreVariant.CONSISTENCY_COUNT

    @classmethod
    def parse(cls, raw: str) -> "ScoreVariant":
        try:
            return cls(str(raw).strip().lower())
        except ValueError:
            allowed = ", ".join(v.value for v in cls)
            raise ContractViolation(f"未知的打分方式 {raw!r}，可选: {allowed}") from None


@dataclass(frozen=True)
class ScoreModel:
    """赋值之间的排序规则"""
    variant: ScoreVariant
    reference_prediction: Optional[Assignment] = None

    def __post_init__(self) -> None:
        if not isinstance(self.variant, ScoreVariant):
            # 非单调的打分方式不被接受
            raise ContractViolation(f"不支持的打分方式: {self.variant!r}")
        if self.variant.uses_consistency and self.reference_prediction is None:
            raise ContractViolation(f"{self.variant.value} 打分需要 reference_prediction")

    @classmethod
    def independent(cls) -> "ScoreModel":
        return cls(ScoreVariant.INDEPENDENT_PRODUCT)

    def check_grid(self, grid: ConfidenceGrid) -> None:
        ref = self.reference_prediction
        if ref is None:
            return
        if len(ref) != grid.rows:
            raise ContractViolation(
                f"reference_prediction 长度 {len(ref)} 与置信度矩阵行数 {grid.rows} 不一致"
            )
        ref.check_alphabet(grid.cols)


@dataclass(frozen=True, order=True)
class ScoreKey:
    """全序打分键：先比 primary（一致性计数），再比 log_secondary（对数乘积置信度）

    数值越大越好。未使用的乘积项记为 -inf，展示值为 0。
    """
    primary: int
    log_secondary: float

    @property
    def secondary(self) -> float:
        return math.exp(self.log_secondary)

    def to_dict(self) -> dict:
        return {"primary": self.primary, "secondary": self.secondary}
