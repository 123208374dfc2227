"""
验证函数 V_KB: S -> {True, False}

加法、排序、匹配、国际象棋四个任务的验证程序逐行对应原始实现，
另有全不同（all-different）任务作为对称性最强的测试用验证函数。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Optional, Sequence, Tuple

from models.core import Alphabet, Assignment
from models.errors import ConfigurationError, ContractViolation

logger = logging.getLogger(__name__)

# 棋子类型按名称字典序编号
PIECE_NAMES: Tuple[str, ...] = ("bishop", "king", "knight", "pawn", "queen", "rook")
BISHOP, KING, KNIGHT, PAWN, QUEEN, ROOK = range(6)

BOARD_SIZE = 8


# ============================================
# 加法
# ============================================

def digits_to_number(digits: Sequence[int], base: int) -> int:
    """高位在前的数位序列转为整数"""
    number = 0
    for d in digits:
        number *= base
        number += d
    return number


def number_to_digits(number: int, digit_size: int, base: int) -> list:
    """整数转为定长、高位在前的数位序列（超出位数的高位被截断）"""
    digits = []
    for _ in range(digit_size):
        digits.append(number % base)
        number //= base
    return digits[::-1]


def verify_addition(a: Sequence[int], base: int, num_digits: int) -> bool:
    """前两段各 num_digits 位为加数，其余为和"""
    nums = list(a)
    nums1 = nums[:num_digits]
    nums2 = nums[num_digits:num_digits * 2]
    nums3 = nums[num_digits * 2:]
    return (
        digits_to_number(nums1, base) + digits_to_number(nums2, base)
        == digits_to_number(nums3, base)
    )


# ============================================
# 排序
# ============================================

def verify_sort(a: Sequence[int]) -> bool:
    """严格递增"""
    nums = list(a)
    for i in range(len(nums) - 1):
        if nums[i + 1] <= nums[i]:
            return False
    return True


# ============================================
# 匹配
# ============================================

def verify_match(a: Sequence[int]) -> bool:
    """非降序，且各段相同符号的连续长度相等（单段时恒为 True）"""
    nums = list(a)
    count: Optional[int] = None
    cur_count = 0
    for i in range(len(nums)):
        if i > 0 and nums[i] < nums[i - 1]:
            return False
        elif i > 0 and nums[i] > nums[i - 1]:
            if count is None:
                count = cur_count
            elif count != cur_count:
                return False
            cur_count = 0
        cur_count += 1
    return count is None or cur_count == count


# ============================================
# 国际象棋
# ============================================

def _straight_attack(x1: int, y1: int, x2: int, y2: int) -> bool:
    return x1 == x2 or y1 == y2


def _diagonal_attack(x1: int, y1: int, x2: int, y2: int) -> bool:
    return abs(x1 - x2) == abs(y1 - y2)


def _king_attack(x1: int, y1: int, x2: int, y2: int) -> bool:
    return abs(x1 - x2) <= 1 and abs(y1 - y2) <= 1


def _knight_attack(x1: int, y1: int, x2: int, y2: int) -> bool:
    return (abs(x1 - x2) == 2 and abs(y1 - y2) == 1) or (abs(x1 - x2) == 1 and abs(y1 - y2) == 2)


def _pawn_attack(x1: int, y1: int, x2: int, y2: int) -> bool:
    # 白兵只斜向前吃子
    return abs(x1 - x2) == 1 and y2 - y1 == 1


def _queen_attack(x1: int, y1: int, x2: int, y2: int) -> bool:
    return _straight_attack(x1, y1, x2, y2) or _diagonal_attack(x1, y1, x2, y2)


_ATTACKS: Dict[int, Callable[[int, int, int, int], bool]] = {
    BISHOP: _diagonal_attack,
    KING: _king_attack,
    KNIGHT: _knight_attack,
    PAWN: _pawn_attack,
    QUEEN: _queen_attack,
    ROOK: _straight_attack,
}


def attack(ptype: int, x1: int, y1: int, x2: int, y2: int) -> bool:
    """位于 (x1, y1) 的 ptype 棋子能否攻击 (x2, y2)；未知类型返回 False"""
    fn = _ATTACKS.get(ptype)
    if fn is None:
        return False
    return fn(x1, y1, x2, y2)


@dataclass(frozen=True)
class ChessPositions:
    """每个棋子槽位的棋盘坐标（已知输入，只预测棋子类型）"""
    coords: Tuple[Tuple[int, int], ...]

    @classmethod
    def of(cls, coords: Sequence[Sequence[int]]) -> "ChessPositions":
        return cls(tuple((int(x), int(y)) for x, y in coords))

    def __len__(self) -> int:
        return len(self.coords)

    def to_list(self) -> list:
        return [list(c) for c in self.coords]


def verify_chess(a: Sequence[int], pos: ChessPositions) -> bool:
    """存在 i < j 使第 i 个棋子攻击第 j 个棋子（只检查 i -> j 方向）"""
    types = list(a)
    if len(types) != len(pos.coords):
        raise ContractViolation(f"棋子数 {len(types)} 与坐标数 {len(pos.coords)} 不一致")
    coords = pos.coords
    for i in range(len(types)):
        for j in range(i + 1, len(types)):
            if attack(types[i], coords[i][0], coords[i][1], coords[j][0], coords[j][1]):
                return True
    return False


# ============================================
# 全不同
# ============================================

def verify_all_different(a: Sequence[int]) -> bool:
    nums = list(a)
    return len(set(nums)) == len(nums)


# ============================================
# 验证函数注册表
# ============================================

class TaskKind(str, Enum):
    ADDITION = "addition"
    SORT = "sort"
    MATCH = "match"
    CHESS = "chess"
    ALLDIFF = "alldiff"

    @classmethod
    def parse(cls, raw: str) -> "TaskKind":
        try:
            return cls(str(raw).strip().lower())
        except ValueError:
            allowed = ", ".join(t.value for t in cls)
            raise ConfigurationError(f"未知任务 {raw!r}，可选: {allowed}") from None


@dataclass(frozen=True)
class Verifier:
    """任务的验证函数，定义在固定长度的赋值上

    num_symbols 为符号表大小 k，sequence_length 为序列长度 l。
    chess 任务的坐标是逐样本输入，通过 bind() 绑定后才能调用。
    """
    kind: TaskKind
    num_symbols: int
    sequence_length: int
    base: int = 10
    num_digits: int = 1
    positions: Optional[ChessPositions] = None

    def __post_init__(self) -> None:
        if self.num_symbols < 2:
            raise ConfigurationError(f"符号数必须 >= 2，实际 {self.num_symbols}")
        if self.sequence_length < 1:
            raise ConfigurationError(f"序列长度必须为正，实际 {self.sequence_length}")
        if self.positions is not None and len(self.positions) != self.sequence_length:
            raise ConfigurationError(
                f"坐标数 {len(self.positions)} 与序列长度 {self.sequence_length} 不一致"
            )

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def alphabet(self) -> Alphabet:
        """任务的符号表；chess 使用棋子名，其余任务用符号下标"""
        if self.kind is TaskKind.CHESS:
            return Alphabet.named(PIECE_NAMES[:self.num_symbols])
        return Alphabet.of_size(self.num_symbols)

    def bind(self, positions: Optional[ChessPositions]) -> "Verifier":
        """绑定逐样本输入（目前只有 chess 的坐标）"""
        if self.kind is not TaskKind.CHESS:
            return self
        if positions is None:
            raise ContractViolation("chess 任务需要棋子坐标")
        return Verifier(
            kind=self.kind,
            num_symbols=self.num_symbols,
            sequence_length=self.sequence_length,
            positions=positions,
        )

    @property
    def length_generic(self) -> bool:
        """sort / match / alldiff 的验证函数对任意长度都有定义"""
        return self.kind in (TaskKind.SORT, TaskKind.MATCH, TaskKind.ALLDIFF)

    def resized(self, length: int) -> "Verifier":
        if length == self.sequence_length:
            return self
        if not self.length_generic:
            raise ConfigurationError(f"{self.name} 任务的序列长度固定为 {self.sequence_length}")
        return Verifier(self.kind, num_symbols=self.num_symbols, sequence_length=length)

    def check_length(self, length: int) -> None:
        if length != self.sequence_length:
            raise ConfigurationError(
                f"{self.name} 任务的序列长度为 {self.sequence_length}，实际 {length}"
            )

    def __call__(self, a: Assignment) -> bool:
        symbols = a.symbols if isinstance(a, Assignment) else tuple(a)
        if len(symbols) != self.sequence_length:
            raise ContractViolation(
                f"{self.name} 任务需要长度 {self.sequence_length} 的赋值，实际 {len(symbols)}"
            )
        if self.kind is TaskKind.ADDITION:
            return verify_addition(symbols, self.base, self.num_digits)
        if self.kind is TaskKind.SORT:
            return verify_sort(symbols)
        if self.kind is TaskKind.MATCH:
            return verify_match(symbols)
        if self.kind is TaskKind.ALLDIFF:
            return verify_all_different(symbols)
        if self.positions is None:
            raise ContractViolation("chess 验证函数未绑定棋子坐标")
        return verify_chess(symbols, self.positions)

    def describe(self) -> dict:
        info = {"task": self.name, "k": self.num_symbols, "length": self.sequence_length}
        if self.kind is TaskKind.ADDITION:
            info.update({"base": self.base, "digits": self.num_digits})
        return info


def build_verifier(
    task: str,
    *,
    base: int = 10,
    digits: int = 1,
    k: Optional[int] = None,
    length: Optional[int] = None,
    pieces: Optional[int] = None,
) -> Verifier:
    """按任务名构造验证函数

    addition: k = base，l = 4 * digits
    sort / match / alldiff: 需要 k 与 length
    chess: k = pieces（取前 pieces 种棋子），需要 length
    """
    kind = TaskKind.parse(task)
    if kind is TaskKind.ADDITION:
        if base < 2:
            raise ConfigurationError(f"加法进制必须 >= 2，实际 {base}")
        if digits < 1:
            raise ConfigurationError(f"加数位数必须 >= 1，实际 {digits}")
        return Verifier(kind, num_symbols=base, sequence_length=4 * digits, base=base, num_digits=digits)
    if kind is TaskKind.CHESS:
        pieces = len(PIECE_NAMES) if pieces is None else pieces
        if not 2 <= pieces <= len(PIECE_NAMES):
            raise ConfigurationError(f"棋子种类数必须在 2..{len(PIECE_NAMES)} 之间，实际 {pieces}")
        if length is None:
            raise ConfigurationError("chess 任务需要 --len（棋子个数）")
        if length > BOARD_SIZE * BOARD_SIZE:
            raise ConfigurationError(f"棋子个数不能超过 {BOARD_SIZE * BOARD_SIZE}")
        return Verifier(kind, num_symbols=pieces, sequence_length=length)
    if k is None or length is None:
        raise ConfigurationError(f"{kind.value} 任务需要 --k 与 --len")
    return Verifier(kind, num_symbols=k, sequence_length=length)
