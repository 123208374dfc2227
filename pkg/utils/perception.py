"""
感知层：合成字形数据与 softmax 分类器

每个符号类对应一个固定的基向量（d 维中的一段 one-hot 块），
加上可选的循环平移和高斯噪声得到字形特征。分类器为多项 softmax 回归，梯度解析计算。
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from models.core import Assignment, ConfidenceGrid, SymbolPrior
from models.errors import ContractViolation, InfeasibleTaskError
from utils.verifiers import (
    BOARD_SIZE,
    ChessPositions,
    TaskKind,
    Verifier,
    number_to_digits,
    verify_chess,
)

logger = logging.getLogger(__name__)

# chess 任务重采样的最大次数
MAX_CHESS_ATTEMPTS = 10_000


@dataclass(frozen=True)
class GlyphConfig:
    feature_dim: int = 16
    noise_sigma: float = 0.3
    shift_range: int = 0
    seed: int = 0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.feature_dim < 1:
            raise ContractViolation(f"feature_dim 必须为正，实际 {self.feature_dim}")
        if self.noise_sigma < 0:
            raise ContractViolation(f"noise_sigma 必须非负，实际 {self.noise_sigma}")
        if self.shift_range < 0:
            raise ContractViolation(f"shift_range 必须非负，实际 {self.shift_range}")

    def check_symbols(self, k: int) -> None:
        if self.feature_dim < k:
            raise ContractViolation(f"feature_dim={self.feature_dim} 小于符号数 k={k}")


@dataclass(frozen=True, eq=False)
class Sample:
    """一条输入序列；truth 只用于评估，不进入训练损失"""
    features: np.ndarray
    truth: Assignment
    positions: Optional[ChessPositions] = None

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=float, copy=True)
        if features.ndim != 2:
            raise ContractViolation(f"features 必须是 l x d 矩阵，实际形状 {features.shape}")
        if features.shape[0] != len(self.truth):
            raise ContractViolation(f"features 行数 {features.shape[0]} 与真值长度 {len(self.truth)} 不一致")
        features.setflags(write=False)
        object.__setattr__(self, "features", features)

    @property
    def length(self) -> int:
        return int(self.features.shape[0])

    def to_record(self) -> dict:
        record = {"features": self.features.tolist(), "truth": self.truth.to_list()}
        if self.positions is not None:
            record["positions"] = self.positions.to_list()
        return record

    @classmethod
    def from_record(cls, record: dict) -> "Sample":
        positions = record.get("positions")
        return cls(
            features=np.asarray(record["features"], dtype=float),
            truth=Assignment.of(record["truth"]),
            positions=ChessPositions.of(positions) if positions is not None else None,
        )


@dataclass(frozen=True)
class Dataset:
    """样本集合及其真值符号的经验先验"""
    samples: Tuple[Sample, ...]
    verifier: Verifier
    empirical_prior: SymbolPrior = field(default=None)

    def __post_init__(self) -> None:
        if not self.samples:
            raise ContractViolation("数据集不能为空")
        if self.empirical_prior is None:
            counts = np.zeros(self.verifier.num_symbols)
            for sample in self.samples:
                sample.truth.check_alphabet(self.verifier.num_symbols)
                for s in sample.truth:
                    counts[s] += 1
            object.__setattr__(self, "empirical_prior", SymbolPrior.from_counts(counts.tolist()))

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    def __getitem__(self, index: int) -> Sample:
        return self.samples[index]

    @property
    def length(self) -> int:
        return self.samples[0].length

    @property
    def feature_dim(self) -> int:
        return int(self.samples[0].features.shape[1])

    def features_array(self) -> np.ndarray:
        """形状 (n, l, d)"""
        return np.stack([s.features for s in self.samples])

    def truths(self) -> List[Assignment]:
        return [s.truth for s in self.samples]


# ============================================
# 字形生成
# ============================================

def glyph_prototypes(k: int, glyph: GlyphConfig) -> np.ndarray:
    """k x d 的类别基向量：第 j 类在第 j 段 d//k 维上取 scale"""
    glyph.check_symbols(k)
    block = glyph.feature_dim // k
    prototypes = np.zeros((k, glyph.feature_dim))
    for j in range(k):
        prototypes[j, j * block:(j + 1) * block] = glyph.scale
    return prototypes


def render_glyphs(
    symbols: Sequence[int],
    prototypes: np.ndarray,
    glyph: GlyphConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    rows = []
    for s in symbols:
        vec = prototypes[s].copy()
        if glyph.shift_range > 0:
            vec = np.roll(vec, int(rng.integers(-glyph.shift_range, glyph.shift_range + 1)))
        if glyph.noise_sigma > 0:
            vec = vec + rng.normal(0.0, glyph.noise_sigma, size=vec.shape)
        rows.append(vec)
    return np.stack(rows)


def _sample_addition(verifier: Verifier, rng: np.random.Generator) -> Tuple[List[int], None]:
    base, digits = verifier.base, verifier.num_digits
    limit = base ** digits
    a = int(rng.integers(0, limit))
    b = int(rng.integers(0, limit))
    truth = (
        number_to_digits(a, digits, base)
        + number_to_digits(b, digits, base)
        + number_to_digits(a + b, 2 * digits, base)
    )
    return truth, None


def _sample_sort(verifier: Verifier, rng: np.random.Generator) -> Tuple[List[int], None]:
    chosen = rng.choice(verifier.num_symbols, size=verifier.sequence_length, replace=False)
    return sorted(int(s) for s in chosen), None


def _sample_alldiff(verifier: Verifier, rng: np.random.Generator) -> Tuple[List[int], None]:
    chosen = rng.permutation(verifier.num_symbols)[:verifier.sequence_length]
    return [int(s) for s in chosen], None


def match_run_counts(k: int, length: int) -> List[int]:
    """可用的段数：能整除长度、不超过符号数、至少 2 段；没有时退化为单段"""
    counts = [r for r in range(2, min(k, length) + 1) if length % r == 0]
    return counts or [1]


def _sample_match(verifier: Verifier, rng: np.random.Generator) -> Tuple[List[int], None]:
    k, length = verifier.num_symbols, verifier.sequence_length
    runs = int(rng.choice(match_run_counts(k, length)))
    run_length = length // runs
    symbols = sorted(int(s) for s in rng.choice(k, size=runs, replace=False))
    return [s for s in symbols for _ in range(run_length)], None


def random_board(length: int, rng: np.random.Generator) -> ChessPositions:
    """length 个互不重叠的棋盘坐标"""
    if not 1 <= length <= BOARD_SIZE * BOARD_SIZE:
        raise ContractViolation(f"棋子个数必须在 1..{BOARD_SIZE * BOARD_SIZE} 之间，实际 {length}")
    cells = rng.choice(BOARD_SIZE * BOARD_SIZE, size=length, replace=False)
    return ChessPositions.of([(int(c) % BOARD_SIZE, int(c) // BOARD_SIZE) for c in cells])


def _sample_chess(verifier: Verifier, rng: np.random.Generator) -> Tuple[List[int], ChessPositions]:
    length, pieces = verifier.sequence_length, verifier.num_symbols
    for _ in range(MAX_CHESS_ATTEMPTS):
        positions = random_board(length, rng)
        types = [int(t) for t in rng.integers(0, pieces, size=length)]
        if verify_chess(types, positions):
            return types, positions
    raise InfeasibleTaskError(
        f"chess 任务在 {MAX_CHESS_ATTEMPTS} 次重采样内未找到满足约束的棋盘 (pieces={pieces}, len={length})"
    )


_SAMPLERS = {
    TaskKind.ADDITION: _sample_addition,
    TaskKind.SORT: _sample_sort,
    TaskKind.ALLDIFF: _sample_alldiff,
    TaskKind.MATCH: _sample_match,
    TaskKind.CHESS: _sample_chess,
}


def check_feasible(verifier: Verifier) -> None:
    """在生成前排除无解的任务参数"""
    k, length = verifier.num_symbols, verifier.sequence_length
    if verifier.kind in (TaskKind.SORT, TaskKind.ALLDIFF) and length > k:
        raise InfeasibleTaskError(
            f"{verifier.name} 任务无解：长度 {length} 超过符号数 {k}"
        )
    if verifier.kind is TaskKind.CHESS and length < 2:
        raise InfeasibleTaskError("chess 任务至少需要 2 个棋子才可能存在攻击关系")


def gen_dataset(
    verifier: Verifier,
    n: int,
    glyph: GlyphConfig,
    seed: Optional[int] = None,
) -> Dataset:
    """
    生成 n 条满足验证函数的样本，相同种子得到相同数据集

    Args:
        verifier: 任务验证函数，决定序列长度与符号数
        n: 样本数
        glyph: 字形渲染配置
        seed: 随机种子，默认使用 glyph.seed

    Returns:
        Dataset: 含特征、真值（及 chess 坐标）的数据集
    """
    if n < 1:
        raise ContractViolation(f"样本数必须为正，实际 {n}")
    check_feasible(verifier)
    k = verifier.num_symbols
    prototypes = glyph_prototypes(k, glyph)
    rng = np.random.default_rng(glyph.seed if seed is None else seed)
    sampler = _SAMPLERS[verifier.kind]

    samples = []
    for _ in range(n):
        symbols, positions = sampler(verifier, rng)
        truth = Assignment.of(symbols)
        if not verifier.bind(positions)(truth):
            raise InfeasibleTaskError(f"生成的真值未通过验证: {truth.symbols}")
        features = render_glyphs(truth.symbols, prototypes, glyph, rng)
        samples.append(Sample(features=features, truth=truth, positions=positions))

    dataset = Dataset(samples=tuple(samples), verifier=verifier)
    logger.info(
        f"已生成数据集: task={verifier.name}, n={n}, k={k}, "
        f"l={verifier.sequence_length}, sigma={glyph.noise_sigma:.3f}"
    )
    return dataset


def write_dataset(dataset: Dataset, path: Union[str, Path]) -> None:
    """每行一条 JSON 记录 {features, truth[, positions]}"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for sample in dataset:
            f.write(json.dumps(sample.to_record(), separators=(",", ":")))
            f.write("\n")


def read_dataset(path: Union[str, Path], verifier: Verifier) -> Dataset:
    samples = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                samples.append(Sample.from_record(json.loads(line)))
            except (KeyError, ValueError, TypeError) as e:
                raise ContractViolation(f"{path}:{line_no} 记录格式错误: {e}") from e
    if not samples:
        raise ContractViolation(f"数据文件为空: {path}")
    verifier.check_length(samples[0].length)
    return Dataset(samples=tuple(samples), verifier=verifier)


# ============================================
# softmax 分类器
# ============================================

@dataclass(frozen=True, eq=False)
class SoftmaxModel:
    """逐位置 softmax(W x + b)，weights 为 k x d"""
    weights: np.ndarray
    bias: np.ndarray
    rng_seed: int = 0

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=float, copy=True)
        bias = np.array(self.bias, dtype=float, copy=True)
        if weights.ndim != 2 or bias.shape != (weights.shape[0],):
            raise ContractViolation(f"参数形状不一致: weights {weights.shape}, bias {bias.shape}")
        weights.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", bias)

    @property
    def num_symbols(self) -> int:
        return int(self.weights.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.weights.shape[1])

    @classmethod
    def initialize(cls, k: int, d: int, seed: int = 0, scale: float = 0.01) -> "SoftmaxModel":
        """scale 为 0 时得到全零模型，所有位置的输出都是均匀分布"""
        if scale < 0:
            raise ContractViolation(f"初始化标准差必须 >= 0，实际 {scale}")
        rng = np.random.default_rng(seed)
        return cls(weights=rng.normal(0.0, scale, size=(k, d)), bias=np.zeros(k), rng_seed=seed)

    @classmethod
    def zeros(cls, k: int, d: int) -> "SoftmaxModel":
        return cls(weights=np.zeros((k, d)), bias=np.zeros(k))

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias.tolist(), "rng_seed": self.rng_seed}

    @classmethod
    def from_dict(cls, data: dict) -> "SoftmaxModel":
        return cls(
            weights=np.asarray(data["weights"], dtype=float),
            bias=np.asarray(data["bias"], dtype=float),
            rng_seed=int(data.get("rng_seed", 0)),
        )


def save_model(model: SoftmaxModel, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model.to_dict(), separators=(",", ":")), encoding="utf-8")


def load_model(path: Union[str, Path]) -> SoftmaxModel:
    return SoftmaxModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def predict_proba(model: SoftmaxModel, features: np.ndarray) -> np.ndarray:
    """features 形状 (..., d)，返回 (..., k)"""
    if features.shape[-1] != model.feature_dim:
        raise ContractViolation(f"特征维度 {features.shape[-1]} 与模型维度 {model.feature_dim} 不一致")
    return softmax(features @ model.weights.T + model.bias)


def forward(model: SoftmaxModel, sample: Union[Sample, np.ndarray]) -> ConfidenceGrid:
    features = sample.features if isinstance(sample, Sample) else np.asarray(sample, dtype=float)
    return ConfidenceGrid(predict_proba(model, features))


def cross_entropy(model: SoftmaxModel, features: np.ndarray, labels: np.ndarray) -> float:
    """features (N, d)，labels (N,) 上的平均交叉熵"""
    probs = predict_proba(model, features)
    picked = probs[np.arange(labels.shape[0]), labels]
    return float(-np.mean(np.log(np.maximum(picked, 1e-300))))


def loss_and_gradient(
    model: SoftmaxModel,
    features: np.ndarray,
    labels: np.ndarray,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """返回 (loss, dW, db)，梯度为 (softmax - onehot) ⊗ x 的平均"""
    n = labels.shape[0]
    probs = predict_proba(model, features)
    picked = probs[np.arange(n), labels]
    loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    return loss, dlogits.T @ features, dlogits.sum(axis=0)


def _stack_batch(batch: Sequence[Tuple[np.ndarray, Assignment]]) -> Tuple[np.ndarray, np.ndarray]:
    features = np.concatenate([np.asarray(f, dtype=float) for f, _ in batch], axis=0)
    labels = np.fromiter((s for _, label in batch for s in label.symbols), dtype=np.int64)
    return features, labels


def grad_step(
    model: SoftmaxModel,
    batch: Sequence[Tuple[np.ndarray, Assignment]],
    lr: float,
) -> SoftmaxModel:
    """对伪标签上的平均交叉熵做一步梯度下降，返回新模型"""
    if lr <= 0:
        raise ContractViolation(f"学习率必须为正，实际 {lr}")
    if not batch:
        return model
    features, labels = _stack_batch(batch)
    if labels.size and labels.max() >= model.num_symbols:
        raise ContractViolation(f"伪标签超出符号数 {model.num_symbols}")
    _, d_weights, d_bias = loss_and_gradient(model, features, labels)
    return SoftmaxModel(
        weights=model.weights - lr * d_weights,
        bias=model.bias - lr * d_bias,
        rng_seed=model.rng_seed,
    )


def predict(model: SoftmaxModel, dataset: Dataset) -> List[Assignment]:
    """逐位置 argmax"""
    probs = predict_proba(model, dataset.features_array())
    return [Assignment.of(row) for row in np.argmax(probs, axis=-1)]


def fit_supervised(model: SoftmaxModel, dataset: Dataset, epochs: int, lr: float) -> SoftmaxModel:
    """用真值做全批量训练，作为可分性的参照上限"""
    batch = [(s.features, s.truth) for s in dataset]
    for _ in range(epochs):
        model = grad_step(model, batch, lr)
    return model
