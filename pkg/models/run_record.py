"""
运行记录模型

一次 train 运行的完整可复现描述：参数快照、输入哈希、每轮统计、最终指标、种子和时间戳。
"""
import hashlib
import json
import logging
import platform
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from models.errors import ContractViolation

logger = logging.getLogger(__name__)

# 不参与复现比较的计时列
TIMING_COLUMNS = ("wall_time_s",)


def content_hash(*parts: bytes) -> str:
    """sha256(len || part ...)，与 git 对象哈希一样先写长度再写内容"""
    digest = hashlib.sha256()
    for part in parts:
        digest.update(f"{len(part)}\0".encode("ascii"))
        digest.update(part)
    return digest.hexdigest()


def hash_inputs(args: Dict[str, Any], data_bytes: Optional[bytes] = None) -> str:
    payload = json.dumps(args, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return content_hash(payload, data_bytes or b"")


def _now() -> str:
    return datetime.now().isoformat(timespec="seconds")


def environment_info() -> Dict[str, Any]:
    """运行环境信息，psutil 不可用时只记录平台信息"""
    info = {
        "python": platform.python_version(),
        "platform": f"{platform.system()} {platform.release()}",
        "numpy": np.__version__,
    }
    try:
        import psutil

        process = psutil.Process()
        info["rss_mb"] = round(process.memory_info().rss / 1024 / 1024, 1)
        info["cpu_count"] = psutil.cpu_count(logical=True)
    except Exception as e:
        logger.warning(f"获取系统信息失败: {e}")
    return info


@dataclass
class RunRecord:
    command: str
    args: Dict[str, Any]
    seed: int
    input_hash: str
    epoch_stats: List[Dict[str, Any]] = field(default_factory=list)
    final_metrics: Dict[str, Any] = field(default_factory=dict)
    run_id: str = ""
    created_at: Optional[str] = field(default_factory=_now)
    finished_at: Optional[str] = None
    environment: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        # 同一命令、同一输入得到同一个 run_id
        if not self.run_id:
            self.run_id = content_hash(self.command.encode("utf-8"), self.input_hash.encode("utf-8"))[:12]

    def finish(
        self,
        epoch_stats: List[Dict[str, Any]],
        final_metrics: Dict[str, Any],
        stamp: bool = True,
    ) -> "RunRecord":
        """
        写入统计与指标

        Args:
            epoch_stats: 每轮统计行
            final_metrics: 最终评估指标
            stamp: 为 False 时不记录时间戳与运行环境，记录文件可逐字节复现

        Returns:
            RunRecord: self
        """
        self.epoch_stats = [dict(row) for row in epoch_stats]
        self.final_metrics = dict(final_metrics)
        if stamp:
            self.finished_at = _now()
            self.environment = environment_info()
        else:
            self.created_at = None
            self.finished_at = None
            self.environment = {}
        return self

    def comparable(self) -> Dict[str, Any]:
        """复现比较的内容：去掉时间戳、环境和计时列"""
        return {
            "args": self.args,
            "seed": self.seed,
            "input_hash": self.input_hash,
            "epoch_stats": [
                {k: v for k, v in row.items() if k not in TIMING_COLUMNS} for row in self.epoch_stats
            ],
            "final_metrics": self.final_metrics,
        }

    def matches(self, other: "RunRecord") -> bool:
        return self.comparable() == other.comparable()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunRecord":
        try:
            return cls(
                command=data["command"],
                args=dict(data["args"]),
                seed=int(data["seed"]),
                input_hash=data["input_hash"],
                epoch_stats=list(data.get("epoch_stats", [])),
                final_metrics=dict(data.get("final_metrics", {})),
                run_id=data.get("run_id") or "",
                created_at=data.get("created_at"),
                finished_at=data.get("finished_at"),
                environment=dict(data.get("environment", {})),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ContractViolation(f"运行记录格式错误: {e}") from e

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ContractViolation(f"运行记录不是合法 JSON: {e}") from e
        return cls.from_dict(data)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json(), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunRecord":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
