"""
输出格式化模块
表格输出 CSV，结构化记录输出 JSON；日志走 stderr，这里只负责 stdout 和结果文件
"""
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, TextIO, Union


def _cell(value: Any) -> Any:
    # 无穷值写成固定文本
    if isinstance(value, float) and math.isinf(value):
        return "-inf" if value < 0 else "inf"
    return value


class ReportFormatter:
    """结果格式化器"""

    @staticmethod
    def csv_table(rows: Iterable[Dict[str, Any]], columns: Sequence[str]) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({col: _cell(row.get(col, "")) for col in columns})
        return buffer.getvalue()

    @staticmethod
    def json_record(obj: Any) -> str:
        """键排序、缩进 2，输出稳定"""
        return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def emit(text: str, stream: Optional[TextIO] = None) -> None:
    stream = stream or sys.stdout
    stream.write(text)
    stream.flush()


def write_text(path: Union[str, Path], text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
