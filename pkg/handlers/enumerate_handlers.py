"""
枚举调试命令：enumerate

打印置信度矩阵上的赋值排序（DCS 或 --oracle 穷举），给出 --task 时附带验证结果列。
"""
import argparse
import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np

from config.settings import ORACLE_MAX_SPACE, SEED
from models.core import Assignment, ConfidenceGrid, ScoreModel, ScoreVariant
from models.errors import ConfigurationError
from ui.messages import ReportFormatter, emit
from utils.dcs import enumerate_ranking
from utils.oracle import brute_force_ranking
from utils.perception import random_board
from utils.verifiers import TaskKind, Verifier

from handlers.task_args import SCORE_CHOICES, add_task_arguments, verifier_from_args

logger = logging.getLogger(__name__)

RANKING_COLUMNS = ("rank", "assignment", "primary", "secondary")


def random_grid(rows: int, cols: int, seed: int) -> ConfidenceGrid:
    """每行取自 Dirichlet(1, ..., 1)"""
    rng = np.random.default_rng(seed)
    return ConfidenceGrid(rng.dirichlet(np.ones(cols), size=rows))


def load_grid(path: str) -> ConfidenceGrid:
    try:
        rows = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"置信度矩阵文件不是合法 JSON: {e}") from e
    return ConfidenceGrid.from_rows(rows)


def parse_assignment(raw: str) -> Assignment:
    try:
        return Assignment.of(int(s) for s in raw.split(","))
    except ValueError:
        raise ConfigurationError(f"无法解析赋值 {raw!r}，应为逗号分隔的符号下标") from None


def _bound_verifier(args: argparse.Namespace, grid: ConfidenceGrid) -> Optional[Verifier]:
    if not args.task:
        return None
    verifier = verifier_from_args(args)
    if verifier.sequence_length != grid.rows or verifier.num_symbols != grid.cols:
        raise ConfigurationError(
            f"{verifier.name} 任务需要 {verifier.sequence_length} x {verifier.num_symbols} 的矩阵，"
            f"实际 {grid.rows} x {grid.cols}"
        )
    if verifier.kind is TaskKind.CHESS:
        verifier = verifier.bind(random_board(verifier.sequence_length, np.random.default_rng(args.seed)))
    return verifier


def cmd_enumerate(args: argparse.Namespace) -> int:
    if args.grid:
        grid = load_grid(args.grid)
    else:
        if args.rows is None or args.cols is None:
            raise ConfigurationError("需要 --grid 或同时给出 --rows 与 --cols")
        grid = random_grid(args.rows, args.cols, args.seed)

    variant = ScoreVariant.parse(args.score)
    reference = None
    if variant.uses_consistency:
        reference = parse_assignment(args.reference) if args.reference else grid.argmax()
    model = ScoreModel(variant, reference)
    verifier = _bound_verifier(args, grid)

    if args.oracle:
        ranking = brute_force_ranking(grid, model, max_space=args.max_space)
        if args.limit:
            ranking = ranking[:args.limit]
    else:
        ranking = enumerate_ranking(grid, model, limit=args.limit or None)

    columns = RANKING_COLUMNS + (("verified",) if verifier is not None else ())
    rows = []
    for rank, (a, key) in enumerate(ranking, start=1):
        row = {
            "rank": rank,
            "assignment": " ".join(str(s) for s in a.symbols),
            "primary": key.primary,
            "secondary": key.secondary,
        }
        if verifier is not None:
            row["verified"] = int(bool(verifier(a)))
        rows.append(row)
    logger.debug(f"枚举完成: {len(rows)} 个赋值, oracle={args.oracle}")
    emit(ReportFormatter.csv_table(rows, columns))
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("enumerate", help="打印赋值的打分排序（调试用）")
    add_task_arguments(parser, required=False)
    parser.add_argument("--grid", default=None, help="JSON 文件，l 行 k 列的概率矩阵")
    parser.add_argument("--rows", type=int, default=None, help="随机矩阵的行数 l")
    parser.add_argument("--cols", type=int, default=None, help="随机矩阵的列数 k")
    parser.add_argument("--seed", type=int, default=SEED)
    parser.add_argument("--score", choices=SCORE_CHOICES, default="independent")
    parser.add_argument("--reference", default=None, help="一致性打分的参照预测，如 0,1,1")
    parser.add_argument("--limit", type=int, default=20, help="输出前 N 个，0 表示全部")
    parser.add_argument("--oracle", action="store_true", help="使用穷举排序代替 DCS")
    parser.add_argument("--max-space", type=int, default=ORACLE_MAX_SPACE)
    parser.set_defaults(handler=cmd_enumerate)
