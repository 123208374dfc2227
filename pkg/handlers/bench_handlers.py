"""
基准命令：bench

沿一个参数轴（addition 的进制、sort 的长度、match/alldiff 的符号数、chess 的棋子种类数）
和若干种子重复训练，输出一张 CSV 表。
"""
import argparse
import logging
import time

from models.errors import ConfigurationError
from ui.messages import ReportFormatter, emit, write_text
from utils.verifiers import TaskKind

from handlers.task_args import (
    add_glyph_arguments, add_seed_argument, add_solver_arguments, add_task_arguments, parse_range,
)
from handlers.train_handlers import add_train_arguments, run_training, training_params

logger = logging.getLogger(__name__)

BENCH_COLUMNS = (
    "task", "param", "seed", "accuracy", "accuracy_ttc", "mean_rank_K", "verifications_per_epoch", "wall_time_s",
)

# 任务 -> (扫描参数名, 对应的训练描述字段)
SWEEP_AXES = {
    TaskKind.ADDITION.value: ("bases", "base"),
    TaskKind.SORT.value: ("lens", "length"),
    TaskKind.MATCH.value: ("ks", "k"),
    TaskKind.ALLDIFF.value: ("ks", "k"),
    TaskKind.CHESS.value: ("pieces", "pieces"),
}


def sweep_values(args: argparse.Namespace):
    flag, field = SWEEP_AXES[args.task]
    raw = getattr(args, flag)
    if raw is None:
        raise ConfigurationError(f"{args.task} 任务的 bench 需要 --{flag}")
    return field, parse_range(raw)


def cmd_bench(args: argparse.Namespace) -> int:
    if args.seeds < 1:
        raise ConfigurationError(f"--seeds 必须 >= 1，实际 {args.seeds}")
    field, values = sweep_values(args)
    args.pieces = None
    base_params = training_params(args)

    rows = []
    for value in values:
        for offset in range(args.seeds):
            params = dict(base_params, **{field: value, "seed": args.seed + offset})
            started = time.perf_counter()
            outcome = run_training(params, threads=args.threads, record_timing=not args.no_timing)
            elapsed = time.perf_counter() - started if not args.no_timing else 0.0
            last = outcome.history[-1]
            rows.append({
                "task": args.task,
                "param": value,
                "seed": params["seed"],
                "accuracy": outcome.metrics.raw_accuracy,
                "accuracy_ttc": outcome.metrics.ttc_accuracy,
                "mean_rank_K": last.mean_rank_K,
                "verifications_per_epoch": last.mean_verifications * len(outcome.dataset),
                "wall_time_s": elapsed,
            })
            logger.info(f"bench {args.task} {field}={value} seed={params['seed']} 完成")

    text = ReportFormatter.csv_table(rows, BENCH_COLUMNS)
    if args.out:
        write_text(args.out, text)
    emit(text)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("bench", help="沿参数轴和种子重复训练，输出汇总表")
    add_task_arguments(parser, include_pieces=False)
    add_glyph_arguments(parser)
    add_seed_argument(parser)
    add_solver_arguments(parser)
    add_train_arguments(parser)
    group = parser.add_argument_group("扫描参数（'a..b' 或逗号分隔）")
    group.add_argument("--bases", default=None, help="addition 的进制")
    group.add_argument("--lens", default=None, help="sort 的序列长度")
    group.add_argument("--ks", default=None, help="match / alldiff 的符号数")
    group.add_argument("--pieces", default=None, help="chess 的棋子种类数")
    parser.add_argument("--seeds", type=int, default=1, help="每个参数值重复的种子数（从 --seed 起）")
    parser.add_argument("--out", default=None, help="同时写入的 CSV 文件")
    parser.set_defaults(handler=cmd_bench)
