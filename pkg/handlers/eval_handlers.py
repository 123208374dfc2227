"""
评估命令：eval
"""
import argparse
import logging

from models.core import ScoreVariant
from ui.messages import ReportFormatter, emit, write_text
from utils.perception import load_model
from utils.trainer import EvalMetrics, evaluate

from handlers.task_args import (
    add_glyph_arguments, add_seed_argument, add_solver_arguments, add_task_arguments, load_or_generate,
    task_group, verifier_from_args,
)

logger = logging.getLogger(__name__)


def cmd_eval(args: argparse.Namespace) -> int:
    """原始准确率、TTC 准确率与对称性调整后的准确率，CSV 输出到 stdout"""
    verifier = verifier_from_args(args)
    model = load_model(args.model)
    dataset = load_or_generate(args, verifier)
    metrics = evaluate(
        model,
        dataset,
        verifier,
        group=task_group(verifier, args.seed),
        score_variant=ScoreVariant.parse(args.score),
        budget=args.budget,
    )
    text = ReportFormatter.csv_table([metrics.to_row()], EvalMetrics.CSV_COLUMNS)
    if args.out:
        write_text(args.out, text)
    emit(text)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="评估模型（含测试时纠正）")
    add_task_arguments(parser)
    add_glyph_arguments(parser)
    add_seed_argument(parser)
    add_solver_arguments(parser)
    parser.add_argument("--model", required=True, help="train 输出的模型 JSON")
    parser.add_argument("--data", default=None, help="评估数据文件；不给时按种子现场生成")
    parser.add_argument("--out", default=None, help="同时写入的 CSV 文件")
    parser.set_defaults(handler=cmd_eval)
