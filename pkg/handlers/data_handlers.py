"""
数据集生成命令：gen-data
"""
import argparse
import logging

from ui.messages import ReportFormatter, emit
from utils.perception import gen_dataset, write_dataset

from handlers.task_args import (
    add_glyph_arguments, add_seed_argument, add_task_arguments, glyph_from_args, verifier_from_args,
)

logger = logging.getLogger(__name__)


def cmd_gen_data(args: argparse.Namespace) -> int:
    verifier = verifier_from_args(args)
    dataset = gen_dataset(verifier, args.n, glyph_from_args(args), seed=args.seed)
    write_dataset(dataset, args.out)
    logger.info(f"已写入数据集 {args.out}")
    emit(ReportFormatter.json_record({
        **verifier.describe(),
        "n": len(dataset),
        "seed": args.seed,
        "sigma": args.sigma,
        "feature_dim": dataset.feature_dim,
        "empirical_prior": list(dataset.empirical_prior.probs),
        "out": args.out,
    }))
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("gen-data", help="生成满足验证函数的合成字形数据集")
    add_task_arguments(parser)
    add_glyph_arguments(parser)
    add_seed_argument(parser)
    parser.add_argument("--out", required=True, help="输出 JSON-lines 文件")
    parser.set_defaults(handler=cmd_gen_data)
