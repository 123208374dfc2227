"""
训练相关命令：train / replay / runs
"""
import argparse
import asyncio
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from config.settings import (
    ALIGN_ANNEAL_EPOCHS, ALIGN_ENABLED, ALIGN_PRIOR, ALIGN_ROW_RENORMALIZE, ALIGN_SCOPE, BATCH_SIZE, DB_PATH,
    EPOCHS, INIT_SCALE, LR, RECORD_DIR, THREADS,
)
from database.db_manager import list_run_records, save_run_record
from models.core import ScoreVariant
from models.errors import ReplayMismatchError
from models.run_record import RunRecord, hash_inputs
from ui.messages import ReportFormatter, emit, write_text
from utils.alignment import AlignmentConfig
from utils.perception import Dataset, SoftmaxModel, save_model
from utils.trainer import EpochStats, EvalMetrics, TrainConfig, evaluate, train
from utils.verifiers import Verifier

from handlers.task_args import (
    add_glyph_arguments, add_seed_argument, add_solver_arguments, add_task_arguments, load_or_generate,
    resolve_prior, task_group, verifier_from_args,
)

logger = logging.getLogger(__name__)

# 运行记录中保存的参数；输出路径与线程数不影响结果，不在其中
RECORD_KEYS = (
    "task", "base", "digits", "k", "length", "pieces",
    "data", "n", "sigma", "feature_dim", "shift", "seed",
    "epochs", "batch", "lr", "init_scale", "score", "align", "align_scope", "prior", "row_renormalize",
    "anneal_epochs", "budget",
)

RUNS_COLUMNS = ("run_id", "command", "created_at", "input_hash", "task", "seed")


@dataclass
class TrainingOutcome:
    model: SoftmaxModel
    history: List[EpochStats]
    metrics: EvalMetrics
    dataset: Dataset
    verifier: Verifier
    input_hash: str


def add_train_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("训练参数")
    group.add_argument("--epochs", type=int, default=EPOCHS)
    group.add_argument("--batch", type=int, default=BATCH_SIZE)
    group.add_argument("--lr", type=float, default=LR)
    group.add_argument("--init-scale", type=float, default=INIT_SCALE, help="权重初始化标准差，0 表示全零初始化")
    group.add_argument("--no-align", action="store_true", help="关闭分布对齐")
    group.add_argument("--prior", choices=["uniform", "empirical"], default=ALIGN_PRIOR, help="对齐使用的符号先验")
    group.add_argument(
        "--align-scope", choices=["batch", "sequence"], default=ALIGN_SCOPE,
        help="对齐列和的统计范围：整个 batch 或单条序列",
    )
    group.add_argument(
        "--align-anneal-epochs", type=int, default=ALIGN_ANNEAL_EPOCHS,
        help="对齐强度线性衰减到 0 所用的轮数，0 表示 ceil(epochs/2)",
    )
    group.add_argument("--no-timing", action="store_true", help="计时列写 0 且记录不含时间戳，输出可逐字节复现")


def training_params(args: argparse.Namespace) -> Dict[str, Any]:
    """把命令行参数整理为可复现的训练描述"""
    params = {
        "task": args.task,
        "base": args.base,
        "digits": args.digits,
        "k": args.k,
        "length": args.length,
        "pieces": getattr(args, "pieces", None),
        "data": os.path.abspath(args.data) if getattr(args, "data", None) else None,
        "n": args.n,
        "sigma": args.sigma,
        "feature_dim": args.feature_dim,
        "shift": args.shift,
        "seed": args.seed,
        "epochs": args.epochs,
        "batch": args.batch,
        "lr": args.lr,
        "init_scale": args.init_scale,
        "score": args.score,
        "align": ALIGN_ENABLED and not args.no_align,
        "align_scope": args.align_scope,
        "prior": args.prior,
        "row_renormalize": ALIGN_ROW_RENORMALIZE,
        "anneal_epochs": args.align_anneal_epochs or None,
        "budget": args.budget,
    }
    return {key: params[key] for key in RECORD_KEYS}


def run_training(params: Dict[str, Any], threads: int = THREADS, record_timing: bool = True) -> TrainingOutcome:
    """按训练描述完成数据准备、训练和最终评估"""
    args = argparse.Namespace(**params)
    verifier = verifier_from_args(args)
    dataset = load_or_generate(args, verifier)
    data_bytes = Path(params["data"]).read_bytes() if params.get("data") else None
    input_hash = hash_inputs(params, data_bytes)

    align_cfg: Optional[AlignmentConfig] = None
    if params["align"]:
        align_cfg = AlignmentConfig(
            prior=resolve_prior(params["prior"], verifier.num_symbols, dataset),
            row_renormalize=params["row_renormalize"],
            scope=params.get("align_scope", "batch"),
        )
    variant = ScoreVariant.parse(params["score"])
    cfg = TrainConfig(
        epochs=params["epochs"],
        batch_size=params["batch"],
        lr=params["lr"],
        align=align_cfg,
        anneal_epochs=params["anneal_epochs"],
        score_variant=variant,
        dcs_budget=params["budget"],
        seed=params["seed"],
        threads=threads,
        record_timing=record_timing,
    )

    group = task_group(verifier, params["seed"])
    model = SoftmaxModel.initialize(
        verifier.num_symbols, dataset.feature_dim, seed=params["seed"], scale=params.get("init_scale", 0.0),
    )
    model, history = train(model, dataset, verifier, cfg, group=group)
    metrics = evaluate(model, dataset, verifier, group=group, score_variant=variant, budget=params["budget"])
    logger.info(
        f"训练完成: acc={metrics.raw_accuracy:.4f}, ttc_acc={metrics.ttc_accuracy:.4f}, "
        f"adj_acc={metrics.adjusted_accuracy:.4f}, modal_share={metrics.modal_share:.3f}"
    )
    return TrainingOutcome(model, history, metrics, dataset, verifier, input_hash)


def build_record(
    command: str,
    params: Dict[str, Any],
    outcome: TrainingOutcome,
    stamp: bool = True,
) -> RunRecord:
    """run_id 由命令与输入哈希决定；stamp 为 False 时记录中不含时间戳"""
    record = RunRecord(command=command, args=params, seed=params["seed"], input_hash=outcome.input_hash)
    return record.finish([s.to_row() for s in outcome.history], outcome.metrics.to_row(), stamp=stamp)


def cmd_train(args: argparse.Namespace) -> int:
    params = training_params(args)
    outcome = run_training(params, threads=args.threads, record_timing=not args.no_timing)
    record = build_record("train", params, outcome, stamp=not args.no_timing)

    run_dir = Path(RECORD_DIR) / record.run_id
    stats_text = ReportFormatter.csv_table((s.to_row() for s in outcome.history), EpochStats.CSV_COLUMNS)
    stats_path = write_text(args.out_stats or run_dir / "stats.csv", stats_text)
    model_path = Path(args.out_model or run_dir / "model.json")
    save_model(outcome.model, model_path)
    record_path = record.save(args.out_record or run_dir / "record.json")
    logger.info(f"已写入 {stats_path}, {model_path}, {record_path}")

    if not args.no_registry:
        asyncio.run(save_run_record(record, args.db))

    emit(stats_text)
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    """重新执行运行记录，指标完全一致时返回 0"""
    original = RunRecord.load(args.record)
    outcome = run_training(original.args, threads=args.threads, record_timing=False)
    replayed = build_record("replay", original.args, outcome)

    expected, actual = original.comparable(), replayed.comparable()
    differences = sorted(key for key in expected if expected[key] != actual[key])
    emit(ReportFormatter.json_record({
        "run_id": original.run_id,
        "matches": not differences,
        "differences": differences,
    }))
    if differences:
        raise ReplayMismatchError(f"运行记录 {original.run_id} 重放结果不一致: {', '.join(differences)}")
    logger.info(f"运行记录 {original.run_id} 重放结果一致")
    return 0


def cmd_runs(args: argparse.Namespace) -> int:
    rows = asyncio.run(list_run_records(args.limit, args.db))
    emit(ReportFormatter.csv_table(rows, RUNS_COLUMNS))
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="无标签验证学习训练")
    add_task_arguments(parser)
    add_glyph_arguments(parser)
    add_seed_argument(parser)
    add_solver_arguments(parser)
    add_train_arguments(parser)
    parser.add_argument("--data", default=None, help="gen-data 生成的数据文件；不给时按种子现场生成")
    parser.add_argument("--out-stats", default=None, help="每轮统计 CSV")
    parser.add_argument("--out-model", default=None, help="模型 JSON")
    parser.add_argument("--out-record", default=None, help="运行记录 JSON")
    parser.add_argument("--db", default=DB_PATH, help="运行记录登记库")
    parser.add_argument("--no-registry", action="store_true", help="不写入运行记录登记库")
    parser.set_defaults(handler=cmd_train)

    parser = subparsers.add_parser("replay", help="重放运行记录并核对指标")
    parser.add_argument("--record", required=True, help="运行记录 JSON")
    parser.add_argument("--threads", type=int, default=THREADS)
    parser.set_defaults(handler=cmd_replay)

    parser = subparsers.add_parser("runs", help="列出已登记的运行记录")
    parser.add_argument("--limit", type=int, default=50)
    parser.add_argument("--db", default=DB_PATH)
    parser.set_defaults(handler=cmd_runs)
