"""
验证学习实验命令行入口
子命令：gen-data, train, eval, analyze-symmetry, enumerate, bench, replay, runs
"""
import argparse
import logging
import sys
from typing import List, Optional

# 配置相关导入（取值非法时在导入阶段抛出 ConfigurationError）
try:
    from config.settings import LOG_DIR, LOG_LEVEL, LOG_TO_FILE
except Exception as e:  # noqa: BLE001
    sys.stderr.write(f"配置错误: {e}\n")
    sys.exit(2)

from handlers import handle_cli_error, register_all
from utils.logging_config import setup_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vl",
        description="验证学习：以验证函数代替规则推理的无标签神经符号训练",
    )
    parser.add_argument("--log-level", default=LOG_LEVEL, help="日志级别（默认取配置 LOG_LEVEL）")
    parser.add_argument("--no-log-file", action="store_true", help="只输出到 stderr，不写日志文件")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    register_all(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level, LOG_DIR, LOG_TO_FILE and not args.no_log_file)
    logger.debug(f"执行命令 {args.command}")
    try:
        return args.handler(args)
    except Exception as e:  # noqa: BLE001
        return handle_cli_error(e, args.command)


if __name__ == "__main__":
    sys.exit(main())
