"""
处理器模块
"""
from handlers import (
    bench_handlers,
    data_handlers,
    enumerate_handlers,
    eval_handlers,
    symmetry_handlers,
    train_handlers,
)
from handlers.error_handler import handle_cli_error

# 子命令注册顺序即帮助信息中的顺序
COMMAND_MODULES = (
    data_handlers,
    train_handlers,
    eval_handlers,
    symmetry_handlers,
    enumerate_handlers,
    bench_handlers,
)


def register_all(subparsers) -> None:
    for module in COMMAND_MODULES:
        module.register(subparsers)
