"""
错误处理模块
"""
import logging
import traceback

from models.errors import (
    CapabilityError,
    ConfigurationError,
    ContractViolation,
    InfeasibleTaskError,
    TaskDefinitionError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CAPABILITY = 3
EXIT_TASK_DEFINITION = 4

# 顺序即匹配优先级：InfeasibleTaskError 同时是 ValueError，需先于 ContractViolation 判断
_EXIT_CODES = (
    (InfeasibleTaskError, EXIT_CAPABILITY),
    (CapabilityError, EXIT_CAPABILITY),
    (TaskDefinitionError, EXIT_TASK_DEFINITION),
    (ConfigurationError, EXIT_USAGE),
    (ContractViolation, EXIT_USAGE),
)


def exit_code_for(error: BaseException) -> int:
    for error_type, code in _EXIT_CODES:
        if isinstance(error, error_type):
            return code
    return EXIT_FAILURE


def handle_cli_error(error: BaseException, command: str = "") -> int:
    """
    处理命令执行中的异常并返回退出码

    Args:
        error: 捕获到的异常
        command: 子命令名

    Returns:
        进程退出码
    """
    error_type = type(error).__name__
    code = exit_code_for(error)
    stack = "".join(traceback.format_exception(type(error), error, error.__traceback__))
    logger.debug(f"命令 {command or '-'} 异常堆栈:\n{stack}")
    logger.error(f"命令 {command or '-'} 执行失败 - 类型:{error_type}, 消息:{error} (退出码 {code})")
    return code
