"""
日志配置模块
"""
import os
import time
import glob
import logging
import sys
from logging.handlers import RotatingFileHandler

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def cleanup_old_logs(log_dir, days_to_keep=7):
    """
    清理过期的日志文件

    Args:
        log_dir: 日志目录
        days_to_keep: 保留最近几天的日志

    Returns:
        删除的文件数
    """
    logger = logging.getLogger(__name__)
    deleted_count = 0
    try:
        threshold = time.time() - (days_to_keep * 86400)  # 86400秒 = 1天
        for log_file in glob.glob(os.path.join(log_dir, "*.log*")):
            if os.path.getmtime(log_file) < threshold:
                try:
                    os.remove(log_file)
                    deleted_count += 1
                    logger.debug(f"删除过期日志文件: {log_file}")
                except OSError as e:
                    logger.error(f"删除日志文件 {log_file} 失败: {e}")
    except OSError as e:
        logger.error(f"清理日志文件时出错: {e}")
    return deleted_count


def setup_logging(level="INFO", log_dir="logs", to_file=True):
    """
    设置日志配置

    日志只写 stderr 和日志文件，stdout 留给 CSV/JSON 结果输出。

    Args:
        level: 根日志级别名称
        log_dir: 日志目录
        to_file: 是否写入 vl.log / error.log
    """
    formatter = logging.Formatter(LOG_FORMAT)

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))

    # 清除已有的处理器
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)
        handler.close()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if to_file:
        os.makedirs(log_dir, exist_ok=True)
        cleanup_old_logs(log_dir)

        # 每个文件最大5MB，保留3个备份文件
        file_handler = RotatingFileHandler(
            os.path.join(log_dir, "vl.log"),
            maxBytes=5*1024*1024,
            backupCount=3,
            encoding='utf-8'
        )
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

        # 仅记录ERROR及以上级别
        error_file_handler = RotatingFileHandler(
            os.path.join(log_dir, "error.log"),
            maxBytes=3*1024*1024,
            backupCount=3,
            encoding='utf-8'
        )
        error_file_handler.setFormatter(formatter)
        error_file_handler.setLevel(logging.ERROR)
        root_logger.addHandler(error_file_handler)

    logger = logging.getLogger(__name__)
    if to_file:
        logger.debug("日志系统已初始化，日志文件保存在 %s 目录", os.path.abspath(log_dir))
    return logger
