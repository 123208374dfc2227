"""
配置文件读取和变量定义模块

读取顺序：环境变量 > config.ini > 默认值。
环境变量名为 VL_<节名>_<键名>，例如 VL_TRAIN_EPOCHS；并行度使用 VL_THREADS。
"""
import os
import configparser
import logging

from dotenv import load_dotenv

from models.errors import ConfigurationError

logger = logging.getLogger(__name__)

# 项目根目录
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIG_PATH = os.getenv('VL_CONFIG', os.path.join(BASE_DIR, 'config.ini'))

# .env 中的变量不覆盖已存在的环境变量
load_dotenv(os.path.join(BASE_DIR, '.env'))

# 读取配置文件
config = configparser.ConfigParser()

if os.path.exists(CONFIG_PATH):
    config.read(CONFIG_PATH, encoding='utf-8')
    logger.info(f"已加载配置文件: {CONFIG_PATH}")
else:
    logger.debug(f"配置文件 {CONFIG_PATH} 不存在，将仅使用环境变量和默认值")


def get_config(section, key, fallback=None):
    """安全获取配置值"""
    try:
        return config.get(section, key)
    except (configparser.NoSectionError, configparser.NoOptionError, ValueError):
        return fallback


def get_env_or_config(env_key, section, config_key, fallback=None):
    """
    优先从环境变量获取配置，如果环境变量不存在则从配置文件获取

    Args:
        env_key: 环境变量名
        section: 配置文件节名
        config_key: 配置文件键名
        fallback: 如果都不存在时的默认值

    Returns:
        配置值字符串（或 fallback）
    """
    if env_key in os.environ:
        value = os.environ[env_key]
        logger.debug(f"使用环境变量 {env_key}={value}")
        return value
    return get_config(section, config_key, fallback)


def _env_key(section, key):
    return f"VL_{section}_{key}"


def get_config_int(section, key, fallback=0, env_key=None):
    """获取整数配置，取值非法时抛出 ConfigurationError"""
    raw = get_env_or_config(env_key or _env_key(section, key), section, key)
    if raw is None or str(raw).strip() == '':
        return fallback
    try:
        return int(str(raw).strip())
    except ValueError:
        raise ConfigurationError(f"[{section}] {key} 必须是整数，实际 {raw!r}") from None


def get_config_float(section, key, fallback=0.0, env_key=None):
    """获取浮点数配置，取值非法时抛出 ConfigurationError"""
    raw = get_env_or_config(env_key or _env_key(section, key), section, key)
    if raw is None or str(raw).strip() == '':
        return fallback
    try:
        return float(str(raw).strip())
    except ValueError:
        raise ConfigurationError(f"[{section}] {key} 必须是数字，实际 {raw!r}") from None


def get_config_bool(section, key, fallback=False, env_key=None):
    """获取布尔配置：true/1/yes/on 为真，false/0/no/off 为假"""
    raw = get_env_or_config(env_key or _env_key(section, key), section, key)
    if raw is None or str(raw).strip() == '':
        return fallback
    value = str(raw).strip().lower()
    if value in ('true', '1', 'yes', 'on'):
        return True
    if value in ('false', '0', 'no', 'off'):
        return False
    raise ConfigurationError(f"[{section}] {key} 必须是布尔值，实际 {raw!r}")


def get_config_str(section, key, fallback='', env_key=None):
    raw = get_env_or_config(env_key or _env_key(section, key), section, key)
    if raw is None:
        return fallback
    return str(raw).strip() or fallback


# ============================================
# 训练配置
# ============================================
EPOCHS = get_config_int('TRAIN', 'EPOCHS', 10)
BATCH_SIZE = get_config_int('TRAIN', 'BATCH_SIZE', 32)
LR = get_config_float('TRAIN', 'LR', 0.001)
DCS_BUDGET = get_config_int('TRAIN', 'DCS_BUDGET', 1000)
SEED = get_config_int('TRAIN', 'SEED', 0)
SCORE = get_config_str('TRAIN', 'SCORE', 'independent').lower()
# 模型权重初始化的标准差；0 表示全零初始化，第一批伪标签按下标打破平局
INIT_SCALE = get_config_float('TRAIN', 'INIT_SCALE', 0.0)

# ============================================
# 分布对齐配置
# ============================================
ALIGN_ENABLED = get_config_bool('ALIGN', 'ENABLED', True)
ALIGN_PRIOR = get_config_str('ALIGN', 'PRIOR', 'uniform').lower()
ALIGN_ROW_RENORMALIZE = get_config_bool('ALIGN', 'ROW_RENORMALIZE', True)
# batch: 列和在整个 batch 上求；sequence: 逐条序列求
ALIGN_SCOPE = get_config_str('ALIGN', 'SCOPE', 'batch').lower()
# 0 表示默认的 ceil(epochs / 2)
ALIGN_ANNEAL_EPOCHS = get_config_int('ALIGN', 'ANNEAL_EPOCHS', 0)

# ============================================
# 合成字形配置
# ============================================
FEATURE_DIM = get_config_int('GLYPH', 'FEATURE_DIM', 16)
NOISE_SIGMA = get_config_float('GLYPH', 'NOISE_SIGMA', 0.3)
SHIFT_RANGE = get_config_int('GLYPH', 'SHIFT_RANGE', 0)

# ============================================
# 对称性分析配置
# ============================================
SYMMETRY_MAX_K = get_config_int('SYMMETRY', 'MAX_K', 8)
SYMMETRY_CHECK_LENGTH = get_config_int('SYMMETRY', 'CHECK_LENGTH', 4)
SYMMETRY_CHESS_BOARDS = get_config_int('SYMMETRY', 'CHESS_BOARDS', 16)

# ============================================
# 穷举参照配置
# ============================================
ORACLE_MAX_SPACE = get_config_int('ORACLE', 'MAX_SPACE', 1_000_000)

# ============================================
# 运行时配置
# ============================================
THREADS = get_config_int('RUNTIME', 'THREADS', 1, env_key='VL_THREADS')
LOG_DIR = get_config_str('RUNTIME', 'LOG_DIR', os.path.join(BASE_DIR, 'logs'))
LOG_LEVEL = get_config_str('RUNTIME', 'LOG_LEVEL', 'INFO').upper()
LOG_TO_FILE = get_config_bool('RUNTIME', 'LOG_TO_FILE', True)
DB_PATH = get_config_str('RUNTIME', 'DB_PATH', os.path.join(BASE_DIR, 'data', 'runs.db'))
RECORD_DIR = get_config_str('RUNTIME', 'RECORD_DIR', os.path.join(BASE_DIR, 'runs'))

# 验证配置取值
if EPOCHS < 1:
    raise ConfigurationError(f"[TRAIN] EPOCHS 必须 >= 1，实际 {EPOCHS}")
if BATCH_SIZE < 1:
    raise ConfigurationError(f"[TRAIN] BATCH_SIZE 必须 >= 1，实际 {BATCH_SIZE}")
if LR <= 0:
    raise ConfigurationError(f"[TRAIN] LR 必须 > 0，实际 {LR}")
if DCS_BUDGET < 1:
    raise ConfigurationError(f"[TRAIN] DCS_BUDGET 必须 >= 1，实际 {DCS_BUDGET}")
if SCORE not in ('independent', 'consistency', 'lex'):
    raise ConfigurationError(f"[TRAIN] SCORE 必须是 independent/consistency/lex 之一，实际 {SCORE!r}")
if INIT_SCALE < 0:
    raise ConfigurationError(f"[TRAIN] INIT_SCALE 必须 >= 0，实际 {INIT_SCALE}")
if ALIGN_SCOPE not in ('batch', 'sequence'):
    raise ConfigurationError(f"[ALIGN] SCOPE 必须是 batch/sequence 之一，实际 {ALIGN_SCOPE!r}")
if ALIGN_PRIOR not in ('uniform', 'empirical'):
    raise ConfigurationError(f"[ALIGN] PRIOR 必须是 uniform/empirical 之一，实际 {ALIGN_PRIOR!r}")
if THREADS < 1:
    raise ConfigurationError(f"VL_THREADS 必须 >= 1，实际 {THREADS}")
