"""
pytest 配置和公共 fixtures
"""
import os
import sys
import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

# 设置测试环境变量（在导入任何项目模块之前）
_RUNTIME_DIR = tempfile.mkdtemp(prefix="vl-tests-")
os.environ['VL_CONFIG'] = os.path.join(_RUNTIME_DIR, 'missing-config.ini')
os.environ['VL_RUNTIME_LOG_TO_FILE'] = 'false'
os.environ['VL_RUNTIME_LOG_DIR'] = os.path.join(_RUNTIME_DIR, 'logs')
os.environ['VL_RUNTIME_DB_PATH'] = os.path.join(_RUNTIME_DIR, 'runs.db')
os.environ['VL_RUNTIME_RECORD_DIR'] = os.path.join(_RUNTIME_DIR, 'runs')
os.environ.pop('VL_THREADS', None)

# 添加项目根目录到 Python 路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from models.core import ConfidenceGrid  # noqa: E402
from utils.perception import GlyphConfig, gen_dataset  # noqa: E402
from utils.verifiers import build_verifier  # noqa: E402


def random_grid(rng: np.random.Generator, rows: int, cols: int) -> ConfidenceGrid:
    """每行取自 Dirichlet(1, ..., 1) 的随机置信度矩阵"""
    return ConfidenceGrid(rng.dirichlet(np.ones(cols), size=rows))


def peaked_grid(symbols, k: int, peak: float = 0.91) -> ConfidenceGrid:
    """第 i 行在 symbols[i] 上取 peak，其余均分"""
    rest = (1.0 - peak) / (k - 1)
    rows = [[peak if s == target else rest for s in range(k)] for target in symbols]
    return ConfidenceGrid.from_rows(rows)


@pytest.fixture
def temp_dir():
    """创建临时目录"""
    temp_path = tempfile.mkdtemp()
    yield temp_path
    shutil.rmtree(temp_path)


@pytest.fixture
def rng():
    """固定种子的随机数生成器"""
    return np.random.default_rng(20240501)


@pytest.fixture
def small_grid():
    """2 x 2 示例矩阵"""
    return ConfidenceGrid.from_rows([[0.9, 0.1], [0.6, 0.4]])


@pytest.fixture
def sort_verifier():
    return build_verifier('sort', k=6, length=4)


@pytest.fixture
def addition_verifier():
    return build_verifier('addition', base=2, digits=1)


@pytest.fixture
def clean_glyph():
    """无噪声字形，类别完全可分"""
    return GlyphConfig(feature_dim=8, noise_sigma=0.0, seed=3)


@pytest.fixture
def small_sort_dataset(sort_verifier, clean_glyph):
    return gen_dataset(sort_verifier, 40, clean_glyph, seed=11)


@pytest.fixture(autouse=True)
def reset_environment():
    """重置环境变量"""
    original_env = os.environ.copy()
    yield
    os.environ.clear()
    os.environ.update(original_env)


def pytest_sessionfinish(session, exitstatus):
    shutil.rmtree(_RUNTIME_DIR, ignore_errors=True)
