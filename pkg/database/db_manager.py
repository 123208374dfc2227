"""
数据库管理模块

运行记录登记表：每次 train 运行一行，完整记录以 JSON 保存。
"""
import logging
import os
from contextlib import asynccontextmanager
from typing import List, Optional

import aiosqlite

from config.settings import DB_PATH
from models.run_record import RunRecord

logger = logging.getLogger(__name__)


@asynccontextmanager
async def get_db(db_path=None):
    """
    数据库连接上下文管理器

    Args:
        db_path: 数据库文件路径，默认使用配置中的 DB_PATH

    Yields:
        aiosqlite.Connection: 数据库连接对象
    """
    db_path = db_path or DB_PATH
    directory = os.path.dirname(os.path.abspath(db_path))
    os.makedirs(directory, exist_ok=True)
    # 设置 30 秒超时，避免 database is locked 错误
    conn = await aiosqlite.connect(db_path, timeout=30.0)
    conn.row_factory = aiosqlite.Row
    try:
        await conn.execute("PRAGMA journal_mode=WAL;")
        await conn.execute("PRAGMA synchronous=NORMAL;")
        await conn.execute("PRAGMA busy_timeout=30000;")
    except Exception:
        pass
    try:
        yield conn
        await conn.commit()
    except Exception as e:
        await conn.rollback()
        raise e
    finally:
        await conn.close()


async def init_db(db_path=None):
    """
    初始化数据库
    """
    async with get_db(db_path) as conn:
        await conn.execute('''
            CREATE TABLE IF NOT EXISTS runs (
                run_id TEXT PRIMARY KEY,
                input_hash TEXT NOT NULL,
                command TEXT NOT NULL,
                created_at TEXT NOT NULL,
                record_json TEXT NOT NULL
            )
        ''')
        await conn.execute('CREATE INDEX IF NOT EXISTS idx_runs_created_at ON runs(created_at DESC)')
        await conn.execute('CREATE INDEX IF NOT EXISTS idx_runs_input_hash ON runs(input_hash)')
    logger.debug("运行记录表已初始化")


async def save_run_record(record: RunRecord, db_path=None) -> str:
    """
    保存运行记录，同一 run_id 覆盖旧记录

    Returns:
        run_id
    """
    await init_db(db_path)
    async with get_db(db_path) as conn:
        await conn.execute(
            'INSERT OR REPLACE INTO runs (run_id, input_hash, command, created_at, record_json) '
            'VALUES (?, ?, ?, ?, ?)',
            (record.run_id, record.input_hash, record.command, record.created_at or "", record.to_json()),
        )
    logger.info(f"已登记运行记录 {record.run_id}")
    return record.run_id


async def get_run_record(run_id: str, db_path=None) -> Optional[RunRecord]:
    await init_db(db_path)
    async with get_db(db_path) as conn:
        cursor = await conn.execute('SELECT record_json FROM runs WHERE run_id = ?', (run_id,))
        row = await cursor.fetchone()
    if row is None:
        return None
    return RunRecord.from_json(row['record_json'])


async def list_run_records(limit: int = 50, db_path=None) -> List[dict]:
    """
    按创建时间倒序列出运行记录摘要

    Returns:
        每行包含 run_id, command, created_at, input_hash, task, seed
    """
    await init_db(db_path)
    async with get_db(db_path) as conn:
        cursor = await conn.execute(
            'SELECT run_id, input_hash, command, created_at, record_json FROM runs '
            'ORDER BY created_at DESC, run_id LIMIT ?',
            (int(limit),),
        )
        rows = await cursor.fetchall()

    summaries = []
    for row in rows:
        record = RunRecord.from_json(row['record_json'])
        summaries.append({
            'run_id': row['run_id'],
            'command': row['command'],
            'created_at': row['created_at'],
            'input_hash': row['input_hash'][:12],
            'task': record.args.get('task', ''),
            'seed': record.seed,
        })
    return summaries
