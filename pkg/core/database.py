#!/usr/bin/env python3
"""
结果存储模块
把流水线与验证的结果保存到SQLite数据库，便于之后查询比较
"""

import json
import sqlite3
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from kivy.logger import Logger

from .export import dumps_report

TABLES = ('runs', 'layering_results', 'measure_reports')


class ResultStore:
    """SQLite结果存储"""

    def __init__(self, db_path: str = 'forge_results.db'):
        """初始化结果存储"""
        self.db_path = db_path
        self._ensure_database_directory()
        self._init_database()

    def _ensure_database_directory(self):
        """确保数据库目录存在"""
        try:
            Path(self.db_path).resolve().parent.mkdir(parents=True, exist_ok=True)
        except Exception as e:
            Logger.error(f"ResultStore: 创建数据库目录失败 - {e}")

    def _init_database(self):
        """初始化数据库表"""
        try:
            with sqlite3.connect(self.db_path) as conn:
                cursor = conn.cursor()

                cursor.execute('''
                    CREATE TABLE IF NOT EXISTS runs (
                        id INTEGER PRIMARY KEY AUTOINCREMENT,
                        command TEXT NOT NULL,
                        seed TEXT,
                        samples INTEGER,
                        trials INTEGER,
                        created_at TEXT NOT NULL
                    )
                ''')

                cursor.execute('''
                    CREATE TABLE IF NOT EXISTS layering_results (
                        id INTEGER PRIMARY KEY AUTOINCREMENT,
                        run_id INTEGER NOT NULL,
                        layering_index INTEGER NOT NULL,
                        kept BOOLEAN NOT NULL,
                        gap REAL,
                        delta_rank INTEGER,
                        verdict TEXT NOT NULL,
                        error TEXT,
                        row_json TEXT NOT NULL,
                        FOREIGN KEY (run_id) REFERENCES runs(id),
                        UNIQUE(run_id, layering_index)
                    )
                ''')

                cursor.execute('''
                    CREATE TABLE IF NOT EXISTS measure_reports (
                        id INTEGER PRIMARY KEY AUTOINCREMENT,
                        run_id INTEGER NOT NULL,
                        label TEXT NOT NULL,
                        position INTEGER NOT NULL,
                        kind TEXT NOT NULL,
                        analytic REAL NOT NULL,
                        target REAL NOT NULL,
                        mc_estimate REAL,
                        mc_stderr REAL,
                        verdict TEXT NOT NULL,
                        report_json TEXT NOT NULL,
                        FOREIGN KEY (run_id) REFERENCES runs(id)
                    )
                ''')

                conn.commit()
                Logger.info(f"ResultStore: 数据库初始化成功 - {self.db_path}")

        except Exception as e:
            Logger.error(f"ResultStore: 数据库初始化失败 - {e}")
            raise

    def start_run(self, command: str, seed: Optional[int] = None, samples: Optional[int] = None,
                  trials: Optional[int] = None) -> Optional[int]:
        """登记一次运行，返回run_id"""
        try:
            with sqlite3.connect(self.db_path) as conn:
                cursor = conn.cursor()
                # 种子可能超出SQLite的有符号64位范围，按文本保存
                cursor.execute('''
                    INSERT INTO runs (command, seed, samples, trials, created_at)
                    VALUES (?, ?, ?, ?, ?)
                ''', (command, None if seed is None else str(seed), samples, trials, datetime.now().isoformat()))
                conn.commit()
                return cursor.lastrowid

        except Exception as e:
            Logger.error(f"ResultStore: 登记运行失败 - {e}")
            return None

    def add_layering_result(self, run_id: int, row: Dict[str, Any]) -> bool:
        """保存一条分层汇总行"""
        try:
            with sqlite3.connect(self.db_path) as conn:
                cursor = conn.cursor()
                cursor.execute('''
                    INSERT OR REPLACE INTO layering_results
                    (run_id, layering_index, kept, gap, delta_rank, verdict, error, row_json)
                    VALUES (?, ?, ?, ?, ?, ?, ?, ?)
                ''', (
                    run_id,
                    row['index'],
                    bool(row.get('kept')),
                    row.get('gap'),
                    row.get('delta_rank'),
                    row.get('verdict', 'error'),
                    row.get('error'),
                    dumps_report(row).rstrip('\n'),
                ))
                conn.commit()
                return True

        except Exception as e:
            Logger.error(f"ResultStore: 保存分层结果失败 - {e}")
            return False

    def add_measure_reports(self, run_id: int, label: str, reports: Iterable[Any]) -> bool:
        """保存一组测度报告，label 标识报告所属的锥"""
        try:
            rows = []
            for position, report in enumerate(reports):
                data = report.to_dict() if hasattr(report, 'to_dict') else dict(report)
                rows.append((
                    run_id, label, position, data['kind'], data['analytic'], data['target'],
                    data.get('mc_estimate'), data.get('mc_stderr'), data['verdict'],
                    dumps_report(data).rstrip('\n'),
                ))
            with sqlite3.connect(self.db_path) as conn:
                conn.executemany('''
                    INSERT INTO measure_reports
                    (run_id, label, position, kind, analytic, target, mc_estimate, mc_stderr, verdict, report_json)
                    VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                ''', rows)
                conn.commit()
            Logger.debug(f"ResultStore: 保存 {len(rows)} 条测度报告 - {label}")
            return True

        except Exception as e:
            Logger.error(f"ResultStore: 保存测度报告失败 - {e}")
            return False

    def get_run(self, run_id: int) -> Optional[Dict[str, Any]]:
        """获取运行记录"""
        try:
            with sqlite3.connect(self.db_path) as conn:
                conn.row_factory = sqlite3.Row
                cursor = conn.cursor()
                cursor.execute('SELECT * FROM runs WHERE id = ?', (run_id,))
                row = cursor.fetchone()
                if row is None:
                    return None
                run = dict(row)
                if run['seed'] is not None:
                    run['seed'] = int(run['seed'])
                return run

        except Exception as e:
            Logger.error(f"ResultStore: 获取运行记录失败 - {e}")
            return None

    def get_layering_results(self, run_id: int) -> List[Dict[str, Any]]:
        """按分层序号返回汇总行"""
        try:
            with sqlite3.connect(self.db_path) as conn:
                cursor = conn.cursor()
                cursor.execute('''
                    SELECT row_json FROM layering_results
                    WHERE run_id = ? ORDER BY layering_index
                ''', (run_id,))
                return [json.loads(row[0]) for row in cursor.fetchall()]

        except Exception as e:
            Logger.error(f"ResultStore: 获取分层结果失败 - {e}")
            return []

    def get_measure_reports(self, run_id: int, label: Optional[str] = None) -> List[Dict[str, Any]]:
        """获取测度报告，可按label过滤"""
        try:
            with sqlite3.connect(self.db_path) as conn:
                cursor = conn.cursor()
                if label is None:
                    cursor.execute('''
                        SELECT report_json FROM measure_reports
                        WHERE run_id = ? ORDER BY id
                    ''', (run_id,))
                else:
                    cursor.execute('''
                        SELECT report_json FROM measure_reports
                        WHERE run_id = ? AND label = ? ORDER BY id
                    ''', (run_id, label))
                return [json.loads(row[0]) for row in cursor.fetchall()]

        except Exception as e:
            Logger.error(f"ResultStore: 获取测度报告失败 - {e}")
            return []

    def list_runs(self, limit: int = 20) -> List[Dict[str, Any]]:
        """最近的运行记录（新的在前）"""
        try:
            with sqlite3.connect(self.db_path) as conn:
                conn.row_factory = sqlite3.Row
                cursor = conn.cursor()
                cursor.execute('''
                    SELECT r.id, r.command, r.seed, r.samples, r.trials, r.created_at,
                           (SELECT COUNT(*) FROM measure_reports m
                            WHERE m.run_id = r.id AND m.verdict = 'fail') AS failed_reports
                    FROM runs r ORDER BY r.id DESC LIMIT ?
                ''', (limit,))
                runs = [dict(row) for row in cursor.fetchall()]
                for run in runs:
                    if run['seed'] is not None:
                        run['seed'] = int(run['seed'])
                return runs

        except Exception as e:
            Logger.error(f"ResultStore: 获取运行列表失败 - {e}")
            return []

    def get_database_info(self) -> Dict[str, Any]:
        """获取数据库信息"""
        try:
            with sqlite3.connect(self.db_path) as conn:
                cursor = conn.cursor()

                tables_info = {}
                for table in TABLES:
                    cursor.execute(f'SELECT COUNT(*) FROM {table}')
                    tables_info[table] = cursor.fetchone()[0]

                db_size = Path(self.db_path).stat().st_size if Path(self.db_path).exists() else 0

                return {
                    'db_path': self.db_path,
                    'db_size_bytes': db_size,
                    'tables_info': tables_info,
                    'total_records': sum(tables_info.values())
                }

        except Exception as e:
            Logger.error(f"ResultStore: 获取数据库信息失败 - {e}")
            return {}
