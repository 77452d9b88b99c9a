"""
Run ledger for lab commands.

Every CLI invocation is recorded in a small SQLite database so that results
on disk can be traced back to the configuration and outcome that produced them.
"""

import json
import logging
import os
import sqlite3
from datetime import datetime, timezone
from typing import Dict, List, Optional

logger = logging.getLogger(__name__)


class RunLedger:
    """SQLite-backed history of executed commands."""

    def __init__(self, db_path: Optional[str] = None):
        """
        Initialize run ledger.

        Args:
            db_path: Path to SQLite database (default: LAB_LEDGER_PATH or ./lab_runs.db)
        """
        self.db_path = db_path or os.getenv('LAB_LEDGER_PATH', 'lab_runs.db')
        self._init_database()

    def _init_database(self):
        """Initialize runs table."""
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()

        cursor.execute('''
            CREATE TABLE IF NOT EXISTS lab_runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                timestamp TEXT NOT NULL,
                command TEXT NOT NULL,
                config_hash TEXT NOT NULL,
                seed INTEGER,
                status TEXT NOT NULL,
                exit_code INTEGER NOT NULL,
                duration_s REAL,
                summary TEXT,
                created_at TEXT DEFAULT CURRENT_TIMESTAMP
            )
        ''')

        cursor.execute('CREATE INDEX IF NOT EXISTS idx_runs_timestamp ON lab_runs(timestamp)')
        cursor.execute('CREATE INDEX IF NOT EXISTS idx_runs_command ON lab_runs(command)')

        conn.commit()
        conn.close()
        logger.debug(f"Initialized run ledger at {self.db_path}")

    def record_run(self, command: str, config_hash: str, status: str, exit_code: int,
                   summary: Optional[Dict] = None, seed: Optional[int] = None,
                   duration_s: Optional[float] = None) -> Optional[int]:
        """
        Store one command execution.

        Returns:
            Row id, or None when the ledger could not be written
        """
        try:
            conn = sqlite3.connect(self.db_path)
            cursor = conn.cursor()
            cursor.execute('''
                INSERT INTO lab_runs (
                    timestamp, command, config_hash, seed, status, exit_code, duration_s, summary
                ) VALUES (?, ?, ?, ?, ?, ?, ?, ?)
            ''', (
                datetime.now(timezone.utc).isoformat().replace('+00:00', 'Z'),
                command,
                config_hash,
                seed,
                status,
                exit_code,
                duration_s,
                json.dumps(summary or {}, sort_keys=True, default=str),
            ))
            run_id = cursor.lastrowid
            conn.commit()
            conn.close()
            return run_id
        except Exception as e:
            logger.error(f"Error recording run: {e}")
            return None

    def recent_runs(self, limit: int = 10, command: Optional[str] = None) -> List[Dict]:
        """Most recent runs first."""
        try:
            conn = sqlite3.connect(self.db_path)
            conn.row_factory = sqlite3.Row
            cursor = conn.cursor()
            if command:
                cursor.execute('SELECT * FROM lab_runs WHERE command = ? ORDER BY id DESC LIMIT ?',
                               (command, limit))
            else:
                cursor.execute('SELECT * FROM lab_runs ORDER BY id DESC LIMIT ?', (limit,))
            runs = [dict(row) for row in cursor.fetchall()]
            conn.close()
        except Exception as e:
            logger.error(f"Error retrieving runs: {e}")
            return []

        for run in runs:
            run['summary'] = json.loads(run['summary']) if run.get('summary') else {}
        return runs

    def statistics(self) -> Dict:
        """Counts by command and status."""
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()

        stats = {}
        cursor.execute('SELECT COUNT(*) FROM lab_runs')
        stats['total_runs'] = cursor.fetchone()[0]

        cursor.execute('SELECT command, COUNT(*) FROM lab_runs GROUP BY command')
        stats['by_command'] = dict(cursor.fetchall())

        cursor.execute('SELECT status, COUNT(*) FROM lab_runs GROUP BY status')
        stats['by_status'] = dict(cursor.fetchall())

        cursor.execute('SELECT AVG(duration_s) FROM lab_runs WHERE duration_s IS NOT NULL')
        avg = cursor.fetchone()[0]
        stats['avg_duration_s'] = round(avg, 3) if avg else 0

        conn.close()
        return stats
