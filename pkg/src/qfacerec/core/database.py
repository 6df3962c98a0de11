"""Database management for the run audit trail."""

import sqlite3
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional


class RunDatabase:
    """SQLite database of recognition runs and their stages."""

    def __init__(self, db_path: Path):
        """Initialize database.

        Args:
            db_path: Path to SQLite database file
        """
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self.conn: Optional[sqlite3.Connection] = None
        self.init_database()

    def init_database(self) -> None:
        """Initialize database schema."""
        self.conn = sqlite3.connect(str(self.db_path))
        self.conn.row_factory = sqlite3.Row

        cursor = self.conn.cursor()

        # Runs table
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                timestamp DATETIME NOT NULL,
                config_hash TEXT NOT NULL,
                seed INTEGER NOT NULL,
                backend TEXT NOT NULL,
                queries INTEGER NOT NULL,
                accuracy REAL,
                report_path TEXT NOT NULL
            )
        """)

        # Stages table
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS stages (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                run_id INTEGER NOT NULL,
                stage TEXT NOT NULL,
                detail TEXT,
                timestamp DATETIME NOT NULL,
                FOREIGN KEY (run_id) REFERENCES runs(id)
            )
        """)

        self.conn.commit()

    def add_run(
        self,
        config_hash: str,
        seed: int,
        backend: str,
        queries: int,
        accuracy: Optional[float],
        report_path: str,
    ) -> int:
        """Add run record.

        Returns:
            Run ID
        """
        cursor = self.conn.cursor()
        cursor.execute(
            "INSERT INTO runs (timestamp, config_hash, seed, backend, queries, accuracy, report_path) "
            "VALUES (?, ?, ?, ?, ?, ?, ?)",
            # sqlite INTEGER is signed 64-bit; store the seed as text if it overflows.
            (datetime.now(), config_hash, seed if seed < 2 ** 63 else str(seed), backend, queries, accuracy, report_path),
        )
        self.conn.commit()
        return cursor.lastrowid

    def add_stage(self, run_id: int, stage: str, detail: str = "") -> int:
        """Add stage record.

        Args:
            run_id: Associated run ID
            stage: Stage name
            detail: Free-text detail

        Returns:
            Stage ID
        """
        cursor = self.conn.cursor()
        cursor.execute(
            "INSERT INTO stages (run_id, stage, detail, timestamp) VALUES (?, ?, ?, ?)",
            (run_id, stage, detail, datetime.now()),
        )
        self.conn.commit()
        return cursor.lastrowid

    def recent_runs(self, limit: int = 20) -> List[Dict[str, Any]]:
        """Get recent runs, newest first.

        Args:
            limit: Maximum number of records

        Returns:
            List of run records
        """
        cursor = self.conn.cursor()
        cursor.execute("SELECT * FROM runs ORDER BY id DESC LIMIT ?", (limit,))
        return [dict(row) for row in cursor.fetchall()]

    def stages_for_run(self, run_id: int) -> List[Dict[str, Any]]:
        cursor = self.conn.cursor()
        cursor.execute("SELECT * FROM stages WHERE run_id = ? ORDER BY id", (run_id,))
        return [dict(row) for row in cursor.fetchall()]

    def close(self) -> None:
        """Close database connection."""
        if self.conn:
            self.conn.close()
            self.conn = None
