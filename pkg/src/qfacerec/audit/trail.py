"""Run audit trail with multiple output formats.

Kept apart from the report so the report stays byte-identical across runs.
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

from ..core.database import RunDatabase


class RunAuditTrail:
    """SQLite, JSON Lines and human-readable log of recognition runs."""

    DB_NAME = "runs.db"

    def __init__(self, output_dir: Path, database: Optional[RunDatabase] = None):
        """Initialize audit trail.

        Args:
            output_dir: run output directory
            database: RunDatabase instance; opened in output_dir if None
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.database = database or RunDatabase(self.output_dir / self.DB_NAME)

        # JSON Lines audit file
        self.jsonl_path = self.output_dir / "audit.jsonl"

        # Human-readable log file
        self.log_path = self.output_dir / "operations.log"

        self.logger = self._setup_logger()

    def _setup_logger(self) -> logging.Logger:
        """Setup human-readable logger."""
        logger = logging.getLogger("qfacerec.audit")
        logger.setLevel(logging.INFO)

        for handler in list(logger.handlers):
            if isinstance(handler, logging.FileHandler) and Path(handler.baseFilename) == self.log_path.resolve():
                return logger

        handler = logging.FileHandler(self.log_path)
        handler.setLevel(logging.INFO)

        # Format: [2025-12-31 10:00:00] ACTION: details
        formatter = logging.Formatter("[%(asctime)s] %(message)s", datefmt="%Y-%m-%d %H:%M:%S")
        handler.setFormatter(formatter)

        logger.addHandler(handler)
        return logger

    def _write_jsonl(self, entry: Dict[str, Any]) -> None:
        """Write entry to JSON Lines file.

        Args:
            entry: Audit entry
        """
        with open(self.jsonl_path, "a") as f:
            f.write(json.dumps(entry) + "\n")

    def log_run(self, report: Dict[str, Any], report_path: Path) -> int:
        """Log a finished recognition run.

        Args:
            report: report dictionary as written to disk
            report_path: where the report was written

        Returns:
            Run ID
        """
        timestamp = datetime.now().isoformat()
        metadata = report.get("metadata", {})
        summary = report.get("summary", {})
        config = report.get("config", {})

        # SQLite
        run_id = self.database.add_run(
            config_hash=metadata.get("config_hash", ""),
            seed=int(metadata.get("seed", 0)),
            backend=str(config.get("backend", "")),
            queries=int(summary.get("queries", 0)),
            accuracy=summary.get("accuracy"),
            report_path=str(report_path),
        )

        # JSON Lines
        self._write_jsonl({
            "timestamp": timestamp,
            "action": "run",
            "run_id": run_id,
            "config_hash": metadata.get("config_hash"),
            "seed": metadata.get("seed"),
            "accuracy": summary.get("accuracy"),
            "report": str(report_path),
        })

        # Human-readable log
        accuracy = summary.get("accuracy")
        shown = "n/a" if accuracy is None else f"{accuracy:.0%}"
        self.logger.info(f"RUN: {summary.get('queries', 0)} queries, top-1 accuracy {shown} → {report_path}")

        return run_id

    def log_stage(self, run_id: int, stage: str, detail: str = "") -> None:
        """Log one pipeline stage of a run.

        Args:
            run_id: Run ID
            stage: Stage name
            detail: Free-text detail
        """
        self.database.add_stage(run_id, stage, detail)

        self._write_jsonl({
            "timestamp": datetime.now().isoformat(),
            "action": "stage",
            "run_id": run_id,
            "stage": stage,
            "detail": detail,
        })

        self.logger.info(f"{stage.upper()}: {detail}")

    def close(self) -> None:
        self.database.close()
        for handler in list(self.logger.handlers):
            if isinstance(handler, logging.FileHandler) and Path(handler.baseFilename) == self.log_path.resolve():
                self.logger.removeHandler(handler)
                handler.close()
