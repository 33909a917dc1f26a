"""
Process logger set up by the command line.

``LabLogger`` attaches three handlers to the package logger: the console, an
optional daily file, and an in-memory record of the ERROR and CRITICAL
messages of the run, which the CLI copies into ``error.json``.
"""

import sys
import logging
from collections import deque
from pathlib import Path
from datetime import datetime
from typing import Optional, Dict, Any, List

DEFAULT_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s (%(filename)s:%(lineno)d)"


class ErrorRecordHandler(logging.Handler):
    """Keeps the most recent ERROR and CRITICAL records as plain dicts."""

    def __init__(self, capacity: int):
        super().__init__(level=logging.ERROR)
        self.records: deque = deque(maxlen=capacity)

    def emit(self, record: logging.LogRecord) -> None:
        exception = record.exc_info[1] if record.exc_info else None
        self.records.append({
            'timestamp': datetime.fromtimestamp(record.created).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'exception': str(exception) if exception is not None else None,
        })


class LabLogger:
    """Configures the package logger once per process."""

    LOG_LEVELS = {
        'DEBUG': logging.DEBUG,
        'INFO': logging.INFO,
        'WARNING': logging.WARNING,
        'ERROR': logging.ERROR,
        'CRITICAL': logging.CRITICAL
    }

    MAX_ERROR_RECORDS = 100

    def __init__(
        self,
        name: str = "src",
        level: str = "INFO",
        log_dir: Optional[str] = None,
        format_string: Optional[str] = None,
        stream=None
    ):
        """
        Args:
            name (str): Logger name; "src" covers every package module
            level (str): Level name, INFO when unknown
            log_dir (str, optional): Directory of the daily log file; console only when None
            format_string (str, optional): Record format
            stream: Console stream, stdout by default
        """
        self.name = name
        self.level = self.LOG_LEVELS.get(level.upper(), logging.INFO)
        self.log_dir = Path(log_dir) if log_dir else None
        formatter = logging.Formatter(format_string or DEFAULT_FORMAT)

        self.logger = logging.getLogger(name)
        self.logger.setLevel(self.level)
        self.logger.handlers.clear()

        console = logging.StreamHandler(stream or sys.stdout)
        console.setFormatter(formatter)
        self.logger.addHandler(console)

        if self.log_dir is not None:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            self._remove_stale_logs()
            file_handler = logging.FileHandler(self.log_file)
            file_handler.setFormatter(formatter)
            self.logger.addHandler(file_handler)

        self._errors = ErrorRecordHandler(self.MAX_ERROR_RECORDS)
        self.logger.addHandler(self._errors)

    @property
    def log_file(self) -> Optional[Path]:
        if self.log_dir is None:
            return None
        return self.log_dir / f"{self.name}_{datetime.now():%Y%m%d}.log"

    def _remove_stale_logs(self) -> None:
        """Delete this logger's files from earlier days; other files are left alone."""
        today = datetime.now().date()
        for path in self.log_dir.glob(f"{self.name}_*.log"):
            try:
                day = datetime.strptime(path.stem.rsplit('_', 1)[-1], "%Y%m%d").date()
            except ValueError:
                continue
            if day < today:
                path.unlink()

    def error_records(self) -> List[Dict[str, Any]]:
        """ERROR and CRITICAL records of this run, oldest first."""
        return list(self._errors.records)

    def error(self, msg: str, exc_info: Optional[BaseException] = None) -> None:
        self.logger.error(msg, exc_info=exc_info)

    def critical(self, msg: str, exc_info: Optional[BaseException] = None) -> None:
        self.logger.critical(msg, exc_info=exc_info)
