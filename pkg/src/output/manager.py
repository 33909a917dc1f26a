import os
import logging
from pathlib import Path
from typing import Any, List, Sequence

from .adapters import AdapterFactory
from src.utils.errors import OutputError, ErrorContext

logger = logging.getLogger(__name__)


class OutputManager:
    """Writes report tables and summaries into one output directory."""

    def __init__(self, output_dir: str = "output"):
        """
        Initialize the OutputManager.

        Args:
            output_dir (str): Directory where output files will be saved

        Raises:
            OutputError: If the directory cannot be created
        """
        self.output_dir = Path(output_dir)
        self.written: List[Path] = []
        self._ensure_output_dir_exists()

    def _ensure_output_dir_exists(self) -> None:
        """Create the output directory if it doesn't exist."""
        try:
            os.makedirs(self.output_dir, exist_ok=True)
        except OSError as e:
            raise OutputError(f"Cannot create output directory {self.output_dir}: {e}",
                              ErrorContext("output", "create_dir", {'path': str(self.output_dir)})) from e

    def path(self, filename: str, fmt: str) -> Path:
        """Full path of ``filename.fmt`` inside the output directory."""
        return self.output_dir / f"{filename}.{fmt}"

    def _write(self, filename: str, fmt: str, content: Any) -> Path:
        try:
            adapter = AdapterFactory.get_adapter(fmt)
            text = adapter.format_content(content)
        except ValueError as e:
            raise OutputError(f"Failed to format {filename}.{fmt}: {e}") from e

        output_path = self.path(filename, fmt)
        try:
            with open(output_path, 'w', encoding='utf-8', newline='') as f:
                f.write(text)
        except OSError as e:
            raise OutputError(f"Failed to write {output_path}: {e}",
                              ErrorContext("output", "write", {'path': str(output_path)})) from e
        self.written.append(output_path)
        logger.debug(f"Wrote {output_path}")
        return output_path

    def save_table(self, filename: str, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        """Save a CSV table with the given column order."""
        return self._write(filename, "csv", {'columns': list(columns), 'rows': list(rows)})

    def save_json(self, filename: str, document: Any) -> Path:
        """Save a JSON document with sorted keys."""
        return self._write(filename, "json", document)
