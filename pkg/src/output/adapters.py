"""Serialisers for report tables and summaries."""

import io
import csv
import json
import math
from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Dict, List, Sequence, Type

import numpy as np


def _format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    if isinstance(value, Enum):
        return str(value.value)
    if value is None:
        return ""
    return str(value)


def _json_key(key: Any) -> str:
    if isinstance(key, Enum):
        return str(key.value)
    if isinstance(key, (float, np.floating)):
        return format(float(key), ".17g")
    return str(key)


def to_jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become "Infinity", "-Infinity" or "NaN"."""
    if isinstance(value, dict):
        return {_json_key(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "NaN"
        if math.isinf(value):
            return "Infinity" if value > 0 else "-Infinity"
        return value
    return value


class ReportAdapter(ABC):
    """Base class for report format adapters."""
    extension: str = ""

    @abstractmethod
    def format_content(self, content: Any) -> str:
        """
        Format the content for this output format.

        Args:
            content: Table (columns and rows) or document.

        Returns:
            str: Formatted text.
        """


class CsvAdapter(ReportAdapter):
    """Fixed column order, 17 significant digits, \\n line endings."""
    extension = "csv"

    def format_content(self, content: Dict[str, Any]) -> str:
        columns: Sequence[str] = content['columns']
        rows: List[Sequence[Any]] = content['rows']
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} cells, expected {len(columns)}")
            writer.writerow([_format_cell(cell) for cell in row])
        return buffer.getvalue()


class JsonAdapter(ReportAdapter):
    extension = "json"

    def format_content(self, content: Any) -> str:
        return json.dumps(to_jsonable(content), sort_keys=True, indent=2, allow_nan=False) + "\n"


class AdapterFactory:
    """Factory class for creating report adapters."""
    _adapters: Dict[str, Type[ReportAdapter]] = {
        'csv': CsvAdapter,
        'json': JsonAdapter,
    }

    @classmethod
    def get_adapter(cls, fmt: str) -> ReportAdapter:
        """
        Get the appropriate adapter for the specified format.

        Raises:
            ValueError: If the format is not supported.
        """
        adapter_class = cls._adapters.get(fmt.lower())
        if not adapter_class:
            raise ValueError(f"Unsupported format: {fmt}")
        return adapter_class()
