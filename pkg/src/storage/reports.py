"""
Deterministic report emission.

JSON reports carry ``"schema_version": "1"``, sorted keys and two-space
indentation; rationals are "p/q" strings. CSV tables put a decimal rendering
next to every exact rational column. Nothing time-dependent is written, so
identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Union

from pydantic import BaseModel

from src.models.specs import SCHEMA_VERSION
from src.utils.logger import get_logger
from src.utils.rationals import format_decimal, format_rational

logger = get_logger(__name__)

# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def _plain(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def render_json(report: Union[BaseModel, Dict[str, Any]]) -> str:
    """
    Serialize a report.

    Args:
        report (Union[BaseModel, Dict[str, Any]]): A pydantic report or a plain mapping
            whose values may contain models and Fractions.

    Returns:
        str: The JSON text, newline-terminated.
    """
    payload = _plain(report)
    if not isinstance(payload, dict):
        payload = {"result": payload}
    payload["schema_version"] = SCHEMA_VERSION
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def render_csv(columns: Sequence[str], rows: Sequence[Dict[str, Any]]) -> str:
    """
    Render a table; every column holding Fractions gets a ``<name>_decimal`` companion.

    Args:
        columns (Sequence[str]): Column order.
        rows (Sequence[Dict[str, Any]]): One mapping per row.

    Returns:
        str: CSV text with ``\\n`` line endings.
    """
    rational_columns = {
        c for c in columns if any(isinstance(row.get(c), Fraction) for row in rows)
    }
    header: List[str] = []
    for c in columns:
        header.append(c)
        if c in rational_columns:
            header.append(f"{c}_decimal")

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        line: List[str] = []
        for c in columns:
            value = row.get(c)
            if c in rational_columns:
                line.append(format_rational(value) if value is not None else "")
                line.append(format_decimal(value) if value is not None else "")
            else:
                line.append("" if value is None else str(value))
        writer.writerow(line)
    return buffer.getvalue()


def write_report(text: str, path: Optional[str]) -> None:
    """Write to ``path``, or to stdout when no path is given."""
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    logger.info(f"Report written to {path}")
