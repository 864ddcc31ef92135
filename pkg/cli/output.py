"""JSON and CSV emission with 12 significant digits."""

import csv
import json
import math
import sys
from collections.abc import Iterable
from pathlib import Path
from typing import Any, TextIO

from pydantic import BaseModel

SIGNIFICANT_DIGITS = 12


def round_floats(value: Any) -> Any:
    """Round every float in a JSON-like structure to 12 significant digits; NaN becomes None."""
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, dict):
        return {k: round_floats(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [round_floats(v) for v in value]
    return value


def to_payload(obj: BaseModel | list[BaseModel]) -> Any:
    """JSON-ready data, using field aliases."""
    if isinstance(obj, list):
        return [to_payload(item) for item in obj]
    return round_floats(obj.model_dump(mode="json", by_alias=True))


def _open(path: Path | None) -> TextIO:
    if path is None:
        return sys.stdout
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", newline="", encoding="utf-8")


def write_json(payload: Any, path: Path | None = None) -> None:
    """Write ``payload`` as indented JSON to ``path`` or stdout."""
    stream = _open(path)
    try:
        json.dump(payload, stream, indent=2)
        stream.write("\n")
    finally:
        if path is not None:
            stream.close()


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.{SIGNIFICANT_DIGITS}g}"
    return str(value)


def write_csv(
    fieldnames: list[str], rows: Iterable[dict[str, Any]], path: Path | None = None
) -> None:
    """Comma-delimited CSV with a header row, to ``path`` or stdout."""
    stream = _open(path)
    try:
        writer = csv.DictWriter(stream, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: format_cell(row.get(k)) for k in fieldnames})
    finally:
        if path is not None:
            stream.close()
