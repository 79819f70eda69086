"""
Module containing the `CsvFileWriter` and `JsonFileWriter` classes, which write run artifacts atomically.
Numbers are written deterministically so that identical runs give byte-identical files.
"""

from __future__ import annotations
import json
import math
import os
import tempfile
from collections.abc import Sequence
from pathlib import Path
from typing import Any
import numpy as np

from .config import OUTPUT_SIGNIFICANT_DIGITS
from .interfaces import ArtifactFileWriter

# Column layouts of the emitted tables
MGRID_COLUMNS = ("re_z", "im_z", "re_m", "im_m", "is_infinite", "diameter", "L_used")
POTENTIAL_COLUMNS = ("x", "V")
PHI_COLUMNS = ("t", "phi", "dphi", "d2phi", "d3phi")
TRANSFORM_COLUMNS = ("x", "t", "R", "phi")

def _write_atomically(filepath: Path, text: str) -> None:
    filepath.parent.mkdir(parents=True, exist_ok=True)
    descriptor, temporary = tempfile.mkstemp(dir=filepath.parent, prefix=f".{filepath.name}.", suffix=".tmp")
    try:
        with os.fdopen(descriptor, "w", newline="\n") as file:
            file.write(text)
        os.replace(temporary, filepath)
    except BaseException:
        if os.path.exists(temporary):
            os.remove(temporary)
        raise

def format_number(value: float) -> str:
    return f"{float(value):.{OUTPUT_SIGNIFICANT_DIGITS}g}"

class CsvFileWriter(ArtifactFileWriter):
    """
    Writes rows of real numbers under a header line, each value with 17 significant digits.
    """

    def __init__(self, filename: str | Path, header: Sequence[str]) -> None:
        super().__init__()
        self.filename = Path(filename)
        self.header = tuple(header)
        self.rows: list[str] = []

    def add_record(self, record: Sequence[float]) -> None:
        if len(record) != len(self.header):
            raise ValueError(f"Row has {len(record)} values, expected {len(self.header)} ({', '.join(self.header)})")
        self.rows.append(",".join(format_number(value) for value in record))

    def write_file(self) -> None:
        _write_atomically(self.filename, "\n".join((",".join(self.header), *self.rows)) + "\n")
        self.log(f"File path/name: {self.filename}")
        self.log(f"Rows: {len(self.rows)}")

def _jsonable(value: Any) -> Any:
    # NaN and ±∞ have no JSON representation
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value

class JsonFileWriter(ArtifactFileWriter):
    """
    Writes one JSON document. Several records are merged key by key, later records winning.
    Floats are written in their shortest round-trip form, which is deterministic.
    """

    def __init__(self, filename: str | Path) -> None:
        super().__init__()
        self.filename = Path(filename)
        self.document: dict[str, Any] = {}

    def add_record(self, record: dict[str, Any]) -> None:
        if not isinstance(record, dict):
            raise ValueError(f"JSON records must be objects, got {type(record).__name__}")
        self.document.update(_jsonable(record))

    def write_file(self) -> None:
        text = json.dumps(self.document, indent=2, ensure_ascii=False, allow_nan=False)
        _write_atomically(self.filename, text + "\n")
        self.log(f"File path/name: {self.filename}")
        self.log(f"Keys: {', '.join(self.document)}")
