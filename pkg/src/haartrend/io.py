"""CSV series input, deterministic report output and flat config files."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError, ParseError
from .grid import SampleGrid

__all__ = [
    "SeriesFile",
    "load_series",
    "write_report",
    "write_rows",
    "read_config",
    "CONFIG_ENV",
]

CONFIG_ENV = "HAARTREND_CONFIG"


@dataclass(frozen=True, eq=False)
class SeriesFile:
    """Labelled observations in time order.

    Integer labels are sorted numerically; any other labels (dates such as
    ``2014-07`` or ``Jul 2014``) are taken in file order.  Either way only the
    rank is used downstream.
    """

    labels: tuple[str, ...]
    values: np.ndarray
    path: str | None = None

    @property
    def n(self) -> int:
        return int(self.values.size)

    def to_grid(self) -> SampleGrid:
        return SampleGrid.from_values(self.values)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_series(path) -> SeriesFile:
    """Read a two-column ``label,value`` CSV (header optional)."""
    path = os.fspath(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc

    numbered = [(i + 1, [c.strip() for c in row]) for i, row in enumerate(rows) if any(c.strip() for c in row)]
    if numbered and not _is_number(numbered[0][1][1] if len(numbered[0][1]) > 1 else ""):
        numbered = numbered[1:]  # header

    labels, values = [], []
    for lineno, row in numbered:
        if len(row) != 2:
            raise ParseError(f"expected 2 columns, found {len(row)}", path, lineno)
        label, raw = row
        try:
            value = float(raw)
        except ValueError:
            raise ParseError(f"cannot parse value {raw!r}", path, lineno) from None
        if not math.isfinite(value):
            raise ParseError(f"non-finite value {raw!r}", path, lineno)
        if not label:
            raise ParseError("empty label", path, lineno)
        labels.append(label)
        values.append(value)

    seen = set()
    for label in labels:
        if label in seen:
            raise DataError(f"{path}: duplicate label {label!r}")
        seen.add(label)
    if len(values) < 2:
        raise DataError(f"{path}: need at least 2 observations, found {len(values)}")

    if all(_is_integer(label) for label in labels):
        order = sorted(range(len(labels)), key=lambda i: int(labels[i]))
        labels = [labels[i] for i in order]
        values = [values[i] for i in order]
    return SeriesFile(tuple(labels), np.array(values), path)


def _is_integer(text: str) -> bool:
    try:
        int(text)
    except ValueError:
        return False
    return True


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_rows(rows: Iterable[Mapping[str, Any]], path, columns: Sequence[str]) -> None:
    """CSV with a fixed column order; no rows gives a header-only file."""
    path = os.fspath(path)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(row[c]) for c in columns])
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_report(obj, path, format: str | None = None, columns: Sequence[str] | None = None) -> None:
    """Write ``obj`` as CSV (a list of row mappings) or JSON (anything mapping-like).

    Output is byte-for-byte reproducible: JSON keys are sorted and floats use
    their shortest round-trip representation; CSV floats use 17 significant
    digits.
    """
    path = os.fspath(path)
    fmt = format or Path(path).suffix.lstrip(".").lower()
    if fmt == "csv":
        rows = list(obj)
        if columns is None:
            if not rows:
                raise ConfigError("columns are required to write an empty table")
            columns = list(rows[0])
        write_rows(rows, path, columns)
    elif fmt == "json":
        text = json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise DataError(f"cannot write {path}: {exc.strerror or exc}") from exc
    else:
        raise ConfigError(f"unsupported report format {fmt!r}; use csv or json")


def read_config(path) -> dict[str, str]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    path = os.fspath(path)
    out: dict[str, str] = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected key = value", path, lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError("empty key", path, lineno)
        out[key.replace("-", "_")] = value
    return out
