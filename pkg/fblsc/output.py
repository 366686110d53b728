"""
CSV curves and JSON documents written by the command line.

Numbers are written with 12 significant digits. Infinite cells are written
as ``inf`` and undefined ones as ``nan-flag``; both are reported once per file.
"""
import csv
import dataclasses
import enum
import io
import json
import logging
import math
import sys

import numpy as np

from fblsc.errors import OutputError

logger = logging.getLogger(__name__)

INF_SENTINEL = 'inf'
NAN_SENTINEL = 'nan-flag'


def format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    value = float(value)
    if math.isnan(value):
        return NAN_SENTINEL
    if math.isinf(value):
        return INF_SENTINEL if value > 0 else '-' + INF_SENTINEL
    return f"{value:.12g}"


def _write_text(text, path):
    if path is None or path == '-':
        sys.stdout.write(text)
        return
    try:
        with open(path, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(text)
    except OSError as exc:
        logger.error(f"Could not write {path}: {exc}")
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    logger.info(f"Wrote {path}")


def emit_curve(rows, path, x_name='x'):
    """Write rows as a CSV file with a header; the column set comes from the first row"""
    rows = list(rows)
    if not rows:
        raise OutputError("no rows to write")
    names = list(rows[0].columns)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow([x_name] + names)
    flagged = 0
    for row in rows:
        if list(row.columns) != names:
            raise OutputError(f"row at {x_name}={row.x} has columns {list(row.columns)}, expected {names}")
        cells = [format_value(row.x)] + [format_value(row.columns[name]) for name in names]
        flagged += sum(cell in (INF_SENTINEL, '-' + INF_SENTINEL, NAN_SENTINEL) for cell in cells)
        writer.writerow(cells)
    if flagged:
        logger.warning(f"{flagged} degenerate cells written as sentinels")
    _write_text(buffer.getvalue(), path)


def to_jsonable(value):
    """Plain JSON structure of records, arrays and enums"""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return NAN_SENTINEL
        if math.isinf(value):
            return INF_SENTINEL if value > 0 else '-' + INF_SENTINEL
        return float(format_value(value))
    return value


def emit_json(data, path=None):
    """Write a JSON document with sorted keys"""
    text = json.dumps(to_jsonable(data), indent=2, sort_keys=True) + '\n'
    _write_text(text, path)
