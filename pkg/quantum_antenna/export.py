"""
Export - Deterministic CSV/JSON tables and the log-scale polar plot file
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np

from .errors import IoError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
METADATA_PREFIX = '# '


def format_value(value: Any) -> str:
    return FLOAT_FORMAT % float(value)


def _metadata_value(value: Any) -> str:
    if isinstance(value, str):
        return value
    return json.dumps(value, sort_keys=True, separators=(',', ':'))


@dataclass
class Table:
    """Column-ordered numeric table with ordered '# key: value' metadata"""

    columns: List[str]
    rows: np.ndarray
    metadata: Dict[str, str] = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = [f"{METADATA_PREFIX}{key}: {value}" for key, value in self.metadata.items()]
        lines.append(','.join(self.columns))
        for row in np.atleast_2d(self.rows) if len(self.rows) else []:
            lines.append(','.join(format_value(v) for v in row))
        return '\n'.join(lines) + '\n'

    def to_json(self, config: Dict[str, Any]) -> str:
        rows = np.atleast_2d(self.rows) if len(self.rows) else np.empty((0, len(self.columns)))
        payload = {
            'config': config,
            'metadata': self.metadata,
            'columns': list(self.columns),
            'data': {name: [float(v) for v in rows[:, i]] for i, name in enumerate(self.columns)},
        }
        return json.dumps(payload, indent=2) + '\n'


def make_table(columns: Sequence[str], rows, metadata: Dict[str, Any]) -> Table:
    rows = np.asarray(rows, dtype=float)
    if rows.size and rows.shape[-1] != len(columns):
        raise IoError(f"Table has {rows.shape[-1]} columns, header names {len(columns)}")
    return Table(columns=list(columns), rows=rows,
                 metadata={key: _metadata_value(value) for key, value in metadata.items()})


def _write_text(path: str, text: str) -> str:
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
    except OSError as e:
        raise IoError(f"Cannot write {path}: {e}")
    logger.info(f"Wrote {path}")
    return path


def write_table(path_stem: str, table: Table, fmt: str = 'csv', config: Dict[str, Any] = None) -> str:
    """Write table as '<stem>.csv' or '<stem>.json'; returns the path"""
    if fmt == 'json':
        return _write_text(f"{path_stem}.json", table.to_json(config or {}))
    return _write_text(f"{path_stem}.csv", table.to_csv())


def write_json(path: str, payload: Dict[str, Any]) -> str:
    return _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + '\n')


def read_table(path: str) -> Table:
    """Parse a CSV written by write_table; re-emitting it is byte-identical"""
    try:
        with open(path, 'r', encoding='utf-8', newline='') as f:
            lines = f.read().split('\n')
    except OSError as e:
        raise IoError(f"Cannot read {path}: {e}")

    metadata = {}
    index = 0
    while index < len(lines) and lines[index].startswith(METADATA_PREFIX):
        key, _, value = lines[index][len(METADATA_PREFIX):].partition(': ')
        metadata[key] = value
        index += 1
    if index >= len(lines) or not lines[index]:
        raise IoError(f"{path} has no header row")

    columns = lines[index].split(',')
    rows = [[float(v) for v in line.split(',')] for line in lines[index + 1:] if line]
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(columns)))
    return Table(columns=columns, rows=data, metadata=metadata)


def to_decibels(values: np.ndarray, reference: float, floor_db: float = -60.0) -> np.ndarray:
    """10 log10(values / reference) clamped at floor_db"""
    values = np.asarray(values, dtype=float)
    if reference <= 0:
        return np.full_like(values, floor_db)
    with np.errstate(divide='ignore'):
        db = 10.0 * np.log10(values / reference)
    return np.maximum(db, floor_db)


def polar_plot_rows(pattern_rows: np.ndarray, floor_db: float = -60.0) -> np.ndarray:
    """
    Pattern rows (theta_deg, total, central, plus, minus) to log scale
    relative to the global maximum of the total
    """
    pattern_rows = np.atleast_2d(np.asarray(pattern_rows, dtype=float))
    reference = float(np.max(pattern_rows[:, 1])) if pattern_rows.size else 0.0
    converted = [pattern_rows[:, 0]]
    converted.extend(to_decibels(pattern_rows[:, i], reference, floor_db) for i in range(1, pattern_rows.shape[1]))
    return np.column_stack(converted)
