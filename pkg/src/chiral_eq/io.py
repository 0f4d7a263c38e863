"""Text serialization of tables, sample batches and free-energy rows.

Floats are written with 17 significant digits, which round-trips every IEEE
double.  Command tables come in two layouts carrying the same numbers:

* CSV: ``# <header json>``, the column row, data rows, ``# <summary json>``.
* JSON: one object ``{"header", "columns", "rows", "summary"}``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Any, TextIO

import numpy as np

from .partition import FreeEnergyRow

SAMPLE_COLUMNS = ("chain_id", "sweep", "i", "lambda")
FREE_ENERGY_COLUMNS = ("n", "log_An", "scaled", "gap")


def format_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _normalize(obj):
    """Plain Python types whose floats are the 17-digit rounded values."""
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_normalize(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(format(float(obj), ".17g"))
    return obj


def _dumps(obj) -> str:
    return json.dumps(_normalize(obj), separators=(",", ":"))


@dataclass
class Table:
    """A command result: metadata header, named columns, rows and a summary."""

    header: dict
    columns: tuple[str, ...]
    rows: list[tuple]
    summary: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


def write_table(table: Table, stream: TextIO, fmt: str = "csv") -> None:
    if fmt == "json":
        stream.write(
            _dumps({"header": table.header, "columns": list(table.columns), "rows": table.rows, "summary": table.summary})
        )
        stream.write("\n")
        return
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    stream.write("# " + _dumps(table.header) + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_number(v) for v in row])
    stream.write("# " + _dumps(table.summary) + "\n")


def _parse_cell(text: str) -> Any:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_table(text: str, fmt: str = "csv") -> Table:
    """Inverse of :func:`write_table`; numeric cells come back as int/float."""
    if fmt == "json":
        obj = json.loads(text)
        return Table(obj["header"], tuple(obj["columns"]), [tuple(r) for r in obj["rows"]], obj["summary"])
    lines = text.splitlines()
    if len(lines) < 3 or not lines[0].startswith("# ") or not lines[-1].startswith("# "):
        raise ValueError("not a table: expected '# ' header and footer lines")
    reader = csv.reader(lines[1:-1])
    columns = tuple(next(reader))
    rows = [tuple(_parse_cell(c) for c in r) for r in reader]
    return Table(json.loads(lines[0][2:]), columns, rows, json.loads(lines[-1][2:]))


# ---------------------------------------------------------------------------
# sample batches and free-energy rows
# ---------------------------------------------------------------------------


def sample_rows(chain_ids, sweeps, configurations) -> list[tuple]:
    """Long format: one retained coordinate per row."""
    configurations = np.asarray(configurations, dtype=float)
    n = configurations.shape[1]
    return [
        (int(cid), int(sw), i, float(v))
        for cid, sw, conf in zip(chain_ids, sweeps, configurations)
        for i, v in zip(range(n), conf)
    ]


def write_sample_csv(batch, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SAMPLE_COLUMNS)
    for row in sample_rows(batch.chain_ids, batch.sweeps, batch.configurations):
        writer.writerow([format_number(v) for v in row])


def read_sample_csv(stream: TextIO) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(chain_ids, sweeps, configurations)`` from a sample CSV."""
    reader = csv.reader(stream)
    if tuple(next(reader)) != SAMPLE_COLUMNS:
        raise ValueError(f"sample file must start with the header {','.join(SAMPLE_COLUMNS)}")
    data = [(int(c), int(s), int(i), float(v)) for c, s, i, v in reader]
    if not data:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), np.empty((0, 0))
    n = max(r[2] for r in data) + 1
    if len(data) % n:
        raise ValueError("incomplete configuration in sample file")
    arr = np.array([r[3] for r in data]).reshape(-1, n)
    chain_ids = np.array([r[0] for r in data[::n]], dtype=np.int64)
    sweeps = np.array([r[1] for r in data[::n]], dtype=np.int64)
    return chain_ids, sweeps, arr


def write_free_energy_csv(rows: list[FreeEnergyRow], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(FREE_ENERGY_COLUMNS)
    for r in rows:
        writer.writerow([format_number(v) for v in (r.n, r.log_A_n, r.scaled, r.gap)])


def read_free_energy_csv(stream: TextIO) -> list[FreeEnergyRow]:
    reader = csv.reader(stream)
    if tuple(next(reader)) != FREE_ENERGY_COLUMNS:
        raise ValueError(f"free-energy file must start with the header {','.join(FREE_ENERGY_COLUMNS)}")
    return [FreeEnergyRow(int(n), float(a), float(s), float(g)) for n, a, s, g in reader]

