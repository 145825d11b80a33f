"""Benchmark records and their versioned CSV schema.

Columns (schema version 1), in order:

    schema         schema version, always 1
    kernel         ntt | vadd | vsub | vpmul | axpy
    size           transform size or vector length
    backend        portable | native-256 | native-512 | mqx
    mode           functional | pisa (MQX only, empty otherwise)
    variant        base | m | c | mc | mhc | mcp (MQX only, empty otherwise)
    algo           schoolbook | karatsuba
    modulus_bits   bit length of the modulus
    runs           total iterations executed
    measured       trailing iterations averaged
    total_ns       mean nanoseconds per kernel call
    divisor        butterflies (NTT) or elements (BLAS)
    normalized_ns  total_ns / divisor
    checksum       digest of the kernel output
    label          timing label (e.g. proxy-timed, portable-emulated, non-representative)
    timestamp      UTC time of the measurement, ISO 8601
    host           host descriptor including pinning outcome

Floats are written with ``repr`` so a write/read cycle is lossless.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Malformed CSV input; the message names the line and column."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column '{column}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class BenchRecord:
    kernel: str
    size: int
    backend: str
    mode: str
    variant: str
    algo: str
    modulus_bits: int
    runs: int
    measured: int
    total_ns: float
    divisor: int
    normalized_ns: float
    checksum: str
    label: str
    timestamp: str
    host: str
    schema: int = SCHEMA_VERSION


COLUMNS = ["schema"] + [f.name for f in fields(BenchRecord) if f.name != "schema"]
_TYPES = {f.name: f.type for f in fields(BenchRecord)}
_CASTS = {"int": int, "float": float, "str": str}


def _cell(v):
    return repr(v) if isinstance(v, float) else str(v)


def write_csv(records, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in records:
        d = asdict(r)
        w.writerow([_cell(d[c]) for c in COLUMNS])


def to_csv(records) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def read_rows(stream, required, source="input") -> list:
    """``(line_number, row_dict)`` pairs of a headed CSV; ``required`` columns must exist."""
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError(f"{source} is empty; expected a header row", line=1)
    header = [h.strip() for h in header]
    for col in required:
        if col not in header:
            raise SchemaError(f"missing required column in {source}", line=1, column=col)
    rows = []
    for lineno, cells in enumerate(reader, start=2):
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != len(header):
            raise SchemaError(f"expected {len(header)} fields, found {len(cells)}", line=lineno)
        rows.append((lineno, dict(zip(header, cells))))
    return rows


def read_csv(stream, source="input") -> list:
    records = []
    for lineno, row in read_rows(stream, COLUMNS, source):
        values = {}
        for col in COLUMNS:
            cast = _CASTS[_TYPES[col]]
            try:
                values[col] = cast(row[col])
            except ValueError:
                raise SchemaError(f"cannot parse {row[col]!r} as {_TYPES[col]}", line=lineno, column=col)
        if values["schema"] != SCHEMA_VERSION:
            raise SchemaError(f"unsupported schema version {values['schema']}", line=lineno, column="schema")
        records.append(BenchRecord(**values))
    return records


def from_csv(text: str) -> list:
    return read_csv(io.StringIO(text))


def load_csv(path) -> list:
    with open(path, newline="") as f:
        return read_csv(f, source=str(path))


def save_csv(records, path) -> None:
    with open(path, "w", newline="") as f:
        write_csv(records, f)


def format_table(rows, columns, headers=None) -> str:
    """Fixed-width text table."""
    headers = headers or columns
    cells = [[_fmt(r[c]) for c in columns] for r in rows]
    widths = [max([len(h)] + [len(row[i]) for row in cells]) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(c.rjust(w) if _numeric(c) else c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3f}"
    return str(v)


def _numeric(s):
    try:
        float(s)
        return True
    except ValueError:
        return False
