"""Sweep serialization: CSV (RFC 4180, '.' decimal) and JSON lines.

Floats are written with ``repr`` so that parsing the emitted file restores
every row bit for bit; metadata travels in '#'-prefixed header lines (CSV)
or a leading meta object (JSON lines).  The data section is byte-identical
for identical configuration, seed and backend.
"""

from __future__ import annotations

import csv
import io
import json
import math

from .runner import COLUMNS, SweepData

__all__ = ["emit_csv", "parse_csv", "emit_jsonl", "parse_jsonl", "write_sweep", "read_sweep"]

_BOOL_COLUMNS = {"noise_limited", "eta_coh_below_0p9", "artificial_significant"}
_STR_COLUMNS = {"sequence", "guard_flag"}
_INT_COLUMNS = {"m"}


def _format_value(column: str, value) -> str:
    if column in _STR_COLUMNS:
        return str(value)
    if column in _BOOL_COLUMNS:
        return "true" if value else "false"
    if column in _INT_COLUMNS:
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _parse_value(column: str, text: str):
    if column in _STR_COLUMNS:
        return text
    if column in _BOOL_COLUMNS:
        return text == "true"
    if column in _INT_COLUMNS:
        return int(text)
    return float(text)


def emit_csv(data: SweepData) -> str:
    buf = io.StringIO()
    for key, value in sorted(data.meta.items()):
        buf.write(f"# {key}={value}\r\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(COLUMNS)
    for row in data.rows:
        writer.writerow([_format_value(c, row[c]) for c in COLUMNS])
    return buf.getvalue()


def parse_csv(text: str) -> SweepData:
    meta = {}
    lines = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = value
        elif line.strip():
            lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    rows = [{c: _parse_value(c, v) for c, v in zip(header, row)} for row in reader]
    return SweepData(meta=meta, rows=rows)


def _jsonable(row: dict) -> dict:
    out = {}
    for key, value in row.items():
        if isinstance(value, float) and not math.isfinite(value):
            out[key] = repr(value)  # json has no inf/nan literals
        else:
            out[key] = value
    return out


def _unjsonable(row: dict) -> dict:
    out = {}
    for key, value in row.items():
        if isinstance(value, str) and value in ("inf", "-inf", "nan"):
            out[key] = float(value)
        else:
            out[key] = value
    return out


def emit_jsonl(data: SweepData) -> str:
    lines = [json.dumps({"meta": data.meta}, sort_keys=True)]
    lines.extend(json.dumps(_jsonable(row), sort_keys=True) for row in data.rows)
    return "\n".join(lines) + "\n"


def parse_jsonl(text: str) -> SweepData:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    meta = json.loads(lines[0])["meta"]
    rows = [_unjsonable(json.loads(ln)) for ln in lines[1:]]
    return SweepData(meta=meta, rows=rows)


def write_sweep(data: SweepData, path: str, fmt: str = "csv") -> None:
    text = emit_csv(data) if fmt == "csv" else emit_jsonl(data)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_sweep(path: str) -> SweepData:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return parse_jsonl(text)
    return parse_csv(text)
