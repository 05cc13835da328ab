"""Output writers: CSV (comma, '.', LF) with ``# key: value`` header comments, and NDJSON.

NDJSON files carry their metadata as a first ``{"meta": {...}}`` line so every
line stays valid JSON.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):  # numpy scalar
        return format_value(v.item())
    return str(v)


def header_lines(meta: dict[str, str]) -> str:
    return "".join(f"# {k}: {v}\n" for k, v in meta.items())


def csv_text(columns: Sequence[str], rows: Iterable[Sequence], meta: dict[str, str] | None = None) -> str:
    out = io.StringIO()
    if meta:
        out.write(header_lines(meta))
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
        w.writerow([format_value(v) for v in row])
    return out.getvalue()


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence],
              meta: dict[str, str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(columns, rows, meta))
    return path


def read_csv(path: str | Path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Header metadata and rows (as string dicts) of a file written by ``write_csv``."""
    meta, body = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, value = line[2:].rstrip("\n").partition(": ")
                meta[key] = value
            else:
                body.append(line)
    return meta, list(csv.DictReader(body))


def write_ndjson(path: str | Path, text: str, meta: dict[str, str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if meta:
            fh.write(json.dumps({"meta": meta}, sort_keys=True, separators=(",", ":")) + "\n")
        fh.write(text)
    return path


__all__ = ["csv_text", "format_value", "read_csv", "write_csv", "write_ndjson"]
