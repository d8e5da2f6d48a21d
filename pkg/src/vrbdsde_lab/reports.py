"""Deterministic CSV, summary and verdict writers.

Floats are written with ``repr`` (shortest round-trip form, '.' decimal), so
identical inputs give byte-identical files and every number reads back exactly.
"""
from __future__ import annotations

import csv
import io
import os

import numpy as np

from .scene import LatticeModel, popcount

INDEX_COLUMNS = ("time_index", "w_state", "b_suffix", "w_path", "b_path")
NODE_INDEX_COLUMNS = ("time_index", "w_state", "b_suffix")


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _path_rows(model: LatticeModel, columns: dict):
    n = model.steps
    nb = 2**n
    for i in range(n + 1):
        w_path = np.repeat(np.arange(2**i), nb)
        b_path = np.tile(np.arange(nb), 2**i)
        cols = [
            np.full(w_path.size, i),
            popcount(w_path),
            b_path >> i,
            w_path,
            b_path,
        ]
        for series in columns.values():
            s = series[i] if i < len(series) else None
            cols.append(None if s is None else np.asarray(model.full(s, i)).ravel())
        lists = [c.tolist() if c is not None else [None] * w_path.size for c in cols]
        yield from zip(*lists)


def _node_rows(model: LatticeModel, columns: dict):
    n = model.steps
    for i in range(n + 1):
        wcount, scount = model.node_shape(i)
        w_state = np.repeat(np.arange(wcount), scount)
        b_suffix = np.tile(np.arange(scount), wcount)
        cols = [np.full(w_state.size, i), w_state, b_suffix]
        for series in columns.values():
            s = series[i] if i < len(series) else None
            cols.append(None if s is None else model.project(s, i)[0].values.ravel())
        lists = [c.tolist() if c is not None else [None] * w_state.size for c in cols]
        yield from zip(*lists)


def csv_text(model: LatticeModel, columns: dict, granularity: str = "path") -> str:
    """One row per lattice state; ``columns`` maps a name to a list of time slices.

    A series shorter than N+1 (Z, L) leaves the trailing times blank.
    """
    head = INDEX_COLUMNS if granularity == "path" else NODE_INDEX_COLUMNS
    rows = _path_rows(model, columns) if granularity == "path" else _node_rows(model, columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(head) + list(columns))
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def table_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def summary_text(summary: dict) -> str:
    lines = []
    for key in sorted(summary):
        v = summary[key]
        text = v if isinstance(v, str) else ("True" if v is True else "False" if v is False else fmt(v))
        if "\n" in text or "=" in key:
            raise ValueError(f"summary entry {key!r} cannot be written as one key=value line")
        lines.append(f"{key}={text}")
    return "\n".join(lines) + "\n"


def parse_summary(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if line:
            key, _, value = line.partition("=")
            out[key] = value
    return out


def verdict_text(code: int) -> str:
    return ("PASS" if code == 0 else "FAIL") + f" {code}\n"


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_outputs(out_dir, files: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for name in sorted(files):
        write_text(os.path.join(out_dir, name), files[name])
