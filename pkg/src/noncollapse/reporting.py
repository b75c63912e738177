"""Delimited output: CSV series with locale-independent 17-digit formatting."""

from __future__ import annotations

import json


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    return f"{float(v):.17g}"


def write_series(path, header, rows):
    """Write a CSV with the exact header, '\\n' newlines, 17 significant digits."""
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def read_series(path):
    """Read back a write_series file; numeric cells become floats."""
    with open(path, newline="") as f:
        lines = f.read().split("\n")
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        cells = []
        for cell in line.split(","):
            try:
                cells.append(float(cell))
            except ValueError:
                cells.append(cell)
        rows.append(cells)
    return header, rows


def write_summary(path, summary):
    with open(path, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
