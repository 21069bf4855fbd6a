"""CSV and JSON-sidecar writers shared by the library and the CLI.

Floats are written with ``repr`` (shortest round-trip form) so repeated runs
produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import __version__


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def default_comment() -> str:
    return f"# btlimit {__version__}"


def write_csv(path, header, rows, comment: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write((comment or default_comment()) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


def read_csv(path):
    """Return ``(header, rows)`` with comment lines skipped; values stay strings."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    return rows[0], rows[1:]


def write_columns(path, columns: dict, comment: str | None = None) -> Path:
    """Write equal-length 1-D arrays as named columns."""
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    if len({a.shape for a in arrays}) > 1 or any(a.ndim != 1 for a in arrays):
        raise ValueError("columns must be 1-D arrays of equal length")
    return write_csv(path, names, zip(*arrays), comment)


def write_sidecar(path, params: dict) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(params, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
