"""CSV emission with a fixed, platform-independent byte layout."""

from __future__ import annotations

import csv
import os
from typing import Iterable, Sequence

import numpy as np


def format_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".10g")
    return str(x)


def emit_csv(records: Iterable[Sequence], columns: Sequence[str], path) -> str:
    """Write a header row then one line per record.

    Reals use 10 significant digits, lines end in a bare LF.  Raises
    OSError naming the path if it cannot be written.
    """
    path = os.fspath(path)
    parent = os.path.dirname(path)
    try:
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for k, rec in enumerate(records):
                if len(rec) != len(columns):
                    raise ValueError(f"record {k} has {len(rec)} fields, expected {len(columns)}")
                w.writerow([format_cell(x) for x in rec])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path
