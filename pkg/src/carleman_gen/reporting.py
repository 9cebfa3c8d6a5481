"""Deterministic JSON and CSV writers for run reports."""

from __future__ import annotations

import csv
import json
import math
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__

__all__ = ["to_jsonable", "write_report", "write_csv"]


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become the strings "inf", "-inf", "nan"."""
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, complex):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    return obj


def write_report(path, command: str, config: dict, body: dict) -> Path:
    """Write ``{"command", "config", "version", **body}`` with sorted keys."""
    doc = {"command": command, "config": config, "version": __version__}
    doc.update(body)
    p = Path(path)
    with open(p, "w") as fh:
        json.dump(to_jsonable(doc), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return p


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Floats are written with 15 significant digits."""
    p = Path(path)
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.15g}" if isinstance(v, (float, np.floating)) else v for v in row])
    return p
