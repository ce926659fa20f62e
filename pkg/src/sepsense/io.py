"""Plain-text interchange formats.

* Dense matrices: CSV preceded by a ``# rows cols`` comment line.
* Edge lists: CSV ``source,target`` with one-based subsystem indices.
* Distance matrices: CSV with ``inf`` for unreachable pairs.
* Tables: CSV with a header line naming the columns.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graph import UNREACHABLE, InteractionGraph


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def write_matrix(path, M, sidecar: dict | None = None) -> None:
    """Dense CSV with a ``# rows cols`` header; optional ``<path>.json`` sidecar."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {M.shape[0]} {M.shape[1]}\n")
        w = csv.writer(fh, lineterminator="\n")
        for row in M:
            w.writerow([repr(float(v)) for v in row])
    if sidecar is not None:
        write_json(path.with_suffix(path.suffix + ".json"), sidecar)


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing '# rows cols' header")
        rows, cols = (int(t) for t in header[1:].split())
        data = [[float(v) for v in row] for row in csv.reader(fh) if row]
    M = np.array(data, dtype=float).reshape(rows, cols) if rows * cols else np.zeros((rows, cols))
    if M.shape != (rows, cols):
        raise ValueError(f"{path}: header says {rows}x{cols}, found {M.shape}")
    return M


def write_edges(path, g: InteractionGraph) -> None:
    write_table(path, ["source", "target"], [(i + 1, j + 1) for i, j in sorted(g.edges)])


def read_edges(path, s: int, symmetric: bool = False) -> InteractionGraph:
    with open(path) as fh:
        rows = list(csv.reader(fh))
    edges = [(int(a) - 1, int(b) - 1) for a, b in rows[1:] if a]
    return InteractionGraph.from_edges(s, edges, symmetric)


def write_distances(path, g: InteractionGraph) -> None:
    D = np.where(g.dist == UNREACHABLE, np.inf, g.dist.astype(float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in D:
            w.writerow(["inf" if np.isinf(v) else str(int(v)) for v in row])


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_table(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)


def write_array(path, X, prefix: str) -> None:
    """2-D (or 1-D) array as CSV with columns ``prefix1 .. prefixN``."""
    X = np.asarray(X, dtype=float)
    X2 = X.reshape(len(X), -1)
    header = [prefix] if X.ndim == 1 else [f"{prefix}{k + 1}" for k in range(X2.shape[1])]
    write_table(path, header, X2)


def read_array(path) -> np.ndarray:
    _, data = read_table(path)
    return data


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")
