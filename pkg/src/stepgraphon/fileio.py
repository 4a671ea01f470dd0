"""Reading and writing graphons, graphs, partitions, spectra and measures.

Floats are written with ``repr`` (shortest round-trip form), so re-reading a
file reproduces every value bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .core import AtomPartition, SimpleGraph, StepGraphon, make_step_graphon
from .errors import GraphonError


class ParseError(GraphonError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = f"{path}:{line}: " if path and line else (f"{path}: " if path else "")
        super().__init__(loc + message)
        self.path = path
        self.line = line


def _read_json(path) -> Any:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, str(path), e.lineno) from None


def _to_builtin(obj):
    if isinstance(obj, dict):
        return {str(k): _to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_builtin(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_to_builtin(obj), indent=2, allow_nan=True) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def graphon_from_dict(d: dict, path: str | None = None) -> StepGraphon:
    if not isinstance(d, dict):
        raise ParseError("graphon file must hold a JSON object", path)
    missing = {"weights", "values"} - set(d)
    if missing:
        raise ParseError(f"missing keys {sorted(missing)}", path)
    return make_step_graphon(d["weights"], d["values"], d.get("kind", "graphon"), d.get("bound"))


def load_graphon(path) -> StepGraphon:
    return graphon_from_dict(_read_json(path), str(path))


def save_graphon(W: StepGraphon, path) -> None:
    write_json(W.to_dict(), path)


def load_graph(path) -> SimpleGraph:
    """Edge list: first line the vertex count, then one ``u v`` pair per line (0-indexed)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    rows = [(i + 1, ln.split("#")[0].strip()) for i, ln in enumerate(lines)]
    rows = [(i, ln) for i, ln in rows if ln]
    if not rows:
        raise ParseError("empty graph file", str(path))
    try:
        n = int(rows[0][1])
    except ValueError:
        raise ParseError("first line must be the vertex count", str(path), rows[0][0]) from None
    edges = []
    for lineno, ln in rows[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ParseError("expected 'u v'", str(path), lineno)
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ParseError("vertex ids must be integers", str(path), lineno) from None
    try:
        return SimpleGraph(n, tuple(edges), Path(path).stem)
    except GraphonError as e:
        raise ParseError(str(e), str(path)) from None


def load_partition(path) -> AtomPartition:
    d = _read_json(path)
    part_of = d["part_of"] if isinstance(d, dict) else d
    if not isinstance(part_of, list):
        raise ParseError("partition must be a part_of array", str(path))
    return AtomPartition(tuple(part_of), d.get("part_count", -1) if isinstance(d, dict) else -1)


def save_partition(P: AtomPartition, path) -> None:
    write_json(P.to_dict(), path)
