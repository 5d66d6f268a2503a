"""Reading and writing sampled graphs as JSON or CSV.

JSON::

    {"dim": n, "name": "optional", "points": [{"x": [...], "y": [...]}, ...]}

CSV: header ``x1,...,xn,y1,...,yn`` followed by one point per row.

Floats are written with ``repr`` (shortest round-trip form), so a
save/load cycle reproduces every coordinate bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re

import numpy as np

from .errors import GraphFormatError, GraphValidationError
from .geometry import SampledGraph

__all__ = ["load_graph", "save_graph", "graph_to_json", "graph_from_json", "graph_to_csv",
           "graph_from_csv"]


def _reject_constant(token):
    raise ValueError(f"non-finite number {token!r} is not allowed")


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def graph_to_json(graph: SampledGraph) -> str:
    doc = {"dim": graph.dim}
    if graph.name is not None:
        doc["name"] = graph.name
    doc["points"] = [{"x": [float(v) for v in x], "y": [float(v) for v in y]}
                     for x, y in zip(graph.X, graph.Y)]
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def graph_from_json(text: str) -> SampledGraph:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"malformed JSON: {exc.msg}", exc.lineno, exc.colno) from None
    except ValueError as exc:
        # parse_constant fires on NaN/Infinity; locate the first such token
        m = re.search(r"-?(NaN|Infinity)", text)
        line, col = _position(text, m.start()) if m else (None, None)
        raise GraphFormatError(str(exc), line, col) from None

    if not isinstance(doc, dict) or "dim" not in doc or "points" not in doc:
        raise GraphFormatError('graph JSON needs an object with "dim" and "points"')
    dim = doc["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise GraphFormatError(f'"dim" must be a positive integer, got {dim!r}')
    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise GraphFormatError('"name" must be a string')
    if not isinstance(doc["points"], list):
        raise GraphFormatError('"points" must be a list')
    xs, ys = [], []
    for i, pt in enumerate(doc["points"]):
        if not isinstance(pt, dict) or "x" not in pt or "y" not in pt:
            raise GraphFormatError(f"point {i} must be an object with x and y")
        x, y = pt["x"], pt["y"]
        if not (isinstance(x, list) and isinstance(y, list)) or len(x) != dim or len(y) != dim:
            raise GraphValidationError(
                f"point {i}: x and y must be lists of length dim={dim}")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x + y):
            raise GraphFormatError(f"point {i}: coordinates must be numbers")
        xs.append([float(v) for v in x])
        ys.append([float(v) for v in y])
    return SampledGraph(dim, xs, ys, name=name)


def graph_to_csv(graph: SampledGraph) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = graph.dim
    w.writerow([f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)])
    for row in graph.stacked:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def graph_from_csv(text: str, name: str | None = None) -> SampledGraph:
    rows = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(rows)]
    except StopIteration:
        raise GraphFormatError("empty CSV file", 1) from None
    if len(header) % 2 or not header:
        raise GraphFormatError("CSV header must list x1..xn,y1..yn", 1)
    n = len(header) // 2
    expected = [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
    if header != expected:
        raise GraphFormatError(f"CSV header must be {','.join(expected)}", 1)
    data = []
    for row in rows:
        lineno = rows.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2 * n:
            raise GraphValidationError(f"expected {2 * n} fields, got {len(row)}", lineno)
        values = []
        for col, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise GraphFormatError(f"not a number: {cell!r}", lineno, col) from None
            if not math.isfinite(v):
                raise GraphFormatError(f"non-finite number {cell!r}", lineno, col)
            values.append(v)
        data.append(values)
    arr = np.asarray(data, dtype=float).reshape(-1, 2 * n)
    return SampledGraph(n, arr[:, :n], arr[:, n:], name=name)


def _format_for(path, fmt):
    if fmt is not None:
        return fmt
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".json", ".csv"):
        return ext[1:]
    raise GraphFormatError(f"cannot infer graph format from {path!r}; pass format=")


def save_graph(graph: SampledGraph, path, format: str | None = None) -> None:
    fmt = _format_for(path, format)
    text = graph_to_json(graph) if fmt == "json" else graph_to_csv(graph)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def load_graph(path, format: str | None = None) -> SampledGraph:
    fmt = _format_for(path, format)
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    if fmt == "json":
        return graph_from_json(text)
    if fmt == "csv":
        return graph_from_csv(text)
    raise GraphFormatError(f"unknown graph format {fmt!r}")
