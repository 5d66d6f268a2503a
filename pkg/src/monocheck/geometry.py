"""Graph points, sampled graphs and the product-space primitives used by every check.

A graph point is a pair ``(x, y)`` with ``x, y`` in R^n; a sampled graph is a
finite, ordered, immutable collection of such pairs standing for the graph of
a set-valued operator.  All inner products are evaluated coordinate by
coordinate in a fixed left-to-right order so that a margin computed for a
single pair is bit-identical to the same margin computed inside a vectorized
row scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import ContractError

__all__ = [
    "GraphPoint",
    "SampledGraph",
    "NeighborhoodSpec",
    "DomainBall",
    "Slice",
    "as_vector",
    "fixed_dot",
    "row_dot",
    "monotonicity_margin",
    "product_distances",
    "range_query",
    "range_query_scan",
    "region_indices",
]


def as_vector(values, dim: int | None = None) -> tuple[float, ...]:
    """Return ``values`` as a tuple of finite floats, optionally checking its length."""
    out = tuple(float(v) for v in np.atleast_1d(np.asarray(values, dtype=float)).ravel())
    if not out:
        raise ContractError("vectors must have at least one entry")
    if not all(math.isfinite(v) for v in out):
        raise ContractError(f"vector entries must be finite, got {out}")
    if dim is not None and len(out) != dim:
        raise ContractError(f"expected a vector of dimension {dim}, got {len(out)}")
    return out


def fixed_dot(a: Sequence[float], b: Sequence[float]) -> float:
    """Inner product summed strictly left to right."""
    acc = a[0] * b[0]
    for k in range(1, len(a)):
        acc = acc + a[k] * b[k]
    return float(acc)


def row_dot(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Row-wise inner products of two ``(m, d)`` arrays, same summation order as `fixed_dot`."""
    acc = A[:, 0] * B[:, 0]
    for k in range(1, A.shape[1]):
        acc = acc + A[:, k] * B[:, k]
    return acc


@dataclass(frozen=True)
class GraphPoint:
    """A pair ``(x, y)`` of equal-dimension vectors."""

    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        x = as_vector(self.x)
        y = as_vector(self.y)
        if len(x) != len(y):
            raise ContractError(f"x has dimension {len(x)} but y has dimension {len(y)}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def dim(self) -> int:
        return len(self.x)

    def stacked(self) -> np.ndarray:
        return np.array(self.x + self.y, dtype=float)

    @classmethod
    def from_stacked(cls, values: Sequence[float]) -> "GraphPoint":
        values = as_vector(values)
        if len(values) % 2:
            raise ContractError("a stacked graph point needs an even number of entries")
        n = len(values) // 2
        return cls(values[:n], values[n:])


def monotonicity_margin(p: GraphPoint, q: GraphPoint) -> float:
    """Return ``<p.y - q.y, p.x - q.x>``.

    >>> monotonicity_margin(GraphPoint((1, 0), (0, 2)), GraphPoint((0, 1), (-1, 0)))
    -1.0
    """
    if p.dim != q.dim:
        raise ContractError(f"dimension mismatch: {p.dim} vs {q.dim}")
    dy = [a - b for a, b in zip(p.y, q.y)]
    dx = [a - b for a, b in zip(p.x, q.x)]
    return fixed_dot(dy, dx)


class SampledGraph:
    """Finite, immutable stand-in for the graph of an operator ``T: R^n => R^n``.

    Points keep their insertion order.  ``window`` optionally records the
    axis-aligned domain box the sampler examined (``(lo, hi)`` tuples); it is
    metadata only and never influences the pairwise checks.
    """

    def __init__(self, dim: int, xs, ys, name: str | None = None, window=None,
                 sampling: dict | None = None):
        dim = int(dim)
        if dim < 1:
            raise ContractError("graph dimension must be a positive integer")
        X = np.array(xs, dtype=float).reshape(-1, dim) if len(xs) else np.empty((0, dim))
        Y = np.array(ys, dtype=float).reshape(-1, dim) if len(ys) else np.empty((0, dim))
        if X.shape != Y.shape:
            raise ContractError("x and y arrays must have matching shapes")
        if not (np.isfinite(X).all() and np.isfinite(Y).all()):
            raise ContractError("graph coordinates must be finite")
        X.setflags(write=False)
        Y.setflags(write=False)
        self.dim = dim
        self.X = X
        self.Y = Y
        self.name = name
        if window is not None:
            lo, hi = (as_vector(window[0], dim), as_vector(window[1], dim))
            window = (lo, hi)
        self.window = window
        # sampler bookkeeping (domain points visited, hits, declared radius)
        self.sampling = dict(sampling) if sampling else {}

    @classmethod
    def from_points(cls, points: Iterable[GraphPoint], dim: int | None = None,
                    name: str | None = None, window=None) -> "SampledGraph":
        points = list(points)
        if dim is None:
            if not points:
                raise ContractError("cannot infer the dimension of an empty point list")
            dim = points[0].dim
        for p in points:
            if p.dim != dim:
                raise ContractError(f"point {p} does not have dimension {dim}")
        return cls(dim, [p.x for p in points], [p.y for p in points], name=name, window=window)

    def __len__(self) -> int:
        return self.X.shape[0]

    def __iter__(self):
        return iter(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SampledGraph):
            return NotImplemented
        return (self.dim == other.dim and self.name == other.name
                and self.X.shape == other.X.shape
                and self.X.tobytes() == other.X.tobytes()
                and self.Y.tobytes() == other.Y.tobytes())

    __hash__ = None

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"<SampledGraph{label} dim={self.dim} points={len(self)}>"

    def point(self, i: int) -> GraphPoint:
        return GraphPoint(tuple(self.X[i]), tuple(self.Y[i]))

    @property
    def points(self) -> list[GraphPoint]:
        return [self.point(i) for i in range(len(self))]

    @cached_property
    def stacked(self) -> np.ndarray:
        """``(N, 2n)`` array of points in product space."""
        Z = np.hstack([self.X, self.Y])
        Z.setflags(write=False)
        return Z

    @cached_property
    def _tree(self) -> cKDTree:
        return cKDTree(self.stacked)

    def subgraph(self, indices) -> "SampledGraph":
        idx = np.asarray(indices, dtype=int)
        return SampledGraph(self.dim, self.X[idx], self.Y[idx], name=self.name)

    def with_points(self, extra: Iterable[GraphPoint]) -> "SampledGraph":
        """New graph with ``extra`` appended after the existing points."""
        extra = list(extra)
        for p in extra:
            if p.dim != self.dim:
                raise ContractError(f"point {p} does not have dimension {self.dim}")
        if not extra:
            return self
        X = np.vstack([self.X, [p.x for p in extra]])
        Y = np.vstack([self.Y, [p.y for p in extra]])
        return SampledGraph(self.dim, X, Y, name=self.name, window=self.window)

    def shifted(self, r: float) -> "SampledGraph":
        """Graph of ``T + r I``."""
        return SampledGraph(self.dim, self.X, self.Y + r * self.X, name=self.name,
                            window=self.window)


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Closed Euclidean ball in product space around a graph point."""

    center: GraphPoint
    radius: float

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ContractError(f"neighborhood radius must be positive and finite, got {self.radius}")


@dataclass(frozen=True)
class DomainBall:
    """Open ball ``{|x - center| < radius}`` in domain space, unrestricted in y."""

    center: tuple[float, ...]
    radius: float

    def mask(self, graph: SampledGraph) -> np.ndarray:
        c = np.asarray(as_vector(self.center, graph.dim))
        d = np.sqrt(row_dot(graph.X - c, graph.X - c))
        return d < self.radius


@dataclass(frozen=True)
class Slice:
    """Open half-space ``{coordinate > lower}`` on one product-space coordinate.

    ``coordinate`` indexes the stacked point ``(x1..xn, y1..yn)``.
    """

    coordinate: int
    lower: float

    def mask(self, graph: SampledGraph) -> np.ndarray:
        if not 0 <= self.coordinate < 2 * graph.dim:
            raise ContractError(f"slice coordinate {self.coordinate} out of range")
        return graph.stacked[:, self.coordinate] > self.lower


def region_indices(graph: SampledGraph, regions: Sequence) -> list[int]:
    """Indices of points lying in the intersection of ``regions`` (ascending)."""
    mask = np.ones(len(graph), dtype=bool)
    for region in regions:
        mask &= region.mask(graph)
    return np.flatnonzero(mask).tolist()


def product_distances(graph: SampledGraph, center: Sequence[float]) -> np.ndarray:
    """Euclidean distances in R^{2n} from every graph point to ``center``."""
    c = np.asarray(center, dtype=float)
    diff = graph.stacked - c
    return np.sqrt(row_dot(diff, diff))


def _check_center(graph: SampledGraph, spec: NeighborhoodSpec) -> np.ndarray:
    if spec.center.dim != graph.dim:
        raise ContractError(
            f"neighborhood center has dimension {spec.center.dim}, graph has {graph.dim}")
    return spec.center.stacked()


def range_query_scan(graph: SampledGraph, spec: NeighborhoodSpec) -> list[int]:
    """Exhaustive-scan reference for `range_query`."""
    c = _check_center(graph, spec)
    if len(graph) == 0:
        return []
    return np.flatnonzero(product_distances(graph, c) <= spec.radius).tolist()


def range_query(graph: SampledGraph, spec: NeighborhoodSpec) -> list[int]:
    """Indices ``i`` with ``|(x_i, y_i) - center| <= radius`` in ascending order.

    The k-d tree only prunes: candidates come from a slightly inflated ball and
    are then filtered with the exact predicate used by `range_query_scan`, so
    both routes agree bit for bit on boundary cases.
    """
    c = _check_center(graph, spec)
    if len(graph) == 0:
        return []
    inflated = spec.radius * (1.0 + 1e-9) + 1e-300
    cand = np.asarray(graph._tree.query_ball_point(c, inflated), dtype=int)
    if cand.size == 0:
        return []
    cand.sort()
    diff = graph.stacked[cand] - c
    keep = np.sqrt(row_dot(diff, diff)) <= spec.radius
    return cand[keep].tolist()
