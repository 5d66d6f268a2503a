"""Sampled planar paths and the path-based route from local to global monotonicity.

A path is stored as knots ``(t_k, p_k)`` with ``0 = t_0 < ... < t_last = 1`` and
``p_k`` in R^2.  For a univariate operator the plane is its graph space, so
the planar product condition ``(x1 - x2)(y1 - y2) >= 0`` is exactly the
monotonicity margin.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .checkers import DEFAULT_TOLERANCE, HOLDS, INCONCLUSIVE, REFUTED, CheckReport, \
    check_global_monotone
from .errors import ContractError, GraphFormatError
from .geometry import SampledGraph, row_dot

__all__ = [
    "PathSample",
    "ComponentVerdict",
    "load_path",
    "save_path",
    "path_from_graph",
    "default_window",
    "check_local_monotone_image",
    "component_monotonicity",
    "endpoint_extremality",
    "univariate_global_from_local",
    "INJECTIVITY_TOL",
]

INJECTIVITY_TOL = 1e-9


class PathSample:
    """Ordered knots of a path ``[0, 1] -> R^2``.

    ``strict=True`` (the default) rejects knot sequences that revisit a
    point within `INJECTIVITY_TOL`; ``strict=False`` keeps them so that
    diagnostics can still be run, and records the outcome in ``injective``.
    """

    def __init__(self, ts, points, strict: bool = True):
        t = np.asarray(ts, dtype=float).ravel()
        P = np.asarray(points, dtype=float).reshape(-1, 2)
        if t.size != P.shape[0] or t.size < 2:
            raise ContractError("a path needs at least two knots with one t per point")
        if not (np.isfinite(t).all() and np.isfinite(P).all()):
            raise ContractError("path knots must be finite")
        if t[0] != 0.0 or t[-1] != 1.0:
            raise ContractError("path parameters must start at 0 and end at 1")
        if not (np.diff(t) > 0).all():
            raise ContractError("path parameters must be strictly increasing")
        t.setflags(write=False)
        P.setflags(write=False)
        self.t = t
        self.P = P
        self.injective = _injective(P)
        if strict and not self.injective:
            raise ContractError("path knots are not pairwise distinct (path not injective)")

    def __len__(self):
        return self.t.size

    @classmethod
    def from_points(cls, points, strict: bool = True) -> "PathSample":
        """Knots parameterized by normalized cumulative arc length."""
        P = np.asarray(points, dtype=float).reshape(-1, 2)
        steps = np.sqrt(row_dot(np.diff(P, axis=0), np.diff(P, axis=0)))
        total = float(steps.sum())
        if not total > 0 or not (steps > 0).all():
            raise ContractError("consecutive knots must be distinct to parameterize by arc length")
        t = np.concatenate([[0.0], np.cumsum(steps) / total])
        t[-1] = 1.0
        return cls(t, P, strict=strict)

    @classmethod
    def from_function(cls, f, knots: int, strict: bool = True) -> "PathSample":
        t = np.linspace(0.0, 1.0, int(knots))
        return cls(t, [f(s) for s in t], strict=strict)

    @property
    def mesh(self) -> float:
        """Largest parameter gap between consecutive knots."""
        return float(np.diff(self.t).max())

    @property
    def spacing(self) -> float:
        """Largest distance between consecutive knot points."""
        d = np.diff(self.P, axis=0)
        return float(np.sqrt(row_dot(d, d)).max())

    def reversed(self) -> "PathSample":
        return PathSample(1.0 - self.t[::-1], self.P[::-1], strict=False)

    def swapped(self) -> "PathSample":
        return PathSample(self.t, self.P[:, ::-1], strict=False)

    def as_graph(self) -> SampledGraph:
        return SampledGraph(1, self.P[:, :1], self.P[:, 1:])


def _injective(P: np.ndarray) -> bool:
    pairs = cKDTree(P).query_pairs(INJECTIVITY_TOL)
    return not pairs


def path_from_graph(graph: SampledGraph, strict: bool = True) -> PathSample:
    """Use the points of a univariate graph, in stored order, as path knots."""
    if graph.dim != 1:
        raise ContractError("only univariate graphs can be traced in the plane")
    return PathSample.from_points(graph.stacked, strict=strict)


def load_path(path) -> PathSample:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text, parse_constant=lambda tok: (_ for _ in ()).throw(
            ValueError(f"non-finite number {tok}")))
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"malformed path JSON: {exc.msg}", exc.lineno, exc.colno) from None
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None
    try:
        knots = doc["knots"]
        ts = [float(k["t"]) for k in knots]
        ps = [[float(v) for v in k["p"]] for k in knots]
    except (KeyError, TypeError, ValueError):
        raise GraphFormatError('path JSON must be {"knots": [{"t": real, "p": [x, y]}, ...]}') \
            from None
    if any(len(p) != 2 for p in ps):
        raise GraphFormatError("every knot point must have two coordinates")
    return PathSample(ts, ps)


def save_path(path_sample: PathSample, path) -> None:
    doc = {"knots": [{"t": float(t), "p": [float(v) for v in p]}
                     for t, p in zip(path_sample.t, path_sample.P)]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def default_window(path: PathSample) -> float:
    """Three times the largest consecutive knot spacing."""
    return 3.0 * path.spacing


def _windows(P: np.ndarray, r: float) -> sparse.csr_matrix:
    """Symmetric 0/1 matrix marking knot pairs within distance ``r`` (diagonal included)."""
    n = P.shape[0]
    pairs = cKDTree(P).query_pairs(r * (1 + 1e-9), output_type="ndarray")
    d = P[pairs[:, 0]] - P[pairs[:, 1]]
    pairs = pairs[np.sqrt(row_dot(d, d)) <= r]
    rows = np.concatenate([pairs[:, 0], pairs[:, 1], np.arange(n)])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0], np.arange(n)])
    return sparse.csr_matrix((np.ones(rows.size, dtype=np.int32), (rows, cols)), shape=(n, n))


def check_local_monotone_image(path: PathSample, window_radius: float | None = None,
                               tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """Product condition ``(x1 - x2)(y1 - y2) >= -tol`` inside every knot's window.

    Windows are closed balls of ``window_radius`` around each knot point.
    The first failing center (in knot order) is reported in
    ``detail["center"]`` together with the lexicographically first violating
    pair inside its window.  ``pairs_checked`` counts distinct pairs that
    share at least one window.
    """
    r = default_window(path) if window_radius is None else float(window_radius)
    if not r > 0:
        raise ContractError("window radius must be positive")
    tol = float(tolerance)
    P = path.P
    A = _windows(P, r)
    # a pair shares a window iff some knot lies within r of both points
    S = sparse.triu(A.T @ A, k=1).tocoo()
    order = np.lexsort((S.col, S.row))
    I, J = S.row[order].astype(int), S.col[order].astype(int)
    rep = CheckReport(HOLDS, tol, int(I.size), detail={"window_radius": r})
    if I.size == 0:
        return rep
    m = (P[I, 0] - P[J, 0]) * (P[I, 1] - P[J, 1])
    k = int(np.argmin(m))
    rep.min_margin, rep.min_pair = float(m[k]), (int(I[k]), int(J[k]))
    bad = np.flatnonzero(m < -tol)
    if bad.size == 0:
        rep.margin = rep.min_margin
        return rep
    # A is symmetric, so column i lists the centers whose window holds knot i
    Ac = A.tocsc()

    def centers(b):
        ci = set(Ac.indices[Ac.indptr[I[b]]:Ac.indptr[I[b] + 1]].tolist())
        cj = set(Ac.indices[Ac.indptr[J[b]]:Ac.indptr[J[b] + 1]].tolist())
        return ci & cj

    shared = [(b, centers(b)) for b in bad]
    center = min(min(cs) for _, cs in shared)
    b = next(b for b, cs in shared if center in cs)
    rep.status = REFUTED
    rep.witness, rep.margin = (int(I[b]), int(J[b])), float(m[b])
    rep.detail["center"] = center
    return rep


def _classify(v: np.ndarray, tol: float) -> str:
    if float(v.max() - v.min()) <= tol:
        return "constant"
    if (v[1:] >= np.maximum.accumulate(v)[:-1] - tol).all():
        return "nondecreasing"
    if (v[1:] <= np.minimum.accumulate(v)[:-1] + tol).all():
        return "nonincreasing"
    return "none"


@dataclass
class ComponentVerdict:
    first: str
    second: str
    injective: bool
    locally_monotone: bool

    @property
    def precondition_holds(self) -> bool:
        return self.injective and self.locally_monotone

    @property
    def flagged(self) -> bool:
        """A component fails to be monotone (allowed only when the precondition fails)."""
        return "none" in (self.first, self.second)

    def to_dict(self) -> dict:
        return {"first": self.first, "second": self.second, "injective": self.injective,
                "locally_monotone": self.locally_monotone,
                "precondition_holds": self.precondition_holds, "flagged": self.flagged}


def component_monotonicity(path: PathSample, tolerance: float = DEFAULT_TOLERANCE,
                           window_radius: float | None = None) -> ComponentVerdict:
    """Classify each coordinate sequence along the knots.

    Classes are ``constant``, ``nondecreasing``, ``nonincreasing`` or
    ``none``; ties within ``tolerance`` are allowed.  The verdict also records
    whether the path satisfies the injectivity and local-image preconditions
    under which both components must come out monotone.
    """
    local = check_local_monotone_image(path, window_radius, tolerance)
    return ComponentVerdict(_classify(path.P[:, 0], tolerance), _classify(path.P[:, 1], tolerance),
                            path.injective, local.holds)


def _near_run(P: np.ndarray, start: int, step: int, r: float) -> list[int]:
    """Consecutive knots after ``start`` (in direction ``step``) staying within ``r`` of it."""
    out = []
    k = start + step
    while 0 <= k < P.shape[0]:
        d = P[k] - P[start]
        if math.sqrt(float(d @ d)) > r:
            break
        out.append(k)
        k += step
    return out


def _extremality(P: np.ndarray, comp: int, r: float, tol: float):
    """Check the endpoint claims for coordinate ``comp``; returns (case, failure or None)."""
    v = P[:, comp]
    last = P.shape[0] - 1
    a, b = v[0], v[last]
    if abs(a - b) <= tol:
        k = int(np.argmax(np.abs(v - a)))
        if abs(v[k] - a) > tol:
            return "constant", ("not-constant", (0, k), -float(abs(v[k] - a)))
        return "constant", None
    if a < b:
        case, lo_end, hi_end = "increasing", 0, last
    else:
        case, lo_end, hi_end = "decreasing", last, 0
    k = int(np.argmin(v))
    if v[k] < v[lo_end] - tol:
        return case, ("min-not-at-endpoint", tuple(sorted((lo_end, k))), float(v[k] - v[lo_end]))
    k = int(np.argmax(v))
    if v[k] > v[hi_end] + tol:
        return case, ("max-not-at-endpoint", tuple(sorted((hi_end, k))), float(v[hi_end] - v[k]))
    # knots near the low endpoint lie in its upper orthant, near the high one in its lower
    for end, sign in ((lo_end, 1.0), (hi_end, -1.0)):
        step = 1 if end == 0 else -1
        for k in _near_run(P, end, step, r):
            gap = sign * (P[k] - P[end])
            if (gap < -tol).any():
                return case, ("orthant", tuple(sorted((end, k))), float(gap.min()))
    return case, None


def endpoint_extremality(path: PathSample, window_radius: float | None = None,
                         tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """Endpoint extremality and near-endpoint orthant inclusions for both coordinates.

    Requires the local-image condition; if it fails the report is
    inconclusive and ``detail["failing_center"]`` points at the offending
    window.
    """
    r = default_window(path) if window_radius is None else float(window_radius)
    tol = float(tolerance)
    pre = check_local_monotone_image(path, r, tol)
    if not pre.holds:
        return CheckReport(INCONCLUSIVE, tol, pre.pairs_checked,
                           detail={"reason": "local-image precondition fails",
                                   "failing_center": pre.detail.get("center"),
                                   "failing_pair": list(pre.witness) if pre.witness else None,
                                   "window_radius": r})
    rep = CheckReport(HOLDS, tol, pre.pairs_checked, detail={"window_radius": r})
    for comp in (0, 1):
        case, failure = _extremality(path.P, comp, r, tol)
        rep.detail[f"component_{comp + 1}"] = case
        if failure is not None and rep.holds:
            kind, pair, margin = failure
            rep.status = REFUTED
            rep.witness, rep.margin = pair, margin
            rep.detail["failure"] = {"component": comp + 1, "kind": kind}
    return rep


def univariate_global_from_local(graph: SampledGraph, trace: PathSample,
                                 tolerance: float = DEFAULT_TOLERANCE,
                                 window_radius: float | None = None) -> CheckReport:
    """Run the local-image check along ``trace`` and the global check on ``graph``.

    ``trace`` must consist of graph points and visit every graph point (both
    within ``tolerance``), otherwise `ContractError` is raised.  The report is
    the global verdict with ``detail["diagnostic"]`` set to

    ``agreement``          local and global both hold;
    ``premise-fails``      the local-image check refutes (nothing is claimed);
    ``THEOREM-VIOLATION``  local holds but global is refuted, which signals a
                           bug or a window too small for the knot spacing.
    """
    if graph.dim != 1:
        raise ContractError("univariate_global_from_local needs a graph of dimension 1")
    tol = float(tolerance)
    match = max(tol, 0.0)
    d_knot, _ = graph._tree.query(trace.P)
    if (d_knot > match).any():
        k = int(np.argmax(d_knot > match))
        raise ContractError(f"trace knot {k} at {tuple(trace.P[k])} is not a graph point")
    d_graph, _ = cKDTree(trace.P).query(graph.stacked)
    if (d_graph > match).any():
        k = int(np.argmax(d_graph > match))
        raise ContractError(f"graph point {k} is not visited by the trace")
    local = check_local_monotone_image(trace, window_radius, tol)
    rep = check_global_monotone(graph, tol)
    if not local.holds:
        diagnostic = "premise-fails"
    elif rep.holds:
        diagnostic = "agreement"
    else:
        diagnostic = "THEOREM-VIOLATION"
    rep.detail.update(diagnostic=diagnostic, local=local.to_dict(),
                      window_radius=local.detail["window_radius"])
    return rep
