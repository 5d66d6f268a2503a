"""Witness-producing monotonicity checks on sampled graphs.

Every pairwise scan visits the pairs ``(i, j)``, ``i < j``, row by row.  The
pair space may be split into contiguous row blocks handled by worker
threads; the per-block results are combined with an associative reduction
(first violating pair in lexicographic order, most negative margin with
lexicographic tie-break), so reports do not depend on the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .catalog import OperatorSpec
from .errors import ContractError, PreconditionError
from .geometry import (
    GraphPoint,
    NeighborhoodSpec,
    SampledGraph,
    as_vector,
    product_distances,
    range_query,
    region_indices,
    row_dot,
)

__all__ = [
    "DEFAULT_TOLERANCE",
    "CheckReport",
    "ModulusEstimate",
    "ProbeResult",
    "check_global_monotone",
    "check_local_monotone",
    "check_region_monotone",
    "local_radius",
    "hypomonotonicity_modulus",
    "maximality_probe",
    "local_maximality_probe",
    "segment_scan",
]

DEFAULT_TOLERANCE = 1e-9
HOLDS, REFUTED, INCONCLUSIVE = "holds", "refuted", "inconclusive"


def _json_float(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


@dataclass
class CheckReport:
    """Verdict of a monotonicity check.

    ``witness``/``margin`` describe the lexicographically first violating pair
    (for ``holds`` reports, ``margin`` is the smallest margin seen).
    ``min_margin``/``min_pair`` always describe the most negative margin over
    all scanned pairs.
    """

    status: str
    tolerance: float
    pairs_checked: int = 0
    witness: tuple | None = None
    margin: float | None = None
    min_margin: float | None = None
    min_pair: tuple | None = None
    restriction_size: int | None = None
    detail: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status == HOLDS

    @property
    def refuted(self) -> bool:
        return self.status == REFUTED

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("margin", "min_margin"):
            d[key] = _json_float(d[key])
        for key in ("witness", "min_pair"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d


@dataclass
class ModulusEstimate:
    """Lower bound, from the samples, on the hypomonotonicity modulus."""

    r_hat: float
    attaining_pair: tuple | None
    pairs_used: int
    pairs_skipped: int
    note: str = "lower bound on sampled graph"

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.attaining_pair is not None:
            d["attaining_pair"] = list(self.attaining_pair)
        return d


@dataclass
class ProbeResult:
    """Probe points that extend the sampled graph monotonically.

    ``candidates`` are the probe points actually tested (after any window
    filter), ``min_margins[k]`` the worst margin of ``candidates[k]`` against
    the (restricted) graph, and ``present[k]`` whether it already belongs to
    the graph.
    """

    addable: list
    addable_indices: list
    candidates: list
    min_margins: list
    present: list
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "addable": [{"x": list(p.x), "y": list(p.y)} for p in self.addable],
            "addable_indices": list(self.addable_indices),
            "candidates": len(self.candidates),
            "min_margins": [_json_float(m) for m in self.min_margins],
            "present": list(self.present),
            "tolerance": self.tolerance,
        }


# -- pair scan -------------------------------------------------------------

@dataclass
class _Block:
    first: tuple | None = None      # (i, j, margin)
    worst: tuple | None = None      # (margin, i, j)


def _scan_rows(X: np.ndarray, Y: np.ndarray, rows: range, tol: float) -> _Block:
    out = _Block()
    n = X.shape[0]
    for i in rows:
        if i >= n - 1:
            break
        m = row_dot(Y[i + 1:] - Y[i], X[i + 1:] - X[i])
        k = int(np.argmin(m))
        if out.worst is None or m[k] < out.worst[0]:
            out.worst = (float(m[k]), i, i + 1 + k)
        if out.first is None:
            bad = np.flatnonzero(m < -tol)
            if bad.size:
                j = i + 1 + int(bad[0])
                out.first = (i, j, float(m[bad[0]]))
    return out


def _row_blocks(n: int, parts: int) -> list[range]:
    """Split rows ``0..n-2`` into contiguous blocks with roughly equal pair counts."""
    rows = max(n - 1, 0)
    parts = max(1, min(parts, rows or 1))
    total = n * (n - 1) // 2
    bounds = [0]
    acc = 0
    target = total / parts
    for i in range(rows):
        acc += n - 1 - i
        if acc >= target * len(bounds) and len(bounds) < parts:
            bounds.append(i + 1)
    bounds.append(rows)
    return [range(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]


def _reduce(blocks: Sequence[_Block]) -> _Block:
    out = _Block()
    for b in blocks:
        if out.first is None and b.first is not None:
            out.first = b.first
        if b.worst is not None and (out.worst is None or b.worst < out.worst):
            out.worst = b.worst
    return out


def _pair_scan(X, Y, tol, threads=1) -> _Block:
    blocks = _row_blocks(X.shape[0], threads)
    if threads <= 1 or len(blocks) <= 1:
        return _reduce([_scan_rows(X, Y, b, tol) for b in blocks])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda b: _scan_rows(X, Y, b, tol), blocks))
    return _reduce(results)


def _check_tol(tolerance):
    if not tolerance >= 0:
        raise ContractError(f"tolerance must be >= 0, got {tolerance}")
    return float(tolerance)


def _report_from_scan(graph: SampledGraph, idx, tol: float, threads: int) -> CheckReport:
    """Scan the points ``idx`` of ``graph``; witnesses use original indices."""
    idx = np.asarray(idx, dtype=int)
    n = idx.size
    pairs = n * (n - 1) // 2
    if n == 0:
        return CheckReport(INCONCLUSIVE, tol, 0, detail={"reason": "no points to check"})
    res = _pair_scan(graph.X[idx], graph.Y[idx], tol, threads)
    rep = CheckReport(HOLDS, tol, pairs)
    if res.worst is not None:
        m, i, j = res.worst
        rep.min_margin = m
        rep.min_pair = (int(idx[i]), int(idx[j]))
    if res.first is not None:
        i, j, m = res.first
        rep.status = REFUTED
        rep.witness = (int(idx[i]), int(idx[j]))
        rep.margin = m
    else:
        rep.margin = rep.min_margin
    return rep


def check_global_monotone(graph: SampledGraph, tolerance: float = DEFAULT_TOLERANCE,
                          threads: int = 1) -> CheckReport:
    """Check ``<y_i - y_j, x_i - x_j> >= -tolerance`` over all pairs of ``graph``.

    An empty graph is inconclusive.  A refutation carries the lexicographically
    smallest violating pair as ``witness``.
    """
    tol = _check_tol(tolerance)
    return _report_from_scan(graph, np.arange(len(graph)), tol, threads)


def check_local_monotone(graph: SampledGraph, spec: NeighborhoodSpec,
                         tolerance: float = DEFAULT_TOLERANCE, threads: int = 1) -> CheckReport:
    """Monotonicity restricted to the points of ``graph`` inside the ball ``spec``."""
    tol = _check_tol(tolerance)
    idx = range_query(graph, spec)
    rep = _report_from_scan(graph, idx, tol, threads)
    rep.restriction_size = len(idx)
    rep.detail.update(center=list(spec.center.stacked()), radius=spec.radius)
    return rep


def check_region_monotone(graph: SampledGraph, regions: Sequence,
                          tolerance: float = DEFAULT_TOLERANCE, threads: int = 1) -> CheckReport:
    """Monotonicity restricted to the intersection of `Slice`/`DomainBall` regions."""
    tol = _check_tol(tolerance)
    idx = region_indices(graph, regions)
    rep = _report_from_scan(graph, idx, tol, threads)
    rep.restriction_size = len(idx)
    rep.detail["regions"] = [repr(r) for r in regions]
    return rep


def local_radius(graph: SampledGraph, center_index: int,
                 tolerance: float = DEFAULT_TOLERANCE) -> float:
    """Largest sampled distance ``rho`` from the center at which the local check holds.

    Candidate radii are the distinct distances from the center point to the
    graph points.  Returns ``math.inf`` when the whole graph is monotone and
    ``0.0`` when the check already fails once the nearest other points enter.
    """
    tol = _check_tol(tolerance)
    if not 0 <= center_index < len(graph):
        raise ContractError(f"center index {center_index} out of range")
    dist = product_distances(graph, graph.stacked[center_index])
    order = np.argsort(dist, kind="stable")
    levels = np.unique(dist)
    X, Y = graph.X, graph.Y
    inside = np.empty(0, dtype=int)
    best = 0.0
    pos = 0
    for level in levels:
        end = pos
        while end < len(order) and dist[order[end]] <= level:
            end += 1
        new = order[pos:end]
        for k, j in enumerate(new):
            others = np.concatenate([inside, new[:k]])
            if others.size:
                m = row_dot(Y[others] - Y[j], X[others] - X[j])
                if (m < -tol).any():
                    return best
        inside = np.concatenate([inside, new])
        best = float(level)
        pos = end
    return math.inf


def hypomonotonicity_modulus(graph: SampledGraph,
                             tolerance: float = DEFAULT_TOLERANCE) -> ModulusEstimate:
    """Smallest ``r >= 0`` making the sampled ``T + r I`` monotone.

    Pairs with ``|x_i - x_j| <= 1e-12 (1 + |x_i|)`` are skipped; pairs whose
    margin is already ``>= -tolerance`` contribute zero.
    """
    tol = _check_tol(tolerance)
    n = len(graph)
    if n == 0:
        raise ContractError("hypomonotonicity modulus needs a nonempty graph")
    X, Y = graph.X, graph.Y
    best, pair = 0.0, None
    used = skipped = 0
    for i in range(n - 1):
        dX = X[i + 1:] - X[i]
        dY = Y[i + 1:] - Y[i]
        sq = row_dot(dX, dX)
        thresh = 1e-12 * (1.0 + math.sqrt(float(row_dot(X[i:i + 1], X[i:i + 1])[0])))
        ok = np.sqrt(sq) > thresh
        skipped += int((~ok).sum())
        used += int(ok.sum())
        m = row_dot(dY, dX)
        bad = ok & (m < -tol)
        if not bad.any():
            continue
        ratio = np.where(bad, -m / np.where(ok, sq, 1.0), 0.0)
        k = int(np.argmax(ratio))
        if ratio[k] > best:
            best, pair = float(ratio[k]), (i, i + 1 + k)
    note = "lower bound on sampled graph"
    if used == 0:
        note = "all pairs skipped (vertical graph); " + note
    return ModulusEstimate(best, pair, used, skipped, note)


# -- maximality probes -----------------------------------------------------

def _probe_matrix(graph: SampledGraph, probes: Sequence[GraphPoint], tol: float):
    P = np.array([p.stacked() for p in probes], dtype=float).reshape(-1, 2 * graph.dim)
    n = graph.dim
    mins = np.full(len(probes), math.inf)
    present = np.zeros(len(probes), dtype=bool)
    G = graph.stacked
    chunk = max(1, 200_000 // max(len(graph), 1))
    for s in range(0, len(probes), chunk):
        block = P[s:s + chunk]
        dX = block[:, None, :n] - G[None, :, :n]
        dY = block[:, None, n:] - G[None, :, n:]
        m = dY[..., 0] * dX[..., 0]
        for k in range(1, n):
            m = m + dY[..., k] * dX[..., k]
        diff = block[:, None, :] - G[None, :, :]
        d2 = diff[..., 0] * diff[..., 0]
        for k in range(1, 2 * n):
            d2 = d2 + diff[..., k] * diff[..., k]
        if len(graph):
            mins[s:s + chunk] = m.min(axis=1)
            present[s:s + chunk] = (np.sqrt(d2) <= tol).any(axis=1)
    return mins, present


def _probe(graph: SampledGraph, probes: list[GraphPoint], tol: float) -> ProbeResult:
    for p in probes:
        if p.dim != graph.dim:
            raise ContractError(f"probe {p} does not match graph dimension {graph.dim}")
    if not probes:
        return ProbeResult([], [], [], [], [], tol)
    mins, present = _probe_matrix(graph, probes, tol)
    keep = [k for k in range(len(probes)) if mins[k] >= -tol and not present[k]]
    return ProbeResult([probes[k] for k in keep], keep, list(probes),
                       [float(m) for m in mins], [bool(b) for b in present], tol)


def maximality_probe(graph: SampledGraph, probe_points: Sequence[GraphPoint],
                     tolerance: float = DEFAULT_TOLERANCE) -> ProbeResult:
    """Probe points whose margins against every graph point are ``>= -tolerance``.

    Probes already in the graph (product-space distance ``<= tolerance``) are
    never reported as addable.  A nonempty ``addable`` list refutes maximality
    of the sampled graph; an empty one proves nothing.
    """
    return _probe(graph, list(probe_points), _check_tol(tolerance))


def local_maximality_probe(graph: SampledGraph, spec: NeighborhoodSpec,
                           probe_points: Sequence[GraphPoint],
                           tolerance: float = DEFAULT_TOLERANCE) -> ProbeResult:
    """`maximality_probe` with both graph and probes restricted to the ball ``spec``.

    ``addable_indices`` refer to positions in ``probe_points``.
    """
    tol = _check_tol(tolerance)
    probe_points = list(probe_points)
    sub = graph.subgraph(range_query(graph, spec))
    c = spec.center.stacked()
    inside = [k for k, p in enumerate(probe_points)
              if p.dim == graph.dim and math.sqrt(_sqdist(p.stacked(), c)) <= spec.radius]
    res = _probe(sub, [probe_points[k] for k in inside], tol)
    res.addable_indices = [inside[k] for k in res.addable_indices]
    return res


def _sqdist(a, b) -> float:
    d = a - b
    return float(row_dot(d[None, :], d[None, :])[0])


# -- segment scan ----------------------------------------------------------

def segment_scan(spec: OperatorSpec, p, q, steps: int = 100,
                 tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """Scan ``x_l = (1 - l) p + l q`` for ``l = k / steps``.

    Fails at the first net index ``k`` where either
    ``<T(x_l) - T(q), p - q> < -tolerance`` (``l`` leaves the set of good
    parameters) or some earlier net point forms a violating pair with
    ``x_l``.  The operator must be single-valued along the segment;
    otherwise `PreconditionError` is raised.
    """
    tol = _check_tol(tolerance)
    steps = int(steps)
    if steps < 1:
        raise ContractError("steps must be >= 1")
    p = np.asarray(as_vector(p, spec.domain_dim))
    q = np.asarray(as_vector(q, spec.domain_dim))
    lams = [k / steps for k in range(steps + 1)]
    xs, ys = [], []
    for lam in lams:
        x = (1.0 - lam) * p + lam * q
        values = spec.eval(x)
        if len(values) != 1:
            what = "empty" if not values else f"{len(values)}-valued"
            raise PreconditionError(
                f"{spec.name} is {what} at {tuple(x)} (lambda={lam}); the domain must "
                "contain the segment and the operator must be single-valued on it")
        xs.append(x)
        ys.append(values[0])
    X = np.asarray(xs)
    Y = np.asarray(ys, dtype=float)
    dpq = p - q
    membership = row_dot(Y - Y[-1], np.broadcast_to(dpq, X.shape))
    rep = CheckReport(HOLDS, tol, 0)
    worst = None
    for k in range(steps + 1):
        if k:
            m = row_dot(Y[k] - Y[:k], X[k] - X[:k])
            rep.pairs_checked += k
            j = int(np.argmin(m))
            if worst is None or (m[j], j, k) < worst:
                worst = (float(m[j]), j, k)
            bad = np.flatnonzero(m < -tol)
        else:
            bad = np.empty(0, dtype=int)
        if membership[k] < -tol or bad.size:
            rep.status = REFUTED
            if membership[k] < -tol:
                rep.witness, rep.margin = (k, steps), float(membership[k])
                rep.detail["failure"] = "lambda-membership"
            else:
                rep.witness, rep.margin = (int(bad[0]), k), float(m[bad[0]])
                rep.detail["failure"] = "pairwise"
            rep.detail["lambda"] = lams[k]
            break
    if worst is not None:
        rep.min_margin, rep.min_pair = worst[0], (worst[1], worst[2])
    if rep.status == HOLDS:
        rep.margin = rep.min_margin
    rep.detail.update(steps=steps, p=list(p), q=list(q))
    return rep
