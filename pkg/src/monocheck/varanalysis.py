"""Discrete regular normal cones, coderivative positive-semidefiniteness and the
coderivative maximal-monotonicity pipeline.

A direction ``v`` in product space is accepted as an approximate regular
normal to the sampled graph at ``z`` when ``<v, u - z> <= slack * |u - z|`` for
every other sample ``u`` within ``locality_radius`` of ``z``.  Writing
``v = (v1, v2)``, the pair ``z* = v1, w = -v2`` is then a coderivative pair and
the positive-semidefiniteness test is ``<z*, w> >= -slack``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import norm, qmc

from .checkers import (
    DEFAULT_TOLERANCE,
    HOLDS,
    INCONCLUSIVE,
    REFUTED,
    CheckReport,
    hypomonotonicity_modulus,
    maximality_probe,
)
from .errors import ContractError
from .geometry import GraphPoint, SampledGraph, row_dot

__all__ = [
    "ConeParams",
    "DirectionSet",
    "PSDReport",
    "sphere_directions",
    "default_angular_resolution",
    "auto_locality_radius",
    "regular_normal_directions",
    "coderivative_psd_check",
    "check_max_monotone_via_coderivative",
    "edge_points",
    "closure_probe_points",
]

MAX_GRAPH_SPACE_DIM = 4


def default_angular_resolution(space_dim: int) -> int:
    if space_dim == 2:
        return 720
    return 20 * 4 ** space_dim


@dataclass(frozen=True)
class ConeParams:
    """Discretization knobs for the regular normal cone.

    ``locality_radius=None`` selects three times the median nearest-neighbour
    distance of the graph; ``angular_resolution=None`` selects 720 directions
    in a 2-D graph space and ``20 * 4**d`` otherwise.  With ``trim_edges``,
    points sitting on a face of the graph's domain bounding box are treated
    as truncation artifacts and never yield a psd/violated verdict.
    """

    locality_radius: float | None = None
    slack: float = 1e-6
    angular_resolution: int | None = None
    min_neighbors: int = 1
    trim_edges: bool = True

    def __post_init__(self):
        if self.locality_radius is not None and not self.locality_radius > 0:
            raise ContractError("locality radius must be positive")
        if self.angular_resolution is not None and self.angular_resolution < 4:
            raise ContractError("angular resolution must be >= 4")
        if self.slack < 0:
            raise ContractError("slack must be >= 0")
        if self.min_neighbors < 0:
            raise ContractError("min_neighbors must be >= 0")


@dataclass
class DirectionSet:
    at_index: int
    directions: np.ndarray          # (k, 2n) accepted unit directions
    direction_ids: list             # positions in the sphere sampling order
    neighbor_count: int
    vacuous: bool
    locality_radius: float
    slack: float

    def to_dict(self) -> dict:
        return {
            "at_index": self.at_index,
            "accepted": len(self.direction_ids),
            "direction_ids": list(self.direction_ids),
            "directions": self.directions.tolist(),
            "neighbor_count": self.neighbor_count,
            "vacuous": self.vacuous,
            "locality_radius": self.locality_radius,
            "slack": self.slack,
        }


@dataclass
class PSDReport:
    status: str                     # "psd" | "violated" | "inconclusive"
    at_index: int
    violating_direction: tuple | None = None   # (z, w)
    direction_id: int | None = None
    value: float | None = None
    accepted: int = 0
    reason: str | None = None

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        if self.violating_direction is not None:
            z, w = self.violating_direction
            d["violating_direction"] = {"z": list(z), "w": list(w)}
        return d


@lru_cache(maxsize=16)
def sphere_directions(space_dim: int, count: int) -> np.ndarray:
    """Deterministic quasi-uniform unit vectors in ``R^space_dim``.

    In the plane: ``count`` equally spaced angles starting at 0.  In higher
    dimensions: the ``±e_k`` axes followed by an unscrambled Halton sequence
    pushed through the normal quantile function and normalized.
    """
    if not 2 <= space_dim <= MAX_GRAPH_SPACE_DIM:
        raise ContractError(
            f"direction sampling supports graph spaces of dimension 2..{MAX_GRAPH_SPACE_DIM}")
    if space_dim == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        D = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    else:
        axes = np.concatenate([np.eye(space_dim), -np.eye(space_dim)])
        rest = max(count - axes.shape[0], 0)
        u = qmc.Halton(d=space_dim, scramble=False).random(rest + 1)[1:]
        g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
        g /= np.sqrt(row_dot(g, g))[:, None]
        D = np.concatenate([axes, g])[:count]
    D.setflags(write=False)
    return D


def auto_locality_radius(graph: SampledGraph) -> float:
    """Three times the median nearest-neighbour distance in product space."""
    if len(graph) < 2:
        return 1.0
    d, _ = cKDTree(graph.stacked).query(graph.stacked, k=2)
    nn = d[:, 1]
    nn = nn[nn > 0]
    return 3.0 * float(np.median(nn)) if nn.size else 1.0


def edge_points(graph: SampledGraph) -> np.ndarray:
    """Mask of points on a face of the domain bounding box (axes with positive extent)."""
    X = graph.X
    if len(graph) == 0:
        return np.zeros(0, dtype=bool)
    lo, hi = X.min(axis=0), X.max(axis=0)
    mask = np.zeros(len(graph), dtype=bool)
    for k in range(graph.dim):
        if hi[k] > lo[k]:
            mask |= (X[:, k] == lo[k]) | (X[:, k] == hi[k])
    return mask


def _resolve(graph: SampledGraph, params: ConeParams):
    space = 2 * graph.dim
    rho = params.locality_radius or auto_locality_radius(graph)
    m = params.angular_resolution or default_angular_resolution(space)
    return rho, sphere_directions(space, m)


def _accepted(graph, at_index, rho, D, slack):
    Z = graph.stacked
    z = Z[at_index]
    diff = Z - z
    dist = np.sqrt(row_dot(diff, diff))
    nb = np.flatnonzero((dist <= rho) & (dist > 0))
    rel = diff[nb]
    proj = D[:, :1] * rel[None, :, 0]
    for k in range(1, D.shape[1]):
        proj = proj + D[:, k:k + 1] * rel[None, :, k]
    ok = (proj <= slack * dist[nb][None, :]).all(axis=1)
    return np.flatnonzero(ok), nb.size


def regular_normal_directions(graph: SampledGraph, at_index: int,
                              params: ConeParams = ConeParams()) -> DirectionSet:
    """Sampled directions passing the slack test against every neighbour within rho."""
    if not 0 <= at_index < len(graph):
        raise ContractError(f"index {at_index} out of range")
    rho, D = _resolve(graph, params)
    ids, count = _accepted(graph, at_index, rho, D, params.slack)
    return DirectionSet(at_index, D[ids], ids.tolist(), count,
                        count < params.min_neighbors, rho, params.slack)


def coderivative_psd_check(graph: SampledGraph, at_index: int,
                           params: ConeParams = ConeParams(), *, _edges=None) -> PSDReport:
    """Check ``<z, w> >= -slack`` for every accepted normal ``(z, -w)`` at one point."""
    cone = regular_normal_directions(graph, at_index, params)
    if cone.vacuous:
        return PSDReport(INCONCLUSIVE, at_index, accepted=len(cone.direction_ids),
                         reason="vacuous cone: too few neighbours within the locality radius")
    edges = edge_points(graph) if _edges is None else _edges
    if params.trim_edges and edges[at_index]:
        return PSDReport(INCONCLUSIVE, at_index, accepted=len(cone.direction_ids),
                         reason="point lies on the sampled domain boundary")
    n = graph.dim
    for v, did in zip(cone.directions, cone.direction_ids):
        z, w = v[:n], -v[n:]
        value = float(row_dot(z[None, :], w[None, :])[0])
        if value < -params.slack:
            return PSDReport("violated", at_index, (tuple(map(float, z)), tuple(map(float, w))),
                             did, value, len(cone.direction_ids))
    return PSDReport("psd", at_index, accepted=len(cone.direction_ids))


def _lattice(values: np.ndarray):
    """Common spacing of sorted distinct coordinates, or None if irregular."""
    u = np.unique(values)
    if u.size < 2:
        return None
    steps = np.diff(u)
    h = float(np.median(steps))
    if h <= 0:
        return None
    return u, h


def closure_probe_points(graph: SampledGraph) -> list[GraphPoint]:
    """Default probe grid for the pipeline's closedness caveat (univariate graphs).

    Infers the sampling lattice from the graph's domain coordinates and
    proposes, at every lattice site inside ``graph.window`` (or the domain
    bounding box) that carries no graph point, each value observed at the
    neighbouring occupied sites.  For higher-dimensional graphs the result is
    empty; pass explicit probes instead.
    """
    if graph.dim != 1 or len(graph) < 2:
        return []
    lat = _lattice(graph.X[:, 0])
    if lat is None:
        return []
    occupied, h = lat
    lo, hi = occupied[0], occupied[-1]
    if graph.window is not None:
        lo, hi = min(lo, graph.window[0][0]), max(hi, graph.window[1][0])
    k_lo = int(math.floor((lo - occupied[0]) / h + 1e-9))
    k_hi = int(math.ceil((hi - occupied[0]) / h - 1e-9))
    tol = 1e-9 * max(1.0, abs(h))
    probes = []
    seen = set()
    for k in range(k_lo, k_hi + 1):
        x = float(occupied[0] + k * h)
        if graph.window is not None:
            for bound in (graph.window[0][0], graph.window[1][0]):
                if abs(x - bound) <= 1e-6 * h:
                    x = float(bound)
        if np.min(np.abs(occupied - x)) <= tol:
            continue
        near = occupied[np.abs(occupied - x) <= h * (1 + 1e-6)]
        for xn in near:
            for y in np.unique(graph.Y[graph.X[:, 0] == xn, 0]):
                key = (x, float(y))
                if key not in seen:
                    seen.add(key)
                    probes.append(GraphPoint((x,), (float(y),)))
    return probes


def check_max_monotone_via_coderivative(graph: SampledGraph, params: ConeParams = ConeParams(),
                                        tolerance: float = DEFAULT_TOLERANCE,
                                        probe_points=None,
                                        max_inconclusive_fraction: float = 0.25) -> CheckReport:
    """Coderivative route to maximal monotonicity of a sampled graph.

    Records the sampled hypomonotonicity modulus, runs the psd test at every
    graph point and refutes on the first violated point (witness is
    ``(point index, direction id)``, margin the offending ``<z, w>``).  The
    verdict holds when no point is violated and fewer than
    ``max_inconclusive_fraction`` of the points are inconclusive.  A
    maximality probe over ``probe_points`` (default: `closure_probe_points`)
    sets ``detail["caveat"]`` when it finds addable points, which exposes
    graphs that are not closed.
    """
    if len(graph) == 0:
        raise ContractError("pipeline needs a nonempty graph")
    modulus = hypomonotonicity_modulus(graph, tolerance)
    edges = edge_points(graph)
    rho, D = _resolve(graph, params)
    params = replace(params, locality_radius=rho, angular_resolution=int(D.shape[0]))
    psd = violated = inconclusive = 0
    first = None
    for i in range(len(graph)):
        r = coderivative_psd_check(graph, i, params, _edges=edges)
        if r.status == "psd":
            psd += 1
        elif r.status == "violated":
            violated += 1
            if first is None:
                first = r
        else:
            inconclusive += 1

    if probe_points is None:
        probe_points = closure_probe_points(graph)
    probe = maximality_probe(graph, probe_points, tolerance)

    rep = CheckReport(HOLDS, float(tolerance), 0)
    if first is not None:
        rep.status = REFUTED
        rep.witness = (first.at_index, first.direction_id)
        rep.margin = first.value
    elif inconclusive >= max_inconclusive_fraction * len(graph):
        rep.status = INCONCLUSIVE
    rep.detail = {
        "modulus": modulus.r_hat,
        "psd_points": psd,
        "violated_points": violated,
        "inconclusive_points": inconclusive,
        "max_inconclusive_fraction": max_inconclusive_fraction,
        "locality_radius": rho,
        "angular_resolution": int(D.shape[0]),
        "slack": params.slack,
        "caveat": bool(probe.addable),
        "caveat_points": [{"x": list(p.x), "y": list(p.y)} for p in probe.addable],
        "probes": len(probe.candidates),
    }
    if first is not None:
        z, w = first.violating_direction
        rep.detail["violation"] = {"index": first.at_index, "z": list(z), "w": list(w),
                                   "value": first.value}
    return rep
