"""Evaluable operator catalog, graph samplers and seeded random graph generators.

Every catalog rule maps a domain point to a finite, ordered list of values;
an empty list means the point is outside the domain.  Set-valued pieces that
are continua (vertical segments, truncated lines) are discretized at an
explicit ``resolution`` parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import ContractError, EmptyGraphError, GenerationError, UnknownOperatorError
from .geometry import SampledGraph, as_vector

__all__ = [
    "OperatorSpec",
    "SamplingSpec",
    "GeneratorSpec",
    "CATALOG",
    "get_operator",
    "catalog_eval",
    "sample_operator",
    "generate_random",
    "GENERATOR_KINDS",
    "grid_from_text",
]

Rule = Callable[[tuple, Mapping[str, float]], list]


def _z(v: float) -> float:
    # folds -0.0 into 0.0 so that set membership does not depend on the sign of zero
    return float(v) + 0.0


def _segment(lo: float, hi: float, resolution) -> list[float]:
    n = int(resolution)
    if n < 1:
        raise ContractError(f"resolution must be >= 1, got {resolution}")
    return [_z(v) for v in np.linspace(lo, hi, n + 1)]


@dataclass(frozen=True)
class OperatorSpec:
    """A catalog entry with resolved parameters.

    ``local_radius`` is artifact metadata: a product-space radius at which the
    operator's graph is locally monotone around every graph point
    (``math.inf`` for globally monotone entries, ``None`` when no radius is
    declared).
    """

    name: str
    params: Mapping[str, float]
    domain_dim: int
    rule: Rule = field(repr=False, compare=False)
    local_radius: float | None = None
    single_valued: bool = False

    def eval(self, x) -> list[tuple[float, ...]]:
        x = as_vector(x)
        if len(x) != self.domain_dim:
            raise ContractError(
                f"{self.name} expects inputs of dimension {self.domain_dim}, got {len(x)}")
        values = []
        seen = set()
        for v in self.rule(x, self.params):
            v = tuple(_z(c) for c in v)
            if len(v) != self.domain_dim:
                raise ContractError(f"{self.name} produced a value of wrong dimension")
            if v not in seen:
                seen.add(v)
                values.append(v)
        return values

    __call__ = eval


# -- named reference operators ---------------------------------------------

def _example_5_1(x, p):
    # (x, y) -> (z, t); the two graph branches meet at the origin
    a, b = p["a"], p["b"]
    out = []
    if x[0] >= 0 and x[1] == 0:
        out.append((0.0, a * max(3.0 * x[0] - 1.0, 0.0)))
    if x[0] == 0 and x[1] >= 0:
        out.append((-b * x[1], 0.0))
    return out


def _example_3_3_1(x, p):
    if x[0] < 0:
        return [(0.0,)]
    if x[0] > 0:
        return [(-1.0,)]
    return []


def _step(x, p):
    return [(0.0,)] if x[0] <= p["jump"] else [(-p["height"],)]


def _remark_3_2(x, p):
    u, v = x
    if u < 0:
        return [(0.0, 0.0)]
    if v >= 0:
        return [(u, 0.0)]
    return [(-u, 0.0)]


def _remark_6_4_1(x, p):
    return [(0.0,)] if -1.0 < x[0] < 1.0 else []


def _remark_6_4_2(x, p):
    if x[0] in (0.0, 1.0):
        return [(v,) for v in _segment(-p["bound"], p["bound"], p["resolution"])]
    return []


def _identity(x, p):
    return [x]


def _linear(x, p):
    return [tuple(p["slope"] * c for c in x)]


def _abs_subdifferential(x, p):
    if x[0] < 0:
        return [(-1.0,)]
    if x[0] > 0:
        return [(1.0,)]
    return [(v,) for v in _segment(-1.0, 1.0, p["resolution"])]


@dataclass(frozen=True)
class _Entry:
    rule: Rule
    dim: int | str
    defaults: Mapping[str, float]
    local_radius: float | None
    single_valued: bool
    summary: str


# Radii: 0.4 for unit-gap jumps (a closed ball of diameter 0.8 never meets both
# sides); 0.16 for the two-branch planar operator, whose violating pairs sit more than 1/3 apart.
CATALOG: dict[str, _Entry] = {
    "example-5.1": _Entry(_example_5_1, 2, {"a": 1.0, "b": 1.0}, 0.16, False,
                          "locally but not globally monotone operator on the plane"),
    "example-3.3-1": _Entry(_example_3_3_1, 1, {}, 0.4, True,
                            "0 on x<0, -1 on x>0, undefined at 0 (non-convex domain)"),
    "example-3.3-2": _Entry(_step, 1, {"jump": 0.0, "height": 1.0}, 0.4, True,
                            "discontinuous step 0 on x<=0, -1 on x>0"),
    "remark-3.2": _Entry(_remark_3_2, 2, {}, None, True,
                         "path-connected graph without continuity"),
    "remark-4.6": _Entry(_step, 1, {"jump": 0.0, "height": 1.0}, 0.4, True,
                         "{0} on x<=0, {-1} on x>0; convex domain, disconnected graph"),
    "remark-6.4-1": _Entry(_remark_6_4_1, 1, {}, math.inf, True,
                           "{0} on ]-1,1[; monotone, graph not closed"),
    "remark-6.4-2-truncated": _Entry(_remark_6_4_2, 1, {"bound": 1.0, "resolution": 20}, 0.4,
                                     False, "{0,1} x [-M, M]; not hypomonotone as M grows"),
    "identity": _Entry(_identity, "dim", {"dim": 1}, math.inf, True, "T(x) = x"),
    "linear": _Entry(_linear, "dim", {"dim": 1, "slope": 1.0}, None, True, "T(x) = slope * x"),
    "abs-subdifferential": _Entry(_abs_subdifferential, 1, {"resolution": 20}, math.inf, False,
                                  "subdifferential of |x|, vertical segment discretized"),
}


def get_operator(name: str, params: Mapping[str, float] | None = None) -> OperatorSpec:
    """Resolve a catalog entry with ``params`` merged over its defaults."""
    try:
        entry = CATALOG[name]
    except KeyError:
        raise UnknownOperatorError(
            f"unknown operator {name!r}; known: {', '.join(sorted(CATALOG))}") from None
    params = dict(params or {})
    unknown = set(params) - set(entry.defaults)
    if unknown:
        raise ContractError(f"{name} does not take parameter(s) {sorted(unknown)}")
    resolved = {**entry.defaults, **{k: float(v) for k, v in params.items()}}
    for key in ("dim", "resolution"):
        if key in resolved:
            if resolved[key] != int(resolved[key]) or resolved[key] < 1:
                raise ContractError(f"{key} must be a positive integer")
            resolved[key] = int(resolved[key])
    dim = resolved["dim"] if entry.dim == "dim" else entry.dim
    radius = entry.local_radius
    if name == "linear":
        radius = math.inf if resolved["slope"] >= 0 else None
    elif name == "remark-4.6" or name == "example-3.3-2":
        radius = 0.4 * resolved["height"] if resolved["height"] > 0 else math.inf
    return OperatorSpec(name, resolved, dim, entry.rule, radius, entry.single_valued)


def catalog_eval(name: str, params: Mapping[str, float] | None, x) -> list[tuple[float, ...]]:
    """Evaluate catalog entry ``name`` at ``x``; an empty list means ``x`` is outside the domain."""
    return get_operator(name, params).eval(x)


# -- sampling --------------------------------------------------------------

@dataclass(frozen=True)
class SamplingSpec:
    """How to pick domain points.

    scheme
        ``"grid"``: tensor grid, either from explicit ``axes`` or from
        ``resolution`` points per axis spread over ``window``.
        ``"path-trace"``: the same grid (1-D only) with the values at each x
        sorted ascending, so consecutive points trace the graph.
        ``"list"``: exactly the domain points in ``points``.
    """

    scheme: str = "grid"
    resolution: int = 11
    window: tuple | None = None
    axes: tuple | None = None
    points: tuple | None = None

    def __post_init__(self):
        if self.scheme not in ("grid", "path-trace", "list"):
            raise ContractError(f"unknown sampling scheme {self.scheme!r}")
        if int(self.resolution) < 1:
            raise ContractError("resolution must be >= 1")
        if self.scheme == "list" and self.points is None:
            raise ContractError("the list scheme needs explicit points")
        if self.scheme != "list" and self.axes is None:
            if self.window is None:
                raise ContractError("grid sampling needs a window or explicit axes")
            lo, hi = self.window
            if any(not (h > l) for l, h in zip(np.atleast_1d(lo), np.atleast_1d(hi))):
                raise ContractError("grid window must have positive volume")

    def grid_axes(self, dim: int) -> list[np.ndarray]:
        if self.axes is not None:
            axes = [np.asarray(a, dtype=float) for a in self.axes]
            if len(axes) == 1 and dim > 1:
                axes = axes * dim
        else:
            lo = np.broadcast_to(np.asarray(self.window[0], dtype=float), (dim,))
            hi = np.broadcast_to(np.asarray(self.window[1], dtype=float), (dim,))
            axes = [np.linspace(l, h, int(self.resolution)) for l, h in zip(lo, hi)]
        if len(axes) != dim:
            raise ContractError(f"grid has {len(axes)} axes, operator needs {dim}")
        return axes

    def domain_points(self, dim: int) -> list[tuple[float, ...]]:
        """Domain points in lexicographic grid order (first axis slowest)."""
        if self.scheme == "list":
            return [as_vector(p, dim) for p in self.points]
        if self.scheme == "path-trace" and dim != 1:
            raise ContractError("path-trace sampling is only defined for univariate operators")
        axes = self.grid_axes(dim)
        mesh = np.meshgrid(*axes, indexing="ij")
        flat = np.stack([m.ravel() for m in mesh], axis=1)
        return [tuple(_z(v) for v in row) for row in flat]


def sample_operator(spec: OperatorSpec, sampling: SamplingSpec) -> SampledGraph:
    """Sample ``gph spec`` on the domain points described by ``sampling``.

    Domain points with empty value sets are skipped; the number of visited
    points and hits is recorded in ``graph.sampling``.  Raises
    `EmptyGraphError` when no domain point is hit.
    """
    dim = spec.domain_dim
    domain = sampling.domain_points(dim)
    xs, ys = [], []
    hits = 0
    for x in domain:
        values = spec.eval(x)
        if not values:
            continue
        hits += 1
        if sampling.scheme == "path-trace":
            values = sorted(values)
        for v in values:
            xs.append(x)
            ys.append(v)
    if hits == 0:
        raise EmptyGraphError(
            f"sampling {spec.name} hit no domain point ({len(domain)} visited)",
            domain_points=len(domain), domain_hits=0)
    arr = np.asarray(domain, dtype=float)
    window = (tuple(arr.min(axis=0)), tuple(arr.max(axis=0)))
    meta = {"domain_points": len(domain), "domain_hits": hits, "scheme": sampling.scheme}
    if spec.local_radius is not None:
        meta["local_radius"] = spec.local_radius
    return SampledGraph(dim, xs, ys, name=spec.name, window=window, sampling=meta)


# -- random generators -----------------------------------------------------

GENERATOR_KINDS = ("monotone-pwl", "hypo-shift", "local-not-global", "step")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    seed: int = 0
    params: Mapping[str, object] = field(default_factory=dict)


def _staircase(rng: np.random.Generator, pieces: int, points: int, segment_points: int):
    """Subgradient graph of a random convex piecewise-linear function on [-1, 1].

    Points come out in path order: left to right, and bottom to top along
    each vertical segment at a kink.
    """
    slopes = np.sort(rng.uniform(-2.0, 2.0, size=pieces))
    kinks = np.sort(rng.uniform(-0.9, 0.9, size=pieces - 1))
    edges = np.concatenate([[-1.0], kinks, [1.0]])
    xs_free = np.sort(rng.uniform(-1.0, 1.0, size=points))
    xs, ys = [], []
    for i in range(pieces):
        lo, hi = edges[i], edges[i + 1]
        inside = xs_free[(xs_free > lo) & (xs_free < hi)] if i else xs_free[
            (xs_free >= lo) & (xs_free < hi)]
        for x in inside:
            xs.append(x)
            ys.append(slopes[i])
        if i < pieces - 1:
            for y in np.linspace(slopes[i], slopes[i + 1], max(segment_points, 2)):
                xs.append(hi)
                ys.append(y)
    return np.asarray(xs).reshape(-1, 1), np.asarray(ys).reshape(-1, 1)


def _max_affine(rng: np.random.Generator, dim: int, pieces: int, points: int):
    A = rng.uniform(-2.0, 2.0, size=(pieces, dim))
    b = rng.uniform(-1.0, 1.0, size=pieces)
    X = rng.uniform(-1.0, 1.0, size=(points, dim))
    active = np.argmax(X @ A.T + b, axis=1)
    return X, A[active]


def _monotone_pwl(rng, params):
    dim = int(params.get("dim", 1))
    pieces = int(params.get("pieces", rng.integers(2, 6)))
    points = int(params.get("points", 30))
    if dim == 1:
        return _staircase(rng, pieces, points, int(params.get("segment_points", 5)))
    return _max_affine(rng, dim, pieces, points)


def generate_random(gen: GeneratorSpec) -> SampledGraph:
    """Seeded random graph; identical specs give identical graphs.

    Kinds
    -----
    monotone-pwl
        Sampled subgradient graph of a random convex piecewise-linear
        function (univariate: a staircase with discretized vertical
        segments, emitted in path order).
    hypo-shift
        A ``base`` graph (``"monotone-pwl"`` or ``"identity"``) with y
        replaced by ``y - r x``.
    local-not-global
        The ``example-5.1`` catalog operator with random axis scales ``a`` and ``b < 2a``; sampled on
        both branches including (1, 0) and (0, 1).
    step
        ``0`` left of a random jump, ``-height`` right of it.
    """
    params = dict(gen.params)
    rng = np.random.default_rng(np.uint64(gen.seed % 2**64))
    label = f"{gen.kind}[seed={gen.seed}]"
    if gen.kind == "monotone-pwl":
        X, Y = _monotone_pwl(rng, params)
        return SampledGraph(X.shape[1], X, Y, name=label,
                            sampling={"kind": gen.kind, "local_radius": math.inf})
    if gen.kind == "hypo-shift":
        r = float(params.pop("r", 1.0))
        if not r > 0:
            raise GenerationError("hypo-shift needs r > 0")
        base = params.pop("base", "monotone-pwl")
        if base == "identity":
            dim = int(params.get("dim", 1))
            X = rng.uniform(-1.0, 1.0, size=(int(params.get("points", 30)), dim))
            Y = X.copy()
        elif base == "monotone-pwl":
            X, Y = _monotone_pwl(rng, params)
        else:
            raise GenerationError(f"unknown hypo-shift base {base!r}")
        return SampledGraph(X.shape[1], X, Y - r * X, name=label,
                            sampling={"kind": gen.kind, "r": r})
    if gen.kind == "local-not-global":
        a = float(params.get("a", rng.uniform(1.0, 2.0)))
        b = float(params.get("b", rng.uniform(0.25, 1.5)))
        if not (a > 0 and 0 < b < 2 * a):
            raise GenerationError("local-not-global needs a > 0 and 0 < b < 2a")
        n1 = int(params.get("points", rng.integers(4, 16)))
        n2 = int(params.get("points", rng.integers(4, 16)))
        dom = [(x, 0.0) for x in np.linspace(0.0, 1.0, n1)]
        dom += [(0.0, y) for y in np.linspace(0.0, 1.0, n2)[1:]]
        spec = get_operator("example-5.1", {"a": a, "b": b})
        g = sample_operator(spec, SamplingSpec("list", points=tuple(dom)))
        return SampledGraph(2, g.X, g.Y, name=label, window=g.window,
                            sampling={"kind": gen.kind, "a": a, "b": b,
                                      "local_radius": spec.local_radius})
    if gen.kind == "step":
        jump = float(params.get("jump", rng.uniform(-0.5, 0.5)))
        height = float(params.get("height", rng.uniform(0.5, 2.0)))
        n = int(params.get("points", 20))
        xs = np.sort(np.concatenate([[-1.0, 1.0], rng.uniform(-1.0, 1.0, size=n - 2)]))
        spec = get_operator("remark-4.6", {"jump": jump, "height": height})
        g = sample_operator(spec, SamplingSpec("list", points=tuple((x,) for x in xs)))
        return SampledGraph(1, g.X, g.Y, name=label, window=g.window,
                            sampling={"kind": gen.kind, "jump": jump, "height": height,
                                      "local_radius": spec.local_radius})
    raise GenerationError(f"unknown generator kind {gen.kind!r}; known: {GENERATOR_KINDS}")


def grid_from_text(text: str, dim: int | None = None) -> SamplingSpec:
    """Parse ``"a:b:step[,a:b:step...]"`` into a grid `SamplingSpec`.

    Grid values are generated in decimal arithmetic so that ``0:1:0.1``
    yields exactly the floats nearest to 0.0, 0.1, ..., 1.0.  A single axis
    spec is reused for every axis.
    """
    from decimal import Decimal, InvalidOperation

    axes = []
    for part in text.split(","):
        try:
            a, b, step = (Decimal(s.strip()) for s in part.split(":"))
        except (ValueError, InvalidOperation):
            raise ContractError(f"bad grid axis {part!r}; expected a:b:step") from None
        if step <= 0 or b < a:
            raise ContractError(f"bad grid axis {part!r}; need a <= b and step > 0")
        count = int((b - a) / step) + 1
        axes.append(tuple(float(a + k * step) for k in range(count)))
    if dim is not None and len(axes) not in (1, dim):
        raise ContractError(f"grid has {len(axes)} axes, expected 1 or {dim}")
    if dim is not None and len(axes) == 1:
        axes = axes * dim
    return SamplingSpec("grid", axes=tuple(axes))
