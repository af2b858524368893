"""Membership functions, their support and core, grid sampling and blending.

Every shape is an immutable dataclass that is callable on scalars or numpy
arrays.  ``evaluate`` is the checked scalar entry point; the vectorized
``__call__`` is what the inference engine uses on its grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    DegenerateWeightsError,
    EmptySupportError,
    InvalidInputError,
    InvalidResolutionError,
)

__all__ = [
    "EPS_SUPPORT",
    "EPS_CORE",
    "Universe",
    "Interval",
    "Triangle",
    "Trapezoid",
    "Gaussian",
    "GeneralizedBell",
    "Sigmoid",
    "Sampled",
    "MembershipFunction",
    "evaluate",
    "support",
    "core",
    "sample",
    "blend",
    "mf_from_dict",
    "mf_to_dict",
]

EPS_SUPPORT = 1e-12
EPS_CORE = 1e-9


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class Universe:
    """Closed domain ``[lo, hi]`` of a linguistic variable."""

    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not _finite(self.lo, self.hi) or not self.lo < self.hi:
            raise InvalidInputError(f"universe needs finite lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def span(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def grid(self, n: int) -> np.ndarray:
        if n < 2:
            raise InvalidResolutionError(f"grid needs at least 2 points, got {n}")
        return np.linspace(self.lo, self.hi, n)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise InvalidInputError(f"interval needs lo <= hi, got [{self.lo}, {self.hi}]")

    def contains(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


def _clip_to(universe: Universe, lo: float, hi: float) -> Interval | None:
    lo, hi = max(lo, universe.lo), min(hi, universe.hi)
    if lo > hi:
        return None
    return Interval(lo, hi)


# --------------------------------------------------------------------------
# Shapes
# --------------------------------------------------------------------------


def _trapezoid(x, a, b, c, d):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        rise = np.where(b > a, (x - a) / (b - a if b > a else 1.0), 1.0)
        fall = np.where(d > c, (d - x) / (d - c if d > c else 1.0), 1.0)
    y = np.where((x >= b) & (x <= c), 1.0, np.where(x < b, rise, fall))
    y = np.where((x < a) | (x > d), 0.0, y)
    return np.clip(y, 0.0, 1.0)


@dataclass(frozen=True)
class Trapezoid:
    """Flat-topped shape: ramps up on ``[a, b]``, 1 on ``[b, c]``, down on ``[c, d]``.

    ``a == b`` or ``c == d`` gives a vertical shoulder, which is how open-ended
    terms at the edge of a universe are written.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        p = (self.a, self.b, self.c, self.d)
        if not _finite(*p) or not (self.a <= self.b <= self.c <= self.d) or not self.a < self.d:
            raise InvalidInputError(f"trapezoid needs a <= b <= c <= d and a < d, got {p}")

    @property
    def params(self) -> tuple[float, ...]:
        return (self.a, self.b, self.c, self.d)

    def __call__(self, x):
        return _trapezoid(x, self.a, self.b, self.c, self.d)


@dataclass(frozen=True)
class Triangle:
    a: float
    b: float
    c: float

    def __post_init__(self):
        p = (self.a, self.b, self.c)
        if not _finite(*p) or not (self.a <= self.b <= self.c) or not self.a < self.c:
            raise InvalidInputError(f"triangle needs a <= b <= c and a < c, got {p}")

    @property
    def params(self) -> tuple[float, ...]:
        return (self.a, self.b, self.c)

    def __call__(self, x):
        return _trapezoid(x, self.a, self.b, self.b, self.c)


@dataclass(frozen=True)
class Gaussian:
    mean: float
    sigma: float

    def __post_init__(self):
        if not _finite(self.mean, self.sigma) or not self.sigma > 0:
            raise InvalidInputError(f"gaussian needs sigma > 0, got {self.sigma}")

    @property
    def params(self) -> tuple[float, ...]:
        return (self.mean, self.sigma)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-((x - self.mean) ** 2) / (2.0 * self.sigma**2))


@dataclass(frozen=True)
class GeneralizedBell:
    """``1 / (1 + |(x - c) / a| ** (2 b))``; ``a`` is the half-width, ``b`` the slope."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not _finite(self.a, self.b, self.c) or not (self.a > 0 and self.b > 0):
            raise InvalidInputError(f"bell needs a > 0 and b > 0, got a={self.a}, b={self.b}")

    @property
    def params(self) -> tuple[float, ...]:
        return (self.a, self.b, self.c)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.abs((x - self.c) / self.a) ** (2.0 * self.b))


@dataclass(frozen=True)
class Sigmoid:
    a: float
    c: float

    def __post_init__(self):
        if not _finite(self.a, self.c):
            raise InvalidInputError(f"sigmoid needs finite parameters, got a={self.a}, c={self.c}")

    @property
    def params(self) -> tuple[float, ...]:
        return (self.a, self.c)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(-self.a * (x - self.c)))


@dataclass(frozen=True, eq=False)
class Sampled:
    """A membership function tabulated on a grid spanning its universe.

    Evaluation interpolates linearly between grid points and refuses points
    outside the universe.  Used for blended terms and for every intermediate
    set in the inference pipeline; never written to model files.
    """

    universe: Universe
    points: np.ndarray
    degrees: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        deg = np.array(self.degrees, dtype=float)
        if pts.ndim != 1 or pts.shape != deg.shape or pts.size < 2:
            raise InvalidInputError("sampled set needs matching 1-d point and degree arrays of length >= 2")
        if not np.all(np.diff(pts) > 0):
            raise InvalidInputError("sampled points must be strictly increasing")
        if pts[0] != self.universe.lo or pts[-1] != self.universe.hi:
            raise InvalidInputError("sampled points must start and end on the universe bounds")
        if not np.all((deg >= 0.0) & (deg <= 1.0)):
            raise InvalidInputError("sampled degrees must lie in [0, 1]")
        pts.flags.writeable = False
        deg.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "degrees", deg)

    @classmethod
    def from_pairs(cls, universe: Universe, values: Sequence[tuple[float, float]]) -> "Sampled":
        pts, deg = zip(*values)
        return cls(universe, np.array(pts), np.array(deg))

    @property
    def values(self) -> list[tuple[float, float]]:
        return list(zip(self.points.tolist(), self.degrees.tolist()))

    def same_grid(self, other: "Sampled") -> bool:
        return self.points is other.points or (
            self.points.shape == other.points.shape and np.array_equal(self.points, other.points)
        )

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.universe.lo) or np.any(x > self.universe.hi):
            raise InvalidInputError(
                f"point outside sampled universe [{self.universe.lo}, {self.universe.hi}]"
            )
        return np.interp(x, self.points, self.degrees)

    def __eq__(self, other):
        if not isinstance(other, Sampled):
            return NotImplemented
        return (
            self.universe == other.universe
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.degrees, other.degrees)
        )

    __hash__ = None


MembershipFunction = Union[Triangle, Trapezoid, Gaussian, GeneralizedBell, Sigmoid, Sampled]
_PIECEWISE = (Triangle, Trapezoid)


def _corners(mf) -> tuple[float, float, float, float]:
    if isinstance(mf, Triangle):
        return mf.a, mf.b, mf.b, mf.c
    return mf.a, mf.b, mf.c, mf.d


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------


def evaluate(mf: MembershipFunction, x: float) -> float:
    """Degree of membership of a single crisp value."""
    x = float(x)
    if not math.isfinite(x):
        raise InvalidInputError(f"cannot evaluate membership at non-finite x={x}")
    return float(mf(x))


def _level_bounds(points: np.ndarray, degrees: np.ndarray, level: float, strict: bool):
    """Closure of ``{x : interp(x) > level}`` (or ``>=``) on a piecewise-linear table."""
    hit = degrees > level if strict else degrees >= level
    idx = np.flatnonzero(hit)
    if idx.size == 0:
        return None

    def crossing(i, j):
        # degree moves from below `level` at i to above at j
        di, dj = degrees[i], degrees[j]
        t = (level - di) / (dj - di)
        return float(points[i] + t * (points[j] - points[i]))

    first, last = int(idx[0]), int(idx[-1])
    lo = float(points[0]) if first == 0 else crossing(first - 1, first)
    hi = float(points[-1]) if last == len(points) - 1 else crossing(last + 1, last)
    return lo, hi


def support(mf: MembershipFunction, universe: Universe, eps: float = EPS_SUPPORT) -> Interval:
    """Smallest closed interval of the universe holding every point with degree > ``eps``.

    Shapes with unbounded tails are clipped to the universe.  Raises
    EmptySupportError when the function vanishes on the whole universe.
    """
    if isinstance(mf, Sampled):
        bounds = _level_bounds(mf.points, mf.degrees, eps, strict=True)
        found = None if bounds is None else _clip_to(universe, *bounds)
    elif isinstance(mf, _PIECEWISE):
        a, _, _, d = _corners(mf)
        found = _clip_to(universe, a, d)
        if found is not None and not any(mf(p) > eps for p in _probe(mf, found)):
            found = None
    elif isinstance(mf, Gaussian):
        half = mf.sigma * math.sqrt(2.0 * math.log(1.0 / eps))
        found = _clip_to(universe, mf.mean - half, mf.mean + half)
    elif isinstance(mf, GeneralizedBell):
        half = mf.a * (1.0 / eps - 1.0) ** (1.0 / (2.0 * mf.b))
        found = _clip_to(universe, mf.c - half, mf.c + half)
    elif isinstance(mf, Sigmoid):
        found = _sigmoid_region(mf, universe, -math.log(1.0 / eps - 1.0))
    else:
        raise InvalidInputError(f"unknown membership shape {type(mf).__name__}")
    if found is None:
        raise EmptySupportError(f"{mf!r} is identically zero on [{universe.lo}, {universe.hi}]")
    return found


def _probe(mf, interval: Interval):
    # the clipped piecewise-linear support is degenerate only at a boundary touch
    yield interval.lo
    yield interval.hi
    yield 0.5 * (interval.lo + interval.hi)
    a, b, c, _ = _corners(mf)
    for p in (b, c):
        if interval.lo <= p <= interval.hi:
            yield p


def _sigmoid_region(mf: Sigmoid, universe: Universe, threshold: float) -> Interval | None:
    """Where ``a (x - c) >= threshold``, i.e. where the sigmoid reaches a given level."""
    if mf.a == 0.0:
        return Interval(universe.lo, universe.hi) if threshold <= 0.0 else None
    edge = mf.c + threshold / mf.a
    if mf.a > 0:
        return _clip_to(universe, edge, math.inf)
    return _clip_to(universe, -math.inf, edge)


def core(mf: MembershipFunction, universe: Universe, eps: float = EPS_CORE) -> Interval | None:
    """Region of (numerically) full membership, ``None`` when there is none.

    Triangles and trapezoids report their exact plateau ``[b, c]``; smooth
    shapes and sampled tables use the ``degree >= 1 - eps`` cut-off.
    """
    if isinstance(mf, Sampled):
        bounds = _level_bounds(mf.points, mf.degrees, 1.0 - eps, strict=False)
        return None if bounds is None else _clip_to(universe, *bounds)
    if isinstance(mf, _PIECEWISE):
        _, b, c, _ = _corners(mf)
        return _clip_to(universe, b, c)
    if isinstance(mf, Gaussian):
        half = mf.sigma * math.sqrt(-2.0 * math.log1p(-eps))
        return _clip_to(universe, mf.mean - half, mf.mean + half)
    if isinstance(mf, GeneralizedBell):
        half = mf.a * (1.0 / (1.0 - eps) - 1.0) ** (1.0 / (2.0 * mf.b))
        return _clip_to(universe, mf.c - half, mf.c + half)
    if isinstance(mf, Sigmoid):
        return _sigmoid_region(mf, universe, math.log((1.0 - eps) / eps))
    raise InvalidInputError(f"unknown membership shape {type(mf).__name__}")


def sample(mf: MembershipFunction, universe: Universe, n: int) -> Sampled:
    """Tabulate ``mf`` on ``n`` evenly spaced points from ``lo`` to ``hi`` inclusive."""
    if n < 2:
        raise InvalidResolutionError(f"sampling needs n >= 2, got {n}")
    grid = universe.grid(n)
    return Sampled(universe, grid, np.clip(mf(grid), 0.0, 1.0))


def blend(
    mfs: Sequence[MembershipFunction],
    weights: Sequence[float],
    universe: Universe,
    n: int,
) -> Sampled:
    """Weighted average of several membership functions on a common grid."""
    if len(mfs) == 0 or len(mfs) != len(weights):
        raise InvalidInputError(
            f"blend needs one weight per function, got {len(mfs)} functions and {len(weights)} weights"
        )
    w = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise DegenerateWeightsError("blend weights must be finite and non-negative")
    total = float(w.sum())
    if not total > 0:
        raise DegenerateWeightsError("blend weights sum to zero")
    grid = universe.grid(n)
    acc = np.zeros_like(grid)
    for wi, mf in zip(w, mfs):
        acc += wi * mf(grid)
    acc /= total
    # convex combination of values in [0, 1]; only rounding can step outside
    assert np.all(acc >= -1e-12) and np.all(acc <= 1.0 + 1e-12)
    return Sampled(universe, grid, np.clip(acc, 0.0, 1.0))


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

_SHAPES = {
    "triangle": Triangle,
    "trapezoid": Trapezoid,
    "gaussian": Gaussian,
    "bell": GeneralizedBell,
    "sigmoid": Sigmoid,
}
_NAMES = {cls: name for name, cls in _SHAPES.items()}


def mf_from_dict(obj: dict) -> MembershipFunction:
    """Build a shape from its model-file form ``{"shape": ..., "params": [...]}``."""
    if not isinstance(obj, dict) or "shape" not in obj or "params" not in obj:
        raise InvalidInputError(f"membership function must be {{shape, params}}, got {obj!r}")
    shape = str(obj["shape"]).lower()
    if shape not in _SHAPES:
        raise InvalidInputError(f"unknown shape {obj['shape']!r}; expected one of {sorted(_SHAPES)}")
    params = obj["params"]
    cls = _SHAPES[shape]
    arity = len(cls.__dataclass_fields__)
    if not isinstance(params, list) or len(params) != arity:
        raise InvalidInputError(f"{shape} takes {arity} params, got {params!r}")
    try:
        values = [float(p) for p in params]
    except (TypeError, ValueError):
        raise InvalidInputError(f"{shape} params must be numbers, got {params!r}") from None
    return cls(*values)


def mf_to_dict(mf: MembershipFunction) -> dict:
    if isinstance(mf, Sampled):
        raise InvalidInputError("sampled membership functions are runtime-only and not serializable")
    return {"shape": _NAMES[type(mf)], "params": list(mf.params)}
