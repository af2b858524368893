"""Arithmetic on triangular/trapezoidal fuzzy numbers by alpha-cuts.

``arith`` works level by level with interval arithmetic.  ``extension_oracle``
is a brute-force sup-min composition on a grid, kept only so tests can check
``arith`` against an independent computation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DivisionByZeroError, InvalidInputError, InvalidResolutionError
from .membership import Interval, Sampled, Trapezoid, Triangle, Universe

__all__ = [
    "FuzzyNumber",
    "AlphaCut",
    "OPS",
    "alpha_cut",
    "arith",
    "extension_oracle",
    "oracle_cut",
    "is_nested",
]

FuzzyNumber = Union[Triangle, Trapezoid, float]
OPS = ("add", "sub", "mul", "div")


@dataclass(frozen=True)
class AlphaCut:
    alpha: float
    interval: Interval

    @property
    def lo(self) -> float:
        return self.interval.lo

    @property
    def hi(self) -> float:
        return self.interval.hi


def _corners(fn: FuzzyNumber) -> tuple[float, float, float, float]:
    if isinstance(fn, Triangle):
        return fn.a, fn.b, fn.b, fn.c
    if isinstance(fn, Trapezoid):
        return fn.a, fn.b, fn.c, fn.d
    if isinstance(fn, (int, float)) and not isinstance(fn, bool):
        v = float(fn)
        return v, v, v, v
    raise InvalidInputError(f"fuzzy numbers are triangles, trapezoids or crisp values, got {fn!r}")


def alpha_cut(fn: FuzzyNumber, alpha: float) -> Interval:
    """Closed interval where the membership is at least ``alpha``."""
    if not 0.0 < alpha <= 1.0:
        raise InvalidInputError(f"alpha must be in (0, 1], got {alpha}")
    a, b, c, d = _corners(fn)
    if alpha == 1.0:
        return Interval(b, c)
    return Interval(a + alpha * (b - a), d - alpha * (d - c))


def _combine(op: str, x: Interval, y: Interval) -> Interval:
    if op == "add":
        return Interval(x.lo + y.lo, x.hi + y.hi)
    if op == "sub":
        return Interval(x.lo - y.hi, x.hi - y.lo)
    if op == "mul":
        p = (x.lo * y.lo, x.lo * y.hi, x.hi * y.lo, x.hi * y.hi)
    elif op == "div":
        p = (x.lo / y.lo, x.lo / y.hi, x.hi / y.lo, x.hi / y.hi)
    else:
        raise InvalidInputError(f"unknown operation {op!r}; expected one of {OPS}")
    return Interval(min(p), max(p))


def arith(op: str, x: FuzzyNumber, y: FuzzyNumber, levels: int = 101) -> list[AlphaCut]:
    """Combine two fuzzy numbers; returns cuts at ``alpha = j / levels``, ``j = 1..levels``.

    The result is ordered by increasing alpha.  Division raises
    DivisionByZeroError when zero lies in the divisor's support.
    """
    if op not in OPS:
        raise InvalidInputError(f"unknown operation {op!r}; expected one of {OPS}")
    if levels < 2:
        raise InvalidResolutionError(f"need at least 2 alpha levels, got {levels}")
    if op == "div":
        a, _, _, d = _corners(y)
        if a <= 0.0 <= d:
            raise DivisionByZeroError(f"divisor support [{a}, {d}] contains zero")
    return [
        AlphaCut(j / levels, _combine(op, alpha_cut(x, j / levels), alpha_cut(y, j / levels)))
        for j in range(1, levels + 1)
    ]


def is_nested(cuts: list[AlphaCut]) -> bool:
    """True when higher alpha levels give sub-intervals of lower ones."""
    ordered = sorted(cuts, key=lambda c: c.alpha)
    return all(
        lo.interval.contains(hi.interval) for lo, hi in zip(ordered, ordered[1:])
    )


def _operand_grid(fn: FuzzyNumber, grid: int):
    a, b, c, d = _corners(fn)
    if a == d:
        return np.array([a]), np.array([1.0])
    u = np.linspace(a, d, grid)
    # keep the plateau corners on the grid so the core is represented exactly
    u = np.unique(np.concatenate([u, [b, c]]))
    return u, np.asarray(Trapezoid(a, b, c, d)(u))


def extension_oracle(op: str, x: FuzzyNumber, y: FuzzyNumber, grid: int = 1001) -> Sampled:
    """Sup-min extension of a crisp operation, evaluated by brute force.

    Every pair of operand grid points contributes ``min(mu_x(u), mu_y(v))`` to
    the output grid cell nearest ``u op v``; each cell keeps the largest value.
    """
    if grid < 101:
        raise InvalidResolutionError(f"oracle grid needs at least 101 points, got {grid}")
    if op not in OPS:
        raise InvalidInputError(f"unknown operation {op!r}; expected one of {OPS}")
    if op == "div":
        a, _, _, d = _corners(y)
        if a <= 0.0 <= d:
            raise DivisionByZeroError(f"divisor support [{a}, {d}] contains zero")
    u, mu = _operand_grid(x, grid)
    v, mv = _operand_grid(y, grid)
    U, V = np.meshgrid(u, v, indexing="ij")
    z = {"add": np.add, "sub": np.subtract, "mul": np.multiply, "div": np.divide}[op](U, V)
    m = np.minimum.outer(mu, mv)
    zlo, zhi = float(z.min()), float(z.max())
    if zlo == zhi:
        # both operands crisp: widen artificially so the output has a universe
        zlo, zhi = zlo - 0.5, zhi + 0.5
    out = np.linspace(zlo, zhi, grid)
    idx = np.rint((z - zlo) / (zhi - zlo) * (grid - 1)).astype(int)
    deg = np.zeros(grid)
    np.maximum.at(deg, idx.ravel(), m.ravel())
    return Sampled(Universe(zlo, zhi), out, deg)


def oracle_cut(surface: Sampled, alpha: float) -> Interval:
    """Read an alpha-cut off an oracle surface: extreme grid points with degree >= alpha."""
    idx = np.flatnonzero(surface.degrees >= alpha - 1e-12)
    if idx.size == 0:
        raise InvalidInputError(f"oracle surface never reaches alpha={alpha}")
    return Interval(float(surface.points[idx[0]]), float(surface.points[idx[-1]]))
