"""Lorentz boosts of graph surfaces along the first spatial axis.

A boosted piecewise-linear curve is again piecewise linear with the boosted
vertices as breakpoints, so the boosted surface is represented exactly by a
polyline over the boosted spatial coordinate.  Surfaces in more than one
spatial dimension are boosted line by line along ``x1``; the other
coordinates are unchanged by the boost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .surface import GeometryError, GraphSurface


def gamma(beta: float) -> float:
    if not -1 < beta < 1:
        raise GeometryError("boost velocity must satisfy |beta| < 1")
    return 1.0 / math.sqrt(1.0 - beta * beta)


def eps_tilde(eps: float, beta: float) -> float:
    """Band width ``(|beta| gamma + gamma) eps``."""
    g = gamma(beta)
    return (abs(beta) * g + g) * eps


def boost_points(t, x1, beta: float):
    g = gamma(beta)
    t = np.asarray(t, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    return g * (t + beta * x1), g * (x1 + beta * t)


@dataclass(eq=False)
class Polyline:
    xs: np.ndarray
    ts: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.xs) <= 0):
            raise GeometryError("boosted curve is not a graph (surface not spacelike)")

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.xs[0] - 1e-12) or np.any(x > self.xs[-1] + 1e-12):
            raise GeometryError("evaluation outside the boosted window")
        return np.interp(x, self.xs, self.ts)


@dataclass(eq=False)
class BoostedSurface:
    """One polyline per line of constant ``(x2, ..., xd)``."""

    beta: float
    lines: list[Polyline]
    window: tuple[float, float]


def _lines(sigma: GraphSurface):
    """Yield (x1 nodes, heights) along every line of the sample grid."""
    h = np.moveaxis(sigma.heights, 0, -1)
    x1 = sigma.axis_nodes(0)
    for idx in np.ndindex(*h.shape[:-1]):
        yield x1, h[idx]


def boost_surface(sigma: GraphSurface, beta: float, periods: int = 3) -> BoostedSurface:
    """Image of the surface under the boost, unrolled over ``periods`` copies.

    The returned window is the boosted image of the central copy; every
    polyline is defined on all of it.
    """
    if not sigma.periodic:
        periods = 1
    per = sigma.period[0]
    lines = []
    lo_w, hi_w = -np.inf, np.inf
    for x1, ts in _lines(sigma):
        if sigma.periodic:
            xs = np.concatenate([x1 + k * per for k in range(-(periods // 2), periods // 2 + 1)]
                                + [[x1[0] + (periods // 2 + 1) * per]])
            tt = np.concatenate([ts] * periods + [ts[:1]])
        else:
            xs, tt = x1, ts
        tb, xb = boost_points(tt, xs, beta)
        lines.append(Polyline(xb, tb))
        if sigma.periodic:
            # boosted images of the endpoints of the central period
            t0, x0 = boost_points(ts[0], x1[0], beta)
            t1, x1b = boost_points(ts[0], x1[0] + per, beta)
            lo_w, hi_w = max(lo_w, float(x0)), min(hi_w, float(x1b))
        else:
            lo_w, hi_w = max(lo_w, float(xb[0])), min(hi_w, float(xb[-1]))
    return BoostedSurface(beta, lines, (lo_w, hi_w))


@dataclass
class BandReport:
    beta: float
    eps: float
    eps_tilde: float
    min_gap: float
    max_gap: float
    excess: float
    passed: bool


def boost_band_check(sigma: GraphSurface, eps: float, beta: float, atol: float = 1e-9) -> BandReport:
    """Check that the boosted slab between ``sigma`` and ``sigma + eps`` has
    vertical width in ``(0, eps_tilde]``.

    The gap between the two boosted polylines is piecewise linear with breaks
    only at their vertices, so evaluating on the union of vertices in the
    common window gives its exact extrema.
    """
    if eps <= 0:
        raise GeometryError("eps must be positive")
    lower = boost_surface(sigma, beta)
    upper = boost_surface(sigma.shifted(eps), beta)
    lo = max(lower.window[0], upper.window[0])
    hi = min(lower.window[1], upper.window[1])
    gmin, gmax = np.inf, -np.inf
    for a, b in zip(lower.lines, upper.lines):
        xs = np.concatenate([a.xs, b.xs, [lo, hi]])
        xs = xs[(xs >= lo) & (xs <= hi)]
        gap = b.evaluate(xs) - a.evaluate(xs)
        gmin, gmax = min(gmin, float(gap.min())), max(gmax, float(gap.max()))
    et = eps_tilde(eps, beta)
    excess = gmax - et
    return BandReport(beta, eps, et, gmin, gmax, excess, bool(gmin > 0 and excess <= atol))
