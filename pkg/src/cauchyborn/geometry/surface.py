"""Graph surfaces in 1+d Minkowski space and their Kuhn triangulations.

A surface is the graph ``t = f(x)`` of a function sampled on a uniform grid
over a box (optionally periodic).  Between samples ``f`` is the piecewise
linear interpolant on the Kuhn subdivision of each grid cell into ``d!``
simplices, so a sampled surface and a triangular surface share the same
evaluation code.  Metric signature is (+, -, ..., -).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np


class GeometryError(ValueError):
    pass


@dataclass(eq=False)
class GraphSurface:
    lo: np.ndarray
    hi: np.ndarray
    heights: np.ndarray
    periodic: bool = True

    def __post_init__(self):
        self.lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        self.heights = np.asarray(self.heights, dtype=float)
        if self.lo.shape != self.hi.shape or self.heights.ndim != self.lo.size:
            raise GeometryError("domain and height array dimensions disagree")
        if np.any(self.hi <= self.lo):
            raise GeometryError("empty domain")
        if not np.all(np.isfinite(self.heights)):
            raise GeometryError("non-finite heights")
        minimum = 1 if self.periodic else 2
        if min(self.heights.shape) < minimum:
            raise GeometryError("too few samples")

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def cells(self) -> tuple[int, ...]:
        if self.periodic:
            return tuple(self.heights.shape)
        return tuple(n - 1 for n in self.heights.shape)

    @property
    def spacing(self) -> np.ndarray:
        return (self.hi - self.lo) / np.array(self.cells)

    @property
    def period(self) -> np.ndarray:
        return self.hi - self.lo

    def axis_nodes(self, axis: int) -> np.ndarray:
        n = self.heights.shape[axis]
        return self.lo[axis] + self.spacing[axis] * np.arange(n)

    def nodes(self) -> np.ndarray:
        """Vertex coordinates, shape ``heights.shape + (d,)``."""
        grids = np.meshgrid(*[self.axis_nodes(k) for k in range(self.dim)], indexing="ij")
        return np.stack(grids, axis=-1)

    def same_domain(self, other: GraphSurface, tol: float = 1e-12) -> bool:
        return (self.dim == other.dim and self.periodic == other.periodic
                and np.allclose(self.lo, other.lo, atol=tol, rtol=0)
                and np.allclose(self.hi, other.hi, atol=tol, rtol=0))

    def evaluate(self, points) -> np.ndarray:
        """Piecewise-linear height at ``points`` (shape ``(..., d)``)."""
        p = np.asarray(points, dtype=float)
        if self.dim == 1 and (p.ndim == 0 or p.shape[-1] != 1):
            p = p[..., None]
        shape = p.shape[:-1]
        p = p.reshape(-1, self.dim)
        cells = np.array(self.cells)
        u = (p - self.lo) / self.spacing
        if self.periodic:
            u = np.mod(u, cells)
        else:
            if np.any(u < -1e-9) or np.any(u > cells + 1e-9):
                raise GeometryError("point outside the domain")
        idx = np.clip(np.floor(u).astype(np.int64), 0, cells - 1)
        frac = u - idx
        if self.dim == 1:
            v0 = idx[:, 0]
            v1 = v0 + 1
            if self.periodic:
                v1 = v1 % cells[0]
            f = self.heights
            out = f[v0] + (f[v1] - f[v0]) * frac[:, 0]
            return out.reshape(shape)
        order = np.argsort(-frac, axis=1, kind="stable")
        rows = np.arange(len(p))
        v = idx.copy()
        val = self.heights[tuple(v.T)]
        for k in range(self.dim):
            ax = order[:, k]
            w = v.copy()
            w[rows, ax] += 1
            if self.periodic:
                w[rows, ax] %= cells[ax]
            fw = self.heights[tuple(w.T)]
            val = val + (fw - self.heights[tuple(v.T)]) * frac[rows, ax]
            v = w
        return val.reshape(shape)

    def simplex_gradients(self) -> np.ndarray:
        """Gradients of every Kuhn simplex, shape ``(d!, *cells, d)``."""
        f = self.heights
        d = self.dim
        h = self.spacing
        out = []
        for perm in itertools.permutations(range(d)):
            grad = np.zeros(self.cells + (d,))
            offset = np.zeros(d, dtype=int)
            for ax in perm:
                a = _shifted(f, offset, self.cells, self.periodic)
                offset[ax] += 1
                b = _shifted(f, offset, self.cells, self.periodic)
                grad[..., ax] = (b - a) / h[ax]
            out.append(grad)
        return np.stack(out)

    def lipschitz_constant(self) -> float:
        """Exact Lipschitz constant of the interpolant (max simplex gradient norm)."""
        g = self.simplex_gradients()
        return float(np.sqrt((g ** 2).sum(axis=-1)).max())

    def shifted(self, dt: float) -> GraphSurface:
        return replace(self, heights=self.heights + dt)

    def to_json(self) -> dict:
        return {
            "kind": type(self).__name__,
            "lo": self.lo.tolist(),
            "hi": self.hi.tolist(),
            "periodic": self.periodic,
            "shape": list(self.heights.shape),
            "spacing": self.spacing.tolist(),
            "heights": self.heights.ravel().tolist(),
        }


def _shifted(f, offset, cells, periodic):
    """``f`` evaluated at ``index + offset`` over all cells."""
    sl = []
    for ax, o in enumerate(offset):
        n = cells[ax]
        if periodic:
            sl.append((np.arange(n) + o) % f.shape[ax])
        else:
            sl.append(np.arange(n) + o)
    return f[np.ix_(*sl)]


@dataclass(eq=False)
class CauchySurfaceGraph(GraphSurface):
    """Graph surface whose interpolant has Lipschitz constant below 1."""

    lipschitz_bound: float = 0.999

    def __post_init__(self):
        super().__post_init__()
        if not (0 <= self.lipschitz_bound < 1):
            raise GeometryError("Lipschitz bound must lie in [0, 1)")
        lip = self.lipschitz_constant()
        if lip > self.lipschitz_bound + 1e-12:
            raise GeometryError(f"Lipschitz constant {lip:.6g} exceeds bound {self.lipschitz_bound}")

    def to_json(self) -> dict:
        out = super().to_json()
        out["lipschitz_bound"] = self.lipschitz_bound
        return out


@dataclass(frozen=True)
class Simplex:
    vertices: np.ndarray  # (d+1, 1+d) rows (t, x1, ..., xd)

    @property
    def dim(self) -> int:
        return self.vertices.shape[0] - 1


@dataclass(eq=False)
class TriangularSurface(GraphSurface):
    """Piecewise-flat surface: graph of a Kuhn-simplicial piecewise-linear function.

    Simplex ``k`` is addressed as ``(permutation, cell)`` with the permutation
    index varying slowest.  ``eps`` and ``level`` record how the surface was
    built when it comes from :func:`build_triangulation`.
    """

    eps: float | None = None
    level: int | None = None
    _perms: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        super().__post_init__()
        self._perms = list(itertools.permutations(range(self.dim)))

    @property
    def num_simplices(self) -> int:
        return len(self._perms) * int(np.prod(self.cells))

    def simplex_index(self, perm_index: int, cell) -> int:
        return perm_index * int(np.prod(self.cells)) + int(np.ravel_multi_index(tuple(cell), self.cells))

    def cell_simplices(self, cell) -> list[int]:
        return [self.simplex_index(p, cell) for p in range(len(self._perms))]

    def simplex(self, k: int) -> Simplex:
        ncell = int(np.prod(self.cells))
        if not 0 <= k < self.num_simplices:
            raise IndexError(k)
        perm = self._perms[k // ncell]
        cell = np.array(np.unravel_index(k % ncell, self.cells))
        verts = []
        v = cell.copy()
        for step in range(self.dim + 1):
            if step > 0:
                v[perm[step - 1]] += 1
            x = self.lo + v * self.spacing
            idx = tuple(v % np.array(self.heights.shape)) if self.periodic else tuple(v)
            verts.append(np.concatenate([[self.heights[idx]], x]))
        return Simplex(np.array(verts))

    def simplex_vertex_indices(self) -> np.ndarray:
        """Vertex index triples of all simplices, shape ``(num_simplices, d+1)``."""
        shape = np.array(self.heights.shape)
        cells = np.indices(self.cells).reshape(self.dim, -1).T
        out = []
        for perm in self._perms:
            v = cells.copy()
            cols = [np.ravel_multi_index(tuple((v % shape).T), self.heights.shape)]
            for ax in perm:
                v[:, ax] += 1
                w = v % shape if self.periodic else v
                cols.append(np.ravel_multi_index(tuple(w.T), self.heights.shape))
            out.append(np.stack(cols, axis=1))
        return np.concatenate(out)

    @classmethod
    def from_heights(cls, lo, hi, heights, periodic=True, eps=None, level=None) -> TriangularSurface:
        return cls(lo=lo, hi=hi, heights=heights, periodic=periodic, eps=eps, level=level)

    def to_json(self) -> dict:
        out = super().to_json()
        out["eps"] = self.eps
        out["level"] = self.level
        return out


def lower_surface(sigma: GraphSurface, t: float) -> GraphSurface:
    """Translate the surface down in time by ``t``."""
    return sigma.shifted(-float(t))


def build_triangulation(sigma: GraphSurface, n: int) -> TriangularSurface:
    """Triangular Cauchy surface within ``3 * 3**-n`` of ``sigma`` and below it.

    With ``eps = 3**-n`` the surface is lowered by ``2 eps``, the domain is
    covered by a grid whose spacing is at most ``eps / sqrt(d)`` (the count
    of cells per axis is rounded up so the grid stays periodic), and vertices
    are lifted onto the lowered surface.
    """
    if n < 1:
        raise GeometryError("level must be a positive integer")
    eps = 3.0 ** (-n)
    d = sigma.dim
    target = eps / math.sqrt(d)
    cells = np.ceil(sigma.period / target - 1e-9).astype(int)
    spacing = sigma.period / cells
    if np.any(spacing < sigma.spacing - 1e-15):
        raise GeometryError(
            f"insufficient sampling: level {n} needs spacing {spacing.min():.3g} "
            f"but the surface is sampled at {sigma.spacing.min():.3g}")
    shape = tuple(cells) if sigma.periodic else tuple(cells + 1)
    axes = [sigma.lo[k] + spacing[k] * np.arange(shape[k]) for k in range(d)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    heights = sigma.evaluate(pts) - 2 * eps
    return TriangularSurface(lo=sigma.lo.copy(), hi=sigma.hi.copy(), heights=heights,
                             periodic=sigma.periodic, eps=eps, level=n)


def is_cauchy(surface: GraphSurface, strict: bool = True) -> bool:
    """Spacelike check for a piecewise-linear graph.

    Every edge of every Kuhn simplex must be spacelike (strictly when
    ``strict``) and every simplex gradient must have norm at most one.
    """
    f = surface.heights
    h = surface.spacing
    d = surface.dim
    for perm in itertools.permutations(range(d)):
        vals = []
        offset = np.zeros(d, dtype=int)
        vals.append(_shifted(f, offset, surface.cells, surface.periodic))
        for ax in perm:
            offset[ax] += 1
            vals.append(_shifted(f, offset, surface.cells, surface.periodic))
        for a in range(d + 1):
            for b in range(a + 1, d + 1):
                dx2 = sum(h[perm[k]] ** 2 for k in range(a, b))
                dt2 = (vals[b] - vals[a]) ** 2
                bad = dt2 >= dx2 if strict else dt2 > dx2
                if np.any(bad):
                    return False
    return surface.lipschitz_constant() <= 1.0


def _union_axes(a: GraphSurface, b: GraphSurface) -> list[np.ndarray]:
    axes = []
    for k in range(a.dim):
        pts = np.concatenate([a.axis_nodes(k), b.axis_nodes(k), [a.hi[k]]])
        axes.append(np.unique(np.round(pts, 13)))
    return axes


def _refine(axes: list[np.ndarray]) -> list[np.ndarray]:
    out = []
    for x in axes:
        mid = 0.5 * (x[1:] + x[:-1])
        out.append(np.sort(np.concatenate([x, mid])))
    return out


def _grid_difference(a, b, axes, chunk=1 << 20):
    """Max and min of ``a - b`` over the tensor grid ``axes``."""
    d = len(axes)
    if d == 1:
        diff = a.evaluate(axes[0]) - b.evaluate(axes[0])
        return float(diff.max()), float(diff.min())
    hi, lo = -np.inf, np.inf
    # iterate over the first axis in blocks to bound memory
    rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, d - 1)
    per = max(1, chunk // len(rest))
    for start in range(0, len(axes[0]), per):
        x0 = axes[0][start:start + per]
        pts = np.concatenate([np.repeat(x0, len(rest))[:, None], np.tile(rest, (len(x0), 1))], axis=1)
        diff = a.evaluate(pts) - b.evaluate(pts)
        hi, lo = max(hi, float(diff.max())), min(lo, float(diff.min()))
    return hi, lo


def _difference_extrema(a, b, tol=1e-9, max_points=1 << 22):
    if not a.same_domain(b):
        raise GeometryError("surfaces are defined over different domains")
    axes = _union_axes(a, b)
    hi, lo = _grid_difference(a, b, axes)
    if a.dim == 1:
        return hi, lo  # breakpoints of both interpolants are on the grid
    while True:
        finer = _refine(axes)
        if np.prod([len(x) for x in finer]) > max_points:
            return hi, lo
        hi2, lo2 = _grid_difference(a, b, finer)
        done = hi2 - hi <= tol and lo - lo2 <= tol
        axes, hi, lo = finer, max(hi, hi2), min(lo, lo2)
        if done:
            return hi, lo


def uniform_distance(a: GraphSurface, b: GraphSurface) -> float:
    """``sup |f_a - f_b|`` over the common domain."""
    hi, lo = _difference_extrema(a, b)
    return max(abs(hi), abs(lo))


def is_in_future(later: GraphSurface, earlier: GraphSurface, atol: float = 1e-12) -> bool:
    """Whether ``later`` lies pointwise at or above ``earlier``."""
    _, lo = _difference_extrema(later, earlier)
    return lo >= -atol


def surface_from_json(data: dict) -> GraphSurface:
    kind = data.get("kind", "GraphSurface")
    heights = np.asarray(data["heights"], dtype=float).reshape(data["shape"])
    common = dict(lo=data["lo"], hi=data["hi"], heights=heights, periodic=data["periodic"])
    if kind == "TriangularSurface":
        return TriangularSurface(**common, eps=data.get("eps"), level=data.get("level"))
    if kind == "CauchySurfaceGraph":
        return CauchySurfaceGraph(**common, lipschitz_bound=data["lipschitz_bound"])
    if kind == "GraphSurface":
        return GraphSurface(**common)
    raise GeometryError(f"unknown surface kind {kind!r}")
