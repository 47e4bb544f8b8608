"""Spatial regions on graph surfaces and their grown/shrunk images.

A region is a finite union of half-open boxes in the spatial coordinates of
the surface it lives on.  ``grow`` and ``shrink`` are evaluated on a uniform
cell grid: a target cell is related to a source cell when some point of the
first can be joined to some point of the second by a causal curve.  The test
uses the cell centres plus a margin of ``4 r`` (``r`` the half diagonal),
which over-approximates the continuum relation, so ``grow`` returns an outer
and ``shrink`` an inner approximation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .surface import GeometryError, GraphSurface, is_in_future

Box = tuple[tuple[float, ...], tuple[float, ...]]


@dataclass(eq=False)
class Region:
    boxes: tuple[Box, ...]
    surface: GraphSurface | None = None

    def __post_init__(self):
        boxes = []
        for lo, hi in self.boxes:
            lo = tuple(float(v) for v in np.atleast_1d(lo))
            hi = tuple(float(v) for v in np.atleast_1d(hi))
            if len(lo) != len(hi) or any(b < a for a, b in zip(lo, hi)):
                raise GeometryError(f"malformed box {lo}, {hi}")
            boxes.append((lo, hi))
        self.boxes = tuple(boxes)

    @classmethod
    def interval(cls, a: float, b: float, surface=None) -> Region:
        return cls(boxes=(((a,), (b,)),), surface=surface)

    @classmethod
    def whole(cls, surface: GraphSurface) -> Region:
        return cls(boxes=((tuple(surface.lo), tuple(surface.hi)),), surface=surface)

    def _wrapped(self, points, surface):
        p = np.asarray(points, dtype=float)
        if surface is not None and surface.periodic:
            p = surface.lo + np.mod(p - surface.lo, surface.period)
        return p

    def contains(self, points) -> np.ndarray:
        """Membership of points (shape ``(..., d)``), wrapping periodic boxes."""
        surf = self.surface
        p = np.asarray(points, dtype=float)
        out = np.zeros(p.shape[:-1], dtype=bool)
        shifts = [np.zeros(p.shape[-1])]
        if surf is not None and surf.periodic:
            p = self._wrapped(p, surf)
            per = surf.period
            shifts = [np.array(s) * per for s in np.ndindex(*(3,) * p.shape[-1])]
            shifts = [s - per for s in shifts]
        for lo, hi in self.boxes:
            lo, hi = np.array(lo), np.array(hi)
            for s in shifts:
                q = p + s
                out |= np.all((q >= lo) & (q < hi), axis=-1)
        return out

    def cell_masks(self, grid: CellGrid) -> tuple[np.ndarray, np.ndarray]:
        """``(inside, touching)`` masks of grid cells against this region.

        A cell is inside when it lies in a single box and touching when it
        meets some box in a set of positive measure.
        """
        inside = np.zeros(grid.shape, dtype=bool)
        touching = np.zeros(grid.shape, dtype=bool)
        lo_c, hi_c = grid.cell_bounds()
        shifts = [np.zeros(grid.dim)]
        if grid.periodic:
            shifts = [(np.array(s) - 1) * grid.period for s in np.ndindex(*(3,) * grid.dim)]
        for lo, hi in self.boxes:
            lo, hi = np.array(lo), np.array(hi)
            for s in shifts:
                a, b = lo + s, hi + s
                inside |= np.all((lo_c >= a - 1e-12) & (hi_c <= b + 1e-12), axis=-1)
                touching |= np.all((np.minimum(hi_c, b) - np.maximum(lo_c, a)) > 1e-12, axis=-1)
        return inside, touching

    def volume(self, resolution: int = 4096) -> float:
        if self.surface is None:
            return float(sum(np.prod(np.subtract(hi, lo)) for lo, hi in self.boxes))
        grid = CellGrid.for_surface(self.surface, resolution)
        return float(self.contains(grid.centers()).sum() * grid.cell_volume)

    def to_json(self) -> dict:
        return {"boxes": [[list(lo), list(hi)] for lo, hi in self.boxes]}


@dataclass(frozen=True)
class CellGrid:
    lo: np.ndarray
    hi: np.ndarray
    shape: tuple[int, ...]
    periodic: bool

    @classmethod
    def for_surface(cls, surface: GraphSurface, cells_per_axis: int | None = None) -> CellGrid:
        if cells_per_axis is None:
            cells_per_axis = {1: 4096, 2: 96}.get(surface.dim, 24)
        return cls(surface.lo, surface.hi, (cells_per_axis,) * surface.dim, surface.periodic)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def period(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def spacing(self) -> np.ndarray:
        return (self.hi - self.lo) / np.array(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def half_diagonal(self) -> float:
        return 0.5 * float(np.linalg.norm(self.spacing))

    def cell_bounds(self):
        idx = np.stack(np.meshgrid(*[np.arange(n) for n in self.shape], indexing="ij"), axis=-1)
        lo = self.lo + idx * self.spacing
        return lo, lo + self.spacing

    def centers(self) -> np.ndarray:
        lo, hi = self.cell_bounds()
        return 0.5 * (lo + hi)

    def region_from_mask(self, mask: np.ndarray, surface=None) -> Region:
        """Union of boxes covering the cells in ``mask`` (row runs along the last axis)."""
        boxes = []
        h = self.spacing
        for prefix in np.ndindex(*self.shape[:-1]):
            row = mask[prefix]
            padded = np.concatenate([[False], row, [False]])
            starts = np.flatnonzero(~padded[:-1] & padded[1:])
            ends = np.flatnonzero(padded[:-1] & ~padded[1:])
            for s, e in zip(starts, ends):
                lo = [self.lo[k] + h[k] * prefix[k] for k in range(self.dim - 1)]
                hi = [v + h[k] for k, v in enumerate(lo)]
                lo.append(self.lo[-1] + h[-1] * s)
                hi.append(self.lo[-1] + h[-1] * e)
                boxes.append((tuple(lo), tuple(hi)))
        return Region(tuple(boxes), surface)


def _pairwise_distance(c_tgt, c_src, grid: CellGrid):
    diff = np.abs(c_tgt[:, None, :] - c_src[None, :, :])
    if grid.periodic:
        diff = np.minimum(diff, grid.period - diff)
    return np.sqrt((diff ** 2).sum(axis=-1))


def causal_relation(source: GraphSurface, target: GraphSurface, grid: CellGrid,
                    src_cells=None, chunk=2048) -> np.ndarray:
    """Boolean matrix ``R[target_cell, source_cell]`` (flattened cell indices).

    When ``target`` lies in the future of ``source`` (or vice versa) only the
    future (past) light cone is used, otherwise both.
    """
    centers = grid.centers().reshape(-1, grid.dim)
    f_src = source.evaluate(centers)
    f_tgt = target.evaluate(centers)
    margin = 4 * grid.half_diagonal
    if is_in_future(target, source):
        mode = 1
    elif is_in_future(source, target):
        mode = -1
    else:
        mode = 0
    cols = np.arange(len(centers)) if src_cells is None else np.asarray(src_cells)
    out = np.zeros((len(centers), len(cols)), dtype=bool)
    for start in range(0, len(centers), chunk):
        rows = slice(start, start + chunk)
        dist = _pairwise_distance(centers[rows], centers[cols], grid)
        dt = f_tgt[rows, None] - f_src[None, cols]
        if mode == 1:
            out[rows] = dt + margin >= dist
        elif mode == -1:
            out[rows] = -dt + margin >= dist
        else:
            out[rows] = np.abs(dt) + margin >= dist
    return out


def _same_surface(a: GraphSurface, b: GraphSurface) -> bool:
    return a is b or (a.same_domain(b) and a.heights.shape == b.heights.shape
                      and np.array_equal(a.heights, b.heights))


def _source(a: Region) -> GraphSurface:
    if a.surface is None:
        raise GeometryError("region is not attached to a surface")
    return a.surface


def grow(a: Region, target: GraphSurface, grid: CellGrid | None = None) -> Region:
    """Points of ``target`` causally connected to ``a`` (outer approximation)."""
    src = _source(a)
    if not src.same_domain(target):
        raise GeometryError("surfaces are defined over different domains")
    if _same_surface(src, target):
        return Region(a.boxes, target)
    grid = grid or CellGrid.for_surface(target)
    _, touching = a.cell_masks(grid)
    cols = np.flatnonzero(touching.ravel())
    if len(cols) == 0:
        return Region((), target)
    rel = causal_relation(src, target, grid, cols)
    return grid.region_from_mask(rel.any(axis=1).reshape(grid.shape), target)


def shrink(a: Region, target: GraphSurface, grid: CellGrid | None = None) -> Region:
    """Points of ``target`` whose whole causal shadow lies in ``a`` (inner approximation)."""
    src = _source(a)
    if not src.same_domain(target):
        raise GeometryError("surfaces are defined over different domains")
    if _same_surface(src, target):
        return Region(a.boxes, target)
    grid = grid or CellGrid.for_surface(target)
    inside, _ = a.cell_masks(grid)
    cols = np.flatnonzero(~inside.ravel())
    if len(cols) == 0:
        return Region.whole(target)
    rel = causal_relation(src, target, grid, cols)
    return grid.region_from_mask(~rel.any(axis=1).reshape(grid.shape), target)


@dataclass(eq=False)
class AdmissiblePartition:
    """Finitely many pairwise disjoint regions of one surface."""

    regions: list[Region]
    surface: GraphSurface | None = field(default=None)

    def __post_init__(self):
        if self.surface is None and self.regions:
            self.surface = self.regions[0].surface
        for r in self.regions:
            if r.surface is None:
                r.surface = self.surface
        for i in range(len(self.regions)):
            for j in range(i + 1, len(self.regions)):
                if _overlap(self.regions[i], self.regions[j], self.surface):
                    raise GeometryError(f"regions {i} and {j} overlap")

    def __len__(self):
        return len(self.regions)

    def to_json(self) -> dict:
        return {"regions": [r.to_json() for r in self.regions]}


def _overlap(a: Region, b: Region, surface) -> bool:
    shifts = [np.zeros(len(a.boxes[0][0]) if a.boxes else 1)]
    if surface is not None and surface.periodic:
        shifts = [(np.array(s) - 1) * surface.period for s in np.ndindex(*(3,) * surface.dim)]
    for lo1, hi1 in a.boxes:
        for lo2, hi2 in b.boxes:
            for s in shifts:
                w = np.minimum(np.array(hi1), np.array(hi2) + s) - np.maximum(np.array(lo1), np.array(lo2) + s)
                if np.all(w > 1e-12):
                    return True
    return False


def project_partition(p: AdmissiblePartition, upsilon: GraphSurface) -> AdmissiblePartition:
    """Vertical projection: same spatial footprints on another graph surface."""
    if p.surface is not None and not p.surface.same_domain(upsilon):
        raise GeometryError("surfaces are defined over different domains")
    return AdmissiblePartition([Region(r.boxes, upsilon) for r in p.regions], upsilon)


def region_from_json(data: dict, surface=None) -> Region:
    return Region(tuple((tuple(lo), tuple(hi)) for lo, hi in data["boxes"]), surface)
