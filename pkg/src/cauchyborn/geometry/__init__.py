"""Continuum geometry: graph surfaces, triangulations, regions and boosts."""
from .boost import BandReport, boost_band_check, boost_points, boost_surface, eps_tilde, gamma
from .catalog import CATALOG, make_surface
from .regions import (AdmissiblePartition, CellGrid, Region, causal_relation, grow, project_partition,
                      region_from_json, shrink)
from .surface import (CauchySurfaceGraph, GeometryError, GraphSurface, TriangularSurface, build_triangulation,
                      is_cauchy, is_in_future, lower_surface, surface_from_json, uniform_distance)

__all__ = [
    "AdmissiblePartition", "BandReport", "CATALOG", "CauchySurfaceGraph", "CellGrid", "GeometryError",
    "GraphSurface", "Region", "TriangularSurface", "boost_band_check", "boost_points", "boost_surface",
    "build_triangulation", "causal_relation", "eps_tilde", "gamma", "grow", "is_cauchy", "is_in_future", "lower_surface",
    "make_surface", "project_partition", "region_from_json", "shrink", "surface_from_json", "uniform_distance",
]
