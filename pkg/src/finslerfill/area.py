"""Holmes-Thompson and Busemann areas of the disc."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import build_geometry
from .metric import MetricError, ball_area_batch, coball_area_batch


@dataclass
class AreaResult:
    value: float
    error: float        # resolution estimate: quadrature + polygon deficit
    kind: str
    h: float
    m: int

    def __float__(self):
        return float(self.value)


def ht_density(metric, pts, m=512):
    """``|B*_x| / pi`` at each point."""
    return coball_area_batch(metric, pts, m) / np.pi


def busemann_density(metric, pts, m=512):
    return np.pi / ball_area_batch(metric, pts, m)


def _geometry(mesh_or_h, R=3):
    if hasattr(mesh_or_h, "geometry"):
        return mesh_or_h.geometry
    if hasattr(mesh_or_h, "vertex_area"):
        return mesh_or_h
    return build_geometry(float(mesh_or_h), R)


def _polygon_deficit(density_fn, metric, m, pts):
    # inscribed polygon error is O(m^-2): A(m) - A(m/2) ~ 3 (A - A(m))
    a = density_fn(metric, pts, m)
    b = density_fn(metric, pts, m // 2)
    return float(np.max(np.abs(a - b) / np.abs(a))) / 3.0


def _area(metric, mesh, m, density_fn, kind):
    if m < 8:
        raise ValueError("sphere polygons need at least 8 vertices")
    g = _geometry(mesh)
    dens = density_fn(metric, g.points, m)
    value = float(np.dot(g.vertex_area, dens))
    # quadrature error from the same rule on the mesh of spacing 2h
    error = 0.0
    if 2 * g.h <= 0.2 and 2 * g.h * g.R <= 0.5:
        gc = build_geometry(2 * g.h, g.R)
        coarse = float(np.dot(gc.vertex_area, density_fn(metric, gc.points, m)))
        error += abs(value - coarse) / 3.0
    probe = g.points[:: max(1, len(g.points) // 64)]
    error += abs(value) * _polygon_deficit(density_fn, metric, m, probe)
    return AreaResult(value=value, error=error, kind=kind, h=g.h, m=m)


def ht_area(metric, mesh, m=512) -> AreaResult:
    """``(1/pi) * integral of |B*_x|`` by lumped vertex quadrature.

    ``mesh`` may be a :class:`DiscMesh`, a geometry or a resolution ``h``.
    """
    return _area(metric, mesh, m, ht_density, "holmes-thompson")


def busemann_area(metric, mesh, m=512) -> AreaResult:
    """``integral of pi / |B_x|``; only defined here for reversible metrics."""
    if not metric.reversible:
        raise MetricError("busemann area is not defined for non-reversible metrics")
    return _area(metric, mesh, m, busemann_density, "busemann")


def santalo_product(metric, pts, m=4096):
    """``|B_x| * |B*_x|`` at each point (at most ``pi^2`` for reversible norms)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return ball_area_batch(metric, pts, m) * coball_area_batch(metric, pts, m)
