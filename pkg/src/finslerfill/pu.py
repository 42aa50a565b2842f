"""Systolic area of the projective plane from a disc with antipodal gluing."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .area import ht_area
from .cyclic import I_boundary
from .distance import _solve, boundary_arclength, forward_distance_field, metrication_tolerance
from .metric import MetricError

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# the boundary computation for arc-distance traces


def four_case_pair(t, n):
    """``(f_i, f_{i+1})`` at arclength ``t`` past ``p_i`` on a boundary of
    length ``2 pi`` whose distances are arc distances, ``p_{i+1}`` sitting
    ``2 pi / n`` further on."""
    t = np.mod(np.asarray(t, dtype=float), TWO_PI)
    a = TWO_PI / n
    x = np.where(t <= np.pi, t, TWO_PI - t)
    y = np.select([t <= a, t <= np.pi, t <= np.pi + a], [a - t, t - a, t - a], TWO_PI + a - t)
    return x, y


def round_boundary_I(n, samples=10_000):
    """``I`` of the distance map from ``n`` equally spaced boundary points
    when boundary distances are arc distances.

    Returns ``(closed_form, numeric)``.  The numeric value applies the
    boundary formula to the piecewise linear traces sampled on a uniform grid
    merged with all break points, so it is exact up to rounding.
    """
    n = int(n)
    if n < 3:
        raise ValueError("n must be at least 3")
    closed = TWO_PI * (1.0 - 2.0 / n)
    a = TWO_PI / n
    starts = a * np.arange(n)
    grid = np.unique(np.concatenate([np.linspace(0, TWO_PI, samples, endpoint=False),
                                     np.mod(starts, TWO_PI), np.mod(starts + np.pi, TWO_PI)]))
    traces = np.empty((n, len(grid)))
    for i in range(n):
        traces[i] = four_case_pair(grid - starts[i], n)[0]
    # the second component must agree with the next trace
    check = four_case_pair(grid - starts[0], n)[1]
    if np.max(np.abs(check - traces[1 % n])) > 1e-12:
        raise AssertionError("four-case traces are inconsistent")
    return closed, I_boundary(traces)


# ---------------------------------------------------------------------------
# hypotheses on the disc model


@dataclass
class PuHypotheses:
    boundary_length: float
    length_ok: bool
    antipodal_error: float     # max |d(x, -x) - pi| over sampled boundary x
    antipodal_ok: bool
    arc_error: float           # max |d(x, y) - arc(x, y)| over sampled pairs
    arc_ok: bool
    tolerance: float

    @property
    def passed(self):
        return self.length_ok and self.antipodal_ok and self.arc_ok


def verify_pu_hypotheses(metric, mesh, samples=16, tol=None) -> PuHypotheses:
    """Boundary length ``2 pi``, antipodal boundary distance ``pi`` and
    boundary distances realised by boundary arcs, all within ``tol``
    (default: the metrication tolerance)."""
    if not metric.reversible:
        raise MetricError("the projective-plane model needs a reversible metric")
    tol = metrication_tolerance(mesh) if tol is None else tol
    g = mesh.geometry
    N = g.n_boundary
    cum, total = boundary_arclength(metric, g.boundary_angles)
    ks = np.unique(np.linspace(0, N, samples, endpoint=False).astype(int))
    anti = []
    arc = []
    for k in ks:
        d = forward_distance_field(mesh, g.boundary[k]).values[g.boundary]
        ccw = np.mod(cum - cum[k], total)
        along = np.minimum(ccw, total - ccw)
        anti.append(abs(d[(k + N // 2) % N] - np.pi))
        arc.append(float(np.max(np.abs(d - along))))
    a_err = float(max(anti))
    r_err = float(max(arc))
    return PuHypotheses(boundary_length=total, length_ok=abs(total - TWO_PI) <= tol,
                        antipodal_error=a_err, antipodal_ok=a_err <= tol,
                        arc_error=r_err, arc_ok=r_err <= tol, tolerance=tol)


# ---------------------------------------------------------------------------
# systole by the double cover


class Rp2Model:
    """Disc model of the projective plane: boundary point ``x`` is glued to
    ``-x``.  The metric must be reversible and agree at glued points."""

    def __init__(self, metric, tol=1e-9, samples=64):
        if not metric.reversible:
            raise MetricError("the projective-plane model needs a reversible metric")
        t = np.linspace(0, TWO_PI, samples, endpoint=False)
        x = np.stack([np.cos(t), np.sin(t)], axis=-1)
        dirs = np.stack([np.cos(3 * t + 0.4), np.sin(3 * t + 0.4)], axis=-1)
        a = metric.phi(x, dirs)
        b = metric.phi(-x, -dirs)
        mismatch = float(np.max(np.abs(a - b) / np.abs(a)))
        if mismatch > tol:
            raise MetricError(f"metric is not compatible with the antipodal gluing (mismatch {mismatch:.3g})")
        self.metric = metric

    def sigma(self, theta):
        return np.mod(np.asarray(theta, dtype=float) + np.pi, TWO_PI)


@dataclass
class SystoleResult:
    length: float
    source_ring: int           # ring index of the base point of the best loop
    sources: int
    rounds: int


def _cover_distance(mesh, k, max_rounds=4, tol=1e-12):
    """``d(x_A, x_B)`` in the double cover for the ring vertex ``x`` of index
    ``k``.  The sheets share the mesh; ring vertex ``j`` of one sheet is glued
    to ring vertex ``j + N/2`` of the other.  Distances are propagated
    across the seam until they stop changing."""
    g = mesh.geometry
    ring = g.boundary
    N = len(ring)
    shift = np.roll(np.arange(N), -N // 2)       # j -> j + N/2
    uA = forward_distance_field(mesh, ring[k]).values
    uB = None
    src = np.concatenate([[ring[k]], ring])
    for r in range(1, max_rounds + 1):
        newB = _solve(mesh, ring, uA[ring][shift], backward=False, method="stencil")
        if uB is not None and np.max(np.abs(newB - uB)) <= tol:
            return float(newB[ring[k]]), r
        uB = newB
        vals = np.concatenate([[0.0], uB[ring][shift]])
        uA = _solve(mesh, src, vals, backward=False, method="stencil")
    return float(uB[ring[k]]), max_rounds


def systole_rp2(model: Rp2Model, mesh, stride=4, full=False, max_rounds=4) -> SystoleResult:
    """Shortest noncontractible loop length.

    Every such loop crosses the seam, so it is enough to start at ring
    vertices; the loop through ring vertex ``x`` lifts to a path from ``x``
    on one sheet to ``x`` on the other.  Ring vertices ``x`` and ``-x`` give
    the same loops, so half of the ring is swept, every ``stride``-th vertex
    unless ``full``.
    """
    if mesh.metric is not model.metric:
        raise ValueError("mesh was built for a different metric")
    N = mesh.geometry.n_boundary
    step = 1 if full else max(1, int(stride))
    ks = np.arange(0, N // 2, step)
    best = (np.inf, -1)
    rounds = 0
    for k in ks:
        d, r = _cover_distance(mesh, int(k), max_rounds)
        rounds = max(rounds, r)
        if d < best[0]:
            best = (d, int(k))
    return SystoleResult(length=best[0], source_ring=best[1], sources=len(ks), rounds=rounds)


@dataclass
class PuReport:
    systole: float
    ht_area: float
    ratio: float               # area / ((2/pi) sys^2)
    tolerance: float
    passed: bool
    hypotheses: dict
    source_ring: int

    def to_dict(self):
        return asdict(self)


def pu_check(model: Rp2Model, mesh, m=512, tol=0.03, stride=4, full=False, hypotheses=True) -> PuReport:
    """Area of the disc model against ``(2/pi) * systole^2``; passes when the
    ratio is at least ``1 - tol``."""
    sysr = systole_rp2(model, mesh, stride=stride, full=full)
    area = ht_area(model.metric, mesh, m=m).value
    ratio = area / ((2.0 / np.pi) * sysr.length ** 2)
    if not (np.isfinite(ratio) and ratio > 0):
        raise ArithmeticError("non-finite Pu ratio")
    hyp = asdict(verify_pu_hypotheses(model.metric, mesh)) if hypotheses else {}
    return PuReport(systole=sysr.length, ht_area=area, ratio=float(ratio), tolerance=tol,
                    passed=bool(ratio >= 1 - tol), hypotheses=hyp, source_ring=sysr.source_ring)
