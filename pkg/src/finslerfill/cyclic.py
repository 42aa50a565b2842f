"""Cyclic maps, the functional I(f) and the circle-bracket calculus."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .distance import gradient_stack
from .metric import coball_area_batch

TWO_PI = 2.0 * np.pi
BRACKET_TOL = 1e-12


class CyclicError(ValueError):
    pass


# ---------------------------------------------------------------------------
# brackets


def _ccw(a, b):
    return np.mod(np.asarray(b, dtype=float) - np.asarray(a, dtype=float), TWO_PI)


def _gap(a, b):
    d = _ccw(a, b)
    return np.minimum(d, TWO_PI - d)


def bracket(a, b, c):
    """``+1`` if the boundary points at angles ``a, b, c`` are positively
    cyclically ordered, ``-1`` otherwise.  Broadcasts."""
    if np.any(_gap(a, b) < BRACKET_TOL) or np.any(_gap(b, c) < BRACKET_TOL) or np.any(_gap(a, c) < BRACKET_TOL):
        raise CyclicError("bracket of coincident points")
    out = np.where(_ccw(a, b) < _ccw(a, c), 1, -1)
    return int(out) if out.ndim == 0 else out


def _bracket_by_sorting(a, b, c):
    """Reference bracket: sort the three angles and check for a rotation of
    the sorted order."""
    pts = np.stack(np.broadcast_arrays(np.mod(a, TWO_PI), np.mod(b, TWO_PI), np.mod(c, TWO_PI)), axis=-1)
    order = np.argsort(pts, axis=-1)
    rotations = np.array([[0, 1, 2], [1, 2, 0], [2, 0, 1]])
    hit = (order[..., None, :] == rotations).all(axis=-1).any(axis=-1)
    return np.where(hit, 1, -1)


@dataclass
class BracketReport:
    trials: int
    failures: dict
    passed: bool

    @property
    def total_failures(self):
        return sum(self.failures.values())


def bracket_identity_suite(trials=100_000, seed=0) -> BracketReport:
    """Check the bracket identities on random distinct quadruples."""
    rng = np.random.default_rng(seed)
    a, b, c, d = rng.uniform(0, TWO_PI, (4, trials))
    pts = np.stack([a, b, c, d])
    sp = np.sort(pts, axis=0)
    gaps = np.diff(np.vstack([sp, sp[:1] + TWO_PI]), axis=0)
    keep = gaps.min(axis=0) > 1e-9
    a, b, c, d = a[keep], b[keep], c[keep], d[keep]

    abc = bracket(a, b, c)
    fails = {}
    fails["oracle"] = int(np.sum(abc != _bracket_by_sorting(a, b, c)))
    fails["square"] = int(np.sum(abc * abc != 1))
    skew = (bracket(b, c, a) != abc) | (bracket(c, a, b) != abc) | (bracket(b, a, c) != -abc) \
        | (bracket(a, c, b) != -abc) | (bracket(c, b, a) != -abc)
    fails["skew"] = int(np.sum(skew))
    abd, acd, bcd = bracket(a, b, d), bracket(a, c, d), bracket(b, c, d)
    fails["four_point"] = int(np.sum(abc * bcd * bracket(c, d, a) * bracket(d, a, b) != 1))
    fails["expand"] = int(np.sum(abc != abd * acd * bcd))
    fails["contract"] = int(np.sum(abc * acd * abd != bcd))
    return BracketReport(trials=int(keep.sum()), failures=fails, passed=not any(fails.values()))


def _separates(s1, s2, z1, z2):
    """Whether removing ``{s1, s2}`` from the circle puts ``z1`` and ``z2``
    in different components (plain arc membership, no brackets)."""
    arc = _ccw(s1, s2)
    in1 = 0 < _ccw(s1, z1) < arc
    in2 = 0 < _ccw(s1, z2) < arc
    return in1 != in2


@dataclass
class OrderMatchVerdict:
    hypotheses_hold: bool
    violated: list
    orders_match: bool | None


def order_match_oracle(p, q, tol=1e-12) -> OrderMatchVerdict:
    """For two triples of boundary angles, test the non-separation
    hypotheses and compare the cyclic orders of the triples.

    Hypotheses: ``q_i != p_i``, and for ``i != j`` the pair ``{p_i, q_j}``
    does not separate ``p_j`` from ``q_i``.
    """
    p = [float(v) for v in p]
    q = [float(v) for v in q]
    if len(p) != 3 or len(q) != 3:
        raise CyclicError("order_match_oracle expects two triples")
    violated = []
    for i in range(3):
        if _gap(p[i], q[i]) < tol:
            violated.append(("coincide", i))
    for i, j in itertools.permutations(range(3), 2):
        pts = [p[i], q[j], p[j], q[i]]
        if any(_gap(s, t) < tol for s, t in itertools.combinations(pts, 2)):
            continue
        if _separates(p[i], q[j], p[j], q[i]):
            violated.append(("separates", i, j))
    match = None
    if min(_gap(*t) for t in itertools.combinations(p, 2)) > tol and \
            min(_gap(*t) for t in itertools.combinations(q, 2)) > tol:
        match = bracket(*p) == bracket(*q)
    return OrderMatchVerdict(hypotheses_hold=not violated, violated=violated, orders_match=match)


@dataclass
class EnumerationReport:
    arrangements: int
    satisfying: int
    counterexamples: list


def enumerate_six_points() -> EnumerationReport:
    """All cyclic arrangements of ``p1, p2, p3, q1, q2, q3`` at six distinct
    positions; every arrangement satisfying the hypotheses must have matching
    orders."""
    labels = ["p1", "p2", "p3", "q1", "q2", "q3"]
    seen = 0
    ok = 0
    bad = []
    # fix p1 at position 0 to enumerate each cyclic arrangement once
    for perm in itertools.permutations(range(1, 6)):
        pos = (0,) + perm
        ang = [TWO_PI * k / 6 for k in pos]
        v = order_match_oracle(ang[:3], ang[3:])
        seen += 1
        if v.hypotheses_hold:
            ok += 1
            if not v.orders_match:
                bad.append({lab: int(k) for lab, k in zip(labels, pos)})
    return EnumerationReport(arrangements=seen, satisfying=ok, counterexamples=bad)


# ---------------------------------------------------------------------------
# cyclic maps


@dataclass
class CyclicMapData:
    """``n`` scalar fields on a mesh, indexed in cyclic order."""

    fields: np.ndarray              # (n, V)
    mesh: object
    labels: np.ndarray | None = None  # e.g. boundary angles of the sources
    provenance: str = ""
    _grads: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        self.fields = np.atleast_2d(np.asarray(self.fields, dtype=float))
        if len(self.fields) < 2:
            raise CyclicError("a cyclic map needs at least two fields")
        if not np.all(np.isfinite(self.fields)):
            raise CyclicError("fields must be finite")

    @property
    def n(self):
        return len(self.fields)

    @property
    def traces(self):
        """Boundary traces ``(n, N)`` along the positively oriented loop."""
        return self.fields[:, self.mesh.geometry.boundary]

    def gradients(self, residual_tol=0.1, norm_tol=0.05):
        if self._grads is None or self._grads[0] != (residual_tol, norm_tol):
            g, rel = gradient_stack(self.fields, self.mesh, residual_tol, norm_tol)
            self._grads = ((residual_tol, norm_tol), g, rel)
        return self._grads[1], self._grads[2]

    def shifted(self, k=1):
        return CyclicMapData(np.roll(self.fields, -k, axis=0), self.mesh,
                             None if self.labels is None else np.roll(self.labels, -k), self.provenance)


@dataclass
class CyclicReport:
    checked_vertices: int
    norm_violations: int
    order_violations: int
    violation_fraction: float
    triple_samples: int
    triple_violation_fraction: float
    passed: bool


def _winding(ang, mask, tol):
    """Total positive turning of the masked angle sequences (rows), merging
    steps that go backwards by less than ``tol``."""
    n = ang.shape[1]
    total = np.zeros(len(ang))
    first = np.full(len(ang), np.nan)
    prev = np.full(len(ang), np.nan)
    for i in range(n):
        a = ang[:, i]
        m = mask[:, i]
        has = m & ~np.isnan(prev)
        step = _ccw(prev, a)
        step = np.where(step > TWO_PI - tol, 0.0, step)
        total = np.where(has, total + np.where(np.isnan(step), 0.0, step), total)
        keep = has & (step > 0)
        prev = np.where(m & np.isnan(prev), a, np.where(keep, a, prev))
        first = np.where(m & np.isnan(first), a, first)
    close = _ccw(prev, first)
    close = np.where(close > TWO_PI - tol, 0.0, close)
    return total + np.where(np.isnan(close), 0.0, close)


def check_cyclic(metric, data: CyclicMapData, angle_tol=0.02, norm_tol=0.05, samples=20_000, seed=0,
                 threshold=0.01) -> CyclicReport:
    """Check the cyclic-map conditions at every reliable vertex.

    (1) the dual norm of each reliable gradient is ``1`` within ``norm_tol``;
    (2) the reliable gradients, taken in index order and with near-equal
    neighbours (``angle_tol``) merged, turn around the cosphere exactly once,
    which is the same as every increasing triple being positively ordered.

    A random sample of vertex/triple pairs is also checked directly.
    The map passes when fewer than ``threshold`` of the checked vertices fail
    (and at least one vertex was checked).
    """
    grads, rel = data.gradients(norm_tol=norm_tol)
    pts = data.mesh.geometry.points
    checked = np.flatnonzero(rel.any(axis=0))
    g = grads[:, checked]               # (n, C, 2)
    r = rel[:, checked]
    nrm = metric.dual(pts[checked], g)
    norm_bad = (np.abs(nrm - 1.0) > norm_tol) & r
    ang = np.arctan2(g[..., 1], g[..., 0]).T   # (C, n)
    order_bad = np.zeros(len(checked), dtype=bool)
    if data.n >= 3:
        wind = _winding(ang, r.T, angle_tol)
        order_bad = wind > TWO_PI + 1e-6
    bad = norm_bad.any(axis=0) | order_bad

    # direct triple sample
    trip_bad = 0
    trip_n = 0
    if data.n >= 3 and len(checked):
        rng = np.random.default_rng(seed)
        v = rng.integers(0, len(checked), samples)
        ijk = np.sort(np.stack([rng.choice(data.n, 3, replace=False) for _ in range(samples)]), axis=1)
        ok = r[ijk[:, 0], v] & r[ijk[:, 1], v] & r[ijk[:, 2], v]
        a = ang[v, ijk[:, 0]]
        b = ang[v, ijk[:, 1]]
        c = ang[v, ijk[:, 2]]
        distinct = (_gap(a, b) > angle_tol) & (_gap(b, c) > angle_tol) & (_gap(a, c) > angle_tol)
        use = ok & distinct
        trip_n = int(use.sum())
        if trip_n:
            trip_bad = int(np.sum(bracket(a[use], b[use], c[use]) < 0))
    frac = float(bad.mean()) if len(checked) else 0.0
    return CyclicReport(
        checked_vertices=len(checked),
        norm_violations=int(norm_bad.any(axis=0).sum()),
        order_violations=int(order_bad.sum()),
        violation_fraction=frac,
        triple_samples=trip_n,
        triple_violation_fraction=trip_bad / trip_n if trip_n else 0.0,
        passed=len(checked) > 0 and frac < threshold,
    )


# ---------------------------------------------------------------------------
# I(f)


def convex_hull_area(points):
    """Area of the convex hull of a list of planar points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 3:
        return 0.0
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = np.ascontiguousarray(pts[order][None, :, :])
    return float(_backend.hull_areas(pts, np.ones((1, pts.shape[1]), dtype=np.uint8))[0])


def hull_areas(covectors, mask=None):
    """Convex-hull area per row of ``covectors`` ``(V, n, 2)``, over the
    entries selected by ``mask`` ``(V, n)``."""
    c = np.asarray(covectors, dtype=float)
    V, n = c.shape[:2]
    m = np.ones((V, n), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    order = np.lexsort((c[..., 1], c[..., 0]), axis=-1)
    c = np.take_along_axis(c, order[..., None], axis=1)
    m = np.take_along_axis(m, order, axis=1)
    return _backend.hull_areas(np.ascontiguousarray(c), np.ascontiguousarray(m.astype(np.uint8)))


def I_boundary(traces):
    """``(1/2pi) * sum_i`` of the signed area enclosed by the closed loop
    ``(f_i, f_{i+1})`` along the boundary samples, indices mod ``n``.

    ``traces`` has shape ``(n, N)`` with the samples in positive order around
    the boundary; the loop is closed from the last sample back to the first.
    """
    f = np.atleast_2d(np.asarray(traces, dtype=float))
    if f.shape[1] < 2:
        raise CyclicError("boundary loop needs at least two samples")
    n = len(f)
    if n < 2:
        raise CyclicError("need at least two traces")
    g = np.roll(f, -1, axis=0)             # f_{i+1}
    x, y = f, g
    area = 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y)
    return float(area / TWO_PI)


@dataclass
class InteriorResult:
    value: float
    excluded_error: float      # bound on the hull area lost at partly excluded vertices
    excluded_fraction: float   # area fraction of vertices with any unreliable field
    dropped_fraction: float    # area fraction with no reliable field at all


def _coball_areas(mesh, m):
    key = ("coball", m)
    if key not in mesh.cache:
        mesh.cache[key] = coball_area_batch(mesh.metric, mesh.geometry.points, m)
    return mesh.cache[key]


def _gap_bounds(metric, pts, cov, rel, samples=24):
    """Upper bound on the hull area lost by leaving out unreliable covectors.

    ``cov`` ``(P, n, 2)``, ``rel`` ``(P, n)``.  If the reliable covectors are
    in positive cyclic order, each missing one lies on the cosphere arc
    between its reliable neighbours, so the full hull is contained in the
    hull of the reliable covectors and those arcs.  The arcs are sampled with
    radii widened by ``1 / cos(step / 2)``.  Rows where this does not apply
    (fewer than two reliable entries, or no single positive turn) get
    ``nan``.
    """
    P, n = rel.shape
    ang = np.arctan2(cov[..., 1], cov[..., 0])
    idx = np.where(rel, np.arange(n)[None, :], 2 * n)
    idx2 = np.concatenate([idx, np.where(rel, np.arange(n, 2 * n)[None, :], 2 * n)], axis=1)
    # next reliable index after each i (cyclically, in [i+1, i+n])
    nxt = np.minimum.accumulate(idx2[:, ::-1], axis=1)[:, ::-1]
    nxt = np.concatenate([nxt[:, 1:], np.full((P, 1), 2 * n)], axis=1)[:, :n]
    rows, cols = np.nonzero(rel)
    j = nxt[rows, cols]
    ok_row = np.ones(P, dtype=bool)
    ok_row[rows[j >= cols + n]] = False
    jm = np.mod(j, n)
    arc = _ccw(ang[rows, cols], ang[rows, jm])
    wind = np.zeros(P)
    np.add.at(wind, rows, arc)
    ok_row &= np.abs(wind - TWO_PI) < 1e-6
    gapped = (j > cols + 1) & ok_row[rows]
    out = np.full(P, np.nan)
    if not ok_row.any():
        return out
    r, a0, da = rows[gapped], ang[rows, cols][gapped], arc[gapped]
    slot = np.zeros(len(r), dtype=np.int64)
    if len(r):
        order = np.argsort(r, kind="stable")
        first = np.searchsorted(r[order], r[order])
        slot[order] = np.arange(len(r)) - first
    G = int(slot.max()) + 1 if len(r) else 0
    tot = n + G * samples
    P_all = np.zeros((P, tot, 2))
    M = np.zeros((P, tot), dtype=bool)
    P_all[:, :n] = cov
    M[:, :n] = rel
    if len(r):
        t = a0[:, None] + da[:, None] * (np.arange(samples) + 0.5)[None, :] / samples
        e = np.stack([np.cos(t), np.sin(t)], axis=-1)
        rad = 1.0 / metric.dual(np.broadcast_to(pts[r][:, None, :], e.shape), e)
        rad = rad / np.cos(0.5 * da / samples)[:, None]
        cols_s = n + slot[:, None] * samples + np.arange(samples)[None, :]
        P_all[r[:, None], cols_s] = rad[..., None] * e
        M[r[:, None], cols_s] = True
    full = hull_areas(P_all, M)
    part = hull_areas(cov, rel)
    out[ok_row] = np.maximum(full - part, 0.0)[ok_row]
    return out


def I_interior(metric, data: CyclicMapData, mesh=None, m=256, max_excluded=0.2) -> InteriorResult:
    """``(1/pi) * sum over vertices of |conv{d_x f_i}| * cell area``.

    Unreliable gradients are left out of the hull at their vertex.  The area
    they could have added is bounded through the cosphere arcs between
    reliable neighbours (or by ``|B*_x|`` minus the partial hull where the
    reliable covectors are not cyclically ordered) and returned as ``excluded_error``.
    """
    mesh = data.mesh if mesh is None else mesh
    if data.n == 2:
        return InteriorResult(0.0, 0.0, 0.0, 0.0)
    grads, rel = data.gradients()
    geom = mesh.geometry
    A = geom.vertex_area
    cov = np.transpose(grads, (1, 0, 2))
    hull = hull_areas(cov, rel.T)
    value = float(np.dot(A, hull) / np.pi)
    partial = ~rel.all(axis=0)
    none = ~rel.any(axis=0)
    total = float(A.sum())
    if np.sum(A[none]) > max_excluded * total:
        raise CyclicError(f"too few reliable cells ({np.sum(A[none]) / total:.1%} excluded)")
    lost = np.zeros(len(A))
    idx = np.flatnonzero(partial)
    if len(idx):
        lost[idx] = _gap_bounds(metric, geom.points[idx], cov[idx], rel.T[idx])
        crude = idx[np.isnan(lost[idx])]
        if len(crude):
            cb = coball_area_batch(metric, geom.points[crude], m)
            # inscribed polygons are slightly small; widen by the O(m^-2) deficit
            cb = cb * (1.0 + (TWO_PI / m) ** 2)
            lost[crude] = np.maximum(cb - hull[crude], 0.0)
    err = float(np.dot(A, lost) / np.pi)
    return InteriorResult(value=value, excluded_error=err,
                          excluded_fraction=float(A[partial].sum() / total),
                          dropped_fraction=float(A[none].sum() / total))
