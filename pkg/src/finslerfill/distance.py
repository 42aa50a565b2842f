"""Asymmetric distance fields, boundary distance matrices and gradients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .metric import check_in_disc

DIRECTIONS = ("from-source", "to-target")


@dataclass
class DistanceField:
    """Values of ``d(source, .)`` (``from-source``) or ``d(., target)``
    (``to-target``) at the mesh vertices."""

    values: np.ndarray
    direction: str
    anchor: int
    method: str
    error: float

    def boundary_trace(self, mesh):
        return self.values[mesh.boundary]


@dataclass
class CovectorField:
    covectors: np.ndarray   # (V, 2)
    reliable: np.ndarray    # (V,) bool
    residual: np.ndarray    # (V,) rms of the affine fit


def metrication_tolerance(mesh):
    """Default distance tolerance ``2h/R``."""
    return 2.0 * mesh.h / mesh.R


def _solve(mesh, sources, values, backward, method):
    """Run the field solver.  A single zero-valued source uses the update
    factored by the norm frozen at that point."""
    g = mesh.geometry
    elen = mesh.len_out if backward else mesh.len_in
    plen = mesh.pair_out if backward else mesh.pair_in
    use_pairs = method == "stencil"
    if method not in ("stencil", "graph"):
        raise ValueError(f"unknown distance method {method!r}")
    sources = np.asarray(sources, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    extra = {}
    if len(sources) == 1 and values[0] == 0.0:
        fz = mesh.metric.frozen_norm(g.points[sources[0]])
        if fz is not None:
            c, A, p, beta = fz
            # the backward field grows like phi_s(s - y)
            beta = -np.asarray(beta) if backward else np.asarray(beta)
            A = -np.asarray(A) if backward else np.asarray(A)
            extra = dict(points=g.points, origin=g.points[sources[0]],
                         frozen=(c, A[0, 0], A[0, 1], A[1, 0], A[1, 1], p, beta[0], beta[1]))
    u, _ = _backend.solve_field(
        g.nbr_ptr, g.nbr_idx, g.nbr_rev, elen, g.pair_ptr, g.pair_a, g.pair_b, g.pair_owner, plen,
        g.pend_ptr, g.pend_ids, sources, values, use_pairs=use_pairs, **extra)
    if not np.all(np.isfinite(u)):
        raise RuntimeError("disconnected vertex in the distance graph")
    return u


def forward_distance_field(mesh, source, method="stencil") -> DistanceField:
    """``d_phi(source, x)`` for every vertex ``x``.

    ``method="graph"`` is plain directed Dijkstra over the stencil edges;
    ``"stencil"`` adds interpolated candidates across stencil triangles.
    """
    source = int(source)
    key = ("fwd", source, method)
    if key not in mesh.cache:
        u = _solve(mesh, [source], [0.0], backward=False, method=method)
        mesh.cache[key] = DistanceField(u, "from-source", source, method, metrication_tolerance(mesh))
    return mesh.cache[key]


def backward_distance_field(mesh, target, method="stencil") -> DistanceField:
    """``d_phi(x, target)`` for every vertex ``x`` (reversed graph)."""
    target = int(target)
    key = ("bwd", target, method)
    if key not in mesh.cache:
        u = _solve(mesh, [target], [0.0], backward=True, method=method)
        mesh.cache[key] = DistanceField(u, "to-target", target, method, metrication_tolerance(mesh))
    return mesh.cache[key]


def vertex_for_point(mesh, x):
    x = check_in_disc(x)
    return mesh.geometry.nearest_vertex(x)


def boundary_arclength(metric, angles, sub=16):
    """Cumulative ``phi``-length of the positively oriented unit circle at the
    given increasing angles, starting from the first angle.  Also returns the
    total length of the circle."""
    angles = np.asarray(angles, dtype=float)
    ext = np.append(angles, angles[0] + 2 * np.pi)
    nodes, weights = np.polynomial.legendre.leggauss(sub)
    a, b = ext[:-1], ext[1:]
    t = 0.5 * (b - a)[:, None] * (nodes + 1)[None, :] + a[:, None]
    pts = np.stack([np.cos(t), np.sin(t)], axis=-1)
    vel = np.stack([-np.sin(t), np.cos(t)], axis=-1)
    seg = 0.5 * (b - a) * np.sum(weights * metric.phi(pts, vel), axis=-1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    return cum[:-1], float(cum[-1])


def boundary_samples(mesh, n, start=0):
    """Indices (into ``mesh.boundary``) of ``n`` ring vertices spaced by equal
    ``phi``-arclength, in positive cyclic order starting at ring vertex ``start``."""
    if n < 1:
        raise ValueError("need at least one boundary sample")
    key = ("ring_s",)
    if key not in mesh.cache:
        ang = mesh.geometry.boundary_angles
        mesh.cache[key] = boundary_arclength(mesh.metric, ang)
    s, total = mesh.cache[key]
    s = np.mod(s - s[start], total)
    targets = total * np.arange(n) / n
    nb = len(s)
    order = np.argsort(s)
    ss = s[order]
    pos = np.searchsorted(ss, targets)
    lo = np.clip(pos - 1, 0, nb - 1)
    hi = np.clip(pos, 0, nb - 1)
    pick = np.where(np.abs(ss[hi] - targets) < np.abs(targets - ss[lo]), hi, lo)
    picks = order[pick]
    if len(np.unique(picks)) != n:
        raise ValueError(f"boundary ring too coarse for {n} distinct samples")
    return picks


def boundary_distance_matrix(mesh, n, method="stencil"):
    """``bd[i, j] = d_phi(p_i, p_j)`` for ``n`` boundary samples at equal
    ``phi``-arclength.  Returns ``(bd, ring_indices)``."""
    if n < 3:
        raise ValueError("boundary distance matrix needs n >= 3")
    ring = boundary_samples(mesh, n)
    verts = mesh.boundary[ring]
    bd = np.empty((n, n))
    for i, v in enumerate(verts):
        bd[i] = forward_distance_field(mesh, v, method).values[verts]
    np.fill_diagonal(bd, 0.0)
    return bd, ring


def triangle_violation(bd):
    """Largest ``d(x,z) - d(x,y) - d(y,z)`` over all triples."""
    n = len(bd)
    worst = -np.inf
    for j in range(n):
        worst = max(worst, float(np.max(bd - bd[:, j:j + 1] - bd[j:j + 1, :])))
    return worst


# ---------------------------------------------------------------------------
# gradients


def _fit_operators(geom):
    """Per-vertex least-squares weights for ``f(y) - f(x) ~ c + g.(y - x)``."""
    cache = geom.__dict__.setdefault("_fit_cache", {})
    if "ops" not in cache:
        ptr, idx = geom.fit_ptr, geom.fit_idx
        rows = np.repeat(np.arange(geom.n_vertices), np.diff(ptr))
        d = (geom.points[idx] - geom.points[rows]) / geom.h
        A = np.stack([np.ones(len(idx)), d[:, 0], d[:, 1]], axis=-1)
        M = np.zeros((geom.n_vertices, 3, 3))
        np.add.at(M, rows, A[:, :, None] * A[:, None, :])
        W = np.einsum("eij,ej->ei", np.linalg.inv(M)[rows], A)
        cache["ops"] = (rows, d, W)
    return cache["ops"]


def fit_gradients(geom, values, chunk=8):
    """Affine least-squares fits of one ``(V,)`` or several ``(n, V)`` fields.

    Returns gradients ``(..., V, 2)`` and rms residuals ``(..., V)``.
    """
    values = np.asarray(values, dtype=float)
    single = values.ndim == 1
    F = values[None, :] if single else values
    rows, d, W = _fit_operators(geom)
    ptr = geom.fit_ptr[:-1]
    counts = np.diff(geom.fit_ptr)
    grads = np.empty(F.shape + (2,))
    res = np.empty(F.shape)
    for s in range(0, len(F), chunk):
        fe = F[s:s + chunk][:, geom.fit_idx] - F[s:s + chunk][:, rows]
        coef = [np.add.reduceat(fe * W[:, k], ptr, axis=1) for k in range(3)]
        r = fe - coef[0][:, rows] - coef[1][:, rows] * d[:, 0] - coef[2][:, rows] * d[:, 1]
        res[s:s + chunk] = np.sqrt(np.add.reduceat(r * r, ptr, axis=1) / counts)
        grads[s:s + chunk, :, 0] = coef[1] / geom.h
        grads[s:s + chunk, :, 1] = coef[2] / geom.h
    if single:
        return grads[0], res[0]
    return grads, res


def reliability(mesh, grads, res, residual_tol=0.1, norm_tol=0.05):
    """Boolean mask of trustworthy gradients: small affine-fit residual
    (``< residual_tol * h * |grad|``) and dual norm at most ``1 + norm_tol``.
    Boundary vertices are never reliable."""
    geom = mesh.geometry
    gnorm = np.hypot(grads[..., 0], grads[..., 1])
    with np.errstate(invalid="ignore", divide="ignore"):
        dual = mesh.metric.dual(geom.points, grads)
    ok = (res < residual_tol * geom.h * np.maximum(gnorm, 1e-12)) & (dual <= 1.0 + norm_tol)
    return ok & ~geom.is_boundary


def gradient_field(field, mesh, residual_tol=0.1, norm_tol=0.05) -> CovectorField:
    """Least-squares affine fit of ``field`` over each vertex neighbourhood.

    A vertex is reliable when it is interior, the rms residual is below
    ``residual_tol * h * |grad|`` (cut-locus proxy) and the dual norm of the
    gradient does not exceed ``1 + norm_tol``.
    """
    values = field.values if isinstance(field, DistanceField) else np.asarray(field, dtype=float)
    grad, res = fit_gradients(mesh.geometry, values)
    return CovectorField(covectors=grad, reliable=reliability(mesh, grad, res, residual_tol, norm_tol),
                         residual=res)


def gradient_stack(values, mesh, residual_tol=0.1, norm_tol=0.05):
    """Gradients of several fields at once: ``(n, V, 2)`` covectors and an
    ``(n, V)`` reliability mask."""
    grads, res = fit_gradients(mesh.geometry, np.asarray(values, dtype=float))
    return grads, reliability(mesh, grads, res, residual_tol, norm_tol)


@dataclass
class LipschitzReport:
    max_violation: float     # max over edges of f(b) - f(a) - l(a->b)
    max_rate: float          # the same divided by the edge's Euclidean length
    n_violations: int
    passed: bool


def check_forward_lipschitz(field, mesh, tol=1e-9) -> LipschitzReport:
    """Check ``f(b) - f(a) <= l(a -> b) + tol`` on every directed edge."""
    values = field.values if isinstance(field, DistanceField) else np.asarray(field, dtype=float)
    g = mesh.geometry
    rows = g.edge_rows()
    a = g.nbr_idx
    slack = values[rows] - values[a] - mesh.len_in
    elen = np.hypot(*(g.points[rows] - g.points[a]).T)
    worst = float(np.max(slack))
    return LipschitzReport(
        max_violation=worst,
        max_rate=float(np.max(slack / elen)),
        n_violations=int(np.sum(slack > tol)),
        passed=worst <= tol,
    )
