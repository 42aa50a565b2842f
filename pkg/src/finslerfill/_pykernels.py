"""Reference kernels without compiled code of our own.

``solve_field`` reaches the same fixed point as the compiled solver by
alternating a graph Dijkstra seeded with the current values and a
vectorised relaxation over the stencil triangles.  ``hull_areas`` runs the
monotone chain row by row.
"""
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra


def _graph_pass(nbr_ptr, nbr_idx, nbr_rev, elen, u, fixed):
    V = len(nbr_ptr) - 1
    rows = np.repeat(np.arange(V), np.diff(nbr_ptr))
    # edge y -> x with y = nbr_idx[e], x = rows[e]; weight elen[e]
    finite = np.isfinite(u)
    seeds = np.flatnonzero(finite)
    base = u[seeds].min()
    # super-source V with edges of weight u(seed) - base to every seeded vertex
    w_src = u[seeds] - base
    into_free = ~fixed[rows]
    src = np.concatenate([nbr_idx[into_free], np.full(len(seeds), V)])
    dst = np.concatenate([rows[into_free], seeds])
    w = np.concatenate([elen[into_free], w_src])
    # csgraph treats explicit zeros as missing edges
    w = np.where(w == 0, 1e-300, w)
    g = csr_matrix((w, (src, dst)), shape=(V + 1, V + 1))
    d = dijkstra(g, directed=True, indices=V)[:V] + base
    return np.minimum(u, d)


def _frozen_norm(w, frozen):
    c, a00, a01, a10, a11, p, b0, b1 = frozen
    zx = np.abs(a00 * w[..., 0] + a01 * w[..., 1])
    zy = np.abs(a10 * w[..., 0] + a11 * w[..., 1])
    if p == 2.0:
        n = np.sqrt(zx * zx + zy * zy)
    else:
        m = np.maximum(zx, zy)
        safe = np.where(m > 0, m, 1.0)
        n = np.where(m > 0, safe * ((zx / safe) ** p + (zy / safe) ** p) ** (1.0 / p), 0.0)
    return c * n + b0 * w[..., 0] + b1 * w[..., 1]


def _pair_pass(u, pair_a, pair_b, pair_owner, plen, fixed, points=None, origin=None, frozen=None):
    K = plen.shape[1] - 1
    t = np.arange(K + 1) / K
    ua = u[pair_a]
    ub = u[pair_b]
    ok = np.flatnonzero(np.isfinite(ua) & np.isfinite(ub) & ~fixed[pair_owner])
    ua, ub = ua[ok, None], ub[ok, None]
    vals = (1 - t)[None, :] * ua + t[None, :] * ub
    if points is not None and origin is not None:
        # interpolate u / N(y - origin) instead of u
        pa = points[pair_a[ok]] - origin
        pb = points[pair_b[ok]] - origin
        ra = _frozen_norm(pa, frozen)[:, None]
        rb = _frozen_norm(pb, frozen)[:, None]
        fac = ((ra >= 1e-14) & (rb >= 1e-14))[:, 0]
        y = (1 - t)[None, :, None] * pa[fac, None, :] + t[None, :, None] * pb[fac, None, :]
        ry = _frozen_norm(y, frozen)
        vals[fac] = ((1 - t)[None, :] * ua[fac] / ra[fac] + t[None, :] * ub[fac] / rb[fac]) * ry
    vals += plen[ok]
    kb = np.argmin(vals, axis=1)
    cand = vals[np.arange(len(kb)), kb]
    # parabola through three samples around the best one; its vertex is
    # clamped to the two intervals adjacent to the best sample
    kc = np.clip(kb, 1, K - 1)
    i = np.arange(len(kb))
    gm, g0, gp = vals[i, kc - 1], vals[i, kc], vals[i, kc + 1]
    curv = gp - 2 * g0 + gm
    pos = curv > 0
    sv = -(gp - gm) / np.where(pos, 2 * curv, 1.0)
    sv = np.clip(sv, np.maximum(kb - kc - 1.0, -1.0), np.minimum(kb - kc + 1.0, 1.0))
    par = g0 + 0.5 * (gp - gm) * sv + 0.5 * curv * sv * sv
    cand = np.where(pos, np.minimum(cand, par), cand)
    new = u.copy()
    np.minimum.at(new, pair_owner[ok], cand)
    return new


def solve_field(nbr_ptr, nbr_idx, nbr_rev, elen, pair_ptr, pair_a, pair_b, pair_owner, plen,
                pend_ptr, pend_ids, sources, source_vals, use_pairs=True, tol=1e-12, max_sweeps=200,
                points=None, origin=None, frozen=None):
    V = len(nbr_ptr) - 1
    if frozen is None:
        frozen = (1.0, 1.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0)
    frozen = tuple(float(v) for v in frozen)
    u = np.full(V, np.inf)
    fixed = np.zeros(V, dtype=bool)
    for s, val in zip(sources, source_vals):
        u[s] = min(u[s], val)
        fixed[s] = True
    if origin is not None:
        origin = np.asarray(origin, dtype=float)
    u = _graph_pass(nbr_ptr, nbr_idx, nbr_rev, elen, u, fixed)
    sweeps = 0
    if not use_pairs:
        return u, sweeps
    while sweeps < max_sweeps:
        sweeps += 1
        new = _pair_pass(u, pair_a, pair_b, pair_owner, plen, fixed, points, origin, frozen)
        new = _graph_pass(nbr_ptr, nbr_idx, nbr_rev, elen, new, fixed)
        change = np.max(np.where(np.isfinite(u), u - new, 0.0))
        u = new
        if change <= tol:
            break
    return u, sweeps


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def hull_area(points):
    """Convex-hull area of a lexicographically sorted point list."""
    pts = [tuple(p) for p in points]
    if len(pts) < 3:
        return 0.0
    lower = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        return 0.0
    area = 0.0
    for i in range(len(hull)):
        x0, y0 = hull[i]
        x1, y1 = hull[(i + 1) % len(hull)]
        area += x0 * y1 - x1 * y0
    return 0.5 * abs(area)


def hull_areas(pts, mask):
    pts = np.asarray(pts)
    mask = np.asarray(mask, dtype=bool)
    return np.array([hull_area(pts[v][mask[v]]) for v in range(len(pts))])
