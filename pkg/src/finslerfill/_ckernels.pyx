# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: stencil field solver and batched convex-hull areas."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, isinf, fabs, sqrt, pow
from libc.stdlib cimport malloc, realloc, free

cnp.import_array()

ctypedef cnp.int64_t i64


cdef struct Heap:
    double *key
    i64 *node
    Py_ssize_t size
    Py_ssize_t cap


cdef inline bint _before(double ka, i64 na, double kb, i64 nb) nogil:
    return ka < kb or (ka == kb and na < nb)


cdef int _heap_push(Heap *h, double k, i64 n) noexcept nogil:
    cdef Py_ssize_t i, parent
    cdef double *nk
    cdef i64 *nn
    if h.size == h.cap:
        h.cap = 2 * h.cap + 16
        nk = <double *> realloc(h.key, h.cap * sizeof(double))
        nn = <i64 *> realloc(h.node, h.cap * sizeof(i64))
        if nk == NULL or nn == NULL:
            return -1
        h.key = nk
        h.node = nn
    i = h.size
    h.size += 1
    while i > 0:
        parent = (i - 1) >> 1
        if _before(k, n, h.key[parent], h.node[parent]):
            h.key[i] = h.key[parent]
            h.node[i] = h.node[parent]
            i = parent
        else:
            break
    h.key[i] = k
    h.node[i] = n
    return 0


cdef void _heap_pop(Heap *h, double *k, i64 *n) noexcept nogil:
    cdef Py_ssize_t i = 0, child
    cdef double lk
    cdef i64 ln
    k[0] = h.key[0]
    n[0] = h.node[0]
    h.size -= 1
    if h.size == 0:
        return
    lk = h.key[h.size]
    ln = h.node[h.size]
    while True:
        child = 2 * i + 1
        if child >= h.size:
            break
        if child + 1 < h.size and _before(h.key[child + 1], h.node[child + 1], h.key[child], h.node[child]):
            child += 1
        if _before(h.key[child], h.node[child], lk, ln):
            h.key[i] = h.key[child]
            h.node[i] = h.node[child]
            i = child
        else:
            break
    h.key[i] = lk
    h.node[i] = ln


cdef struct Frozen:
    # phi(w) = c ||A w||_p + beta.w, the norm frozen at the source
    double c, a00, a01, a10, a11, p, b0, b1, sx, sy


cdef inline double _fnorm(double wx, double wy, Frozen *fr) noexcept nogil:
    cdef double zx = fr.a00 * wx + fr.a01 * wy
    cdef double zy = fr.a10 * wx + fr.a11 * wy
    cdef double n
    if fr.p == 2.0:
        n = sqrt(zx * zx + zy * zy)
    else:
        zx = fabs(zx)
        zy = fabs(zy)
        n = zx if zx > zy else zy
        if n > 0:
            n = n * pow(pow(zx / n, fr.p) + pow(zy / n, fr.p), 1.0 / fr.p)
    return fr.c * n + fr.b0 * wx + fr.b1 * wy


cdef inline double _cand(double ua, double ub, double ra, double rb, double ax, double ay,
                         double bx, double by, Frozen *fr, double t, double pl,
                         bint factored) noexcept nogil:
    if not factored:
        return (1.0 - t) * ua + t * ub + pl
    # interpolate u / phi_s(y - s) and scale back
    return ((1.0 - t) * ua / ra + t * ub / rb) * _fnorm((1.0 - t) * ax + t * bx - fr.sx,
                                                       (1.0 - t) * ay + t * by - fr.sy, fr) + pl


cdef inline double _pair_min(i64 ia, i64 ib, const double[::1] u, const double[:, ::1] plen, i64 p,
                             int K, const double[:, ::1] pts, Frozen *fr,
                             bint factored) noexcept nogil:
    # discrete minimum over the tabulated points, then a parabola through the
    # best interior point and its two neighbours
    cdef double best = INFINITY, c, gm, g0, gp, curv, sv, lo, hi
    cdef double ua = u[ia], ub = u[ib], ra = 0.0, rb = 0.0
    cdef double ax = 0.0, ay = 0.0, bx = 0.0, by = 0.0
    cdef int k, kb = 0, kc
    if factored:
        ax = pts[ia, 0]
        ay = pts[ia, 1]
        bx = pts[ib, 0]
        by = pts[ib, 1]
        ra = _fnorm(ax - fr.sx, ay - fr.sy, fr)
        rb = _fnorm(bx - fr.sx, by - fr.sy, fr)
        if ra < 1e-14 or rb < 1e-14:
            factored = False
    for k in range(K + 1):
        c = _cand(ua, ub, ra, rb, ax, ay, bx, by, fr, (<double> k) / K, plen[p, k], factored)
        if c < best:
            best = c
            kb = k
    # parabola through three samples around the best one; its vertex is
    # clamped to the two intervals adjacent to the best sample
    kc = 1 if kb < 1 else (K - 1 if kb > K - 1 else kb)
    gm = _cand(ua, ub, ra, rb, ax, ay, bx, by, fr, (<double> (kc - 1)) / K, plen[p, kc - 1], factored)
    g0 = _cand(ua, ub, ra, rb, ax, ay, bx, by, fr, (<double> kc) / K, plen[p, kc], factored)
    gp = _cand(ua, ub, ra, rb, ax, ay, bx, by, fr, (<double> (kc + 1)) / K, plen[p, kc + 1], factored)
    curv = gp - 2.0 * g0 + gm
    if curv > 0:
        sv = -(gp - gm) / (2.0 * curv)
        lo = kb - kc - 1.0
        hi = kb - kc + 1.0
        if lo < -1.0:
            lo = -1.0
        if hi > 1.0:
            hi = 1.0
        if sv < lo:
            sv = lo
        elif sv > hi:
            sv = hi
        c = g0 + 0.5 * (gp - gm) * sv + 0.5 * curv * sv * sv
        if c < best:
            best = c
    return best


cdef inline double _local_update(i64 x, const double[::1] u,
                                 const i64[::1] nbr_ptr, const i64[::1] nbr_idx, const double[::1] elen,
                                 const i64[::1] pair_ptr, const i64[::1] pair_a, const i64[::1] pair_b,
                                 const double[:, ::1] plen, int K, const double[:, ::1] pts,
                                 Frozen *fr, bint factored) noexcept nogil:
    cdef double best = INFINITY, c
    cdef i64 e, p
    for e in range(nbr_ptr[x], nbr_ptr[x + 1]):
        c = u[nbr_idx[e]] + elen[e]
        if c < best:
            best = c
    for p in range(pair_ptr[x], pair_ptr[x + 1]):
        if isinf(u[pair_a[p]]) or isinf(u[pair_b[p]]):
            continue
        c = _pair_min(pair_a[p], pair_b[p], u, plen, p, K, pts, fr, factored)
        if c < best:
            best = c
    return best


def solve_field(const i64[::1] nbr_ptr, const i64[::1] nbr_idx, const i64[::1] nbr_rev,
                const double[::1] elen,
                const i64[::1] pair_ptr, const i64[::1] pair_a, const i64[::1] pair_b,
                const i64[::1] pair_owner, const double[:, ::1] plen,
                const i64[::1] pend_ptr, const i64[::1] pend_ids,
                const i64[::1] sources, const double[::1] source_vals,
                bint use_pairs=True, double tol=1e-12, int max_sweeps=200,
                const double[:, ::1] points=None, origin=None, frozen=None):
    """Label-setting solve of ``u(x) = min(u(y) + l(y->x), interpolated
    triangle candidates)`` followed by Gauss-Seidel sweeps to the fixed point.

    With ``points`` and ``origin`` given, the triangle candidates interpolate
    ``u / N(y - origin)`` instead of ``u``, which removes most of the
    point-source error.  ``frozen = (c, a00, a01, a10, a11, p, b0, b1)``
    describes ``N(w) = c ||A w||_p + b.w``; the default is ``|w|``.  Returns ``(values, sweeps)``.
    """
    cdef Py_ssize_t V = nbr_ptr.shape[0] - 1
    cdef int K = plen.shape[1] - 1
    values_np = np.full(V, np.inf)
    cdef double[::1] u = values_np
    final_np = np.zeros(V, dtype=np.uint8)
    cdef unsigned char[::1] final = final_np
    fixed_np = np.zeros(V, dtype=np.uint8)
    cdef unsigned char[::1] fixed = fixed_np
    order_np = np.empty(V, dtype=np.int64)
    cdef i64[::1] order = order_np
    cdef Py_ssize_t n_order = 0, s, i
    cdef Heap heap
    cdef double key, c, ua, ub, change, new
    cdef i64 node, e, x, q, p, other
    cdef int sweeps = 0, rc = 0
    cdef bint factored = points is not None and origin is not None
    cdef Frozen fr
    cdef const double[:, ::1] pts
    fz = (1.0, 1.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0) if frozen is None else tuple(float(v) for v in frozen)
    fr.c, fr.a00, fr.a01, fr.a10, fr.a11, fr.p, fr.b0, fr.b1 = fz
    fr.sx = 0.0
    fr.sy = 0.0
    if factored:
        pts = points
        fr.sx = float(origin[0])
        fr.sy = float(origin[1])
    else:
        pts = np.zeros((1, 2))

    heap.key = NULL
    heap.node = NULL
    heap.size = 0
    heap.cap = 0
    try:
        for s in range(sources.shape[0]):
            x = sources[s]
            if source_vals[s] < u[x]:
                u[x] = source_vals[s]
            fixed[x] = 1
        for s in range(sources.shape[0]):
            x = sources[s]
            if _heap_push(&heap, u[x], x) != 0:
                raise MemoryError()
        with nogil:
            while heap.size > 0:
                _heap_pop(&heap, &key, &node)
                if final[node] or key > u[node]:
                    continue
                final[node] = 1
                order[n_order] = node
                n_order += 1
                for e in range(nbr_ptr[node], nbr_ptr[node + 1]):
                    x = nbr_idx[e]
                    if final[x] or fixed[x]:
                        continue
                    c = u[node] + elen[nbr_rev[e]]
                    if c < u[x]:
                        u[x] = c
                        rc = _heap_push(&heap, c, x)
                        if rc != 0:
                            break
                if rc != 0:
                    break
                if use_pairs:
                    for q in range(pend_ptr[node], pend_ptr[node + 1]):
                        p = pend_ids[q]
                        x = pair_owner[p]
                        if final[x] or fixed[x]:
                            continue
                        other = pair_b[p] if pair_a[p] == node else pair_a[p]
                        if not final[other]:
                            continue
                        c = _pair_min(pair_a[p], pair_b[p], u, plen, p, K, pts, &fr, factored)
                        if c < u[x]:
                            u[x] = c
                            rc = _heap_push(&heap, c, x)
                            if rc != 0:
                                break
                    if rc != 0:
                        break
            if rc == 0 and use_pairs:
                while sweeps < max_sweeps:
                    sweeps += 1
                    change = 0.0
                    for i in range(n_order):
                        x = order[i] if sweeps % 2 == 1 else order[n_order - 1 - i]
                        if fixed[x]:
                            continue
                        new = _local_update(x, u, nbr_ptr, nbr_idx, elen, pair_ptr, pair_a, pair_b,
                                            plen, K, pts, &fr, factored)
                        if new < u[x]:
                            if u[x] - new > change:
                                change = u[x] - new
                            u[x] = new
                    if change <= tol:
                        break
        if rc != 0:
            raise MemoryError()
    finally:
        free(heap.key)
        free(heap.node)
    return values_np, sweeps


def hull_areas(const double[:, :, ::1] pts, const unsigned char[:, ::1] mask):
    """Convex-hull area of the masked points in each row.

    Rows must be sorted lexicographically by (x, y).  Andrew's monotone
    chain, then the shoelace formula.
    """
    cdef Py_ssize_t V = pts.shape[0], n = pts.shape[1]
    out_np = np.zeros(V)
    cdef double[::1] out = out_np
    cdef double *hx = <double *> malloc((2 * n + 2) * sizeof(double))
    cdef double *hy = <double *> malloc((2 * n + 2) * sizeof(double))
    cdef Py_ssize_t v, i, k, lower
    cdef double area, px, py
    cdef bint skip
    if hx == NULL or hy == NULL:
        free(hx)
        free(hy)
        raise MemoryError()
    try:
        with nogil:
            for v in range(V):
                k = 0
                for i in range(n):
                    if not mask[v, i]:
                        continue
                    px = pts[v, i, 0]
                    py = pts[v, i, 1]
                    while k >= 2 and ((hx[k - 1] - hx[k - 2]) * (py - hy[k - 2])
                                      - (hy[k - 1] - hy[k - 2]) * (px - hx[k - 2])) <= 0:
                        k -= 1
                    hx[k] = px
                    hy[k] = py
                    k += 1
                lower = k + 1
                skip = True
                for i in range(n - 1, -1, -1):
                    if not mask[v, i]:
                        continue
                    if skip:
                        skip = False
                        continue
                    px = pts[v, i, 0]
                    py = pts[v, i, 1]
                    while k >= lower and ((hx[k - 1] - hx[k - 2]) * (py - hy[k - 2])
                                          - (hy[k - 1] - hy[k - 2]) * (px - hx[k - 2])) <= 0:
                        k -= 1
                    hx[k] = px
                    hy[k] = py
                    k += 1
                # last point repeats the first one
                area = 0.0
                for i in range(k - 1):
                    area += hx[i] * hy[i + 1] - hx[i + 1] * hy[i]
                out[v] = 0.5 * fabs(area) if k > 3 else 0.0
    finally:
        free(hx)
        free(hy)
    return out_np
