"""Discretisation of the closed unit disc.

Vertices are a square grid of spacing ``h`` clipped to ``|x| <= 1 - h/2``
plus a ring of ``N ~ 2 pi / h`` points on the unit circle.  Every vertex is
joined to the vertices within Euclidean radius ``R h`` (grid-to-grid offsets
only when coprime).  For each vertex the angularly consecutive neighbour pairs
``(a, b)`` span the stencil triangles used by the semi-Lagrangian update;
their lengths are tabulated at ``K + 1`` points along ``[a, b]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .metric import simpson_length

PAIR_SUBDIV = 8


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DiscGeometry:
    h: float
    R: int
    points: np.ndarray          # (V, 2)
    boundary: np.ndarray        # ring vertex ids, counter-clockwise from angle 0
    is_boundary: np.ndarray     # (V,) bool
    grid_ij: np.ndarray         # (V, 2) int, -huge for ring vertices
    triangles: np.ndarray       # (T, 3) Delaunay cells, positively oriented
    vertex_area: np.ndarray     # (V,) lumped cell area (one third of adjacent triangles)
                                # plus the boundary circular segments
    nbr_ptr: np.ndarray         # CSR rows over vertices
    nbr_idx: np.ndarray         # neighbour of each entry
    nbr_rev: np.ndarray         # position of the symmetric entry
    pair_ptr: np.ndarray        # CSR rows of stencil triangles per vertex
    pair_a: np.ndarray
    pair_b: np.ndarray
    pair_owner: np.ndarray
    pend_ptr: np.ndarray        # pairs incident to each vertex as an endpoint
    pend_ids: np.ndarray
    fit_ptr: np.ndarray         # gradient-fit neighbourhoods (self included)
    fit_idx: np.ndarray
    K: int = PAIR_SUBDIV

    @property
    def n_vertices(self):
        return len(self.points)

    @property
    def n_boundary(self):
        return len(self.boundary)

    @property
    def boundary_angles(self):
        p = self.points[self.boundary]
        return np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * np.pi)

    def antipode(self):
        """Index map x -> -x (the point set is centrally symmetric)."""
        return _antipode_map(self)

    def nearest_vertex(self, x):
        return int(_tree(self).query(np.asarray(x, dtype=float))[1])

    def edge_rows(self):
        return np.repeat(np.arange(self.n_vertices), np.diff(self.nbr_ptr))


_TREES = {}


def _tree(geom):
    key = id(geom)
    if key not in _TREES:
        _TREES[key] = cKDTree(geom.points)
    return _TREES[key]


def _antipode_map(geom):
    d, idx = _tree(geom).query(-geom.points)
    if np.max(d) > 1e-9:
        raise MeshError("point set is not centrally symmetric")
    return idx


def ring_size(h):
    n = int(round(2 * math.pi / h))
    return max(16, 4 * int(math.ceil(n / 4)))


@lru_cache(maxsize=8)
def build_geometry(h: float, R: int = 3) -> DiscGeometry:
    if not (0 < h <= 0.2):
        raise MeshError(f"resolution h must lie in (0, 0.2], got {h}")
    if R not in (1, 2, 3, 4):
        raise MeshError(f"stencil radius R must be one of 1..4, got {R}")
    if R * h > 0.5:
        raise MeshError("resolution too coarse for the stencil radius")

    k = int(math.floor(1.0 / h)) + 1
    ii, jj = np.meshgrid(np.arange(-k, k + 1), np.arange(-k, k + 1), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    gp = np.stack([ii * h, jj * h], axis=-1)
    keep = np.hypot(gp[:, 0], gp[:, 1]) <= 1.0 - 0.5 * h + 1e-12
    gp, ii, jj = gp[keep], ii[keep], jj[keep]
    nb = ring_size(h)
    t = 2 * np.pi * np.arange(nb) / nb
    ring = np.stack([np.cos(t), np.sin(t)], axis=-1)
    points = np.vstack([gp, ring])
    V = len(points)
    n_grid = len(gp)
    boundary = np.arange(n_grid, V)
    is_boundary = np.zeros(V, dtype=bool)
    is_boundary[boundary] = True
    grid_ij = np.full((V, 2), np.iinfo(np.int64).min // 4, dtype=np.int64)
    grid_ij[:n_grid, 0] = ii
    grid_ij[:n_grid, 1] = jj

    tri = Delaunay(points).simplices.astype(np.int64)
    p = points[tri]
    signed = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                    - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    flip = signed < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    tri = tri[np.abs(signed) > 1e-14 * h * h]
    area = np.abs(signed[np.abs(signed) > 1e-14 * h * h])
    vertex_area = np.zeros(V)
    np.add.at(vertex_area, tri.ravel(), np.repeat(area / 3.0, 3))
    # circular segments between the ring polygon and the unit circle,
    # half to each end, so that the areas sum to pi
    half = np.pi / nb
    vertex_area[boundary] += half - 0.5 * math.sin(2 * half)

    tree = cKDTree(points)
    nbr_ptr, nbr_idx = _neighbours(tree, points, grid_ij, n_grid, R * h * (1 + 1e-9))
    nbr_rev = _reverse_index(nbr_ptr, nbr_idx)
    pair_ptr, pair_a, pair_b = _stencil_pairs(points, nbr_ptr, nbr_idx)
    pair_owner = np.repeat(np.arange(V), np.diff(pair_ptr))
    pend_ptr, pend_ids = _pairs_by_endpoint(V, pair_a, pair_b)
    fit_ptr, fit_idx = _fit_sets(tree, points, h)

    return DiscGeometry(
        h=float(h), R=int(R), points=points, boundary=boundary, is_boundary=is_boundary,
        grid_ij=grid_ij, triangles=tri, vertex_area=vertex_area,
        nbr_ptr=nbr_ptr, nbr_idx=nbr_idx, nbr_rev=nbr_rev,
        pair_ptr=pair_ptr, pair_a=pair_a, pair_b=pair_b, pair_owner=pair_owner,
        pend_ptr=pend_ptr, pend_ids=pend_ids, fit_ptr=fit_ptr, fit_idx=fit_idx,
    )


def _neighbours(tree, points, grid_ij, n_grid, radius):
    pairs = tree.query_pairs(radius, output_type="ndarray")
    a, b = pairs[:, 0], pairs[:, 1]
    both_grid = (a < n_grid) & (b < n_grid)
    d = np.abs(grid_ij[a] - grid_ij[b])
    coprime = np.gcd(d[:, 0], d[:, 1]) == 1
    keep = ~both_grid | coprime
    a, b = a[keep], b[keep]
    rows = np.concatenate([a, b])
    cols = np.concatenate([b, a])
    V = len(points)
    # order each row by angle of the neighbour offset
    off = points[cols] - points[rows]
    ang = np.arctan2(off[:, 1], off[:, 0])
    order = np.lexsort((ang, rows))
    rows, cols = rows[order], cols[order]
    ptr = np.zeros(V + 1, dtype=np.int64)
    np.add.at(ptr, rows + 1, 1)
    return np.cumsum(ptr), cols.astype(np.int64)


def _reverse_index(ptr, idx):
    V = len(ptr) - 1
    rows = np.repeat(np.arange(V), np.diff(ptr))
    key_fwd = rows * V + idx
    key_bwd = idx * V + rows
    order = np.argsort(key_fwd)
    pos = np.searchsorted(key_fwd[order], key_bwd)
    return order[pos].astype(np.int64)


def _stencil_pairs(points, ptr, idx):
    V = len(points)
    rows = np.repeat(np.arange(V), np.diff(ptr))
    off = points[idx] - points[rows]
    ang = np.arctan2(off[:, 1], off[:, 0])
    # successor of each entry within its row (cyclic)
    counts = np.diff(ptr)
    pos = np.arange(len(idx)) - ptr[rows]
    succ = ptr[rows] + (pos + 1) % counts[rows]
    gap = np.mod(ang[succ] - ang, 2 * np.pi)
    ok = (gap > 1e-9) & (gap < np.pi - 1e-6) & (counts[rows] > 1)
    owner = rows[ok]
    pa = idx[ok]
    pb = idx[succ[ok]]
    pptr = np.zeros(V + 1, dtype=np.int64)
    np.add.at(pptr, owner + 1, 1)
    return np.cumsum(pptr), pa.astype(np.int64), pb.astype(np.int64)


def _pairs_by_endpoint(V, pa, pb):
    ends = np.concatenate([pa, pb])
    ids = np.concatenate([np.arange(len(pa)), np.arange(len(pb))])
    order = np.lexsort((ids, ends))
    ptr = np.zeros(V + 1, dtype=np.int64)
    np.add.at(ptr, ends + 1, 1)
    return np.cumsum(ptr), ids[order].astype(np.int64)


def _fit_sets(tree, points, h):
    V = len(points)
    lists = tree.query_ball_point(points, 1.5 * h * (1 + 1e-9))
    out = []
    for i, lst in enumerate(lists):
        if len(lst) < 6:
            lst = tree.query_ball_point(points[i], 2.5 * h)
        out.append(np.sort(np.asarray(lst, dtype=np.int64)))
    ptr = np.zeros(V + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(o) for o in out])
    return ptr, np.concatenate(out)


@dataclass(eq=False)
class DiscMesh:
    """Geometry plus the directed Finsler lengths of one metric.

    ``len_in[e]`` is the length of the edge from ``nbr_idx[e]`` to its row
    vertex, ``len_out[e]`` the reverse.  ``pair_in[p, k]`` is the length from
    ``(1 - k/K) a + (k/K) b`` to the owner of pair ``p``; ``pair_out`` the
    reverse.  Reversible metrics share the arrays.
    """

    geometry: DiscGeometry
    metric: object
    len_in: np.ndarray
    len_out: np.ndarray
    pair_in: np.ndarray
    pair_out: np.ndarray
    cache: dict = field(default_factory=dict, repr=False)

    def __getattr__(self, name):
        if name in ("geometry", "cache"):
            raise AttributeError(name)
        return getattr(self.geometry, name)

    @property
    def reversible(self):
        return self.metric.reversible

    def edge_length(self, a, b):
        """Stored length of the directed edge a -> b."""
        g = self.geometry
        row = g.nbr_idx[g.nbr_ptr[b]:g.nbr_ptr[b + 1]]
        hit = np.flatnonzero(row == a)
        if not len(hit):
            raise KeyError((a, b))
        return float(self.len_in[g.nbr_ptr[b] + hit[0]])


def build_mesh(metric, h=0.02, R=3) -> DiscMesh:
    geom = build_geometry(float(h), int(R))
    P = geom.points
    rows = geom.edge_rows()
    nb = geom.nbr_idx
    len_in = simpson_length(metric, P[nb], P[rows])
    len_out = len_in if metric.reversible else simpson_length(metric, P[rows], P[nb])
    K = geom.K
    t = np.arange(K + 1) / K
    owner = P[geom.pair_owner]
    pa = P[geom.pair_a]
    pb = P[geom.pair_b]
    y = (1 - t)[None, :, None] * pa[:, None, :] + t[None, :, None] * pb[:, None, :]
    x = np.broadcast_to(owner[:, None, :], y.shape)
    pair_in = np.empty(y.shape[:2])
    pair_out = pair_in if metric.reversible else np.empty(y.shape[:2])
    chunk = 200_000
    for s in range(0, len(y), chunk):
        pair_in[s:s + chunk] = simpson_length(metric, y[s:s + chunk], x[s:s + chunk])
        if not metric.reversible:
            pair_out[s:s + chunk] = simpson_length(metric, x[s:s + chunk], y[s:s + chunk])
    return DiscMesh(geometry=geom, metric=metric, len_in=len_in, len_out=len_out,
                    pair_in=np.ascontiguousarray(pair_in), pair_out=np.ascontiguousarray(pair_out))
