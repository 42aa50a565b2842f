"""Plain SVG figures: indicatrices, geodesic fans, gradient hulls and
boundary trace loops.  Output is a deterministic function of the inputs."""
from __future__ import annotations

import numpy as np

from .geodesic import shoot
from .metric import unit_cosphere_polygon, unit_sphere_polygon

TARGETS = ("indicatrices", "geodesics", "hulls", "traces")
SIZE = 480


def _num(v):
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


class Svg:
    def __init__(self, lo, hi, size=SIZE, title=""):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.size = size
        self.items = []
        self.title = title

    def _map(self, p):
        p = np.asarray(p, dtype=float)
        span = float(np.max(self.hi - self.lo))
        s = (self.size - 40) / span
        x = 20 + (p[..., 0] - self.lo[0]) * s
        y = self.size - 20 - (p[..., 1] - self.lo[1]) * s
        return np.stack([x, y], axis=-1)

    def polyline(self, pts, stroke="#000", width=1.0, closed=False, dash=None, fill="none"):
        q = self._map(pts)
        tag = "polygon" if closed else "polyline"
        attrs = f'fill="{fill}" stroke="{stroke}" stroke-width="{_num(width)}"'
        if dash:
            attrs += f' stroke-dasharray="{dash}"'
        coords = " ".join(f"{_num(a)},{_num(b)}" for a, b in q)
        self.items.append(f'<{tag} points="{coords}" {attrs}/>')

    def circle(self, c, r, stroke="#888", width=1.0):
        q = self._map(c)
        span = float(np.max(self.hi - self.lo))
        rr = r * (self.size - 40) / span
        self.items.append(f'<circle cx="{_num(q[0])}" cy="{_num(q[1])}" r="{_num(rr)}" fill="none" '
                          f'stroke="{stroke}" stroke-width="{_num(width)}"/>')

    def dot(self, c, r=2.0, fill="#000"):
        q = self._map(c)
        self.items.append(f'<circle cx="{_num(q[0])}" cy="{_num(q[1])}" r="{_num(r)}" fill="{fill}"/>')

    def text(self):
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" height="{self.size}" '
                f'viewBox="0 0 {self.size} {self.size}">')
        body = [head]
        if self.title:
            body.append(f"<title>{self.title}</title>")
        body.append(f'<rect x="0" y="0" width="{self.size}" height="{self.size}" fill="#fff"/>')
        body.extend(self.items)
        body.append("</svg>")
        return "\n".join(body) + "\n"


def _disc_figure(title):
    svg = Svg((-1.1, -1.1), (1.1, 1.1), title=title)
    svg.circle((0.0, 0.0), 1.0)
    return svg


def _sample_points(k=5, radius=0.75):
    g = np.linspace(-radius, radius, k)
    X, Y = np.meshgrid(g, g)
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    return pts[np.hypot(pts[:, 0], pts[:, 1]) <= radius + 1e-12]


def indicatrices(metric, k=5, m=96, scale=0.12):
    """Unit spheres (solid) and cospheres (dashed) at a grid of points, both
    shrunk by a common factor and centred at their base points."""
    svg = _disc_figure(f"indicatrices of {metric.family}")
    pts = _sample_points(k)
    spheres = [unit_sphere_polygon(metric, x, m).vertices for x in pts]
    cos = [unit_cosphere_polygon(metric, x, m).vertices for x in pts]
    big = max(max(np.max(np.hypot(*s.T)) for s in spheres), max(np.max(np.hypot(*c.T)) for c in cos))
    s = scale / big
    for x, a, b in zip(pts, spheres, cos):
        svg.polyline(x + s * a, stroke="#1f4e79", closed=True)
        svg.polyline(x + s * b, stroke="#b03a2e", closed=True, dash="3,2")
        svg.dot(x, 1.2)
    return svg.text()


def geodesics(metric, starts=((0.0, 0.0), (-0.5, 0.3)), rays=16, step=1e-2):
    svg = _disc_figure(f"geodesics of {metric.family}")
    for x in starts:
        for t in 2 * np.pi * np.arange(rays) / rays:
            tr = shoot(metric, x, (np.cos(t), np.sin(t)), step=step)
            svg.polyline(tr.x, stroke="#1f4e79", width=0.8)
        svg.dot(x, 2.5, "#b03a2e")
    return svg.text()


def hulls(data, k=7, scale=0.1):
    """Convex hulls of the reliable gradients of a cyclic map at a grid of
    vertices, drawn around the vertices."""
    from scipy.spatial import ConvexHull

    mesh = data.mesh
    metric = mesh.metric
    svg = _disc_figure(f"gradient hulls, n={data.n}")
    grads, rel = data.gradients()
    verts = sorted({mesh.geometry.nearest_vertex(x) for x in _sample_points(k, 0.8)})
    big = 0.0
    shapes = []
    for v in verts:
        c = grads[rel[:, v], v]
        if len(c) >= 3:
            try:
                h = ConvexHull(c)
            except Exception:
                continue
            shapes.append((v, c[h.vertices]))
            big = max(big, float(np.max(np.hypot(*c.T))))
    s = scale / big if big else 1.0
    for v, poly in shapes:
        x = mesh.geometry.points[v]
        cs = unit_cosphere_polygon(metric, x, 96).vertices
        svg.polyline(x + s * cs, stroke="#999", width=0.6, closed=True, dash="2,2")
        svg.polyline(x + s * poly, stroke="#1f4e79", closed=True, fill="#cfe2f3")
        svg.dot(x, 1.0)
    return svg.text()


def traces(data, which=None):
    """The planar loops ``(f_i, f_{i+1})`` along the boundary."""
    T = data.traces
    n = len(T)
    which = range(n) if which is None else which
    lo = T.min()
    hi = T.max()
    pad = 0.05 * (hi - lo)
    svg = Svg((lo - pad, lo - pad), (hi + pad, hi + pad), title=f"boundary traces, n={n}")
    palette = ["#1f4e79", "#b03a2e", "#196f3d", "#7d3c98", "#9a7d0a", "#2e4053"]
    for i in which:
        loop = np.stack([T[i], T[(i + 1) % n]], axis=-1)
        svg.polyline(loop, stroke=palette[i % len(palette)], closed=True)
    return svg.text()


def loop_figure(loops, title="loops"):
    """SVG of arbitrary closed planar loops ``[(N, 2), ...]``."""
    allp = np.concatenate(loops)
    lo, hi = allp.min(), allp.max()
    pad = 0.05 * (hi - lo)
    svg = Svg((lo - pad, lo - pad), (hi + pad, hi + pad), title=title)
    for L in loops:
        svg.polyline(L, closed=True)
    return svg.text()
