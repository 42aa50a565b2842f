"""Finsler metrics on the closed unit disc.

A metric is a field of (possibly non-symmetric) norms ``phi_x`` on the
tangent planes of the disc.  Points, tangent vectors and covectors are plain
float arrays whose last axis has length 2; every method broadcasts over the
leading axes.

Families
--------
euclidean   ``|v|``
conformal   ``lambda(x) |v|`` with a named factor (hemisphere, bump, pinched,
            constant)
randers     ``lambda(x) |v| + b(x).v`` over a conformal base, ``b`` affine in x
minkowski   ``||A v||_p`` for a constant frame ``A`` and exponent ``p > 1``
scaled      ``c * phi``
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BOUNDARY_TOL = 1e-9
FD_STEP = 1e-5


class MetricError(ValueError):
    """Invalid metric parameters or a point outside the disc."""


class ConvergenceError(RuntimeError):
    """An iterative maximisation did not reach its tolerance."""


def _norm(v):
    return np.sqrt(v[..., 0] ** 2 + v[..., 1] ** 2)


def _as_points(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise MetricError(f"expected a trailing axis of length 2, got shape {x.shape}")
    return x


def check_in_disc(x, tol=BOUNDARY_TOL):
    x = _as_points(x)
    r = _norm(x)
    if np.any(r > 1.0 + tol):
        raise MetricError(f"point outside the closed unit disc (|x| = {float(np.max(r)):.6g})")
    return x


# ---------------------------------------------------------------------------
# conformal factors


def _factor_hemisphere(x, scale=1.0):
    return scale * 2.0 / (1.0 + x[..., 0] ** 2 + x[..., 1] ** 2)


def _factor_bump(x, amplitude=1.0, width=0.2, center=(0.0, 0.0)):
    d2 = (x[..., 0] - center[0]) ** 2 + (x[..., 1] - center[1]) ** 2
    return 1.0 + amplitude * np.exp(-d2 / (2.0 * width**2))


def _factor_pinched(x, depth=0.3, width=0.3, scale=1.0):
    r2 = x[..., 0] ** 2 + x[..., 1] ** 2
    return scale * 2.0 / (1.0 + r2) * (1.0 - depth * np.exp(-r2 / (2.0 * width**2)))


def _factor_constant(x, value=1.0):
    return np.full(x.shape[:-1], float(value))


CONFORMAL_FACTORS = {
    "hemisphere": _factor_hemisphere,
    "bump": _factor_bump,
    "pinched": _factor_pinched,
    "constant": _factor_constant,
}


# ---------------------------------------------------------------------------
# metric families


class FinslerMetric:
    """Base class.  Subclasses provide ``phi`` and, where cheap, analytic
    ``phi_grad``, ``dual`` and ``dual_grad``; the defaults use central
    differences with a relative step of ``FD_STEP``."""

    family = "abstract"
    reversible = False

    def phi(self, x, v):
        raise NotImplementedError

    def phi_grad(self, x, v):
        """Derivative of ``phi_x`` with respect to ``v``."""
        return _fd_grad(lambda w: self.phi(x, w), np.asarray(v, dtype=float))

    def dual(self, x, u):
        """Dual norm; numerical maximisation unless a subclass knows better."""
        return dual_norm_numeric(self, x, u)[0]

    def dual_grad(self, x, u):
        return _fd_grad(lambda w: self.dual(x, w), np.asarray(u, dtype=float))

    def legendre(self, x, v):
        v = np.asarray(v, dtype=float)
        return self.phi(x, v)[..., None] * self.phi_grad(x, v)

    def legendre_inv(self, x, u):
        u = np.asarray(u, dtype=float)
        return self.dual(x, u)[..., None] * self.dual_grad(x, u)

    def to_spec(self) -> dict:
        raise NotImplementedError

    def frozen_norm(self, x):
        """Parameters ``(c, A, p, beta)`` with ``phi_x(w) = c ||A w||_p + beta.w``
        at the single point ``x``, or None when the norm has no such form."""
        return None

    def validate(self):
        """Raise :class:`MetricError` if the parameters violate the axioms."""

    def __eq__(self, other):
        return isinstance(other, FinslerMetric) and self.to_spec() == other.to_spec()

    def __hash__(self):
        return hash(repr(self.to_spec()))

    def __repr__(self):
        return f"{type(self).__name__}({self.to_spec()['params']})"


def _fd_grad(f, v):
    scale = np.maximum(_norm(v), 1e-300)[..., None]
    step = FD_STEP * scale
    out = np.empty(np.broadcast_shapes(v.shape, step.shape))
    for k in range(2):
        e = np.zeros(2)
        e[k] = 1.0
        out[..., k] = (f(v + step * e) - f(v - step * e)) / (2.0 * step[..., 0])
    return out


class Euclidean(FinslerMetric):
    family = "euclidean"
    reversible = True

    def phi(self, x, v):
        v = np.asarray(v, dtype=float)
        return np.broadcast_to(_norm(v), np.broadcast_shapes(np.shape(x)[:-1], v.shape[:-1])).copy()

    def phi_grad(self, x, v):
        v = np.asarray(v, dtype=float)
        g = v / _norm(v)[..., None]
        return np.broadcast_to(g, np.broadcast_shapes(np.shape(x), v.shape)).copy()

    def dual(self, x, u):
        return self.phi(x, u)

    def dual_grad(self, x, u):
        return self.phi_grad(x, u)

    def factor(self, x):
        return np.ones(np.shape(x)[:-1])

    def frozen_norm(self, x):
        return 1.0, np.eye(2), 2.0, np.zeros(2)

    def to_spec(self):
        return {"family": "euclidean", "params": {}, "reversible": True}


class Conformal(FinslerMetric):
    """Riemannian metric ``lambda(x)^2 |dx|^2``; ``phi = lambda |v|``."""

    family = "conformal"
    reversible = True

    def __init__(self, factor="hemisphere", **params):
        if factor not in CONFORMAL_FACTORS:
            raise MetricError(f"unknown conformal factor {factor!r}")
        self.factor_name = factor
        self.params = {k: (list(v) if isinstance(v, (tuple, list)) else float(v)) for k, v in params.items()}
        self._f = CONFORMAL_FACTORS[factor]
        self.validate()

    def factor(self, x):
        x = np.asarray(x, dtype=float)
        kw = {k: (tuple(v) if isinstance(v, list) else v) for k, v in self.params.items()}
        return self._f(x, **kw)

    def validate(self):
        t = np.linspace(0, 2 * np.pi, 97)
        r = np.linspace(0, 1, 41)
        pts = np.stack(np.broadcast_arrays(np.outer(r, np.cos(t)), np.outer(r, np.sin(t))), axis=-1)
        lam = self.factor(pts)
        if not np.all(np.isfinite(lam)) or np.min(lam) <= 0:
            raise MetricError(f"conformal factor {self.factor_name!r} must be positive on the disc")

    def phi(self, x, v):
        return self.factor(x) * _norm(np.asarray(v, dtype=float))

    def phi_grad(self, x, v):
        v = np.asarray(v, dtype=float)
        return self.factor(x)[..., None] * v / _norm(v)[..., None]

    def dual(self, x, u):
        return _norm(np.asarray(u, dtype=float)) / self.factor(x)

    def dual_grad(self, x, u):
        u = np.asarray(u, dtype=float)
        return u / (self.factor(x) * _norm(u))[..., None]

    def frozen_norm(self, x):
        return float(self.factor(np.asarray(x, dtype=float))), np.eye(2), 2.0, np.zeros(2)

    def to_spec(self):
        return {"family": "conformal", "params": {"factor": self.factor_name, **self.params}, "reversible": True}


class Randers(FinslerMetric):
    """``phi(v) = lambda(x)|v| + b(x).v`` with ``b(x) = b + B x``.

    The base must be euclidean or conformal; the drift must have base norm
    ``|b(x)|/lambda(x) < 1`` on the closed disc.
    """

    family = "randers"

    def __init__(self, b=(0.0, 0.0), b_linear=None, base=None):
        self.base = Euclidean() if base is None else base
        if not isinstance(self.base, (Euclidean, Conformal)):
            raise MetricError("randers base must be euclidean or conformal")
        self.b0 = np.asarray(b, dtype=float).reshape(2)
        self.B = np.zeros((2, 2)) if b_linear is None else np.asarray(b_linear, dtype=float).reshape(2, 2)
        self.reversible = bool(not np.any(self.b0) and not np.any(self.B))
        self.validate()

    def drift(self, x):
        x = np.asarray(x, dtype=float)
        return self.b0 + x @ self.B.T

    def drift_norm_sup(self):
        t = np.linspace(0, 2 * np.pi, 181)
        r = np.linspace(0, 1, 61)
        pts = np.stack(np.broadcast_arrays(np.outer(r, np.cos(t)), np.outer(r, np.sin(t))), axis=-1)
        return float(np.max(_norm(self.drift(pts)) / self.base.factor(pts)))

    def validate(self):
        s = self.drift_norm_sup()
        if not s < 1.0:
            raise MetricError(f"randers drift must have base norm < 1 on the disc (sup = {s:.4g})")

    def phi(self, x, v):
        v = np.asarray(v, dtype=float)
        return self.base.factor(x) * _norm(v) + np.sum(self.drift(x) * v, axis=-1)

    def phi_grad(self, x, v):
        v = np.asarray(v, dtype=float)
        return self.base.factor(x)[..., None] * v / _norm(v)[..., None] + self.drift(x)

    def _dual_parts(self, x, u):
        lam = self.base.factor(x)
        b = self.drift(x)
        a2 = np.sum(u * u, axis=-1) / lam**2
        c = np.sum(u * b, axis=-1) / lam**2
        beta2 = np.sum(b * b, axis=-1) / lam**2
        s = np.sqrt(a2 * (1.0 - beta2) + c**2)
        return lam, b, beta2, c, s

    def dual(self, x, u):
        u = np.asarray(u, dtype=float)
        _, _, beta2, c, s = self._dual_parts(x, u)
        return (s - c) / (1.0 - beta2)

    def dual_grad(self, x, u):
        u = np.asarray(u, dtype=float)
        lam, b, beta2, c, s = self._dual_parts(x, u)
        lam2 = (lam**2)[..., None]
        grad_a2 = 2.0 * u / lam2
        grad_c = b / lam2
        num = (grad_a2 * (1.0 - beta2)[..., None] + 2.0 * c[..., None] * grad_c) / (2.0 * s[..., None]) - grad_c
        return num / (1.0 - beta2)[..., None]

    def frozen_norm(self, x):
        x = np.asarray(x, dtype=float)
        return float(self.base.factor(x)), np.eye(2), 2.0, self.drift(x)

    def to_spec(self):
        params = {"b": self.b0.tolist(), "base": self.base.to_spec()}
        if np.any(self.B):
            params["b_linear"] = self.B.tolist()
        return {"family": "randers", "params": params, "reversible": self.reversible}


class Minkowski(FinslerMetric):
    """Constant norm ``||A v||_p``; reversible, ``p in (1, inf)``."""

    family = "minkowski"
    reversible = True

    def __init__(self, p=4.0, frame=None):
        p = float(p)
        if not (p > 1.0 and math.isfinite(p)):
            raise MetricError(f"minkowski exponent must satisfy 1 < p < inf, got {p}")
        self.p = p
        self.q = p / (p - 1.0)
        self.A = np.eye(2) if frame is None else np.asarray(frame, dtype=float).reshape(2, 2)
        if abs(np.linalg.det(self.A)) < 1e-12:
            raise MetricError("minkowski frame must be invertible")
        self.Ainv_T = np.linalg.inv(self.A).T

    @staticmethod
    def _pnorm(w, p):
        a = np.abs(w)
        m = np.maximum(a[..., 0], a[..., 1])
        safe = np.where(m > 0, m, 1.0)
        return np.where(m > 0, safe * ((a[..., 0] / safe) ** p + (a[..., 1] / safe) ** p) ** (1.0 / p), 0.0)

    @staticmethod
    def _pnorm_grad(w, p):
        n = Minkowski._pnorm(w, p)[..., None]
        return np.sign(w) * (np.abs(w) / n) ** (p - 1.0)

    def _bshape(self, x, v):
        return np.broadcast_shapes(np.shape(x)[:-1], np.shape(v)[:-1])

    def phi(self, x, v):
        v = np.asarray(v, dtype=float)
        return np.broadcast_to(self._pnorm(v @ self.A.T, self.p), self._bshape(x, v)).copy()

    def phi_grad(self, x, v):
        v = np.asarray(v, dtype=float)
        g = self._pnorm_grad(v @ self.A.T, self.p) @ self.A
        return np.broadcast_to(g, self._bshape(x, v) + (2,)).copy()

    def dual(self, x, u):
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(self._pnorm(u @ self.Ainv_T.T, self.q), self._bshape(x, u)).copy()

    def dual_grad(self, x, u):
        u = np.asarray(u, dtype=float)
        g = self._pnorm_grad(u @ self.Ainv_T.T, self.q) @ self.Ainv_T
        return np.broadcast_to(g, self._bshape(x, u) + (2,)).copy()

    def factor(self, x):
        return np.ones(np.shape(x)[:-1])

    def frozen_norm(self, x):
        return 1.0, self.A.copy(), self.p, np.zeros(2)

    def to_spec(self):
        params = {"p": self.p}
        if not np.allclose(self.A, np.eye(2)):
            params["frame"] = self.A.tolist()
        return {"family": "minkowski", "params": params, "reversible": True}


class Scaled(FinslerMetric):
    family = "scaled"

    def __init__(self, base, scale):
        scale = float(scale)
        if not scale > 0:
            raise MetricError("scale must be positive")
        self.base = base
        self.scale = scale
        self.reversible = base.reversible

    def phi(self, x, v):
        return self.scale * self.base.phi(x, v)

    def phi_grad(self, x, v):
        return self.scale * self.base.phi_grad(x, v)

    def dual(self, x, u):
        return self.base.dual(x, u) / self.scale

    def dual_grad(self, x, u):
        return self.base.dual_grad(x, u) / self.scale

    def frozen_norm(self, x):
        fb = self.base.frozen_norm(x)
        if fb is None:
            return None
        c, A, p, beta = fb
        return self.scale * c, A, p, self.scale * np.asarray(beta)

    def to_spec(self):
        return {"family": "scaled", "params": {"scale": self.scale, "base": self.base.to_spec()},
                "reversible": self.reversible}


def metric_from_spec(spec: dict) -> FinslerMetric:
    """Build a metric from its ``{family, params, reversible}`` description."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise MetricError("metric spec must be a mapping with a 'family' key")
    family = spec["family"]
    params = dict(spec.get("params", {}))
    if family == "euclidean":
        m = Euclidean()
    elif family == "conformal":
        m = Conformal(**params)
    elif family == "randers":
        base = params.pop("base", None)
        m = Randers(base=None if base is None else metric_from_spec(base), **params)
    elif family == "minkowski":
        m = Minkowski(**params)
    elif family == "scaled":
        m = Scaled(metric_from_spec(params["base"]), params["scale"])
    else:
        raise MetricError(f"unknown metric family {family!r}")
    declared = spec.get("reversible")
    if declared is not None and bool(declared) != m.reversible:
        raise MetricError(f"spec declares reversible={declared} but the {family} metric is "
                          f"{'reversible' if m.reversible else 'non-reversible'}")
    return m


def hemisphere(scale=1.0) -> Conformal:
    """Upper unit hemisphere in stereographic coordinates (area 2*pi)."""
    return Conformal("hemisphere", scale=scale) if scale != 1.0 else Conformal("hemisphere")


# ---------------------------------------------------------------------------
# pointwise operations


def eval_phi(metric, x, v):
    x = check_in_disc(x)
    return metric.phi(x, np.asarray(v, dtype=float))


def _unit_dirs(m, offset=0.0):
    t = offset + 2.0 * np.pi * np.arange(m) / m
    return t, np.stack([np.cos(t), np.sin(t)], axis=-1)


def dual_norm_numeric(metric, x, u, coarse=64, tol=1e-10, max_iter=200):
    """Maximise ``u(v)`` over the unit sphere ``phi_x(v) = 1``.

    The sphere is parameterised by Euclidean angle, ``v = e(t)/phi(e(t))``.
    A coarse scan brackets the maximiser, golden-section search narrows it
    to ``tol`` in angle and a parabolic step polishes the value.

    Returns ``(value, angle)`` arrays.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    shape = np.broadcast_shapes(x.shape, u.shape)[:-1]
    x = np.broadcast_to(x, shape + (2,))
    u = np.broadcast_to(u, shape + (2,))

    def g(t):
        e = np.stack([np.cos(t), np.sin(t)], axis=-1)
        return np.sum(u * e, axis=-1) / metric.phi(x, e)

    tc = 2.0 * np.pi * np.arange(coarse) / coarse
    vals = np.stack([g(np.full(shape, t)) for t in tc], axis=-1)
    k = np.argmax(vals, axis=-1)
    step = 2.0 * np.pi / coarse
    lo = tc[k] - step
    hi = tc[k] + step
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - inv_phi * (hi - lo)
    d = lo + inv_phi * (hi - lo)
    fc, fd = g(c), g(d)
    for _ in range(max_iter):
        if np.all(hi - lo < tol):
            break
        left = fc > fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new_c = hi - inv_phi * (hi - lo)
        new_d = lo + inv_phi * (hi - lo)
        fd_new = np.where(left, fc, g(new_d))
        fc_new = np.where(left, g(new_c), fd)
        c, d = np.where(left, new_c, d), np.where(left, c, new_d)
        fc, fd = fc_new, fd_new
    else:
        raise ConvergenceError("dual norm maximiser did not reach the angular tolerance")
    t = 0.5 * (lo + hi)
    # parabolic polish on three points around t
    dt = 1e-4
    f0, fm, fp = g(t), g(t - dt), g(t + dt)
    den = fm - 2.0 * f0 + fp
    shift = np.where(den < 0, 0.5 * dt * (fm - fp) / np.where(den < 0, den, -1.0), 0.0)
    shift = np.clip(shift, -dt, dt)
    t2 = t + shift
    f2 = g(t2)
    better = f2 > f0
    return np.where(better, f2, f0), np.where(better, t2, t)


def dual_norm(metric, x, u):
    """``phi*_x(u) = sup{u(v) : phi_x(v) = 1}`` by 1-D maximisation."""
    x = check_in_disc(x)
    return dual_norm_numeric(metric, x, u)[0]


def legendre(metric, x, v):
    """Covector ``u`` with ``phi*(u) = phi(v)`` and ``u(v) = phi(v)^2``."""
    x = check_in_disc(x)
    v = np.asarray(v, dtype=float)
    if np.any(_norm(v) == 0):
        raise MetricError("legendre transform of the zero vector")
    return metric.legendre(x, v)


def legendre_inv(metric, x, u):
    x = check_in_disc(x)
    u = np.asarray(u, dtype=float)
    if np.any(_norm(u) == 0):
        raise MetricError("inverse legendre transform of the zero covector")
    return metric.legendre_inv(x, u)


def legendre_inv_numeric(metric, x, u):
    """Inverse legendre through the maximiser of ``u`` on the unit sphere."""
    val, t = dual_norm_numeric(metric, x, u)
    e = np.stack([np.cos(t), np.sin(t)], axis=-1)
    v = e / metric.phi(x, e)[..., None]
    return val[..., None] * v


@dataclass(frozen=True)
class NormPolygon:
    """Points on a unit sphere (or cosphere) in positive cyclic order."""

    base: np.ndarray
    vertices: np.ndarray
    dual: bool = False

    def area(self):
        return shoelace(self.vertices)


def shoelace(poly):
    """Signed area of closed polygons along axis -2."""
    poly = np.asarray(poly, dtype=float)
    x, y = poly[..., 0], poly[..., 1]
    return 0.5 * np.sum(x * np.roll(y, -1, axis=-1) - np.roll(x, -1, axis=-1) * y, axis=-1)


def _sphere_points(metric, x, m):
    _, e = _unit_dirs(m)
    x = np.asarray(x, dtype=float)[..., None, :]
    return e / metric.phi(x, e)[..., None], x


def unit_sphere_polygon(metric, x, m=64) -> NormPolygon:
    x = check_in_disc(x)
    v, _ = _sphere_points(metric, x, m)
    return NormPolygon(base=x, vertices=v)


def unit_cosphere_polygon(metric, x, m=64) -> NormPolygon:
    x = check_in_disc(x)
    v, xb = _sphere_points(metric, x, m)
    return NormPolygon(base=x, vertices=metric.legendre(xb, v), dual=True)


def _check_m(m):
    if m < 8:
        raise ValueError("sphere polygons need at least 8 vertices")


def coball_area(metric, x, m=512):
    """Area of the polygon inscribed in ``U*_x``; a lower bound for ``|B*_x|``."""
    _check_m(m)
    return unit_cosphere_polygon(metric, x, m).area()


def ball_area(metric, x, m=512):
    _check_m(m)
    return unit_sphere_polygon(metric, x, m).area()


def coball_area_batch(metric, pts, m=512, chunk=2048):
    """:func:`coball_area` for many base points at once, without the disc check."""
    pts = np.asarray(pts, dtype=float)
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        v, xb = _sphere_points(metric, pts[s:s + chunk], m)
        out[s:s + chunk] = shoelace(metric.legendre(xb, v))
    return out


def ball_area_batch(metric, pts, m=512, chunk=2048):
    pts = np.asarray(pts, dtype=float)
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        v, _ = _sphere_points(metric, pts[s:s + chunk], m)
        out[s:s + chunk] = shoelace(v)
    return out


def segment_length(metric, a, b, order=5):
    """``L_phi`` of the oriented straight segment from ``a`` to ``b``
    (Gauss-Legendre with ``order`` nodes)."""
    a = check_in_disc(a)
    b = check_in_disc(b)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (nodes + 1.0)
    d = b - a
    pts = a[..., None, :] + t[:, None] * d[..., None, :]
    vals = metric.phi(pts, d[..., None, :])
    return 0.5 * np.sum(weights * vals, axis=-1)


def simpson_length(metric, a, b):
    """Three-point Simpson rule for ``L_phi`` of the segment a -> b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    return (metric.phi(a, d) + 4.0 * metric.phi(0.5 * (a + b), d) + metric.phi(b, d)) / 6.0


@dataclass
class ValidationReport:
    passed: bool
    samples: int
    homogeneity_error: float
    min_value: float
    min_hessian_eig: float
    violations: list

    def __bool__(self):
        return self.passed


def validate_metric(metric, samples=400, seed=0, tol=1e-7) -> ValidationReport:
    """Sample points and directions, checking homogeneity, positivity and
    convexity of ``phi^2`` (second differences of the 2x2 Hessian)."""
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.uniform(0, 1, samples))
    a = rng.uniform(0, 2 * np.pi, samples)
    x = np.stack([r * np.cos(a), r * np.sin(a)], axis=-1)
    th = rng.uniform(0, 2 * np.pi, samples)
    v = np.stack([np.cos(th), np.sin(th)], axis=-1)
    t = rng.uniform(0.1, 10.0, samples)
    violations = []

    f = metric.phi(x, v)
    hom = np.abs(metric.phi(x, t[:, None] * v) - t * f) / np.maximum(t * f, 1e-300)
    for i in np.flatnonzero(hom > tol):
        violations.append(("homogeneity", x[i].tolist(), v[i].tolist(), float(hom[i])))
    for i in np.flatnonzero(~(f > 0)):
        violations.append(("positivity", x[i].tolist(), v[i].tolist(), float(f[i])))

    def sq(w):
        return metric.phi(x, w) ** 2

    hs = 1e-4
    e1 = np.array([hs, 0.0])
    e2 = np.array([0.0, hs])
    f0 = sq(v)
    h11 = (sq(v + e1) - 2 * f0 + sq(v - e1)) / hs**2
    h22 = (sq(v + e2) - 2 * f0 + sq(v - e2)) / hs**2
    h12 = (sq(v + e1 + e2) - sq(v + e1 - e2) - sq(v - e1 + e2) + sq(v - e1 - e2)) / (4 * hs**2)
    tr = h11 + h22
    det = h11 * h22 - h12**2
    eig_min = 0.5 * (tr - np.sqrt(np.maximum(tr**2 - 4 * det, 0.0))) / np.maximum(f0, 1e-300)
    for i in np.flatnonzero(eig_min < -1e-4):
        violations.append(("convexity", x[i].tolist(), v[i].tolist(), float(eig_min[i])))
    return ValidationReport(
        passed=not violations,
        samples=samples,
        homogeneity_error=float(np.max(hom)),
        min_value=float(np.min(f)),
        min_hessian_eig=float(np.min(eig_min)),
        violations=violations,
    )
