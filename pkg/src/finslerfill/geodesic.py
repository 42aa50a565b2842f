"""Geodesics as trajectories of ``H(x, u) = phi*_x(u)^2 / 2``.

Unit-speed geodesics live on ``H = 1/2``; after every RK4 step the covector
is rescaled back onto the unit cosphere.  ``backward=True`` runs the flow in
reverse time, which traces a geodesic that *arrives* at the start point.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metric import MetricError, check_in_disc

X_STEP = 1e-6


class ShootingError(RuntimeError):
    pass


@dataclass
class PhaseState:
    x: np.ndarray
    u: np.ndarray


@dataclass
class Trajectory:
    x: np.ndarray        # (N, 2) positions
    u: np.ndarray        # (N, 2) covectors, phi*(x, u) = 1
    s: np.ndarray        # (N,) arclength stamps
    reason: str          # "boundary-hit" or "length-cap"

    @property
    def length(self):
        return float(self.s[-1])

    @property
    def end(self):
        return self.x[-1]

    def states(self):
        return [PhaseState(x, u) for x, u in zip(self.x, self.u)]


def _rhs(metric, x, u, sign):
    d = metric.dual(x, u)
    xdot = d[:, None] * metric.dual_grad(x, u)
    dx = np.empty_like(x)
    for k in range(2):
        e = np.zeros(2)
        e[k] = X_STEP
        dx[:, k] = (metric.dual(x + e, u) - metric.dual(x - e, u)) / (2 * X_STEP)
    udot = -d[:, None] * dx
    return sign * xdot, sign * udot


def _rk4(metric, x, u, dt, sign):
    dt = np.asarray(dt, dtype=float).reshape(-1, 1)
    k1x, k1u = _rhs(metric, x, u, sign)
    k2x, k2u = _rhs(metric, x + 0.5 * dt * k1x, u + 0.5 * dt * k1u, sign)
    k3x, k3u = _rhs(metric, x + 0.5 * dt * k2x, u + 0.5 * dt * k2u, sign)
    k4x, k4u = _rhs(metric, x + dt * k3x, u + dt * k3u, sign)
    xn = x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
    un = u + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
    return xn, un


def _renorm(metric, x, u):
    return u / metric.dual(x, u)[:, None]


def hamiltonian(metric, x, u):
    return 0.5 * metric.dual(x, u) ** 2


def _bisect_exit(metric, x, u, step, sign, tol):
    """Sub-step in ``(0, step]`` at which ``|x| = 1``, for each row."""
    lo = np.zeros(len(x))
    hi = np.full(len(x), step)
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        xm, _ = _rk4(metric, x, u, mid, sign)
        out = np.hypot(xm[:, 0], xm[:, 1]) > 1.0
        hi = np.where(out, mid, hi)
        lo = np.where(out, lo, mid)
    tau = 0.5 * (lo + hi)
    xe, ue = _rk4(metric, x, u, tau, sign)
    # land exactly on the circle
    xe = xe / np.maximum(np.hypot(xe[:, 0], xe[:, 1]), 1.0)[:, None]
    return tau, xe, _renorm(metric, xe, ue)


def flow(metric, x0, u0, step=2e-3, max_length=10.0, backward=False, tol=1e-10):
    """Vectorised flow of many unit covectors until each leaves the disc.

    Returns ``(x_end, u_end, length, hit)``; ``hit`` is False for rows that
    reached ``max_length`` first.
    """
    x = np.array(x0, dtype=float).reshape(-1, 2)
    u = _renorm(metric, x, np.array(u0, dtype=float).reshape(-1, 2))
    sign = -1.0 if backward else 1.0
    n = len(x)
    length = np.zeros(n)
    done = np.zeros(n, dtype=bool)
    hit = np.zeros(n, dtype=bool)
    x_end = x.copy()
    u_end = u.copy()
    active = np.arange(n)
    while len(active):
        xa, ua = x[active], u[active]
        dt = np.minimum(step, max_length - length[active])
        xn, un = _rk4(metric, xa, ua, dt, sign)
        out = np.hypot(xn[:, 0], xn[:, 1]) > 1.0
        if np.any(out):
            rows = active[out]
            tau, xe, ue = _bisect_exit(metric, xa[out], ua[out], step, sign, tol)
            x_end[rows] = xe
            u_end[rows] = ue
            length[rows] += tau
            hit[rows] = True
            done[rows] = True
        keep = ~out
        rows = active[keep]
        x[rows] = xn[keep]
        u[rows] = _renorm(metric, xn[keep], un[keep])
        length[rows] += dt[keep]
        capped = rows[length[rows] >= max_length - 1e-15]
        x_end[capped] = x[capped]
        u_end[capped] = u[capped]
        done[capped] = True
        active = np.flatnonzero(~done)
    return x_end, u_end, length, hit


def shoot(metric, x, v, step=1e-3, max_length=10.0, backward=False) -> Trajectory:
    """Integrate the unit-speed geodesic with initial velocity ``v`` at ``x``.

    With ``backward=True`` the returned curve is traced in reverse time: it is
    the geodesic that ends at ``x`` with terminal velocity ``v``.
    """
    x = check_in_disc(x).reshape(1, 2)
    if np.hypot(*x[0]) >= 1.0:
        raise MetricError("shooting needs an interior start point")
    v = np.asarray(v, dtype=float).reshape(1, 2)
    if not np.any(v):
        raise MetricError("zero initial velocity")
    u = metric.legendre(x, v / metric.phi(x, v)[:, None])
    sign = -1.0 if backward else 1.0
    xs, us, ss = [x[0].copy()], [u[0].copy()], [0.0]
    s = 0.0
    reason = "length-cap"
    while s < max_length - 1e-15:
        dt = min(step, max_length - s)
        xn, un = _rk4(metric, x, u, dt, sign)
        if np.hypot(*xn[0]) > 1.0:
            tau, xe, ue = _bisect_exit(metric, x, u, step, sign, 1e-10)
            if tau[0] < 1e-14:
                raise ShootingError("step underflow at the boundary")
            s += float(tau[0])
            xs.append(xe[0])
            us.append(ue[0])
            ss.append(s)
            reason = "boundary-hit"
            break
        x, u = xn, _renorm(metric, xn, un)
        s += dt
        xs.append(x[0].copy())
        us.append(u[0].copy())
        ss.append(s)
    return Trajectory(x=np.array(xs), u=np.array(us), s=np.array(ss), reason=reason)


def hamiltonian_drift(metric, x, v, step=1e-3, max_length=10.0):
    """Largest ``|H(t) - 1/2|`` along a trajectory integrated *without* the
    per-step renormalisation (the conserved quantity check)."""
    x = check_in_disc(x).reshape(1, 2)
    v = np.asarray(v, dtype=float).reshape(1, 2)
    u = metric.legendre(x, v / metric.phi(x, v)[:, None])
    worst = 0.0
    s = 0.0
    while s < max_length:
        xn, un = _rk4(metric, x, u, step, 1.0)
        if np.hypot(*xn[0]) > 1.0:
            break
        x, u = xn, un
        s += step
        worst = max(worst, abs(float(hamiltonian(metric, x, u)[0]) - 0.5))
    return worst


# ---------------------------------------------------------------------------
# directions


def _wrap(a):
    return np.mod(a + np.pi, 2 * np.pi) - np.pi


def _dirs(metric, x, ang):
    e = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    return e / metric.phi(x, e)[:, None]


def _boundary_miss(metric, x, ang, target_ang, step, backward):
    v = _dirs(metric, x, ang)
    u = metric.legendre(x, v)
    xe, _, _, hit = flow(metric, x, u, step=step, backward=backward)
    return _wrap(np.arctan2(xe[:, 1], xe[:, 0]) - target_ang), hit


def aim_boundary(metric, x, target_angle, guess=None, backward=False, step=1e-2,
                 bracket=np.radians(10.0), tol=1e-8, max_iter=60):
    """Velocity angles at the points ``x`` whose geodesics reach the boundary
    point at ``target_angle`` (forward), or arrive from it (``backward``).

    Vectorised over rows.  Brackets around ``guess`` when given, otherwise a
    64-direction scan, then Illinois regula falsi on the angular miss.
    Returns ``(angles, converged)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = len(x)
    target = np.broadcast_to(np.asarray(target_angle, dtype=float), (n,)).copy()
    lo = np.zeros(n)
    hi = np.zeros(n)
    flo = np.zeros(n)
    fhi = np.zeros(n)
    found = np.zeros(n, dtype=bool)

    def miss(rows, ang):
        return _boundary_miss(metric, x[rows], ang, target[rows], step, backward)[0]

    def sign_change(fa, fb):
        return (np.sign(fa) != np.sign(fb)) & (np.abs(fa - fb) < np.pi)

    if guess is not None:
        g = np.broadcast_to(np.asarray(guess, dtype=float), (n,))
        rows = np.arange(n)
        a, b = g - bracket, g + bracket
        fa, fb = miss(rows, a), miss(rows, b)
        ok = sign_change(fa, fb)
        lo[ok], hi[ok], flo[ok], fhi[ok] = a[ok], b[ok], fa[ok], fb[ok]
        found |= ok
    rest = np.flatnonzero(~found)
    if len(rest):
        m = 64
        grid = 2 * np.pi * np.arange(m + 1) / m
        f = miss(np.repeat(rest, m + 1), np.tile(grid, len(rest))).reshape(len(rest), m + 1)
        for r, i in enumerate(rest):
            fr = f[r]
            cross = np.flatnonzero(sign_change(fr[:-1], fr[1:]))
            if len(cross):
                k = cross[np.argmin(np.abs(fr[cross]) + np.abs(fr[cross + 1]))]
                lo[i], hi[i], flo[i], fhi[i] = grid[k], grid[k + 1], fr[k], fr[k + 1]
                found[i] = True
    ang = 0.5 * (lo + hi)
    side = np.zeros(n)
    active = np.flatnonzero(found)
    for _ in range(max_iter):
        if not len(active):
            break
        a, b, fa, fb = lo[active], hi[active], flo[active], fhi[active]
        mid = (a * fb - b * fa) / (fb - fa)
        mid = np.clip(mid, np.minimum(a, b), np.maximum(a, b))
        fm = miss(active, mid)
        ang[active] = mid
        left = np.sign(fm) == np.sign(fa)
        sd = side[active]
        lo[active] = np.where(left, mid, a)
        flo[active] = np.where(left, fm, np.where(sd == -1, 0.5 * fa, fa))
        hi[active] = np.where(left, b, mid)
        fhi[active] = np.where(left, np.where(sd == 1, 0.5 * fb, fb), fm)
        side[active] = np.where(left, 1, -1)
        fin = (np.abs(fm) < tol) | (np.abs(hi[active] - lo[active]) < tol)
        active = active[~fin]
    return ang, found


def shooting_direction_from(metric, x, p, guess=None, step=1e-2):
    """Terminal unit velocities at ``x`` of geodesics from the boundary point
    ``p`` (the direction ``<-xp``), by backward shooting.  Vectorised over
    ``x``; returns ``(directions, converged)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    p = np.asarray(p, dtype=float)
    target = np.arctan2(p[..., 1], p[..., 0])
    g = None if guess is None else np.arctan2(guess[..., 1], guess[..., 0])
    ang, ok = aim_boundary(metric, x, target, guess=g, backward=True, step=step)
    return _dirs(metric, x, ang), ok


def shooting_direction_to(metric, x, q, guess=None, step=1e-2):
    """Initial unit velocities at ``x`` of geodesics reaching the boundary
    point ``q`` (the direction ``->xq``)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    q = np.asarray(q, dtype=float)
    target = np.arctan2(q[..., 1], q[..., 0])
    g = None if guess is None else np.arctan2(guess[..., 1], guess[..., 0])
    ang, ok = aim_boundary(metric, x, target, guess=g, backward=False, step=step)
    return _dirs(metric, x, ang), ok


def _unit(metric, x, v):
    return v / metric.phi(x, v)[..., None]


def direction_from(metric, mesh, x, p, refine=True):
    """``<-xp``: terminal unit velocity at vertex ``x`` of a shortest path
    from vertex ``p``.  Uses the gradient of ``d(p, .)`` and refines by
    shooting when ``p`` is a boundary vertex."""
    from .distance import forward_distance_field, gradient_field

    x, p = int(x), int(p)
    if x == p:
        raise MetricError("direction between coincident points")
    g = mesh.geometry
    cf = gradient_field(forward_distance_field(mesh, p), mesh)
    xp = g.points[x][None, :]
    u = cf.covectors[x][None, :]
    guess = _unit(metric, xp, metric.legendre_inv(xp, u)) if np.any(u) else None
    if refine and g.is_boundary[p] and not g.is_boundary[x]:
        d, ok = shooting_direction_from(metric, xp, g.points[p], guess=guess)
        if ok[0]:
            return d[0]
    if guess is None or not cf.reliable[x]:
        raise ShootingError("gradient undefined at this vertex and shooting did not converge")
    return guess[0]


def direction_to(metric, mesh, x, y, refine=True):
    """``->xy``: initial unit velocity at vertex ``x`` of a shortest path to
    vertex ``y``, from the gradient of ``d(., y)`` (``d_x = -L(->xy)``)."""
    from .distance import backward_distance_field, gradient_field

    x, y = int(x), int(y)
    if x == y:
        raise MetricError("direction between coincident points")
    g = mesh.geometry
    cf = gradient_field(backward_distance_field(mesh, y), mesh)
    xp = g.points[x][None, :]
    u = -cf.covectors[x][None, :]
    guess = _unit(metric, xp, metric.legendre_inv(xp, u)) if np.any(u) else None
    if refine and g.is_boundary[y] and not g.is_boundary[x]:
        d, ok = shooting_direction_to(metric, xp, g.points[y], guess=guess)
        if ok[0]:
            return d[0]
    if guess is None or not cf.reliable[x]:
        raise ShootingError("gradient undefined at this vertex and shooting did not converge")
    return guess[0]


# ---------------------------------------------------------------------------
# audit


@dataclass
class AuditReport:
    samples: int
    max_relative_excess: float
    flagged: int
    tolerance: float
    passed: bool
    worst: dict


def minimality_audit(metric, mesh, samples=48, seed=0, step=2e-3, tol=None) -> AuditReport:
    """Shoot geodesics from random interior vertices to the boundary and
    compare their length with the mesh distance between the endpoints.

    A geodesic is flagged when it is longer than the mesh distance by more
    than ``tol`` (default: four times the metrication tolerance plus the
    snapping error of the end point)."""
    from .distance import forward_distance_field, metrication_tolerance

    g = mesh.geometry
    rng = np.random.default_rng(seed)
    interior = np.flatnonzero(~g.is_boundary & (np.hypot(g.points[:, 0], g.points[:, 1]) < 0.9))
    starts = rng.choice(interior, size=samples, replace=len(interior) < samples)
    ang = rng.uniform(0, 2 * np.pi, samples)
    x0 = g.points[starts]
    v = _dirs(metric, x0, ang)
    xe, _, length, hit = flow(metric, x0, metric.legendre(x0, v), step=step)
    base_tol = 4 * metrication_tolerance(mesh) if tol is None else tol
    ring_ang = g.boundary_angles
    worst = {"excess": -np.inf}
    flagged = 0
    best = -np.inf
    for i in range(samples):
        if not hit[i]:
            continue
        a = np.arctan2(xe[i, 1], xe[i, 0]) % (2 * np.pi)
        k = int(np.argmin(np.abs(_wrap(ring_ang - a))))
        y = g.boundary[k]
        snap = float(np.hypot(*(g.points[y] - xe[i]))) * float(np.max(metric.phi(g.points[y], np.eye(2))) + 1)
        d = forward_distance_field(mesh, starts[i]).values[y]
        excess = (length[i] - d) / max(d, 1e-12)
        if length[i] > d + base_tol + snap:
            flagged += 1
        if excess > best:
            best = excess
            worst = {"start": x0[i].tolist(), "end": xe[i].tolist(), "geodesic_length": float(length[i]),
                     "mesh_distance": float(d), "excess": float(excess)}
    return AuditReport(samples=samples, max_relative_excess=float(best), flagged=flagged,
                       tolerance=base_tol, passed=flagged == 0, worst=worst)
