"""End-to-end acceptance checks at production resolution.

Each test records a one-line PASS/FAIL summary that is printed at the end
of the run, then asserts."""
import time

import numpy as np
import pytest

from finslerfill.area import busemann_area, ht_area, santalo_product
from finslerfill.certificates import (boundary_matrix_between, distance_cyclic_map, estimate_I, lower_bound,
                                      maximum_alignment, transplant_fields, verify_filling)
from finslerfill.cyclic import bracket_identity_suite, check_cyclic, enumerate_six_points
from finslerfill.distance import (boundary_samples, check_forward_lipschitz, forward_distance_field,
                                  gradient_field, metrication_tolerance)
from finslerfill.geodesic import shooting_direction_from
from finslerfill.pu import Rp2Model, pu_check, round_boundary_I

from conftest import mesh, metric, record

pytestmark = pytest.mark.slow

H = 0.01
SUITE = ("euclid", "hemi", "randers", "p4")


# ---------------------------------------------------------------------------
# shared expensive results


_MAPS = {}


def _map_estimates(name):
    """I estimates for n = 8, 16, 32 with the Richardson term from the 2h mesh."""
    if name not in _MAPS:
        fine, coarse = mesh(name, H), mesh(name, 2 * H)
        m = fine.metric
        rows = {}
        for n in (8, 16, 32):
            data = distance_cyclic_map(m, fine, n)
            cdata = distance_cyclic_map(coarse.metric, coarse, n)
            rows[n] = (estimate_I(data, cdata), data)
        _MAPS[name] = (rows, ht_area(m, fine))
    return _MAPS[name]


_VERIFY = {}


def _verify(ref, target, n):
    key = (ref, target, n)
    if key not in _VERIFY:
        t0 = time.perf_counter()
        out = verify_filling(metric(ref), metric(target), h=H, n=n, mesh0=mesh(ref, H), mesh=mesh(target, H))
        _VERIFY[key] = out + (time.perf_counter() - t0,)
    return _VERIFY[key]


# ---------------------------------------------------------------------------


def test_round_boundary_formula():
    t0 = time.perf_counter()
    worst = 0.0
    for n in (3, 4, 8, 16, 64, 128):
        closed, numeric = round_boundary_I(n)
        worst = max(worst, abs(numeric - 2 * np.pi * (1 - 2 / n)), abs(closed - 2 * np.pi * (1 - 2 / n)))
    n4 = round_boundary_I(4)[1]
    n100 = round_boundary_I(100)[1]
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and abs(n4 - np.pi) <= 1e-6 and abs(n100 - 6.157522) <= 1e-6 and dt < 1.0
    record(1, ok, f"max error {worst:.2e}, n=4 {n4:.7f}, n=100 {n100:.7f}, {dt:.2f} s")
    assert ok


def test_ht_area_values():
    expect = {"euclid": (np.pi, 0.005), "hemi": (2 * np.pi, 0.01), "p4": (2.54163, 0.005)}
    parts = []
    ok = True
    for name, (val, rel) in expect.items():
        t0 = time.perf_counter()
        a = ht_area(metric(name), mesh(name, H), m=512)
        dt = time.perf_counter() - t0
        good = abs(a.value - val) <= rel * val and dt < 10.0
        ok &= good
        parts.append(f"{name} {a.value:.5f} ({dt:.1f} s)")
    record(2, ok, ", ".join(parts))
    assert ok


def test_distance_maps_below_area():
    parts = []
    ok = True
    for name in SUITE:
        rows, area = _map_estimates(name)
        for n, (est, _) in rows.items():
            good = est.I_interior <= area.value + est.error_bar
            ok &= good
        parts.append(f"{name} I32={rows[32][0].I_interior:.4f}/ht={area.value:.4f}")
    record(3, ok, "; ".join(parts))
    assert ok


def test_convergence_to_area():
    parts = []
    ok = True
    for name in ("euclid", "hemi"):
        msh = mesh(name, H)
        t0 = time.perf_counter()
        res = lower_bound(msh.metric, msh, schedule=(4, 8, 16, 32, 64))
        dt = time.perf_counter() - t0
        last = res.table[-1]
        frac = last.I_interior / res.certificate.ht_area
        good = res.monotone and last.n == 64 and frac >= 0.95 and dt < 300
        ok &= good
        parts.append(f"{name} n=64 I={last.I_interior:.4f} ({frac:.1%} of ht), monotone={res.monotone}, {dt:.0f} s")
    record(4, ok, "; ".join(parts))
    assert ok


def test_boundary_and_interior_agree():
    parts = []
    ok = True
    for name in SUITE:
        est = _map_estimates(name)[0][16][0]
        gap = abs(est.I_boundary - est.I_interior)
        ok &= gap <= est.error_bar
        parts.append(f"{name} {gap:.4f}<={est.error_bar:.4f}")
    record(5, ok, "n=16: " + ", ".join(parts))
    assert ok


def test_transplant_properties():
    parts = []
    ok = True
    for target in ("scaled", "bubble"):
        cert, rep, tr, _ = _verify("euclid", target, 16)
        msh = mesh(target, H)
        tol = metrication_tolerance(mesh("euclid", H)) + metrication_tolerance(msh)
        agree = rep["boundary_agreement"] <= 2 * tol
        lip = max(check_forward_lipschitz(f, msh).max_violation for f in tr.data.fields)
        cyc = check_cyclic(msh.metric, tr.data)
        good = agree and lip <= 1e-9 and rep["hypothesis"]["holds"] and cyc.violation_fraction < 0.01
        ok &= good
        parts.append(f"E->{target}: agreement {rep['boundary_agreement']:.2e}, lipschitz {lip:.1e}, "
                     f"cyclic {cyc.violation_fraction:.2%}")
    # self-transplant reproduces the distance fields
    e = mesh("euclid", H)
    ring = boundary_samples(e, 16)
    bd0 = boundary_matrix_between(e, ring, np.arange(e.geometry.n_boundary))
    tr = transplant_fields(bd0, e.metric, e, ring)
    diff = max(float(np.max(np.abs(tr.data.fields[i] - forward_distance_field(e, e.boundary[r]).values)))
               for i, r in enumerate(ring))
    align = maximum_alignment(tr, e.metric)
    good = diff <= 2 * metrication_tolerance(e)
    ok &= good
    parts.append(f"E->E max|f_p - d(p,.)| {diff:.2e}, alignment {align:.2%}")
    record(6, ok, "; ".join(parts))
    assert ok


def test_verify_verdicts():
    parts = []
    ok = True
    for target in ("scaled", "bubble"):
        cert, rep, _, dt = _verify("euclid", target, 16)
        ok &= cert.verdict == "bound-holds"
        parts.append(f"E/{target} {cert.verdict} bound {cert.bound:.3f}<=ht {cert.ht_area:.3f} ({dt:.0f} s)")
    cert, rep, _, dt = _verify("hemi", "hemi", 64)
    rel_I = abs(cert.I - cert.ht_area) / cert.ht_area
    rel_bound = abs(cert.bound - cert.ht_area) / cert.ht_area
    ok &= rel_I <= 0.05 and cert.verdict == "bound-holds"
    parts.append(f"H/H I {cert.I:.4f} vs ht {cert.ht_area:.4f} ({rel_I:.2%}), certified bound "
                 f"{cert.bound:.4f} ({rel_bound:.2%}), {cert.verdict}")
    record(7, ok, "; ".join(parts))
    assert ok


def test_bracket_identities_and_enumeration():
    rep = bracket_identity_suite(trials=100_000, seed=0)
    en = enumerate_six_points()
    ok = rep.total_failures == 0 and rep.trials >= 99_990 and en.arrangements == 120 and not en.counterexamples
    record(8, ok, f"{rep.trials} quadruples, {rep.total_failures} failures; "
                  f"{en.satisfying}/{en.arrangements} arrangements, {len(en.counterexamples)} counterexamples")
    assert ok


def test_gradient_matches_shooting():
    parts = []
    ok = True
    for name in ("euclid", "hemi"):
        msh = mesh(name, H)
        g = msh.geometry
        m = msh.metric
        good = total = 0
        for k in (0, g.n_boundary // 3):
            p = g.boundary[k]
            cf = gradient_field(forward_distance_field(msh, p), msh)
            # the field is singular at its source
            away = np.hypot(*(g.points - g.points[p]).T) > 5 * H
            v = np.random.default_rng(k).choice(np.flatnonzero(cf.reliable & away), 750, replace=False)
            x = g.points[v]
            guess = m.legendre_inv(x, cf.covectors[v])
            d, conv = shooting_direction_from(m, x, g.points[p], guess=guess)
            c = np.sum(d * guess, axis=1) / (np.hypot(*d.T) * np.hypot(*guess.T))
            ang = np.degrees(np.arccos(np.clip(c, -1, 1)))
            good += int(np.sum(conv & (ang < 2.0)))
            total += len(v)
        frac = good / total
        ok &= frac > 0.99
        parts.append(f"{name} {frac:.2%} of {total} within 2 deg")
    record(9, ok, ", ".join(parts))
    assert ok


def test_pu_ratios():
    reps = {}
    for name in ("hemi", "hemi2", "pinched"):
        msh = mesh(name, H)
        reps[name] = pu_check(Rp2Model(msh.metric), msh)
    r = reps["hemi"].ratio
    same = abs(reps["hemi2"].ratio - r) <= 1e-6 * r
    ok = abs(r - 1) <= 0.03 and same and reps["pinched"].ratio > 1
    record(10, ok, f"round {r:.5f}, scaled {reps['hemi2'].ratio:.5f}, pinched {reps['pinched'].ratio:.4f}")
    assert ok


def test_santalo_and_busemann():
    rng = np.random.default_rng(0)
    r = np.sqrt(rng.uniform(0, 0.9, 100))
    t = rng.uniform(0, 2 * np.pi, 100)
    pts = np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)
    worst = -np.inf
    for name in ("p4", "hemi", "bubble", "pinched", "scaled"):
        worst = max(worst, float(np.max(santalo_product(metric(name), pts))))
    eq = float(np.max(np.abs(santalo_product(metric("euclid"), pts) - np.pi ** 2)))
    gaps = []
    for name in ("euclid", "hemi", "p4", "bubble", "pinched"):
        gaps.append(busemann_area(metric(name), 2 * H).value - ht_area(metric(name), 2 * H).value)
    ok = worst <= np.pi ** 2 + 1e-4 and eq <= 1e-4 and min(gaps) >= -1e-12
    record(11, ok, f"max product {worst:.6f} (pi^2 {np.pi ** 2:.6f}), euclid deviation {eq:.1e}, "
                   f"min busemann-ht {min(gaps):.2e}")
    assert ok
