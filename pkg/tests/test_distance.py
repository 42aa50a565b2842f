import numpy as np
import pytest

from finslerfill import _pykernels
from finslerfill.distance import (_solve, backward_distance_field, boundary_arclength, boundary_distance_matrix,
                                  boundary_samples, check_forward_lipschitz, forward_distance_field,
                                  gradient_field, metrication_tolerance, triangle_violation)

from conftest import mesh

H = 0.02


def _far_from(m, v, r=0.05):
    g = m.geometry
    return np.hypot(*(g.points - g.points[v]).T) > r


def test_tolerance_default():
    assert metrication_tolerance(mesh("euclid", H)) == pytest.approx(2 * H / 3)


@pytest.mark.parametrize("name,exact", [
    ("euclid", lambda d: np.hypot(*d.T)),
    ("randers", lambda d: np.hypot(*d.T) + 0.3 * d[:, 0]),
    ("p4", lambda d: (d[:, 0] ** 4 + d[:, 1] ** 4) ** 0.25),
    ("scaled", lambda d: 1.5 * np.hypot(*d.T)),
])
def test_constant_norm_fields_are_straight_line_distances(name, exact):
    m = mesh(name, H)
    g = m.geometry
    s = g.nearest_vertex([0.3, -0.4])
    f = forward_distance_field(m, s).values
    err = np.abs(f - exact(g.points - g.points[s]))
    assert err.max() <= metrication_tolerance(m)


def test_randers_backward_field_reverses_drift():
    m = mesh("randers", H)
    g = m.geometry
    t = g.nearest_vertex([-0.2, 0.1])
    b = backward_distance_field(m, t).values
    d = g.points[t] - g.points
    exact = np.hypot(*d.T) + 0.3 * d[:, 0]
    assert np.abs(b - exact).max() <= metrication_tolerance(m)


def test_hemisphere_radial_and_antipodal_distances():
    m = mesh("hemi", H)
    g = m.geometry
    c = g.nearest_vertex([0.0, 0.0])
    f = forward_distance_field(m, c).values
    r = np.hypot(*g.points.T)
    assert np.abs(f - 2 * np.arctan(r)).max() <= metrication_tolerance(m)
    p = g.boundary[0]
    q = g.antipode()[p]
    assert forward_distance_field(m, p).values[q] == pytest.approx(np.pi, abs=metrication_tolerance(m))


def test_boundary_matrix_properties():
    m = mesh("randers", H)
    bd, ring = boundary_distance_matrix(m, 12)
    assert bd.shape == (12, 12)
    assert np.all(np.diag(bd) == 0)
    assert triangle_violation(bd) <= metrication_tolerance(m)
    # the drift makes the matrix asymmetric
    assert np.max(np.abs(bd - bd.T)) > 0.1
    assert len(np.unique(ring)) == 12


def test_boundary_matrix_needs_three_points():
    with pytest.raises(ValueError):
        boundary_distance_matrix(mesh("euclid", H), 2)


def test_boundary_samples_equal_arclength():
    m = mesh("hemi", H)
    ring = boundary_samples(m, 8)
    cum, total = boundary_arclength(m.metric, m.geometry.boundary_angles)
    assert total == pytest.approx(2 * np.pi, rel=1e-10)
    gaps = np.diff(np.append(cum[ring], total))
    np.testing.assert_allclose(gaps, total / 8, atol=2 * H)


def test_boundary_samples_too_many():
    with pytest.raises(ValueError):
        boundary_samples(mesh("euclid", 0.1), 500)


def test_randers_boundary_length_is_euclidean():
    # the drift integrates to zero around a closed loop
    _, total = boundary_arclength(mesh("randers", H).metric, np.linspace(0, 2 * np.pi, 50, endpoint=False))
    assert total == pytest.approx(2 * np.pi, rel=1e-12)


@pytest.mark.parametrize("name", ["euclid", "randers", "hemi", "p4"])
def test_distance_fields_are_forward_lipschitz(name):
    m = mesh(name, H)
    f = forward_distance_field(m, m.geometry.boundary[5])
    assert check_forward_lipschitz(f, m).passed


def test_lipschitz_check_catches_violation():
    m = mesh("euclid", H)
    f = forward_distance_field(m, m.geometry.boundary[0]).values * 1.5
    rep = check_forward_lipschitz(f, m)
    assert not rep.passed and rep.n_violations > 0


def test_graph_method_overestimates_stencil():
    m = mesh("euclid", H)
    s = m.geometry.boundary[0]
    st = forward_distance_field(m, s).values
    gr = forward_distance_field(m, s, method="graph").values
    assert np.all(gr >= st - 1e-12)


def test_unknown_method():
    with pytest.raises(ValueError):
        forward_distance_field(mesh("euclid", H), 0, method="fmm")


@pytest.mark.parametrize("name", ["euclid", "randers", "p4"])
def test_gradients_have_unit_dual_norm(name):
    m = mesh(name, H)
    g = m.geometry
    s = g.boundary[3]
    cf = gradient_field(forward_distance_field(m, s), m)
    ok = cf.reliable & _far_from(m, s)
    assert ok.mean() > 0.8
    nrm = m.metric.dual(g.points[ok], cf.covectors[ok])
    assert np.percentile(np.abs(nrm - 1), 99) < 0.02


def test_euclidean_gradient_points_away_from_source():
    m = mesh("euclid", H)
    g = m.geometry
    s = g.boundary[0]
    cf = gradient_field(forward_distance_field(m, s), m)
    ok = cf.reliable & _far_from(m, s, 0.2)
    d = g.points[ok] - g.points[s]
    d /= np.hypot(*d.T)[:, None]
    ang = np.degrees(np.arccos(np.clip(np.sum(d * cf.covectors[ok], axis=1) / np.hypot(*cf.covectors[ok].T), -1, 1)))
    assert np.percentile(ang, 99) < 2.0


def test_field_cache_returns_same_object():
    m = mesh("euclid", H)
    assert forward_distance_field(m, 7) is forward_distance_field(m, 7)


@pytest.mark.parametrize("backward", [False, True])
def test_python_and_compiled_solvers_agree(monkeypatch, backward):
    from finslerfill import _backend, distance
    m = mesh("randers", 0.05)
    s = m.geometry.boundary[2]
    a = _solve(m, [s], [0.0], backward, "stencil")
    monkeypatch.setattr(distance._backend, "solve_field", _pykernels.solve_field)
    b = _solve(m, [s], [0.0], backward, "stencil")
    c = _solve(m, [s, 0], [0.0, 0.2], backward, "stencil")
    monkeypatch.setattr(distance._backend, "solve_field", _backend.kernels.solve_field)
    d = _solve(m, [s, 0], [0.0, 0.2], backward, "stencil")
    np.testing.assert_allclose(a, b, atol=1e-12)
    np.testing.assert_allclose(c, d, atol=1e-12)
