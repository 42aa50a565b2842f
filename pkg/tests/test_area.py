import numpy as np
import pytest
from scipy.special import gamma

from finslerfill.area import busemann_area, ht_area, santalo_product
from finslerfill.metric import MetricError

from conftest import metric

H = 0.04


def lp_ball_area(p):
    return 4 * gamma(1 + 1 / p) ** 2 / gamma(1 + 2 / p)


def test_euclidean_area():
    a = ht_area(metric("euclid"), H)
    assert a.value == pytest.approx(np.pi, rel=2e-3)
    assert float(a) == a.value


def test_hemisphere_area():
    assert ht_area(metric("hemi"), H).value == pytest.approx(2 * np.pi, rel=5e-3)


def test_minkowski_ht_and_busemann_against_gamma_oracle():
    m = metric("p4")
    # HT density of a constant norm is |B*|/pi, times the disc area pi
    assert ht_area(m, H).value == pytest.approx(lp_ball_area(4 / 3), rel=2e-3)
    assert busemann_area(m, H).value == pytest.approx(np.pi ** 2 / lp_ball_area(4), rel=2e-3)


def test_randers_area_equals_euclidean():
    # a constant drift shifts the co-ball without changing its area
    assert ht_area(metric("randers"), H).value == pytest.approx(ht_area(metric("euclid"), H).value, rel=1e-6)


def test_scaling_quadruples_area():
    assert ht_area(metric("scaled"), H).value == pytest.approx(2.25 * ht_area(metric("euclid"), H).value, rel=1e-9)


def test_busemann_rejects_nonreversible():
    with pytest.raises(MetricError):
        busemann_area(metric("randers"), H)


def test_area_error_estimate_is_small_and_positive():
    a = ht_area(metric("hemi"), H)
    assert 0 < a.error < 0.05


def test_santalo_bound_and_equality():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.6, 0.6, (20, 2))
    assert np.all(santalo_product(metric("p4"), pts) <= np.pi ** 2 + 1e-4)
    np.testing.assert_allclose(santalo_product(metric("euclid"), pts), np.pi ** 2, atol=1e-4)


def test_too_few_polygon_vertices():
    with pytest.raises(ValueError):
        ht_area(metric("euclid"), H, m=4)
