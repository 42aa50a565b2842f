import numpy as np
import pytest

from finslerfill.metric import FinslerMetric, MetricError
from finslerfill.pu import (Rp2Model, four_case_pair, pu_check, round_boundary_I, systole_rp2,
                            verify_pu_hypotheses)

from conftest import mesh, metric

H = 0.04


class _Tilted(FinslerMetric):
    """Reversible but not invariant under x -> -x."""
    family = "tilted"
    reversible = True

    def phi(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        return (1.0 + 0.3 * x[..., 0]) * np.hypot(v[..., 0], v[..., 1])


@pytest.mark.parametrize("n", [3, 4, 5, 8, 17, 64])
def test_round_boundary_I_closed_form(n):
    closed, numeric = round_boundary_I(n)
    assert closed == pytest.approx(2 * np.pi * (1 - 2 / n))
    assert numeric == pytest.approx(closed, abs=1e-9)


def test_round_boundary_I_full_range():
    for n in range(3, 129):
        assert abs(round_boundary_I(n)[1] - 2 * np.pi * (1 - 2 / n)) < 1e-6


def test_round_boundary_I_needs_three():
    with pytest.raises(ValueError):
        round_boundary_I(2)


def test_four_case_pair_is_arc_distance():
    n = 6
    t = np.linspace(0, 2 * np.pi, 97)
    x, y = four_case_pair(t, n)
    arc = lambda s: np.minimum(np.mod(s, 2 * np.pi), 2 * np.pi - np.mod(s, 2 * np.pi))
    np.testing.assert_allclose(x, arc(t), atol=1e-12)
    np.testing.assert_allclose(y, arc(t - 2 * np.pi / n), atol=1e-12)


def test_model_rejects_nonreversible_and_mismatched_metrics():
    with pytest.raises(MetricError):
        Rp2Model(metric("randers"))
    with pytest.raises(MetricError):
        Rp2Model(_Tilted())


def test_sigma_is_antipodal():
    m = Rp2Model(metric("hemi"))
    assert m.sigma(0.5) == pytest.approx(0.5 + np.pi)
    assert m.sigma(m.sigma(1.0)) == pytest.approx(1.0)


def test_hemisphere_satisfies_hypotheses():
    rep = verify_pu_hypotheses(metric("hemi"), mesh("hemi", H))
    assert rep.passed
    assert rep.boundary_length == pytest.approx(2 * np.pi, rel=1e-10)


def test_euclidean_disc_fails_arc_hypothesis():
    rep = verify_pu_hypotheses(metric("euclid"), mesh("euclid", H))
    assert not rep.passed
    # chords are shorter than arcs: antipodal distance 2 instead of pi
    assert rep.antipodal_error == pytest.approx(np.pi - 2, abs=0.05)


def test_round_systole_is_pi():
    m = mesh("hemi", H)
    s = systole_rp2(Rp2Model(m.metric), m)
    assert s.length == pytest.approx(np.pi, rel=0.02)
    assert s.sources == m.geometry.n_boundary // 8


def test_euclidean_systole_is_diameter():
    m = mesh("euclid", H)
    s = systole_rp2(Rp2Model(m.metric), m)
    assert s.length == pytest.approx(2.0, abs=2 * 2 * H / 3)


def test_pu_ratio_round_and_euclidean():
    m = mesh("hemi", H)
    rep = pu_check(Rp2Model(m.metric), m)
    assert rep.passed and rep.ratio == pytest.approx(1.0, abs=0.03)
    e = mesh("euclid", H)
    rep = pu_check(Rp2Model(e.metric), e, hypotheses=False)
    assert rep.ratio == pytest.approx(np.pi ** 2 / 8, rel=0.02)
    assert rep.hypotheses == {}


def test_pu_ratio_scale_invariant():
    a = pu_check(Rp2Model(metric("hemi")), mesh("hemi", H))
    b = pu_check(Rp2Model(metric("hemi2")), mesh("hemi2", H))
    assert b.ratio == pytest.approx(a.ratio, rel=1e-6)
    assert b.systole == pytest.approx(2 * a.systole, rel=1e-6)


def test_systole_rejects_foreign_mesh():
    with pytest.raises(ValueError):
        systole_rp2(Rp2Model(metric("hemi")), mesh("euclid", H))
