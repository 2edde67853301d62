import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kahlerspec import catalog
from kahlerspec.crboundary import (
    YamabeQuotientInput,
    ball_webster_survey,
    boundary_report,
    calabi_chart_ricci_check,
    circle_bundle_webster,
    contact_form,
    cr_yamabe_quotient,
    disc_model_metric,
    field_webster_survey,
    reeb_closed_form,
    reinhardt_boundary_input,
    webster_scalar_einstein,
)
from kahlerspec.kahler import MetricError, potential_metric
from kahlerspec.reinhardt import ReinhardtDomain
from kahlerspec.wirtinger import ScalarField

sphere_point = st.tuples(*[st.floats(-1, 1)] * 6).filter(lambda x: np.linalg.norm(x) > 0.1)


def to_sphere(x, n):
    z = np.array(x[:n]) + 1j * np.array(x[n : 2 * n])
    return z / np.linalg.norm(z)


@given(sphere_point, st.sampled_from([2, 3]))
def test_frame_invariants(x, n):
    p = to_sphere(x + x, n)
    fr = contact_form(catalog.ball_defining(n), p)
    assert max(fr.defects.values()) <= 1e-10
    assert np.allclose(fr.levi_eigenvalues, 1.0)
    assert np.allclose(fr.reeb, reeb_closed_form(catalog.ball_defining(n), p), atol=1e-12)


def test_levi_form_and_scaling():
    p = np.array([1.0, 0.0])
    fr = contact_form(catalog.ball_defining(2), p)
    assert np.allclose(fr.levi, [[1.0]])
    fr2 = contact_form(catalog.ball_defining(2, scale=2.0), p)
    assert np.allclose(fr2.theta, 2 * fr.theta)
    assert np.allclose(fr2.levi, 2 * fr.levi)
    assert np.allclose(fr2.reeb, fr.reeb / 2)


def test_frame_refusals():
    with pytest.raises(MetricError, match="not on the boundary"):
        contact_form(catalog.ball_defining(2), [0.5, 0.0])
    concave = ScalarField(lambda z: 1.0 - (z[0].real ** 2 + z[0].imag ** 2 + z[1].real ** 2 + z[1].imag ** 2), 2)
    with pytest.raises(MetricError, match="Levi form"):
        contact_form(concave, [1.0, 0.0])


@pytest.mark.parametrize("n,value", [(2, 2.0), (3, 6.0)])
def test_sphere_webster(n, value):
    survey = ball_webster_survey(n, count=20)
    assert survey["min_webster"] == pytest.approx(value, abs=1e-8)
    assert survey["max_webster"] == pytest.approx(value, abs=1e-8)
    assert survey["verdict"] == "nonnegative"


def test_webster_refuses_when_J_differs():
    with pytest.raises(MetricError, match="Einstein formula"):
        webster_scalar_einstein(catalog.ball_defining(2, scale=2.0), [1.0, 0.0])
    with pytest.raises(MetricError, match="Einstein formula"):
        boundary_report(catalog.ball_defining(2, scale=2.0), [[1.0, 0.0]])


def test_boundary_report_records():
    rep = boundary_report(catalog.ball_defining(2), [[1.0, 0.0], [0.6, 0.8j]])
    assert len(rep["points"]) == 2
    assert all(r["J_value"] == pytest.approx(1.0) for r in rep["points"])
    assert rep["summary"]["verdict"] == "nonnegative"


def test_field_survey(perturbed_field):
    s = field_webster_survey(perturbed_field)
    assert not s["constant"]
    assert s["min_webster"] > 0 and s["verdict"] == "nonnegative"
    assert s["max_J_defect"] <= 1e-2


@pytest.mark.parametrize("dim", [2, 3])
def test_circle_bundle_webster(dim):
    w = circle_bundle_webster(disc_model_metric(dim), np.full(dim, 0.2 + 0.1j))
    assert w.scalar == pytest.approx(-dim * (dim + 1), abs=1e-8)
    assert w.einstein and w.flag == ""


def test_circle_bundle_flags_non_einstein():
    a, b = catalog.norm_sq(2), catalog.norm_fourth(2)
    g = potential_metric(ScalarField(lambda z: a.func(z) + b.func(z), 2), "test")
    w = circle_bundle_webster(g, [0.3, 0.1j])
    assert not w.einstein and w.flag == "non-Einstein base"


@pytest.mark.parametrize("n,zeta,w", [(2, [0.0], 0.5), (2, [0.4j], 0.0), (3, [0.2, -0.3j], 0.4 + 0.2j)])
def test_calabi_chart_is_einstein(n, zeta, w):
    res, scale = calabi_chart_ricci_check(n, zeta, w, with_scale=True)
    assert np.max(np.abs(res)) <= 1e-10 * scale


def test_calabi_fiber_rotation():
    a, scale = calabi_chart_ricci_check(2, [0.3], 0.5, with_scale=True)
    b = calabi_chart_ricci_check(2, [0.3], 0.5 * np.exp(0.7j))
    assert np.max(np.abs(a - b)) <= 1e-10 * scale


def test_calabi_chart_region():
    with pytest.raises(MetricError):
        calabi_chart_ricci_check(2, [0.6], 0.9)
    with pytest.raises(ValueError):
        calabi_chart_ricci_check(3, [0.1], 0.1)


@pytest.fixture(scope="module")
def sphere_input():
    return reinhardt_boundary_input(catalog.ball_defining(2), ReinhardtDomain.ball(2), catalog.constant(2), sigma_nodes=12, angles=8)


def test_yamabe_sphere_constant(sphere_input):
    assert np.sum(sphere_input.weights) == pytest.approx(4 * np.pi**2, rel=1e-10)
    assert cr_yamabe_quotient(sphere_input) == pytest.approx(np.pi, rel=1e-10)


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_yamabe_scale_invariance(sphere_input, c):
    assert cr_yamabe_quotient(sphere_input.scaled(c)) == pytest.approx(cr_yamabe_quotient(sphere_input), rel=1e-12)


def test_yamabe_nonconstant_is_above_sphere_value():
    f = ScalarField(lambda z: 2.0 + z[0].real, 2)
    inp = reinhardt_boundary_input(catalog.ball_defining(2), ReinhardtDomain.ball(2), f, sigma_nodes=16, angles=16)
    q = cr_yamabe_quotient(inp)
    assert np.isfinite(q) and q >= np.pi - 1e-8


def test_yamabe_input_errors(sphere_input):
    s = sphere_input
    with pytest.raises(ValueError, match="positive"):
        cr_yamabe_quotient(YamabeQuotientInput(s.weights, -s.f, s.grad_h_sq, s.webster, 1))
    with pytest.raises(ValueError, match="Webster"):
        cr_yamabe_quotient(YamabeQuotientInput(s.weights, s.f, s.grad_h_sq, None, 1))
    with pytest.raises(ValueError, match="weights"):
        cr_yamabe_quotient(YamabeQuotientInput(0 * s.weights, s.f, s.grad_h_sq, s.webster, 1))
