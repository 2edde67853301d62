import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import jn_zeros

from kahlerspec import catalog
from kahlerspec.kahler import ball_metric
from kahlerspec.spectrum import (
    RadialData,
    SpectralConfig,
    alpha_sweep,
    barrier_check,
    beta_check,
    dirichlet_lambda_truncated,
    dirichlet_sequence,
    graded_scheme,
    lambda0_report,
    rayleigh_quotient,
)


@given(st.integers(1, 3), st.floats(0.05, 1.5))
def test_quadrature_reproduces_beta_integrals(n, shift):
    assert beta_check(n, n / 2 + shift) <= 1e-10


@pytest.mark.parametrize("n", [2, 3])
def test_ball_quotient_is_n_alpha(n):
    data = RadialData.ball(n)
    for a in np.array([1.05, 1.1, 1.2, 1.4]) + n / 2 - 1:
        q = rayleigh_quotient(data, a)
        assert q.value == pytest.approx(n * a, abs=1e-3)
        assert q.err_est <= 1e-6


def test_from_metric_matches_closed_form():
    a = RadialData.ball(2)
    b = RadialData.from_metric(ball_metric(2), 2, name="ball")
    assert rayleigh_quotient(b, 1.3).value == pytest.approx(rayleigh_quotient(a, 1.3).value, rel=1e-6)


def test_sweep_limit_on_the_ball():
    sw = alpha_sweep(RadialData.ball(2), [1.4, 1.2, 1.1, 1.05])
    assert sw.limit == pytest.approx(2.0, abs=1e-2)
    assert sw.limit <= min(t.value for t in sw.table)


def test_sweep_input_validation():
    data = RadialData.ball(2)
    with pytest.raises(ValueError, match="exceed"):
        alpha_sweep(data, [1.2, 1.0])
    with pytest.raises(ValueError, match="decreasing"):
        alpha_sweep(data, [1.1, 1.2])
    with pytest.raises(ValueError, match="diverge"):
        rayleigh_quotient(data, 0.9)
    with pytest.raises(ValueError, match="different exponent"):
        rayleigh_quotient(data, 1.3, graded_scheme(0.1))


def test_ball_dirichlet_sequence():
    seq = dirichlet_sequence(RadialData.ball(2), [1e-1, 1e-2, 1e-3, 1e-4], grid=1025)
    vals = [d.value for d in seq.table]
    assert seq.monotone and all(np.diff(vals) < 0)
    assert all(v > 2 for v in vals)
    assert seq.limit == pytest.approx(2.0, abs=0.04)


def test_flat_disc_reproduces_bessel_zero():
    d = dirichlet_lambda_truncated(RadialData.flat_disc(1), 1e-12, grid=2049)
    assert d.value == pytest.approx(jn_zeros(0, 1)[0] ** 2, abs=1e-3)


@given(st.sampled_from([0.5, 2.0, 4.0]))
def test_scaling_the_metric_scales_eigenvalues(c):
    data = RadialData.ball(2)
    a = rayleigh_quotient(data, 1.2).value
    b = rayleigh_quotient(data.scaled(c), 1.2).value
    assert b == pytest.approx(a / c, rel=1e-10)


def test_scaled_dirichlet():
    data = RadialData.ball(2)
    a = dirichlet_lambda_truncated(data, 1e-2, grid=513).value
    b = dirichlet_lambda_truncated(data.scaled(2.0), 1e-2, grid=513).value
    assert b == pytest.approx(a / 2, rel=1e-10)


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
def test_barrier(eps):
    g, phi = ball_metric(2), catalog.ball_defining(2)
    ok = barrier_check(g, phi, 1.9, eps, samples=40)
    assert ok.passed and ok.witness is None
    bad = barrier_check(g, phi, 2.1, eps, samples=40)
    assert not bad.passed
    # exact bound -Delta f = n^2 (1 - t/2) f at the witness
    t = float(np.sum(np.abs(bad.witness) ** 2))
    assert bad.min_ratio == pytest.approx(4 * (1 - t / 2), rel=1e-8)
    assert bad.min_ratio < 2.1


def test_barrier_preconditions():
    g, phi = ball_metric(2), catalog.ball_defining(2)
    with pytest.raises(ValueError):
        barrier_check(g, phi, 2.0, 0.1)
    with pytest.raises(ValueError):
        barrier_check(g, phi, 1.9, 0.0)


def test_report_on_the_ball():
    rep = lambda0_report(RadialData.ball(2), SpectralConfig(grid=1025, webster_points=10))
    assert rep.verdict == "𝓡_θ ≥ 0, consistent with λ₀ = n²/2"
    assert rep.estimate == pytest.approx(2.0, abs=0.01)
    assert all(rep.invariants.values())
    assert rep.sweep_csv().startswith("alpha,Q_alpha,err_est\n")
    assert len(rep.dirichlet_csv().splitlines()) == 5


def test_report_flat_mode():
    rep = lambda0_report(RadialData.flat_disc(1), SpectralConfig(grid=1025))
    assert rep.mode == "flat-sanity"
    assert rep.verdict is None
    assert rep.estimate == pytest.approx(5.7832, abs=1e-3)


def test_report_on_the_perturbed_domain(perturbed_field):
    rep = lambda0_report(perturbed_field)
    assert rep.estimate == pytest.approx(2.0, abs=0.05)
    assert rep.webster_min > 0
    assert "consistent with λ₀ = n²/2" in rep.verdict
    assert all(rep.invariants.values())
