import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kahlerspec import catalog
from kahlerspec.kahler import (
    MetricError,
    ach_deviation,
    ball_metric,
    bisectional_ratio,
    curvature_tensor,
    defining_metric,
    flat_metric,
    gradient_norm_sq,
    hessian_data,
    laplace_beltrami,
    level_set_second_fundamental_form,
    metric_det,
    metric_from_defining,
    metric_inverse_closed_form,
    potential_metric,
    raised_gradient_defect,
    ricci,
    ricci_explicit_defining,
)
from kahlerspec.wirtinger import ScalarField


def ball_point(n, t, rng):
    d = rng.normal(size=n) + 1j * rng.normal(size=n)
    return math.sqrt(t) * d / np.linalg.norm(d)


# frozen hand-computed values
def test_defining_metric_values():
    phi = catalog.ball_defining(2)
    assert np.allclose(metric_from_defining(phi, [0, 0]).g, np.eye(2), atol=1e-14)
    assert metric_from_defining(catalog.ball_defining(1), [0.5]).g[0, 0] == pytest.approx(16 / 9, rel=1e-13)
    g1 = metric_from_defining(phi, [0.3, 0.2j]).g
    g2 = metric_from_defining(catalog.ball_defining(2, scale=2.0), [0.3, 0.2j]).g
    assert np.allclose(g1, g2, atol=1e-13)


def test_closed_form_inverse_and_det_on_the_ball():
    phi = catalog.ball_defining(2)
    h = hessian_data(phi, [0.5, 0])
    inv = metric_inverse_closed_form(h, phi([0.5, 0]))
    assert np.allclose(inv, np.diag([0.5625, 0.75]), atol=1e-14)
    assert metric_det(hessian_data(phi, [0, 0]), -1.0) == pytest.approx(1.0)
    p1 = catalog.ball_defining(1)
    assert metric_det(hessian_data(p1, [0.5]), p1([0.5])) == pytest.approx(16 / 9, rel=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_closed_forms_match_linear_algebra(n, rng):
    for _ in range(20):
        phi, z = catalog.random_psh_quadratic(n, rng)
        m = metric_from_defining(phi, z)
        h = hessian_data(phi, z)
        scale = np.max(np.abs(m.ginv))
        assert np.max(np.abs(metric_inverse_closed_form(h, phi(z)) - m.ginv)) <= 1e-10 * scale
        assert metric_det(h, phi(z)) == pytest.approx(m.det, rel=1e-10)
        assert raised_gradient_defect(h, phi(z)) <= 1e-10 * max(1.0, scale)


def test_det_is_invariant_under_scaling_phi(rng):
    phi, z = catalog.random_psh_quadratic(2, rng)
    two = ScalarField(lambda x: 2.0 * phi.func(x), 2, name="2phi")
    a = metric_det(hessian_data(phi, z), phi(z))
    b = metric_det(hessian_data(two, z), two(z))
    assert a == pytest.approx(b, rel=1e-12)


def test_metric_jet_invariants(rng):
    m = ball_metric(3)(ball_point(3, 0.6, rng))
    assert m.identity_defect() <= 1e-10
    assert m.det == pytest.approx(np.prod(np.linalg.eigvalsh(m.g)), rel=1e-10)


def test_outside_point_is_refused():
    with pytest.raises(MetricError):
        metric_from_defining(catalog.ball_defining(2), [1.0, 0.5])


def test_laplacian_examples(rng):
    for n in (1, 2, 3):
        z = rng.normal(size=n) + 1j * rng.normal(size=n)
        assert laplace_beltrami(catalog.norm_sq(n), flat_metric(n)(z)) == pytest.approx(2 * n)
        assert laplace_beltrami(catalog.constant(n), ball_metric(n)(z * 0.1)) == pytest.approx(0.0, abs=1e-14)
    alpha = 1.3
    f = catalog.ball_power(2, alpha)
    for t in (0.0, 0.3, 0.8):
        z = ball_point(2, t, rng)
        want = 2 * alpha * (alpha * t - 2) * (1 - t) ** alpha
        assert laplace_beltrami(f, ball_metric(2)(z)) == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_laplacian_boundary_asymptotics(rng):
    n, alpha = 2, 1.3
    f = catalog.ball_power(n, alpha)
    cs = []
    for depth in (1e-1, 1e-2, 1e-3):
        z = ball_point(n, 1 - depth, rng)
        ratio = laplace_beltrami(f, ball_metric(n)(z)) / (2 * alpha * (alpha - n) * depth**alpha)
        cs.append(abs(ratio - 1) / depth)
    # exact: ratio - 1 = alpha (1 - t) / (n - alpha)
    assert np.allclose(cs, alpha / (n - alpha), rtol=1e-6)


def test_gradient_norm_examples(rng):
    z = ball_point(2, 0.37, rng)
    assert gradient_norm_sq(catalog.ball_potential(2), ball_metric(2)(z)) == pytest.approx(0.37, rel=1e-12)
    assert gradient_norm_sq(catalog.constant(2), ball_metric(2)(z)) == pytest.approx(0.0, abs=1e-15)
    assert gradient_norm_sq(catalog.re_z1(2), flat_metric(2)(z)) == pytest.approx(0.25)


def test_curvature_conventions():
    c = curvature_tensor(flat_metric(2), [0.1, 0.2])
    assert np.max(np.abs(c.R)) == 0
    c = curvature_tensor(ball_metric(2), [0, 0])
    d = np.eye(2)
    want = np.einsum("ij,kl->ijkl", d, d) + np.einsum("kj,il->ijkl", d, d)
    assert np.max(np.abs(c.R - want)) < 1e-13
    assert bisectional_ratio(c, d[0], d[0]) == pytest.approx(1.0, abs=1e-12)
    assert bisectional_ratio(c, d[0], d[1]) == pytest.approx(1.0, abs=1e-12)


@given(st.floats(0.0, 0.9), st.integers(1, 3), st.integers(0, 10**6))
def test_ball_is_kahler_einstein(t, n, seed):
    z = ball_point(n, t, np.random.default_rng(seed))
    m = ball_metric(n)
    c = curvature_tensor(m, z)
    g = c.metric.g
    assert np.max(np.abs(c.ricci + (n + 1) * g)) <= 1e-6 * np.max(np.abs(g))
    assert c.symmetry_defect() <= 1e-8
    # the ball has constant holomorphic sectional curvature: R = g g + g g exactly
    want = np.einsum("ij,kl->ijkl", g, g) + np.einsum("kj,il->ijkl", g, g)
    assert np.max(np.abs(c.R - want)) <= 1e-9 * np.max(np.abs(want))


def test_ricci_two_paths(rng):
    phi = catalog.ball_defining(2)
    for t in (0.1, 0.5, 0.9):
        z = ball_point(2, t, rng)
        fd = ricci(defining_metric(phi), z, method="fd")
        ex = ricci_explicit_defining(phi, z)
        assert np.max(np.abs(fd - ex)) <= 1e-5 * max(1.0, np.max(np.abs(ex)))
    phi = catalog.reinhardt_poly({(0, 0): -1.0, (1, 0): 1.0, (0, 1): 1.0, (1, 1): 0.1}, 2)
    z = np.array([0.4 + 0.1j, -0.3j])
    fd = ricci(defining_metric(phi), z, method="fd")
    tensor = ricci(defining_metric(phi), z, method="tensor")
    ex = ricci_explicit_defining(phi, z)
    assert np.max(np.abs(fd - ex)) <= 1e-5 * np.max(np.abs(ex))
    assert np.max(np.abs(tensor - ex)) <= 1e-9 * np.max(np.abs(ex))


def test_disc_model_ricci():
    m = potential_metric(catalog.ball_potential(1))
    z = [0.4 - 0.2j]
    assert ricci(m, z)[0, 0] == pytest.approx(-2 * m(z).g[0, 0], rel=1e-10)


def test_bisectional_ratio_along_a_ray():
    c_fit = 0.0
    e = np.eye(2)
    for s in (0.5, 0.9, 0.99, 0.999):
        c = curvature_tensor(ball_metric(2), [s, 0])
        dev = abs(bisectional_ratio(c, e[0], e[1]) - 1)
        c_fit = max(c_fit, dev / (1 - s * s))
    assert c_fit < 1e-6  # the ball ratio is identically 1


def test_second_fundamental_form_oracles():
    # Euclidean metric g = I/2, unit sphere
    fr = level_set_second_fundamental_form(flat_metric(2, 0.5), catalog.ball_defining(2), [0.6, 0.8j])
    assert fr.pi_jnu == pytest.approx(1.0, rel=1e-10)
    assert np.allclose(fr.pi_pairs, 2.0, rtol=1e-10)
    assert fr.orthonormality_defect < 1e-12
    # ball metric at t = 0.5: geodesic radius R = sqrt2 artanh |z|
    z = np.array([math.sqrt(0.5), 0])
    fr = level_set_second_fundamental_form(ball_metric(2), catalog.ball_defining(2), z)
    r = math.sqrt(2) * math.atanh(math.sqrt(0.5))
    assert fr.pi_jnu == pytest.approx(math.sqrt(2) / math.tanh(math.sqrt(2) * r), rel=1e-9)
    assert fr.pi_pairs[0] == pytest.approx(math.sqrt(2) / math.tanh(r / math.sqrt(2)), rel=1e-9)


def test_second_fundamental_form_limits():
    fr = level_set_second_fundamental_form(ball_metric(2), catalog.ball_defining(2), [math.sqrt(1 - 1e-6), 0])
    assert fr.pi_jnu == pytest.approx(math.sqrt(2), rel=1e-5)
    assert fr.pi_pairs[0] == pytest.approx(math.sqrt(2), rel=1e-2)


def test_ach_deviation():
    phi = catalog.ball_defining(2)
    two = ScalarField(lambda x: 2.0 * phi.func(x), 2, name="2phi")
    z = np.array([0.3, 0.1 + 0.2j])
    assert np.max(np.abs(ach_deviation(phi, two, z).theta)) < 1e-13
    assert np.max(np.abs(ach_deviation(phi, phi, z).theta)) < 1e-13
    rho = ScalarField(lambda x: phi.func(x) * (2.0 + x[0]), 2, name="phi(2+Re z1)")
    d = ach_deviation(phi, rho, z)
    want = np.zeros((2, 2))
    want[0, 0] = 0.25 / (2 + z[0].real) ** 2
    assert np.max(np.abs(d.theta - want)) < 1e-13
    assert d.hermitian_defect < 1e-15
