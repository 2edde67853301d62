import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kahlerspec import catalog
from kahlerspec.wirtinger import JetError, complex_hessian, wirtinger_jet

coord = st.floats(-0.45, 0.45, allow_nan=False)


def point(n):
    return st.lists(st.tuples(coord, coord), min_size=n, max_size=n).map(lambda v: np.array([a + 1j * b for a, b in v]))


@pytest.mark.parametrize("method", ["exact", "fd"])
def test_norm_sq_in_one_variable(method):
    jet = wirtinger_jet(catalog.norm_sq(1), [0.5], 2, method=method)
    assert jet.gradient[0] == pytest.approx(0.5, abs=1e-9)
    assert jet.hessian[0, 0] == pytest.approx(1.0, abs=1e-9)
    assert abs(jet.d(2, 0)[0, 0]) < 1e-9


@pytest.mark.parametrize("method", ["exact", "fd"])
def test_constant_has_no_derivatives(method):
    jet = wirtinger_jet(catalog.constant(2, 3.5), [0.1, -0.2j], 4, method=method)
    for k in range(1, 5):
        assert np.max(np.abs(jet.tensors[k])) < 1e-12


def test_norm_fourth_fd_matches_closed_form(rng):
    f = catalog.norm_fourth(2)
    for _ in range(5):
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        s = np.sum(np.abs(z) ** 2)
        want = 2 * (s * np.eye(2) + np.outer(np.conj(z), z))
        got = complex_hessian(f, z, method="fd")
        assert np.max(np.abs(got - want)) <= 1e-7 * max(1.0, np.max(np.abs(want)))


def test_pluriharmonic_and_identity_hessians():
    assert np.allclose(complex_hessian(catalog.norm_sq(3), [0.3, 0.1j, -0.2]), np.eye(3), atol=1e-14)
    assert np.max(np.abs(complex_hessian(catalog.re_z1_squared(2), [0.4 + 0.3j, 0.2]))) < 1e-14


def test_ball_potential_hessian_closed_form():
    z = np.array([0.3 + 0.2j, -0.4j])
    t = np.sum(np.abs(z) ** 2)
    want = np.eye(2) / (1 - t) + np.outer(np.conj(z), z) / (1 - t) ** 2
    for method in ("exact", "fd"):
        assert np.max(np.abs(complex_hessian(catalog.ball_potential(2), z, method) - want)) < 1e-8


@given(point(2))
def test_jets_are_conjugation_symmetric(z):
    jet = wirtinger_jet(catalog.ball_potential(2), z * 0.9, 4)
    assert jet.conjugation_defect() <= 1e-10 * max(1.0, np.max(np.abs(jet.tensors[4])))


@given(point(2))
def test_fd_agrees_with_exact(z):
    f = catalog.ball_potential(2)
    ex = wirtinger_jet(f, z, 4, method="exact")
    fd = wirtinger_jet(f, z, 4, method="fd")
    for k, tol in ((1, 1e-7), (2, 1e-7), (3, 1e-4), (4, 1e-4)):
        scale = max(1.0, np.max(np.abs(ex.tensors[k])))
        assert np.max(np.abs(fd.tensors[k] - ex.tensors[k])) <= tol * scale


def test_fd_near_boundary_uses_clearance():
    f = catalog.ball_potential(1)
    z = np.array([0.99])  # clearance 1e-2
    ex = wirtinger_jet(f, z, 2, method="exact")
    fd = wirtinger_jet(f, z, 2, method="fd")
    assert np.max(np.abs(fd.hessian - ex.hessian)) <= 1e-7 * np.max(np.abs(ex.hessian))


def test_richardson_order():
    f = catalog.ball_potential(2)
    z = np.array([0.2 + 0.1j, -0.1])
    ex = wirtinger_jet(f, z, 2, method="exact").hessian
    errs = []
    for h in (0.08, 0.04):
        steps = [np.full(4, h), np.full(4, h)]
        errs.append(np.max(np.abs(wirtinger_jet(f, z, 2, method="fd", steps=steps).hessian - ex)))
    assert errs[0] / errs[1] >= 3


def test_errors():
    f = catalog.ball_potential(1)
    with pytest.raises(JetError):
        wirtinger_jet(f, [0.5], 5)
    with pytest.raises(JetError):
        wirtinger_jet(f, [1.5], 2, method="fd")
