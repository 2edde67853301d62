import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kahlerspec.fefferman import fefferman_J
from kahlerspec.reinhardt import (
    BoundaryCurve,
    MeshSpec,
    ReinhardtDomain,
    ReinhardtMesh,
    derivative_matrices,
    fd_weights,
    fefferman_reduced,
    graded_nodes,
    reduced_hessian,
)
from kahlerspec.wirtinger import complex_hessian

frac = st.floats(0.05, 0.9)


@given(frac, frac, st.floats(0.0, 2 * np.pi), st.floats(0.0, 2 * np.pi))
def test_reduction_matches_ambient_algebra(a, b, th1, th2):
    dom = ReinhardtDomain.perturbed(0.3)
    t = np.array([a, b]) * 0.5
    z = np.sqrt(t) * np.exp(1j * np.array([th1, th2]))
    rho = dom.scalar_field()
    h = complex_hessian(rho, z)
    a_mat = reduced_hessian(t, dom.grad(t), dom.hess(t))
    assert np.linalg.det(a_mat) == pytest.approx(np.real(np.linalg.det(h)), rel=1e-10)
    # J(rho) with rho = phi0, i.e. v = -phi0
    v = -dom.phi0(t)
    j_red = fefferman_reduced(v, t, -dom.grad(t), -dom.hess(t))
    assert j_red == pytest.approx(fefferman_J(rho, z), rel=1e-10)


def test_fd_weights_are_exact_on_polynomials(rng):
    x = np.sort(rng.uniform(0, 1, size=4))
    for m in (1, 2):
        w = fd_weights(x, x[1], m)
        for deg in range(4):
            exact = 0.0 if deg < m else np.prod(np.arange(deg - m + 1, deg + 1)) * x[1] ** (deg - m)
            assert w @ x**deg == pytest.approx(exact, abs=1e-8)


def test_derivative_matrices_second_order():
    errs = []
    for size in (33, 65):
        x = graded_nodes(size)
        d1, d2 = derivative_matrices(x)
        errs.append(np.max(np.abs(d2 @ np.sin(3 * x) + 9 * np.sin(3 * x))))
    assert errs[0] / errs[1] > 3


def test_graded_nodes_nest_and_refine():
    a, b = graded_nodes(33), graded_nodes(65)
    assert np.allclose(a, b[::2], atol=1e-15)
    h = np.diff(b)
    assert h[-1] < h[0]
    assert np.all(h > 0)


def test_boundary_curve_lies_on_boundary():
    dom = ReinhardtDomain.perturbed(0.1)
    c = BoundaryCurve(dom)
    s = np.linspace(0, 1, 11)
    b, b1, b2 = c(s)
    assert np.max(np.abs(dom.phi0(b))) < 1e-13
    # derivatives against central differences
    h = 1e-5
    bp, bm = c(s[1:-1] + h)[0], c(s[1:-1] - h)[0]
    assert np.max(np.abs((bp - bm) / (2 * h) - b1[1:-1])) < 1e-7
    assert np.max(np.abs((bp - 2 * b[1:-1] + bm) / h**2 - b2[1:-1])) < 1e-3


def test_mesh_edges_and_inverse_map():
    dom = ReinhardtDomain.perturbed(0.1)
    m = ReinhardtMesh(dom, MeshSpec(size=17))
    t = m.t
    assert np.all(t[0, :, 0] == 0) and np.all(t[:, 0, 1] == 0)
    assert np.max(np.abs(dom.phi0(t[m.boundary]))) < 1e-12
    assert np.all(dom.phi0(t[m.unknown]) < 0)
    q = m.locate(t[5, 7])
    assert np.allclose(q, [m.xi[5], m.eta[7]], atol=1e-10)


def test_domain_validation_and_json():
    dom = ReinhardtDomain.perturbed(0.1)
    again = ReinhardtDomain.from_json(dom.to_json())
    assert again.coeffs == dom.coeffs and again.name == dom.name
    assert dom.check_pseudoconvex() > 0
    with pytest.raises(ValueError):
        ReinhardtDomain({(0, 0): 1.0, (1, 0): 1.0}, 2)
    bad = ReinhardtDomain({(0, 0): -1.0, (1, 0): 1.0, (0, 1): 1.0, (1, 1): -1.9}, 2)
    with pytest.raises(ValueError, match="not positive definite"):
        bad.check_pseudoconvex()
