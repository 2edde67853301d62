import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kahlerspec import catalog
from kahlerspec.crboundary import field_webster_survey
from kahlerspec.fefferman import (
    SolverConfig,
    SolverError,
    _jacobian_analytic,
    _jacobian_fd,
    bochner_defect,
    bochner_defect_field,
    fefferman_J,
    load_checkpoint,
    ma_identity_residuals,
    radial_convergence_order,
    reinhardt_self_convergence,
    save_checkpoint,
    solve_radial_ball,
    solve_reinhardt_2d,
)
from kahlerspec.reinhardt import MeshSpec, ReinhardtDomain, ReinhardtMesh
from kahlerspec.wirtinger import ScalarField


def interior_points(n, count, rng, reach=0.95):
    d = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * (reach * rng.uniform(size=(count, 1)) ** (1 / (2 * n)))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_J_of_the_ball_is_one(n, rng):
    rho = catalog.ball_defining(n)
    for z in interior_points(n, 10, rng):
        assert fefferman_J(rho, z) == pytest.approx(1.0, abs=1e-12)


@given(st.sampled_from([0.5, 2.0, 3.0]), st.integers(1, 3))
def test_J_homogeneity(c, n):
    rho = catalog.ball_defining(n)
    scaled = ScalarField(lambda x: c * rho.func(x), n, name="c rho")
    z = np.full(n, 0.3 + 0.1j)
    assert fefferman_J(scaled, z) == pytest.approx(c ** (n + 1) * fefferman_J(rho, z), rel=1e-9)


def test_J_vanishes_for_pluriharmonic():
    rho = catalog.re_z1(2).map(lambda v: v - 1.0)
    assert abs(fefferman_J(rho, [0.2, 0.1j])) < 1e-14


def test_identities_on_the_ball(rng):
    rep = ma_identity_residuals(catalog.ball_defining(2), interior_points(2, 30, rng))
    assert rep.passed and rep.worst <= 1e-9
    assert np.allclose(rep.J, 1.0, atol=1e-12)


def test_identities_fd_path_on_non_solutions(rng):
    dom = ReinhardtDomain.perturbed(0.3)
    rep = ma_identity_residuals(dom.scalar_field(), interior_points(2, 10, rng, 0.6), method="fd")
    assert rep.method == "fd"
    assert rep.worst <= 1e-7
    assert not np.allclose(rep.J, 1.0, atol=1e-3)  # not a solution, identities still hold


@pytest.mark.parametrize("n", [1, 2])
def test_radial_solver_recovers_ball(n):
    sol = solve_radial_ball(n, 257, initial=lambda t: (1 - t) * (1 + 0.3 * t))
    assert sol.error_against(lambda t: 1 - t) <= 1e-8
    assert sol.iterations >= 2


def test_radial_order():
    out = radial_convergence_order(2)
    ratios = np.array(out["errors"][:-1]) / np.array(out["errors"][1:])
    assert np.all(ratios >= 3)


def test_reinhardt_ball_from_perturbed_start():
    mesh = ReinhardtMesh(ReinhardtDomain.ball(2), MeshSpec(size=33))
    t = mesh.t
    exact = 1 - t.sum(-1)
    f = solve_reinhardt_2d(mesh.domain, mesh.spec, initial=exact * (1 + 0.2 * t[..., 0] * t[..., 1]), mesh=mesh)
    assert f.iterations >= 2
    assert np.max(np.abs(f.v - exact)) <= 1e-10


def test_perturbed_solve(perturbed_field):
    f = perturbed_field
    assert f.residual <= 1e-8
    assert f.iterations <= 25
    k = f.mesh.unknown
    assert np.all(f.v[k] > 0)
    assert np.all(f.v[f.mesh.boundary] == 0)
    assert np.nanmin(f.min_eig_hessian_rho()[k]) > 0


def test_analytic_jacobian_matches_fd(perturbed_field):
    f = perturbed_field
    mesh = ReinhardtMesh(f.domain, MeshSpec(size=17))
    v = 1.0 - mesh.t.sum(-1) - 0.03 * mesh.t.prod(-1)
    v[mesh.boundary] = 0.0
    a = _jacobian_analytic(mesh, v).toarray()
    b = _jacobian_fd(mesh, v).toarray()
    assert np.max(np.abs(a - b)) <= 1e-5 * np.max(np.abs(a))


def test_gradient_norm_tends_to_one_at_the_boundary(perturbed_field):
    f = perturbed_field
    g = f.grad_u_sq()
    n = f.mesh.spec.size
    gap = [np.nanmax(np.abs(g[n - k, 1 : n - 5] - 1)) for k in (4, 3, 2)]
    assert gap[0] > gap[1] > gap[2]
    assert gap[2] < 0.02


def test_plurisubharmonicity_equivalence(perturbed_field):
    f = perturbed_field
    k = f.mesh.unknown
    a = np.sign(1 - f.grad_u_sq()[k])
    b = np.sign(f.min_eig_hessian_rho()[k])
    assert np.all(a == b)


def test_hessian_sign_links_to_webster(perturbed_field):
    f = perturbed_field
    n = f.mesh.spec.size
    dh = f.det_hessian_rho()
    adjacent = np.concatenate([dh[n - 2, : n - 2], dh[: n - 2, n - 2]])
    webster = field_webster_survey(f)
    assert (np.min(adjacent) >= -1e-8) == (webster["min_webster"] >= -1e-6 * 2)


def test_self_convergence_order():
    out = reinhardt_self_convergence(ReinhardtDomain.perturbed(0.1), sizes=(17, 33, 65))
    assert out["orders"][0] >= 1.6


def test_bochner_on_the_ball(rng, ball_field):
    rho = catalog.ball_defining(2)
    for z in interior_points(2, 5, rng, 0.9):
        assert abs(bochner_defect(rho, z)) <= 1e-8
    assert np.allclose(ball_field.bochner_weight()[ball_field.mesh.unknown], -1.0, atol=1e-10)
    # grid values are solver rounding amplified by h^-2, largest at the corner
    d = np.abs(bochner_defect_field(ball_field))
    h = ball_field.mesh.spec.size // 2
    assert np.nanmax(d[:h, :h]) <= 1e-7
    assert np.nanmax(d) <= 1e-4


def test_bochner_weight_maximum_principle(perturbed_field):
    f = perturbed_field
    w = f.bochner_weight()
    assert np.max(w[f.mesh.unknown]) <= np.max(w[f.mesh.boundary])


def test_checkpoint_roundtrip(perturbed_field, tmp_path):
    p = tmp_path / "field.txt"
    save_checkpoint(perturbed_field, str(p))
    g = load_checkpoint(str(p))
    assert np.array_equal(g.v, perturbed_field.v)
    assert g.domain.coeffs == perturbed_field.domain.coeffs
    assert g.residual == perturbed_field.residual


def test_non_convergence_reports_trace():
    with pytest.raises(SolverError) as info:
        solve_reinhardt_2d(ReinhardtDomain.perturbed(0.1), MeshSpec(size=17), SolverConfig(max_iter=1, tol=1e-14))
    assert len(info.value.trace) >= 1
