"""CR geometry of boundaries: contact form, Levi form, Webster scalar, CR Yamabe quotient.

For a defining function rho and a real tangent vector X of the boundary with
(1,0)-part xi:  theta(X) = Im(rho_i xi^i)  (theta = i dbar rho restricted),
dtheta(X, Y) = -2 Im(rho_{i jbar} xi^i conj(eta^j)), and the Levi metric on the
horizontal distribution is dtheta(X, JY) = 2 Re h(xi, eta).
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .kahler import MetricError, curvature_tensor, potential_metric
from .wirtinger import ScalarField, as_point, wirtinger_jet

BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class BoundaryFrame:
    point: np.ndarray
    grad: np.ndarray  # rho_i
    hess: np.ndarray  # rho_{i jbar}
    theta: np.ndarray  # coefficients of theta = i rho_jbar dzbar_j
    reeb: np.ndarray  # (1,0)-part of T
    basis: np.ndarray  # rows T_alpha spanning H^{1,0} = ker d rho
    levi: np.ndarray  # h_{alpha beta bar}
    m: int
    defects: dict = field(default_factory=dict)

    def theta_of(self, xi) -> float:
        return float(np.imag(self.grad @ xi))

    def dtheta(self, xi, eta) -> float:
        return float(-2.0 * np.imag(np.asarray(xi) @ self.hess @ np.conj(eta)))

    @property
    def levi_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.levi)


def _horizontal_basis(grad: np.ndarray) -> np.ndarray:
    """Orthonormal (Euclidean) basis of {xi : rho_i xi^i = 0}, built from coordinate vectors in order."""
    n = grad.shape[0]
    normal = np.conj(grad) / np.linalg.norm(grad)
    basis = []
    for k in range(n):
        e = np.zeros(n, dtype=complex)
        e[k] = 1.0
        v = e - np.vdot(normal, e) * normal
        for b in basis:
            v = v - np.vdot(b, v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            basis.append(v / nv)
        if len(basis) == n - 1:
            break
    return np.array(basis).reshape(n - 1, n)


def _reeb(grad, hess, basis) -> np.ndarray:
    """Solve theta(T) = 1, d rho(T) = 0 and T _| dtheta = 0 on H for the (1,0)-part of T."""
    n = grad.shape[0]
    rows, rhs = [], []

    def real_row(c):  # linear functional xi -> Re(c . xi) as a row on [Re xi, Im xi]
        return np.concatenate([c.real, -c.imag])

    rows.append(real_row(grad))  # Re(rho_i T^i) = 0
    rhs.append(0.0)
    rows.append(real_row(-1j * grad))  # Im(rho_i T^i) = 1
    rhs.append(1.0)
    for b in basis:
        c = hess @ np.conj(b)  # h(T, b) = c . T
        for y in (c, -1j * c):  # Y = b and Y = i b; Im(y . T) = Re(-i y . T)
            rows.append(real_row(-1j * y))
            rhs.append(0.0)
    a = np.array(rows)
    x = np.linalg.solve(a, np.array(rhs))
    return x[:n] + 1j * x[n:]


def contact_form(rho: ScalarField, p, tol: float = BOUNDARY_TOL) -> BoundaryFrame:
    """Contact data of theta = i dbar rho at the boundary point p."""
    p = as_point(p, rho.n)
    n = rho.n
    jet = wirtinger_jet(rho, p, 2)
    if abs(jet.value) > tol:
        raise MetricError(f"rho(p) = {jet.value:.3e}: p is not on the boundary")
    grad, hess = jet.gradient, jet.hessian
    if np.linalg.norm(grad) == 0:
        raise MetricError("vanishing gradient at the boundary point")
    basis = _horizontal_basis(grad)
    levi = basis @ hess @ np.conj(basis).T if n > 1 else np.zeros((0, 0), dtype=complex)
    if n > 1 and np.linalg.eigvalsh(levi)[0] <= 0:
        raise MetricError(f"Levi form not positive definite at {p}: not strictly pseudoconvex")
    reeb = _reeb(grad, hess, basis)
    frame = BoundaryFrame(p, grad, hess, 1j * np.conj(grad), reeb, basis, levi, n - 1)
    defects = {
        "theta_on_H": max([abs(frame.theta_of(b)) for b in basis] + [abs(frame.theta_of(1j * b)) for b in basis] + [0.0]),
        "theta_T_minus_1": abs(frame.theta_of(reeb) - 1.0),
        "T_tangent": abs(2.0 * np.real(grad @ reeb)),
        "T_dtheta": max([abs(frame.dtheta(reeb, b)) for b in basis] + [abs(frame.dtheta(reeb, 1j * b)) for b in basis] + [0.0]),
    }
    return BoundaryFrame(p, grad, hess, 1j * np.conj(grad), reeb, basis, levi, n - 1, defects)


def reeb_closed_form(rho: ScalarField, p) -> np.ndarray:
    """T^i = i rho^i / |d rho|^2_rho with rho^i = rho^{i jbar} rho_jbar (needs H(rho) invertible)."""
    jet = wirtinger_jet(rho, as_point(p, rho.n), 2)
    hinv = np.linalg.inv(jet.hessian)
    raised = hinv.T @ np.conj(jet.gradient)
    norm = float(np.real(jet.gradient @ raised))
    return 1j * raised / norm


# ---------------------------------------------------------------------------
# Webster scalar curvature
# ---------------------------------------------------------------------------


def webster_scalar_einstein(rho: ScalarField, p, j_tol: float = 1e-6, tol: float = BOUNDARY_TOL) -> float:
    """m(m+1) det H(rho)(p), valid when J(rho) = 1 at p (checked)."""
    from .fefferman import bordered_matrix

    p = as_point(p, rho.n)
    jet = wirtinger_jet(rho, p, 2)
    if abs(jet.value) > tol:
        raise MetricError(f"rho(p) = {jet.value:.3e}: p is not on the boundary")
    J = float(-np.real(np.linalg.det(bordered_matrix(jet))))
    if abs(J - 1.0) > j_tol:
        raise MetricError(f"J(rho)(p) = {J:.8g} != 1: the Einstein formula does not apply (general Ricci-type formula not implemented)")
    m = rho.n - 1
    return float(m * (m + 1) * np.real(np.linalg.det(jet.hessian)))


def _sphere_points(n: int, count: int, rng) -> list:
    pts = []
    for _ in range(count):
        z = rng.normal(size=n) + 1j * rng.normal(size=n)
        pts.append(z / np.linalg.norm(z))
    return pts


def boundary_report(rho: ScalarField, points, j_tol: float = 1e-6, tol: float = 1e-6) -> dict:
    """Per-point {point, webster_scalar, levi_eigenvalues, J_value} and summary {min_webster, verdict}."""
    from .fefferman import fefferman_J

    recs = []
    for p in points:
        frame = contact_form(rho, p)
        recs.append(
            {
                "point": [[float(c.real), float(c.imag)] for c in frame.point],
                "webster_scalar": webster_scalar_einstein(rho, p, j_tol),
                "levi_eigenvalues": [float(e) for e in frame.levi_eigenvalues],
                "J_value": fefferman_J(rho, p),
            }
        )
    mn = min(r["webster_scalar"] for r in recs)
    m = rho.n - 1
    verdict = "nonnegative" if mn >= -tol * max(1, m * (m + 1)) else "negative somewhere"
    return {"points": recs, "summary": {"min_webster": mn, "verdict": verdict}}


def ball_webster_survey(n: int, count: int = 50, seed: int = 0) -> dict:
    from .catalog import ball_defining

    rep = boundary_report(ball_defining(n), _sphere_points(n, count, np.random.default_rng(seed)))
    vals = [r["webster_scalar"] for r in rep["points"]]
    return {**rep["summary"], "max_webster": max(vals), "constant": bool(np.ptp(vals) < 1e-8), "report": rep}


def field_webster_survey(f, j_tol: float = 1e-2) -> dict:
    """Webster scalar 2 det H(rho) at boundary nodes of a solved 2D Reinhardt field.

    J at boundary nodes comes from one-sided stencils; nodes with |J - 1| > j_tol
    are listed as refused rather than evaluated.
    """
    mesh = f.mesh
    J = f.J()
    dh = f.det_hessian_rho()
    recs, refused = [], []
    for a, b in np.argwhere(mesh.boundary & ~mesh.corner):
        t = mesh.t[a, b]
        if abs(J[a, b] - 1.0) > j_tol:
            refused.append({"t": t.tolist(), "J_value": float(J[a, b])})
            continue
        recs.append({"t": t.tolist(), "webster_scalar": float(2.0 * dh[a, b]), "J_value": float(J[a, b])})
    if not recs:
        raise MetricError("no boundary node satisfies |J - 1| <= j_tol")
    vals = np.array([r["webster_scalar"] for r in recs])
    mn = float(vals.min())
    return {
        "min_webster": mn,
        "max_webster": float(vals.max()),
        "constant": False,
        "verdict": "nonnegative" if mn >= -1e-6 * 2 else "negative somewhere",
        "refused": refused,
        "points": recs,
        "max_J_defect": float(max(abs(r["J_value"] - 1.0) for r in recs)),
    }


# ---------------------------------------------------------------------------
# Calabi example (chart level)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircleBundleWebster:
    scalar: float
    einstein: bool
    einstein_defect: float
    flag: str


def disc_model_metric(dim: int):
    """omega_0 = -i d dbar log(1 - |zeta|^2) on the unit ball of C^dim."""
    from .catalog import ball_potential

    return potential_metric(ball_potential(dim), "chart-base")


def circle_bundle_webster(base_metric, zeta, tol: float = 1e-8) -> CircleBundleWebster:
    """Complex trace g^{i jbar} R_{i jbar} of the base metric's Ricci form at zeta."""
    c = curvature_tensor(base_metric, zeta)
    m = c.metric
    dim = m.n
    scalar = float(np.real(np.trace(m.ginv @ c.ricci)))
    defect = float(np.max(np.abs(c.ricci - scalar / dim * m.g)))
    einstein = defect <= tol * max(1.0, abs(scalar))
    return CircleBundleWebster(scalar, einstein, defect, "" if einstein else "non-Einstein base")


@functools.lru_cache(maxsize=None)
def _calabi_chart_metric(n: int):
    from .catalog import calabi_chart_potential

    return potential_metric(calabi_chart_potential(n), "calabi-chart")


def calabi_chart_ricci_check(n: int, zeta, w, with_scale: bool = False):
    """Ric(omega) + (n+1) g for the chart model omega = -i d dbar log(1 - rho|w|^2) + i d dbar log rho.

    With ``with_scale`` also returns max |g_{i jbar}|, the natural size for comparisons.
    """
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    if zeta.shape[0] != n - 1:
        raise ValueError(f"chart point needs {n - 1} base coordinates")
    s = float(np.sum(np.abs(zeta) ** 2))
    if s >= 1 or abs(w) ** 2 / (1 - s) >= 1:
        raise MetricError("point outside the chart region (|zeta| < 1, rho |w|^2 < 1)")
    z = np.concatenate([zeta, [complex(w)]])
    c = curvature_tensor(_calabi_chart_metric(n), z)
    res = c.ricci + (n + 1) * c.metric.g
    return (res, float(np.max(np.abs(c.metric.g)))) if with_scale else res


# ---------------------------------------------------------------------------
# CR Yamabe quotient
# ---------------------------------------------------------------------------


def wedge_volume(frame: BoundaryFrame, vectors) -> float:
    """(theta ^ dtheta^m)(X_1, ..., X_{2m+1}) for real tangent vectors given by (1,0)-parts."""
    m = frame.m
    k = 2 * m + 1
    if len(vectors) != k:
        raise ValueError(f"need {k} vectors")
    total = 0.0
    for perm in itertools.permutations(range(k)):
        sign = _perm_sign(perm)
        val = frame.theta_of(vectors[perm[0]])
        for j in range(m):
            val *= frame.dtheta(vectors[perm[1 + 2 * j]], vectors[perm[2 + 2 * j]])
        total += sign * val
    return total / (2**m * math.factorial(m))


def _perm_sign(perm) -> int:
    sign, seen = 1, list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


@dataclass(frozen=True)
class YamabeQuotientInput:
    weights: np.ndarray  # theta ^ dtheta^m volume times quadrature weight
    f: np.ndarray
    grad_h_sq: np.ndarray  # |grad^H f|^2 = 2 h^{alpha beta bar} f_alpha f_beta bar
    webster: np.ndarray
    m: int

    def scaled(self, c: float) -> "YamabeQuotientInput":
        return YamabeQuotientInput(self.weights, c * self.f, c * c * self.grad_h_sq, self.webster, self.m)


def cr_yamabe_quotient(inp: YamabeQuotientInput) -> float:
    """int (|grad^H f|^2 + m/(2(m+1)) R f^2) / (int f^{2(m+1)/m})^{m/(m+1)}."""
    if np.any(inp.f <= 0):
        raise ValueError("test function must be positive")
    if inp.webster is None or not np.all(np.isfinite(inp.webster)):
        raise ValueError("Webster scalar curvature missing")
    if np.any(inp.weights <= 0):
        raise ValueError("volume weights must be positive")
    m = inp.m
    p = 2.0 * (m + 1) / m
    num = np.sum(inp.weights * (inp.grad_h_sq + m / (2.0 * (m + 1)) * inp.webster * inp.f**2))
    den = np.sum(inp.weights * inp.f**p) ** (m / (m + 1.0))
    return float(num / den)


def horizontal_gradient_sq(frame: BoundaryFrame, f: ScalarField) -> float:
    """2 h^{alpha beta bar} f_alpha f_beta bar with f_alpha = T_alpha^i d f / d z_i."""
    df = wirtinger_jet(f, frame.point, 1).gradient
    fa = frame.basis @ df
    if fa.size == 0:
        return 0.0
    return float(2.0 * np.real(np.conj(fa) @ np.linalg.solve(frame.levi.T, fa)))


def reinhardt_boundary_input(
    rho: ScalarField,
    domain,
    f: ScalarField,
    sigma_nodes: int = 24,
    angles: int = 16,
    webster: float | None = None,
) -> YamabeQuotientInput:
    """Boundary quadrature on a Reinhardt hypersurface in C^2: torus x profile curve.

    z = (sqrt(t1) e^{i a1}, sqrt(t2) e^{i a2}) with t = B(sigma) on the boundary
    curve; Gauss-Legendre in sigma, trapezoid in the angles.  The Webster
    scalar is taken from the Einstein formula unless supplied.
    """
    from scipy.special import roots_legendre

    from .reinhardt import BoundaryCurve

    if rho.n != 2:
        raise ValueError("boundary quadrature implemented for hypersurfaces in C^2")
    curve = BoundaryCurve(domain)
    gx, gw = roots_legendre(sigma_nodes)
    sig = 0.5 * (gx + 1.0)
    sw = 0.5 * gw
    b, b1, _ = curve(sig)
    ang = 2 * np.pi * np.arange(angles) / angles
    aw = 2 * np.pi / angles
    wts, fv, gh, rv = [], [], [], []
    for k in range(sigma_nodes):
        t, dt = b[k], b1[k]
        r = np.sqrt(t)
        for a1 in ang:
            for a2 in ang:
                ph = np.exp(1j * np.array([a1, a2]))
                z = r * ph
                frame = contact_form(rho, z, tol=1e-9)
                ds = dt / (2 * r) * ph  # d z / d sigma
                e1 = np.array([1j * z[0], 0.0])
                e2 = np.array([0.0, 1j * z[1]])
                vol = abs(wedge_volume(frame, [ds, e1, e2]))
                wts.append(vol * sw[k] * aw * aw)
                fv.append(f(z))
                gh.append(horizontal_gradient_sq(frame, f))
                rv.append(webster if webster is not None else webster_scalar_einstein(rho, z, tol=1e-9))
    return YamabeQuotientInput(np.array(wts), np.array(fv), np.array(gh), np.array(rv), 1)
