"""The Fefferman operator J(rho), Monge-Ampere identities and Cheng-Yau solvers.

Unknown throughout is v = -rho > 0 with v = 0 on the boundary; the complete
Kahler-Einstein potential is u = -log v and J(rho) = 1 is equivalent to
det H(u) = e^{(n+1) u}.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import jax.numpy as jnp
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .kahler import MetricError
from .reinhardt import (
    MeshSpec,
    ReinhardtDomain,
    ReinhardtMesh,
    bordered,
    fefferman_reduced,
    log_derivatives,
    reduced_hessian,
    z_hessian_real_point,
)
from .wirtinger import ScalarField, as_point, wirtinger_jet

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Newton iteration failed; ``trace`` holds the residual history."""

    def __init__(self, msg: str, trace: Sequence[float] = ()):
        super().__init__(msg)
        self.trace = list(trace)


# ---------------------------------------------------------------------------
# J and the pointwise identities
# ---------------------------------------------------------------------------


def bordered_matrix(jet) -> np.ndarray:
    n = jet.n
    m = np.zeros((n + 1, n + 1), dtype=complex)
    m[0, 0] = jet.value
    m[0, 1:] = np.conj(jet.gradient)  # rho_jbar
    m[1:, 0] = jet.gradient  # rho_i
    m[1:, 1:] = jet.hessian
    return m


def fefferman_J(rho: ScalarField, z, method: str = "auto") -> float:
    """``J(rho) = -det [[rho, rho_jbar], [rho_i, rho_{i jbar}]]``."""
    jet = wirtinger_jet(rho, z, 2, method=method)
    return float(-np.real(np.linalg.det(bordered_matrix(jet))))


@dataclass(frozen=True)
class MaIdentityReport:
    """Residuals of the pointwise Monge-Ampere identities at sampled points.

    ``hj``: |det H(u) - J e^{(n+1)u}| / e^{(n+1)u};
    ``hr``: max |rho_{i jbar} - e^{-u}(u_{i jbar} - u_i u_jbar)|;
    ``ratio``: |det H(rho)/J - e^u (1 - |du|^2_g)|.
    """

    points: np.ndarray
    hj: np.ndarray
    hr: np.ndarray
    ratio: np.ndarray
    J: np.ndarray
    method: str
    tolerance: float

    def summary(self) -> dict:
        out = {}
        for k in ("hj", "hr", "ratio"):
            a = getattr(self, k)
            out[k] = {"max": float(np.max(a)), "mean": float(np.mean(a))}
        return out

    @property
    def worst(self) -> float:
        return float(max(self.hj.max(), self.hr.max(), self.ratio.max()))

    @property
    def passed(self) -> bool:
        return self.worst <= self.tolerance

    def message(self) -> str:
        if self.passed:
            return "identities hold"
        return f"identity residual {self.worst:.3e} > {self.tolerance:g}: the identities are algebraic, this is an implementation bug"


def ma_identity_residuals(rho: ScalarField, sample: Sequence, method: str = "auto", tolerance: float | None = None) -> MaIdentityReport:
    """Check (hj), (hr) and the determinant ratio with u = -log(-rho)."""
    n = rho.n
    pts = np.array([as_point(z, n) for z in sample])
    exact = method == "exact" or (method == "auto" and rho.exact)
    u = rho.map((lambda r: -jnp.log(-r)) if rho.exact else (lambda r: -np.log(-r)), name="u")
    hj, hr, ratio, jv = [], [], [], []
    for z in pts:
        rj = wirtinger_jet(rho, z, 2, method=method)
        if rj.value >= 0:
            raise MetricError(f"rho(z) = {rj.value:.3e} >= 0 at {z}")
        uj = wirtinger_jet(u, z, 2, method=method)
        J = float(-np.real(np.linalg.det(bordered_matrix(rj))))
        hu = uj.hessian
        e = np.exp((n + 1) * uj.value)
        hj.append(abs(np.real(np.linalg.det(hu)) - J * e) / e)
        du = uj.gradient
        hr.append(float(np.max(np.abs(rj.hessian - np.exp(-uj.value) * (hu - np.outer(du, np.conj(du)))))))
        grad_sq = float(np.real(np.vdot(du, np.linalg.solve(hu, du))))
        ratio.append(abs(np.real(np.linalg.det(rj.hessian)) / J - np.exp(uj.value) * (1.0 - grad_sq)))
        jv.append(J)
    tol = tolerance if tolerance is not None else (1e-9 if exact else 1e-7)
    return MaIdentityReport(pts, np.array(hj), np.array(hr), np.array(ratio), np.array(jv), "exact" if exact else "fd", tol)


# ---------------------------------------------------------------------------
# radial solver
# ---------------------------------------------------------------------------


def radial_operator(v, v1, v2, t, n):
    """``(-v')^{n-1} [t v'^2 - v (v' + t v'')]``: J(-v) for a radial profile."""
    return (-v1) ** (n - 1) * (t * v1**2 - v * (v1 + t * v2))


def _radial_operator_partials(v, v1, v2, t, n):
    core = t * v1**2 - v * (v1 + t * v2)
    p = (-v1) ** (n - 1)
    dv = p * (-(v1 + t * v2))
    dp = p * (2 * t * v1 - v)
    if n > 1:
        dp = dp - (n - 1) * (-v1) ** (n - 2) * core
    dq = p * (-v * t)
    return dv, dp, dq


@dataclass(frozen=True)
class RadialSolution:
    t: np.ndarray
    v: np.ndarray
    n: int
    iterations: int
    residual: float
    trace: tuple

    def error_against(self, exact: Callable) -> float:
        return float(np.max(np.abs(self.v - exact(self.t))))


def solve_radial_ball(
    n: int,
    grid_size: int,
    rhs: Callable | None = None,
    initial: Callable | None = None,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> RadialSolution:
    """Solve ``(-v')^{n-1}[t v'^2 - v(v' + t v'')] = rhs(t)`` on [0, 1] with v(1) = 0.

    rhs defaults to 1 (the Cheng-Yau equation on the ball, exact solution 1 - t).
    At t = 0 the equation reads v (-v')^n = rhs(0), which carries the
    smoothness condition; v' there uses a one-sided second-order stencil.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if grid_size < 16:
        raise ValueError("grid_size must be >= 16")
    t = np.linspace(0.0, 1.0, grid_size)
    h = t[1] - t[0]
    m = grid_size - 1  # unknowns v_0..v_{m-1}; v_m = 0
    f = np.ones(grid_size) if rhs is None else np.asarray(rhs(t), dtype=float)
    d1 = sp.lil_matrix((grid_size, grid_size))
    d2 = sp.lil_matrix((grid_size, grid_size))
    d1[0, :3] = np.array([-3.0, 4.0, -1.0]) / (2 * h)
    d2[0, :4] = np.array([2.0, -5.0, 4.0, -1.0]) / h**2
    for i in range(1, grid_size - 1):
        d1[i, [i - 1, i + 1]] = np.array([-1.0, 1.0]) / (2 * h)
        d2[i, [i - 1, i, i + 1]] = np.array([1.0, -2.0, 1.0]) / h**2
    d1, d2 = d1.tocsr(), d2.tocsr()
    v = np.asarray(initial(t), dtype=float) if initial is not None else 1.0 - t
    v[-1] = 0.0

    def residual(v):
        p, q = d1 @ v, d2 @ v
        return (radial_operator(v, p, q, t, n) - f)[:m], p, q

    trace = []
    for it in range(max_iter + 1):
        r, p, q = residual(v)
        res = float(np.max(np.abs(r)))
        trace.append(res)
        if res <= tol:
            return RadialSolution(t, v, n, it, res, tuple(trace))
        if it == max_iter:
            break
        dv, dp, dq = _radial_operator_partials(v, p, q, t, n)
        jac = sp.diags(dv) + sp.diags(dp) @ d1 + sp.diags(dq) @ d2
        jac = jac.tocsr()[:m, :m]
        step = spla.spsolve(jac.tocsc(), -r)
        lam = 1.0
        for _ in range(20):
            trial = v.copy()
            trial[:m] += lam * step
            rt, pt, _ = residual(trial)
            if np.all(trial[:m] > 0) and np.all(pt[:m] < 0) and np.max(np.abs(rt)) < res * (1 - 1e-4 * lam) + 1e-14:
                break
            lam *= 0.5
        else:
            raise SolverError("radial Newton: line search failed", trace)
        v = trial
    raise SolverError(f"radial Newton did not converge in {max_iter} iterations", trace)


def manufactured_radial(n: int, c: float = 0.3):
    """v = (1-t) e^{ct} and the right side that makes it exact (measures order; 1-t is reproduced exactly)."""

    def exact(t):
        return (1.0 - t) * np.exp(c * t)

    def rhs(t):
        e = np.exp(c * t)
        v = (1.0 - t) * e
        v1 = (c * (1.0 - t) - 1.0) * e
        v2 = (c * c * (1.0 - t) - 2.0 * c) * e
        return radial_operator(v, v1, v2, t, n)

    return exact, rhs


def radial_convergence_order(n: int = 2, grids: Sequence[int] = (65, 129, 257)) -> dict:
    """Max-norm errors against the manufactured solution and observed orders between successive grids."""
    exact, rhs = manufactured_radial(n)
    errors = [solve_radial_ball(n, g, rhs=rhs, initial=exact).error_against(exact) for g in grids]
    orders = [float(np.log2(a / b)) for a, b in zip(errors, errors[1:])]
    return {"grids": list(grids), "errors": errors, "orders": orders}


def reinhardt_self_convergence(domain: ReinhardtDomain, sizes: Sequence[int] = (33, 65, 129), config: SolverConfig | None = None) -> dict:
    """Differences of successive nested solves at the coarsest grid's interior nodes.

    The grading does not depend on the grid size, so size 2^k + 1 meshes are
    nested and node (i, j) of the coarsest grid is node (i, j) * 2^l of finer ones.
    """
    config = config or SolverConfig()
    fields = [solve_reinhardt_2d(domain, MeshSpec(size=s), config) for s in sizes]
    base = sizes[0] - 1
    picks = []
    for s, f in zip(sizes, fields):
        step = (s - 1) // base
        if step * base != s - 1:
            raise ValueError("grid sizes must be nested (size - 1 multiples of the coarsest)")
        picks.append(f.v[::step, ::step])
    interior = fields[0].mesh.unknown
    diffs = [float(np.max(np.abs(b - a)[interior])) for a, b in zip(picks, picks[1:])]
    orders = [float(np.log2(a / b)) for a, b in zip(diffs, diffs[1:])]
    return {"sizes": list(sizes), "differences": diffs, "orders": orders, "iterations": [f.iterations for f in fields]}


# ---------------------------------------------------------------------------
# 2D Reinhardt solver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 40
    max_halvings: int = 20
    jacobian: str = "analytic"  # or "fd" (verification path, small grids only)


@dataclass
class ReinhardtField:
    """Converged (or checkpointed) solution v = -rho on a 2D Reinhardt mesh."""

    mesh: ReinhardtMesh
    v: np.ndarray
    iterations: int = 0
    residual: float = float("nan")
    trace: tuple = ()
    d1: np.ndarray = field(init=False, repr=False)
    d2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.d1, self.d2 = self.mesh.t_derivatives(self.v)

    @property
    def domain(self) -> ReinhardtDomain:
        return self.mesh.domain

    @property
    def t(self) -> np.ndarray:
        return self.mesh.t

    def J(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):  # NaN at the degenerate corner
            return fefferman_reduced(self.v, self.t, self.d1, self.d2)

    def interior_residual(self) -> float:
        return float(np.max(np.abs(self.J()[self.mesh.unknown] - 1.0)))

    def u_derivatives(self):
        """t-derivatives of u = -log v (interior nodes meaningful)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return log_derivatives(self.v, self.d1, self.d2)

    def grad_u_sq(self) -> np.ndarray:
        """|du|^2_g = U'^T A_U^{-1} (t o U') at interior nodes (NaN on the boundary)."""
        u1, u2 = self.u_derivatives()
        out = np.full(self.mesh.shape, np.nan)
        k = self.mesh.unknown
        a = reduced_hessian(self.t[k], u1[k], u2[k])
        out[k] = np.einsum("...i,...i->...", u1[k], np.linalg.solve(a, (self.t[k] * u1[k])[..., None])[..., 0])
        return out

    def det_hessian_rho(self) -> np.ndarray:
        """det H(rho) = (-1)^n det A_v (all nodes; NaN at the degenerate corner)."""
        with np.errstate(invalid="ignore"):
            return np.linalg.det(reduced_hessian(self.t, self.d1, self.d2)) * (-1) ** 2

    def min_eig_hessian_rho(self) -> np.ndarray:
        return np.linalg.eigvalsh(-z_hessian_real_point(self.t, self.d1, self.d2))[..., 0]

    def bochner_weight(self) -> np.ndarray:
        """w = e^u (|du|^2_g - 1) = -det H(rho) / J(rho), at every node.

        At the degenerate corner the value is extrapolated from its neighbours.
        """
        w = -self.det_hessian_rho() / self.J()
        n = self.mesh.spec.size
        w[n - 1, n - 1] = w[n - 1, n - 2] + w[n - 2, n - 1] - w[n - 2, n - 2]
        return w

    def to_scalar_field(self) -> ScalarField:
        """rho(z) = -v(|z_1|^2, |z_2|^2) by bicubic interpolation in mesh coordinates (no exact derivatives)."""
        from scipy.interpolate import RectBivariateSpline

        spline = RectBivariateSpline(self.mesh.xi, self.mesh.eta, self.v, kx=3, ky=3)
        mesh = self.mesh

        def f(x):
            t = np.array([x[0] ** 2 + x[2] ** 2, x[1] ** 2 + x[3] ** 2])
            q = mesh.locate(t)
            return -float(spline(q[0], q[1])[0, 0])

        return ScalarField(f, 2, exact=False, name=f"solved({self.domain.name})")


def _pd_ok(mesh: ReinhardtMesh, v: np.ndarray) -> tuple[bool, tuple | None]:
    """v > 0 and H(u) positive definite at every unknown node; returns (ok, offending node)."""
    k = mesh.unknown
    if np.any(v[k] <= 0):
        idx = np.argwhere(k & (v <= 0))[0]
        return False, tuple(int(i) for i in idx)
    d1, d2 = mesh.t_derivatives(v)
    u1, u2 = log_derivatives(v[k], d1[k], d2[k])
    h = z_hessian_real_point(mesh.t[k], u1, u2)
    ok = (h[:, 0, 0] > 0) & (h[:, 1, 1] > 0) & (h[:, 0, 0] * h[:, 1, 1] - h[:, 0, 1] * h[:, 1, 0] > 0)
    if np.all(ok):
        return True, None
    bad = np.argwhere(k)[np.argmin(ok)]
    return False, tuple(int(i) for i in bad)


def _residual(mesh: ReinhardtMesh, v: np.ndarray, rhs: float | np.ndarray = 1.0) -> np.ndarray:
    d1, d2 = mesh.t_derivatives(v)
    return (fefferman_reduced(v, mesh.t, d1, d2) - rhs)[mesh.unknown]


def _jacobian_analytic(mesh: ReinhardtMesh, v: np.ndarray) -> sp.csr_matrix:
    """d(det N)/dv via Jacobi's formula d det = tr(adj(N) dN) and the stencil chain rule."""
    t = mesh.t
    d1, d2 = mesh.t_derivatives(v)
    N = bordered(v, t, d1, d2)
    k = mesh.unknown
    cof = np.zeros_like(N)
    cof[k] = np.linalg.det(N[k])[:, None, None] * np.swapaxes(np.linalg.inv(N[k]), -1, -2)
    t1, t2 = t[..., 0], t[..., 1]
    # derivative of det N w.r.t. (v, v1, v2, v11, v12, v22)
    c_v = cof[..., 0, 0]
    c_1 = t1 * cof[..., 0, 1] + cof[..., 1, 0] + cof[..., 1, 1]
    c_2 = t2 * cof[..., 0, 2] + cof[..., 2, 0] + cof[..., 2, 2]
    c_11 = t1 * cof[..., 1, 1]
    c_12 = t2 * cof[..., 1, 2] + t1 * cof[..., 2, 1]
    c_22 = t2 * cof[..., 2, 2]
    ct = np.stack([c_1, c_2, c_11, c_12, c_22], -1)
    cq = np.einsum("...i,...ij->...j", ct, np.nan_to_num(mesh.chain))
    jac = sp.diags(c_v.reshape(-1))
    for j, key in enumerate(("x", "y", "xx", "xy", "yy")):
        jac = jac + sp.diags(cq[..., j].reshape(-1)) @ mesh.Dq[key]
    idx = np.flatnonzero(k.reshape(-1))
    return jac.tocsr()[idx][:, idx]


def _jacobian_fd(mesh: ReinhardtMesh, v: np.ndarray, h: float = 1e-7) -> sp.csr_matrix:
    idx = np.flatnonzero(mesh.unknown.reshape(-1))
    base = _residual(mesh, v)
    cols = []
    flat = v.reshape(-1)
    for i in idx:
        w = flat.copy()
        w[i] += h
        cols.append((_residual(mesh, w.reshape(v.shape)) - base) / h)
    return sp.csr_matrix(np.array(cols).T)


def solve_reinhardt_2d(
    domain: ReinhardtDomain,
    spec: MeshSpec = MeshSpec(),
    config: SolverConfig = SolverConfig(),
    initial: np.ndarray | None = None,
    mesh: ReinhardtMesh | None = None,
) -> ReinhardtField:
    """Damped Newton for J(-v) = 1 on a torus-invariant domain in C^2.

    Starts from v0 = -phi0 unless ``initial`` is given.  Each step is halved
    (at most ``max_halvings`` times) until v stays positive, H(u) stays
    positive definite at every interior node and the residual decreases.
    """
    if domain.n != 2:
        raise ValueError("solve_reinhardt_2d needs n = 2")
    domain.check_pseudoconvex()
    mesh = mesh or ReinhardtMesh(domain, spec)
    v = -domain.phi0(mesh.t) if initial is None else np.array(initial, dtype=float)
    v[mesh.boundary] = 0.0
    ok, node = _pd_ok(mesh, v)
    if not ok:
        raise SolverError(f"initial guess leaves the pseudoconvex cone at node {node}")
    k = mesh.unknown
    trace = []
    for it in range(config.max_iter + 1):
        r = _residual(mesh, v)
        res = float(np.max(np.abs(r)))
        trace.append(res)
        log.debug("newton %d residual %.3e", it, res)
        if res <= config.tol:
            return ReinhardtField(mesh, v, it, res, tuple(trace))
        if it == config.max_iter:
            break
        jac = _jacobian_analytic(mesh, v) if config.jacobian == "analytic" else _jacobian_fd(mesh, v)
        step = spla.spsolve(jac.tocsc(), -r)
        lam = 1.0
        for _ in range(config.max_halvings + 1):
            trial = v.copy()
            trial[k] += lam * step
            ok, node = _pd_ok(mesh, trial)
            if ok and np.max(np.abs(_residual(mesh, trial))) < res:
                break
            lam *= 0.5
        else:
            raise SolverError(f"damping failed after {config.max_halvings} halvings (last offending node {node})", trace)
        v = trial
    raise SolverError(f"Newton did not converge in {config.max_iter} iterations", trace)


# ---------------------------------------------------------------------------
# Bochner defect
# ---------------------------------------------------------------------------


def bochner_weight_field(rho: ScalarField) -> ScalarField:
    """w = e^u (|du|^2_g - 1) = -det H(rho) / J(rho) as a field (exact when rho is)."""
    from .wirtinger import jax_wirtinger_12

    n = rho.n
    if rho.exact:
        w = jax_wirtinger_12(rho.func, n)

        def f(x):
            val, d, h = w(x)
            top = jnp.concatenate([jnp.reshape(val, (1,)) + 0j, jnp.conj(d)])
            rows = jnp.concatenate([d[:, None], h], axis=1)
            bord = jnp.concatenate([top[None, :], rows], axis=0)
            J = -jnp.real(jnp.linalg.det(bord))
            return -jnp.real(jnp.linalg.det(h)) / J

        return ScalarField(f, n, True, "bochner-weight", rho.clearance)

    def g(x):
        from .wirtinger import to_complex

        jet = wirtinger_jet(rho, to_complex(x), 2)
        J = float(-np.real(np.linalg.det(bordered_matrix(jet))))
        return float(-np.real(np.linalg.det(jet.hessian)) / J)

    return ScalarField(g, n, False, "bochner-weight", rho.clearance)


def bochner_defect(rho: ScalarField, z) -> float:
    """Delta [e^u (|du|^2_g - 1)] for the metric of u = -log(-rho) at z; nonpositive by the claimed Bochner inequality."""
    from .kahler import defining_metric, laplace_beltrami

    m = defining_metric(rho)(z, derivatives=False)
    return laplace_beltrami(bochner_weight_field(rho), m)


def bochner_defect_field(f: ReinhardtField) -> np.ndarray:
    """Delta w at every interior node of a solved field, with Delta = 2 tr(A_U^{-1} A_w)."""
    w = f.bochner_weight()
    w1, w2 = f.mesh.t_derivatives(w)
    u1, u2 = f.u_derivatives()
    k = f.mesh.unknown
    out = np.full(f.mesh.shape, np.nan)
    au = reduced_hessian(f.t[k], u1[k], u2[k])
    aw = reduced_hessian(f.t[k], w1[k], w2[k])
    out[k] = 2.0 * np.trace(np.linalg.solve(au, aw), axis1=-2, axis2=-1)
    return out


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_checkpoint(f: ReinhardtField, path: str) -> None:
    """Text checkpoint: one JSON header line, then ``t1 t2 v`` rows in mesh order."""
    header = {
        "format": "reinhardt-field/1",
        "domain": f.domain.to_json(),
        "mesh": f.mesh.spec.to_json(),
        "iterations": f.iterations,
        "residual": f.residual,
    }
    rows = np.column_stack([f.t.reshape(-1, 2), f.v.reshape(-1)])
    lines = [json.dumps(header, sort_keys=True)] + [f"{a:.17e} {b:.17e} {c:.17e}" for a, b, c in rows]
    atomic_write(path, "\n".join(lines) + "\n")


def load_checkpoint(path: str) -> ReinhardtField:
    with open(path) as fh:
        header = json.loads(fh.readline())
        data = np.loadtxt(fh, ndmin=2)
    if header.get("format") != "reinhardt-field/1":
        raise ValueError(f"{path}: unknown checkpoint format")
    domain = ReinhardtDomain.from_json(header["domain"])
    spec = MeshSpec(**header["mesh"])
    mesh = ReinhardtMesh(domain, spec)
    if data.shape[0] != spec.size**2:
        raise ValueError(f"{path}: expected {spec.size ** 2} rows, found {data.shape[0]}")
    if np.max(np.abs(data[:, :2].reshape(mesh.t.shape) - mesh.t)) > 1e-9:
        raise ValueError(f"{path}: node coordinates do not match the mesh descriptor")
    v = data[:, 2].reshape(mesh.shape)
    return ReinhardtField(mesh, v, int(header["iterations"]), float(header["residual"]))
