"""Kahler metrics built from defining functions and potentials.

Conventions
-----------
* ``g[i, j] = g_{i jbar}``; the Riemannian metric is ``2 Re g_{i jbar} dz_i dzbar_j``
  and the Laplace-Beltrami operator is ``Delta f = 2 g^{i jbar} f_{i jbar}``.
* ``ginv`` is the numerical matrix inverse of ``g``, so ``ginv[j, i] = g^{i jbar}``.
* ``dg[i, k, l] = d g_{k lbar} / dz_i`` and ``ddg[i, j, k, l] = d^2 g_{k lbar} / dz_i dzbar_j``.
* Curvature ``R_{i jbar k lbar} = d_i d_jbar g_{k lbar} - g^{p qbar} d_jbar g_{p lbar} d_i g_{k qbar}``;
  Ricci ``R_{i jbar} = -d_i d_jbar log det g``.  With these signs the unit-ball
  metric ``-i d dbar log(1-|z|^2)`` has ``R = g g + g g`` and ``Ric = -(n+1) g``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import jax.numpy as jnp

from .wirtinger import (
    JetError,
    ScalarField,
    as_point,
    jax_wirtinger_12,
    to_complex,
    wirtinger_fd,
    wirtinger_jet,
)

HERMITIAN_TOL = 1e-10
BOUNDARY_FLOOR = 1e-6


class MetricError(ValueError):
    """Metric construction or evaluation failed (outside domain, not positive, ...)."""


@dataclass(frozen=True)
class MetricJet:
    point: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    det: float
    dg: np.ndarray | None = None
    ddg: np.ndarray | None = None
    provenance: str = "explicit"

    @property
    def n(self) -> int:
        return self.g.shape[0]

    @property
    def dgbar(self) -> np.ndarray:
        """``dgbar[j, k, l] = d g_{k lbar} / dzbar_j``."""
        return np.conj(np.transpose(self.dg, (0, 2, 1)))

    def herm(self, a, b) -> complex:
        """Hermitian product ``g_{i jbar} a^i conj(b^j)`` of (1,0)-vectors."""
        return complex(np.asarray(a) @ self.g @ np.conj(b))

    def riem(self, a, b) -> float:
        """Riemannian inner product of the real vectors with (1,0)-parts a, b."""
        return 2.0 * self.herm(a, b).real

    def identity_defect(self) -> float:
        return float(np.max(np.abs(self.g @ self.ginv - np.eye(self.n))))


def _finish(z, g, provenance, dg=None, ddg=None) -> MetricJet:
    g = 0.5 * (g + g.conj().T)
    eig = np.linalg.eigvalsh(g)
    if not np.all(np.isfinite(eig)):
        raise MetricError(f"non-finite metric at {z}")
    if eig[0] <= 0:
        raise MetricError(f"metric not positive definite at {z} (min eigenvalue {eig[0]:.3e})")
    return MetricJet(z, g, np.linalg.inv(g), float(np.prod(eig)), dg, ddg, provenance)


class MetricField:
    """Immutable map point -> MetricJet.

    ``g_func`` returns the metric matrix only; derivative arrays come either
    from ``jet_func`` (exact) or from finite differences of ``g_func``.
    """

    def __init__(
        self,
        n: int,
        g_func: Callable[[np.ndarray], np.ndarray],
        provenance: str,
        jet_func: Callable[[np.ndarray], MetricJet] | None = None,
        clearance: Callable[[np.ndarray], float] | None = None,
        potential: ScalarField | None = None,
        depth: Callable[[np.ndarray], float] | None = None,
    ):
        self.n = n
        self.g_func = g_func
        self.provenance = provenance
        self.jet_func = jet_func
        self.clearance = clearance
        self.potential = potential
        self.depth = depth

    @property
    def exact(self) -> bool:
        return self.jet_func is not None

    def g(self, z) -> np.ndarray:
        return self.g_func(as_point(z, self.n))

    def __call__(self, z, derivatives: bool = True) -> MetricJet:
        z = as_point(z, self.n)
        if self.jet_func is not None:
            return self.jet_func(z) if derivatives else _finish(z, self.g_func(z), self.provenance)
        self._check_floor(z)
        g = self.g_func(z)
        if not derivatives:
            return _finish(z, g, self.provenance)
        tensors, _, _ = wirtinger_fd(self.g_func_real, z, 2, self._clearance(z))
        n = self.n
        dg = tensors[1][:n]
        ddg = tensors[2][:n, n:]
        return _finish(z, g, self.provenance, dg, ddg)

    def g_func_real(self, x: np.ndarray) -> np.ndarray:
        return self.g_func(to_complex(x))

    def _clearance(self, z):
        return self.clearance(z) if self.clearance is not None else None

    def _check_floor(self, z):
        if self.depth is not None and self.depth(z) < BOUNDARY_FLOOR:
            raise MetricError(f"-phi < {BOUNDARY_FLOOR:g} at {z}: finite differences refused")


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def potential_metric(u: ScalarField, provenance: str = "potential", depth=None) -> MetricField:
    """Metric ``g_{i jbar} = u_{i jbar}`` of a Kahler potential."""
    n = u.n

    def g_func(z):
        return wirtinger_jet(u, z, 2).hessian

    jet_func = None
    if u.exact:

        def jet_func(z):
            jet = wirtinger_jet(u, z, 4)
            dg = jet.d(2, 1)  # [i, k, l] = u_{i k lbar}
            ddg = np.transpose(jet.d(2, 2), (0, 2, 1, 3))  # u_{i k jbar lbar} -> [i, j, k, l]
            return _finish(z, jet.hessian, provenance, dg, ddg)

    return MetricField(n, g_func, provenance, jet_func, u.clearance, u, depth)


def defining_metric(phi: ScalarField) -> MetricField:
    """The metric ``-i d dbar log(-phi)`` of a negative defining function."""

    def u(v):
        return -jnp.log(-v) if phi.exact else -np.log(-v)

    pot = phi.map(u, name=f"-log(-{phi.name})")

    def depth(z):
        return -phi(z)

    return potential_metric(pot, "defining", depth)


def flat_metric(n: int, scale: float = 1.0) -> MetricField:
    """Constant metric ``g = scale * I``; scale 1/2 is the Euclidean metric of R^{2n}."""
    g0 = scale * np.eye(n, dtype=complex)
    zero1 = np.zeros((n, n, n), dtype=complex)
    zero2 = np.zeros((n, n, n, n), dtype=complex)

    def jet_func(z):
        return _finish(z, g0.copy(), "flat", zero1, zero2)

    return MetricField(n, lambda z: g0.copy(), "flat", jet_func)


def explicit_metric(n: int, g_func: Callable, clearance=None) -> MetricField:
    """Metric from an arbitrary hermitian-matrix-valued map; derivatives by finite differences."""
    return MetricField(n, g_func, "explicit", None, clearance)


def ball_metric(n: int) -> MetricField:
    from .catalog import ball_potential

    return potential_metric(ball_potential(n), "ball")


# ---------------------------------------------------------------------------
# defining-function metric and closed forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HessianData:
    """Complex Hessian of a defining function and its raised gradients."""

    hess: np.ndarray  # H[i, j] = phi_{i jbar}
    hess_inv: np.ndarray  # numerical inverse; hess_inv[j, i] = phi^{i jbar}
    grad: np.ndarray  # phi_i
    raised: np.ndarray  # phi^i = phi^{i jbar} phi_jbar
    raised_bar: np.ndarray  # phi^{jbar} = phi^{i jbar} phi_i
    levi_norm_sq: float  # |d phi|^2_phi

    @property
    def n(self) -> int:
        return self.hess.shape[0]


def hessian_data(phi: ScalarField, z, method: str = "auto") -> HessianData:
    jet = wirtinger_jet(phi, z, 2, method=method)
    return hessian_data_from_jet(jet)


def hessian_data_from_jet(jet) -> HessianData:
    h = jet.hessian
    grad = jet.gradient
    try:
        hinv = np.linalg.inv(h)
    except np.linalg.LinAlgError as exc:
        raise MetricError("singular complex Hessian") from exc
    raised = hinv.T @ np.conj(grad)
    raised_bar = hinv @ grad
    levi = float(np.real(np.conj(grad) @ hinv @ grad))
    return HessianData(h, hinv, grad, raised, raised_bar, levi)


def metric_from_defining(phi: ScalarField, z, derivatives: bool = False) -> MetricJet:
    """``g_{i jbar} = -phi_{i jbar}/phi + phi_i phi_jbar / phi^2`` at z."""
    z = as_point(z, phi.n)
    jet = wirtinger_jet(phi, z, 2)
    p = jet.value
    if p >= 0:
        raise MetricError(f"phi(z) = {p:.3e} >= 0: point outside the domain")
    if not phi.exact and -p < BOUNDARY_FLOOR:
        raise MetricError(f"-phi < {BOUNDARY_FLOOR:g}: finite differences refused")
    grad = jet.gradient
    g = -jet.hessian / p + np.outer(grad, np.conj(grad)) / p**2
    if not derivatives:
        try:
            return _finish(z, g, "defining")
        except MetricError as exc:
            raise MetricError(f"strict pseudoconvexity fails at {z}: {exc}") from exc
    full = defining_metric(phi)(z)
    return MetricJet(z, full.g, full.ginv, full.det, full.dg, full.ddg, "defining")


def metric_inverse_closed_form(h: HessianData, phi_value: float) -> np.ndarray:
    """Inverse metric from ``g^{i jbar} = -phi (phi^{i jbar} + phi^i phi^{jbar} / (phi - |d phi|^2_phi))``.

    Returned in the same layout as ``MetricJet.ginv`` (the matrix inverse of g).
    """
    if phi_value >= 0:
        raise MetricError("phi must be negative")
    denom = phi_value - h.levi_norm_sq
    if denom == 0:
        raise MetricError("phi - |d phi|^2 vanished: internal inconsistency")
    upper = -phi_value * (h.hess_inv.T + np.outer(h.raised, h.raised_bar) / denom)
    return upper.T


def metric_det(h: HessianData, phi_value: float) -> float:
    """``det g = (-phi)^{-(n+1)} (|d phi|^2_phi - phi) det H(phi)``."""
    if phi_value >= 0:
        raise MetricError("phi must be negative")
    n = h.n
    return float((-phi_value) ** (-(n + 1)) * (h.levi_norm_sq - phi_value) * np.real(np.linalg.det(h.hess)))


def raised_gradient_defect(h: HessianData, phi_value: float) -> float:
    """Check ``g^{i jbar} phi_jbar = (-phi)^2 phi^i / (|d phi|^2_phi - phi)``; returns max defect."""
    ginv = metric_inverse_closed_form(h, phi_value)
    lhs = ginv.T @ np.conj(h.grad)
    rhs = phi_value**2 * h.raised / (h.levi_norm_sq - phi_value)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def laplace_beltrami(f: ScalarField, m: MetricJet, method: str = "auto") -> float:
    """``Delta f = 2 g^{i jbar} f_{i jbar}``."""
    hf = wirtinger_jet(f, m.point, 2, method=method).hessian
    return float(2.0 * np.real(np.trace(m.ginv @ hf)))


def gradient_norm_sq(u: ScalarField, m: MetricJet, method: str = "auto") -> float:
    """``|du|^2_g = g^{i jbar} u_i u_jbar``."""
    du = wirtinger_jet(u, m.point, 1, method=method).gradient
    return max(0.0, float(np.real(np.vdot(du, m.ginv @ du))))


@dataclass(frozen=True)
class CurvatureTensor:
    R: np.ndarray  # R[i, j, k, l] = R_{i jbar k lbar}
    ricci: np.ndarray
    scalar: float
    metric: MetricJet

    def symmetry_defect(self) -> float:
        """Largest violation of the Kahler curvature symmetries."""
        r = self.R
        d1 = np.abs(r - np.transpose(r, (2, 1, 0, 3)))  # i <-> k
        d2 = np.abs(r - np.transpose(r, (0, 3, 2, 1)))  # j <-> l
        d3 = np.abs(r - np.conj(np.transpose(r, (1, 0, 3, 2))))  # conjugation
        scale = max(1.0, float(np.max(np.abs(r))))
        return float(max(d1.max(), d2.max(), d3.max()) / scale)

    def evaluate(self, x, xb, y, yb) -> complex:
        """R(X, Ybar-type slots) contracted: sum R[i,j,k,l] x_i conj-slot xb_j y_k yb_l."""
        return complex(np.einsum("ijkl,i,j,k,l->", self.R, x, xb, y, yb))


def curvature_from_jet(m: MetricJet) -> CurvatureTensor:
    if m.dg is None or m.ddg is None:
        raise MetricError("metric jet lacks derivative arrays")
    quad = np.einsum("qp,jlp,ikq->ijkl", m.ginv, np.conj(m.dg), m.dg)
    r = m.ddg - quad
    ric = -np.einsum("lk,ijkl->ij", m.ginv, r)
    scalar = float(np.real(np.trace(m.ginv @ ric)))
    return CurvatureTensor(r, ric, scalar, m)


def curvature_tensor(metric_field: MetricField, z) -> CurvatureTensor:
    """Curvature tensor of the metric field at z (exact jets when available)."""
    return curvature_from_jet(metric_field(z))


def ricci(metric_field: MetricField, z, method: str = "auto") -> np.ndarray:
    """``R_{i jbar} = -d_i d_jbar log det g``.

    ``method="tensor"`` contracts the curvature tensor, ``"fd"`` differentiates
    ``log det g`` of the assembled metric by finite differences.
    """
    z = as_point(z, metric_field.n)
    if method == "auto":
        method = "tensor" if metric_field.exact else "fd"
    if method == "tensor":
        return curvature_tensor(metric_field, z).ricci
    if method != "fd":
        raise ValueError(f"unknown method {method!r}")
    metric_field._check_floor(z)
    n = metric_field.n

    def logdet(x):
        g = metric_field.g_func(to_complex(x))
        sign, val = np.linalg.slogdet(g)
        if np.real(sign) <= 0:
            raise MetricError(f"determinant not positive at stencil point {to_complex(x)}")
        return float(val)

    tensors, _, _ = wirtinger_fd(logdet, z, 2, metric_field._clearance(z))
    return -tensors[2][:n, n:]


def _log_weight_field(phi: ScalarField) -> ScalarField:
    """log[(|d phi|^2_phi - phi) det H(phi)] as a scalar field."""
    n = phi.n
    if phi.exact:
        w = jax_wirtinger_12(phi.func, n)

        def f(x):
            val, d, h = w(x)
            levi = jnp.real(jnp.conj(d) @ jnp.linalg.solve(h, d))
            return jnp.log((levi - val) * jnp.real(jnp.linalg.det(h)))

        return ScalarField(f, n, True, "log-weight", phi.clearance)

    def g(x):
        hd = hessian_data_from_jet(wirtinger_jet(phi, to_complex(x), 2))
        val = phi.value_real(x)
        return float(np.log((hd.levi_norm_sq - val) * np.real(np.linalg.det(hd.hess))))

    return ScalarField(g, n, False, "log-weight", phi.clearance)


def ricci_explicit_defining(phi: ScalarField, z) -> np.ndarray:
    """``R_{i jbar} = -(n+1) g_{i jbar} - d_i d_jbar log[(|d phi|^2_phi - phi) det H(phi)]``."""
    z = as_point(z, phi.n)
    g = metric_from_defining(phi, z).g
    lw = wirtinger_jet(_log_weight_field(phi), z, 2).hessian
    return -(phi.n + 1) * g - lw


def bisectional_ratio(c: CurvatureTensor, x, y) -> float:
    """``R(X, Xbar, Y, Ybar) / (|X|^2 |Y|^2 + |<X, Y>|^2)`` for (1,0)-vectors X, Y."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if not np.any(x) or not np.any(y):
        raise ValueError("bisectional ratio needs nonzero vectors")
    m = c.metric
    num = c.evaluate(x, np.conj(x), y, np.conj(y)).real
    den = m.herm(x, x).real * m.herm(y, y).real + abs(m.herm(x, y)) ** 2
    return float(num / den)


# ---------------------------------------------------------------------------
# level sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelSetFrame:
    nu: np.ndarray  # (1,0)-part of the outward unit normal
    jnu: np.ndarray
    xs: tuple  # complex tangent directions X_alpha
    jxs: tuple
    pi_jnu: float
    pi_pairs: np.ndarray  # Pi(X,X) + Pi(JX,JX) per alpha
    orthonormality_defect: float
    metric: MetricJet = field(repr=False)


def _second_form(m: MetricJet, jet, grad_norm: float):
    """Pi(X, X) = Hess phi (X, X) / |grad phi| for tangent X."""
    n = m.n
    d1 = jet.gradient
    hol = jet.d(2, 0)
    mixed = jet.hessian
    gamma = np.einsum("lk,ijl->kij", m.ginv, m.dg)  # Gamma^k_{ij}
    cov = hol - np.einsum("kij,k->ij", gamma, d1)

    def pi(x):
        val = 2.0 * np.real(x @ cov @ x) + 2.0 * np.real(x @ mixed @ np.conj(x))
        return float(val / grad_norm)

    return pi


def level_set_second_fundamental_form(metric_field: MetricField, phi: ScalarField, z) -> LevelSetFrame:
    """Second fundamental form of the level set {phi = phi(z)} with outward normal grad phi."""
    z = as_point(z, phi.n)
    n = phi.n
    m = metric_field(z)
    jet = wirtinger_jet(phi, z, 2)
    d1 = jet.gradient
    if np.max(np.abs(d1)) == 0:
        raise MetricError("vanishing gradient: level set is singular")
    # (1,0)-part of the Riemannian gradient of phi: grad^i = g^{i jbar} phi_jbar
    grad = m.ginv.T @ np.conj(d1)
    norm = np.sqrt(m.riem(grad, grad))
    nu = grad / norm
    basis = [nu]
    for k in range(n):
        e = np.zeros(n, dtype=complex)
        e[k] = 1.0
        v = e - sum(m.herm(e, b) / m.herm(b, b) * b for b in basis)
        if np.sqrt(abs(m.herm(v, v))) > 1e-12:
            basis.append(v / np.sqrt(2.0 * m.herm(v, v).real))
        if len(basis) == n:
            break
    if len(basis) != n:
        raise MetricError("frame orthonormalization failed")
    xs = tuple(basis[1:])
    jxs = tuple(1j * x for x in xs)
    jnu = 1j * nu
    pi = _second_form(m, jet, norm)
    pairs = np.array([pi(x) + pi(jx) for x, jx in zip(xs, jxs)])
    frame = [nu, jnu] + [v for pair in zip(xs, jxs) for v in pair]
    gram = np.array([[m.riem(a, b) for b in frame] for a in frame])
    defect = float(np.max(np.abs(gram - np.eye(len(frame)))))
    return LevelSetFrame(nu, jnu, xs, jxs, pi(jnu), pairs, defect, m)


# ---------------------------------------------------------------------------
# ACH deviation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AchDeviation:
    theta: np.ndarray  # Theta_{i jbar} at the point
    sup_norm: float  # max entrywise |Theta| over the sample set
    hermitian_defect: float


def ach_deviation(phi: ScalarField, rho: ScalarField, z, samples: Sequence | None = None) -> AchDeviation:
    """``Theta = omega_rho - omega_phi``: complex Hessian of ``-log(rho/phi)``."""
    from .wirtinger import combine

    if phi.exact and rho.exact:
        ratio_log = combine([rho, phi], lambda r, p: -jnp.log(r / p), "-log(rho/phi)")
    else:
        ratio_log = combine([rho, phi], lambda r, p: -np.log(r / p), "-log(rho/phi)")
    pts = [as_point(z, phi.n)] + [as_point(s, phi.n) for s in (samples or [])]
    sup = 0.0
    theta0 = None
    for p in pts:
        r, q = rho(p), phi(p)
        if q >= 0 or r >= 0:
            raise MetricError(f"defining functions must be negative at {p}")
        if r / q <= 0:
            raise MetricError(f"rho/phi nonpositive at {p}")
        th = wirtinger_jet(ratio_log, p, 2).hessian
        sup = max(sup, float(np.max(np.abs(th))))
        if theta0 is None:
            theta0 = th
    herm = float(np.max(np.abs(theta0 - theta0.conj().T)))
    return AchDeviation(theta0, sup, herm)
