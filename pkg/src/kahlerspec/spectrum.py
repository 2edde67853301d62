"""Bottom-of-spectrum estimates: Rayleigh sweeps, barrier checks, truncated Dirichlet problems.

All quotients use the Riemannian normalization |grad f|^2 = 2 g^{i jbar} f_i f_jbar
and the Kahler volume density det g (constant factors such as 2^n pi^n cancel
in every quotient and are dropped).

Radial data are functions of s = |z|^2 and its complement y = 1 - s, which is
passed separately so that boundary-layer quadrature nodes keep full relative
precision in y.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RectBivariateSpline
from scipy.special import roots_jacobi, roots_legendre

from . import NORMALIZATION, __version__

# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureScheme:
    """Nodes/weights on (0, 1) for integrals  int_0^1 F(x) (1 - x)^beta dx  with F smooth.

    Composite Gauss-Legendre on breakpoints 1 - ratio^{-k}, with a
    Gauss-Jacobi rule absorbing (1 - x)^beta exactly on the last cell.
    ``comp`` holds 1 - nodes computed without cancellation.
    """

    nodes: np.ndarray
    comp: np.ndarray
    weights: np.ndarray
    beta: float
    ratio: float
    cells: int
    order: int

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray) -> float:
        """Sum of weights * values, values being F at the nodes (weight already included)."""
        return float(np.sum(self.weights * values))


def graded_scheme(beta: float, cells: int = 32, order: int = 12, ratio: float = 2.0) -> QuadratureScheme:
    if beta <= -1:
        raise ValueError(f"(1-x)^beta is not integrable for beta = {beta}")
    if not np.all(np.array([cells, order]) > 0) or ratio <= 1:
        raise ValueError("cells, order must be positive and ratio > 1")
    ys = ratio ** -np.arange(cells + 1, dtype=float)  # complements of breakpoints, 1 .. small
    gx, gw = roots_legendre(order)
    nodes, comp, weights = [], [], []
    for k in range(cells):
        y0, y1 = ys[k], ys[k + 1]  # cell [1-y0, 1-y1]
        yc = 0.5 * (y0 + y1) - 0.5 * (y0 - y1) * gx
        w = 0.5 * (y0 - y1) * gw * yc**beta
        nodes.append(1.0 - yc)
        comp.append(yc)
        weights.append(w)
    jx, jw = roots_jacobi(order, beta, 0.0)  # weight (1 - x)^beta on [-1, 1]
    yl = ys[-1]
    yc = 0.5 * yl * (1.0 - jx)
    nodes.append(1.0 - yc)
    comp.append(yc)
    weights.append(jw * (0.5 * yl) ** (beta + 1.0))
    return QuadratureScheme(np.concatenate(nodes), np.concatenate(comp), np.concatenate(weights), beta, ratio, cells, order)


def beta_check(n: int, alpha: float, scheme_kw: dict | None = None) -> float:
    """Relative error of  int (1-s)^{2alpha-n-1} s^{n-1} ds  against B(n, 2alpha-n)."""
    beta = 2 * alpha - n - 1
    q = graded_scheme(beta, **(scheme_kw or {}))
    val = q.integrate(q.nodes ** (n - 1))
    exact = math.exp(math.lgamma(n) + math.lgamma(2 * alpha - n) - math.lgamma(alpha * 2))
    return abs(val / exact - 1.0)


# ---------------------------------------------------------------------------
# radial metric data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialData:
    """Radial metric data on the ball {s < 1} (or the flat unit disc).

    density(s, y): det g;  grad_s_sq(s, y): |ds|^2_g;  w(s, y) = -phi and
    dw(s, y) its s-derivative; ``scale`` multiplies the metric.
    """

    n: int
    name: str
    ach: bool
    density: Callable
    grad_s_sq: Callable
    w: Callable
    dw: Callable
    scale: float = 1.0

    @classmethod
    def ball(cls, n: int) -> "RadialData":
        """Ball metric -i d dbar log(1-|z|^2): det g = (1-s)^{-(n+1)}, |ds|^2_g = s (1-s)^2."""
        return cls(
            n,
            f"ball(n={n})",
            True,
            lambda s, y: y ** (-(n + 1.0)),
            lambda s, y: s * y**2,
            lambda s, y: y,
            lambda s, y: -np.ones_like(s),
        )

    @classmethod
    def flat_disc(cls, n: int = 1) -> "RadialData":
        """Euclidean metric g = I/2 on the unit ball of C^n (det g = 2^{-n}, |ds|^2_g = 2s)."""
        return cls(
            n,
            f"flat-sanity(n={n})",
            False,
            lambda s, y: np.full_like(s, 0.5**n),
            lambda s, y: 2.0 * s,
            lambda s, y: y,
            lambda s, y: -np.ones_like(s),
        )

    @classmethod
    def from_metric(cls, metric_field, n: int, name: str = "", ach: bool = True) -> "RadialData":
        """Radial data sampled pointwise from a unitarily invariant metric field at z = (sqrt s, 0, ...)."""
        from .catalog import norm_sq
        from .kahler import gradient_norm_sq

        s_field = norm_sq(n)

        def point(s):
            z = np.zeros(n, dtype=complex)
            z[0] = math.sqrt(s)
            return z

        def density(s, y):
            return np.array([metric_field(point(si), derivatives=False).det for si in np.ravel(s)]).reshape(np.shape(s))

        def grad(s, y):
            return np.array(
                [gradient_norm_sq(s_field, metric_field(point(si), derivatives=False)) for si in np.ravel(s)]
            ).reshape(np.shape(s))

        return cls(n, name or "metric-field", ach, density, grad, lambda s, y: y, lambda s, y: -np.ones_like(s))

    def scaled(self, c: float) -> "RadialData":
        """The metric c*g: det g -> c^n det g and |ds|^2 -> |ds|^2 / c."""
        d, g, n = self.density, self.grad_s_sq, self.n
        return RadialData(
            n, f"{self.name}*{c:g}", self.ach, lambda s, y: c**n * d(s, y), lambda s, y: g(s, y) / c, self.w, self.dw, self.scale * c
        )


# ---------------------------------------------------------------------------
# Rayleigh quotients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuotientValue:
    alpha: float
    value: float
    err_est: float


def _radial_quotient(data: RadialData, alpha: float, q: QuadratureScheme) -> float:
    n = data.n
    s, y = q.nodes, q.comp
    w, dw = data.w(s, y), data.dw(s, y)
    dens = data.density(s, y) * s ** (n - 1)
    # divide out the analytic (1-s)^beta carried by the weights
    yb = y**q.beta
    num = 2.0 * alpha**2 * w ** (2 * alpha - 2) * dw**2 * data.grad_s_sq(s, y) * dens / yb
    den = w ** (2 * alpha) * dens / yb
    return q.integrate(num) / q.integrate(den)


def rayleigh_quotient(data, alpha: float, q: QuadratureScheme | None = None, tol: float = 1e-6) -> QuotientValue:
    """Q(alpha) = int |grad f|^2 dV / int f^2 dV for f = (-phi)^alpha.

    ``data`` is a RadialData or a solved ReinhardtField (f = v^alpha there).
    The error estimate compares against a rule with 4 more points per cell.
    """
    n = data.n if isinstance(data, RadialData) else data.domain.n
    if alpha <= n / 2:
        raise ValueError(f"alpha = {alpha} <= n/2 = {n / 2}: the integrals diverge")
    beta = 2 * alpha - n - 1
    if isinstance(data, RadialData):
        q = q or graded_scheme(beta)
        if abs(q.beta - beta) > 1e-14:
            raise ValueError("quadrature scheme built for a different exponent")
        val = _radial_quotient(data, alpha, q)
        ref = _radial_quotient(data, alpha, graded_scheme(beta, q.cells, q.order + 4, q.ratio))
    else:
        val = _field_quotient(data, alpha, order=q.order if q else 8)
        ref = _field_quotient(data, alpha, order=(q.order if q else 8) + 4)
    err = abs(val - ref)
    if err > tol * max(1.0, abs(ref)):
        raise ValueError(f"quadrature error estimate {err:.2e} exceeds tolerance {tol:g}")
    return QuotientValue(alpha, ref, err)


class _FieldIntegrand:
    """Smooth factors of the Rayleigh integrands of a solved Reinhardt field on the unit square.

    With v = (1-xi)(1-eta) r and, by (hj) and the determinant ratio,
    det H(u) = J v^{-3} and |du|^2_g = 1 - v det H(rho)/J:
      int f^2 dV        = int v^{2a-3} J |det T'| dxi deta
      int |grad f|^2 dV = 2 a^2 int v^{2a-3} (J - v det H(rho)) |det T'| dxi deta.
    """

    def __init__(self, f):
        m = f.mesh
        n = m.spec.size
        xi, eta = m.xi, m.eta
        X, Y = np.meshgrid(xi, eta, indexing="ij")
        dq = m.q_derivatives(f.v)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = f.v / ((1 - X) * (1 - Y))
            r[n - 1, :] = -dq[n - 1, :, 0] / (1 - eta)
            r[:, n - 1] = -dq[:, n - 1, 1] / (1 - xi)
        r[n - 1, n - 1] = dq[n - 1, n - 1, 3]
        J = f.J()
        dh = f.det_hessian_rho()
        with np.errstate(invalid="ignore"):
            jac = np.abs(np.linalg.det(m.map.jac))
        mass = J * jac
        energy = (J - f.v * dh) * jac
        mass[n - 1, n - 1] = energy[n - 1, n - 1] = 0.0  # degenerate corner: det T' = 0
        self.r = RectBivariateSpline(xi, eta, r)
        self.mass = RectBivariateSpline(xi, eta, mass)
        self.energy = RectBivariateSpline(xi, eta, energy)
        self.breaks = xi


def _square_rule(breaks: np.ndarray, beta: float, order: int):
    """1D rule on [0,1] for F(x)(1-x)^beta with F smooth: Legendre on mesh cells, Jacobi on the last."""
    gx, gw = roots_legendre(order)
    jx, jw = roots_jacobi(order, beta, 0.0)
    nodes, comp, weights = [], [], []
    for a, b in zip(breaks[:-2], breaks[1:-1]):
        x = 0.5 * (a + b) + 0.5 * (b - a) * gx
        nodes.append(x)
        comp.append(1.0 - x)
        weights.append(0.5 * (b - a) * gw * (1.0 - x) ** beta)
    a = breaks[-2]
    yl = 1.0 - a
    yc = 0.5 * yl * (1.0 - jx)
    nodes.append(1.0 - yc)
    comp.append(yc)
    weights.append(jw * (0.5 * yl) ** (beta + 1.0))
    return np.concatenate(nodes), np.concatenate(comp), np.concatenate(weights)


def _field_quotient(f, alpha: float, order: int = 8) -> float:
    integ = getattr(f, "_rayleigh_cache", None)
    if integ is None:
        integ = _FieldIntegrand(f)
        f._rayleigh_cache = integ
    beta = 2 * alpha - 3
    x, cx, w = _square_rule(integ.breaks, beta, order)
    W = np.outer(w, w)
    rb = np.abs(integ.r(x, x)) ** beta
    num = 2 * alpha**2 * np.sum(W * rb * integ.energy(x, x))
    den = np.sum(W * rb * integ.mass(x, x))
    return float(num / den)


@dataclass(frozen=True)
class SweepResult:
    table: tuple  # QuotientValue entries
    limit: float
    limit_err: float
    model: str = "linear in (alpha - n/2)"


def alpha_sweep(data, alphas: Sequence[float], q_kw: dict | None = None) -> SweepResult:
    """Q(alpha) over a strictly decreasing alpha list, extrapolated linearly to alpha = n/2."""
    n = data.n if isinstance(data, RadialData) else data.domain.n
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("empty alpha list")
    if any(a <= n / 2 for a in alphas):
        raise ValueError(f"every alpha must exceed n/2 = {n / 2}")
    if any(b >= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alpha list must be strictly decreasing")
    table = []
    for a in alphas:
        if isinstance(data, RadialData):
            q = graded_scheme(2 * a - n - 1, **(q_kw or {}))
            table.append(rayleigh_quotient(data, a, q))
        else:
            table.append(rayleigh_quotient(data, a))
    x = np.array(alphas) - n / 2
    yv = np.array([t.value for t in table])
    if len(x) == 1:
        return SweepResult(tuple(table), float(yv[0]), float("inf"))
    coef, res, *_ = np.polyfit(x, yv, 1, full=True)
    limit = float(coef[1])
    fit_err = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    quad_err = max(t.err_est for t in table)
    return SweepResult(tuple(table), limit, fit_err + quad_err)


# ---------------------------------------------------------------------------
# barrier inequality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BarrierResult:
    passed: bool
    c: float
    eps: float
    checked: int
    min_ratio: float  # min of -Delta f / f over samples
    witness: np.ndarray | None = None
    witness_depth: float | None = None


def sample_near_boundary(phi, eps: float, count: int, rng: np.random.Generator, floor: float = 1e-8):
    """Points with -phi in [floor, eps], log-uniform depth, uniform directions (star-shaped domains)."""
    from scipy.optimize import brentq

    n = phi.n
    pts = []
    depths = np.exp(rng.uniform(np.log(floor), np.log(eps), size=count))
    for d in depths:
        u = rng.normal(size=n) + 1j * rng.normal(size=n)
        u /= np.linalg.norm(u)
        g = lambda r: phi(r * u) + d
        hi = 1.0
        while g(hi) < 0:
            hi *= 2
        pts.append(brentq(g, 0.0, hi, xtol=1e-15) * u)
    return pts


def barrier_check(metric_field, phi, c: float, eps: float, samples: int = 200, seed: int = 0, points=None) -> BarrierResult:
    """Check -Delta f >= c f for f = (-phi)^{n/2} at sampled points with -phi < eps."""
    from .kahler import BOUNDARY_FLOOR, laplace_beltrami

    n = phi.n
    if c <= 0 or c == n * n / 2:
        raise ValueError(f"c must be positive and different from n^2/2 = {n * n / 2}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    floor = 1e-8 if phi.exact else BOUNDARY_FLOOR
    pts = points if points is not None else sample_near_boundary(phi, eps, samples, np.random.default_rng(seed), floor)
    f = phi.map(lambda p: (-p) ** (n / 2), name="(-phi)^(n/2)")
    worst, witness, wd = np.inf, None, None
    for z in pts:
        depth = -phi(z)
        if depth >= eps:
            continue
        if not phi.exact and depth < BOUNDARY_FLOOR:
            raise ValueError(f"sample at depth {depth:.2e} is below the finite-difference floor")
        ratio = -laplace_beltrami(f, metric_field(z, derivatives=False)) / f(z)
        if ratio < worst:
            worst, witness, wd = ratio, np.asarray(z), depth
    passed = worst >= c
    return BarrierResult(passed, c, eps, len(pts), float(worst), None if passed else witness, None if passed else wd)


# ---------------------------------------------------------------------------
# truncated Dirichlet eigenvalues
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DirichletValue:
    eps: float
    value: float
    err_est: float
    iterations: int


def inverse_iteration(K: sp.spmatrix, M: sp.spmatrix, shift: float = 0.0, tol: float = 1e-13, max_iter: int = 300):
    """Smallest eigenpair of K x = lam M x by shifted inverse iteration from the all-ones vector.

    When the spectral gap is too small for plain iteration to converge in
    ``max_iter`` steps, the current iterate seeds shift-invert Lanczos (ARPACK).
    The returned count is then negative: -(iterations done before the switch).
    """
    lu = spla.splu((K - shift * M).tocsc())
    x = np.ones(K.shape[0])
    lam_old = np.inf
    for it in range(1, max_iter + 1):
        y = lu.solve(M @ x)
        x = y / math.sqrt(y @ (M @ y))
        lam = float(x @ (K @ x))
        if abs(lam - lam_old) <= tol * abs(lam):
            return lam, x, it
        lam_old = lam
    op = spla.LinearOperator(K.shape, matvec=lu.solve, dtype=float)
    try:
        vals, vecs = spla.eigsh(K, k=1, M=M, sigma=shift, OPinv=op, v0=x, tol=tol)
    except spla.ArpackNoConvergence as exc:
        raise RuntimeError("eigensolver did not converge") from exc
    x = vecs[:, 0] / math.sqrt(vecs[:, 0] @ (M @ vecs[:, 0]))
    return float(vals[0]), x, -max_iter


def _radial_matrices(data: RadialData, eps: float, grid: int, mesh: str):
    """P1 stiffness/mass on s in [0, 1 - eps] for the radial weak form.

    Energy: int 2 f'^2 |ds|^2_g det g s^{n-1} ds;  mass: int f^2 det g s^{n-1} ds.
    """
    n = data.n
    if mesh == "log":
        xm = np.linspace(0.0, math.log(1.0 / eps), grid)
        y = np.exp(-xm)
    else:
        y = 1.0 - np.linspace(0.0, 1.0 - eps, grid)
    s = 1.0 - y
    s[0], y[-1] = 0.0, eps
    gx, gw = roots_legendre(4)
    ne = grid - 1
    h = s[1:] - s[:-1]
    # quadrature points per element, in (s, y) with y computed multiplicatively
    ya, yb = y[:-1, None], y[1:, None]
    yq = 0.5 * (ya + yb) - 0.5 * (ya - yb) * gx[None, :]
    sq = 1.0 - yq
    lam = (sq - s[:-1, None]) / h[:, None]  # local coordinate in [0, 1]
    wq = 0.5 * h[:, None] * gw[None, :]
    base = data.density(sq, yq) * sq ** (n - 1) * wq
    stiff_c = np.sum(2.0 * data.grad_s_sq(sq, yq) * base, 1) / h**2
    phi0, phi1 = 1.0 - lam, lam
    m00 = np.sum(base * phi0 * phi0, 1)
    m01 = np.sum(base * phi0 * phi1, 1)
    m11 = np.sum(base * phi1 * phi1, 1)
    idx = np.arange(ne)
    rows = np.concatenate([idx, idx, idx + 1, idx + 1])
    cols = np.concatenate([idx, idx + 1, idx, idx + 1])
    K = sp.coo_matrix((np.concatenate([stiff_c, -stiff_c, -stiff_c, stiff_c]), (rows, cols)), shape=(grid, grid)).tocsr()
    M = sp.coo_matrix((np.concatenate([m00, m01, m01, m11]), (rows, cols)), shape=(grid, grid)).tocsr()
    keep = np.arange(grid - 1)  # Dirichlet at the last node
    return K[keep][:, keep], M[keep][:, keep]


def dirichlet_lambda_truncated(data, eps: float, grid: int = 2049, mesh: str | None = None) -> DirichletValue:
    """Smallest sector Dirichlet eigenvalue on {-phi >= eps}.

    ``data`` is RadialData (radial sector, P1 elements; mesh uniform in
    log(1/(1-s)) for ACH metrics, uniform in s for flat mode) or a solved
    ReinhardtField (torus-invariant sector, bilinear elements on the solver
    mesh restricted to cells with v >= eps).  The error estimate compares
    against the half-resolution value (Richardson-style, order 2).
    """
    if isinstance(data, RadialData):
        if not 0 < eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        mesh = mesh or ("log" if data.ach else "uniform")
        K, M = _radial_matrices(data, eps, grid, mesh)
        lam, _, it = inverse_iteration(K, M)
        Kc, Mc = _radial_matrices(data, eps, (grid + 1) // 2, mesh)
        lam_c, _, _ = inverse_iteration(Kc, Mc)
        err = abs(lam - lam_c) / 3.0
        if err > 0.1 * abs(lam):
            raise ValueError(f"grid too coarse: estimated discretization error {err:.2e}")
        return DirichletValue(eps, lam, err, it)
    return _field_dirichlet(data, eps)


def _field_dirichlet(f, eps: float) -> DirichletValue:
    """Q1 elements on the (xi, eta) mesh, cells whose four nodes have v >= eps."""
    m = f.mesh
    n = m.spec.size
    v = f.v
    inside = v >= eps
    cell_ok = inside[:-1, :-1] & inside[1:, :-1] & inside[:-1, 1:] & inside[1:, 1:]
    if not np.any(cell_ok):
        raise ValueError(f"no mesh cell lies inside {{v >= {eps:g}}}")
    u1, u2 = f.u_derivatives()
    t = f.t
    from .reinhardt import reduced_hessian

    with np.errstate(invalid="ignore", divide="ignore"):  # boundary rows of u are infinite
        A = reduced_hessian(t, u1, u2)
        detA = np.linalg.det(A)
        kt = np.linalg.solve(A, np.eye(2)[None, None] * t[..., None, :])  # A^{-1} diag(t)
        jac = np.abs(np.linalg.det(m.map.jac))
    ji = f.mesh.jinv
    # coefficient tensor in (xi, eta): 2 Jinv Kt Jinv^T det A |det T'|
    C = 2.0 * np.einsum("...ka,...ab,...lb->...kl", ji, kt, ji) * (detA * jac)[..., None, None]
    W = detA * jac
    gx, gw = roots_legendre(2)
    gp = 0.5 * (gx + 1.0)
    gw = 0.5 * gw
    xi, eta = m.xi, m.eta
    nodes = np.arange(n * n).reshape(n, n)
    rows, cols, kv, mv = [], [], [], []
    for a, b in np.argwhere(cell_ok):
        hx, hy = xi[a + 1] - xi[a], eta[b + 1] - eta[b]
        ids = [nodes[a, b], nodes[a + 1, b], nodes[a, b + 1], nodes[a + 1, b + 1]]
        cn = [C[a, b], C[a + 1, b], C[a, b + 1], C[a + 1, b + 1]]
        wn = [W[a, b], W[a + 1, b], W[a, b + 1], W[a + 1, b + 1]]
        ke = np.zeros((4, 4))
        me = np.zeros((4, 4))
        for p, wp in zip(gp, gw):
            for q, wq in zip(gp, gw):
                N = np.array([(1 - p) * (1 - q), p * (1 - q), (1 - p) * q, p * q])
                dN = np.array([[-(1 - q), -(1 - p)], [1 - q, -p], [-q, 1 - p], [q, p]]) / np.array([hx, hy])
                c = sum(Ni * ci for Ni, ci in zip(N, cn))
                w = sum(Ni * wi for Ni, wi in zip(N, wn))
                area = wp * wq * hx * hy
                ke += area * dN @ c @ dN.T
                me += area * w * np.outer(N, N)
        for i in range(4):
            for j in range(4):
                rows.append(ids[i])
                cols.append(ids[j])
                kv.append(ke[i, j])
                mv.append(me[i, j])
    K = sp.coo_matrix((kv, (rows, cols)), shape=(n * n, n * n)).tocsr()
    M = sp.coo_matrix((mv, (rows, cols)), shape=(n * n, n * n)).tocsr()
    # free nodes: interior of the union of active cells, plus the axes (natural condition)
    active = np.zeros((n, n), dtype=int)
    for a, b in np.argwhere(cell_ok):
        active[a : a + 2, b : b + 2] += 1
    X, Y = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    need = np.where((X == 0) & (Y == 0), 1, np.where((X == 0) | (Y == 0), 2, 4))
    free = np.flatnonzero((active == need).reshape(-1) & (active > 0).reshape(-1))
    K, M = K[free][:, free], M[free][:, free]
    lam, _, it = inverse_iteration(K, M)
    return DirichletValue(eps, lam, float("nan"), it)


@dataclass(frozen=True)
class TruncationResult:
    table: tuple  # DirichletValue entries, eps decreasing
    limit: float
    limit_err: float
    model: str = "lambda0 + a x^2 + b x^3, x = 1/log(1/eps)"
    monotone: bool = True


# large-ball asymptotics: lambda(eps) - lambda0 ~ C / log(1/eps)^2 with no linear term
TRUNCATION_POWERS = (2, 3)


def _power_fit(x: np.ndarray, vals: np.ndarray, powers) -> float:
    a = np.column_stack([np.ones_like(x)] + [x**p for p in powers])
    return float(np.linalg.lstsq(a, vals, rcond=None)[0][0])


def dirichlet_sequence(data, eps_list: Sequence[float], **kw) -> TruncationResult:
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be nonempty and strictly decreasing")
    table = tuple(dirichlet_lambda_truncated(data, e, **kw) for e in eps_list)
    vals = np.array([d.value for d in table])
    monotone = bool(np.all(np.diff(vals) < 0))
    x = 1.0 / np.log(1.0 / np.array(eps_list))
    powers = TRUNCATION_POWERS[: max(0, min(len(TRUNCATION_POWERS), len(x) - 1))]
    if not powers:
        return TruncationResult(table, float(vals[0]), float("inf"), monotone=monotone)
    limit = _power_fit(x, vals, powers)
    # spread against the fit that drops the coarsest truncation
    err = abs(limit - _power_fit(x[1:], vals[1:], powers)) if len(x) > len(powers) + 1 else float("nan")
    return TruncationResult(table, limit, err, monotone=monotone)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass
class SpectralReport:
    domain: str
    n: int
    mode: str  # "ACH" or "flat-sanity"
    sweep: list = field(default_factory=list)  # [{alpha, Q_alpha, err_est}]
    sweep_limit: float | None = None
    sweep_limit_err: float | None = None
    dirichlet: list = field(default_factory=list)  # [{eps, lambda_eps, err_est}]
    dirichlet_limit: float | None = None
    dirichlet_limit_err: float | None = None
    estimate: float | None = None
    tolerance: float = 0.05
    hypothesis: str | None = None
    webster_min: float | None = None
    verdict: str | None = None
    sector: str = "symmetric sector eigenvalues"
    normalization: str = NORMALIZATION
    version: str = __version__
    invariants: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def sweep_csv(self) -> str:
        lines = ["alpha,Q_alpha,err_est"] + [f"{r['alpha']!r},{r['Q_alpha']!r},{r['err_est']!r}" for r in self.sweep]
        return "\n".join(lines) + "\n"

    def dirichlet_csv(self) -> str:
        lines = ["eps,lambda_eps,err_est"] + [f"{r['eps']!r},{r['lambda_eps']!r},{r['err_est']!r}" for r in self.dirichlet]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SpectralConfig:
    alphas: tuple = (1.4, 1.2, 1.1, 1.05, 1.025)  # shifted by n/2 - 1 for n != 2
    eps: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    grid: int = 2049
    tolerance: float = 0.05
    webster_points: int = 50
    seed: int = 0


def lambda0_report(domain, config: SpectralConfig = SpectralConfig()) -> SpectralReport:
    """Combine the Rayleigh upper bound and truncated Dirichlet values into a lambda_0 verdict.

    ``domain`` is a RadialData (ball or flat sanity) or a solved ReinhardtField.
    The estimate is the sweep limit (an upper bound for lambda_0); the
    Dirichlet sequence is reported alongside.  For ACH domains the boundary
    Webster scalar sign is recorded and the verdict states consistency with n^2/2.
    """
    from . import crboundary

    if isinstance(domain, RadialData):
        n, name, ach = domain.n, domain.name, domain.ach
    else:
        n, name, ach = domain.domain.n, domain.domain.name, True
    rep = SpectralReport(name, n, "ACH" if ach else "flat-sanity", tolerance=config.tolerance)
    if isinstance(domain, RadialData):
        # flat mode: the whole unit disc, up to a negligible collar
        seq = dirichlet_sequence(domain, config.eps if ach else (1e-12,), grid=config.grid)
    else:
        seq = dirichlet_sequence(domain, [e for e in config.eps if e >= 1e-2])
    rep.dirichlet = [{"eps": d.eps, "lambda_eps": d.value, "err_est": d.err_est} for d in seq.table]
    rep.dirichlet_limit, rep.dirichlet_limit_err = seq.limit, seq.limit_err
    rep.invariants["dirichlet_strictly_decreasing"] = seq.monotone
    if not ach:
        rep.estimate = seq.table[-1].value
        rep.hypothesis = "not applicable (non-ACH mode)"
        return rep
    alphas = [a + n / 2 - 1 for a in config.alphas]
    sw = alpha_sweep(domain, alphas)
    rep.sweep = [{"alpha": t.alpha, "Q_alpha": t.value, "err_est": t.err_est} for t in sw.table]
    rep.sweep_limit, rep.sweep_limit_err = sw.limit, sw.limit_err
    rep.estimate = sw.limit
    qmin = min(t.value for t in sw.table)
    rep.invariants["estimate_le_min_Q"] = bool(rep.estimate <= qmin + config.tolerance)
    rep.invariants["dirichlet_ge_estimate"] = bool(all(d.value >= rep.estimate - config.tolerance for d in seq.table))
    if isinstance(domain, RadialData):
        wb = crboundary.ball_webster_survey(n, config.webster_points, config.seed)
    else:
        wb = crboundary.field_webster_survey(domain)
    rep.webster_min = wb["min_webster"]
    sign = "≥ 0" if wb["min_webster"] >= -1e-6 * n * (n - 1) else "< 0"
    rep.hypothesis = f"R_θ = {wb['min_webster']:.6g} {sign}" if wb.get("constant") else f"min R_θ = {wb['min_webster']:.6g} {sign}"
    target = n * n / 2
    consistent = abs(rep.estimate - target) <= config.tolerance
    if sign == "≥ 0":
        rep.verdict = "𝓡_θ ≥ 0, " + ("consistent with λ₀ = n²/2" if consistent else f"inconsistent with λ₀ = n²/2 (estimate {rep.estimate:.4f})")
    else:
        rep.verdict = "𝓡_θ < 0 somewhere: theorem hypothesis not met, " + (
            "estimate consistent with n²/2" if consistent else "estimate differs from n²/2"
        )
    return rep
