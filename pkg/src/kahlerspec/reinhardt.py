"""Torus-invariant reduction: domains, graded meshes and stencils in t = (|z_1|^2, ..., |z_n|^2).

For a function F(t) of t_i = |z_i|^2 the complex Hessian reduces to

    A_F[i, j] = delta_ij F_i + t_i F_ij          (subscripts: t-derivatives)

with det H(F) = det A_F and tr(H(U)^{-1} H(F)) = tr(A_U^{-1} A_F), and the
Fefferman determinant reduces to J(-v) = (-1)^n det N(v) with

    N(v) = [[v, t_j v_j], [v_i, delta_ij v_i + t_j v_ij]].

The 2D solver lives on a Coons patch mapping the unit square (xi, eta) onto
the t-region {phi0 < 0, t >= 0}: the edges xi=0 and eta=0 are the axes,
xi=1 and eta=1 are the two halves of the boundary curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq

import jax.numpy as jnp

from .wirtinger import ScalarField


# ---------------------------------------------------------------------------
# reduced algebra
# ---------------------------------------------------------------------------


def reduced_hessian(t, d1, d2):
    """``A[..., i, j] = delta_ij X_i + t_i X_ij`` from t-derivatives (batched)."""
    t = np.asarray(t)
    n = t.shape[-1]
    a = t[..., :, None] * d2
    idx = np.arange(n)
    a[..., idx, idx] += d1
    return a


def bordered(v, t, d1, d2):
    """``N(v)`` (batched), of shape ``(..., n+1, n+1)``."""
    v = np.asarray(v)
    t = np.asarray(t)
    n = t.shape[-1]
    out = np.zeros(v.shape + (n + 1, n + 1))
    out[..., 0, 0] = v
    out[..., 0, 1:] = t * d1
    out[..., 1:, 0] = d1
    # delta_ij v_i + t_j v_ij: transpose of reduced_hessian's t_i v_ij
    out[..., 1:, 1:] = d2 * t[..., None, :]
    idx = np.arange(n)
    out[..., 1 + idx, 1 + idx] += d1
    return out


def fefferman_reduced(v, t, d1, d2):
    """J(-v) for v(t) with t-derivatives d1, d2."""
    n = np.asarray(t).shape[-1]
    with np.errstate(invalid="ignore"):  # NaN rows at the degenerate corner
        return (-1) ** n * np.linalg.det(bordered(v, t, d1, d2))


def log_derivatives(v, d1, d2):
    """t-derivatives of U = -log v."""
    v = np.asarray(v)[..., None]
    u1 = -d1 / v
    u2 = -d2 / v[..., None] + d1[..., :, None] * d1[..., None, :] / v[..., None] ** 2
    return u1, u2


def z_hessian_real_point(t, d1, d2):
    """Complex Hessian in z at the real point z = sqrt(t): diag(X_i) + sqrt(t) X_tt sqrt(t)."""
    s = np.sqrt(np.maximum(t, 0.0))
    h = s[..., :, None] * d2 * s[..., None, :]
    idx = np.arange(np.asarray(t).shape[-1])
    h[..., idx, idx] += d1
    return h


# ---------------------------------------------------------------------------
# domain
# ---------------------------------------------------------------------------


class ReinhardtDomain:
    """Region {phi0(t) < 0, t >= 0} for a polynomial phi0 in t_i = |z_i|^2.

    ``coeffs`` maps exponent tuples to coefficients, e.g. the ball in C^2 is
    ``{(1, 0): 1, (0, 1): 1, (0, 0): -1}``.
    """

    def __init__(self, coeffs: dict, n: int, name: str = ""):
        self.n = n
        self.coeffs = {tuple(int(e) for e in k): float(c) for k, c in coeffs.items()}
        for k in self.coeffs:
            if len(k) != n:
                raise ValueError(f"exponent {k} does not match dimension {n}")
        self.name = name or "reinhardt"
        if self.phi0(np.zeros(n)) >= 0:
            raise ValueError("the origin must lie inside the domain (phi0(0) < 0)")

    @classmethod
    def ball(cls, n: int) -> "ReinhardtDomain":
        c = {tuple(0 for _ in range(n)): -1.0}
        for i in range(n):
            c[tuple(1 if j == i else 0 for j in range(n))] = 1.0
        return cls(c, n, "ball")

    @classmethod
    def perturbed(cls, eps: float = 0.1) -> "ReinhardtDomain":
        return cls({(1, 0): 1.0, (0, 1): 1.0, (1, 1): eps, (0, 0): -1.0}, 2, f"perturbed({eps})")

    def to_json(self) -> dict:
        return {"name": self.name, "n": self.n, "coeffs": [[list(k), c] for k, c in sorted(self.coeffs.items())]}

    @classmethod
    def from_json(cls, d: dict) -> "ReinhardtDomain":
        return cls({tuple(k): c for k, c in d["coeffs"]}, int(d["n"]), d.get("name", ""))

    def shifted(self, eps: float) -> "ReinhardtDomain":
        """The sublevel domain {phi0 < -eps}."""
        c = dict(self.coeffs)
        zero = tuple(0 for _ in range(self.n))
        c[zero] = c.get(zero, 0.0) + eps
        return ReinhardtDomain(c, self.n, f"{self.name}-shift({eps:g})")

    # polynomial evaluation -------------------------------------------------

    def _mono(self, t, k, deriv):
        """d^deriv t^k (deriv a tuple of derivative counts)."""
        out = np.ones(np.asarray(t).shape[:-1])
        for i, (e, d) in enumerate(zip(k, deriv)):
            if d > e:
                return np.zeros_like(out)
            coef = 1.0
            for j in range(d):
                coef *= e - j
            out = out * coef * t[..., i] ** (e - d)
        return out

    def phi0(self, t):
        t = np.asarray(t, dtype=float)
        return sum(c * self._mono(t, k, (0,) * self.n) for k, c in self.coeffs.items())

    def grad(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for i in range(self.n):
            d = tuple(1 if j == i else 0 for j in range(self.n))
            out[..., i] = sum(c * self._mono(t, k, d) for k, c in self.coeffs.items())
        return out

    def hess(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.n,))
        for i in range(self.n):
            for j in range(self.n):
                d = [0] * self.n
                d[i] += 1
                d[j] += 1
                out[..., i, j] = sum(c * self._mono(t, k, tuple(d)) for k, c in self.coeffs.items())
        return out

    def scalar_field(self) -> ScalarField:
        """phi0(|z_1|^2, ..., |z_n|^2) as an exact field on C^n."""
        n = self.n
        items = list(self.coeffs.items())

        def f(x):
            t = x[:n] ** 2 + x[n:] ** 2
            total = 0.0 * jnp.sum(x)
            for k, c in items:
                term = c
                for i, e in enumerate(k):
                    if e:
                        term = term * t[i] ** e
                total = total + term
            return total

        return ScalarField(f, n, name=self.name)

    def check_pseudoconvex(self, samples: int = 400, seed: int = 0) -> float:
        """Minimum eigenvalue of the z-Hessian of phi0 over sampled points of the closure."""
        rng = np.random.default_rng(seed)
        lo = np.inf
        ext = np.array([self.intercept(i) for i in range(self.n)])
        pts = rng.uniform(0, 1, size=(samples * 4, self.n)) * ext
        pts = pts[self.phi0(pts) <= 0][:samples]
        h = z_hessian_real_point(pts, self.grad(pts), self.hess(pts))
        lo = float(np.min(np.linalg.eigvalsh(h)))
        if lo <= 0:
            raise ValueError(f"{self.name}: complex Hessian of phi0 not positive definite (min eig {lo:.3e})")
        return lo

    def intercept(self, i: int) -> float:
        """T_i > 0 with phi0(T_i e_i) = 0."""
        e = np.zeros(self.n)
        e[i] = 1.0
        return self._root_along(e)

    def _root_along(self, d) -> float:
        f = lambda r: float(self.phi0(r * np.asarray(d)))
        hi = 1.0
        while f(hi) < 0:
            hi *= 2.0
            if hi > 1e8:
                raise ValueError(f"{self.name} is unbounded along {d}")
        return brentq(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


# ---------------------------------------------------------------------------
# Coons map of the unit square onto a 2D t-region
# ---------------------------------------------------------------------------


class BoundaryCurve:
    """B(sigma) = r(sigma) d(sigma), d = ((1-sigma) T1, sigma T2), on {phi0 = 0}."""

    def __init__(self, domain: ReinhardtDomain):
        if domain.n != 2:
            raise ValueError("boundary curve parameterization needs n = 2")
        self.domain = domain
        self.T = np.array([domain.intercept(0), domain.intercept(1)])

    def direction(self, s):
        s = np.asarray(s, dtype=float)
        return np.stack([(1 - s) * self.T[0], s * self.T[1]], axis=-1)

    def __call__(self, s):
        """Return B, B', B'' at parameters s (arrays of shape (..., 2))."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        d = self.direction(s)
        dd = np.broadcast_to(np.array([-self.T[0], self.T[1]]), d.shape)
        r = np.array([self.domain._root_along(di) for di in d.reshape(-1, 2)]).reshape(s.shape)
        p = r[..., None] * d
        g = self.domain.grad(p)
        h = self.domain.hess(p)
        fr = np.sum(g * d, -1)
        if np.any(fr <= 0):
            raise ValueError("domain is not star-shaped along the boundary parameterization")
        fs = r * np.sum(g * dd, -1)
        r1 = -fs / fr
        hdd = np.einsum("...i,...ij,...j->...", d, h, d)
        hddp = np.einsum("...i,...ij,...j->...", d, h, dd)
        hdpdp = np.einsum("...i,...ij,...j->...", dd, h, dd)
        frr = hdd
        frs = np.sum(g * dd, -1) + r * hddp
        fss = r**2 * hdpdp
        r2 = -(fss + 2 * frs * r1 + frr * r1**2) / fr
        b = p
        b1 = r1[..., None] * d + r[..., None] * dd
        b2 = r2[..., None] * d + 2 * r1[..., None] * dd
        return b, b1, b2


@dataclass(frozen=True)
class MapData:
    t: np.ndarray  # (Nx, Ny, 2)
    jac: np.ndarray  # (Nx, Ny, 2, 2): jac[a, k] = d t_a / d q_k
    hess: np.ndarray  # (Nx, Ny, 2, 2, 2): hess[a, k, l] = d^2 t_a / d q_k d q_l


def coons_map(curve: BoundaryCurve, xi: np.ndarray, eta: np.ndarray) -> MapData:
    """Coons patch with edges O->A (eta=0), O->B (xi=0), A->M (xi=1), B->M (eta=1)."""
    T1, T2 = curve.T
    X, Y = np.meshgrid(xi, eta, indexing="ij")
    # right edge R(eta) = B(eta/2), top edge P(xi) = B(1 - xi/2)
    rb, rb1, rb2 = curve(eta / 2)
    tb, tb1, tb2 = curve(1 - xi / 2)
    R, R1, R2 = rb[None, :, :], 0.5 * rb1[None, :, :], 0.25 * rb2[None, :, :]
    P, P1, P2 = tb[:, None, :], -0.5 * tb1[:, None, :], 0.25 * tb2[:, None, :]
    A = np.array([T1, 0.0])
    B = np.array([0.0, T2])
    M = curve(np.array([0.5]))[0][0]
    x, y = X[..., None], Y[..., None]
    left = y * B  # (0, eta T2)
    bottom = x * A
    corner = x * (1 - y) * A + (1 - x) * y * B + x * y * M
    t = (1 - x) * left + x * R + (1 - y) * bottom + y * P - corner
    # first derivatives
    t_x = -left + R + (1 - y) * A + y * P1 - ((1 - y) * A - y * B + y * M)
    t_y = (1 - x) * B + x * R1 - bottom + P - (-x * A + (1 - x) * B + x * M)
    # second derivatives
    t_xx = y * P2
    t_yy = x * R2
    t_xy = -B + R1 - A + P1 - (-A - B + M)
    t_xx = np.broadcast_to(t_xx, t.shape)
    t_yy = np.broadcast_to(t_yy, t.shape)
    jac = np.stack([t_x, t_y], axis=-1)
    hess = np.stack([np.stack([t_xx, t_xy], -1), np.stack([t_xy, t_yy], -1)], -1)
    t = np.maximum(t, 0.0)
    return MapData(t, jac, hess)


# ---------------------------------------------------------------------------
# graded 1D grids and nonuniform stencils
# ---------------------------------------------------------------------------


def graded_nodes(size: int, ratio: float = 1.15, cells: int = 16) -> np.ndarray:
    """Nodes on [0, 1] refined toward 1 by a smooth exponential grading.

    The local cell-size ratio is ``ratio`` per 1/``cells`` of the interval,
    so nested grids (size 2^k + 1) share nodes.  ratio = 1 is uniform.
    """
    if size < 3:
        raise ValueError("need at least 3 nodes")
    s = np.linspace(0.0, 1.0, size)
    beta = cells * np.log(ratio)
    if beta == 0:
        return s
    x = 1.0 - np.expm1(beta * (1.0 - s)) / np.expm1(beta)
    x[0], x[-1] = 0.0, 1.0
    return x


def fd_weights(x: np.ndarray, x0: float, m: int) -> np.ndarray:
    """Weights of the m-th derivative at x0 from values at nodes x (exact on polynomials of degree < len(x))."""
    k = len(x)
    dx = np.asarray(x, dtype=float) - x0
    scale = max(np.max(np.abs(dx)), 1e-300)
    v = np.vander(dx / scale, k, increasing=True).T
    rhs = np.zeros(k)
    rhs[m] = float(np.prod(np.arange(1, m + 1)))
    return np.linalg.solve(v, rhs) / scale**m


def derivative_matrices(x: np.ndarray):
    """Sparse first/second derivative operators on nodes x (second-order accurate)."""
    nx = len(x)
    d1 = sp.lil_matrix((nx, nx))
    d2 = sp.lil_matrix((nx, nx))
    for i in range(nx):
        if i == 0:
            i1, i2 = [0, 1, 2], [0, 1, 2, 3]
        elif i == nx - 1:
            i1, i2 = [nx - 3, nx - 2, nx - 1], [nx - 4, nx - 3, nx - 2, nx - 1]
        else:
            i1 = i2 = [i - 1, i, i + 1]
        d1[i, i1] = fd_weights(x[i1], x[i], 1)
        d2[i, i2] = fd_weights(x[i2], x[i], 2)
    return d1.tocsr(), d2.tocsr()


# ---------------------------------------------------------------------------
# mesh: map + stencils + chain rule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeshSpec:
    size: int = 65
    ratio: float = 1.15
    cells: int = 16

    def to_json(self) -> dict:
        return {"size": self.size, "ratio": self.ratio, "cells": self.cells}


class ReinhardtMesh:
    """Boundary-graded mesh of a 2D Reinhardt t-region with t-derivative operators."""

    def __init__(self, domain: ReinhardtDomain, spec: MeshSpec = MeshSpec()):
        if domain.n != 2:
            raise ValueError("the 2D mesh needs n = 2")
        self.domain = domain
        self.spec = spec
        self.curve = BoundaryCurve(domain)
        self.xi = graded_nodes(spec.size, spec.ratio, spec.cells)
        self.eta = self.xi.copy()
        self.map = coons_map(self.curve, self.xi, self.eta)
        n = spec.size
        self.shape = (n, n)
        d1, d2 = derivative_matrices(self.xi)
        eye = sp.identity(n, format="csr")
        self.Dq = {
            "x": sp.kron(d1, eye, format="csr"),
            "y": sp.kron(eye, d1, format="csr"),
            "xx": sp.kron(d2, eye, format="csr"),
            "yy": sp.kron(eye, d2, format="csr"),
            "xy": sp.kron(d1, d1, format="csr"),
        }
        X, Y = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        self.boundary = (X == n - 1) | (Y == n - 1)
        self.corner = (X == n - 1) & (Y == n - 1)
        self.unknown = ~self.boundary

    @property
    def t(self) -> np.ndarray:
        return self.map.t

    @cached_property
    def jinv(self) -> np.ndarray:
        """Inverse map Jacobian (NaN at the degenerate corner)."""
        j = self.map.jac.copy()
        j[self.corner] = np.nan
        return np.linalg.inv(j)

    @cached_property
    def chain(self) -> np.ndarray:
        """Per-node 5x5 linear map (v_x, v_y, v_xx, v_xy, v_yy) -> (v_1, v_2, v_11, v_12, v_22).

        v_t = Jinv^T v_q and V_tt = Jinv^T (V_qq - sum_a v_t[a] T_a,qq) Jinv.
        """
        ji = self.jinv
        h = self.map.hess
        L = np.zeros(self.shape + (5, 5))
        L[..., 0:2, 0:2] = np.swapaxes(ji, -1, -2)  # v_t[a] = sum_k ji[k, a] v_q[k]
        # V_tt[a,b] = sum_kl ji[k,a] ji[l,b] (V_qq[k,l] - sum_c v_t[c] h[c,k,l])
        pairs = [(0, 0), (0, 1), (1, 1)]
        qidx = {(0, 0): 2, (0, 1): 3, (1, 0): 3, (1, 1): 4}
        for row, (a, b) in enumerate(pairs):
            for k in range(2):
                for l in range(2):
                    w = ji[..., k, a] * ji[..., l, b]
                    L[..., 2 + row, qidx[(k, l)]] += w
                    for c in range(2):
                        # - w * h[c,k,l] * v_t[c]; v_t[c] = sum_m ji[m, c] v_q[m]
                        for m in range(2):
                            L[..., 2 + row, m] -= w * h[..., c, k, l] * ji[..., m, c]
        return L

    def q_derivatives(self, values: np.ndarray) -> np.ndarray:
        flat = values.reshape(-1)
        out = np.stack([self.Dq[k] @ flat for k in ("x", "y", "xx", "xy", "yy")], -1)
        return out.reshape(self.shape + (5,))

    def t_derivatives(self, values: np.ndarray):
        """(d1, d2) t-derivatives of a nodal field; NaN at the degenerate corner."""
        dq = self.q_derivatives(values)
        dt = np.einsum("...ij,...j->...i", self.chain, dq)
        d1 = dt[..., 0:2]
        d2 = np.stack([np.stack([dt[..., 2], dt[..., 3]], -1), np.stack([dt[..., 3], dt[..., 4]], -1)], -1)
        return d1, d2

    def locate(self, t: np.ndarray, tol: float = 1e-13):
        """Inverse map t -> (xi, eta) by Newton's method."""
        t = np.asarray(t, dtype=float)
        q = np.clip(t / self.curve.T, 0.0, 1.0)
        for _ in range(60):
            md = coons_map(self.curve, np.array([q[0]]), np.array([q[1]]))
            r = md.t[0, 0] - t
            if np.max(np.abs(r)) < tol:
                break
            q = np.clip(q - np.linalg.solve(md.jac[0, 0], r), 0.0, 1.0)
        return q
