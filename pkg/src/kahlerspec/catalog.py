"""Catalog of scalar fields with exact (automatic) derivatives to order 4."""

from __future__ import annotations

import numpy as np
import jax.numpy as jnp

from .wirtinger import ScalarField


def _modsq(x, n):
    return x[:n] ** 2 + x[n:] ** 2


def _ball_clearance(z):
    return 1.0 - float(np.linalg.norm(z))


def constant(n: int, c: float = 1.0) -> ScalarField:
    return ScalarField(lambda x: c + 0.0 * jnp.sum(x), n, name=f"const({c})")


def norm_sq(n: int) -> ScalarField:
    """|z|^2."""
    return ScalarField(lambda x: jnp.sum(x**2), n, name="|z|^2")


def norm_fourth(n: int) -> ScalarField:
    """|z|^4."""
    return ScalarField(lambda x: jnp.sum(x**2) ** 2, n, name="|z|^4")


def re_z1_squared(n: int) -> ScalarField:
    """Re(z_1^2), pluriharmonic."""
    return ScalarField(lambda x: x[0] ** 2 - x[n] ** 2, n, name="Re z1^2")


def re_z1(n: int) -> ScalarField:
    return ScalarField(lambda x: x[0] + 0.0 * x[n], n, name="Re z1")


def ball_defining(n: int, scale: float = 1.0) -> ScalarField:
    """scale * (|z|^2 - 1)."""
    return ScalarField(lambda x: scale * (jnp.sum(x**2) - 1.0), n, name=f"{scale}*(|z|^2-1)")


def ball_potential(n: int) -> ScalarField:
    """-log(1 - |z|^2): potential of the complete Kahler-Einstein metric of the unit ball."""
    return ScalarField(lambda x: -jnp.log(1.0 - jnp.sum(x**2)), n, name="-log(1-|z|^2)", clearance=_ball_clearance)


def ball_power(n: int, alpha: float) -> ScalarField:
    """(1 - |z|^2)^alpha."""
    return ScalarField(lambda x: (1.0 - jnp.sum(x**2)) ** alpha, n, name=f"(1-|z|^2)^{alpha}", clearance=_ball_clearance)


def reinhardt_poly(coeffs: dict, n: int, name: str = "") -> ScalarField:
    """Polynomial in t_i = |z_i|^2 given as {exponent tuple: coefficient}."""
    items = [(tuple(int(e) for e in k), float(c)) for k, c in coeffs.items()]
    for k, _ in items:
        if len(k) != n:
            raise ValueError(f"exponent {k} does not match dimension {n}")

    def f(x):
        t = _modsq(x, n)
        total = 0.0
        for k, c in items:
            term = c
            for i, e in enumerate(k):
                if e:
                    term = term * t[i] ** e
            total = total + term
        return total + 0.0 * jnp.sum(x)

    return ScalarField(f, n, name=name or "reinhardt-poly")


def _quadratic_func(x, params):
    ar, ai, sr, si, br, bi, c = params
    n = ar.shape[0]
    u, v = x[:n], x[n:]
    # z^H A z with z = u + i v, A = ar + i ai hermitian -> real part only
    herm = u @ ar @ u + v @ ar @ v - 2.0 * (u @ ai @ v)
    # Re(z^T S z)
    sym = u @ sr @ u - v @ sr @ v - 2.0 * (u @ si @ v)
    # 2 Re(conj(b) . z)
    lin = 2.0 * (br @ u + bi @ v)
    return herm + sym + lin + c


def quadratic(a: np.ndarray, s: np.ndarray, b: np.ndarray, c: float) -> ScalarField:
    """z^H A z + Re(z^T S z) + 2 Re(b^H z) + c with A hermitian."""
    a = np.asarray(a, dtype=complex)
    s = np.asarray(s, dtype=complex)
    b = np.asarray(b, dtype=complex)
    params = tuple(jnp.asarray(p) for p in (a.real, a.imag, s.real, s.imag, b.real, b.imag)) + (jnp.asarray(float(c)),)
    return ScalarField(_quadratic_func, a.shape[0], name="quadratic", params=params)


def random_psh_quadratic(n: int, rng: np.random.Generator, z0: np.ndarray | None = None) -> tuple[ScalarField, np.ndarray]:
    """A random strictly plurisubharmonic quadratic, negative at a returned point.

    Returns the field and a point where it is negative.
    """
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    a = m @ m.conj().T + 0.5 * np.eye(n)
    s = 0.3 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    s = 0.5 * (s + s.T)
    b = rng.normal(size=n) + 1j * rng.normal(size=n)
    if z0 is None:
        z0 = 0.5 * (rng.normal(size=n) + 1j * rng.normal(size=n))
    base = quadratic(a, s, b, 0.0)
    c = -base(z0) - rng.uniform(0.2, 2.0)
    return quadratic(a, s, b, c), z0


def calabi_chart_potential(n: int) -> ScalarField:
    """Kahler potential of the Calabi metric in a local trivialization.

    Coordinates (zeta_1..zeta_{n-1}, w); with rho(zeta) = (1 - |zeta|^2)^{-1},
    the potential is -log(1 - rho|w|^2) + log rho, so that
    omega = -i d dbar log(1 - |sigma|^2) + omega_0 and omega_0 = i d dbar log rho.
    """
    m = n - 1

    def f(x):
        zeta = x[:m] ** 2 + x[n : n + m] ** 2
        w = x[m] ** 2 + x[n + m] ** 2
        rho = 1.0 / (1.0 - jnp.sum(zeta))
        return -jnp.log(1.0 - rho * w) + jnp.log(rho)

    def clearance(z):
        zeta, w = z[:m], z[m]
        s = 1.0 - float(np.sum(np.abs(zeta) ** 2))
        if s <= 0:
            return 0.0
        return min(1.0 - float(np.linalg.norm(zeta)), float(np.sqrt(s) - abs(w)))

    return ScalarField(f, n, name="calabi-chart", clearance=clearance)
