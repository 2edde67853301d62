"""Mixed holomorphic / antiholomorphic derivatives of real scalar fields on C^n.

Points are complex arrays of shape ``(n,)``.  Internally every field is a
function of the real coordinate vector ``x = [Re z, Im z]`` of length ``2n``.
Two derivative routes are provided:

* exact: forward-mode automatic differentiation through ``jax`` (the field's
  function must be written with ``jax.numpy``);
* finite-difference: tensor-product central stencils on the real coordinates
  with one level of Richardson extrapolation.

Both routes produce real derivative tensors which are converted to the
Wirtinger basis ``(d/dz_1..d/dz_n, d/dzbar_1..d/dzbar_n)`` by the linear map
``d/dz = (d/dx - i d/dy)/2``, ``d/dzbar = (d/dx + i d/dy)/2``.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

import jax
import jax.numpy as jnp

jax.config.update("jax_enable_x64", True)

MAX_ORDER = 4
EPS = np.finfo(float).eps


class JetError(ValueError):
    """Raised when a derivative jet cannot be produced."""


def as_point(z, n: int | None = None) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.ndim != 1:
        raise JetError(f"point must be one-dimensional, got shape {z.shape}")
    if n is not None and z.shape[0] != n:
        raise JetError(f"point has dimension {z.shape[0]}, expected {n}")
    if not np.all(np.isfinite(z)):
        raise JetError("point has non-finite coordinates")
    return z


def to_real(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag])


def to_complex(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


@functools.lru_cache(maxsize=None)
def wirtinger_matrix(n: int) -> np.ndarray:
    """Rows map a real gradient to (d/dz, d/dzbar) components."""
    c = np.zeros((2 * n, 2 * n), dtype=complex)
    for i in range(n):
        c[i, i] = 0.5
        c[i, n + i] = -0.5j
        c[n + i, i] = 0.5
        c[n + i, n + i] = 0.5j
    return c


def real_to_wirtinger(tensor: np.ndarray, n: int, k: int) -> np.ndarray:
    """Apply the Wirtinger change of basis to the first ``k`` axes."""
    c = wirtinger_matrix(n)
    out = np.asarray(tensor, dtype=complex)
    for axis in range(k):
        out = np.moveaxis(np.tensordot(c, out, axes=([1], [axis])), 0, axis)
    return out


class ScalarField:
    """A real-valued function on (a domain of) C^n.

    Parameters
    ----------
    func
        Maps the real coordinate vector of length ``2n`` to a real number.
        When ``exact`` is true it must be traceable by ``jax``.
    n
        Complex dimension.
    exact
        Whether exact derivatives (automatic differentiation) are available.
    clearance
        Optional map from a complex point to its Euclidean distance from the
        boundary of the field's domain; ``None`` means the field is entire.
    params
        When given, ``func`` has signature ``func(x, params)``.  Fields sharing
        ``func`` then share one compiled jet function (families of random
        fields would otherwise recompile for every member).
    """

    def __init__(
        self,
        func: Callable,
        n: int,
        exact: bool = True,
        name: str = "",
        clearance: Callable[[np.ndarray], float] | None = None,
        params=None,
    ):
        if n < 1:
            raise ValueError("dimension must be >= 1")
        self._raw, self._params = (func, params) if params is not None else (None, None)
        if params is not None:
            func = functools.partial(func, params=params)
        self.func = func
        self.n = n
        self.exact = exact
        self.name = name or getattr(self._raw or func, "__name__", "field")
        self.clearance = clearance
        self._jet_fns: dict[int, Callable] = {}

    def __repr__(self):
        return f"ScalarField({self.name!r}, n={self.n}, exact={self.exact})"

    def __call__(self, z) -> float:
        x = to_real(as_point(z, self.n))
        return float(self.func(jnp.asarray(x) if self.exact else x))

    def value_real(self, x: np.ndarray) -> float:
        return float(self.func(x))

    def map(self, g: Callable, name: str = "") -> "ScalarField":
        """Compose with a scalar function ``g`` (jax-traceable for exact fields)."""
        f = self.func
        return ScalarField(lambda x: g(f(x)), self.n, self.exact, name or f"g({self.name})", self.clearance)

    def exact_jet_fn(self, order: int) -> Callable:
        if not self.exact:
            raise JetError(f"{self.name} has no exact derivatives")
        if self._raw is not None:
            shared = _shared_jet_fn(self._raw, order)
            return functools.partial(shared, params=self._params)
        if order not in self._jet_fns:
            derivs = [self.func]
            for _ in range(order):
                derivs.append(jax.jacfwd(derivs[-1]))
            self._jet_fns[order] = jax.jit(lambda x: tuple(d(x) for d in derivs))
        return self._jet_fns[order]


@functools.lru_cache(maxsize=None)
def _shared_jet_fn(raw: Callable, order: int) -> Callable:
    derivs = [raw]
    for _ in range(order):
        derivs.append(jax.jacfwd(derivs[-1], argnums=0))
    return jax.jit(lambda x, params: tuple(d(x, params) for d in derivs))


def combine(fields: Sequence[ScalarField], op: Callable, name: str = "") -> ScalarField:
    """Pointwise combination ``op(f1(x), f2(x), ...)`` of fields on the same C^n."""
    n = fields[0].n
    if any(f.n != n for f in fields):
        raise ValueError("fields live on different dimensions")
    funcs = [f.func for f in fields]
    exact = all(f.exact for f in fields)
    clear = [f.clearance for f in fields if f.clearance is not None]

    def clearance(z):
        return min(c(z) for c in clear)

    return ScalarField(
        lambda x: op(*(f(x) for f in funcs)),
        n,
        exact,
        name or "combined",
        clearance if clear else None,
    )


@dataclass(frozen=True)
class DerivativeJet:
    """Wirtinger derivatives of a real field at a point, up to ``order``.

    ``tensors[k]`` holds all k-th derivatives in the combined basis
    ``(z_1..z_n, zbar_1..zbar_n)``; it is a fully symmetric complex array of
    shape ``(2n,)*k``.  ``d(p, q)`` slices out the block with ``p`` holomorphic
    and ``q`` antiholomorphic derivatives.
    """

    point: np.ndarray
    value: float
    tensors: tuple
    order: int
    method: str
    steps: tuple = ()
    errors: tuple = ()

    @property
    def n(self) -> int:
        return self.point.shape[0]

    def d(self, p: int, q: int = 0) -> np.ndarray:
        k = p + q
        if k == 0:
            return np.asarray(self.value)
        if k > self.order:
            raise JetError(f"jet of order {self.order} has no order-{k} entries")
        n = self.n
        idx = (slice(0, n),) * p + (slice(n, 2 * n),) * q
        return self.tensors[k][idx]

    def entry(self, a: Sequence[int], b: Sequence[int]) -> complex:
        """Derivative d^a dbar^b f for exponent multi-indices ``a`` and ``b``."""
        hol = [i for i, m in enumerate(a) for _ in range(m)]
        anti = [i for i, m in enumerate(b) for _ in range(m)]
        k = len(hol) + len(anti)
        if k == 0:
            return complex(self.value)
        return complex(self.tensors[k][tuple(hol) + tuple(self.n + j for j in anti)])

    @property
    def gradient(self) -> np.ndarray:
        """Holomorphic gradient (f_1, ..., f_n)."""
        return self.d(1, 0)

    @property
    def hessian(self) -> np.ndarray:
        """Complex Hessian ``H[i, j] = f_{i jbar}``."""
        return self.d(1, 1)

    def conjugation_defect(self) -> float:
        """max |entry(a,b) - conj(entry(b,a))| over all stored entries."""
        n = self.n
        worst = 0.0
        for k in range(1, self.order + 1):
            t = self.tensors[k]
            perm = [(ax + n) % (2 * n) for ax in range(2 * n)]
            swapped = t[np.ix_(*([perm] * k))]
            worst = max(worst, float(np.max(np.abs(t - np.conj(swapped)))))
        return worst


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

# second-order central stencils for derivatives of multiplicity 1..4
_STENCILS = {
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def default_steps(x: np.ndarray, k: int, clearance: float | None = None) -> np.ndarray:
    """Base step per real coordinate for k-th derivatives.

    eps**(1/(k+4)) balances the O(h^4) Richardson truncation error against
    eps/h^k roundoff; the per-coordinate scale is max(1, |z_i|).  With a finite
    clearance d the step is capped at d / 2**(9-k): the field's derivatives
    grow like 1/d there, and lower orders afford smaller relative steps.
    """
    n = x.shape[0] // 2
    mod = np.abs(x[:n] + 1j * x[n:])
    scale = np.maximum(1.0, np.concatenate([mod, mod]))
    h = EPS ** (1.0 / (k + 4)) * scale
    if clearance is not None and np.isfinite(clearance):
        h = np.minimum(h, clearance / 2.0 ** (9 - k))
    return h


def _stencil_terms(counts: dict[int, int]):
    axes = sorted(counts)
    per_axis = [list(zip(*_STENCILS[counts[a]])) for a in axes]
    for combo in itertools.product(*per_axis):
        offs = {a: o for a, (o, _) in zip(axes, combo)}
        w = float(np.prod([c for _, c in combo]))
        yield offs, w


def _fd_tensor(evaluate: Callable, x: np.ndarray, k: int, h: np.ndarray) -> np.ndarray:
    """Symmetric real k-th derivative tensor by central differences at step h."""
    dim = x.shape[0]
    cache: dict[tuple, np.ndarray] = {}

    def fval(offsets: dict[int, int]):
        key = tuple(sorted(offsets.items()))
        if key not in cache:
            y = x.copy()
            for a, o in offsets.items():
                y[a] += o * h[a]
            cache[key] = np.asarray(evaluate(y))
        return cache[key]

    sample = np.asarray(evaluate(x))
    out = np.zeros((dim,) * k + sample.shape, dtype=sample.dtype)
    for combo in itertools.combinations_with_replacement(range(dim), k):
        counts: dict[int, int] = {}
        for a in combo:
            counts[a] = counts.get(a, 0) + 1
        acc = np.zeros(sample.shape, dtype=sample.dtype)
        for offs, w in _stencil_terms(counts):
            acc = acc + w * fval(offs)
        denom = np.prod([h[a] ** m for a, m in counts.items()])
        val = acc / denom
        for perm in set(itertools.permutations(combo)):
            out[perm] = val
    return out


def fd_real_derivatives(
    evaluate: Callable,
    x: np.ndarray,
    order: int,
    clearance: float | None = None,
    steps: Sequence[np.ndarray] | None = None,
    richardson: bool = True,
):
    """Real derivative tensors of orders 1..order (array-valued ``evaluate`` allowed).

    Returns ``(tensors, steps, errors)`` where ``tensors[k]`` has shape
    ``(2n,)*k + out_shape`` and ``errors[k]`` is the max Richardson error
    estimate |D(h/2) - D(h)|/3.
    """
    tensors, used, errors = [None], [None], [None]
    for k in range(1, order + 1):
        h = np.asarray(steps[k - 1]) if steps is not None else default_steps(x, k, clearance)
        coarse = _fd_tensor(evaluate, x, k, h)
        if richardson:
            fine = _fd_tensor(evaluate, x, k, h / 2.0)
            est = (4.0 * fine - coarse) / 3.0
            err = float(np.max(np.abs(fine - coarse))) / 3.0
        else:
            est, err = coarse, float("nan")
        if not np.all(np.isfinite(est)):
            raise JetError(f"non-finite order-{k} finite difference at {x}")
        tensors.append(est)
        used.append(h)
        errors.append(err)
    return tensors, used, errors


def wirtinger_fd(evaluate: Callable, z: np.ndarray, order: int, clearance: float | None = None, **kw):
    """Wirtinger derivative tensors of an array-valued function of a point."""
    n = z.shape[0]
    x = to_real(z)
    real, steps, errors = fd_real_derivatives(evaluate, x, order, clearance, **kw)
    out = [None] + [real_to_wirtinger(real[k], n, k) for k in range(1, order + 1)]
    return out, steps, errors


# ---------------------------------------------------------------------------
# public kernel
# ---------------------------------------------------------------------------


def wirtinger_jet(
    f: ScalarField,
    z,
    order: int,
    method: str = "auto",
    steps: Sequence[np.ndarray] | None = None,
    richardson: bool = True,
) -> DerivativeJet:
    """Jet of mixed Wirtinger derivatives of ``f`` at ``z`` up to ``order``.

    ``method`` is ``"exact"``, ``"fd"`` or ``"auto"`` (exact when available).
    """
    if order not in range(1, MAX_ORDER + 1):
        raise JetError(f"order must be in 1..{MAX_ORDER}, got {order}")
    z = as_point(z, f.n)
    n = f.n
    if method == "auto":
        method = "exact" if f.exact else "fd"
    x = to_real(z)
    if method == "exact":
        try:
            raw = f.exact_jet_fn(order)(jnp.asarray(x))
        except Exception as exc:  # evaluation failure inside the traced function
            raise JetError(f"evaluation of {f.name} failed at {z}: {exc}") from exc
        raw = [np.asarray(r) for r in raw]
        if not all(np.all(np.isfinite(r)) for r in raw):
            raise JetError(f"non-finite derivative of {f.name} at {z}")
        tensors = [None]
        for k in range(1, order + 1):
            t = raw[k]
            # average over axis permutations to remove rounding asymmetry
            t = sum(np.transpose(t, p) for p in itertools.permutations(range(k))) / math.factorial(k)
            tensors.append(real_to_wirtinger(t, n, k))
        return DerivativeJet(z, float(raw[0]), tuple(tensors), order, "exact")
    if method != "fd":
        raise JetError(f"unknown method {method!r}")

    clearance = f.clearance(z) if f.clearance is not None else None
    if clearance is not None and clearance <= 0:
        raise JetError(f"{z} lies outside the domain of {f.name}")

    def evaluate(y):
        try:
            v = float(f.func(y))
        except Exception as exc:
            raise JetError(f"evaluation of {f.name} failed at stencil point {to_complex(y)}: {exc}") from exc
        return v

    value = evaluate(x)
    if not np.isfinite(value):
        raise JetError(f"non-finite value of {f.name} at {z}")
    tensors, used, errors = wirtinger_fd(evaluate, z, order, clearance, steps=steps, richardson=richardson)
    return DerivativeJet(z, value, tuple(tensors), order, "finite-difference", tuple(used), tuple(errors))


def complex_hessian(f: ScalarField, z, method: str = "auto") -> np.ndarray:
    """Hermitian matrix ``[f_{i jbar}]`` at ``z``."""
    return wirtinger_jet(f, z, 2, method=method).hessian


# ---------------------------------------------------------------------------
# jax-traceable helpers (used to build composite exact fields)
# ---------------------------------------------------------------------------


def jax_wirtinger_12(func: Callable, n: int):
    """Return ``x -> (f, df, H)`` with df_i = f_i and H[i,j] = f_{i jbar}; jax-traceable."""
    c = jnp.asarray(wirtinger_matrix(n))
    grad = jax.grad(func)
    hess = jax.hessian(func)

    def out(x):
        g = c @ grad(x)
        h = c @ hess(x) @ c.T
        return func(x), g[:n], h[:n, n:]

    return out
