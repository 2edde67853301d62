"""Acceptance criteria as runnable checks.

Each ``criterion_k`` returns a CriterionResult with the measured numbers in
``detail``.  Tolerances and runtime budgets are the stated ones; nothing is
relaxed to make a check pass.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import catalog


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float
    budget: float
    detail: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        why = f" ({'; '.join(self.failures)})" if self.failures else ""
        return f"[{status}] criterion {self.number:2d} {self.name}: {self.seconds:.1f}s of {self.budget:g}s{why}"


class _Run:
    def __init__(self, number: int, name: str, budget: float):
        self.res = CriterionResult(number, name, True, 0.0, budget)
        self._t0 = time.perf_counter()

    def check(self, ok, what: str):
        if not ok:
            self.res.failures.append(what)

    def done(self) -> CriterionResult:
        self.res.seconds = time.perf_counter() - self._t0
        self.check(self.res.seconds < self.res.budget, "runtime over budget")
        self.res.passed = not self.res.failures
        return self.res


def _ball_interior(n: int, count: int, rng, reach: float = 0.95):
    d = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * (reach * rng.uniform(size=(count, 1)) ** (1 / (2 * n)))


def criterion_1(seed: int = 1) -> CriterionResult:
    from .kahler import hessian_data, metric_det, metric_from_defining, metric_inverse_closed_form

    run = _Run(1, "closed-form metric inverse and determinant", 10.0)
    rng = np.random.default_rng(seed)
    worst_inv, worst_det = 0.0, 0.0
    for n in (1, 2, 3):
        for _ in range(200):
            phi, z = catalog.random_psh_quadratic(n, rng)
            m = metric_from_defining(phi, z)
            h = hessian_data(phi, z)
            # relative to the largest entry: entries range over several orders near the boundary
            worst_inv = max(worst_inv, np.max(np.abs(metric_inverse_closed_form(h, phi(z)) - m.ginv)) / np.max(np.abs(m.ginv)))
            worst_det = max(worst_det, abs(metric_det(h, phi(z)) - m.det) / abs(m.det))
    run.res.detail = {"quadratics_per_n": 200, "max_rel_inverse_error": worst_inv, "max_rel_det_error": worst_det}
    run.check(worst_inv <= 1e-10, "inverse")
    run.check(worst_det <= 1e-10, "determinant")
    return run.done()


def criterion_2(seed: int = 2) -> CriterionResult:
    from .fefferman import fefferman_J, ma_identity_residuals

    run = _Run(2, "ball Monge-Ampere oracle", 10.0)
    rng = np.random.default_rng(seed)
    d = {}
    for n in (1, 2, 3):
        rho = catalog.ball_defining(n)
        pts = _ball_interior(n, 100, rng)
        jerr = max(abs(fefferman_J(rho, z) - 1.0) for z in pts)
        rep = ma_identity_residuals(rho, pts, method="exact")
        d[f"n{n}"] = {"max_J_minus_1": jerr, "max_hj": float(rep.hj.max()), "max_hr": float(rep.hr.max())}
        run.check(jerr <= 1e-10, f"J at n={n}")
        run.check(rep.hj.max() <= 1e-9 and rep.hr.max() <= 1e-9, f"identities at n={n}")
    run.res.detail = d
    return run.done()


def criterion_3() -> CriterionResult:
    from .fefferman import radial_convergence_order, reinhardt_self_convergence, solve_radial_ball, solve_reinhardt_2d
    from .reinhardt import MeshSpec, ReinhardtDomain, ReinhardtMesh

    run = _Run(3, "Fefferman solver", 300.0)
    rad = solve_radial_ball(2, 257, initial=lambda t: (1 - t) * (1 + 0.3 * t))
    rad_err = rad.error_against(lambda t: 1 - t)
    mesh = ReinhardtMesh(ReinhardtDomain.ball(2), MeshSpec(size=129))
    exact = 1.0 - mesh.t.sum(-1)
    # start away from the solution so the Newton iteration is exercised
    f = solve_reinhardt_2d(mesh.domain, mesh.spec, initial=exact * (1 + 0.2 * mesh.t[..., 0] * mesh.t[..., 1]), mesh=mesh)
    err2d = float(np.max(np.abs(f.v - exact)))
    radial_order = radial_convergence_order(2)
    self_conv = reinhardt_self_convergence(ReinhardtDomain.perturbed(0.1))
    run.res.detail = {
        "radial_error_257": rad_err,
        "radial_iterations": rad.iterations,
        "ball_2d_error_129": err2d,
        "ball_2d_iterations": f.iterations,
        "radial_manufactured": radial_order,
        "perturbed_2d_self_convergence": self_conv,
    }
    run.check(rad_err <= 1e-8, "radial error")
    run.check(err2d <= 1e-6, "2D ball error")
    run.check(min(radial_order["orders"]) >= 1.6, "radial order")
    run.check(min(self_conv["orders"]) >= 1.6, "2D order")
    return run.done()


def criterion_4() -> CriterionResult:
    from .spectrum import RadialData, alpha_sweep

    run = _Run(4, "Rayleigh upper bound on the ball", 60.0)
    alphas = [1.4, 1.3, 1.2, 1.1, 1.05]
    sw = alpha_sweep(RadialData.ball(2), alphas)
    dev = max(abs(t.value - 2 * t.alpha) for t in sw.table)
    run.res.detail = {"table": [(t.alpha, t.value) for t in sw.table], "max_dev_from_n_alpha": dev, "limit": sw.limit, "limit_err": sw.limit_err}
    run.check(dev <= 1e-3, "Q(alpha) = n alpha")
    run.check(abs(sw.limit - 2.0) <= 0.01, "extrapolated limit")
    return run.done()


def criterion_5() -> CriterionResult:
    from scipy.special import jn_zeros

    from .spectrum import RadialData, dirichlet_lambda_truncated, dirichlet_sequence

    run = _Run(5, "truncated Dirichlet eigenvalues", 120.0)
    seq = dirichlet_sequence(RadialData.ball(2), [1e-1, 1e-2, 1e-3, 1e-4])
    vals = [d.value for d in seq.table]
    flat = dirichlet_lambda_truncated(RadialData.flat_disc(1), 1e-12).value
    j0sq = float(jn_zeros(0, 1)[0] ** 2)
    run.res.detail = {"sequence": vals, "limit": seq.limit, "limit_err": seq.limit_err, "flat_disc": flat, "j0_squared": j0sq}
    run.check(all(np.diff(vals) < 0), "strictly decreasing")
    run.check(all(v > 2 for v in vals), "values > 2")
    run.check(abs(seq.limit - 2.0) <= 0.04, "extrapolated limit")
    run.check(abs(flat - j0sq) <= 1e-3, "flat disc")
    return run.done()


def criterion_6(grid: int = 65, seed: int = 6) -> CriterionResult:
    from .fefferman import bochner_defect, bochner_defect_field, solve_reinhardt_2d
    from .reinhardt import MeshSpec, ReinhardtDomain

    run = _Run(6, "Bochner lemma defect", 120.0)
    rng = np.random.default_rng(seed)
    rho = catalog.ball_defining(2)
    # equality case on the closed-form solution, exact derivatives
    ball_exact = max(abs(bochner_defect(rho, z)) for z in _ball_interior(2, 50, rng, 0.9))
    ball_field = solve_reinhardt_2d(ReinhardtDomain.ball(2), MeshSpec(size=grid))
    ball_grid = float(np.nanmax(np.abs(bochner_defect_field(ball_field))))
    f = solve_reinhardt_2d(ReinhardtDomain.perturbed(0.1), MeshSpec(size=grid))
    d = bochner_defect_field(f)
    dk = np.where(f.mesh.unknown, d, np.nan)
    k = np.unravel_index(np.nanargmax(dk), dk.shape)
    run.res.detail = {
        "ball_exact_max_abs": ball_exact,
        "ball_grid_max_abs": ball_grid,
        "perturbed_grid": grid,
        "perturbed_max": float(dk[k]),
        "perturbed_argmax_t": [float(x) for x in f.t[k]],
        "perturbed_min": float(np.nanmin(dk)),
        "interior_nodes_above_1e-6": int(np.sum(dk > 1e-6)),
    }
    run.check(ball_exact <= 1e-8, "ball equality case")
    run.check(np.nanmax(dk) <= 1e-6, f"perturbed defect max {float(dk[k]):.2e} > 1e-6")
    return run.done()


def criterion_7() -> CriterionResult:
    from .crboundary import ball_webster_survey
    from .spectrum import RadialData, SpectralConfig, lambda0_report

    run = _Run(7, "Webster pipeline", 30.0)
    s2, s3 = ball_webster_survey(2), ball_webster_survey(3)
    rep = lambda0_report(RadialData.ball(2), SpectralConfig(eps=(1e-1, 1e-2, 1e-3)))
    target = "𝓡_θ ≥ 0, consistent with λ₀ = n²/2"
    run.res.detail = {
        "C2": [s2["min_webster"], s2["max_webster"]],
        "C3": [s3["min_webster"], s3["max_webster"]],
        "verdict": rep.verdict,
    }
    run.check(max(abs(s2["min_webster"] - 2), abs(s2["max_webster"] - 2)) <= 1e-8, "sphere in C^2")
    run.check(max(abs(s3["min_webster"] - 6), abs(s3["max_webster"] - 6)) <= 1e-8, "sphere in C^3")
    run.check(rep.verdict == target, "verdict")
    return run.done()


def criterion_8(seed: int = 8) -> CriterionResult:
    from .kahler import ball_metric, bisectional_ratio, curvature_tensor

    run = _Run(8, "curvature asymptotics on the ball", 60.0)
    rng = np.random.default_rng(seed)
    d = {}
    for n in (2, 3):
        metric = ball_metric(n)
        pairs = [tuple(rng.normal(size=(2, n)) + 1j * rng.normal(size=(2, n))) for _ in range(5)]
        origin = curvature_tensor(metric, np.zeros(n))
        odev = max(abs(bisectional_ratio(origin, x, y) - 1) for x, y in pairs)
        sym = origin.symmetry_defect()
        direction = np.ones(n) / math.sqrt(n)
        ray = []
        for r in (0.5, 0.7, 0.9, 0.95, 0.99, 0.995):
            c = curvature_tensor(metric, r * direction)
            dev = max(abs(bisectional_ratio(c, x, y) - 1) for x, y in pairs)
            ray.append((1 - r * r, dev))
            sym = max(sym, c.symmetry_defect())
        fitted = max(dev / depth for depth, dev in ray)
        d[f"n{n}"] = {"origin_dev": odev, "ray": ray, "fitted_C": fitted, "symmetry_defect": sym}
        run.check(odev <= 1e-10, f"origin at n={n}")
        run.check(all(dev <= fitted * depth + 1e-12 for depth, dev in ray), f"ray bound at n={n}")
        run.check(sym <= 1e-8, f"symmetries at n={n}")
    run.res.detail = d
    return run.done()


def criterion_9(seed: int = 9) -> CriterionResult:
    from .crboundary import calabi_chart_ricci_check, circle_bundle_webster, disc_model_metric

    run = _Run(9, "Calabi chart", 60.0)
    rng = np.random.default_rng(seed)
    d = {}
    for n in (2, 3):
        worst = 0.0
        for _ in range(50):
            zeta = rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1)
            zeta *= rng.uniform(0.0, 0.9) / np.linalg.norm(zeta)
            s = float(np.sum(np.abs(zeta) ** 2))
            w = math.sqrt(rng.uniform(0.0, 0.9) * (1 - s)) * np.exp(2j * np.pi * rng.uniform())
            worst = max(worst, float(np.max(np.abs(calabi_chart_ricci_check(n, zeta, w)))))
        cb = circle_bundle_webster(disc_model_metric(n - 1), np.full(n - 1, 0.3 / math.sqrt(n - 1)))
        d[f"n{n}"] = {"max_residual": worst, "webster": cb.scalar, "expected": -n * (n - 1)}
        run.check(worst <= 1e-6, f"Ricci residual at n={n}")
        run.check(abs(cb.scalar + n * (n - 1)) <= 1e-8, f"Webster at n={n}")
    run.res.detail = d
    return run.done()


def criterion_10() -> CriterionResult:
    from .kahler import ball_metric
    from .spectrum import barrier_check

    run = _Run(10, "barrier inequality on the ball", 10.0)
    g, phi = ball_metric(2), catalog.ball_defining(2)
    d = {}
    for eps in (1e-1, 1e-2, 1e-3, 1e-4):
        ok = barrier_check(g, phi, 1.9, eps, samples=50)
        bad = barrier_check(g, phi, 2.1, eps, samples=50)
        d[str(eps)] = {"c=1.9": ok.min_ratio, "c=2.1_passed": bad.passed}
        run.check(ok.passed, f"c=1.9 at eps={eps:g}")
        run.check(not bad.passed and bad.witness is not None, f"c=2.1 witness at eps={eps:g}")
        if bad.witness is not None:
            t = float(np.sum(np.abs(bad.witness) ** 2))
            exact = 4 * (1 - t / 2)
            d[str(eps)]["witness_ratio_vs_exact"] = abs(bad.min_ratio - exact)
            run.check(abs(bad.min_ratio - exact) <= 1e-8 * exact, f"exact bound at eps={eps:g}")
    run.res.detail = d
    return run.done()


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 11)}


def run_all(selected=None) -> list:
    return [CRITERIA[k]() for k in (selected or CRITERIA)]
