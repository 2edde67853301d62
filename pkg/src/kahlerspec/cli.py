"""Batch front end: ``kahlerspec <subcommand> [--config file.json] [flags]``.

Exit status: 0 success, 1 verification failure or solver non-convergence,
2 usage error.  Reports are JSON with sorted keys; every report carries the
normalization tag, the tool version and a ``timestamp`` (the only field that
varies between identical runs).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, is_dataclass

from . import NORMALIZATION, __version__

THREAD_ENV = "KAHLERSPEC_THREADS"
DOMAIN_KINDS = ("ball", "perturbed", "reinhardt-poly", "calabi-chart", "flat-sanity")


class UsageError(Exception):
    pass


class VerificationFailure(Exception):
    def __init__(self, msg: str, report: dict | None = None):
        super().__init__(msg)
        self.report = report


@dataclass
class DomainSpec:
    kind: str = "ball"
    n: int = 2
    name: str = ""
    coeffs: list | None = None  # [[exponents], coefficient] for reinhardt-poly
    perturbation: float = 0.1
    analytic: bool = True

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise UsageError(f"unknown domain kind {self.kind!r}; choose from {', '.join(DOMAIN_KINDS)}")
        if self.n < 1:
            raise UsageError("n must be >= 1")
        if self.kind in ("perturbed", "reinhardt-poly") and self.n != 2:
            raise UsageError(f"{self.kind} domains are two-dimensional here (n = 2)")
        if self.kind == "reinhardt-poly" and not self.coeffs:
            raise UsageError("reinhardt-poly needs a coefficient table (key 'coeffs')")
        if self.kind == "calabi-chart" and self.n < 2:
            raise UsageError("calabi-chart needs n >= 2")
        self.name = self.name or (f"{self.kind}(n={self.n})" if self.kind != "perturbed" else f"perturbed({self.perturbation})")

    def reinhardt(self):
        from .reinhardt import ReinhardtDomain

        if self.kind == "ball":
            d = ReinhardtDomain.ball(self.n)
        elif self.kind == "perturbed":
            d = ReinhardtDomain.perturbed(self.perturbation)
        elif self.kind == "reinhardt-poly":
            d = ReinhardtDomain.from_json({"name": self.name, "n": self.n, "coeffs": self.coeffs})
        else:
            raise UsageError(f"{self.kind} is not a Reinhardt domain")
        try:
            d.check_pseudoconvex()
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        return d


@dataclass
class RunConfig:
    subcommand: str
    domain: DomainSpec = field(default_factory=DomainSpec)
    samples: int = 100
    points: int = 50
    grid: int = 65
    radial_grid: int = 257
    spectral_grid: int = 2049
    alphas: list = field(default_factory=lambda: [1.4, 1.2, 1.1, 1.05, 1.025])
    eps: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    tolerance: float = 0.05
    solver_tol: float = 1e-10
    max_iter: int = 40
    seed: int = 0
    output: str | None = None
    csv_prefix: str | None = None
    checkpoint: str | None = None
    deterministic: bool = True

    def validate(self):
        for k in ("samples", "points", "grid", "radial_grid", "spectral_grid", "max_iter"):
            if getattr(self, k) <= 0:
                raise UsageError(f"{k} must be positive")
        for k in ("tolerance", "solver_tol"):
            if not getattr(self, k) > 0:
                raise UsageError(f"{k} must be positive")
        for k in ("alphas", "eps"):
            v = getattr(self, k)
            if not v or any(b >= a for a, b in zip(v, v[1:])):
                raise UsageError(f"{k} must be nonempty and strictly decreasing")
        if self.grid < 9:
            raise UsageError("grid must be at least 9")


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

DOMAIN_KEYS = {"domain": "kind", "n": "n", "name": "name", "coeffs": "coeffs", "perturbation": "perturbation"}


def build_config(subcommand: str, file_values: dict, flag_values: dict) -> RunConfig:
    """Merge defaults < config file < flags.  Keys are flat (``domain``, ``n``, ``grid``, ...)."""
    merged = {**file_values, **{k: v for k, v in flag_values.items() if v is not None}}
    known = set(DOMAIN_KEYS) | {f for f in RunConfig.__dataclass_fields__ if f not in ("subcommand", "domain")}
    unknown = sorted(set(merged) - known)
    if unknown:
        raise UsageError(f"unknown configuration keys: {', '.join(unknown)}")
    dom = {DOMAIN_KEYS[k]: merged.pop(k) for k in list(merged) if k in DOMAIN_KEYS}
    try:
        cfg = RunConfig(subcommand, DomainSpec(**dom), **merged)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc
    cfg.alphas = [float(a) for a in cfg.alphas]
    cfg.eps = [float(e) for e in cfg.eps]
    cfg.validate()
    return cfg


def jsonable(x):
    """numpy scalars/arrays, complex numbers and dataclasses to JSON; non-finite floats to null."""
    import numpy as np

    if is_dataclass(x) and not isinstance(x, type):
        return jsonable(asdict(x))
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [jsonable(float(x.real)), jsonable(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    return x


def dump_report(report: dict, cfg: RunConfig, stamp: bool = True) -> str:
    body = {
        **report,
        "normalization": NORMALIZATION,
        "version": __version__,
        "subcommand": cfg.subcommand,
        "config": {k: v for k, v in asdict(cfg).items() if k not in ("subcommand",)},
    }
    if stamp:
        body["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return json.dumps(jsonable(body), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def emit(text: str, path: str | None):
    from .fefferman import atomic_write

    if path is None:
        sys.stdout.write(text)
        return
    try:
        atomic_write(path, text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _interior_sample(cfg: RunConfig, rho, reach: float = 0.95):
    """Points with rho < 0: radius fraction of the boundary along random directions."""
    import numpy as np
    from scipy.optimize import brentq

    rng = np.random.default_rng(cfg.seed)
    n = rho.n
    pts = []
    for _ in range(cfg.samples):
        d = rng.normal(size=n) + 1j * rng.normal(size=n)
        d /= np.linalg.norm(d)
        hi = 1.0
        while rho(hi * d) < 0:
            hi *= 2.0
        rb = brentq(lambda r: rho(r * d), 0.0, hi, xtol=1e-14)
        pts.append(rng.uniform(0.05, reach) * rb * d)
    return pts


def cmd_check_identities(cfg: RunConfig) -> dict:
    from .catalog import ball_defining
    from .fefferman import ma_identity_residuals

    spec = cfg.domain
    rho = ball_defining(spec.n) if spec.kind == "ball" else spec.reinhardt().scalar_field()
    rep = ma_identity_residuals(rho, _interior_sample(cfg, rho))
    out = {"domain": spec.name, "summary": rep.summary(), "passed": rep.passed, "worst": rep.worst, "message": rep.message()}
    if not rep.passed:
        raise VerificationFailure(rep.message(), out)
    return out


def _solve_field(cfg: RunConfig):
    from .fefferman import SolverConfig, load_checkpoint, save_checkpoint, solve_reinhardt_2d
    from .reinhardt import MeshSpec

    if cfg.checkpoint and os.path.exists(cfg.checkpoint):
        f = load_checkpoint(cfg.checkpoint)
        if f.domain.to_json()["coeffs"] == cfg.domain.reinhardt().to_json()["coeffs"] and f.mesh.spec.size == cfg.grid:
            return f
    f = solve_reinhardt_2d(cfg.domain.reinhardt(), MeshSpec(size=cfg.grid), SolverConfig(tol=cfg.solver_tol, max_iter=cfg.max_iter))
    if cfg.checkpoint:
        save_checkpoint(f, cfg.checkpoint)
    return f


def cmd_solve_fefferman(cfg: RunConfig) -> dict:
    import numpy as np

    from .fefferman import solve_radial_ball

    spec = cfg.domain
    out = {"domain": spec.name}
    if spec.kind == "ball":
        rad = solve_radial_ball(spec.n, cfg.radial_grid, tol=cfg.solver_tol, max_iter=cfg.max_iter)
        out["radial"] = {
            "grid": cfg.radial_grid,
            "iterations": rad.iterations,
            "residual": rad.residual,
            "max_error_vs_1_minus_t": rad.error_against(lambda t: 1.0 - t),
        }
    if spec.n == 2 and spec.kind in ("ball", "perturbed", "reinhardt-poly"):
        f = _solve_field(cfg)
        interior = f.mesh.unknown
        out["reinhardt_2d"] = {
            "grid": cfg.grid,
            "iterations": f.iterations,
            "residual": f.residual,
            "residual_trace": list(f.trace),
            "min_v_interior": float(np.min(f.v[interior])),
            "min_eig_hessian_rho": float(np.nanmin(f.min_eig_hessian_rho()[interior])),
            "checkpoint": cfg.checkpoint,
        }
        if spec.kind == "ball":
            out["reinhardt_2d"]["max_error_vs_1_minus_t1_minus_t2"] = float(np.max(np.abs(f.v - (1.0 - f.t.sum(-1)))))
    if len(out) == 1:
        raise UsageError(f"solve-fefferman supports ball (any n) and n = 2 Reinhardt domains, not {spec.kind}")
    return out


def _spectral_domain(cfg: RunConfig):
    from .spectrum import RadialData

    k = cfg.domain.kind
    if k == "ball":
        return RadialData.ball(cfg.domain.n)
    if k == "flat-sanity":
        return RadialData.flat_disc(cfg.domain.n)
    if k in ("perturbed", "reinhardt-poly"):
        return _solve_field(cfg)
    raise UsageError(f"estimate-lambda0 does not support {k}")


def cmd_estimate_lambda0(cfg: RunConfig) -> dict:
    from .spectrum import SpectralConfig, lambda0_report

    n = cfg.domain.n
    sc = SpectralConfig(
        alphas=tuple(cfg.alphas),
        eps=tuple(cfg.eps),
        grid=cfg.spectral_grid,
        tolerance=cfg.tolerance,
        webster_points=cfg.points,
        seed=cfg.seed,
    )
    rep = lambda0_report(_spectral_domain(cfg), sc)
    if cfg.csv_prefix:
        if rep.sweep:
            emit(rep.sweep_csv(), cfg.csv_prefix + "_sweep.csv")
        emit(rep.dirichlet_csv(), cfg.csv_prefix + "_dirichlet.csv")
    out = rep.to_dict()
    out["n"] = n
    bad = [k for k, v in rep.invariants.items() if not v]
    if bad:
        raise VerificationFailure(f"report invariants breached: {', '.join(bad)}", out)
    return out


def cmd_webster(cfg: RunConfig) -> dict:
    from . import crboundary

    spec = cfg.domain
    if spec.kind == "ball":
        s = crboundary.ball_webster_survey(spec.n, cfg.points, cfg.seed)
        out = {"domain": spec.name, "summary": {"min_webster": s["min_webster"], "max_webster": s["max_webster"], "verdict": s["verdict"]}, "points": s["report"]["points"]}
    elif spec.kind in ("perturbed", "reinhardt-poly"):
        s = crboundary.field_webster_survey(_solve_field(cfg))
        out = {
            "domain": spec.name,
            "summary": {k: s[k] for k in ("min_webster", "max_webster", "verdict", "max_J_defect")},
            "points": s["points"],
            "refused": s["refused"],
        }
    else:
        raise UsageError(f"webster does not support {spec.kind}")
    return out


def cmd_curvature_asymptotics(cfg: RunConfig) -> dict:
    import numpy as np

    from .catalog import ball_defining
    from .kahler import ball_metric, bisectional_ratio, curvature_tensor, defining_metric

    spec = cfg.domain
    if spec.kind == "ball":
        phi, metric = ball_defining(spec.n), ball_metric(spec.n)
    elif spec.kind in ("perturbed", "reinhardt-poly"):
        phi = spec.reinhardt().scalar_field()
        metric = defining_metric(phi)
    else:
        raise UsageError(f"curvature-asymptotics does not support {spec.kind}")
    n = spec.n
    rng = np.random.default_rng(cfg.seed)
    pairs = [(np.eye(n)[0], np.eye(n)[min(1, n - 1)])]
    pairs += [tuple(rng.normal(size=(2, n)) + 1j * rng.normal(size=(2, n))) for _ in range(4)]
    origin = curvature_tensor(metric, np.zeros(n))
    origin_ratios = [bisectional_ratio(origin, x, y) for x, y in pairs]
    direction = np.ones(n, dtype=complex) / math.sqrt(n)
    from scipy.optimize import brentq

    hi = 1.0
    while phi(hi * direction) < 0:
        hi *= 2
    rb = brentq(lambda r: phi(r * direction), 0.0, hi, xtol=1e-15)
    ray = []
    sym = origin.symmetry_defect()
    for frac in (0.5, 0.7, 0.9, 0.95, 0.99, 0.995):
        z = frac * rb * direction
        c = curvature_tensor(metric, z)
        depth = float(-phi(z))
        dev = max(abs(bisectional_ratio(c, x, y) - 1.0) for x, y in pairs)
        sym = max(sym, c.symmetry_defect())
        ray.append({"fraction": frac, "depth": depth, "max_abs_ratio_minus_1": dev, "ricci_plus_n1_g": float(np.max(np.abs(c.ricci + (n + 1) * c.metric.g)) / np.max(np.abs(c.metric.g)))})
    fitted = max(r["max_abs_ratio_minus_1"] / r["depth"] for r in ray)
    out = {
        "domain": spec.name,
        "origin_ratios": origin_ratios,
        "origin_max_deviation": max(abs(r - 1.0) for r in origin_ratios),
        "ray": ray,
        "fitted_C": fitted,
        "symmetry_defect": sym,
    }
    fails = []
    if spec.kind == "ball" and out["origin_max_deviation"] > 1e-10:
        fails.append("origin bisectional ratio")
    if sym > 1e-8:
        fails.append("curvature symmetries")
    if fails:
        raise VerificationFailure(", ".join(fails) + " out of tolerance", out)
    return out


def cmd_calabi_check(cfg: RunConfig) -> dict:
    import numpy as np

    from .crboundary import calabi_chart_ricci_check, circle_bundle_webster, disc_model_metric

    n = cfg.domain.n
    if n < 2:
        raise UsageError("calabi-check needs n >= 2")
    rng = np.random.default_rng(cfg.seed)
    worst, worst_rot = 0.0, 0.0
    for _ in range(cfg.points):
        zeta = rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1)
        zeta *= rng.uniform(0.0, 0.9) / np.linalg.norm(zeta)
        s = float(np.sum(np.abs(zeta) ** 2))
        w = math.sqrt(rng.uniform(0.0, 0.9) * (1 - s)) * np.exp(2j * np.pi * rng.uniform())
        r0, scale = calabi_chart_ricci_check(n, zeta, w, with_scale=True)
        r1 = calabi_chart_ricci_check(n, zeta, w * np.exp(1j * rng.uniform(0, 2 * np.pi)))
        worst = max(worst, float(np.max(np.abs(r0))))
        worst_rot = max(worst_rot, float(np.max(np.abs(r0 - r1))) / scale)
    base = disc_model_metric(n - 1)
    zeta = 0.3 * np.ones(n - 1) / math.sqrt(n - 1)
    cb = circle_bundle_webster(base, zeta)
    out = {
        "n": n,
        "points": cfg.points,
        "max_ricci_residual": worst,
        "max_fiber_rotation_difference_relative": worst_rot,
        "circle_bundle_webster": asdict(cb),
        "expected_webster": -n * (n - 1),
    }
    fails = []
    if worst > 1e-6:
        fails.append("Ric + (n+1)g residual")
    if abs(cb.scalar + n * (n - 1)) > 1e-8:
        fails.append("circle-bundle Webster scalar")
    if worst_rot > 1e-10:
        fails.append("fiber rotation invariance")
    if fails:
        raise VerificationFailure(", ".join(fails) + " out of tolerance", out)
    return out


COMMANDS = {
    "check-identities": cmd_check_identities,
    "solve-fefferman": cmd_solve_fefferman,
    "estimate-lambda0": cmd_estimate_lambda0,
    "webster": cmd_webster,
    "curvature-asymptotics": cmd_curvature_asymptotics,
    "calabi-check": cmd_calabi_check,
}


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kahlerspec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file with flat keys (domain, n, grid, eps, ...)")
        s.add_argument("--domain", choices=DOMAIN_KINDS)
        s.add_argument("--n", type=int)
        s.add_argument("--coeffs-file", help="JSON coefficient table for reinhardt-poly")
        s.add_argument("--perturbation", type=float)
        s.add_argument("--samples", type=int)
        s.add_argument("--points", type=int)
        s.add_argument("--grid", type=int)
        s.add_argument("--radial-grid", type=int)
        s.add_argument("--spectral-grid", type=int)
        s.add_argument("--alphas", type=float, nargs="+")
        s.add_argument("--eps", type=float, nargs="+")
        s.add_argument("--tolerance", type=float)
        s.add_argument("--solver-tol", type=float)
        s.add_argument("--max-iter", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--output", "-o")
        s.add_argument("--csv-prefix")
        s.add_argument("--checkpoint")
        s.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    return p


def _apply_threads():
    threads = os.environ.get(THREAD_ENV)
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def main(argv=None) -> int:
    _apply_threads()
    try:
        args = parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = vars(args).copy()
    sub = flags.pop("subcommand")
    cfg_path = flags.pop("config")
    coeffs_file = flags.pop("coeffs_file")
    no_stamp = flags.pop("no_timestamp")
    try:
        file_values = {}
        if cfg_path:
            with open(cfg_path) as fh:
                file_values = json.load(fh)
            if not isinstance(file_values, dict):
                raise UsageError("config file must hold a JSON object")
        if coeffs_file:
            with open(coeffs_file) as fh:
                data = json.load(fh)
            flags["coeffs"] = data["coeffs"] if isinstance(data, dict) else data
        cfg = build_config(sub, file_values, flags)
        report = COMMANDS[sub](cfg)
        status = 0
    except (UsageError, OSError, json.JSONDecodeError) as exc:
        print(f"kahlerspec: error: {exc}", file=sys.stderr)
        return 2
    except VerificationFailure as exc:
        print(f"kahlerspec: verification failed: {exc}", file=sys.stderr)
        report, status = {**(exc.report or {}), "failure": str(exc)}, 1
    except Exception as exc:  # solver and metric errors carry diagnostics
        from .fefferman import SolverError
        from .kahler import MetricError

        if not isinstance(exc, (SolverError, MetricError, RuntimeError, ValueError)):
            raise
        print(f"kahlerspec: {type(exc).__name__}: {exc}", file=sys.stderr)
        report, status = {"failure": str(exc), "error_type": type(exc).__name__}, 1
        if isinstance(exc, SolverError):
            report["residual_trace"] = list(exc.trace)
    try:
        emit(dump_report(report, cfg, stamp=not no_stamp), cfg.output)
    except UsageError as exc:
        print(f"kahlerspec: error: {exc}", file=sys.stderr)
        return 2
    return status


if __name__ == "__main__":
    sys.exit(main())
