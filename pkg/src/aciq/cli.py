"""Command-line front end: ``aciq <command> [--config FILE] [options]``.

Every command writes a JSON report (or CSV rows for gridded data) to
``--out`` or standard output.  Exit status is 0 when all checks pass, 1 when
a numerical check fails and 2 on configuration or convergence errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .errors import ACIQError, ConfigError, ConvergenceError, GaugeConditionError

EXIT_OK, EXIT_CHECK_FAILED, EXIT_ERROR = 0, 1, 2

COMMANDS = ("verify", "moments", "quantize", "gauge", "coherent", "spectrum", "localize")

_NUMBER = {"type": "number"}
_ALPHA_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["exponential", "tabulated"]},
        "mu": _NUMBER,
        "theta": {"type": "array", "items": _NUMBER},
        "values": {"type": "array", "items": {"type": "array", "items": _NUMBER}},
        "d1": {"type": "array", "items": _NUMBER},
        "d2": {"type": "array", "items": _NUMBER},
    },
    "required": ["kind"],
    "additionalProperties": False,
}
_STATE_SCHEMA = {
    "type": "object",
    "properties": {
        "g": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["gaussian_ring", "tabulated"]},
                "center": {"type": "number", "exclusiveMinimum": 0},
                "width": {"type": "number", "exclusiveMinimum": 0},
                "r": {"type": "array", "items": _NUMBER},
                "values": {"type": "array", "items": _NUMBER},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "mu": _NUMBER,
    },
    "required": ["g"],
    "additionalProperties": False,
}
_WEIGHT_SCHEMA = {
    "type": "object",
    "properties": {
        "family": {"enum": ["example", "coherent"]},
        "nu": {"type": "number", "exclusiveMinimum": 0},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "alpha": _ALPHA_SCHEMA,
        "decay": {
            "type": "object",
            "properties": {"small": _NUMBER, "large": {"type": ["number", "string"]}},
            "additionalProperties": False,
        },
        "state": _STATE_SCHEMA,
    },
    "required": ["family"],
    "additionalProperties": False,
}
CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "weight": _WEIGHT_SCHEMA,
        "state": _STATE_SCHEMA,
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "hbar": {"type": "number", "exclusiveMinimum": 0},
        "charge": {"type": "number", "not": {"const": 0}},
        "betas": {"type": "array", "items": _NUMBER},
        "observables": {"type": "array", "items": {"type": "string"}},
        "grid": {
            "type": "object",
            "properties": {
                "r_min": {"type": "number", "exclusiveMinimum": 0},
                "r_max": {"type": "number", "exclusiveMinimum": 0},
                "n_r": {"type": "integer", "minimum": 2},
                "n_theta": {"type": "integer", "minimum": 3},
            },
            "additionalProperties": False,
        },
        "spectrum": {
            "type": "object",
            "properties": {
                "m": {"type": "integer"},
                "mu": _NUMBER,
                "K": {"type": "number", "minimum": 0},
                "n": {"type": "integer", "minimum": 3},
                "r_min": {"type": "number", "exclusiveMinimum": 0},
                "r_max": {"type": "number", "exclusiveMinimum": 0},
                "levels": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "localize": {
            "type": "object",
            "properties": {
                "nu": {"type": "number", "exclusiveMinimum": 0},
                "sigma": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

DEFAULT_WEIGHT = {"family": "example", "nu": 1.0, "sigma": 3.5,
                  "alpha": {"kind": "exponential", "mu": 1.0}}
DEFAULT_STATE = {"g": {"kind": "gaussian_ring", "center": 1.0, "width": 0.1}, "mu": 1.0}
DEFAULT_GRID = {"r_min": 1e-2, "r_max": 1e2, "n_r": 512, "n_theta": 256}


# plumbing -------------------------------------------------------------------

def load_config(path: str | None) -> dict:
    """Read and schema-validate a JSON config; ``None`` gives an empty config."""
    import jsonschema

    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc
    return doc


def resolve_threads(flag: int | None) -> int:
    if flag is not None:
        n = flag
    else:
        env = os.environ.get("ACIQ_THREADS")
        try:
            n = int(env) if env else 1
        except ValueError as exc:
            raise ConfigError(f"ACIQ_THREADS={env!r} is not an integer") from exc
    if n < 1:
        raise ConfigError("thread count must be >= 1")
    return n


def _c(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _check(name: str, value, expected, residual: float, tol: float) -> dict:
    passed = bool(np.isfinite(residual) and residual <= tol)
    return {"check": name, "value": value, "expected": expected,
            "residual": float(residual), "tol": tol, "passed": passed}


class Outcome:
    """Payload of a command: JSON report, optional CSV table, pass flag."""

    def __init__(self, report: dict, header=None, rows=None, passed: bool = True):
        self.report = report
        self.header = header
        self.rows = rows
        self.passed = passed

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            header, rows = self.header, self.rows
            if header is None:
                header, rows = _checks_table(self.report)
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                                 for v in row])
            return buf.getvalue()
        return json.dumps(self.report, indent=2) + "\n"


def _checks_table(report: dict):
    checks = report.get("checks", [])
    rows = [(c["check"], c["residual"], c["tol"], int(c["passed"])) for c in checks]
    return ("check", "residual", "tol", "passed"), rows


def _weight(cfg: dict):
    from .weights import weight_from_dict

    return weight_from_dict(cfg.get("weight", DEFAULT_WEIGHT))


def _grid(cfg: dict):
    from .fields import LogPolarGrid

    g = dict(DEFAULT_GRID)
    g.update(cfg.get("grid", {}))
    return LogPolarGrid(g["r_min"], g["r_max"], g["n_r"], g["n_theta"])


def _test_field(grid):
    from .fields import SampledField

    def phi(a, b):
        r = np.hypot(a, b)
        return np.exp(-np.log(r) ** 2) * (1.0 + 0.3 * a / r)

    return SampledField.from_function(grid, phi)


def _printed_k_report(w, K, hbar) -> dict:
    """Compare the printed ``2 hbar^2 nu^2`` with the derived ``2 hbar^2 nu``.

    The two closed forms coincide only at ``nu = 1``, so the discrepancy flag
    compares the formulas (probed at ``nu`` and ``2 nu``) rather than the
    single value at the configured ``nu``.
    """
    from .gauge import strength_from_alpha, strength_printed_exponential

    def differ(nu):
        a = strength_printed_exponential(nu, hbar)
        b = strength_from_alpha(nu, w.alpha, hbar).real
        return abs(a - b) > 1e-6 * max(abs(b), 1.0)

    printed = strength_printed_exponential(w.nu, hbar)
    return {
        "K_printed_formula": printed,
        "K_printed_formula_matches_here": bool(abs(printed - K) <= 1e-6 * max(abs(K), 1.0)),
        "K_printed_formula_discrepancy": bool(differ(w.nu) or differ(2.0 * w.nu)),
    }


# commands -------------------------------------------------------------------

def cmd_verify(cfg: dict, args) -> Outcome:
    from .gauge import (check_gauge_condition, flux, flux_quanta, pullback_identity_check,
                        scalar_strength, strength_from_alpha)
    from .moments import build_moment_table, grad_omega_at_1
    from .quantizer import (OperatorDescriptor, apply_multiplication_op, covariance_check,
                            quantize_power_q)
    from .sim2 import GroupElement, PlaneVector
    from .weights import check_symmetry, eval_weight

    tol = args.tol if args.tol is not None else cfg.get("tol", 1e-10)
    hbar, charge = cfg.get("hbar", 1.0), cfg.get("charge", 1.0)
    w = _weight(cfg)
    M = build_moment_table(w, tol=tol, threads=args.threads)
    checks = []

    w10 = eval_weight(w, PlaneVector(1.0, 0.0), PlaneVector(0.0, 0.0))
    checks.append(_check("trace_weight_at_unit", _c(w10), 1.0, abs(w10 - 1.0), 1e-12))
    om2 = M.beta_moment(-2.0) / (2.0 * math.pi)
    checks.append(_check("trace_omega_minus2", _c(om2), 1.0, abs(om2 - 1.0), 1e-8))
    if w.family == "example":
        target = math.pi * w.sigma ** 2
        checks.append(_check("omega_at_unit", _c(M.omega0), target,
                             abs(M.omega0 - target) / target, 1e-8))
    sym = check_symmetry(w, 100, seed=0)
    checks.append(_check("weight_symmetry", None, 0.0, sym.max_violation, 1e-10))
    checks.append(_check("gauge_condition_analytic", None, 0.0, check_gauge_condition(M), 1e-6))
    g_fd = grad_omega_at_1(w, tol=tol, method="fd").value
    res_fd = abs(g_fd.c1 / M.omega0 + 2.0)
    checks.append(_check("gauge_condition_fd", None, 0.0, res_fd, 1e-6))

    phi0 = flux(M, hbar, charge)
    K = scalar_strength(M, hbar)
    report = {"command": "verify", "weight": w.to_dict(), "omega_at_unit": _c(M.omega0),
              "flux": _c(phi0), "flux_quanta": flux_quanta(phi0, hbar, charge), "K": _c(K)}
    if w.family == "example":
        mu = w.alpha.mu if w.alpha.kind == "exponential" else None
        if mu is not None:
            target = 2.0 * math.pi * hbar * mu / charge
            scale = max(abs(target), 1.0)
            checks.append(_check("flux", _c(phi0), target,
                                 max(abs(phi0.real - target) / scale, abs(phi0.imag)), 1e-6))
        k_formula = strength_from_alpha(w.nu, w.alpha, hbar)
        checks.append(_check("K_vs_alpha_formula", _c(K), _c(k_formula),
                             abs(K - k_formula) / max(abs(k_formula), 1.0), 1e-6))
        if w.alpha.kind == "exponential":
            report.update(_printed_k_report(w, K, hbar))

    ident = quantize_power_q(M, 0.0)
    checks.append(_check("identity_descriptor", None, 0.0,
                         0.0 if ident == OperatorDescriptor.identity() else 1.0, 0.0))
    grid = _grid(cfg)
    phi = _test_field(grid)
    out = apply_multiplication_op(M, w, lambda a, b: np.ones_like(a), phi)
    checks.append(_check("resolution_of_identity", None, 0.0, out.relative_l2_distance(phi), 1e-10))

    pb = pullback_identity_check(M, w)
    checks.append(_check("pullback_identities", None, 0.0, pb.max_residual, 1e-5))

    g0 = GroupElement(PlaneVector(2.0, 0.0), PlaneVector(0.0, 0.0))
    cov = covariance_check(M, w, lambda a, b: np.hypot(a, b) ** -1.0, g0, phi, (-1.0, -1.0))
    checks.append(_check("covariance_dilation", None, 0.0, cov.residual, 1e-4))

    report["checks"] = checks
    report["passed"] = all(c["passed"] for c in checks)
    return Outcome(report, passed=report["passed"])


def cmd_moments(cfg: dict, args) -> Outcome:
    from .moments import build_moment_table, c_constant

    tol = args.tol if args.tol is not None else cfg.get("tol", 1e-10)
    w = _weight(cfg)
    betas = tuple(cfg.get("betas", (-2.0, -1.0, 0.5, 1.0)))
    M = build_moment_table(w, betas=betas, tol=tol, threads=args.threads)
    records = M.moment_records()
    g = M.require_grad()
    report = {"command": "moments", "weight": w.to_dict(), "c": _c(c_constant(M)),
              "grad_omega_at_unit": [_c(g.c1), _c(g.c2)],
              "laplacian_omega_at_unit": _c(M.require_lap()),
              "sign_flag": M.sign_flag, "moments": records}
    header = ("beta", "nu1", "nu2", "re", "im", "abs_err")
    rows = [(r["beta"], r["nu1"], r["nu2"], r["value"][0], r["value"][1], r["abs_err"])
            for r in records]
    return Outcome(report, header, rows)


def cmd_quantize(cfg: dict, args) -> Outcome:
    from .moments import build_moment_table
    from .quantizer import (quantize_angular_momentum, quantize_dilation, quantize_kinetic,
                            quantize_momentum, quantize_position, quantize_power_q)

    tol = args.tol if args.tol is not None else cfg.get("tol", 1e-10)
    w = _weight(cfg)
    betas = tuple(cfg.get("betas", (-2.0, -1.0, 0.5, 1.0)))
    M = build_moment_table(w, betas=betas, tol=tol, threads=args.threads)
    builders = {
        "position": quantize_position,
        "momentum": quantize_momentum,
        "kinetic": quantize_kinetic,
        "dilation": quantize_dilation,
        "angular_momentum": quantize_angular_momentum,
    }
    names = cfg.get("observables", list(builders))
    unknown = [n for n in names if n not in builders]
    if unknown:
        raise ConfigError(f"unknown observables {unknown}; choose from {sorted(builders)}")
    ops = {n: builders[n](M).to_dict() for n in names}
    for b in betas:
        ops[f"q^{b!r}"] = quantize_power_q(M, b).to_dict()
    return Outcome({"command": "quantize", "weight": w.to_dict(), "operators": ops})


def cmd_gauge(cfg: dict, args) -> Outcome:
    from .gauge import completed_square_residual, gauge_data
    from .moments import build_moment_table

    tol = args.tol if args.tol is not None else cfg.get("tol", 1e-10)
    hbar, charge = cfg.get("hbar", 1.0), cfg.get("charge", 1.0)
    w = _weight(cfg)
    M = build_moment_table(w, betas=(), gen=(), tol=tol, threads=args.threads)
    G = gauge_data(M, hbar, charge)
    report = {"command": "gauge", "weight": w.to_dict()}
    report.update(G.to_dict())
    report["completed_square_residual"] = completed_square_residual(M)
    if w.family == "example" and w.alpha.kind == "exponential":
        report.update(_printed_k_report(w, G.K, hbar))
    return Outcome(report)


def cmd_coherent(cfg: dict, args) -> Outcome:
    from .coherent import gauge_from_state, state_from_dict

    hbar, charge = cfg.get("hbar", 1.0), cfg.get("charge", 1.0)
    s = state_from_dict(cfg.get("state", DEFAULT_STATE))
    rep = gauge_from_state(s, hbar, charge)
    m = rep.means
    k_ref = m.p2 / m.inv_q2 if s.mu == 0 else None
    checks = [
        _check("K_means_vs_moments", _c(rep.K_means), _c(rep.K_moments),
               abs(rep.K_means - rep.K_moments) / abs(rep.K_moments), 1e-6),
        _check("flux_ratio_equals_omega_g", _c(rep.flux_ratio) if s.mu else None, rep.omega_g1,
               abs(rep.flux_ratio - rep.omega_g1) / rep.omega_g1 if s.mu else 0.0, 1e-6),
    ]
    if k_ref is not None:
        checks.append(_check("real_state_K", _c(rep.K_moments), k_ref,
                             abs(rep.K_moments - k_ref) / k_ref, 1e-6))
    report = {
        "command": "coherent",
        "state": s.to_dict(),
        "omega_at_unit": 2.0 * math.pi * m.inv_q2,
        "omega_g_at_unit": rep.omega_g1,
        "mean_inv_q2": m.inv_q2,
        "mean_p2": m.p2,
        "mean_inv_q_p": [_c(rep.vecpot_coefficient.c1), _c(rep.vecpot_coefficient.c2)],
        "flux_log_derivative": _c(rep.flux_log_derivative),
        "flux_phase_state": _c(rep.flux_phase_state),
        "flux_routes_disagree": bool(abs(rep.flux_log_derivative - rep.flux_phase_state)
                                     > 1e-6 * max(abs(rep.flux_log_derivative), 1.0)),
        "K": _c(rep.K_moments),
        "K_means": _c(rep.K_means),
        "K_phase_state_formula": rep.K_phase_state_formula,
        "K_phase_state_formula_discrepancy": bool(
            abs(rep.K_phase_state_formula - rep.K_moments) > 1e-5 * abs(rep.K_moments)),
        "laplacian_literal": _c(rep.lap_literal),
        "laplacian_moments": _c(rep.lap_moments),
        "checks": checks,
    }
    report["passed"] = all(c["passed"] for c in checks)
    return Outcome(report, passed=report["passed"])


def cmd_spectrum(cfg: dict, args) -> Outcome:
    from .spectral import RadialProblem, spectrum_compare

    sp = dict(cfg.get("spectrum", {}))
    for key in ("m", "mu", "K", "n"):
        val = getattr(args, key, None)
        if val is not None:
            sp[key] = val
    levels = sp.pop("levels", 3)
    tol = args.tol if args.tol is not None else cfg.get("tol", 5e-3)
    p = RadialProblem(sp.get("m", 1), sp.get("mu", 0.5), sp.get("K", 2.0),
                      sp.get("r_min", 1e-3), sp.get("r_max", 20.0), sp.get("n", 4000))
    cmp_ = spectrum_compare(p, levels)
    rows = cmp_.rows()
    rel = [r[-1] for r in rows]
    report = {"command": "spectrum", "m": p.m, "mu": p.mu, "K": p.K, "n": p.n,
              "r_min": p.r_min, "r_max": p.r_max, "nu_eff": p.nu_eff,
              "levels": [{"level": r[3], "eigenvalue": r[4], "oracle_value": r[5], "rel_err": r[6]}
                         for r in rows],
              "tol": tol, "passed": max(rel) < tol}
    header = ("m", "mu", "K", "level", "eigenvalue", "oracle_value", "rel_err")
    return Outcome(report, header, rows, report["passed"])


def cmd_localize(cfg: dict, args) -> Outcome:
    from .weights import AlphaSpec, ExampleWeight, localization_profile

    loc = dict(cfg.get("localize", {}))
    if args.nu is not None:
        loc["nu"] = args.nu
    if args.sigma is not None:
        loc["sigma"] = args.sigma
    w = ExampleWeight(loc.get("nu", 64.0), loc.get("sigma", 3.5), AlphaSpec.exponential(0.0))
    prof = localization_profile(w)
    dq = float(prof.q[1] - prof.q[0])
    dp = float(prof.p1[1] - prof.p1[0])
    a = prof.argmax
    off = max(abs(a[0] - 1.0) / dq, abs(a[2]) / dp, abs(a[3]) / dp)
    passed = off <= 1.0
    report = {"command": "localize", "nu": w.nu, "sigma": w.sigma, "argmax": list(a),
              "argmax_offset_cells": off, "level_set_cells_0.5": prof.level_set_count(0.5),
              "passed": passed}
    header = ("q1", "q2", "p1", "p2", "abs_w_normalized")
    return Outcome(report, header, list(prof.rows()), passed)


HANDLERS = {
    "verify": cmd_verify,
    "moments": cmd_moments,
    "quantize": cmd_quantize,
    "gauge": cmd_gauge,
    "coherent": cmd_coherent,
    "spectrum": cmd_spectrum,
    "localize": cmd_localize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aciq", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file.")
    common.add_argument("--tol", type=float, help="Quadrature or acceptance tolerance.")
    common.add_argument("--threads", type=int, help="Worker threads (default: $ACIQ_THREADS or 1).")
    common.add_argument("--out", help="Output file (default: standard output).")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="Output format (default: csv for gridded data, json otherwise).")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=HANDLERS[name].__doc__)
        if name == "spectrum":
            p.add_argument("--m", type=int, help="Angular mode.")
            p.add_argument("--mu", type=float, help="Flux in quanta.")
            p.add_argument("--K", type=float, help="Scalar strength.")
            p.add_argument("--n", type=int, help="Interior grid points.")
        if name == "localize":
            p.add_argument("--nu", type=float, help="Radial localization parameter.")
            p.add_argument("--sigma", type=float, help="Momentum width parameter.")
    return parser


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _diagnostic(kind: str, message: str, **extra) -> None:
    doc = {"error": kind, "message": message}
    doc.update(extra)
    sys.stderr.write(json.dumps(doc) + "\n")


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.threads = resolve_threads(args.threads)
        cfg = load_config(args.config)
        if cfg.get("command", args.command) != args.command:
            raise ConfigError(f"config is for command {cfg['command']!r}, not {args.command!r}")
        outcome = HANDLERS[args.command](cfg, args)
    except GaugeConditionError as exc:
        _diagnostic("GaugeConditionError", str(exc), check="gauge_condition",
                    residual=exc.residual, tol=exc.tol)
        return EXIT_CHECK_FAILED
    except ConvergenceError as exc:
        _diagnostic("ConvergenceError", str(exc), estimate=_c(exc.estimate), abs_err=exc.abs_err)
        return EXIT_ERROR
    except ACIQError as exc:
        _diagnostic(type(exc).__name__, str(exc))
        return EXIT_ERROR
    fmt = args.format or ("csv" if args.command in ("spectrum", "localize") else "json")
    _emit(outcome.render(fmt), args.out)
    if not outcome.passed:
        failed = [c["check"] for c in outcome.report.get("checks", []) if not c["passed"]]
        _diagnostic("CheckFailed", "numerical check failed", checks=failed or [args.command])
        return EXIT_CHECK_FAILED
    return EXIT_OK


def main() -> None:
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. ``| head``); silence the flush at interpreter exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = EXIT_OK
    sys.exit(code)


if __name__ == "__main__":
    main()
