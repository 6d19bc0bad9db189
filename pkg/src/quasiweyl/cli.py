"""Batch command-line surface.

Five subcommands, each driven by a JSON config (``--config``) with a few
flag overrides:

* ``gen-matrix``  symbolic quadratic-form and associated matrices as JSON
* ``weyl-sweep``  Weyl matrix entries over a spectral grid as CSV
* ``verify``      randomized exact regularization-identity suite
* ``transform``   order-shifting correspondence, optionally with a
                  Weyl-invariance check (``--check``)
* ``asym-probe``  mode-ratio convergence along a ray as CSV

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
Outputs are deterministic: the same config and seed give byte-identical
files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import equivalence as eq
from . import model, quasideriv, regularize, spectral

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config schemas
# ---------------------------------------------------------------------------

_COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}

_LAMBDA_GRID = {
    "type": "object",
    "oneOf": [
        {
            "properties": {
                "kind": {"const": "list"},
                "values": {"type": "array", "items": _COMPLEX, "minItems": 1},
            },
            "required": ["kind", "values"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "ray"},
                "phi": {"type": "number"},
                "magnitudes": {
                    "type": "array",
                    "items": {"type": "number", "exclusiveMinimum": 0},
                    "minItems": 1,
                },
            },
            "required": ["kind", "phi", "magnitudes"],
            "additionalProperties": False,
        },
    ],
}

_PROBLEM = {"type": "object"}  # structural validation happens on parse

SCHEMAS = {
    "gen-matrix": {
        "type": "object",
        "properties": {
            "n": {"type": "integer", "minimum": 2},
            "orders": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            "zero_sigma": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            "latex": {"type": "boolean"},
        },
        "required": ["n", "orders"],
        "additionalProperties": False,
    },
    "weyl-sweep": {
        "type": "object",
        "properties": {
            "problem": _PROBLEM,
            "lambda_grid": _LAMBDA_GRID,
            "steps": {"type": "integer", "minimum": 1},
            "exponent_guard": {"type": "number", "exclusiveMinimum": 0},
            "jobs": {"type": "integer", "minimum": 1},
        },
        "required": ["problem", "lambda_grid"],
        "additionalProperties": False,
    },
    "verify": {
        "type": "object",
        "properties": {
            "orders_n": {
                "type": "array",
                "items": {"type": "integer", "minimum": 2},
                "minItems": 1,
            },
            "cases": {"type": "integer", "minimum": 1},
            "max_degree": {"type": "integer", "minimum": 0},
            "seed": {"type": "integer"},
        },
        "additionalProperties": False,
    },
    "transform": {
        "type": "object",
        "properties": {
            "problem": _PROBLEM,
            "transform": {
                "type": "object",
                "properties": {
                    "family": {"enum": ["n2", "n4"]},
                    "case": {"enum": ["case1", "case2", "case3"]},
                    "direction": {"enum": ["raise", "lower"]},
                    "free_parameter": _COMPLEX,
                },
                "required": ["family", "direction"],
                "additionalProperties": False,
            },
            "check": {
                "type": "object",
                "properties": {
                    "lambda_grid": _LAMBDA_GRID,
                    "steps": {"type": "integer", "minimum": 1},
                    "tolerance": {"type": "number", "exclusiveMinimum": 0},
                },
                "required": ["lambda_grid"],
                "additionalProperties": False,
            },
        },
        "required": ["problem", "transform"],
        "additionalProperties": False,
    },
    "asym-probe": {
        "type": "object",
        "properties": {
            "problem": _PROBLEM,
            "k": {"type": "integer", "minimum": 1},
            "j": {"type": "integer", "minimum": 0},
            "phi": {"type": "number"},
            "magnitudes": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0},
                "minItems": 1,
            },
            "x": {"type": "number", "exclusiveMinimum": 0},
            "steps": {"type": "integer", "minimum": 1},
            "exponent_guard": {"type": "number", "exclusiveMinimum": 0},
            "tolerance": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["problem", "k", "j", "phi", "magnitudes", "x"],
        "additionalProperties": False,
    },
}


def _load_config(path: str, command: str) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema error: {exc.message}") from exc
    return config


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _lambda_points(grid: dict, n: int) -> tuple[list[complex], list[complex] | None]:
    """Grid -> (lambda values, matching rho values or None)."""
    if grid["kind"] == "list":
        return [model.complex_from_json(v) for v in grid["values"]], None
    phi = float(grid["phi"])
    rhos = [m * complex(math.cos(phi), math.sin(phi)) for m in grid["magnitudes"]]
    return [rho**n for rho in rhos], rhos


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen_matrix(config: dict, out: Path) -> int:
    orders = model.validate_orders(config["n"], config["orders"])
    Q = regularize.quadratic_form(orders)
    F = regularize.associated_matrix(Q)
    zero = {int(nu): 0 for nu in config.get("zero_sigma", [])}
    if zero:
        Q = regularize.QuadraticForm(
            Q.n, tuple(tuple(e.set_symbols(zero) for e in row) for row in Q.entries)
        )
        F = F.set_symbols(zero)
    report = regularize.structure_report(F)
    payload = {
        "n": orders.n,
        "orders": list(orders.orders),
        "Q": Q.render(),
        "F": F.render(),
        "structure": report.to_json(),
    }
    if config.get("latex"):
        payload["latex_F"] = F.render_latex()
    _write_text(out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")
    return EXIT_OK if report.all_ok else EXIT_NUMERICAL


def cmd_weyl_sweep(config: dict, out: Path, steps_override, x_override, jobs_override) -> int:
    problem = _parse_problem(config["problem"])
    if x_override is not None and not problem.geometry.is_finite:
        problem = eq.Problem(
            problem.coeffs, problem.U, problem.V, model.truncated_half_line(x_override)
        )
    steps = steps_override or config.get("steps", 4000)
    guard = config.get("exponent_guard", spectral.EXPONENT_GUARD)
    jobs = jobs_override or config.get("jobs", 1)
    n = problem.n
    lams, rhos = _lambda_points(config["lambda_grid"], n)

    sampled, sampled_back = eq._sampled_grids(problem, steps)

    def solve(idx: int):
        lam = lams[idx]
        rho = rhos[idx] if rhos is not None else None
        try:
            if problem.geometry.is_finite:
                w = spectral.weyl_matrix_finite(
                    problem.coeffs, lam, problem.U, problem.V, steps,
                    sampled=sampled, raise_on_pole=False,
                )
            else:
                w = spectral.weyl_matrix_halfline(
                    problem.coeffs, lam, problem.U, problem.geometry.truncation, steps,
                    rho=rho, exponent_guard=guard,
                    sampled_backward=sampled_back, raise_on_pole=False,
                )
            return w, None
        except (spectral.IntegrationOverflow, spectral.SingularAtLambda) as exc:
            return None, f"error:{type(exc).__name__}"

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(solve, range(len(lams))))
    else:
        results = [solve(i) for i in range(len(lams))]

    pairs = [(s, k) for k in range(1, n + 1) for s in range(k + 1, n + 1)]
    header = ["lambda_re", "lambda_im", "rho_re", "rho_im"]
    for s, k in pairs:
        header += [f"M{s}{k}_re", f"M{s}{k}_im"]
    header += ["cond", "flags"]

    rows = []
    hard_failure = False
    for idx, (w, err) in enumerate(results):
        lam = lams[idx]
        if err is not None:
            hard_failure = True
            rows.append([_fmt(lam.real), _fmt(lam.imag)] + [""] * (2 + 2 * len(pairs)) + [err])
            continue
        row = [_fmt(lam.real), _fmt(lam.imag), _fmt(w.rho.real), _fmt(w.rho.imag)]
        for s, k in pairs:
            row += [_fmt(w.M[s - 1, k - 1].real), _fmt(w.M[s - 1, k - 1].imag)]
        row += [_fmt(w.cond), ";".join(w.flags)]
        rows.append(row)

    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {out} ({len(rows)} rows)")
    return EXIT_NUMERICAL if hard_failure else EXIT_OK


def cmd_verify(config: dict, out: Path | None, seed_override) -> int:
    ns = config.get("orders_n", [2, 3, 4, 5, 6])
    cases = config.get("cases", 100)
    max_degree = config.get("max_degree", 6)
    seed = seed_override if seed_override is not None else config.get("seed", 1)
    failures = 0
    lines = []
    for n in ns:
        for case_idx in range(cases):
            case_seed = seed + case_idx
            rng = random.Random(n * 1_000_003 + case_seed)
            coeffs, y = quasideriv.random_residual_case(rng, n, max_degree)
            residual = quasideriv.regularization_residual(coeffs, y)
            ok = residual.is_zero
            failures += 0 if ok else 1
            lines.append(
                {
                    "n": n,
                    "orders": list(coeffs.orders.orders),
                    "seed": case_seed,
                    "residual_degree": residual.degree,
                    "pass": ok,
                }
            )
    print(f"{'n':>3} {'orders':<16} {'seed':>6} {'res.deg':>8}  result")
    for rec in lines:
        status = "PASS" if rec["pass"] else "FAIL"
        print(
            f"{rec['n']:>3} {str(tuple(rec['orders'])):<16} {rec['seed']:>6} "
            f"{rec['residual_degree']:>8}  {status}"
        )
    total = len(lines)
    print(f"{total - failures}/{total} cases passed")
    if out is not None:
        _write_text(out, json.dumps({"cases": lines, "failures": failures}, indent=2) + "\n")
    return EXIT_OK if failures == 0 else EXIT_NUMERICAL


def cmd_transform(config: dict, out: Path, do_check: bool, steps_override) -> int:
    problem = _parse_problem(config["problem"])
    spec = config["transform"]
    family = spec["family"]
    direction = spec["direction"]
    free = spec.get("free_parameter")
    free = model.complex_from_json(free) if free is not None else None
    try:
        if family == "n2":
            if problem.geometry.is_finite:
                transformed = eq.finite_shift_n2(problem, direction, free)
            else:
                sigma0, h = problem.coeffs.sigma[0], problem.U.entry(2, 1)
                new_sigma, new_h = eq.shift_order_n2(sigma0, h, direction)
                new_orders = (1,) if direction == eq.RAISE else (0,)
                transformed = eq.Problem(
                    model.CoefficientSet(model.validate_orders(2, new_orders), (new_sigma,)),
                    problem.U.with_entries({(2, 1): new_h}),
                    None,
                    problem.geometry,
                )
        else:
            case = spec.get("case")
            if case is None:
                raise ConfigError("fourth-order transforms need a 'case'")
            if problem.geometry.is_finite:
                transformed = eq.finite_shift_n4(problem, case, direction, free)
            else:
                transformed = eq.shift_order_n4(problem, case, direction)
    except (eq.InvalidCase, model.NonIntegrableTail, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    payload = {"problem": eq.problem_to_json(transformed)}
    code = EXIT_OK
    if do_check:
        if "check" not in config:
            raise ConfigError("--check needs a 'check' section in the config")
        check = config["check"]
        steps = steps_override or check.get("steps", 3000)
        tol = check.get("tolerance", 1e-6 if problem.geometry.is_finite else 1e-4)
        lams, rhos = _lambda_points(check["lambda_grid"], problem.n)
        report = eq.weyl_invariance_report(problem, transformed, lams, steps, rhos)
        payload["check"] = report.to_json()
        payload["check"]["tolerance"] = tol
        if report.max_deviation > tol:
            code = EXIT_NUMERICAL
        print(f"max Weyl deviation {report.max_deviation:.3e} (tolerance {tol:g})")
    _write_text(out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")
    return code


def cmd_asym_probe(config: dict, out: Path, steps_override, x_override) -> int:
    problem = _parse_problem(config["problem"])
    if problem.geometry.is_finite:
        raise ConfigError("asym-probe needs a half-line problem")
    X = x_override or problem.geometry.truncation
    steps = steps_override or config.get("steps", 4000)
    guard = config.get("exponent_guard", spectral.EXPONENT_GUARD)
    probe = spectral.asymptotic_probe(
        problem.coeffs,
        problem.U,
        config["k"],
        config["j"],
        config["phi"],
        config["magnitudes"],
        config["x"],
        X=X,
        steps=steps,
        exponent_guard=guard,
    )
    errors = probe.relative_errors()
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho_abs", "ratio_re", "ratio_im", "limit_re", "limit_im", "rel_error"])
        for mag, ratio, err in zip(probe.magnitudes, probe.ratios, errors):
            writer.writerow(
                [
                    _fmt(mag),
                    _fmt(ratio.real),
                    _fmt(ratio.imag),
                    _fmt(probe.limit.real),
                    _fmt(probe.limit.imag),
                    _fmt(err),
                ]
            )
    print(f"wrote {out} (limit {probe.limit:.6g}, final rel. error {errors[-1]:.3e})")
    tol = config.get("tolerance")
    if tol is not None and errors[-1] > tol:
        return EXIT_NUMERICAL
    return EXIT_OK


def _parse_problem(data: dict) -> eq.Problem:
    try:
        return eq.problem_from_json(data)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad problem description: {exc}") from exc


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_DEFAULT_OUT = {
    "gen-matrix": "gen_matrix.json",
    "weyl-sweep": "weyl_sweep.csv",
    "verify": None,
    "transform": "transform.json",
    "asym-probe": "asym_probe.csv",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quasiweyl",
        description="Regularization matrices and Weyl matrices for higher-order "
        "differential expressions with distributional coefficients.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("gen-matrix", "emit symbolic Q and F matrices as JSON"),
        ("weyl-sweep", "sweep the Weyl matrix over a spectral grid (CSV)"),
        ("verify", "run the randomized exact regularization-identity suite"),
        ("transform", "apply an order-shifting correspondence"),
        ("asym-probe", "measure mode-ratio convergence along a ray (CSV)"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="output path")
        p.add_argument("--steps", type=int, help="integration steps override")
        p.add_argument("--truncation-X", type=float, dest="truncation_x",
                       help="half-line truncation override")
        p.add_argument("--jobs", type=int, help="parallel workers for grid sweeps")
        p.add_argument("--seed", type=int, help="seed override (verify)")
        if name == "transform":
            p.add_argument("--check", action="store_true",
                           help="verify Weyl-matrix invariance of the transform")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args.config, args.command)
        default = _DEFAULT_OUT[args.command]
        out = Path(args.out) if args.out else (Path(default) if default else None)
        if args.command == "gen-matrix":
            return cmd_gen_matrix(config, out)
        if args.command == "weyl-sweep":
            return cmd_weyl_sweep(config, out, args.steps, args.truncation_x, args.jobs)
        if args.command == "verify":
            return cmd_verify(config, out, args.seed)
        if args.command == "transform":
            return cmd_transform(config, out, args.check, args.steps)
        if args.command == "asym-probe":
            return cmd_asym_probe(config, out, args.steps, args.truncation_x)
        raise ConfigError(f"unknown command {args.command}")  # pragma: no cover
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (model.OrderOutOfRange, model.LengthMismatch, model.NotAPermutation,
            model.NotUnitLowerTriangular) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (spectral.IntegrationOverflow, spectral.SingularAtLambda) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
