"""Command-line front end.

Three subcommands:

* ``run``             - execute a convergence study and emit the table;
* ``check-stability`` - print a model's structural stability certificate;
* ``verify-theory``   - evaluate the multiplier identities and the
                        truncation-order fit for a scheme order.

Exit codes: 0 on success, 2 when a requested assertion fails (a certificate
condition, an identity residual, a truncation slope or a study cell), 1 on
usage or runtime errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from .harness import ExperimentConfig, emit_table, run_convergence_study
from .integrator import UnsupportedOrderError, bdf_coefficients
from .models import build_model, initial_data
from .oracle import exact_evolve
from .system import check_structural_stability
from .theory import (
    fit_order,
    multiplier_data,
    truncation_residual,
    verify_multiplier_identity,
)

USAGE_ERROR, ASSERTION_FAILED = 1, 2


def _number(token: str) -> float:
    return float(Fraction(token))


def _number_list(text: str) -> tuple[float, ...]:
    return tuple(_number(tok) for tok in text.split(",") if tok)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaxbdf",
        description="IMEX-BDF / Fourier solvers for stiff linear relaxation systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a convergence study")
    run_p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    run_p.add_argument("--model", choices=["arz", "broadwell", "grad"])
    run_p.add_argument("--order", type=int, help="scheme order q (1..4)")
    run_p.add_argument("--eps", help="comma-separated relaxation times (fractions ok)")
    run_p.add_argument("--dt", help="comma-separated decreasing steps (fractions ok)")
    run_p.add_argument("--modes", type=int, help="Fourier cutoff N (default 100)")
    run_p.add_argument("--t0", help="start time (default 0)")
    run_p.add_argument("--tfinal", help="final time")
    run_p.add_argument("--startup", help="'exact' or 'ars:DIVISOR' (default ars:500)")
    run_p.add_argument("--ref", help="'exact' or 'fine:DTREF' (default exact)")
    run_p.add_argument("--format", choices=["csv", "md"], dest="fmt")
    run_p.add_argument("--out", help="output path (stdout when omitted)")
    run_p.add_argument("--seed", type=int)

    cert_p = sub.add_parser("check-stability", help="print a stability certificate")
    cert_p.add_argument("--model", required=True, choices=["arz", "broadwell", "grad"])
    cert_p.add_argument("--tol", type=float, default=1e-10)

    theory_p = sub.add_parser("verify-theory", help="multiplier and truncation checks")
    theory_p.add_argument("--q", type=int, required=True, help="scheme order (1..4)")
    theory_p.add_argument("--samples", type=int, default=1000)
    theory_p.add_argument("--seed", type=int, default=0)
    theory_p.add_argument("--tol", type=float, default=1e-11)
    return parser


def _config_from_args(args) -> ExperimentConfig:
    cli_fields = {
        "model": args.model,
        "order": args.order,
        "epsilons": _number_list(args.eps) if args.eps else None,
        "dts": _number_list(args.dt) if args.dt else None,
        "modes": args.modes,
        "t_start": _number(args.t0) if args.t0 else None,
        "t_final": _number(args.tfinal) if args.tfinal else None,
        "startup": args.startup,
        "reference": args.ref,
        "fmt": args.fmt,
        "output": args.out,
        "seed": args.seed,
    }
    if args.config:
        with open(args.config, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
        return ExperimentConfig.from_json(doc, **cli_fields)
    missing = [key for key in ("model", "order", "epsilons", "dts", "t_final") if cli_fields[key] is None]
    if missing:
        raise ValueError(f"missing required options: {missing} (or use --config)")
    return ExperimentConfig.from_json({}, **cli_fields)


def _cmd_run(args) -> int:
    config = _config_from_args(args)
    table = run_convergence_study(config)
    text = emit_table(table, config.fmt)
    if config.output:
        with open(config.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    failed = any(row.l2_error is None for row in table.rows)
    return ASSERTION_FAILED if failed else 0


def _cmd_check_stability(args) -> int:
    model = build_model(args.model)
    report = check_structural_stability(model.system, model.witness, tol=args.tol)
    print(f"model: {args.model} (normal form, witness transform = identity)")
    print(report.summary())
    if model.raw_witness is not None:
        raw_report = check_structural_stability(
            (model.raw_convection, model.raw_source), model.raw_witness, tol=args.tol
        )
        print("raw-variable witness:")
        print(raw_report.summary())
        return 0 if (report.passed and raw_report.passed) else ASSERTION_FAILED
    return 0 if report.passed else ASSERTION_FAILED


def _cmd_verify_theory(args) -> int:
    ok = True
    rng = np.random.default_rng(args.seed)
    try:
        data = multiplier_data(args.q)
        residual = verify_multiplier_identity(
            data, bdf_coefficients(args.q), samples=args.samples, rng=rng
        )
        passed = residual <= args.tol
        ok &= passed
        print(f"multiplier identities (q={args.q}): max residual {residual:.3e} "
              f"[{'PASS' if passed else 'FAIL'} at {args.tol:.1e}]")
    except UnsupportedOrderError:
        print(f"multiplier identities (q={args.q}): coefficients not transcribed, skipped")

    model = build_model("arz")
    system = model.system_at(1.0)
    u0 = initial_data(model, max(args.q, 2), 8, 1.0)
    coeffs = bdf_coefficients(args.q)
    dts = [1e-2, 5e-3, 2.5e-3]
    residuals = [
        truncation_residual(system, lambda t: exact_evolve(u0, system, t), coeffs, dt)
        for dt in dts
    ]
    slope = fit_order(dts, residuals)
    slope_ok = abs(slope - (args.q + 1)) <= 0.2
    ok &= slope_ok
    print(f"truncation residual slope (q={args.q}): {slope:.3f} "
          f"(target {args.q + 1} +/- 0.2) [{'PASS' if slope_ok else 'FAIL'}]")
    return 0 if ok else ASSERTION_FAILED


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "check-stability":
            return _cmd_check_stability(args)
        if args.command == "verify-theory":
            return _cmd_verify_theory(args)
        raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
