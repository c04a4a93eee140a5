"""Command-line front end.

    dagpolicy solve --dag case1 --lambda 0.5
    dagpolicy sweep --dag case1 --param var_eps --from 0.01 --to 100 --steps 10 --log
    dagpolicy classify --dag re-equivalent --format text
    dagpolicy validate --dag true --samples 1000000 --seed 7
    dagpolicy benchmark --lambda 0.9

Exit codes: 0 success, 2 bad arguments, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from .analysis import DEFAULT_NOISE_GRID, invariance_test, sweep, validate
from .bayesnet import PRESETS, load_dag
from .economy import ModelParams, SignalSpec
from .equilibrium import Equilibrium, SolverConfig, closed_form_for, re_benchmark, solve

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3

SWEEP_HEADER = [
    "param",
    "value",
    "forecast_slope",
    "forecast_intercept",
    "policy_slope",
    "policy_intercept",
    "converged",
    "iterations",
    "residual",
]
_PARAM_ALIASES = {
    "lambda": "lam",
    "lam": "lam",
    "var_eps": "var_eps",
    "var-eps": "var_eps",
    "var_eta": "var_eta",
    "var-eta": "var_eta",
    "var_theta": "var_theta",
    "var-theta": "var_theta",
}


def fmt(x) -> str:
    """17 significant digits for floats so CSV values round-trip exactly."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _finite(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not np.isfinite(value):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return value


def _lambda(text: str) -> float:
    value = _finite(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {value}")
    return value


def _nonneg(text: str) -> float:
    value = _finite(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {value}")
    return value


def _positive(text: str) -> float:
    value = _finite(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _count(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _signal(text: str) -> SignalSpec:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected w_theta,w_a,var_nu")
    w_theta, w_a = _finite(parts[0]), _finite(parts[1])
    return SignalSpec(w_theta, w_a, _nonneg(parts[2]))


def _dag(text: str):
    try:
        return text, load_dag(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _param(text: str) -> str:
    if text not in _PARAM_ALIASES:
        raise argparse.ArgumentTypeError(f"unknown parameter {text!r}; choose lambda, var_eps, var_eta, var_theta")
    return _PARAM_ALIASES[text]


def _damping(text: str) -> float:
    value = _finite(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--lambda", dest="lam", type=_lambda, default=0.5)
    shared.add_argument("--var-eps", type=_nonneg, default=1.0)
    shared.add_argument("--var-eta", type=_nonneg, default=1.0)
    shared.add_argument("--var-theta", type=_positive, default=1.0)
    shared.add_argument("--signal", type=_signal, default=SignalSpec(), metavar="W_THETA,W_A,VAR_NU")
    shared.add_argument(
        "--dag",
        type=_dag,
        default=("true", PRESETS["true"]),
        metavar="NAME|@FILE",
        help=f"preset ({', '.join(PRESETS)}) or @path to a JSON DAG",
    )
    shared.add_argument("--tol", type=_positive, default=1e-12)
    shared.add_argument("--max-iter", type=_count, default=10_000)
    shared.add_argument("--damping", type=_damping, default=0.5)
    shared.add_argument("--seed", type=int, default=0)
    shared.add_argument("--out", default=None, metavar="PATH")
    shared.add_argument("--format", choices=("csv", "text"), default="csv")

    parser = argparse.ArgumentParser(prog="dagpolicy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[shared], help="solve one equilibrium")
    sw = sub.add_parser("sweep", parents=[shared], help="comparative statics over one parameter")
    sw.add_argument("--param", type=_param, required=True)
    sw.add_argument("--from", dest="start", type=_positive, required=True)
    sw.add_argument("--to", dest="stop", type=_positive, required=True)
    sw.add_argument("--steps", type=_count, default=10)
    sw.add_argument("--log", action="store_true", help="geometric grid")
    sub.add_parser("classify", parents=[shared], help="classify a DAG and test noise invariance")
    va = sub.add_parser("validate", parents=[shared], help="Monte Carlo check of the fitted model")
    va.add_argument("--samples", type=_count, default=1_000_000)
    sub.add_parser("benchmark", parents=[shared], help="rational-expectations closed form")
    return parser


def _emit(rows: list[list], header: list[str] | None, text: str, args) -> None:
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if header:
            writer.writerow(header)
        writer.writerows([[fmt(v) for v in row] for row in rows])
        out = buf.getvalue()
    else:
        out = text if text.endswith("\n") else text + "\n"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def _equilibrium_text(eq: Equilibrium) -> list[str]:
    return [
        f"forecast: e(t) = {eq.forecast.slope:.12g} * t + {eq.forecast.intercept:.6g}",
        f"policy:   a(theta) = {eq.policy.slope:.12g} * theta + {eq.policy.intercept:.6g}",
        f"converged: {eq.converged}  iterations: {eq.iterations}  residual: {eq.residual:.3e}",
    ]


def _cmd_solve(args, params, dag_name, dag, config) -> int:
    eq = solve(params, dag, config)
    ref = closed_form_for(dag_name, params)
    header = [
        "dag",
        "forecast_slope",
        "forecast_intercept",
        "policy_slope",
        "policy_intercept",
        "converged",
        "iterations",
        "residual",
        "closed_form_forecast_slope",
        "closed_form_policy_slope",
        "closed_form_max_abs_diff",
    ]
    row = [dag_name, *eq.coefficients(), eq.converged, eq.iterations, eq.residual]
    lines = [f"dag: {dag_name}", *_equilibrium_text(eq)]
    if ref is None:
        row += ["", "", ""]
    else:
        diff = float(np.max(np.abs(np.subtract(eq.coefficients(), ref.coefficients()))))
        row += [ref.forecast.slope, ref.policy.slope, diff]
        lines.append(
            f"closed form ({ref.method}): forecast slope {ref.forecast.slope:.12g}, "
            f"policy slope {ref.policy.slope:.12g}, max |diff| {diff:.3e}"
        )
    _emit([row], header, "\n".join(lines), args)
    return EXIT_OK if eq.converged else EXIT_NOT_CONVERGED


def _cmd_benchmark(args, params, dag_name, dag, config) -> int:
    eq = re_benchmark(params)
    header = ["lambda", "forecast_slope", "forecast_intercept", "policy_slope", "policy_intercept"]
    row = [params.lam, *eq.coefficients()]
    _emit([row], header, "\n".join(["rational-expectations benchmark", *_equilibrium_text(eq)[:2]]), args)
    return EXIT_OK


def _cmd_sweep(args, params, dag_name, dag, config) -> int:
    if args.stop <= args.start and args.steps > 1:
        raise ValueError("--to: must exceed --from")
    if args.param == "lam" and args.stop > 1.0:
        raise ValueError("--to: must not exceed 1 when sweeping lambda")
    make = np.geomspace if args.log else np.linspace
    grid = make(args.start, args.stop, args.steps)
    result = sweep(params, dag, args.param, grid, config)
    label = "lambda" if result.param == "lam" else result.param
    rows = [
        [label, r.value, r.forecast_slope, r.forecast_intercept, r.policy_slope, r.policy_intercept,
         r.converged, r.iterations, r.residual]
        for r in result.records
    ]
    text = "\n".join(
        f"{label}={r.value:.6g}  forecast slope {r.forecast_slope:.10g}  policy slope {r.policy_slope:.10g}"
        + ("" if r.converged else "  (not converged)")
        for r in result.records
    )
    _emit(rows, SWEEP_HEADER, text, args)
    return EXIT_OK if all(r.converged for r in result.records) else EXIT_NOT_CONVERGED


def _cmd_classify(args, params, dag_name, dag, config) -> int:
    rep = invariance_test(params, dag, DEFAULT_NOISE_GRID, config=config, dag_id=dag_name)
    invariance = "" if rep.numeric_invariance is None else rep.numeric_invariance
    header = [
        "dag", "reverse_causality", "structural_class", "numeric_invariance", "verdict",
        "var_eps", "var_eta", "forecast_slope", "policy_slope", "converged",
    ]
    rows = [
        [rep.dag_id, rep.reverse_causality, rep.structural_class.value, invariance, rep.verdict,
         p.var_eps, p.var_eta, p.forecast_slope, p.policy_slope, p.converged]
        for p in rep.evidence
    ]
    candidate = " (candidate)" if rep.structural_class.value == "noise_sensitive" else ""
    text = "\n".join(
        [
            f"dag: {rep.dag_id}",
            f"reverse causality: {rep.reverse_causality}",
            f"structural class: {rep.structural_class.value}{candidate}",
            f"numeric invariance: {invariance}",
            f"verdict: {rep.verdict}",
        ]
    )
    _emit(rows, header, text, args)
    return EXIT_NOT_CONVERGED if rep.numeric_invariance is None else EXIT_OK


def _cmd_validate(args, params, dag_name, dag, config) -> int:
    eq = solve(params, dag, config)
    if not eq.converged:
        print(f"error: equilibrium did not converge (residual {eq.residual:.3e})", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    rep = validate(params, dag, eq, args.samples, args.seed)
    header = ["equation", "term", "analytic", "sample", "se", "deviation_se", "flag", "passed"]
    rows = [[c.equation, c.term, c.analytic, c.sample, c.se, c.deviation_se, c.flag, c.passed] for c in rep.checks]
    rows.append(["forecast", "max_abs_dev", 0.0, rep.forecast_max_abs_dev, "", "", "", ""])
    lines = [f"dag: {dag_name}  samples: {rep.n}  seed: {rep.seed}"]
    lines += [
        f"{c.equation:<12} {c.term:<10} analytic {c.analytic: .8f}  sample {c.sample: .8f}  "
        f"dev {c.deviation_se: .3f} SE {c.flag}"
        for c in rep.checks
    ]
    lines.append(f"max |e(t) - sample-fitted E_G(pi|t)|: {rep.forecast_max_abs_dev:.3e}")
    lines += rep.notes
    _emit(rows, header, "\n".join(lines), args)
    return EXIT_OK


COMMANDS = {
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "classify": _cmd_classify,
    "validate": _cmd_validate,
    "benchmark": _cmd_benchmark,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    dag_name, dag = args.dag
    prefix = f"{parser.prog} {args.command}: error: "
    if dag.signal_node == "a" and not args.signal.is_identity:
        print(prefix + f"--signal: DAG {dag_name!r} omits 't' and needs the identity signal 0,1,0", file=sys.stderr)
        return EXIT_USAGE
    params = ModelParams(args.lam, args.var_eps, args.var_eta, args.var_theta, args.signal)
    config = SolverConfig(args.tol, args.max_iter, args.damping)
    try:
        return COMMANDS[args.command](args, params, dag_name, dag, config)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(prefix + str(exc), file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
