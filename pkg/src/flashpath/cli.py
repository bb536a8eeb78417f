"""Command-line entry point: ``flashpath {fit,path,cv,simulate,recovery}``.

Exit codes: 0 success, 1 input/output error, 2 invalid input or usage,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import glm as G
from . import linear as L
from . import simulate as SIM
from . import theory as T
from . import tuning as TU
from .data import load_csv, standardize
from .exceptions import ConvergenceError, DataError, SingularGramError, StepBudgetError

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

PATH_METHODS = ("flash-global", "flash-block", "lasso", "relaxo", "forward",
                "glm-flash", "glm-lasso", "glm-forward", "glm-flash-block")
TUNE_METHODS = {
    "flash-global": "FLASH_G", "flash-block": "FLASH_B", "lasso": "Lasso",
    "relaxo": "Relaxo", "forward": "Forward", "glm-lasso": "GLasso",
    "glm-relaxo": "GRelaxo", "glm-forward": "GForward", "glm-flash-block": "GLM-FLASH_B",
}


class UsageError(Exception):
    pass


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flashpath", description="FLASH regularization paths")
    sub = ap.add_subparsers(dest="command", required=True)

    def data_args(p, method_choices):
        p.add_argument("--input", required=True, help="CSV file with a header row")
        p.add_argument("--response", required=True, help="name of the response column")
        p.add_argument("--method", required=True,
                       help=f"one of {', '.join(method_choices)} (a ':value' suffix sets "
                            "delta or l* for the flash methods)")
        p.add_argument("--family", default="bernoulli", choices=("bernoulli", "gaussian"),
                       help="response family for glm-* methods")
        p.add_argument("--output", help="output file (default: standard output)")

    def tune_args(p):
        p.add_argument("--delta-grid", type=_floats, default=TU.DELTA_GRID)
        p.add_argument("--phi-grid", type=_floats, default=TU.PHI_GRID)
        p.add_argument("--lstar", type=int, help="largest break point for block methods")
        p.add_argument("--folds", type=int, default=10)
        p.add_argument("--valid", help="validation CSV; replaces k-fold cross-validation")
        p.add_argument("--seed", type=int, default=0, help="fold assignment seed")

    p = sub.add_parser("path", help="fit one path and write it as JSON or CSV")
    data_args(p, PATH_METHODS)
    p.add_argument("--delta", type=float, help="global shrinkage for flash-global / glm-flash")
    p.add_argument("--lstar", type=int, help="break point for flash-block / glm-flash-block")
    p.add_argument("--format", choices=("json", "csv"), default="json")

    for name, text in (("fit", "tune a method and write the selected coefficients"),
                       ("cv", "tune a method and write the full candidate table")):
        p = sub.add_parser(name, help=text)
        data_args(p, tuple(TUNE_METHODS))
        tune_args(p)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        if name == "cv":
            p.add_argument("--curve", help="per-step error CSV (default: <output>.curve.csv)")

    p = sub.add_parser("simulate", help="run a benchmark scenario")
    p.add_argument("--scenario", required=True,
                   help="scenario file, or the name of a bundled one (table1_row1, table2_row1)")
    p.add_argument("--method", help="comma-separated methods (default: the scenario's)")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--output")
    p.add_argument("--format", choices=("csv",), default="csv")

    p = sub.add_parser("recovery", help="signed-support recovery experiment")
    p.add_argument("--S", type=int, default=5)
    p.add_argument("--p", type=int, default=20)
    p.add_argument("--rho", type=float, help="pairwise correlation (default: 1.05 * mu_L)")
    p.add_argument("--q1", type=float, default=0.6, help="fraction of large coefficients")
    p.add_argument("--separation", type=float, help="large/small ratio (default 10*sqrt(S))")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--noise-sd", type=float, default=0.05)
    p.add_argument("--method", default="Lasso,FLASH_B")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.add_argument("--format", choices=("csv",), default="csv")
    return ap


def _write(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _split_method(text: str, choices) -> tuple[str, str | None]:
    name, _, value = text.partition(":")
    if name not in choices:
        raise UsageError(f"unknown method {text!r}; choose from {', '.join(choices)}")
    return name, (value or None)


def _num(text, kind, what):
    try:
        return kind(text)
    except (TypeError, ValueError):
        raise UsageError(f"bad {what} value {text!r}") from None


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_path(args) -> int:
    name, suffix = _split_method(args.method, PATH_METHODS)
    d = load_csv(args.input, args.response)
    if name.startswith("glm-"):
        gd = G.GlmData.from_dataset(d, args.family)
        if name == "glm-flash-block":
            lstar = _num(suffix if suffix is not None else args.lstar, int, "--lstar")
            path = G.fit_glm_block_flash(gd, lstar)
        else:
            delta = {"glm-lasso": 0.0, "glm-forward": 1.0}.get(name)
            if delta is None:
                delta = _num(suffix if suffix is not None else (args.delta or 0.0), float, "--delta")
            path = G.fit_glm_flash_path(gd, delta)
        if args.format == "json":
            out = path.to_dict()
            out["columns"] = list(d.column_names)
            return _write(_dumps(out), args.output) or EXIT_OK
        rows = [(i, pt.max_lam, path.coefficients_at(i)) for i, pt in enumerate(path.points)]
        return _write(_trace_csv(rows, d.column_names, "point", "max_lam"), args.output) or EXIT_OK

    if name == "flash-global":
        sched = L.DeltaSchedule.global_(_num(suffix if suffix is not None else args.delta,
                                             float, "--delta"))
    elif name == "flash-block":
        sched = L.DeltaSchedule.block(_num(suffix if suffix is not None else args.lstar,
                                           int, "--lstar"))
    else:
        sched = L.DeltaSchedule.global_(1.0 if name == "forward" else 0.0)
    path = L.fit_flash_path(standardize(d), sched)
    if args.format == "json":
        out = path.to_dict()
        out["columns"] = list(d.column_names)
        _write(_dumps(out), args.output)
    else:
        rows = [(b.step, b.max_abs_corr, path.coefficients_at(b.step)) for b in path.breakpoints]
        _write(_trace_csv(rows, d.column_names, "step", "max_abs_corr"), args.output)
    return EXIT_OK


def _trace_csv(rows, names, index_name, level_name) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([index_name, level_name, "intercept", *names])
    for idx, level, coef in rows:
        w.writerow([idx, _fmt(level), _fmt(coef.intercept), *(_fmt(b) for b in coef.beta)])
    return buf.getvalue()


def _tune(args):
    name, suffix = _split_method(args.method, TUNE_METHODS)
    lstar = _num(suffix, int, "--lstar") if suffix is not None else args.lstar
    key = TUNE_METHODS[name]
    method = {
        "FLASH_G": lambda: TU.GlobalFlash(args.delta_grid, args.phi_grid),
        "FLASH_B": lambda: TU.BlockFlash(lstar, args.phi_grid),
        "Relaxo": lambda: TU.Relaxo(args.phi_grid),
        "GRelaxo": lambda: TU.GRelaxo(args.phi_grid),
        "GLM-FLASH_B": lambda: TU.GlmBlockFlash(lstar),
    }.get(key, lambda: TU.method_by_name(key))()
    d = load_csv(args.input, args.response)
    if args.valid:
        v = load_csv(args.valid, args.response)
        if v.column_names != d.column_names:
            raise DataError("validation file columns differ from the training file")
        res = TU.validation_select(d, v, method, family=args.family)
    else:
        res = TU.kfold_cv_select(d, args.folds, method, args.seed, family=args.family)
    return d, res


def _coef_dict(d, res) -> dict:
    c = res.best.coef
    return {
        "method": res.method,
        "intercept": c.intercept,
        "coefficients": {n: b for n, b in zip(d.column_names, c.beta.tolist())},
        "support": [d.column_names[j] for j in c.support],
    }


def cmd_fit(args) -> int:
    d, res = _tune(args)
    if args.format == "json":
        out = _coef_dict(d, res)
        out["selected"] = res.to_dict()["best"]
        _write(_dumps(out), args.output)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["term", "estimate"])
        w.writerow(["intercept", _fmt(res.best.coef.intercept)])
        for n, b in zip(d.column_names, res.best.coef.beta):
            w.writerow([n, _fmt(b)])
        _write(buf.getvalue(), args.output)
    return EXIT_OK


def _curve_csv(res) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value", "step", "phi", "score", "rmse", "nonzeros"])
    for c in res.table:
        k, v = c.key
        w.writerow([k, _fmt(v), c.step, _fmt(c.phi), _fmt(c.score),
                    _fmt(np.sqrt(c.score)) if not res.method.startswith("G") else "",
                    c.nonzeros])
    return buf.getvalue()


def cmd_cv(args) -> int:
    d, res = _tune(args)
    if args.format == "json":
        out = res.to_dict()
        out["columns"] = list(d.column_names)
        _write(_dumps(out), args.output)
    else:
        _write(_curve_csv(res), args.output)
    curve = args.curve
    if curve is None and args.output is not None and args.format == "json":
        curve = str(Path(args.output).with_suffix("")) + ".curve.csv"
    if curve is not None:
        _write(_curve_csv(res), curve)
    return EXIT_OK


def cmd_simulate(args) -> int:
    path = Path(args.scenario)
    if not path.is_file():
        if path.suffix in ("", ".cfg") and path.parent == Path("."):
            path = SIM.bundled_scenario(path.name)
        else:
            raise FileNotFoundError(f"no such scenario file: {path}")
    scn = SIM.SimulationScenario.from_file(path)
    if args.seed is not None:
        scn = replace(scn, seed=args.seed)
    methods = None
    if args.method:
        methods = tuple(m.strip() for m in args.method.split(",") if m.strip())
        for m in methods:
            if m not in TU.METHODS:
                raise UsageError(f"unknown method {m!r}; choose from {', '.join(TU.METHODS)}")
    res = SIM.run_benchmark(scn, methods, args.reps, workers=max(1, args.threads))
    _write(res.to_csv(), args.output)
    return EXIT_OK


def cmd_recovery(args) -> int:
    rho = args.rho if args.rho is not None else 1.05 * T.mu_lasso_bound(args.S)
    design = T.build_claim1_design(args.S, args.p, rho, q1=args.q1, separation=args.separation)
    methods = tuple(m.strip() for m in args.method.split(",") if m.strip())
    rep = T.recovery_experiment(design, args.n, args.noise_sd, methods, args.reps, args.seed)
    _write(rep.to_csv(), args.output)
    return EXIT_OK


COMMANDS = {"path": cmd_path, "fit": cmd_fit, "cv": cmd_cv, "simulate": cmd_simulate,
            "recovery": cmd_recovery}


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"flashpath: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"flashpath: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DataError as exc:
        print(f"flashpath: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularGramError, ConvergenceError, StepBudgetError, np.linalg.LinAlgError,
            FloatingPointError) as exc:
        print(f"flashpath: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"flashpath: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
