"""Command-line front end: fit, cv, simulate, bench, kkt-check, improvement.

Exit codes: 0 success, 1 usage/validation error, 2 data error, 3 solver did
not converge (artifacts are still written).  Every run writes a manifest of
``key = value`` lines listing all effective parameters including defaults, so
a run can be reproduced exactly from its manifest.  Floats are serialized with
17 significant digits and round-trip to the same double.
"""

import argparse
import csv
import dataclasses
import math
import os
import sys

import numpy as np

from .admm import AdmmConfig, solve_admm
from .cd import CdConfig, solve_cd
from .irw import fit_irw, relative_improvement
from .kernels import KERNELS, SmoothSpec
from .model_selection import cross_validate, default_bandwidth
from .objective import Dataset, kkt_residual
from .penalties import FAMILIES, PenaltySpec, reweight
from .simulation import NOISE_FAMILIES, METRIC_NAMES, Scenario, generate, run_benchmark


class DataError(Exception):
    """Malformed input file: missing target, bad cells, or empty data."""


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def read_dataset(path, target="y"):
    """Load a CSV with a header row; returns (Dataset, feature names).

    The target column is selected by name, the remaining columns become
    features, and an intercept column of ones is prepended.
    """
    if not os.path.exists(path):
        raise DataError(f"data file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [row for row in rows if row]
    if not rows:
        raise DataError(f"empty data file: {path}")
    header = [name.strip() for name in rows[0]]
    if target not in header:
        raise DataError(
            f"target column {target!r} not found; available columns: {header}"
        )
    t_col = header.index(target)
    feature_names = [name for k, name in enumerate(header) if k != t_col]
    n = len(rows) - 1
    if n == 0:
        raise DataError(f"no data rows in {path}")
    y = np.empty(n)
    x = np.empty((n, len(header) - 1))
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise DataError(f"row {i + 2} has {len(row)} cells, expected {len(header)}")
        k = 0
        for j, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                value = math.nan
            if not math.isfinite(value):
                raise DataError(
                    f"non-numeric cell at row {i + 2}, column {header[j]!r}: {cell!r}"
                )
            if j == t_col:
                y[i] = value
            else:
                x[i, k] = value
                k += 1
    try:
        data = Dataset(np.column_stack([np.ones(n), x]), y)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    return data, feature_names


def write_dataset(path, data, feature_names=None):
    n, p = data.x.shape
    if feature_names is None:
        feature_names = [f"x{j}" for j in range(1, p)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"] + list(feature_names))
        for i in range(n):
            writer.writerow([_fmt(float(data.y[i]))]
                            + [_fmt(float(v)) for v in data.x[i, 1:]])


def write_coefficients(path, names, beta):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "value"])
        for name, value in zip(names, beta):
            writer.writerow([name, _fmt(float(value))])


def read_coefficients(path):
    if not os.path.exists(path):
        raise DataError(f"coefficient file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["name", "value"]:
        raise DataError(f"expected a 'name,value' coefficient file at {path}")
    names, values = [], []
    for row in rows[1:]:
        names.append(row[0])
        values.append(float(row[1]))
    return names, np.asarray(values)


def write_manifest(path, command, params):
    lines = [f"command = {command}"]
    for key in sorted(params):
        lines.append(f"{key} = {_fmt(params[key])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit2(message)


class SystemExit2(Exception):
    """Usage error carrying the parser message."""


def _resolve_bandwidth(raw, n, p, tau):
    if raw == "auto":
        return default_bandwidth(n, p, tau)
    h = float(raw)
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    return h


def _resolve_solver(raw, kernel):
    if raw == "auto":
        return "cd" if kernel == "uniform" else "admm"
    if raw == "cd" and kernel != "uniform":
        raise ValueError("solver 'cd' supports only the uniform kernel")
    return raw


def _solver_cfg(solver, args):
    if solver == "cd":
        return CdConfig(epsilon=args.epsilon, max_iter=args.max_iter)
    return AdmmConfig(epsilon=args.epsilon, max_iter=args.max_iter, rho=args.rho)


def _add_model_args(sub, with_lambda=True):
    sub.add_argument("--data", required=True, help="CSV file with a header row")
    sub.add_argument("--target", default="y", help="response column name")
    sub.add_argument("--tau", type=float, default=0.5, help="quantile level")
    sub.add_argument("--kernel", default="gaussian", choices=KERNELS)
    sub.add_argument("--bandwidth", default="auto",
                     help="'auto' for the default rule, or a positive number")
    sub.add_argument("--penalty", default="scad", choices=FAMILIES)
    if with_lambda:
        sub.add_argument("--lambda", dest="lam", type=float, required=True)
    sub.add_argument("--a", type=float, default=None,
                     help="concavity parameter (family default when omitted)")
    sub.add_argument("--stages", type=int, default=3)
    sub.add_argument("--solver", default="auto", choices=("auto", "cd", "admm"))
    sub.add_argument("--epsilon", type=float, default=1e-6)
    sub.add_argument("--max-iter", type=int, default=5000)
    sub.add_argument("--rho", type=float, default=1.0, help="ADMM penalty parameter")


def _out_dir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _effective_params(args, skip=("out",)):
    params = {}
    for key, value in vars(args).items():
        if key in ("func", "command") or key in skip:
            continue
        if value is None:
            value = "none"
        params[key] = value
    return params


def cmd_fit(args):
    data, features = read_dataset(args.data, args.target)
    h = _resolve_bandwidth(args.bandwidth, data.n, data.p, args.tau)
    spec = SmoothSpec(args.tau, h, args.kernel)
    solver = _resolve_solver(args.solver, args.kernel)
    penalty = PenaltySpec(args.penalty, args.lam, args.a)
    result = fit_irw(data, spec, penalty, args.stages, solver, _solver_cfg(solver, args))
    out = _out_dir(args)
    final = result.stages[-1]
    names = ["intercept"] + features
    write_coefficients(os.path.join(out, "coefficients.csv"), names, final.beta)
    write_coefficients(os.path.join(out, "weights.csv"), names,
                       result.weights_per_stage[len(result.stages) - 1])
    summary = {
        "objective": final.objective,
        "kkt_inf": final.kkt_inf,
        "n_iter": final.n_iter,
        "converged": final.converged,
        "stages_run": len(result.stages),
        "active_set_size": int(np.count_nonzero(final.beta[1:])),
        "bandwidth": h,
    }
    write_manifest(os.path.join(out, "summary.txt"), "fit-summary", summary)
    params = _effective_params(args)
    params["bandwidth_effective"] = h
    params["solver_effective"] = solver
    write_manifest(os.path.join(out, "manifest.txt"), "fit", params)
    if not final.converged:
        print("warning: solver did not converge within max-iter", file=sys.stderr)
        return 3
    return 0


def cmd_cv(args):
    data, features = read_dataset(args.data, args.target)
    h = _resolve_bandwidth(args.bandwidth, data.n, data.p, args.tau)
    spec = SmoothSpec(args.tau, h, args.kernel)
    solver = _resolve_solver(args.solver, args.kernel)
    result = cross_validate(
        data, spec, family=args.penalty, a=args.a, n_stages=args.stages,
        folds=args.folds, grid_size=args.grid_size, min_ratio=args.min_ratio,
        seed=args.seed, solver=solver, solver_cfg=_solver_cfg(solver, args),
        threads=args.threads,
    )
    out = _out_dir(args)
    with open(os.path.join(out, "cv_errors.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda"]
                        + [f"fold{k + 1}" for k in range(args.folds)] + ["mean"])
        for k, lam in enumerate(result.grid):
            writer.writerow([_fmt(float(lam))]
                            + [_fmt(float(v)) for v in result.fold_errors[:, k]]
                            + [_fmt(float(result.mean_error[k]))])
    names = ["intercept"] + features
    write_coefficients(os.path.join(out, "coefficients.csv"),
                       names, result.selected_fit.beta)
    params = _effective_params(args)
    params["bandwidth_effective"] = h
    params["solver_effective"] = solver
    params["selected_lambda"] = result.selected_lambda
    write_manifest(os.path.join(out, "manifest.txt"), "cv", params)
    if not result.selected_fit.converged:
        print("warning: selected fit did not converge", file=sys.stderr)
        return 3
    return 0


def cmd_simulate(args):
    scenario = Scenario(n=args.n, p=args.p, noise=args.scenario,
                        tau=args.tau, seed=args.seed)
    data, beta_full = generate(scenario)
    write_dataset(args.out, data)
    truth_path = args.out + ".truth.csv"
    names = ["intercept"] + [f"x{j}" for j in range(1, data.p)]
    write_coefficients(truth_path, names, beta_full)
    write_manifest(args.out + ".manifest.txt", "simulate", _effective_params(args))
    return 0


def cmd_bench(args):
    scenario = Scenario(n=args.n, p=args.p, noise=args.scenario,
                        tau=args.tau, seed=0)
    methods = [m for m in args.methods.split(",") if m]
    improvement_stages = args.improvement_stages or None
    result = run_benchmark(
        scenario, methods, reps=args.reps, master_seed=args.seed,
        cv_folds=args.folds, cv_grid_size=args.grid_size,
        cv_min_ratio=args.min_ratio, n_stages=args.stages,
        improvement_stages=improvement_stages, threads=args.threads,
    )
    out = _out_dir(args)
    with open(os.path.join(out, "results.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["method"]
        for name in METRIC_NAMES:
            header += [f"{name}_mean", f"{name}_se"]
        writer.writerow(header)
        for token in result.methods:
            row = [token]
            for name in METRIC_NAMES:
                mean, se = result.table[token][name]
                row += [_fmt(mean), _fmt(se)]
            writer.writerow(row)
    if result.improvement is not None:
        with open(os.path.join(out, "improvement.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["stage", "mean_relative_improvement"])
            for k, value in enumerate(result.improvement):
                writer.writerow([k + 2, _fmt(float(value))])
    params = _effective_params(args)
    params["reps_failed"] = result.reps_failed
    write_manifest(os.path.join(out, "manifest.txt"), "bench", params)
    return 0


def cmd_kkt_check(args):
    data, _features = read_dataset(args.data, args.target)
    _names, beta = read_coefficients(args.coef)
    if beta.size != data.p:
        raise DataError(
            f"coefficient file has {beta.size} entries, dataset has {data.p} columns"
        )
    h = _resolve_bandwidth(args.bandwidth, data.n, data.p, args.tau)
    spec = SmoothSpec(args.tau, h, args.kernel)
    if args.weights:
        _wnames, weights = read_coefficients(args.weights)
        if weights.size != data.p:
            raise DataError(
                f"weights file has {weights.size} entries, dataset has {data.p} columns"
            )
    else:
        if args.lam is None:
            raise ValueError("provide either --weights or --lambda")
        # no stage weights supplied: audit the reweighted fixed point at beta
        penalty = PenaltySpec(args.penalty, args.lam, args.a)
        weights = reweight(penalty, beta)
    print(_fmt(kkt_residual(data, spec, weights, beta)))
    return 0


def cmd_improvement(args):
    data, _features = read_dataset(args.data, args.target)
    _names, beta_star = read_coefficients(args.truth)
    if beta_star.size != data.p:
        raise DataError(
            f"truth file has {beta_star.size} entries, dataset has {data.p} columns"
        )
    h = _resolve_bandwidth(args.bandwidth, data.n, data.p, args.tau)
    spec = SmoothSpec(args.tau, h, args.kernel)
    solver = _resolve_solver(args.solver, args.kernel)
    penalty = PenaltySpec(args.penalty, args.lam, args.a)
    result = fit_irw(data, spec, penalty, args.stages, solver,
                     _solver_cfg(solver, args))
    out = _out_dir(args)
    values = np.zeros(args.stages - 1)
    if len(result.stages) >= 2:
        seq = relative_improvement(result, beta_star)
        if not seq.zero_denominator:
            values[: seq.values.size] = seq.values
    with open(os.path.join(out, "improvement.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "relative_improvement"])
        for k, value in enumerate(values):
            writer.writerow([k + 2, _fmt(float(value))])
    params = _effective_params(args)
    params["bandwidth_effective"] = h
    params["solver_effective"] = solver
    write_manifest(os.path.join(out, "manifest.txt"), "improvement", params)
    return 0


def build_parser():
    parser = _Parser(prog="smoothqr",
                     description="Penalized smoothed quantile regression")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a penalized smoothed QR model")
    _add_model_args(p_fit)
    p_fit.add_argument("--out", default="smoothqr-fit")
    p_fit.set_defaults(func=cmd_fit)

    p_cv = sub.add_parser("cv", help="cross-validate the penalty level")
    _add_model_args(p_cv, with_lambda=False)
    p_cv.add_argument("--folds", type=int, default=5)
    p_cv.add_argument("--grid-size", type=int, default=50)
    p_cv.add_argument("--min-ratio", type=float, default=0.01)
    p_cv.add_argument("--seed", type=int, default=0)
    p_cv.add_argument("--threads", type=int, default=1)
    p_cv.add_argument("--out", default="smoothqr-cv")
    p_cv.set_defaults(func=cmd_cv)

    p_sim = sub.add_parser("simulate", help="write a synthetic dataset")
    p_sim.add_argument("--scenario", default="gaussian", choices=NOISE_FAMILIES)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--p", type=int, required=True)
    p_sim.add_argument("--tau", type=float, default=0.5)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", default="scenario.csv")
    p_sim.set_defaults(func=cmd_simulate)

    p_bench = sub.add_parser("bench", help="run a replicated benchmark")
    p_bench.add_argument("--scenario", default="gaussian", choices=NOISE_FAMILIES)
    p_bench.add_argument("--n", type=int, required=True)
    p_bench.add_argument("--p", type=int, required=True)
    p_bench.add_argument("--tau", type=float, default=0.5)
    p_bench.add_argument("--reps", type=int, default=20)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument(
        "--methods",
        default="ls-lasso,sqr-lasso-uniform,sqr-scad-uniform,oracle",
        help="comma-separated method tokens",
    )
    p_bench.add_argument("--folds", type=int, default=5)
    p_bench.add_argument("--grid-size", type=int, default=30)
    p_bench.add_argument("--min-ratio", type=float, default=0.02)
    p_bench.add_argument("--stages", type=int, default=3)
    p_bench.add_argument("--improvement-stages", type=int, default=0)
    p_bench.add_argument("--threads", type=int, default=1)
    p_bench.add_argument("--out", default="smoothqr-bench")
    p_bench.set_defaults(func=cmd_bench)

    p_kkt = sub.add_parser("kkt-check", help="audit stationarity of a saved fit")
    p_kkt.add_argument("--data", required=True)
    p_kkt.add_argument("--target", default="y")
    p_kkt.add_argument("--coef", required=True, help="coefficients.csv from fit")
    p_kkt.add_argument("--tau", type=float, default=0.5)
    p_kkt.add_argument("--kernel", default="gaussian", choices=KERNELS)
    p_kkt.add_argument("--bandwidth", default="auto")
    p_kkt.add_argument("--penalty", default="scad", choices=FAMILIES)
    p_kkt.add_argument("--lambda", dest="lam", type=float, default=None)
    p_kkt.add_argument("--a", type=float, default=None)
    p_kkt.add_argument("--weights", default=None,
                       help="name,value CSV of the stage weights (exact audit)")
    p_kkt.set_defaults(func=cmd_kkt_check)

    p_imp = sub.add_parser("improvement",
                           help="per-stage relative improvement against a truth")
    _add_model_args(p_imp)
    p_imp.add_argument("--truth", required=True,
                       help="name,value CSV of true coefficients")
    p_imp.add_argument("--out", default="smoothqr-improvement")
    p_imp.set_defaults(func=cmd_improvement)
    return parser


def parse_and_dispatch(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit2 as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
