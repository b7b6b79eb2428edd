"""Command-line interface: ``piq {fit,tune,simulate,bench,verify}``.

Exit codes: 0 success (including fits that stop with ``converged=false``),
2 usage or configuration error, 3 data error, 4 numerical failure.
"""

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import ConfigError, DataError, NumericalError, PiqError, UnsupportedError
from .linalg import read_csv
from .losses import parse_loss
from .simulate import SimSpec, default_config, run_replications
from .solvers import COOLING_ALIASES, SOLVERS, FitConfig, fit_piq

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _manifest(command, args, input_digest=None, record_time=False):
    snap = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "record_time")}
    man = {
        "command": command,
        "config": snap,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "input_digest": input_digest,
    }
    if record_time:
        man["wall_clock"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    return man


def _file_digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _csv_with_manifest(manifest, body):
    return "# manifest " + json.dumps(manifest, sort_keys=True) + "\n" + body


def _grid(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("grid is empty")
    return vals


def _add_fit_flags(p):
    p.add_argument("--data", required=True, help="CSV file; non-numeric first row is a header")
    p.add_argument("--response", required=True, help="response column (header name or 0-based index)")
    p.add_argument("--loss", default="quadratic", help="quadratic | logistic | huber[:delta] | hhinge[:delta]")
    p.add_argument("--solver", choices=SOLVERS, help="default: iq_bcd_regression for quadratic, else bcd_general")
    p.add_argument("--q-gamma", type=int, default=0, help="outlier budget (<= n/2)")
    p.add_argument("--q-beta", type=int, help="variable budget; omit for no beta sparsity")
    p.add_argument("--nu", type=float, default=1e-4, help="ridge weight on gamma")
    p.add_argument("--nu-beta", type=float, default=0.0, help="ridge weight on beta")
    p.add_argument("--lambda", dest="lam", type=float, help="penalty level for soft/hard beta thresholding")
    p.add_argument("--beta-rule", choices=("soft", "hard"), default="soft")
    p.add_argument("--cooling", choices=sorted(COOLING_ALIASES), help="default: quad for regression, log for classification")
    p.add_argument("--horizon", type=int, default=200)
    p.add_argument("--stepsize", choices=("fixed", "lipschitz", "backtracking"), default="lipschitz")
    p.add_argument("--rho", type=float, help="inverse stepsize for --stepsize fixed")
    p.add_argument("--beta-update", choices=("auto", "exact", "single", "iht"), default="auto")
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--standardize", action="store_true", help="scale columns to unit RMS before fitting")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--record-time", action="store_true", help="add wall-clock time to the manifest (breaks byte-identical reruns)")


def _load(args):
    loss = parse_loss(args.loss)
    data = read_csv(args.data, args.response)
    if args.standardize:
        data = data.standardized()
    return data, loss


def _config(args, loss, q_gamma=None):
    solver = args.solver or ("iq_bcd_regression" if loss.kind == "quadratic" and args.q_beta is None
                             and args.lam is None else "bcd_general")
    cooling = args.cooling or ("log" if loss.is_classification else "quad")
    return FitConfig(
        solver=solver, q_gamma=args.q_gamma if q_gamma is None else q_gamma, q_beta=args.q_beta,
        nu=args.nu, nu_beta=args.nu_beta, lam=args.lam, beta_rule=args.beta_rule,
        stepsize=args.stepsize, rho=args.rho, cooling=COOLING_ALIASES[cooling], horizon=args.horizon,
        beta_update=args.beta_update, max_iters=args.max_iters, seed=args.seed)


def cmd_fit(args):
    data, loss = _load(args)
    config = _config(args, loss)
    est = fit_piq(data, loss, config)
    rec = {"manifest": _manifest("fit", args, _file_digest(args.data), args.record_time),
           "estimate": est.to_record()}
    _emit(json.dumps(rec, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_tune(args):
    from .selection import tune_q

    data, loss = _load(args)
    base = _config(args, loss, q_gamma=0)
    best, scores = tune_q(data, loss, base, args.grid, args.criterion, A=args.A)
    lines = ["q,loss_term,penalty_term,total,converged"]
    for g in scores:
        s = g.score
        lines.append(f"{g.q},{s.loss_term:.10g},{s.penalty_term:.10g},{s.total:.10g},{str(g.estimate.converged).lower()}")
    man = _manifest("tune", args, _file_digest(args.data), args.record_time)
    man["selected_q"] = best
    _emit(_csv_with_manifest(man, "\n".join(lines) + "\n"), args.out)
    sys.stderr.write(json.dumps({"selected_q_gamma": best, "criterion": args.criterion}) + "\n")
    return EXIT_OK


def _sim_spec(args):
    kw = {k: v for k, v in (("n", args.n), ("p", args.p), ("o_star", args.ostar), ("rho", args.rho),
                             ("covariance", args.covariance)) if v is not None}
    return SimSpec.preset(args.example, seed=args.seed, **kw)


def cmd_simulate(args):
    spec = _sim_spec(args)
    table = run_replications(spec, default_config(spec), args.reps, jobs=args.jobs, test_size=args.test_size)
    man = _manifest("simulate", args, None, args.record_time)
    _emit(_csv_with_manifest(man, table.to_csv(include_time=args.record_time)), args.out)
    return EXIT_OK


def bench_settings(full=False):
    """Settings of the reproduction tables: ``(example, n, p, o_star_list)``."""
    if full:
        return [(1, 1000, 10, [10, 50, 100, 150, 200]), (2, 1000, 10, [30, 60, 90, 120, 150]),
                (3, 200, 1000, [10, 20]), (4, 200, 1000, [10, 20])]
    return [(1, 500, 10, [5, 25, 50, 75, 100]), (2, 500, 10, [15, 30, 45, 60, 75]),
            (3, 200, 300, [10, 20]), (4, 200, 300, [10, 20])]


def cmd_bench(args):
    reps = args.reps or (50 if args.full else 20)
    test_size = 10_000 if args.full else args.test_size
    rows = []
    header = None
    for ex, n, p, ostars in bench_settings(args.full):
        for o in ostars:
            spec = SimSpec.preset(ex, n=n, p=p, o_star=o, seed=args.seed)
            table = run_replications(spec, default_config(spec), reps, jobs=args.jobs, test_size=test_size)
            head, row = table.to_csv(include_time=args.record_time).splitlines()
            header = head
            rows.append(row)
    man = _manifest("bench", args, None, args.record_time)
    _emit(_csv_with_manifest(man, "\n".join([header] + rows) + "\n"), args.out)
    return EXIT_OK


def cmd_verify(args):
    from . import oracle
    from .linalg import Dataset
    from .losses import logistic, quadratic
    from .thresholding import quantile_threshold

    rng = np.random.default_rng(args.seed)
    report = {"theta_sharp": [], "trimming": [], "rip": None}
    ok = True
    for _ in range(args.instances):
        n = int(rng.integers(2, 9))
        s = rng.standard_normal(n)
        q = int(rng.integers(0, n + 1))
        nu = float(rng.choice([0.0, 0.5, 1.0]))
        _, v_brute, _ = oracle.theta_sharp_bruteforce(s, q, nu)
        xi, _ = quantile_threshold(s, q, nu)
        gap = oracle.theta_objective(xi, s, nu) - v_brute
        ok &= gap <= 1e-12
        report["theta_sharp"].append({"n": n, "q": q, "nu": nu, "gap": gap})
    for loss, nu_beta in ((quadratic(), 0.0), (logistic(), 0.1)):
        n, p = 7, 2
        X = rng.standard_normal((n, p))
        eta = X @ rng.standard_normal(p)
        y = eta + rng.standard_normal(n) if loss.kind == "quadratic" else (rng.random(n) < 0.5).astype(float)
        data = Dataset(X, y)
        t = oracle.trimmed_min_exhaustive(data, loss, 2, nu_beta=nu_beta)
        j = oracle.joint_min_exhaustive(data, loss, 2, nu_beta=nu_beta)
        gap = abs(t.value - j.value)
        ok &= gap <= 1e-8
        report["trimming"].append({"loss": loss.kind, "trimmed": t.value, "joint": j.value, "gap": gap,
                                   "deleted": [list(s) for s in t.optimal_supports]})
    X = rng.standard_normal((12, 2))
    r = oracle.rip_margin(X, 3, vartheta=2.0, nu=1e-4)
    report["rip"] = {"epsilon": r.epsilon, "kappa": r.kappa, "satisfied": r.satisfied,
                     "supports_checked": r.supports_checked}
    report["all_passed"] = bool(ok)
    rec = {"manifest": _manifest("verify", args, None, args.record_time), "report": report}
    _emit(json.dumps(rec, sort_keys=True) + "\n", args.out)
    return EXIT_OK if ok else EXIT_NUMERIC


def build_parser():
    parser = argparse.ArgumentParser(prog="piq", description="Outlier-resistant estimation by quantile thresholding.")
    parser.add_argument("--version", action="version", version=f"piq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one model and print the estimate as JSON")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("tune", help="select q_gamma on a grid by an information criterion",
                       description="Fits once per grid value. Grids over several parameters multiply the cost.")
    _add_fit_flags(p)
    p.add_argument("--grid", type=_grid, required=True, help="comma-separated q_gamma values, e.g. 10,20,30")
    p.add_argument("--criterion", choices=("pic", "pic0", "sfpic"), default="sfpic")
    p.add_argument("--A", type=float, default=2.0, help="penalty constant for pic/pic0")
    p.set_defaults(func=cmd_tune)

    def sim_flags(p):
        p.add_argument("--reps", type=int, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel replications")
        p.add_argument("--test-size", type=int, default=10_000, help="clean test set size for classification")
        p.add_argument("--out", help="CSV output file (default: stdout)")
        p.add_argument("--record-time", action="store_true", help="include runtimes and wall-clock time")

    p = sub.add_parser("simulate", help="replicate one synthetic example and tabulate metrics")
    p.add_argument("--example", type=int, choices=(1, 2, 3, 4), required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--ostar", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--covariance", choices=("toeplitz", "equicorrelated", "blocked"))
    sim_flags(p)
    p.set_defaults(func=cmd_simulate, reps=20)

    p = sub.add_parser("bench", help="run the reproduction tables (desk scale by default)")
    p.add_argument("--full", action="store_true", help="full-size settings with 50 replications")
    sim_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="brute-force checks on small seeded instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--out")
    p.add_argument("--record-time", action="store_true")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "reps", 1) is not None and getattr(args, "reps", 1) < 1:
        parser.error("--reps must be >= 1")
    try:
        return args.func(args)
    except DataError as e:
        sys.stderr.write(f"piq: data error: {e}\n")
        return EXIT_DATA
    except OSError as e:
        sys.stderr.write(f"piq: cannot read input: {e}\n")
        return EXIT_DATA
    except (ConfigError, UnsupportedError) as e:
        sys.stderr.write(f"piq: invalid configuration: {e}\n")
        return EXIT_USAGE
    except NumericalError as e:
        sys.stderr.write(f"piq: numerical failure: {e}\n")
        return EXIT_NUMERIC
    except PiqError as e:
        sys.stderr.write(f"piq: {e}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
