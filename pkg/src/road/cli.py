"""Command-line interface: ``road <subcommand> [options]``.

Exit status is 0 on success, 1 on a domain error (infeasible budget, violated
precondition, failed check) and 2 on a usage error.
"""

import argparse
import contextlib
import json
import logging
import os
import sys
import tempfile

import numpy as np

from . import counterexample as ce
from . import experiments as ex
from . import proof
from .estimators import (
    fit_estimates,
    gen_synthetic,
    parse_vector,
    read_dataset_csv,
    read_matrix_csv,
    write_dataset_csv,
)
from .exceptions import RoadError
from .model import GaussianPair, classify, conditional_error_rates, oracle_rate
from .solver import RoadProblem, solve

log = logging.getLogger("road")


@contextlib.contextmanager
def atomic_output(path):
    """Yield a text handle; the file appears at ``path`` only after a successful write."""
    if path is None or path == "-":
        yield sys.stdout
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".road-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def _fmt(v):
    return ",".join(f"{x:.10g}" for x in np.atleast_1d(v))


def _load_model(args):
    if getattr(args, "model", None):
        with open(args.model) as fh:
            return GaussianPair.from_dict(json.load(fh))
    if getattr(args, "mud", None) is not None and args.sigma is not None:
        return GaussianPair.from_mu_d(parse_vector(args.mud), read_matrix_csv(args.sigma))
    raise RoadError("a model is required: --model FILE, or --mud with --sigma FILE")


def _solver_kwargs(method, tol):
    return {"tol": tol} if method == "projected_gradient" else {}


def cmd_gen_data(args):
    truth = _load_model(args)
    data = gen_synthetic(truth, args.n, args.seed)
    with atomic_output(args.out) as fh:
        write_dataset_csv(data, fh)
    return 0


def cmd_fit(args):
    data = read_dataset_csv(args.data)
    est = fit_estimates(data)
    problem = RoadProblem(est.sigma_hat, est.mu_d_hat, args.c)
    sol = solve(problem, method=args.method, **_solver_kwargs(args.method, args.tol))
    out = {
        "w": sol.w.tolist(),
        "center": est.mu_a_hat.tolist(),
        "c": args.c,
        "objective": sol.objective,
        "l1_norm": sol.l1_norm,
        "l1_active": sol.l1_active,
        "kkt_residual": sol.kkt_residual,
        "method": sol.method,
        "converged": sol.converged,
        "n1": est.n1,
        "n2": est.n2,
    }
    with atomic_output(args.out) as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    if args.save_model:
        with atomic_output(args.save_model) as fh:
            json.dump(est.as_model().to_dict(), fh, indent=2)
            fh.write("\n")
    return 0


def cmd_classify(args):
    with open(args.fit) as fh:
        fitted = json.load(fh)
    w, center = np.asarray(fitted["w"]), np.asarray(fitted["center"])
    data = read_dataset_csv(args.data)
    labels = np.atleast_1d(classify(data.X, w, center))
    with atomic_output(args.out) as fh:
        fh.write("label,predicted\n")
        for true, pred in zip(data.labels, labels):
            fh.write(f"{true},{pred}\n")
    err = float(np.mean(labels != data.labels))
    msg = f"empirical_error={err:.6f} n={len(data)}"
    if args.model:
        truth = _load_model(args)
        rate = conditional_error_rates(w, center, truth)[2]
        se = np.sqrt(rate * (1 - rate) / len(data))
        msg += f" analytic_error={rate:.6f} z={(err - rate) / se:.3f}"
    print(msg, file=sys.stderr)
    return 0


def _emit_solution(sol, problem, out):
    result = {
        "w": sol.w.tolist(),
        "objective": sol.objective,
        "l1_norm": sol.l1_norm,
        "l1_active": sol.l1_active,
        "kkt_residual": sol.kkt_residual,
        "method": sol.method,
        "converged": sol.converged,
        "margin": problem.margin,
    }
    if out:
        with atomic_output(out) as fh:
            json.dump(result, fh, indent=2)
            fh.write("\n")
    log.debug("solver %s finished after %d iterations", sol.method, sol.iterations)
    print(f"w={_fmt(sol.w)}")
    print(f"objective={sol.objective:.12g}")
    print(f"kkt_residual={sol.kkt_residual:.3e}")
    print(f"l1_norm={sol.l1_norm:.12g} l1_active={sol.l1_active} method={sol.method} converged={sol.converged}")


def cmd_solve(args):
    sigma_path = args.sigma_file or args.sigma
    if not sigma_path:
        raise RoadError("--sigma-file is required")
    problem = RoadProblem(read_matrix_csv(sigma_path), parse_vector(args.mud), args.c)
    sol = solve(problem, method=args.method, **_solver_kwargs(args.method, args.tol))
    _emit_solution(sol, problem, args.out)
    return 0 if sol.converged else 1


def cmd_oracle(args):
    truth = _load_model(args)
    problem = RoadProblem(truth.sigma, truth.mu_d, args.c)
    sol = solve(problem, method=args.method, **_solver_kwargs(args.method, args.tol))
    _emit_solution(sol, problem, args.out)
    print(f"oracle_rate={oracle_rate(sol.w, truth):.12g}")
    return 0 if sol.converged else 1


def cmd_prove_check(args):
    results = []
    for summary in (proof.sweep_ineq_scale(), proof.sweep_ineq_shift(), proof.sweep_gap_bound(seed=args.seed)):
        results.append(
            (f"ineq-{summary.name}", summary.ok, f"points={summary.points} violations={summary.violations} "
             f"max_ratio={summary.max_ratio:.4f}")
        )
    for reverse in (False, True):
        sw = proof.sweep_transform(args.reps, seed=args.seed, reverse=reverse)
        results.append(
            ("transform-" + ("reverse" if reverse else "forward"), sw.ok,
             f"runs={sw.runs} failures={sw.failures} gap_failures={sw.gap_failures} "
             f"star_l1_excess={sw.max_star_l1_excess:.2e}")
        )
    truth = ex.two_dim_model(_sigma_value(args))
    held = 0
    for i in range(args.chain_runs):
        est = fit_estimates(gen_synthetic(truth, args.n, np.random.SeedSequence(args.seed, spawn_key=(i,))))
        held += proof.error_chain_audit(truth, est, args.c).all_hold
    results.append(("error-chain", held == args.chain_runs, f"runs={args.chain_runs} all_hold={held}"))
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name} {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


def cmd_counterexample(args):
    cfg = ce.CounterexampleConfig(_sigma_value(args), args.eps, args.tau, args.reps, args.seed)
    report = ce.ce_violation_mc(cfg)
    if args.out:
        with atomic_output(args.out) as fh:
            report.write_csv(fh)
    print(report.summary())
    return 0


def cmd_convergence(args):
    if args.model or args.mud:
        truth = _load_model(args)
    elif args.preset == "band":
        truth = ex.band_model(p=args.p)
    else:
        truth = ex.two_dim_model(_sigma_value(args))
    cfg = ex.ConvergenceConfig(truth, args.c, parse_vector(args.n_grid).astype(int), args.reps, args.seed)
    records = ex.run_convergence(cfg, threads=args.threads)
    rows = ex.summarize(records)
    if args.out:
        with atomic_output(args.out) as fh:
            ex.write_records_csv(records, fh)
    with atomic_output(args.summary) as fh:
        ex.write_summary_csv(rows, fh)
    if args.plot:
        ex.plot_regret(rows, args.plot)
    try:
        print(f"slope={ex.fit_slope(records):.4f}", file=sys.stderr)
    except RoadError as exc:
        print(f"slope unavailable: {exc}", file=sys.stderr)
    return 0


def _sigma_value(args):
    try:
        return float(args.sigma) if args.sigma is not None else 2.0
    except ValueError:
        raise RoadError(f"--sigma must be a number for this command, got {args.sigma!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--out", help="output path (default: stdout where applicable)")
    common.add_argument("--tol", type=float, default=1e-9, help="projected gradient stopping tolerance")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="road", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    def model_args(p):
        p.add_argument("--model", help="JSON file with keys mu1, mu2, sigma")
        p.add_argument("--mud", help="comma-separated mu_d (mu1 = mu_d, mu2 = -mu_d)")
        p.add_argument("--sigma", help="covariance matrix CSV")

    def method_arg(p):
        p.add_argument("--method", choices=["auto", "exact", "projected_gradient"], default="auto")

    p = add("gen-data", cmd_gen_data, "draw a labelled Gaussian dataset")
    model_args(p)
    p.add_argument("--n", type=int, required=True, help="observations per group")

    p = add("fit", cmd_fit, "fit the ROAD rule to a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--save-model", help="write the estimated model (JSON)")
    method_arg(p)

    p = add("classify", cmd_classify, "apply a fitted rule to a dataset CSV")
    p.add_argument("--fit", required=True, help="JSON written by 'road fit'")
    p.add_argument("--data", required=True)
    model_args(p)

    p = add("solve", cmd_solve, "solve min w'Sw s.t. w'mu_d = 1, |w|_1 <= c")
    p.add_argument("--sigma-file")
    p.add_argument("--sigma")
    p.add_argument("--mud", required=True)
    p.add_argument("--c", type=float, required=True)
    method_arg(p)

    p = add("oracle", cmd_oracle, "oracle direction and error rate for a known model")
    model_args(p)
    p.add_argument("--c", type=float, required=True)
    method_arg(p)

    p = add("prove-check", cmd_prove_check, "run the inequality, transformation and error-chain audits")
    p.add_argument("--reps", type=int, default=1000, help="randomized transformation runs")
    p.add_argument("--chain-runs", type=int, default=20)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--sigma", default="2")
    p.add_argument("--c", type=float, default=1.25)

    p = add("counterexample", cmd_counterexample, "Monte Carlo violation frequency of the false inequality")
    p.add_argument("--sigma", default="2")
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--reps", type=int, default=20_000)

    p = add("convergence", cmd_convergence, "regret-versus-n experiment")
    model_args(p)
    p.add_argument("--preset", choices=["two-dim", "band"], default="two-dim")
    p.add_argument("--p", type=int, default=50, help="dimension of the band preset")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--n-grid", required=True)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--summary", help="summary CSV path (default: stdout)")
    p.add_argument("--plot", help="optional SVG plot path")
    return parser


def run_command(argv=None):
    """Parse ``argv``, dispatch to the subcommand and return the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse has already printed usage
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (RoadError, OSError) as exc:
        print(f"road {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main(argv=None):
    return run_command(argv)


if __name__ == "__main__":
    sys.exit(main())
