"""Command-line entry point: ``skm <subcommand> [--flags]``.

Exit codes: 0 success, 1 usage error, 2 runtime error, 3 (certify only) the
iteration bound elapsed without a feasibility certificate.
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import harness, problems, theory
from .linalg import FeasibilityProblem, normalize_system
from .solvers import (
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_THRESHOLD,
    BlockConfig,
    HaltingRule,
    SkmConfig,
    skm_solve,
    warmup,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_NO_CERTIFICATE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _lambda(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < v <= 2:
        raise argparse.ArgumentTypeError(f"lambda must lie in (0, 2], got {v:g}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _nonnegative_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {v}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _list_of(kind):
    def parse(text):
        return [kind(t) for t in text.split(",") if t.strip()]
    return parse


def _stride(text):
    return "auto" if text == "auto" else _positive_int(text)


def _halting(args):
    if args.halting == "iteration-cap":
        return HaltingRule.iteration_cap()
    return HaltingRule(args.halting.replace("-", "_"), args.threshold)


def _add_halting(sp):
    sp.add_argument("--halting", default="residual-norm",
                    choices=["residual-norm", "relative-residual-norm",
                             "relative-max-violation", "iteration-cap"],
                    help="halting rule (default: residual-norm)")
    sp.add_argument("--threshold", type=_positive_float, default=DEFAULT_THRESHOLD,
                    help="halting threshold (default: 2^-14)")
    sp.add_argument("--max-iterations", type=_nonnegative_int, default=DEFAULT_MAX_ITERATIONS,
                    help=f"iteration cap per run (default: {DEFAULT_MAX_ITERATIONS})")


def _add_family(sp, required=True):
    sp.add_argument("--family", choices=["gaussian", "correlated"], default="gaussian",
                    help="random family (default: gaussian)")
    sp.add_argument("--m", type=_positive_int, required=required, default=None,
                    help="number of rows")
    sp.add_argument("--n", type=_positive_int, required=required, default=None,
                    help="number of columns")
    sp.add_argument("--lo", type=float, default=0.9,
                    help="correlated family: lower end of the entry interval (default: 0.9)")
    sp.add_argument("--hi", type=float, default=1.0,
                    help="correlated family: upper end of the entry interval (default: 1.0)")
    sp.add_argument("--seed", type=_nonnegative_int, default=0, help="RNG seed (default: 0)")


def build_parser():
    parser = _Parser(prog="skm", description="Sampling Kaczmarz-Motzkin feasibility toolkit.")
    sub = parser.add_subparsers(dest="command", metavar="subcommand", required=True)

    sp = sub.add_parser("generate", help="write a random feasible instance and its witness")
    _add_family(sp)
    sp.add_argument("--out", required=True, help="instance file to write")
    sp.add_argument("--witness-out", default=None,
                    help="witness file to write (default: <out>.witness)")

    sp = sub.add_parser("solve", help="run SKM on an instance file")
    sp.add_argument("--in", dest="inp", required=True, help="instance file")
    sp.add_argument("--beta", type=_positive_int, default=1, help="sample size (default: 1)")
    sp.add_argument("--lambda", dest="lam", type=_lambda, default=1.0,
                    help="projection parameter in (0, 2] (default: 1)")
    sp.add_argument("--seed", type=_nonnegative_int, default=0, help="RNG seed (default: 0)")
    sp.add_argument("--stride", type=_stride, default=1,
                    help="iterations between halting checks, or 'auto' (default: 1)")
    _add_halting(sp)
    sp.add_argument("--trace-out", default=None, help="write the residual trace as CSV")
    sp.add_argument("--x-out", default=None, help="write the final iterate as a vector file")

    sp = sub.add_parser("certify", help="search for a feasibility certificate of an integer system")
    sp.add_argument("--in", dest="inp", required=True, help="instance file with integer entries")
    sp.add_argument("--beta", type=_positive_int, default=1, help="sample size (default: 1)")
    sp.add_argument("--lambda", dest="lam", type=_lambda, default=1.0,
                    help="projection parameter in (0, 2) (default: 1)")
    sp.add_argument("--seed", type=_nonnegative_int, default=0, help="RNG seed (default: 0)")
    sp.add_argument("--hoffman", type=_positive_float, default=None,
                    help="Hoffman constant L2 of the normalized system "
                         "(default: enumerated upper bound)")

    sp = sub.add_parser("sweep", help="time SKM over a (beta, lambda) grid")
    sp.add_argument("--in", dest="inp", required=True, help="instance file")
    sp.add_argument("--beta", type=_list_of(_positive_int), default=[1],
                    help="comma-separated sample sizes (default: 1)")
    sp.add_argument("--lambda", dest="lam", type=_list_of(_lambda), default=[1.0],
                    help="comma-separated projection parameters (default: 1)")
    sp.add_argument("--trials", type=_positive_int, default=1, help="trials per cell (default: 1)")
    sp.add_argument("--seed", type=_nonnegative_int, default=0,
                    help="seed of trial 0; trial t uses seed + t (default: 0)")
    sp.add_argument("--time-limit", type=_positive_float, default=harness.DEFAULT_TIME_LIMIT,
                    help="seconds per run (default: 300)")
    sp.add_argument("--stride", type=_stride, default="auto",
                    help="iterations between halting checks, or 'auto' (default: auto)")
    sp.add_argument("--jobs", type=_positive_int, default=1,
                    help="trials run concurrently (default: 1)")
    _add_halting(sp)
    sp.add_argument("--out", default=None, help="CSV file for the per-run records")
    sp.add_argument("--plot", default=None, help="SVG file for median time against beta")

    sp = sub.add_parser("gain", help="tabulate the gain model and its best sample size")
    sp.add_argument("--m", type=_positive_int, required=True, help="number of rows")
    sp.add_argument("--n", type=_positive_int, required=True, help="number of columns")
    sp.add_argument("--s", type=_nonnegative_int, default=0,
                    help="number of satisfied rows (default: 0)")
    sp.add_argument("--c", type=_positive_float, default=1.0,
                    help="cost per sampled entry (default: 1)")
    sp.add_argument("--C", dest="C", type=float, default=0.0,
                    help="fixed cost per iteration (default: 0)")
    sp.add_argument("--exact", action="store_true",
                    help="use the exact hit probability instead of (s/m)^beta")

    sp = sub.add_parser("convert", help="turn an MPS file into the feasibility form of its optimal face")
    sp.add_argument("--in", dest="inp", required=True, help="MPS file")
    sp.add_argument("--pstar", type=float, default=None,
                    help="optimal objective value (default: from the .json sidecar)")
    sp.add_argument("--out", required=True, help="instance file to write")

    sp = sub.add_parser("compare-bk", help="time SKM against block Kaczmarz on random equations")
    _add_family(sp)
    sp.add_argument("--beta", type=_list_of(_positive_int), default=[1],
                    help="comma-separated SKM sample sizes (default: 1)")
    sp.add_argument("--stride", type=_list_of(_stride), default=["auto", 1],
                    help="comma-separated SKM check strides, integers or 'auto' "
                         "(default: auto,1)")
    sp.add_argument("--block-size", type=_list_of(_positive_int), default=[1],
                    help="comma-separated block sizes (default: 1)")
    sp.add_argument("--lambda", dest="lam", type=_lambda, default=1.0,
                    help="projection parameter for both methods (default: 1)")
    sp.add_argument("--trials", type=_positive_int, default=1, help="trials (default: 1)")
    sp.add_argument("--time-limit", type=_positive_float, default=60.0,
                    help="seconds per run (default: 60)")
    _add_halting(sp)
    sp.add_argument("--out", default=None, help="CSV file for the per-run records")
    return parser


# --- subcommands ---------------------------------------------------------------------


def _generate_problem(args):
    if args.family == "gaussian":
        return problems.gen_gaussian(args.m, args.n, args.seed)
    if not args.lo < args.hi:
        raise UsageError("--lo must be smaller than --hi")
    return problems.gen_correlated(args.m, args.n, args.lo, args.hi, args.seed)


def cmd_generate(args):
    p, x_star = _generate_problem(args)
    if args.family == "correlated":
        signs = np.sign(p.A)
        if not np.all(signs == signs[:, :1]):
            raise RuntimeError("generated a row with mixed signs")
    witness = args.witness_out or args.out + ".witness"
    problems.write_problem(args.out, p.A, p.b)
    problems.write_vector(witness, x_star)
    norms = p.row_norms
    print(f"family      {args.family}")
    print(f"m           {p.m}")
    print(f"n           {p.n}")
    print(f"row norms   [{norms.min():.6g}, {norms.max():.6g}]")
    print(f"instance    {args.out}")
    print(f"witness     {witness}")
    return EXIT_OK


def _load(path):
    try:
        return problems.load_problem(path)
    except OSError as exc:
        raise RuntimeError(f"cannot read {path}: {exc.strerror or exc}") from None


def cmd_solve(args):
    p = _load(args.inp)
    if args.beta > p.m:
        raise UsageError(f"--beta {args.beta} exceeds m = {p.m}")
    cfg = SkmConfig(beta=args.beta, lam=args.lam, max_iterations=args.max_iterations,
                    halting=_halting(args), seed=args.seed, stride=args.stride)
    warmup()
    tr = skm_solve(p, cfg)
    print(f"iterations       {tr.n_iterations}")
    print(f"final residual   {tr.final_residual:.17g}")
    print(f"wall seconds     {tr.wall_seconds:.6f}")
    print(f"halted reason    {tr.halted_reason}")
    if args.trace_out:
        with open(args.trace_out, "w") as fh:
            fh.write("iteration,residual_norm,max_violation,elapsed\n")
            for k, r, v, t in zip(tr.iterations, tr.residual_norms, tr.max_violations,
                                  tr.elapsed):
                fh.write(f"{k},{r:.17g},{v:.17g},{t:.17g}\n")
    if args.x_out:
        problems.write_vector(args.x_out, tr.x)
    return EXIT_OK


def cmd_certify(args):
    try:
        A, b = problems.read_instance(args.inp)
    except OSError as exc:
        raise RuntimeError(f"cannot read {args.inp}: {exc.strerror or exc}") from None
    enc = theory.encoding_length(A, b)
    p = normalize_system(FeasibilityProblem(A, b))
    if args.beta > p.m:
        raise UsageError(f"--beta {args.beta} exceeds m = {p.m}")
    if args.lam == 2:
        raise UsageError("certify needs lambda < 2")
    if args.hoffman is not None:
        est = theory.hoffman_user(args.hoffman, p.m)
    else:
        est = theory.hoffman_enumerated(p.A)
    bound = theory.iteration_bound(enc, p.n, p.m, args.lam, est.L2)
    threshold = theory.certificate_threshold(enc)
    cfg = SkmConfig(beta=args.beta, lam=args.lam, max_iterations=bound,
                    halting=HaltingRule.certificate(threshold), seed=args.seed)
    warmup()
    tr = skm_solve(p, cfg)
    report = theory.certificate_check(p, tr.x, enc, lam=args.lam, L2=est.L2,
                                      iterations=tr.n_iterations)
    print(f"sigma            {enc.sigma:.6f}")
    print(f"threshold        {threshold:.6e}")
    print(f"L2               {est.L2:.6g} ({est.method})")
    print(f"iteration bound  {bound}")
    print(f"iterations       {tr.n_iterations}")
    print(f"theta            {report.theta:.6e}")
    if report.is_certificate:
        print("verdict          feasible (certificate found)")
        return EXIT_OK
    if tr.halted_reason == "stalled":
        print("verdict          no certificate: iterate stalled at floating-point resolution")
    else:
        print("verdict          no certificate within the bound")
    print(f"P(miss | feasible) <= {report.failure_probability_bound:.6e}")
    return EXIT_NO_CERTIFICATE


def cmd_sweep(args):
    p = _load(args.inp)
    bad = [beta for beta in args.beta if beta > p.m]
    if bad:
        raise UsageError(f"--beta values {bad} exceed m = {p.m}")
    if not args.beta or not args.lam:
        raise UsageError("--beta and --lambda need at least one value")
    spec = harness.SweepSpec(tuple(args.beta), tuple(args.lam), trials=args.trials,
                             halting=_halting(args), time_limit=args.time_limit,
                             seed_base=args.seed, max_iterations=args.max_iterations,
                             stride=args.stride, jobs=args.jobs)
    result = harness.run_sweep(p, spec)
    print(f"{'beta':>8} {'lambda':>8} {'median s':>12} {'mean s':>12} {'median its':>12}")
    for (beta, lam), agg in result.aggregates.items():
        print(f"{beta:>8} {lam:>8g} {agg['wall_seconds']['median']:>12.6f} "
              f"{agg['wall_seconds']['mean']:>12.6f} {agg['iterations']['median']:>12g}")
    timeouts = sum(r.halted_reason == "timeout" for r in result.records)
    if timeouts:
        print(f"{timeouts} run(s) timed out")
    if args.out:
        harness.emit_csv(result, args.out)
    if args.plot:
        harness.emit_plot(result, args.plot)
    return EXIT_OK


def cmd_gain(args):
    if args.s > args.m:
        raise UsageError("--s cannot exceed --m")
    if args.C < 0:
        raise UsageError("--C must be nonnegative")
    model = theory.GainModel(args.m, args.n, args.s, args.c, args.C)
    curve = theory.gain_curve(model, exact=args.exact)
    print(f"{'beta':>6} {'gain':>14}")
    for beta, g in enumerate(curve, start=1):
        print(f"{beta:>6} {g:>14.8e}")
    print(f"optimal beta = {theory.optimal_beta(model, exact=args.exact)}")
    return EXIT_OK


def cmd_convert(args):
    path = Path(args.inp)
    if not path.exists():
        raise RuntimeError(f"cannot read {path}: no such file")
    lp = problems.read_mps(path)
    p_star = args.pstar if args.pstar is not None else lp.p_star
    if p_star is None:
        raise UsageError("need --pstar or a .json sidecar with p_star")
    rows, cols = problems.stacked_shape(lp)
    p = problems.lp_to_feasibility(lp, p_star)
    problems.write_problem(args.out, p.A, p.b)
    print(f"name             {lp.name}")
    print(f"stacked system   {rows} x {cols}")
    if p.dropped_rows:
        print(f"zero rows        {p.dropped_rows} dropped")
    print(f"instance         {args.out}")
    return EXIT_OK


def cmd_compare_bk(args):
    if args.family == "gaussian":
        A, b, _ = problems.gen_gaussian_equalities(args.m, args.n, args.seed)
    else:
        if not args.lo < args.hi:
            raise UsageError("--lo must be smaller than --hi")
        A, b, _ = problems.gen_correlated_equalities(args.m, args.n, args.lo, args.hi, args.seed)
    if any(beta > 2 * args.m for beta in args.beta):
        raise UsageError(f"--beta cannot exceed 2m = {2 * args.m}")
    if any(s > args.m for s in args.block_size):
        raise UsageError(f"--block-size cannot exceed m = {args.m}")
    halting = _halting(args)
    skm_cfgs = [SkmConfig(beta=beta, lam=args.lam, max_iterations=args.max_iterations,
                          halting=halting, stride=stride)
                for beta in args.beta for stride in args.stride]
    bk_cfgs = [BlockConfig(block_size=s, lam=args.lam, max_iterations=args.max_iterations,
                           halting=halting) for s in args.block_size]
    cmp = harness.compare_block_kaczmarz(A, b, skm_cfgs, bk_cfgs, trials=args.trials,
                                         seed_base=args.seed, time_limit=args.time_limit)
    print(f"{'method':>6} {'param':>6} {'stride':>6} {'median s':>12}")
    for (method, param, stride, _), t in cmp.medians().items():
        print(f"{method:>6} {param:>6} {stride:>6} {t:>12.6f}")
    print(f"best SKM {cmp.best('SKM'):.6f} s, best BK {cmp.best('BK'):.6f} s")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("method,parameter,stride,lambda,trial,seed,iterations,wall_seconds,"
                     "final_residual,halted_reason\n")
            for r in cmp.records:
                fh.write(f"{r.method},{r.parameter},{r.stride},{r.lam:.17g},{r.trial},{r.seed},"
                         f"{r.iterations},{r.wall_seconds:.17g},{r.final_residual:.17g},"
                         f"{r.halted_reason}\n")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "certify": cmd_certify,
    "sweep": cmd_sweep,
    "gain": cmd_gain,
    "convert": cmd_convert,
    "compare-bk": cmd_compare_bk,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"skm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, ValueError, OSError) as exc:
        print(f"skm {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
