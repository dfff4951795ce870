"""Command-line interface: ``nqp {validate,solve,reduce,verify-reduction,rc-demo,bench}``.

Machine-readable result lines start with an upper-case tag (``OBJECTIVE``,
``ASSIGNMENT``, ``NMSE``, ``GAP``, ...) and depend only on the inputs and
``--seed``; timings go to stderr.

Exit codes: 0 success, 1 invalid input, 2 budget exceeded, 3 internal
invariant violation (a soundness failure).
"""
from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from . import __version__
from .core import LevelSet, NQPError, errors_only, generate_random_instance, random_level_set, validate_instance
from .fileformat import read_instance, serialize_instance
from .reduction import NotBinary, reduce_ubqp_to_unqp
from .reservoir import delay_task, drive_reservoir, make_esn, sine_task, train_discrete_readout
from .solvers import (
    SOLVERS,
    AnnealSchedule,
    BudgetExceeded,
    InvariantViolation,
    SolverBudget,
    default_schedule,
    solve,
    solve_multi_start,
)
from .verify import check_soundness, max_magnitude, verify_reduction

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_INVARIANT = 0, 1, 2, 3

log = logging.getLogger("nqp")


def _level_set(text: str) -> LevelSet:
    try:
        values = [int(v) for v in text.replace(" ", "").split(",") if v]
        return LevelSet.of(values)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad level set {text!r}: {exc}") from None


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _emit(tag: str, *values) -> None:
    print(tag, *(_fmt(v) for v in values))


def _budget(args) -> SolverBudget:
    return SolverBudget(max_evaluations=args.budget) if args.budget else SolverBudget()


def cmd_validate(args) -> int:
    inst = read_instance(args.file)
    issues = validate_instance(inst)
    for issue in issues:
        print(issue)
    n_err = len(errors_only(issues))
    _emit("VALID", "yes" if n_err == 0 else "no")
    return EXIT_OK if n_err == 0 else EXIT_INVALID


def _schedule(args, inst):
    if args.t0 is None and args.t1 is None and args.steps is None and args.moves is None:
        return None
    base = default_schedule(inst)
    return AnnealSchedule(
        args.t0 if args.t0 is not None else base.t_initial,
        args.t1 if args.t1 is not None else base.t_final,
        args.steps if args.steps is not None else base.steps,
        args.moves if args.moves is not None else base.moves_per_step,
    )


def cmd_solve(args) -> int:
    inst = read_instance(args.file)
    errors = errors_only(validate_instance(inst))
    if errors:
        for e in errors:
            print(e, file=sys.stderr)
        return EXIT_INVALID
    t = time.perf_counter()
    res = solve(inst, args.solver, args.seed, budget=_budget(args), starts=args.starts,
                schedule=_schedule(args, inst), inner=args.inner)
    print(f"# elapsed {time.perf_counter() - t:.3f}s", file=sys.stderr)
    _emit("SOLVER", res.solver)
    _emit("OBJECTIVE", res.objective)
    _emit("ASSIGNMENT", *res.w)
    _emit("EVALUATIONS", res.evaluations)
    _emit("ITERATIONS", res.iterations)
    _emit("OPTIMAL_PROVEN", str(res.optimal_proven).lower())
    if res.seed is not None:
        _emit("SEED", res.seed)
    return EXIT_OK


def cmd_reduce(args) -> int:
    ubqp = read_instance(args.file)
    reduced, cert = reduce_ubqp_to_unqp(ubqp, args.set, allow_indefinite=args.allow_indefinite)
    text = serialize_instance(reduced, cert)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for k, v in cert.items():
        print(f"# {k} {v}", file=sys.stderr)
    return EXIT_OK


def cmd_verify_reduction(args) -> int:
    ubqp = read_instance(args.file)
    reduced, cert, check, failures = verify_reduction(ubqp, args.set, exhaustive=args.exhaustive,
                                                      budget=_budget(args))
    _emit("UBQP_MIN", check.ubqp_min)
    _emit("REDUCED_MIN", check.reduced_min)
    _emit("M", cert.M if cert.M is not None else "none")
    _emit("ARGMIN_SIZE", len(check.ubqp_argmin))
    for f in failures:
        print("FAILURE", f)
    _emit("SOUND", "yes" if not failures else "no")
    return EXIT_OK if not failures else EXIT_INVARIANT


def _task(name: str, length: int, seed: int):
    if name == "sine":
        return sine_task(length, seed)
    if name.startswith("delay"):
        _, _, tau = name.partition(":")
        return delay_task(length, int(tau) if tau else 2, seed)
    raise ValueError(f"unknown task {name!r}; use 'delay:TAU' or 'sine'")


def cmd_rc_demo(args) -> int:
    total = args.length + args.washout
    u, y = _task(args.task, total, args.seed)
    esn = make_esn(args.neurons, 1, args.seed, args.rho, args.input_scale, args.density)
    states = drive_reservoir(esn, u, args.washout).with_target(y)
    run = train_discrete_readout(esn, u, y, args.washout, args.set, args.solver, args.seed,
                                 ridge=args.ridge, starts=args.starts, inner=args.inner,
                                 budget=_budget(args), states=states)
    _emit("NMSE", "continuous", run.continuous.nmse)
    _emit("NMSE", "discrete", run.discrete.nmse)
    _emit("GAP", run.gap)
    _emit("SCALE", run.scale)
    _emit("OBJECTIVE", run.qp_objective)
    _emit("ASSIGNMENT", *run.w_levels)
    return EXIT_OK


def cmd_bench(args) -> int:
    rng = np.random.default_rng(args.seed)
    budget = _budget(args)
    header = f"{'N':>3} {'n':>3} {'trials':>6} {'sound':>6} {'heur_hit':>8} {'mean_rel_gap':>12} {'max_bits':>8}"
    print(header)
    failures = 0
    for N in args.dims:
        for n in args.levels:
            if n**N > budget.max_evaluations:
                print(f"{N:>3} {n:>3} {'skipped (n^N over budget)':>30}")
                continue
            sound = hits = 0
            gaps, bits = [], 0
            for _ in range(args.trials):
                ubqp = generate_random_instance(N, LevelSet((0, 1)), int(rng.integers(2**31)), 5)
                S = random_level_set(n, rng)
                reduced, cert = reduce_ubqp_to_unqp(ubqp, S)
                check = check_soundness(ubqp, reduced, cert, budget)
                sound += check.ok
                failures += not check.ok
                heur = solve_multi_start(reduced, args.starts, int(rng.integers(2**31)))
                hits += heur.objective == check.reduced_min
                denom = max(abs(check.reduced_min), 1)
                gaps.append((heur.objective - check.reduced_min) / denom)
                bits = max(bits, max_magnitude(reduced).bit_length())
            print(f"{N:>3} {n:>3} {args.trials:>6} {sound:>6} {hits / args.trials:>8.3f} "
                  f"{float(np.mean(gaps)):>12.3g} {bits:>8}")
    _emit("FAILURES", failures)
    return EXIT_OK if failures == 0 else EXIT_INVARIANT


class _Parser(argparse.ArgumentParser):
    # usage errors are invalid input; exit code 2 is reserved for budget overruns
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nqp", description="n-ary quadratic programming toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def budget_opt(sp):
        sp.add_argument("--budget", type=int, default=None, help="max objective evaluations for exhaustive search")

    sp = sub.add_parser("validate", help="check instance invariants")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("solve", help="minimize an instance")
    sp.add_argument("file")
    sp.add_argument("--solver", choices=SOLVERS, default="multi")
    sp.add_argument("--inner", choices=("local", "anneal"), default="local")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--starts", type=int, default=16)
    sp.add_argument("--t0", type=float)
    sp.add_argument("--t1", type=float)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--moves", type=int)
    budget_opt(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("reduce", help="reduce a {0,1} instance to one over --set")
    sp.add_argument("file")
    sp.add_argument("--set", type=_level_set, required=True, help='e.g. --set "0,1,2" or --set=-1,0,1')
    sp.add_argument("--out")
    sp.add_argument("--allow-indefinite", action="store_true")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("verify-reduction", help="reduce and brute-force both sides")
    sp.add_argument("file")
    sp.add_argument("--set", type=_level_set, required=True)
    sp.add_argument("--exhaustive", action="store_true", help="also check objective identity and separation")
    budget_opt(sp)
    sp.set_defaults(func=cmd_verify_reduction)

    sp = sub.add_parser("rc-demo", help="reservoir pipeline with a discrete readout")
    sp.add_argument("--neurons", type=int, default=30)
    sp.add_argument("--length", type=int, default=500, help="harvested steps after the washout")
    sp.add_argument("--washout", type=int, default=50)
    sp.add_argument("--task", default="delay:2")
    sp.add_argument("--set", type=_level_set, default=LevelSet((-1, 0, 1)))
    sp.add_argument("--ridge", type=float, default=1e-4)
    sp.add_argument("--inner", choices=("local", "anneal"), default="anneal")
    sp.add_argument("--solver", choices=SOLVERS, default="multi")
    sp.add_argument("--starts", type=int, default=16)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--rho", type=float, default=0.9)
    sp.add_argument("--input-scale", type=float, default=0.5)
    sp.add_argument("--density", type=float, default=0.1)
    budget_opt(sp)
    sp.set_defaults(func=cmd_rc_demo)

    sp = sub.add_parser("bench", help="soundness and heuristic-gap sweep")
    sp.add_argument("--dims", type=_int_list, default=[2, 4, 6, 8])
    sp.add_argument("--levels", type=_int_list, default=[2, 3, 5])
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--starts", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0)
    budget_opt(sp)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (NotBinary, InvariantViolation) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (NQPError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
