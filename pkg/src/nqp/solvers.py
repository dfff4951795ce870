"""Exact and heuristic minimizers over ``S^N``.

Single-coordinate moves are priced incrementally: with ``g = Q w`` the change
from setting ``w_i`` to ``w_i + delta`` is ``delta * (2 g_i + c_i + Q_ii delta)``.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import (
    INT,
    Assignment,
    NQPError,
    QPInstance,
    SolveResult,
    check_assignment,
    evaluate_objective,
)

DEFAULT_MAX_EVALUATIONS = 10**8
_CHUNK = 1 << 16
_INT64_SAFE = 1 << 62


class BudgetExceeded(NQPError):
    pass


class InvariantViolation(NQPError, AssertionError):
    pass


@dataclass(frozen=True)
class SolverBudget:
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS
    max_seconds: float | None = None
    max_iterations: int | None = None

    def __post_init__(self):
        for name in ("max_evaluations", "max_seconds", "max_iterations"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")


@dataclass(frozen=True)
class AnnealSchedule:
    t_initial: float
    t_final: float
    steps: int
    moves_per_step: int

    def __post_init__(self):
        if not (0 < self.t_final < self.t_initial):
            raise ValueError("need 0 < t_final < t_initial")
        if self.steps < 1 or self.moves_per_step < 1:
            raise ValueError("steps and moves_per_step must be positive")

    @property
    def cooling(self) -> float:
        return (self.t_final / self.t_initial) ** (1.0 / self.steps)


def default_schedule(inst: QPInstance) -> AnnealSchedule:
    """Schedule whose starting temperature matches a typical single move cost."""
    spread = inst.S[-1] - inst.S[0]
    diag = max((abs(float(inst.Q[i, i])) for i in range(inst.N)), default=0.0)
    lin = max((abs(float(x)) for x in inst.c), default=0.0)
    t0 = max(diag * spread * spread + lin * spread, 1e-6)
    return AnnealSchedule(t0, t0 * 1e-4, 100, max(10 * inst.N, 10))


# -- exhaustive search ------------------------------------------------------

def _index_chunks(n: int, N: int, chunk: int = _CHUNK) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(first_code, level_indices)`` blocks in mixed-radix order.

    Coordinate 0 is the most significant digit, so code order is the
    lexicographic order of assignments (levels compared by position in S).
    """
    total = n**N
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        idx = np.empty((codes.size, N), dtype=np.int64)
        for k in range(N - 1, -1, -1):
            idx[:, k] = codes % n
            codes = codes // n
        yield start, idx


def _vectorized_data(inst: QPInstance):
    """Coefficients in the widest dtype that cannot overflow for this instance."""
    levels = list(inst.S)
    if inst.domain != INT:
        return (np.asarray(inst.Q, np.float64), np.asarray(inst.c, np.float64),
                np.asarray(levels, np.float64))
    sig = max(abs(v) for v in levels)
    worst = sig * sig * sum(abs(x) for x in inst.Q.flat) + sig * sum(abs(x) for x in inst.c)
    if worst < _INT64_SAFE:
        return (np.asarray(inst.Q, np.int64), np.asarray(inst.c, np.int64),
                np.asarray(levels, np.int64))
    return np.asarray(inst.Q, object), np.asarray(inst.c, object), np.asarray(levels, object)


def _objectives(W: np.ndarray, Q: np.ndarray, c: np.ndarray) -> np.ndarray:
    return ((W @ Q) * W).sum(axis=1) + W @ c


def _scalar(x, domain):
    return int(x) if domain == INT else float(x)


def _check_budget(inst: QPInstance, budget: SolverBudget) -> int:
    total = inst.n**inst.N
    if total > budget.max_evaluations:
        raise BudgetExceeded(
            f"exhaustive search needs {inst.n}^{inst.N} = {total} evaluations, "
            f"budget is {budget.max_evaluations}"
        )
    return total


def _scan(inst: QPInstance, budget: SolverBudget, keep_all: bool):
    _check_budget(inst, budget)
    Q, c, levels = _vectorized_data(inst)
    deadline = None if budget.max_seconds is None else time.monotonic() + budget.max_seconds
    best_val, best_codes, evals = None, [], 0
    for start, idx in _index_chunks(inst.n, inst.N):
        vals = _objectives(levels[idx], Q, c)
        evals += idx.shape[0]
        m = vals.min()
        if best_val is None or m < best_val:
            best_val, best_codes = m, []
        if m == best_val:
            hits = np.flatnonzero(vals == m)
            if not keep_all:
                hits = hits[:1]
            if keep_all or not best_codes:
                best_codes.extend((start + int(h), idx[h]) for h in hits)
        if deadline is not None and time.monotonic() > deadline:
            raise BudgetExceeded(f"exhaustive search exceeded {budget.max_seconds} s")
    points = [tuple(inst.S[int(j)] for j in row) for _, row in best_codes]
    return _scalar(best_val, inst.domain), points, evals


def solve_brute_force(inst: QPInstance, budget: SolverBudget | None = None) -> SolveResult:
    """Exact global minimum by enumerating all ``n^N`` points.

    Ties go to the lexicographically smallest assignment.  Raises
    :class:`BudgetExceeded` before doing any work if ``n^N`` is over budget.
    """
    budget = budget or SolverBudget()
    val, points, evals = _scan(inst, budget, keep_all=False)
    w = points[0]
    exact = evaluate_objective(inst, w)
    if inst.domain == INT and exact != val:
        raise InvariantViolation(f"vectorized objective {val} != exact {exact}")
    return SolveResult(Assignment(w, exact), evals, 1, optimal_proven=True, solver="brute")


def brute_force_argmin_set(inst: QPInstance, budget: SolverBudget | None = None):
    """Return ``(minimum, minimizers)`` with minimizers in lexicographic order."""
    budget = budget or SolverBudget()
    val, points, _ = _scan(inst, budget, keep_all=True)
    return val, points


def iter_objectives(inst: QPInstance, budget: SolverBudget | None = None):
    """Yield ``(points, objectives)`` blocks covering all of ``S^N`` exactly."""
    _check_budget(inst, budget or SolverBudget())
    Q, c, levels = _vectorized_data(inst)
    for _, idx in _index_chunks(inst.n, inst.N):
        W = levels[idx]
        yield W, _objectives(W, Q, c)


# -- incremental machinery for the heuristics -------------------------------

def _as_lists(inst: QPInstance):
    if inst.domain == INT:
        Q = [[int(x) for x in row] for row in inst.Q]
        c = [int(x) for x in inst.c]
    else:
        Q = [[float(x) for x in row] for row in inst.Q]
        c = [float(x) for x in inst.c]
    return Q, c


def _gradient(Q, w):
    return [sum(qij * wj for qij, wj in zip(row, w)) for row in Q]


def _apply_move(Q, g, i, delta):
    for k, row in enumerate(Q):
        g[k] += row[i] * delta


def _checked_delta(inst, w, i, b, dl):
    w2 = list(w)
    w2[i] = b
    true = evaluate_objective(inst, w2) - evaluate_objective(inst, w)
    ok = true == dl if inst.domain == INT else math.isclose(true, dl, rel_tol=1e-9, abs_tol=1e-9)
    if not ok:
        raise InvariantViolation(f"incremental delta {dl} != recomputed {true} at coordinate {i}")


def random_assignment(inst: QPInstance, rng: np.random.Generator) -> tuple[int, ...]:
    idx = rng.integers(0, inst.n, size=inst.N)
    return tuple(inst.S[int(j)] for j in idx)


def solve_local_search(
    inst: QPInstance,
    init,
    seed: int = 0,
    *,
    max_sweeps: int = 10_000,
    check_deltas: bool = False,
) -> SolveResult:
    """Best-improvement coordinate descent until a sweep makes no strict progress.

    Each sweep visits the coordinates in a fresh seed-determined random order
    and sets each one to its best level with the others fixed.  The result
    is a 1-swap local optimum.  ``extra["trace"]`` holds the objective after
    every accepted move.
    """
    w = list(check_assignment(inst, init))
    rng = np.random.default_rng(seed)
    Q, c = _as_lists(inst)
    levels = list(inst.S)
    N = inst.N
    obj = evaluate_objective(inst, w)
    evals, sweeps = 1, 0
    trace = [obj]
    improved = True
    while improved and sweeps < max_sweeps:
        improved = False
        sweeps += 1
        g = _gradient(Q, w)  # refreshed per sweep so float error cannot accumulate
        for i in rng.permutation(N):
            i = int(i)
            a, qii, base = w[i], Q[i][i], 2 * g[i] + c[i]
            best_dl, best_b = 0, None
            for b in levels:
                if b == a:
                    continue
                delta = b - a
                dl = delta * (base + qii * delta)
                evals += 1
                if dl < best_dl:
                    best_dl, best_b = dl, b
            if best_b is None:
                continue
            if check_deltas:
                _checked_delta(inst, w, i, best_b, best_dl)
            _apply_move(Q, g, i, best_b - a)
            w[i] = best_b
            obj += best_dl
            trace.append(obj)
            improved = True
    final = evaluate_objective(inst, w)
    if inst.domain == INT and final != obj:
        raise InvariantViolation(f"tracked objective {obj} != recomputed {final}")
    return SolveResult(
        Assignment(tuple(w), final), evals, sweeps, seed=seed, solver="local",
        extra={"trace": trace},
    )


def solve_anneal(
    inst: QPInstance,
    schedule: AnnealSchedule | None = None,
    seed: int = 0,
    init=None,
    *,
    check_deltas: bool = False,
) -> SolveResult:
    """Simulated annealing with single-coordinate moves and geometric cooling.

    A move picks a coordinate uniformly and a new level uniformly among the
    other ``n - 1`` levels.  Returns the best assignment seen, not the final
    state.
    """
    schedule = schedule or default_schedule(inst)
    rng = np.random.default_rng(seed)
    w = list(check_assignment(inst, init) if init is not None else random_assignment(inst, rng))
    Q, c = _as_lists(inst)
    levels = list(inst.S)
    pos = [inst.S.index(x) for x in w]
    n, N = inst.n, inst.N
    g = _gradient(Q, w)
    obj = evaluate_objective(inst, w)
    best_obj, best_w = obj, tuple(w)
    evals, T = 1, schedule.t_initial
    alpha = schedule.cooling
    moves = schedule.moves_per_step
    for _ in range(schedule.steps):
        coords = rng.integers(0, N, size=moves)
        shifts = rng.integers(0, n - 1, size=moves)
        coins = rng.random(moves)
        for i, k, u in zip(coords.tolist(), shifts.tolist(), coins.tolist()):
            j = k if k < pos[i] else k + 1
            a, b = w[i], levels[j]
            delta = b - a
            dl = delta * (2 * g[i] + c[i] + Q[i][i] * delta)
            evals += 1
            if dl > 0 and u >= math.exp(-float(dl) / T):
                continue
            if check_deltas:
                _checked_delta(inst, w, i, b, dl)
            _apply_move(Q, g, i, delta)
            w[i], pos[i] = b, j
            obj += dl
            if obj < best_obj:
                best_obj, best_w = obj, tuple(w)
        T *= alpha
    return SolveResult(
        Assignment(best_w, evaluate_objective(inst, best_w)), evals,
        schedule.steps * moves, seed=seed, solver="anneal",
    )


INNER_SOLVERS = ("local", "anneal")


def solve_multi_start(
    inst: QPInstance,
    starts: int = 16,
    seed: int = 0,
    inner: str = "local",
    *,
    schedule: AnnealSchedule | None = None,
    workers: int = 1,
) -> SolveResult:
    """Run ``inner`` from ``starts`` independent seeds ``seed + k``; keep the best.

    Ties are broken by start index, so the result does not depend on
    ``workers``.
    """
    if starts < 1:
        raise ValueError("starts must be >= 1")
    if inner not in INNER_SOLVERS:
        raise ValueError(f"unknown inner solver {inner!r}; choose from {INNER_SOLVERS}")

    def run(k: int) -> SolveResult:
        s = seed + k
        if inner == "local":
            init = random_assignment(inst, np.random.default_rng(s))
            return solve_local_search(inst, init, s)
        return solve_anneal(inst, schedule, s)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(starts)))
    else:
        results = [run(k) for k in range(starts)]
    k_best = min(range(starts), key=lambda k: (results[k].objective, k))
    best = results[k_best]
    return SolveResult(
        best.best,
        sum(r.evaluations for r in results),
        sum(r.iterations for r in results),
        seed=seed,
        solver=f"multi:{inner}",
        extra={"best_start": k_best, "start_objectives": [r.objective for r in results]},
    )


SOLVERS = ("brute", "local", "anneal", "multi")


def solve(
    inst: QPInstance,
    solver: str = "multi",
    seed: int = 0,
    *,
    budget: SolverBudget | None = None,
    starts: int = 16,
    schedule: AnnealSchedule | None = None,
    inner: str = "local",
) -> SolveResult:
    """Dispatch by solver name; ``local`` starts from a seed-derived random point."""
    if solver == "brute":
        return solve_brute_force(inst, budget)
    if solver == "local":
        init = random_assignment(inst, np.random.default_rng(seed))
        return solve_local_search(inst, init, seed)
    if solver == "anneal":
        return solve_anneal(inst, schedule, seed)
    if solver == "multi":
        return solve_multi_start(inst, starts, seed, inner, schedule=schedule)
    raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")
