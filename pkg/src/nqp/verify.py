"""Exhaustive checks that a reduction is sound, used by the CLI and the test suite."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import LevelSet, QPInstance, evaluate_objective
from .reduction import (
    NotBinary,
    ReductionCertificate,
    coefficient_bound,
    lift_solution,
    penalty_G,
    reduce_ubqp_to_unqp,
)
from .solvers import SolverBudget, brute_force_argmin_set, iter_objectives


@dataclass
class ReductionCheck:
    ubqp_min: int
    reduced_min: int
    ubqp_argmin: list
    reduced_argmin: list
    decoded_argmin: list
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_soundness(ubqp: QPInstance, reduced: QPInstance, cert: ReductionCertificate,
                    budget: SolverBudget | None = None) -> ReductionCheck:
    """Brute-force both sides and compare argmin sets exactly.

    A reduced minimizer using a level outside ``{s1, s2}`` is recorded as a
    failure rather than raised, so callers can report all problems at once.
    """
    u_min, u_arg = brute_force_argmin_set(ubqp, budget)
    r_min, r_arg = brute_force_argmin_set(reduced, budget)
    failures, decoded = [], []
    for t in r_arg:
        try:
            decoded.append(lift_solution(t, cert.s1, cert.s2))
        except NotBinary as exc:
            failures.append(f"reduced minimizer {t} is not binary: {exc}")
    if not failures and sorted(decoded) != sorted(u_arg):
        failures.append(f"decoded argmin {sorted(decoded)} != UBQP argmin {sorted(u_arg)}")
    if not failures and cert.scale * u_min != r_min + cert.offset:
        failures.append(
            f"objective mismatch: scale*ubqp_min = {cert.scale * u_min}, reduced_min + offset = {r_min + cert.offset}"
        )
    return ReductionCheck(u_min, r_min, u_arg, r_arg, decoded, failures)


def binary_points(N: int, s1: int, s2: int):
    return itertools.product((s1, s2), repeat=N)


def check_objective_equivalence(ubqp: QPInstance, reduced: QPInstance, cert: ReductionCertificate) -> list[str]:
    """``scale * ubqp(decode(t)) == reduced(t) + offset`` for every binary ``t``."""
    failures = []
    for t in binary_points(ubqp.N, cert.s1, cert.s2):
        lhs = cert.scale * evaluate_objective(ubqp, lift_solution(t, cert.s1, cert.s2))
        rhs = evaluate_objective(reduced, t) + cert.offset
        if lhs != rhs:
            failures.append(f"t={t}: {lhs} != {rhs}")
    return failures


def separation_margin(reduced: QPInstance, cert: ReductionCertificate,
                      budget: SolverBudget | None = None) -> tuple[object, object]:
    """Return ``(max over binary points, min over non-binary points)`` of the reduced objective.

    The reduced objective is ``scale`` times the penalized objective, so the
    strict inequality ``min_nonbinary > max_binary`` transfers unchanged.
    """
    s1, s2 = cert.s1, cert.s2
    max_bin, min_non = None, None
    for W, vals in iter_objectives(reduced, budget):
        is_bin = np.all((W == s1) | (W == s2), axis=1)
        if is_bin.any():
            m = vals[is_bin].max()
            max_bin = m if max_bin is None or m > max_bin else max_bin
        if (~is_bin).any():
            m = vals[~is_bin].min()
            min_non = m if min_non is None or m < min_non else min_non
    return max_bin, min_non


def check_strict_separation(reduced: QPInstance, cert: ReductionCertificate,
                            budget: SolverBudget | None = None) -> list[str]:
    max_bin, min_non = separation_margin(reduced, cert, budget)
    if min_non is not None and not min_non > max_bin:
        return [f"min over non-binary points {min_non} <= max over binary points {max_bin}"]
    return []


def check_penalty_dichotomy(S: LevelSet, N: int) -> list[str]:
    """Zero penalty exactly on ``{s1, s2}^N``, at least ``L_G`` elsewhere."""
    s1, s2 = S[0], S[1]
    L_G = (S[2] - s1) * (S[2] - s2) if len(S) >= 3 else None
    failures = []
    for t in itertools.product(S.values, repeat=N):
        g = penalty_G(t, s1, s2)
        binary = all(x in (s1, s2) for x in t)
        if binary and g != 0:
            failures.append(f"t={t}: binary point with penalty {g}")
        elif not binary and (g <= 0 or g < L_G):
            failures.append(f"t={t}: non-binary point with penalty {g} (L_G = {L_G})")
    return failures


def max_magnitude(inst: QPInstance) -> int:
    return max(max(abs(int(x)) for x in inst.Q.flat), max(abs(int(x)) for x in inst.c))


def check_coefficient_bound(ubqp: QPInstance, reduced: QPInstance) -> list[str]:
    bound = coefficient_bound(max_magnitude(ubqp), ubqp.N, reduced.S.max_abs)
    worst = max_magnitude(reduced)
    if worst > bound:
        return [f"reduced coefficient magnitude {worst} exceeds bound {bound}"]
    return []


def verify_reduction(ubqp: QPInstance, S: LevelSet, *, exhaustive: bool = False,
                     budget: SolverBudget | None = None):
    """Reduce and run every check; returns ``(reduced, certificate, soundness, failures)``."""
    reduced, cert = reduce_ubqp_to_unqp(ubqp, S)
    check = check_soundness(ubqp, reduced, cert, budget)
    failures = list(check.failures)
    failures += check_coefficient_bound(ubqp, reduced)
    if exhaustive:
        failures += check_objective_equivalence(ubqp, reduced, cert)
        if len(S) >= 3:
            failures += check_strict_separation(reduced, cert, budget)
    return reduced, cert, check, failures
