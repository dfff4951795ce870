"""Polynomial-time reduction from binary (UBQP) to n-ary (UNQP) quadratic programs.

A UBQP instance ``min v^T Q v + v^T c, v in {0,1}^N`` is first rewritten over
the two smallest levels ``{s1, s2}`` of ``S`` via ``v = (t - s1)/d`` with
``d = s2 - s1``.  When ``|S| >= 3`` the penalty ``M * sum_i (t_i - s1)(t_i - s2)``
is added, which vanishes on ``{s1, s2}^N`` and is at least ``M * L_G``
elsewhere.  ``M`` is sized from bounds on the two-value objective so that
every point using a level beyond ``s2`` scores strictly worse than every
binary point.  The whole objective is multiplied by ``d^2`` so the emitted
instance has integer coefficients.

All intermediate quantities are exact (``int`` / ``fractions.Fraction``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    INT,
    InvalidInstance,
    LevelSet,
    NQPError,
    QPInstance,
    errors_only,
    validate_instance,
)


class NotBinary(NQPError, ValueError):
    """A reduced-instance point uses a level outside ``{s1, s2}``."""


def _frac_array(a) -> np.ndarray:
    arr = np.asarray(a, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    out.reshape(-1)[:] = [Fraction(x) for x in arr.reshape(-1)]
    return out


def _normalize(x):
    """Fractions with unit denominator become ints."""
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else x


@dataclass(frozen=True, eq=False)
class TwoValueProblem:
    """``min t^T Qt t + t^T ct + D`` over ``t in {s1, s2}^N`` (exact rationals)."""

    Q_tilde: np.ndarray
    c_tilde: np.ndarray
    D: Fraction
    s1: int
    s2: int

    @property
    def d(self) -> int:
        return self.s2 - self.s1

    @property
    def N(self) -> int:
        return self.Q_tilde.shape[0]

    def objective(self, t, with_offset: bool = True) -> Fraction:
        tv = _frac_array(t)
        val = tv @ self.Q_tilde @ tv + tv @ self.c_tilde
        return Fraction(val + (self.D if with_offset else 0))


@dataclass(frozen=True)
class ReductionCertificate:
    """Every quantity needed to decode and re-verify a reduction.

    ``offset`` reconciles objective values: for every ``t in {s1, s2}^N``,
    ``scale * ubqp(decode(t)) == reduced(t) + offset``.  Penalty fields are
    ``None`` when ``|S| = 2`` (no penalty is needed).
    """

    s1: int
    s2: int
    scale: int
    D: Fraction
    offset: int
    lam: Fraction | None = None
    s_star: int | None = None
    s_2star: int | None = None
    K: Fraction | None = None
    K_prime: Fraction | None = None
    L_G: int | None = None
    L_H: Fraction | None = None
    M: int | None = None

    @property
    def d(self) -> int:
        return self.s2 - self.s1

    def decode(self, t) -> tuple[int, ...]:
        return lift_solution(t, self.s1, self.s2)

    def items(self) -> list[tuple[str, object]]:
        """Ordered key/value pairs for the text serialization."""
        keys = [
            ("s1", self.s1), ("s2", self.s2), ("d", self.d), ("scale", self.scale),
            ("D", self.D), ("offset", self.offset), ("Lambda", self.lam),
            ("s_star", self.s_star), ("s_2star", self.s_2star), ("K", self.K),
            ("K_prime", self.K_prime), ("L_G", self.L_G), ("L_H", self.L_H), ("M", self.M),
        ]
        return [(k, v) for k, v in keys if v is not None]


def gershgorin_bound(Q) -> Fraction | int:
    """Max absolute row sum of a symmetric matrix.

    Every eigenvalue lies in some Gershgorin disc, so the result bounds the
    spectral radius and in particular ``lambda_max``.
    """
    Q = np.asarray(Q, dtype=object)
    N = Q.shape[0]
    for i in range(N):
        for j in range(i + 1, N):
            if Q[i, j] != Q[j, i]:
                raise InvalidInstance(f"gershgorin_bound needs a symmetric matrix; Q[{i}][{j}] != Q[{j}][{i}]")
    if N == 0:
        return 0
    return _normalize(max(sum(abs(Fraction(x)) for x in row) for row in Q))


def shift_scale_transform(ubqp: QPInstance, s1: int, s2: int) -> TwoValueProblem:
    """Rewrite a {0,1} problem over the levels ``{s1, s2}``.

    With ``v = (t - s1*1)/d`` the UBQP objective becomes
    ``t^T (Q/d^2) t + t^T (c/d - 2 Q s1*1 / d^2) + D`` where
    ``D = s1^2 1^T Q 1 / d^2 - s1 1^T c / d``.
    """
    s1, s2 = int(s1), int(s2)
    if s1 >= s2:
        raise ValueError(f"need s1 < s2, got s1={s1}, s2={s2}")
    d = s2 - s1
    d2 = d * d
    Q = _frac_array(ubqp.Q)
    c = _frac_array(ubqp.c)
    s1vec = np.full(ubqp.N, Fraction(s1), dtype=object)
    Q_tilde = Q / d2
    c_tilde = c / d - 2 * (Q @ s1vec) / d2
    D = Fraction(s1vec @ Q @ s1vec) / d2 - Fraction(s1vec @ c) / d
    Q_tilde.flags.writeable = False
    c_tilde.flags.writeable = False
    return TwoValueProblem(Q_tilde, c_tilde, D, s1, s2)


def penalty_G(t: Sequence[int], s1: int, s2: int) -> int:
    """``sum_i (t_i - s1)(t_i - s2)``; zero exactly when every ``t_i`` is s1 or s2."""
    return sum((int(x) - s1) * (int(x) - s2) for x in t)


def _largest_abs(values: Sequence[int]) -> int:
    # ties between v and -v go to the negative value
    return max(values, key=lambda v: (abs(v), -v))


def penalty_lower_bound(S: LevelSet) -> int:
    """Smallest per-coordinate penalty of any level beyond ``s2``."""
    s1, s2, s3 = S[0], S[1], S[2]
    L_G = (s3 - s1) * (s3 - s2)
    # levels are sorted, so s3 gives the smallest product; keep that an explicit check
    assert L_G == min((s - s1) * (s - s2) for s in S.values[2:])
    return L_G


def compute_penalty_params(S: LevelSet, two_value: TwoValueProblem) -> ReductionCertificate:
    """Size the penalty constant ``M`` for a two-value problem embedded in ``S``.

    ``K`` bounds the two-value objective on ``{s1, s2}^N`` from above, ``K'``
    bounds its magnitude on all of ``S^N``, and ``L_G`` is the least penalty
    of a non-binary point.  ``M`` is the smallest integer strictly above
    ``(K + K') / L_G``.
    """
    if len(S) < 3:
        raise ValueError("penalty parameters need |S| >= 3")
    s1, s2 = two_value.s1, two_value.s2
    if (S[0], S[1]) != (s1, s2):
        raise ValueError(f"s1, s2 = {s1}, {s2} are not the two smallest levels of {S}")
    N = two_value.N
    lam = Fraction(gershgorin_bound(two_value.Q_tilde))
    abs_c = sum(abs(x) for x in two_value.c_tilde)

    s_star = _largest_abs([s1, s2])
    K = lam * N * s_star * s_star + abs_c * abs(s_star)
    s_2star = _largest_abs(list(S))
    K_prime = lam * N * s_2star * s_2star + abs_c * abs(s_2star)
    L_H = -K_prime
    L_G = penalty_lower_bound(S)
    M = math.floor((K - L_H) / L_G) + 1

    d = two_value.d
    scale = d * d
    offset = scale * two_value.D + scale * M * N * s1 * s2
    return ReductionCertificate(
        s1=s1, s2=s2, scale=scale, D=_normalize(two_value.D), offset=int(offset),
        lam=_normalize(lam), s_star=s_star, s_2star=s_2star, K=_normalize(K),
        K_prime=_normalize(K_prime), L_G=L_G, L_H=_normalize(L_H), M=M,
    )


def reduce_ubqp_to_unqp(
    ubqp: QPInstance, S: LevelSet, *, allow_indefinite: bool = False
) -> tuple[QPInstance, ReductionCertificate]:
    """Map a UBQP instance to an integer UNQP instance over ``S``.

    Every exact minimizer of the result lies in ``{s1, s2}^N`` and decodes
    (``s1 -> 0``, ``s2 -> 1``) to a minimizer of ``ubqp``.

    ``allow_indefinite`` accepts a non-PSD ``Q``; the bounds stay valid
    because the Gershgorin bound covers ``|lambda_min|`` as well.
    """
    if ubqp.domain != INT:
        raise InvalidInstance("reduction needs an integer-domain UBQP instance")
    if not isinstance(S, LevelSet):
        S = LevelSet.of(S)
    problems = S.problems()
    if problems:
        raise InvalidInstance("; ".join(problems))
    if ubqp.S.values != (0, 1):
        raise InvalidInstance(f"UBQP instance must have S = {{0, 1}}, got {ubqp.S}")
    issues = errors_only(validate_instance(ubqp))
    if allow_indefinite:
        issues = [i for i in issues if i.kind != "psd"]
    if issues:
        raise InvalidInstance("; ".join(map(str, issues)))
    if not ubqp.psd_declared and not allow_indefinite:
        raise InvalidInstance("UBQP instance must declare Q positive semi-definite")

    s1, s2 = S[0], S[1]
    d = s2 - s1
    N = ubqp.N
    Q = np.asarray(ubqp.Q, dtype=object)
    c = np.asarray(ubqp.c, dtype=object)
    row_sums = Q @ np.ones(N, dtype=object)
    two_value = shift_scale_transform(ubqp, s1, s2)

    if len(S) == 2:
        Q_out = Q.copy()
        c_out = d * c - 2 * s1 * row_sums
        scale = d * d
        cert = ReductionCertificate(
            s1=s1, s2=s2, scale=scale, D=_normalize(two_value.D),
            offset=int(scale * two_value.D),
        )
    else:
        cert = compute_penalty_params(S, two_value)
        dM = cert.scale * cert.M
        Q_out = Q + dM * np.eye(N, dtype=int).astype(object)
        c_out = d * c - 2 * s1 * row_sums - dM * (s1 + s2) * np.ones(N, dtype=object)

    out = QPInstance(Q_out, c_out, S, INT, psd_declared=ubqp.psd_declared)
    return out, cert


def lift_solution(t: Sequence[int], s1: int, s2: int) -> tuple[int, ...]:
    """Decode ``s1 -> 0``, ``s2 -> 1``; raise :class:`NotBinary` on any other level."""
    v = []
    for i, x in enumerate(t):
        if x == s1:
            v.append(0)
        elif x == s2:
            v.append(1)
        else:
            raise NotBinary(f"t[{i}] = {x} is not in {{{s1}, {s2}}}")
    return tuple(v)


def coefficient_bound(max_input: int, N: int, max_abs_level: int) -> int:
    """Upper bound on ``|coefficient|`` of any reduced instance.

    With ``a`` the largest input magnitude, ``sigma = max |S|`` and
    ``d <= 2 sigma``: ``Lambda <= N a / d^2``, ``|c~_i| <= a + 2 N sigma a``,
    so ``K, K' <= 4 N^2 a sigma^2`` and ``M <= 4 N^2 a sigma^2 + 1`` (``L_G >= 2``).
    Substituting into ``Q + d^2 M I`` and ``d c - 2 s1 Q 1 - d^2 M (s1+s2) 1``
    gives the two terms below.  The bit length is therefore
    ``O(log a + log N + log sigma)``, polynomial in the input size.
    """
    a, s = max_input, max(max_abs_level, 1)
    bound_q = a + 4 * s**2 + 16 * N**2 * a * s**4
    bound_c = 2 * s * a + 2 * s * N * a + 8 * s**3 + 32 * N**2 * a * s**5
    return max(bound_q, bound_c)
