"""Instance types, validation and objective evaluation for n-ary quadratic programs.

An instance asks for ``min w^T Q w + w^T c`` over ``w in S^N`` where ``S`` is a
small ordered set of integers.  Integer-domain instances keep their
coefficients as Python ints (numpy object arrays) so that every objective
value is exact; real-domain instances use float64.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

INT = "int"
REAL = "real"
DOMAINS = (INT, REAL)

# Above this N the exact principal-minor PSD check is replaced by an eigenvalue estimate.
EXACT_PSD_MAX_N = 12
PSD_NUMERIC_RTOL = 1e-8


class NQPError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatch(NQPError, ValueError):
    pass


class NotInS(NQPError, ValueError):
    pass


class InvalidInstance(NQPError, ValueError):
    pass


@dataclass(frozen=True)
class LevelSet:
    """Ordered set of admissible integer weight values ``s_1 < ... < s_n``.

    Construction does not reject bad input so that :func:`validate_instance`
    can report it; use :meth:`of` for a checked constructor.
    """

    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))

    @classmethod
    def of(cls, values: Iterable[int]) -> "LevelSet":
        ls = cls(tuple(values))
        problems = ls.problems()
        if problems:
            raise InvalidInstance("; ".join(problems))
        return ls

    def problems(self) -> list[str]:
        out = []
        if len(self.values) < 2:
            out.append(f"|S| = {len(self.values)} < 2")
        for j in range(len(self.values) - 1):
            if not self.values[j] < self.values[j + 1]:
                out.append(
                    f"S not strictly increasing at position {j}: "
                    f"{self.values[j]} >= {self.values[j + 1]}"
                )
                break
        return out

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[int]:
        return iter(self.values)

    def __getitem__(self, j: int) -> int:
        return self.values[j]

    def __contains__(self, v) -> bool:
        return v in self.values

    def index(self, v) -> int:
        return self.values.index(v)

    @property
    def max_abs(self) -> int:
        return max(abs(v) for v in self.values)

    def __str__(self) -> str:
        return "{" + ", ".join(map(str, self.values)) + "}"


def _int_array(a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise InvalidInstance("integer domain requires integer coefficients")
    elif arr.dtype.kind not in "iuO":
        raise InvalidInstance(f"unsupported coefficient dtype {arr.dtype}")
    out = np.empty(arr.shape, dtype=object)
    flat = out.reshape(-1)
    for k, x in enumerate(arr.reshape(-1)):
        if isinstance(x, (float, np.floating)):
            flat[k] = int(x)
        else:
            ix = int(x)
            if ix != x:
                raise InvalidInstance("integer domain requires integer coefficients")
            flat[k] = ix
    return out


@dataclass(frozen=True, eq=False)
class QPInstance:
    """Minimize ``w^T Q w + w^T c`` subject to ``w in S^N``.

    ``Q`` and ``c`` are stored read-only; in the ``"int"`` domain they are
    object arrays of Python ints, in the ``"real"`` domain float64 arrays.
    """

    Q: np.ndarray
    c: np.ndarray
    S: LevelSet
    domain: str = INT
    psd_declared: bool = True

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise InvalidInstance(f"unknown domain {self.domain!r}")
        S = self.S if isinstance(self.S, LevelSet) else LevelSet(tuple(self.S))
        if self.domain == INT:
            Q, c = _int_array(self.Q), _int_array(self.c)
        else:
            Q = np.array(self.Q, dtype=np.float64)
            c = np.array(self.c, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise DimensionMismatch(f"Q must be square, got shape {Q.shape}")
        if c.shape != (Q.shape[0],):
            raise DimensionMismatch(f"c has shape {c.shape}, expected ({Q.shape[0]},)")
        Q.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "S", S)

    @property
    def N(self) -> int:
        return self.Q.shape[0]

    @property
    def n(self) -> int:
        return len(self.S)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QPInstance):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.psd_declared == other.psd_declared
            and self.S == other.S
            and self.Q.shape == other.Q.shape
            and bool(np.all(self.Q == other.Q))
            and bool(np.all(self.c == other.c))
        )

    __hash__ = None


@dataclass(frozen=True)
class Assignment:
    w: tuple
    objective: object  # int for the integer domain, float for real

    def as_array(self) -> np.ndarray:
        return np.array(self.w)


@dataclass(frozen=True)
class SolveResult:
    best: Assignment
    evaluations: int
    iterations: int
    optimal_proven: bool = False
    seed: int | None = None
    solver: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def objective(self):
        return self.best.objective

    @property
    def w(self) -> tuple:
        return self.best.w


@dataclass(frozen=True)
class Issue:
    kind: str
    detail: str
    severity: str = "error"  # or "warning"

    def __str__(self) -> str:
        return f"{self.severity.upper()} {self.kind}: {self.detail}"


def bareiss_det(M: Sequence[Sequence[int]]) -> int:
    """Exact determinant of an integer matrix (fraction-free elimination)."""
    A = [list(row) for row in M]
    n = len(A)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for r in range(k + 1, n):
                if A[r][k] != 0:
                    A[k], A[r] = A[r], A[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            row_i, row_k = A[i], A[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * A[n - 1][n - 1]


def first_negative_principal_minor(Q) -> tuple[tuple[int, ...], int] | None:
    """Return ``(indices, value)`` of the first negative principal minor, or None.

    Subsets are scanned by increasing size, then lexicographically.
    """
    N = len(Q)
    rows = [[int(x) for x in r] for r in Q]
    for k in range(1, N + 1):
        for idx in itertools.combinations(range(N), k):
            det = bareiss_det([[rows[i][j] for j in idx] for i in idx])
            if det < 0:
                return idx, det
    return None


def _first_asymmetry(Q: np.ndarray) -> tuple[int, int] | None:
    N = Q.shape[0]
    for i in range(N):
        for j in range(i + 1, N):
            if Q[i, j] != Q[j, i]:
                return i, j
    return None


def validate_instance(inst: QPInstance) -> list[Issue]:
    """Report every violated instance invariant; an empty list means valid."""
    issues = []
    pos = _first_asymmetry(inst.Q)
    if pos is not None:
        i, j = pos
        issues.append(
            Issue("asymmetry", f"Q[{i}][{j}] = {inst.Q[i, j]} != Q[{j}][{i}] = {inst.Q[j, i]}")
        )
    for p in inst.S.problems():
        issues.append(Issue("level-set", p))
    if inst.psd_declared and pos is None:
        issues.extend(_psd_issues(inst))
    return issues


def _psd_issues(inst: QPInstance) -> list[Issue]:
    if inst.N == 0:
        return []
    if inst.domain == INT and inst.N <= EXACT_PSD_MAX_N:
        bad = first_negative_principal_minor(inst.Q)
        if bad is None:
            return []
        idx, det = bad
        return [Issue("psd", f"principal minor on rows {list(idx)} equals {det} < 0")]
    Qf = np.asarray(inst.Q, dtype=np.float64)
    lam_min = float(np.linalg.eigvalsh(Qf)[0])
    scale = float(np.abs(Qf).sum(axis=1).max())
    if lam_min < -PSD_NUMERIC_RTOL * scale:
        return [
            Issue(
                "psd",
                f"smallest eigenvalue estimate {lam_min:.6g} < -{PSD_NUMERIC_RTOL:g}*||Q||inf",
                severity="warning",
            )
        ]
    return []


def errors_only(issues: Iterable[Issue]) -> list[Issue]:
    return [i for i in issues if i.severity == "error"]


def check_assignment(inst: QPInstance, w) -> tuple:
    w = tuple(w)
    if len(w) != inst.N:
        raise DimensionMismatch(f"assignment has length {len(w)}, expected {inst.N}")
    for i, x in enumerate(w):
        if x not in inst.S:
            raise NotInS(f"w[{i}] = {x} is not in S = {inst.S}")
    return tuple(int(x) for x in w)


def evaluate_objective(inst: QPInstance, w):
    """Return ``w^T Q w + w^T c``; exact (a Python int) in the integer domain."""
    w = check_assignment(inst, w)
    if inst.domain == INT:
        wv = np.array(w, dtype=object)
        return int(wv @ inst.Q @ wv + wv @ inst.c)
    wv = np.array(w, dtype=np.float64)
    return float(wv @ inst.Q @ wv + wv @ inst.c)


def make_assignment(inst: QPInstance, w) -> Assignment:
    w = check_assignment(inst, w)
    return Assignment(w, evaluate_objective(inst, w))


def generate_random_instance(N: int, S: LevelSet, seed: int, entry_bound: int = 5) -> QPInstance:
    """Random integer instance with ``Q = A^T A`` (PSD) and ``c`` in ``[-2b^2, 2b^2]``."""
    if N < 1 or entry_bound < 1:
        raise ValueError("need N >= 1 and entry_bound >= 1")
    rng = np.random.default_rng(seed)
    A = rng.integers(-entry_bound, entry_bound + 1, size=(N, N)).astype(object)
    cb = 2 * entry_bound * entry_bound
    c = rng.integers(-cb, cb + 1, size=N).astype(object)
    Q = A.T @ A
    return QPInstance(Q, c, S if isinstance(S, LevelSet) else LevelSet.of(S), INT, True)


def with_level_set(inst: QPInstance, S: LevelSet) -> QPInstance:
    return QPInstance(inst.Q, inst.c, S, inst.domain, inst.psd_declared)


def random_level_set(n: int, rng: np.random.Generator, lo: int = -10, hi: int = 10) -> LevelSet:
    """``n`` distinct integers drawn uniformly from ``[lo, hi]``, sorted."""
    values = rng.choice(np.arange(lo, hi + 1), size=n, replace=False)
    return LevelSet(tuple(sorted(int(v) for v in values)))
