"""Echo state network front end: simulate, harvest states, train readouts.

The reservoir follows ``x(i+1) = tanh(W x(i) + W_in u(i+1))`` from ``x(0) = 0``
and the output is ``y(i) = w_out . x(i)``.  Training the readout under the
squared loss is the quadratic program with ``Q = X X^T`` and ``c = -2 X y``;
restricting ``w_out`` to a level set turns it into an n-ary QP that the
solvers in :mod:`nqp.solvers` handle.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .core import REAL, LevelSet, NQPError, QPInstance, evaluate_objective
from .solvers import SolverBudget, solve, solve_brute_force

log = logging.getLogger(__name__)

DEFAULT_WASHOUT = 50
_MAX_REGENERATIONS = 1000


class SingularSystem(NQPError, np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class EsnParams:
    W: np.ndarray
    W_in: np.ndarray
    spectral_radius: float
    input_scale: float
    seed: int
    regenerations: int = 0

    @property
    def N(self) -> int:
        return self.W.shape[0]

    @property
    def K_in(self) -> int:
        return self.W_in.shape[1]


@dataclass(frozen=True, eq=False)
class StateMatrix:
    """Harvested states, one column per time step after the washout."""

    X: np.ndarray
    y: np.ndarray | None = None
    washout: int = 0

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def L(self) -> int:
        return self.X.shape[1]

    def with_target(self, y_full) -> "StateMatrix":
        """Attach a target given over the full run; the washout part is dropped."""
        y_full = np.asarray(y_full, dtype=np.float64).reshape(-1)
        y = y_full[self.washout:] if y_full.size == self.L + self.washout else y_full
        if y.size != self.L:
            raise ValueError(f"target has {y_full.size} samples, states have {self.L} (+{self.washout} washout)")
        return StateMatrix(self.X, y, self.washout)

    def rows(self, k: int) -> "StateMatrix":
        """Keep only the first ``k`` neurons."""
        return StateMatrix(self.X[:k], self.y, self.washout)


@dataclass(frozen=True, eq=False)
class ReadoutWeights:
    w_out: np.ndarray
    nmse: float


@dataclass(frozen=True, eq=False)
class DiscreteTraining:
    """Result of fitting a readout restricted to a level set.

    ``scale`` multiplies the level-set weights to give the effective readout
    (``predictions = scale * w_levels . x``).  ``gap`` is the excess squared
    error of the discrete readout over the unconstrained least-squares
    optimum, i.e. the difference of the two QP objectives.
    """

    discrete: ReadoutWeights
    w_levels: tuple
    scale: float
    continuous: ReadoutWeights
    gap: float
    qp: QPInstance
    qp_objective: float
    solver: str
    extra: dict = field(default_factory=dict)


def radius_of(W: np.ndarray) -> float:
    """Largest eigenvalue magnitude (dense LAPACK eigenvalues)."""
    return float(np.max(np.abs(np.linalg.eigvals(W)))) if W.size else 0.0


def make_esn(
    N: int,
    K_in: int = 1,
    seed: int = 0,
    spectral_radius: float = 0.9,
    input_scale: float = 0.5,
    density: float = 0.1,
) -> EsnParams:
    """Random sparse reservoir rescaled to the requested spectral radius.

    Recurrent entries are nonzero with probability ``density`` and uniform in
    ``[-1, 1]``; input weights are uniform in ``[-input_scale, input_scale]``.
    A draw with zero spectral radius is discarded and redrawn from the
    sub-stream ``(seed, attempt)``.
    """
    if N < 1 or K_in < 1:
        raise ValueError("need N >= 1 and K_in >= 1")
    if spectral_radius <= 0 or not (0 < density <= 1):
        raise ValueError("need spectral_radius > 0 and 0 < density <= 1")
    target = spectral_radius
    for attempt in range(_MAX_REGENERATIONS):
        rng = np.random.default_rng(seed if attempt == 0 else [seed, attempt])
        mask = rng.random((N, N)) < density
        W = np.where(mask, rng.uniform(-1.0, 1.0, (N, N)), 0.0)
        rho = radius_of(W)
        if rho > 0:
            break
        log.info("reservoir draw %d has zero spectral radius; redrawing", attempt)
    else:
        raise NQPError(f"no reservoir with nonzero spectral radius after {_MAX_REGENERATIONS} draws")
    if attempt:
        log.warning("make_esn: regenerated reservoir %d time(s) (seed %d)", attempt, seed)
    W = W * (target / rho)
    W_in = rng.uniform(-input_scale, input_scale, (N, K_in))
    W.flags.writeable = False
    W_in.flags.writeable = False
    return EsnParams(W, W_in, float(target), float(input_scale), seed, attempt)


def _as_inputs(u, K_in: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 1:
        u = u[:, None]
    if u.ndim != 2 or u.shape[1] != K_in:
        raise ValueError(f"input has shape {u.shape}, reservoir expects K_in = {K_in}")
    return u


def drive_reservoir(esn: EsnParams, u, washout: int = DEFAULT_WASHOUT, x0=None) -> StateMatrix:
    """Run the reservoir over ``u`` and keep the states after ``washout``.

    ``u[k]`` is the input at time ``k + 1``; column ``j`` of the result is the
    state ``x(washout + j + 1)``.
    """
    u = _as_inputs(u, esn.K_in)
    L_total = u.shape[0]
    if not (0 <= washout < L_total):
        raise ValueError(f"need 0 <= washout < {L_total}, got {washout}")
    x = np.zeros(esn.N) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    drive = u @ esn.W_in.T
    X = np.empty((esn.N, L_total))
    for k in range(L_total):
        x = np.tanh(esn.W @ x + drive[k])
        X[:, k] = x
    return StateMatrix(X[:, washout:].copy(), None, washout)


def build_regression_qp(states: StateMatrix, S: LevelSet | None = None) -> QPInstance:
    """``Q = X X^T``, ``c = -2 X y`` so that ``w^T Q w + w^T c = ||w^T X - y||^2 - ||y||^2``."""
    if states.y is None:
        raise ValueError("states have no target attached")
    X, y = states.X, states.y
    Q = X @ X.T
    Q = 0.5 * (Q + Q.T)
    c = -2.0 * (X @ y)
    S = S if S is not None else LevelSet((-1, 0, 1))
    return QPInstance(Q, c, S, REAL, psd_declared=True)


def nmse(pred, target) -> float:
    """Mean squared error divided by the (population) variance of ``target``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape or target.size < 2:
        raise ValueError("nmse needs two equal-length vectors with at least 2 samples")
    var = float(np.var(target))
    if var == 0:
        raise ValueError("target has zero variance")
    return float(np.mean((pred - target) ** 2) / var)


def solve_continuous_ridge(states: StateMatrix, ridge: float = 0.0) -> ReadoutWeights:
    """Solve ``(X X^T + ridge I) w = X y`` with a Cholesky factorization."""
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    X, y = states.X, states.y
    A = X @ X.T + ridge * np.eye(states.N)
    A = 0.5 * (A + A.T)
    b = X @ y
    if ridge == 0:
        ev = np.linalg.eigvalsh(A)
        if ev[0] <= 1e-10 * ev[-1]:
            raise SingularSystem(f"X X^T is numerically singular (eigenvalues {ev[0]:.3g} .. {ev[-1]:.3g})")
    try:
        w = linalg.cho_solve(linalg.cho_factor(A), b)
    except linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    resid = np.linalg.norm(A @ w - b)
    if resid > 1e-8 * max(np.linalg.norm(b), np.finfo(float).tiny):
        raise SingularSystem(f"ridge solve residual {resid:.3g} too large")
    return ReadoutWeights(w, nmse(w @ X, y))


def least_squares_rss(states: StateMatrix) -> float:
    """Smallest achievable ``||w^T X - y||^2`` over real ``w``."""
    w, *_ = np.linalg.lstsq(states.X.T, states.y, rcond=None)
    r = w @ states.X - states.y
    return float(r @ r)


def train_discrete_readout(
    esn: EsnParams,
    u,
    y,
    washout: int,
    S: LevelSet,
    solver: str = "multi",
    seed: int = 0,
    *,
    ridge: float = 1e-4,
    starts: int = 16,
    inner: str = "anneal",
    budget: SolverBudget | None = None,
    states: StateMatrix | None = None,
) -> DiscreteTraining:
    """Fit a readout whose weights are ``scale * s`` with every ``s`` in ``S``.

    The states are multiplied by ``scale = max|w_ridge| / max|S|`` before the
    QP is built, so that the continuous optimum's largest weight lands on the
    largest level.  Pass ``states`` to reuse an already driven reservoir.

    Reservoir states are strongly correlated, which makes ``X X^T``
    ill-conditioned; single-coordinate descent stalls on such problems, so
    the multi-start solver defaults to annealing restarts here.
    """
    if states is None:
        states = drive_reservoir(esn, u, washout).with_target(y)
    elif states.y is None:
        states = states.with_target(y)
    continuous = solve_continuous_ridge(states, ridge)
    peak = float(np.max(np.abs(continuous.w_out)))
    scale = peak / S.max_abs if peak > 0 and S.max_abs > 0 else 1.0
    scaled = StateMatrix(states.X * scale, states.y, states.washout)
    qp = build_regression_qp(scaled, S)
    result = solve(qp, solver, seed, budget=budget, starts=starts, inner=inner)
    w_levels = result.w
    w_eff = scale * np.asarray(w_levels, dtype=np.float64)
    pred = w_eff @ states.X
    rss = float((pred - states.y) @ (pred - states.y))
    gap = rss - least_squares_rss(states)
    return DiscreteTraining(
        discrete=ReadoutWeights(w_eff, nmse(pred, states.y)),
        w_levels=w_levels,
        scale=scale,
        continuous=continuous,
        gap=gap,
        qp=qp,
        qp_objective=float(result.objective),
        solver=result.solver,
        extra={"evaluations": result.evaluations, "optimal_proven": result.optimal_proven},
    )


def delay_task(length: int, tau: int = 2, seed: int = 0):
    """Inputs uniform in [-0.5, 0.5]; target ``y(i) = u(i - tau)`` (zero before)."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(-0.5, 0.5, length)
    y = np.zeros(length)
    y[tau:] = u[: length - tau]
    return u, y


def sine_task(length: int, seed: int = 0, noise: float = 0.05, omega: float = 0.2):
    """Recover a clean sine from a noisy copy of it."""
    rng = np.random.default_rng(seed)
    clean = np.sin(omega * np.arange(1, length + 1))
    return clean + noise * rng.standard_normal(length), clean


def qp_objective(qp: QPInstance, w) -> float:
    return float(evaluate_objective(qp, w))


def truncated_comparison(
    esn: EsnParams,
    u,
    y,
    washout: int,
    S: LevelSet,
    neurons: int = 12,
    seed: int = 0,
    starts: int = 16,
    ridge: float = 1e-4,
):
    """Brute-force vs multi-start readout on the first ``neurons`` reservoir units.

    Returns ``(brute_objective, best_heuristic_objective)`` on the same scaled
    QP, the heuristic being the better of multi-start local search and
    multi-start annealing.
    """
    states = drive_reservoir(esn, u, washout).with_target(y).rows(neurons)
    runs = [
        train_discrete_readout(esn, u, y, washout, S, "multi", seed, ridge=ridge,
                               starts=starts, inner=inner, states=states)
        for inner in ("local", "anneal")
    ]
    exact = solve_brute_force(runs[0].qp)
    return exact.objective, min(r.qp_objective for r in runs)
