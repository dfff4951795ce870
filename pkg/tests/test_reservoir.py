import math

import numpy as np
import pytest
from scipy.sparse.linalg import eigs

from nqp.core import LevelSet, validate_instance
from nqp.reservoir import (
    SingularSystem,
    StateMatrix,
    build_regression_qp,
    delay_task,
    drive_reservoir,
    make_esn,
    nmse,
    sine_task,
    solve_continuous_ridge,
    train_discrete_readout,
)


def arnoldi_radius(W):
    """Krylov (Arnoldi) estimate of the spectral radius, independent of dense LAPACK."""
    vals = eigs(W, k=1, which="LM", tol=1e-12, return_eigenvectors=False)
    return float(abs(vals[0]))


@pytest.mark.parametrize("seed", range(4))
def test_make_esn_spectral_radius(seed):
    esn = make_esn(40, 2, seed, spectral_radius=0.9, density=0.2)
    assert arnoldi_radius(esn.W) == pytest.approx(0.9, rel=1e-6)
    assert np.all(np.abs(esn.W_in) <= 0.5)


def test_make_esn_deterministic():
    a, b = make_esn(20, 1, 3), make_esn(20, 1, 3)
    assert np.array_equal(a.W, b.W) and np.array_equal(a.W_in, b.W_in)


def test_make_esn_scalar_reservoir():
    esn = make_esn(1, 1, 0, spectral_radius=0.7, density=1.0)
    assert abs(esn.W[0, 0]) == pytest.approx(0.7, rel=1e-12)


def test_make_esn_regenerates_zero_radius_draws():
    esn = make_esn(1, 1, 1, density=0.05)
    assert abs(esn.W[0, 0]) == pytest.approx(0.9)
    assert esn.regenerations >= 0


def test_make_esn_arguments():
    with pytest.raises(ValueError):
        make_esn(0, 1)
    with pytest.raises(ValueError):
        make_esn(5, 1, density=0)


def test_drive_zero_input_weights_gives_zero_states():
    esn = make_esn(5, 1, 0)
    esn = type(esn)(esn.W, np.zeros_like(esn.W_in), 0.9, 0.0, 0)
    st = drive_reservoir(esn, np.ones(10), washout=0)
    assert np.all(st.X == 0)


def test_drive_scalar_first_step():
    from nqp.reservoir import EsnParams

    esn = EsnParams(np.zeros((1, 1)), np.ones((1, 1)), 0.0, 1.0, 0)
    st = drive_reservoir(esn, [0.5], washout=0)
    assert st.X[0, 0] == pytest.approx(math.tanh(0.5), abs=1e-9)
    assert st.X[0, 0] == pytest.approx(0.46211715726, abs=1e-9)


def test_drive_states_bounded_and_shapes():
    esn = make_esn(12, 1, 2)
    u, y = delay_task(200, 2, 0)
    st = drive_reservoir(esn, u, 50)
    assert st.X.shape == (12, 150)
    assert np.all(np.abs(st.X) < 1)
    with pytest.raises(ValueError):
        drive_reservoir(esn, u, 200)
    with pytest.raises(ValueError):
        drive_reservoir(esn, np.ones((10, 3)), 0)


def test_echo_state_contraction():
    esn = make_esn(30, 1, 5, spectral_radius=0.9)
    u, _ = delay_task(300, 2, 1)
    x0 = np.random.default_rng(0).standard_normal(30)
    x0 /= np.linalg.norm(x0)
    a = drive_reservoir(esn, u, 50).X
    b = drive_reservoir(esn, u, 50, x0=x0).X
    diff = np.max(np.abs(a - b), axis=0)
    assert diff[0] < 1e-2  # already small once the washout is discarded
    assert diff[-1] < 1e-6
    assert np.all(diff[50:] <= diff[0])


def test_regression_qp_direct_products():
    st = StateMatrix(np.eye(2), np.array([1.0, 0.0]))
    qp = build_regression_qp(st, LevelSet((-1, 0, 1)))
    assert qp.Q.tolist() == [[1, 0], [0, 1]] and qp.c.tolist() == [-2, 0]
    assert validate_instance(qp) == []


def test_regression_qp_identity_with_residual():
    rng = np.random.default_rng(0)
    for _ in range(10):
        X = rng.standard_normal((5, 30))
        y = rng.standard_normal(30)
        qp = build_regression_qp(StateMatrix(X, y))
        w = rng.standard_normal(5)
        lhs = w @ qp.Q @ w + w @ qp.c + y @ y
        rhs = np.sum((w @ X - y) ** 2)
        assert lhs == pytest.approx(rhs, rel=1e-9)


def test_regression_qp_zero_target():
    qp = build_regression_qp(StateMatrix(np.eye(3), np.zeros(3)))
    assert np.all(qp.c == 0)


def test_ridge_examples():
    st = StateMatrix(np.eye(2), np.array([1.0, 0.0]))
    r0 = solve_continuous_ridge(st, 0.0)
    assert np.allclose(r0.w_out, [1, 0]) and r0.nmse == pytest.approx(0, abs=1e-15)
    r1 = solve_continuous_ridge(st, 1.0)
    assert np.allclose(r1.w_out, [0.5, 0])
    assert r0.nmse <= r1.nmse


def test_ridge_singular_rejected():
    st = StateMatrix(np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1.0, 0.0]))
    with pytest.raises(SingularSystem):
        solve_continuous_ridge(st, 0.0)
    assert solve_continuous_ridge(st, 0.1).nmse >= 0


def test_ridge_training_fit_not_improved_by_regularization():
    esn = make_esn(15, 1, 4)
    u, y = delay_task(260, 1, 4)
    st = drive_reservoir(esn, u, 60).with_target(y)
    base = solve_continuous_ridge(st, 1e-9).nmse
    for r in (1e-6, 1e-3, 1.0):
        assert base <= solve_continuous_ridge(st, r).nmse + 1e-12


def test_nmse_examples():
    t = np.array([1.0, -1.0, 3.0])
    assert nmse(t, t) == 0
    assert nmse(np.full(3, t.mean()), t) == pytest.approx(1.0)
    assert nmse([0, 0], [1, -1]) == 1.0
    with pytest.raises(ValueError):
        nmse([1, 1], [2, 2])
    with pytest.raises(ValueError):
        nmse([1], [2])


def test_discrete_readout_recovers_exact_level_weights():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((4, 60))
    w_true = np.array([1.0, -1.0, 0.0, 1.0])
    y = w_true @ X
    st = StateMatrix(X, y)
    run = train_discrete_readout(None, None, y, 0, LevelSet((-1, 0, 1)), "brute", 0, ridge=0.0, states=st)
    # continuous optimum is w_true, max |w| = 1 so scale = 1
    assert run.scale == pytest.approx(1.0)
    assert np.allclose(run.discrete.w_out, w_true)
    assert abs(run.gap) <= 1e-9


def test_discrete_gap_nonnegative_and_finite():
    esn = make_esn(8, 1, 7)
    u, y = sine_task(260, 7)
    for solver in ("brute", "multi", "local", "anneal"):
        run = train_discrete_readout(esn, u, y, 60, LevelSet((-2, -1, 0, 1, 2)) if solver != "brute"
                                     else LevelSet((-1, 0, 1)), solver, 3)
        assert run.gap >= -1e-9
        assert np.isfinite(run.discrete.nmse)
