import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nqp.core import InvalidInstance, LevelSet, QPInstance, evaluate_objective, generate_random_instance
from nqp.reduction import (
    NotBinary,
    TwoValueProblem,
    coefficient_bound,
    compute_penalty_params,
    gershgorin_bound,
    lift_solution,
    penalty_G,
    reduce_ubqp_to_unqp,
    shift_scale_transform,
)
from nqp.verify import (
    check_objective_equivalence,
    check_penalty_dichotomy,
    check_soundness,
    check_strict_separation,
)

from conftest import naive_objective, power_iteration_lambda_max

B01 = LevelSet((0, 1))


def ubqp(Q, c):
    return QPInstance(Q, c, B01)


def two_value(Qt, ct, s1=0, s2=1):
    Q = np.array([[Fraction(x) for x in r] for r in Qt], dtype=object)
    c = np.array([Fraction(x) for x in ct], dtype=object)
    return TwoValueProblem(Q, c, Fraction(0), s1, s2)


# -- gershgorin -------------------------------------------------------------

@pytest.mark.parametrize("Q, expected", [
    ([[1, 0], [0, 1]], 1),
    ([[2, 0], [0, 3]], 3),
    ([[2, 1], [1, 2]], 3),
])
def test_gershgorin_examples(Q, expected):
    assert gershgorin_bound(Q) == expected


def test_gershgorin_tight_on_all_ones_block():
    # power iteration confirms lambda_max = 3 for [[2,1],[1,2]]
    assert power_iteration_lambda_max([[2, 1], [1, 2]]) == pytest.approx(3, rel=1e-9)


def test_gershgorin_rejects_asymmetric():
    with pytest.raises(InvalidInstance):
        gershgorin_bound([[1, 2], [0, 1]])


def test_gershgorin_bounds_negative_spectrum():
    Q = [[-5, 1], [1, -4]]
    lam = np.linalg.eigvalsh(np.array(Q, float))
    assert gershgorin_bound(Q) >= max(abs(lam))


# -- shift/scale ------------------------------------------------------------

def test_shift_scale_identity_for_zero_one():
    tv = shift_scale_transform(ubqp([[3, 1], [1, 2]], [-4, 5]), 0, 1)
    assert tv.Q_tilde.tolist() == [[3, 1], [1, 2]]
    assert tv.c_tilde.tolist() == [-4, 5]
    assert tv.D == 0


def test_shift_scale_worked_example():
    inst = ubqp([[4]], [-8])
    tv = shift_scale_transform(inst, 1, 3)
    assert tv.Q_tilde.tolist() == [[1]]
    assert tv.c_tilde.tolist() == [-6]
    assert tv.D == 5
    assert tv.objective((1,)) == 0 == evaluate_objective(inst, (0,))
    assert tv.objective((3,)) == -4 == evaluate_objective(inst, (1,))


def test_shift_scale_zero_based_scaling():
    inst = ubqp([[3, 1], [1, 2]], [-4, 6])
    tv = shift_scale_transform(inst, 0, 2)
    assert tv.Q_tilde.tolist() == [[Fraction(3, 4), Fraction(1, 4)], [Fraction(1, 4), Fraction(1, 2)]]
    assert tv.c_tilde.tolist() == [-2, 3]
    assert tv.D == 0


def test_shift_scale_requires_order():
    with pytest.raises(ValueError):
        shift_scale_transform(ubqp([[1]], [0]), 2, 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10**6), st.integers(-8, 8), st.integers(1, 6))
def test_shift_scale_identity_over_all_binary_points(N, seed, s1, d):
    inst = generate_random_instance(N, B01, seed, 3)
    tv = shift_scale_transform(inst, s1, s1 + d)
    for v in itertools.product((0, 1), repeat=N):
        t = tuple(s1 + d * x for x in v)
        assert tv.objective(t) == naive_objective(inst.Q.tolist(), inst.c.tolist(), v)


# -- penalty --------------------------------------------------------------

def test_penalty_examples():
    assert penalty_G((0, 1, 1), 0, 1) == 0
    assert penalty_G((0, 2, 1), 0, 1) == 2
    assert penalty_G((1, 1), -1, 0) == 4


@pytest.mark.parametrize("levels", [(0, 1, 2), (-3, -1, 4, 5), (-1, 0, 1), (2, 5, 6, 9)])
@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_penalty_dichotomy_exhaustive(levels, N):
    assert check_penalty_dichotomy(LevelSet(levels), N) == []


# -- penalty parameters ------------------------------------------------------

def test_penalty_params_worked_example():
    cert = compute_penalty_params(LevelSet((0, 1, 2)), two_value([[2]], [-3]))
    assert (cert.lam, cert.s_star, cert.K, cert.s_2star) == (2, 1, 5, 2)
    assert (cert.K_prime, cert.L_H, cert.L_G, cert.M) == (14, -14, 2, 10)


def test_penalty_params_zero_data():
    cert = compute_penalty_params(LevelSet((0, 1, 2)), two_value([[0]], [0]))
    assert (cert.K, cert.K_prime, cert.L_G, cert.M) == (0, 0, 2, 1)


def test_penalty_params_tie_break_prefers_negative():
    cert = compute_penalty_params(LevelSet((-1, 0, 1)), two_value([[1]], [1], -1, 0))
    assert cert.s_star == -1
    assert cert.s_2star == -1


def test_penalty_params_strictly_exceeds_ratio():
    cert = compute_penalty_params(LevelSet((0, 1, 3)), two_value([[2, 1], [1, 2]], [-3, 1]))
    ratio = (cert.K - cert.L_H) / cert.L_G
    assert cert.M > ratio >= cert.M - 1


def test_penalty_params_need_three_levels():
    with pytest.raises(ValueError):
        compute_penalty_params(LevelSet((0, 1)), two_value([[1]], [0]))


@pytest.mark.parametrize("seed", range(20))
def test_either_tie_choice_gives_valid_M(seed):
    # |s*| enters K only through its absolute value, so s* = +1 works as well as -1
    S = LevelSet((-1, 0, 1))
    inst = generate_random_instance(3, B01, seed, 4)
    reduced, cert = reduce_ubqp_to_unqp(inst, S)
    assert check_strict_separation(reduced, cert) == []
    assert check_soundness(inst, reduced, cert).ok


# -- full reduction ---------------------------------------------------------

def test_reduce_binary_target_is_identity():
    inst = ubqp([[3, 1], [1, 2]], [-4, 5])
    reduced, cert = reduce_ubqp_to_unqp(inst, B01)
    assert reduced == inst
    assert cert.M is None and cert.offset == 0 and cert.scale == 1


def test_reduce_worked_example():
    inst = ubqp([[2]], [-3])
    reduced, cert = reduce_ubqp_to_unqp(inst, LevelSet((0, 1, 2)))
    assert reduced.Q.tolist() == [[12]] and reduced.c.tolist() == [-13]
    assert [evaluate_objective(reduced, (t,)) for t in (0, 1, 2)] == [0, -1, 22]
    check = check_soundness(inst, reduced, cert)
    assert check.ok and check.reduced_argmin == [(1,)] and check.ubqp_argmin == [(1,)]


def test_reduce_zero_instance():
    inst = ubqp([[0]], [0])
    reduced, cert = reduce_ubqp_to_unqp(inst, LevelSet((0, 1, 2)))
    assert cert.M == 1
    assert evaluate_objective(reduced, (2,)) == 2
    check = check_soundness(inst, reduced, cert)
    assert check.ok and sorted(check.reduced_argmin) == [(0,), (1,)]


def test_reduce_two_level_shifted():
    inst = ubqp([[4]], [-8])
    reduced, cert = reduce_ubqp_to_unqp(inst, LevelSet((1, 3)))
    assert reduced.Q.tolist() == [[4]] and reduced.c.tolist() == [2 * -8 - 2 * 1 * 4]
    assert check_objective_equivalence(inst, reduced, cert) == []
    assert check_soundness(inst, reduced, cert).ok


def test_reduce_rejects_real_and_non_psd():
    with pytest.raises(InvalidInstance):
        reduce_ubqp_to_unqp(QPInstance([[1.0]], [0.0], B01, "real"), LevelSet((0, 1, 2)))
    with pytest.raises(InvalidInstance):
        reduce_ubqp_to_unqp(ubqp([[-1]], [0]), LevelSet((0, 1, 2)))
    with pytest.raises(InvalidInstance):
        reduce_ubqp_to_unqp(QPInstance([[1]], [0], LevelSet((0, 2))), LevelSet((0, 1, 2)))


def test_indefinite_flag_still_sound():
    inst = QPInstance([[-3, 2], [2, 1]], [1, -2], B01, psd_declared=False)
    with pytest.raises(InvalidInstance):
        reduce_ubqp_to_unqp(inst, LevelSet((0, 1, 2)))
    reduced, cert = reduce_ubqp_to_unqp(inst, LevelSet((-2, 0, 1, 3)), allow_indefinite=True)
    assert check_strict_separation(reduced, cert) == []
    assert check_soundness(inst, reduced, cert).ok


def test_lift_solution():
    assert lift_solution((1, 3, 1), 1, 3) == (0, 1, 0)
    assert lift_solution((5, 5, 5), 5, 9) == (0, 0, 0)
    with pytest.raises(NotBinary):
        lift_solution((1, 2, 3), 1, 3)


def test_certificate_decode():
    _, cert = reduce_ubqp_to_unqp(ubqp([[2, 0], [0, 2]], [-1, 1]), LevelSet((-4, -1, 3)))
    assert cert.decode((-4, -1)) == (0, 1)


def test_coefficient_bound_holds_on_worst_corner():
    inst = ubqp([[25, 25], [25, 25]], [-50, 50])
    for S in [LevelSet((-10, 9, 10)), LevelSet((-10, -9, 10)), LevelSet((9, 10)), LevelSet((-10, 10))]:
        reduced, _ = reduce_ubqp_to_unqp(inst, S)
        worst = max(abs(int(x)) for x in list(reduced.Q.flat) + list(reduced.c))
        assert worst <= coefficient_bound(50, 2, 10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10**6),
       st.sets(st.integers(-6, 6), min_size=3, max_size=4))
def test_objective_identity_and_separation_property(N, seed, levels):
    S = LevelSet(tuple(sorted(levels)))
    inst = generate_random_instance(N, B01, seed, 3)
    reduced, cert = reduce_ubqp_to_unqp(inst, S)
    assert check_objective_equivalence(inst, reduced, cert) == []
    assert check_strict_separation(reduced, cert) == []
