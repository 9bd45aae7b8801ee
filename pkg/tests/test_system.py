from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltvnull.scalar import FLOAT, ScalarPolicy, det
from ltvnull.system import (
    FeedbackSchedule,
    IndexOutOfRange,
    LtvSystem,
    adjugate,
    closed_loop_product,
    controllability_matrix,
    decoupling_term,
    is_completely_controllable,
    is_completely_observable,
    observability_matrix,
    simulate,
)

from oracles import brute_controllability, leibniz_adjugate

R = ScalarPolicy()


def _lti(A, b, c, policy=R):
    return LtvSystem.time_invariant(A, b, c, policy)


def _periodic_systems(max_n=3):
    ints = st.integers(-3, 3)
    return st.tuples(st.integers(1, max_n), st.integers(1, 3)).flatmap(
        lambda np_: st.lists(
            st.tuples(st.lists(st.lists(ints, min_size=np_[0], max_size=np_[0]),
                               min_size=np_[0], max_size=np_[0]),
                      st.lists(ints, min_size=np_[0], max_size=np_[0]),
                      st.lists(ints, min_size=np_[0], max_size=np_[0])),
            min_size=np_[1], max_size=np_[1]).map(
            lambda steps: LtvSystem.from_steps(steps, periodic=True)))


def test_zero_state_zero_input():
    s = _lti([[1, 2], [3, 4]], [0, 1], [1, 0])
    traj = simulate(s, 0, [0, 0], controls=[0, 0, 0])
    assert all(not x.any() for x in traj.states)


def test_scalar_recursion():
    s = _lti([[2]], [1], [1])
    traj = simulate(s, 0, [1], steps=3)
    assert [x[0] for x in traj.states] == [1, 2, 4, 8]


def test_canonical_one_step_feedback():
    a1, a2 = Fraction(3), Fraction(-5, 2)
    s = _lti([[0, 1], [a1, a2]], [0, 1], [1, 0])
    traj = simulate(s, 0, [1, 0], feedback=FeedbackSchedule(0, (-a1,)))
    assert list(traj.states[1]) == [0, 0]


def test_controllability_matrix_examples():
    s = _lti([[0, 1], [Fraction(2), Fraction(7)]], [0, 1], [1, 0])
    assert controllability_matrix(s, 0).tolist() == [[0, 1], [1, 7]]
    assert controllability_matrix(_lti([[5]], [Fraction(3)], [1]), 4).tolist() == [[3]]


def test_controllability_skew_triangular_for_canonical_forms():
    rows = [[Fraction(1), Fraction(-2), Fraction(3)], [Fraction(0), Fraction(4), Fraction(1, 2)]]
    steps = [([[0, 1, 0], [0, 0, 1], r], [0, 0, 1], [1, 0, 0]) for r in rows]
    s = LtvSystem.from_steps(steps, periodic=True)
    for k in range(-3, 3):
        W = controllability_matrix(s, k)
        for i in range(3):
            assert W[i, 2 - i] == 1
            for j in range(0, 2 - i):
                assert W[i, j] == 0
        assert abs(det(W)) == 1
    assert is_completely_controllable(s)


def test_controllability_failures():
    assert not is_completely_controllable(_lti([[1, 2], [3, 4]], [0, 0], [1, 0]))
    s = _lti([[1, 0], [0, 1]], [1, 0], [1, 0])
    assert controllability_matrix(s, 0).tolist() == [[1, 1], [0, 0]]
    report = is_completely_controllable(s)
    assert not report and report.failures == (0,)


def test_observability_examples():
    s = _lti([[1, 0], [0, 1]], [1, 0], [1, 0])
    assert observability_matrix(s, 0).tolist() == [[1, 0], [1, 0]]
    assert not is_completely_observable(s)
    s = _lti([[0, 1], [0, 0]], [0, 1], [1, 0])
    assert observability_matrix(s, 0).tolist() == [[1, 0], [0, 1]]
    assert is_completely_observable(s)
    assert is_completely_observable(_lti([[2]], [1], [Fraction(-1, 3)]))


def test_adjugate_examples():
    assert adjugate(R.eye(2)).tolist() == [[1, 0], [0, 1]]
    assert adjugate(R.array([[1, 2], [3, 4]])).tolist() == [[4, -2], [-3, 1]]
    assert adjugate(R.array([[5]])).tolist() == [[1]]


def test_decoupling_examples():
    assert decoupling_term(_lti([[7]], [3], [2]), 0) == 6
    assert decoupling_term(_lti([[1, 2], [3, 4]], [0, 1], [1, 0]), 0) == -2
    s = _lti([[0, 1, 0], [0, 0, 1], [2, -1, 5]], [0, 0, 1], [Fraction(3, 2), 4, -1])
    assert decoupling_term(s, 0) == Fraction(3, 2)


def test_window_bounds():
    s = LtvSystem.from_steps([([[1]], [1], [1]), ([[2]], [1], [1])], k_min=3)
    assert s.A_at(4)[0, 0] == 2
    with pytest.raises(IndexOutOfRange):
        s.A_at(5)
    with pytest.raises(ValueError):
        LtvSystem(1, 0, 1, {0: [[1]]}, {0: [1]}, {0: [1]})
    with pytest.raises(ValueError):
        LtvSystem(2, 0, 0, {0: [[1, 0], [0, 1]]}, {0: [1]}, {0: [1, 0]})
    with pytest.raises(ValueError):
        LtvSystem(1, 0, 1, {0: [[1]], 1: [[1]]}, {0: [1], 1: [1]}, {0: [1], 1: [1]}, period=3)


def test_arrays_are_read_only():
    s = _lti([[1]], [1], [1])
    with pytest.raises(ValueError):
        s.A_at(0)[0, 0] = 5


@settings(max_examples=40, deadline=None)
@given(_periodic_systems(4))
def test_adjugate_identity(s):
    for k in s.indices():
        A = s.A_at(k)
        assert (A.dot(adjugate(A)) == det(A) * R.eye(s.n)).all()
        assert adjugate(A).tolist() == leibniz_adjugate(A.tolist())
        Af = A.astype(float)
        err = np.abs(Af @ adjugate(Af) - np.linalg.det(Af) * np.eye(s.n)).max()
        assert err <= 1e-9 * max(1.0, np.abs(Af).max() ** s.n)


@settings(max_examples=40, deadline=None)
@given(_periodic_systems(), st.lists(st.integers(-3, 3), min_size=6, max_size=6),
       st.integers(-5, 5))
def test_feedback_equals_explicit_controls(s, gains, k0):
    x0 = [1] + [0] * (s.n - 1)
    sched = FeedbackSchedule(k0, tuple(Fraction(g) for g in gains))
    fb = simulate(s, k0, x0, feedback=sched)
    controls = []
    x = R.array(x0)
    for i, g in enumerate(gains):
        k = k0 + i
        u = Fraction(g) * s.c_at(k).dot(x)
        controls.append(u)
        x = s.A_at(k).dot(x) + s.b_at(k) * u
    ol = simulate(s, k0, x0, controls=controls)
    assert all((a == b).all() for a, b in zip(fb.states, ol.states))
    assert (closed_loop_product(s, sched).dot(R.array(x0)) == fb.final).all()


@settings(max_examples=40, deadline=None)
@given(_periodic_systems(), st.integers(-6, 6))
def test_periodic_controllability_and_brute_force(s, k):
    p = s.period
    assert (controllability_matrix(s, k) == controllability_matrix(s, k + p)).all()
    As = [s.A_at(k - i) for i in range(s.n)]
    bs = [s.b_at(k - i) for i in range(s.n)]
    assert (controllability_matrix(s, k) == brute_controllability(As, bs)).all()


def test_float_mode_verdicts_carry_diagnostics():
    s = _lti([[1, 0], [0, 1]], [1, 0], [1, 0], ScalarPolicy(FLOAT))
    report = is_completely_controllable(s)
    assert not report
    assert report.diagnostics[0] == pytest.approx(0.0, abs=1e-12)
