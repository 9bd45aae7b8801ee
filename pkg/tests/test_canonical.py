from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltvnull.canonical import (
    EquivalenceTransform,
    IllConditionedError,
    NotControllableError,
    apply_equivalence,
    canonical_range,
    canonical_rows,
    canonical_transform,
    invariance_residual,
    is_canonical_form,
)
from ltvnull.generators import random_nullifiable, random_periodic
from ltvnull.scalar import FLOAT, ScalarPolicy, det
from ltvnull.system import (
    IndexOutOfRange,
    LtvSystem,
    decoupling_term,
    is_completely_controllable,
    simulate,
)

R = ScalarPolicy()


def _same(s1, s2, ks):
    return all((s1.A_at(k) == s2.A_at(k)).all() and (s1.b_at(k) == s2.b_at(k)).all()
               and (s1.c_at(k) == s2.c_at(k)).all() for k in ks)


def test_rows_of_time_invariant_canonical_system():
    alpha = [Fraction(3), Fraction(-1, 2), Fraction(5)]
    s = LtvSystem.time_invariant([[0, 1, 0], [0, 0, 1], alpha], [0, 0, 1], [1, 2, 3])
    rows = canonical_rows(s, 0, 0)
    assert list(rows[0]) == alpha


def test_rows_of_nilpotent_shift():
    s = LtvSystem.time_invariant([[0, 1], [0, 0]], [0, 1], [1, 0])
    assert list(canonical_rows(s, 0, 0)[0]) == [0, 0]


def test_rows_match_characteristic_polynomial():
    rng = np.random.default_rng(11)
    for _ in range(20):
        A = rng.integers(-4, 5, (2, 2))
        b = rng.integers(-4, 5, 2)
        s = LtvSystem.time_invariant(A, b, [1, 0])
        if not is_completely_controllable(s):
            continue
        row = canonical_rows(s, 0, 0)[0]
        # companion [[0, 1], [a1, a2]] has characteristic polynomial l^2 - a2 l - a1
        assert list(row) == [-det(s.A_at(0)), A[0, 0] + A[1, 1]]
        res = canonical_transform(s)
        assert _same(apply_equivalence(s, res.transform), res.system, [0])


def test_canonical_input_gives_identity_transform():
    rows = [[Fraction(1), Fraction(2)], [Fraction(-3), Fraction(1, 2)], [Fraction(0), Fraction(1)]]
    steps = [([[0, 1], r], [0, 1], [1, 5]) for r in rows]
    s = LtvSystem.from_steps(steps, periodic=True)
    res = canonical_transform(s)
    for k in s.indices():
        assert (res.transform.at(k) == R.eye(2)).all()
    assert _same(res.system, s, s.indices())


def test_scalar_case():
    a = [Fraction(2), Fraction(-3), Fraction(5)]
    b = [Fraction(4), Fraction(1, 2), Fraction(-1)]
    s = LtvSystem.from_steps([([[ai]], [bi], [1]) for ai, bi in zip(a, b)], periodic=True)
    res = canonical_transform(s)
    for k in range(3):
        assert res.transform.at(k)[0, 0] == 1 / b[(k - 1) % 3]
        assert res.system.A_at(k)[0, 0] == a[k] * b[(k - 1) % 3] / b[k]
        assert res.system.b_at(k)[0] == 1


def test_non_periodic_window_range():
    rng = np.random.default_rng(3)
    base = random_nullifiable(rng, 2, period=3, controllable_only=True)
    s = base.restrict(0, 9)
    # rows need n - 1 indices of look-ahead and 2n - 1 of lead-in
    assert canonical_range(s) == (3, 8)
    res = canonical_transform(s)
    assert (res.system.k_min, res.system.k_max) == (3, 8)
    assert (res.transform.k_min, res.transform.k_max) == (3, 9)
    assert is_canonical_form(res.system)
    assert _same(apply_equivalence(s, res.transform), res.system, range(3, 9))
    with pytest.raises(IndexOutOfRange):
        canonical_range(base.restrict(0, 3))


def test_uncontrollable_raises():
    s = LtvSystem.time_invariant([[1, 0], [0, 1]], [1, 0], [1, 0])
    with pytest.raises(NotControllableError) as info:
        canonical_transform(s)
    assert info.value.k in (-1, 0)


def test_float_ill_conditioned_suggests_rational_mode():
    eps = 1e-12
    s = LtvSystem.time_invariant([[1, 1], [0, 1 + eps]], [1, eps], [1, 0], ScalarPolicy(FLOAT))
    with pytest.raises(IllConditionedError, match="rational"):
        canonical_transform(s)


def test_identity_transform_is_identity():
    rng = np.random.default_rng(5)
    s = random_periodic(rng, 3, 2)
    T = EquivalenceTransform.identity(3, 0, 0, period=1)
    assert _same(apply_equivalence(s, T), s, s.indices())
    assert all(v == 0 for v in invariance_residual(s, s, T).values())


def test_diagonal_transform_scales_b():
    rng = np.random.default_rng(6)
    s = random_periodic(rng, 2, 2)
    T = EquivalenceTransform(0, 0, {0: [[2, 0], [0, 1]]}, period=1)
    out = apply_equivalence(s, T)
    for k in s.indices():
        assert list(out.b_at(k)) == [2 * s.b_at(k)[0], s.b_at(k)[1]]


def test_singular_transform_rejected():
    from ltvnull.scalar import SingularMatrixError
    with pytest.raises(SingularMatrixError):
        EquivalenceTransform(0, 0, {0: [[1, 2], [2, 4]]})


def test_first_coordinate_of_canonical_c_tracks_decoupling():
    rng = np.random.default_rng(9)
    seen_zero = seen_nonzero = 0
    for _ in range(200):
        s = random_periodic(rng, 2, 2, bound=2)
        if not is_completely_controllable(s):
            continue
        res = canonical_transform(s)
        for k in s.indices():
            vanishes = res.system.c_at(k)[0] == 0
            assert vanishes == (decoupling_term(s, k) == 0)
            seen_zero += vanishes
            seen_nonzero += not vanishes
    assert seen_zero and seen_nonzero


def _random_T(data, n, period):
    mats = {}
    for k in range(period):
        M = data.draw(st.lists(st.lists(st.integers(-3, 3), min_size=n, max_size=n),
                               min_size=n, max_size=n).filter(
            lambda m: det(R.array(m)) != 0))
        mats[k] = M
    return EquivalenceTransform(0, period - 1, mats, period)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_roundtrip_and_trajectory_transport(data):
    seed = data.draw(st.integers(0, 10_000))
    rng = np.random.default_rng(seed)
    n = data.draw(st.integers(1, 3))
    s = random_periodic(rng, n, data.draw(st.integers(1, 3)))
    T = _random_T(data, n, data.draw(st.integers(1, 2)))
    other = apply_equivalence(s, T)
    back = apply_equivalence(other, T.inverse())
    assert _same(back, s, range(0, 6))
    controls = [Fraction(int(u)) for u in rng.integers(-3, 4, 5)]
    x0 = rng.integers(-3, 4, n)
    t1 = simulate(s, 0, x0, controls=controls)
    t2 = simulate(other, 0, T.at(0).dot(R.array(x0)), controls=controls)
    for i, (a, b) in enumerate(zip(t1.states, t2.states)):
        assert (T.at(i).dot(a) == b).all()
    assert all(v == 0 for v in invariance_residual(s, other, T, (0, other.k_max)).values())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_canonical_transform_property(seed, n):
    s = random_nullifiable(np.random.default_rng(seed), n, controllable_only=True)
    res = canonical_transform(s)
    assert is_canonical_form(res.system)
    assert res.residual == 0
    assert _same(apply_equivalence(s, res.transform), res.system, s.indices())
    assert bool(is_completely_controllable(res.system)) == bool(is_completely_controllable(s))
