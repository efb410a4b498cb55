"""Graded monomial bases and the shift/dilation operator blocks."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crystacc.crystal import compose
from crystacc.linalg import Mat, QC
from crystacc.multiidx import (VCollection, build_A_s, build_Q_st,
                               build_Q_tilde, dim_degree, enumerate_degree,
                               eval_X, eval_y)

from conftest import rand_fraction, rand_point


def test_enumerate_counts():
    assert len(enumerate_degree(2, 3)) == 4
    assert len(enumerate_degree(1, 7)) == 1
    assert len(enumerate_degree(3, 2)) == 6


def test_enumerate_descending_lex():
    # documented global ordering: in d=2, s=2 it reads x^2, xy, y^2
    assert list(enumerate_degree(2, 2)) == [(2, 0), (1, 1), (0, 2)]
    idx = list(enumerate_degree(3, 2))
    assert idx == sorted(idx, reverse=True)


def test_dim_degree_matches_enumeration():
    for d in (1, 2, 3):
        for s in range(5):
            assert dim_degree(d, s) == len(enumerate_degree(d, s))


def test_eval_X_basics():
    assert eval_X((Fraction(7, 3),), 0).entry(0, 0) == QC(1)
    x = (Fraction(2), Fraction(-5, 2))
    col = eval_X(x, 1)
    assert [col.entry(i, 0).re for i in range(2)] == list(x)
    col2 = eval_X((Fraction(2), Fraction(3)), 2)
    assert [col2.entry(i, 0).re for i in range(3)] == [4, 6, 9]


def test_build_A_s_examples():
    two_i = Mat.from_rows([[2, 0], [0, 2]])
    a2 = build_A_s(two_i, 2)
    assert a2 == Mat.identity(3).scale(QC(4))
    any_a = Mat.from_rows([[1, 2], [3, 4]])
    assert build_A_s(any_a, 1) == any_a
    shear = Mat.from_rows([[1, 1], [0, 1]])
    assert build_A_s(shear, 2) == Mat.from_rows([[1, 2, 1], [0, 1, 1],
                                                 [0, 0, 1]])


def test_build_Q_st_examples():
    y = (Fraction(1, 3), Fraction(2))
    assert build_Q_st(y, 2, 2) == Mat.identity(3)
    q20 = build_Q_st(y, 2, 0)
    expect = eval_X(y, 2)
    for i in range(3):
        assert q20.entry(i, 0) == expect.entry(i, 0)  # (-1)^2 = +1
    q10 = build_Q_st((Fraction(5),), 1, 0)
    assert q10.entry(0, 0) == QC(-5)
    q21 = build_Q_st((Fraction(3, 2),), 2, 1)
    assert q21.entry(0, 0) == QC(-3)  # -2y


def test_build_Q_st_rejects_t_above_s():
    with pytest.raises(ValueError):
        build_Q_st((Fraction(1),), 1, 2)


def test_q_tilde_translation_only(line):
    t, _ = line
    gamma = t.element(0, (4,))
    for s in range(3):
        for tt in range(s + 1):
            assert build_Q_tilde(gamma, s, tt) == \
                build_Q_st(gamma.true_translation(), s, tt)


def test_q_tilde_point_only(p1m):
    t, _ = p1m
    gamma = t.element(1, (0,))  # reflection, no translation
    assert build_Q_tilde(gamma, 2, 1).is_zero()
    b_inv = gamma.point_matrix_inverse()
    assert build_Q_tilde(gamma, 2, 2) == build_A_s(b_inv, 2)


def test_eval_y_degree_zero(line, rng):
    t, _ = line
    v = VCollection(1, (Mat.from_rows([[1]]), Mat.from_rows([[7]])))
    for _ in range(5):
        gamma = t.element(0, (rng.randint(-9, 9),))
        assert eval_y(gamma, v, 0) == v.block(0)


def test_eval_y_identity_element(p1m):
    t, _ = p1m
    v = VCollection(1, (Mat.from_rows([[1]]), Mat.from_rows([[Fraction(2, 3)]])))
    ident = t.identity()
    assert eval_y(ident, v, 1) == v.block(1)


def test_eval_y_unit_translation(line):
    """v = (1, 0) against the unit shift: y_[1] = Q_[1,0](1) = -1."""
    t, _ = line
    v = VCollection(1, (Mat.from_rows([[1]]), Mat.from_rows([[0]])))
    tau1 = t.element(0, (1,))
    assert eval_y(tau1, v, 1).entry(0, 0) == QC(-1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 4), st.integers(0, 10 ** 6))
def test_shift_expansion_identity(d, s, seed):
    """X_[s](x - y) = sum_t Q_[s,t](y) X_[t](x) exactly."""
    rng = random.Random(seed)
    x = rand_point(rng, d)
    y = rand_point(rng, d)
    shifted = eval_X(tuple(a - b for a, b in zip(x, y)), s)
    acc = Mat.zeros(dim_degree(d, s), 1)
    for t in range(s + 1):
        acc = acc + build_Q_st(y, s, t) @ eval_X(x, t)
    assert shifted == acc


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 3), st.integers(0, 10 ** 6))
def test_q_dilation_covariance(d, s, seed):
    """Q_[s,t](Az) = A_[s] Q_[s,t](z) A_[t]^{-1} for invertible A."""
    rng = random.Random(seed)
    while True:
        a = Mat.from_rows([[rand_fraction(rng, 3, 2) for _ in range(d)]
                           for _ in range(d)])
        from crystacc.linalg import det
        if det(a) != QC(0):
            break
    z = rand_point(rng, d)
    az = tuple((a @ Mat.column(list(z))).entry(i, 0).re for i in range(d))
    for t in range(s + 1):
        lhs = build_Q_st(az, s, t)
        rhs = build_A_s(a, s) @ build_Q_st(z, s, t) @ build_A_s(a, t).inverse()
        assert lhs == rhs


@settings(max_examples=25, deadline=None)
@given(s=st.integers(0, 3), seed=st.integers(0, 10 ** 6))
def test_cocycle_on_pm(pm, s, seed):
    """y_[s](g1 g2) = sum_t Qt_[s,t](g2) y_[t](g1)."""
    t, _ = pm
    rng = random.Random(seed)
    blocks = tuple(Mat.from_rows([[rand_fraction(rng) for _ in range(1)]
                                  for _ in range(dim_degree(2, j))])
                   for j in range(s + 1))
    v = VCollection(2, blocks)
    g1 = t.element(rng.randrange(t.order), (rng.randint(-4, 4),
                                            rng.randint(-4, 4)))
    g2 = t.element(rng.randrange(t.order), (rng.randint(-4, 4),
                                            rng.randint(-4, 4)))
    lhs = eval_y(compose(g1, g2), v, s)
    acc = Mat.zeros(dim_degree(2, s), 1)
    for tt in range(s + 1):
        acc = acc + build_Q_tilde(g2, s, tt) @ eval_y(g1, v, tt)
    assert lhs == acc


def test_vcollection_shape_checks():
    with pytest.raises(ValueError):
        VCollection(2, (Mat.from_rows([[1]]), Mat.from_rows([[1]])))
