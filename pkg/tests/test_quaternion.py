"""Quaternion algebra: unit table, norms, slices, embeddings."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qfine import quaternion as qt

import _oracles as orc

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
quats = st.tuples(finite, finite, finite, finite).map(lambda t: np.array(t))


def test_unit_relations():
    # e1 e2 = -e2 e1 = e3 and cyclic
    assert np.allclose(qt.qmul(qt.E1, qt.E2), qt.E3)
    assert np.allclose(qt.qmul(qt.E2, qt.E1), -qt.E3)
    assert np.allclose(qt.qmul(qt.E2, qt.E3), qt.E1)
    assert np.allclose(qt.qmul(qt.E3, qt.E1), qt.E2)
    for e in (qt.E1, qt.E2, qt.E3):
        assert np.allclose(qt.qmul(e, e), -qt.ONE)


def test_identity_element():
    rng = np.random.default_rng(0)
    for _ in range(20):
        q = rng.standard_normal(4)
        assert np.allclose(qt.qmul(qt.ONE, q), q)
        assert np.allclose(qt.qmul(q, qt.ONE), q)


def test_product_matches_table_oracle():
    rng = np.random.default_rng(1)
    for _ in range(100):
        a, b = rng.standard_normal(4), rng.standard_normal(4)
        assert np.linalg.norm(qt.qmul(a, b) - orc.qmul_table(a, b)) < 1e-13


def test_associativity_against_expansion():
    rng = np.random.default_rng(2)
    for _ in range(100):
        a, b, c = rng.standard_normal((3, 4))
        lhs = qt.qmul(qt.qmul(a, b), c)
        rhs = qt.qmul(a, qt.qmul(b, c))
        assert np.linalg.norm(lhs - rhs) <= 1e-14 * max(1.0, np.linalg.norm(lhs))


def test_norm_multiplicative():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a, b = rng.standard_normal(4), rng.standard_normal(4)
        lhs = qt.qnorm(qt.qmul(a, b))
        rhs = qt.qnorm(a) * qt.qnorm(b)
        assert abs(lhs - rhs) <= 1e-13 * max(1.0, rhs)


def test_conj_product_is_norm_squared():
    rng = np.random.default_rng(4)
    for _ in range(50):
        q = rng.standard_normal(4)
        p = qt.qmul(qt.qconj(q), q)
        assert abs(p[0] - qt.qnorm2(q)) < 1e-12 * max(1, qt.qnorm2(q))
        assert np.linalg.norm(p[1:]) < 1e-12 * max(1, qt.qnorm2(q))


def test_qinv_units_and_scalars():
    assert np.allclose(qt.qinv(qt.E1), -qt.E1)
    assert np.allclose(qt.qinv(qt.quaternion(2.0)), qt.quaternion(0.5))


def test_qinv_random_left_right():
    rng = np.random.default_rng(5)
    for _ in range(100):
        q = rng.standard_normal(4)
        for prod in (qt.qmul(q, qt.qinv(q)), qt.qmul(qt.qinv(q), q)):
            assert np.linalg.norm(prod - qt.ONE) < 1e-14 * max(1.0, qt.qnorm(q) ** 2)


def test_qinv_zero_raises():
    with pytest.raises(ZeroDivisionError):
        qt.qinv(np.zeros(4))


def test_slice_decompose_examples():
    u, v, J = qt.slice_decompose(qt.quaternion(1.0, 2.0))
    assert (u, v) == (1.0, 2.0) and np.allclose(J, qt.E1)

    u, v, J = qt.slice_decompose(qt.quaternion(3.0))
    assert (u, v) == (3.0, 0.0) and np.allclose(J, qt.E1)

    u, v, J = qt.slice_decompose(qt.quaternion(1.0, 1.0, 1.0, 1.0))
    assert u == 1.0 and abs(v - np.sqrt(3)) < 1e-15
    assert np.allclose(J, np.array([0, 1, 1, 1]) / np.sqrt(3))


def test_slice_roundtrip():
    rng = np.random.default_rng(6)
    for _ in range(100):
        q = rng.standard_normal(4)
        u, v, J = qt.slice_decompose(q)
        assert v >= 0
        assert abs(qt.qnorm(J) - 1) < 1e-12 and abs(J[0]) == 0.0
        back = qt.slice_recompose(u, v, J)
        assert np.linalg.norm(back - q) <= 1e-14 * max(1.0, qt.qnorm(q))


def test_embed_left_examples():
    assert np.allclose(qt.embed_left(qt.ONE), np.eye(4))
    L1 = qt.embed_left(qt.E1)
    assert np.allclose(L1 @ L1, -np.eye(4))


def test_embed_homomorphism_and_commutation():
    rng = np.random.default_rng(7)
    for _ in range(100):
        a, b = rng.standard_normal(4), rng.standard_normal(4)
        La, Lb = qt.embed_left(a), qt.embed_left(b)
        assert np.linalg.norm(La @ Lb - qt.embed_left(qt.qmul(a, b))) < 1e-13 * max(
            1, qt.qnorm(a) * qt.qnorm(b)
        )
        Rb = qt.embed_right(b)
        comm = La @ Rb - Rb @ La
        assert np.linalg.norm(comm) <= 1e-13 * max(1.0, qt.qnorm(a) * qt.qnorm(b))


def test_embed_action_is_multiplication():
    rng = np.random.default_rng(8)
    a, v = rng.standard_normal(4), rng.standard_normal(4)
    assert np.allclose(qt.embed_left(a) @ v, qt.qmul(a, v))
    assert np.allclose(qt.embed_right(a) @ v, qt.qmul(v, a))


@settings(max_examples=150, derandomize=True)
@given(quats, quats)
def test_norm_multiplicative_property(a, b):
    lhs = qt.qnorm(qt.qmul(a, b))
    rhs = qt.qnorm(a) * qt.qnorm(b)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, rhs)


@settings(max_examples=150, derandomize=True)
@given(quats, quats, quats)
def test_associativity_property(a, b, c):
    lhs = qt.qmul(qt.qmul(a, b), c)
    rhs = qt.qmul(a, qt.qmul(b, c))
    scale = max(1.0, qt.qnorm(a) * qt.qnorm(b) * qt.qnorm(c))
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * scale


@settings(max_examples=150, derandomize=True)
@given(quats)
def test_slice_roundtrip_property(q):
    u, v, J = qt.slice_decompose(q)
    back = qt.slice_recompose(u, v, J)
    assert np.linalg.norm(back - q) <= 1e-12 * max(1.0, qt.qnorm(q))


def test_random_unit_imaginary():
    rng = np.random.default_rng(9)
    for _ in range(20):
        J = qt.random_unit_imaginary(rng)
        assert J[0] == 0.0
        assert abs(qt.qnorm(J) - 1.0) < 1e-12
        assert np.allclose(qt.qmul(J, J), -qt.ONE)
