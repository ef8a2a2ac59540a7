import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import coeffs, oracle_mul
from kprojective.errors import TagMismatchError, ValidationError
from kprojective.kscalar import (
    Field, Scalar, abs_, conj, kinner, mul, qabs, qconj, qinv, qmul, random_scalars,
    real_imag_split, real_representation,
)

H = Field.H


def s(*c, field=H):
    return Scalar.of(field, *c)


def test_ij_is_k():
    assert mul(s(0, 1), s(0, 0, 1)).is_close(s(0, 0, 0, 1))


def test_unit_relations():
    i, j, k = s(0, 1), s(0, 0, 1), s(0, 0, 0, 1)
    minus_one = s(-1)
    for q in (i, j, k):
        assert (q * q).is_close(minus_one)
    assert (i * j * k).is_close(minus_one)
    assert (j * i).is_close(-k)


def test_expand_i_plus_j_times_i_minus_j():
    assert mul(s(0, 1, 1), s(0, 1, -1)).is_close(s(0, 0, 0, -2))


def test_conj_formula():
    assert conj(s(1, 1, 1, 1)).is_close(s(1, -1, -1, -1))
    assert conj(s(0, 1)).is_close(s(0, -1))


def test_abs_values():
    assert abs_(s(1, 1, 1, 1)) == pytest.approx(2.0)
    assert abs_(s(0)) == 0.0


def test_real_imag_split():
    re, im = real_imag_split(s(3, 4, field=Field.C))
    assert re == 3.0 and im.is_close(s(0, 4, field=Field.C))
    re, im = real_imag_split(s(0, 1, 2, 3))
    assert re == 0.0 and im.is_close(s(0, 1, 2, 3))


def test_real_representation_of_i():
    np.testing.assert_allclose(real_representation(s(0, 1, field=Field.C)), [[0, -1], [1, 0]])


def test_field_tags_enforced():
    with pytest.raises(ValidationError):
        Scalar.of(Field.R, 1.0, 2.0)
    with pytest.raises(TagMismatchError):
        s(1) + Scalar.of(Field.C, 1.0)


def test_right_and_left_division():
    rng = np.random.default_rng(1)
    x = Scalar.from_array(H, random_scalars(H, rng))
    y = Scalar.from_array(H, random_scalars(H, rng))
    assert (x.right_div(y) * y).is_close(x, 1e-12)
    assert (y * x.left_div(y)).is_close(x, 1e-12)


def test_table_matches_c2_oracle_on_random_pairs():
    rng = np.random.default_rng(2)
    x = random_scalars(H, rng, 1000)
    y = random_scalars(H, rng, 1000)
    np.testing.assert_allclose(qmul(x, y), oracle_mul(x, y), atol=1e-12)


def test_associativity_bulk():
    rng = np.random.default_rng(3)
    x, y, z = (random_scalars(H, rng, 10_000) for _ in range(3))
    lhs = qmul(qmul(x, y), z)
    rhs = qmul(x, qmul(y, z))
    scale = qabs(x) * qabs(y) * qabs(z)
    assert (qabs(lhs - rhs) / scale).max() <= 1e-13


@given(coeffs(H), coeffs(H))
def test_conj_is_anti_automorphism(x, y):
    np.testing.assert_allclose(qconj(qmul(x, y)), qmul(qconj(y), qconj(x)), atol=1e-11)


@given(coeffs(H), coeffs(H))
def test_abs_multiplicative(x, y):
    assert qabs(qmul(x, y)) == pytest.approx(qabs(x) * qabs(y), rel=1e-12, abs=1e-12)


@given(coeffs(H))
def test_x_conj_x_is_real(x):
    p = qmul(x, qconj(x))
    assert np.abs(p[1:]).max() <= 1e-13 * max(1.0, p[0])
    assert p[0] == pytest.approx(qabs(x) ** 2, rel=1e-12, abs=1e-12)


@given(coeffs(H))
def test_real_part_formula(x):
    re, _ = real_imag_split(Scalar.from_array(H, x))
    assert re == 0.5 * (x + qconj(x))[0]


@given(st.sampled_from([Field.C, Field.H]).flatmap(lambda f: st.tuples(st.just(f), coeffs(f), coeffs(f))))
def test_real_representation_homomorphism(args):
    f, w, u = args
    mw = real_representation(Scalar.from_array(f, w))
    mu = real_representation(Scalar.from_array(f, u))
    mwu = real_representation(Scalar.from_array(f, qmul(w, u)))
    np.testing.assert_allclose(mw @ mu, mwu, atol=1e-10)
    np.testing.assert_allclose(mw.T, real_representation(Scalar.from_array(f, qconj(w))), atol=1e-12)
    np.testing.assert_allclose(mw.T @ mw, qabs(w) ** 2 * np.eye(f.r), atol=1e-10)


@given(coeffs(H))
def test_inverse(x):
    if qabs(x) < 1e-3:
        return
    np.testing.assert_allclose(qmul(x, qinv(x)), [1, 0, 0, 0], atol=1e-12)


def test_kinner_conjugate_linear_in_first_slot():
    rng = np.random.default_rng(4)
    u = random_scalars(H, rng, 3)
    v = random_scalars(H, rng, 3)
    a = random_scalars(H, rng)
    # <u a, v> = conj(a) <u, v>
    np.testing.assert_allclose(kinner(qmul(u, a[None]), v), qmul(qconj(a), kinner(u, v)), atol=1e-12)
    # <u, v a> = <u, v> a
    np.testing.assert_allclose(kinner(u, qmul(v, a[None])), qmul(kinner(u, v), a), atol=1e-12)


def test_json_roundtrip():
    x = s(1.5, -2, 0.25, 3)
    assert Scalar.from_json(x.to_json()).is_close(x, 0.0)
