import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import oracle_mul
from kprojective.errors import GeometryError, ValidationError
from kprojective.kmatrix import KMatrix, conj_transpose, matmul, random_kmatrix
from kprojective.kscalar import Field, Scalar, qabs2, qconj, random_scalars
from kprojective.moebius import (
    INF, ExtendedScalar, MoebiusMap, SpherePlane, apply, cayley, generate_from_UV,
    halfspace_aut_membership, halfspace_samples, map_sphereplane, to_one_from_interior,
    to_zero_from_boundary, u_matrix, uv_bracket, v_matrix,
)
from kprojective.moebius import apply_batch


def imaginary(field, rng, n=()):
    w = random_scalars(field, rng, n)
    w[..., 0] = 0.0
    return w


def test_cayley_values(field):
    c = cayley(field)
    assert c(1.0).is_close(ExtendedScalar(field, 0.0))
    assert c(INF(field)).is_close(ExtendedScalar(field, 1.0))
    assert c(-1.0).is_infinite
    assert c(0.0).is_close(ExtendedScalar(field, -1.0))


def test_identity_action(field, rng):
    ident = MoebiusMap.identity(field)
    z = random_scalars(field, rng, 20)
    assert np.allclose(apply_batch(ident, z), z, atol=1e-15)
    assert ident(INF(field)).is_infinite


def test_apply_matches_oracle_formula(rng):
    field = Field.H
    a, b, c, d = random_scalars(field, rng, 4)
    m = MoebiusMap.from_entries(field, a, b, c, d)
    z = random_scalars(field, rng)
    num = oracle_mul(a, z) + b
    den = oracle_mul(c, z) + d
    want = oracle_mul(num, qconj(den) / qabs2(den))
    assert np.allclose(m(z).value, want, atol=1e-12)


def test_lower_translation_real_part(field, rng):
    for _ in range(20):
        w = imaginary(field, rng)
        m = MoebiusMap(v_matrix(field, w))
        z = halfspace_samples(field, 1, rng)[0]
        one_wz = oracle_mul(w, z)
        one_wz[0] += 1.0
        assert m(z).value[0] == pytest.approx(z[0] / qabs2(one_wz), rel=1e-10)


def test_composition(field, rng):
    m1 = MoebiusMap(random_kmatrix(field, 2, 2, rng))
    m2 = MoebiusMap(random_kmatrix(field, 2, 2, rng))
    z = ExtendedScalar(field, random_scalars(field, rng))
    assert (m1 @ m2)(z).is_close(m1(m2(z)), 1e-9)
    assert m1.inverse()(m1(z)).is_close(z, 1e-9)


def test_singular_matrix_rejected(field):
    with pytest.raises(ValidationError):
        MoebiusMap.from_entries(field, 1.0, 2.0, 2.0, 4.0)


def hermitian_image(m, S):
    A, beta, C = S.coeffs
    h = np.zeros((2, 2, 4))
    h[0, 0, 0] = A
    h[0, 1] = -beta
    h[1, 0] = -qconj(beta)
    h[1, 1, 0] = C
    minv = m.matrix.inv()
    hp = matmul(matmul(conj_transpose(minv), KMatrix(m.field, h)), minv).data
    return SpherePlane.from_coeffs(m.field, hp[0, 0, 0], -hp[0, 1], hp[1, 1, 0])


def test_map_sphere_closed_form(field, rng):
    for _ in range(50):
        m = MoebiusMap(random_kmatrix(field, 2, 2, rng))
        S = SpherePlane.sphere(field, random_scalars(field, rng), rng.uniform(0.3, 2.0))
        img = map_sphereplane(m, S, seed=int(rng.integers(1 << 30)))
        assert img.is_close(hermitian_image(m, S), 1e-8)


def test_map_sphere_identity_keeps_gauge(field, rng):
    S = SpherePlane(field, random_scalars(field, rng), random_scalars(field, rng), 1.7)
    img = map_sphereplane(MoebiusMap.identity(field), S)
    assert img.is_close(S, 1e-10)
    assert img.R == pytest.approx(S.R, rel=1e-8)


def test_inversion_sends_unit_sphere_through_one_to_plane(field):
    S = SpherePlane.sphere(field, 1.0, 1.0)
    inv = MoebiusMap.from_entries(field, 0.0, 1.0, 1.0, 0.0)
    img = map_sphereplane(inv, S)
    assert img.is_plane
    assert img.residual([[0.5, 0, 0, 0]])[0] <= 1e-10


def test_sphere_gauge(field, rng):
    S = SpherePlane(field, random_scalars(field, rng), random_scalars(field, rng), 0.4)
    assert S.R >= 1.0
    assert np.sqrt(qabs2(S.a - S.b)) == pytest.approx(1.0, rel=1e-10)
    assert S.residual(S.sample(20, rng)).max() <= 1e-12
    assert SpherePlane.from_json(S.to_json()).is_close(S, 1e-12)


def test_empty_locus_rejected(field):
    with pytest.raises(ValidationError):
        SpherePlane(field, 1.0, 1.0, 1.0)


def test_halfspace_membership_examples(field, rng):
    w = imaginary(field, rng)
    assert halfspace_aut_membership(MoebiusMap(u_matrix(field, w))).member
    assert halfspace_aut_membership(MoebiusMap(v_matrix(field, w))).member
    assert halfspace_aut_membership(MoebiusMap.from_entries(field, 2.0, 0.0, 0.0, 0.5)).member
    assert not halfspace_aut_membership(MoebiusMap.from_entries(field, -1.0, 0.0, 0.0, 1.0)).member
    assert not halfspace_aut_membership(MoebiusMap(u_matrix(field, 1.0))).member
    assert not halfspace_aut_membership(cayley(field)).member


def test_halfspace_rotation_in_normal_form():
    # z -> i z conj(i) is fine, z -> i z is not
    rot = MoebiusMap.from_entries(Field.C, [0, 1], 0.0, 0.0, [0, 1])
    assert halfspace_aut_membership(rot).member
    assert not halfspace_aut_membership(MoebiusMap.from_entries(Field.C, [0, 1], 0.0, 0.0, 1.0)).member


def test_generate_empty_word(field):
    assert np.array_equal(generate_from_UV([], field).matrix.data, np.eye(2)[:, :, None] * [1, 0, 0, 0])


def test_generate_rejects_real_parameter(field):
    with pytest.raises(ValidationError):
        generate_from_UV([("U", 1.0)], field)
    with pytest.raises(ValidationError):
        generate_from_UV([("W", 0.0)], field)


def test_u_preserves_real_part(field, rng):
    w = imaginary(field, rng)
    z = halfspace_samples(field, 30, rng)
    img = apply_batch(generate_from_UV([("U", w)], field), z)
    assert np.allclose(img[:, 0], z[:, 0], rtol=1e-12)


def test_words_preserve_halfspace(field, rng):
    for _ in range(10):
        word = [("UV"[int(rng.integers(2))], imaginary(field, rng)) for _ in range(6)]
        m = generate_from_UV(word, field)
        assert halfspace_aut_membership(m, seed=3).member


def test_bracket_diagonal():
    u = Scalar.of(Field.H, 0, 1, 2, 0)
    w = Scalar.of(Field.H, 0, 0, 1, 3)
    br = uv_bracket(Field.H, w, u).data
    assert np.allclose(br[0, 0], (w * u).array())
    assert np.allclose(br[1, 1], -(u * w).array())
    assert np.abs(br[0, 1]).max() == 0 and np.abs(br[1, 0]).max() == 0


def test_cayley_conjugates_preserve_ball(field, rng):
    c = cayley(field)
    for _ in range(5):
        word = [("UV"[i % 2], imaginary(field, rng)) for i in range(4)]
        g = c @ generate_from_UV(word, field) @ c.inverse()
        z = random_scalars(field, rng, 200)
        z *= (rng.random(200) ** (1 / field.r) / np.sqrt(qabs2(z)))[:, None] * 0.999
        assert (qabs2(apply_batch(g, z)) < 1.0).all()
        sph = z / np.sqrt(qabs2(z))[:, None]
        assert np.allclose(qabs2(apply_batch(g, sph)), 1.0, atol=1e-9)


def test_transitivity(field, rng):
    for _ in range(10):
        x = imaginary(field, rng)
        assert to_zero_from_boundary(field, x)(x).is_close(ExtendedScalar(field, 0.0), 1e-12)
        p = halfspace_samples(field, 1, rng)[0]
        m = to_one_from_interior(field, p)
        assert m(p).is_close(ExtendedScalar(field, 1.0), 1e-9)
        assert halfspace_aut_membership(m).member


def test_transitivity_rejects_bad_points(field):
    with pytest.raises(ValidationError):
        to_zero_from_boundary(field, 1.0)
    with pytest.raises(ValidationError):
        to_one_from_interior(field, -1.0)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_extended_scalar_json(a, b, c):
    z = ExtendedScalar(Field.H, [0.5, a, b, c])
    assert ExtendedScalar.from_json(Field.H, z.to_json()).is_close(z, 0)
    assert ExtendedScalar.from_json(Field.H, INF(Field.H).to_json()).is_infinite


def test_zero_vector_not_a_point(field):
    with pytest.raises(GeometryError):
        ExtendedScalar.project(field, np.zeros((2, 4)))
