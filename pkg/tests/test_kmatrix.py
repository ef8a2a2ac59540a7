import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kprojective.errors import DimensionError, NotHermitianError, NotPositiveDefiniteError
from kprojective.kmatrix import (
    KMatrix, complex_embedding, conj_transpose, det_abs, eigen_lines, from_complex_embedding,
    hermitian_congruence_normalize, kak_decompose, lie_bracket, matmul, operator_norm,
    operator_norm_power, random_kmatrix, random_unitary, sigma_spectrum, unitarity_residual,
)
from kprojective.kscalar import Field, random_scalars

H, C, R = Field.H, Field.C, Field.R


def rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


def test_double_conj_transpose(field, rng):
    a = random_kmatrix(field, 3, 2, rng)
    assert conj_transpose(conj_transpose(a)).allclose(a, 0.0)


def test_operator_norm_identity(field):
    assert operator_norm(KMatrix.identity(field, 4)) == pytest.approx(1.0)


def test_operator_norm_power_matches_kak(field, rng):
    a = random_kmatrix(field, 3, 3, rng)
    assert operator_norm_power(a) == pytest.approx(kak_decompose(a).a[0], rel=1e-9)


def test_embedding_of_one_by_one_quaternion():
    q = KMatrix(H, [[[1.0, 2.0, 3.0, 4.0]]])
    np.testing.assert_allclose(complex_embedding(q), [[1 + 2j, 3 + 4j], [-3 + 4j, 1 - 2j]])


def test_embedding_identity_and_j_squared():
    np.testing.assert_allclose(complex_embedding(KMatrix.identity(H, 3)), np.eye(6))
    j = complex_embedding(KMatrix(H, [[[0, 0, 1, 0]]]))
    np.testing.assert_allclose(j @ j, -np.eye(2))


def test_embedding_homomorphism_scalars(rng):
    for _ in range(1000):
        x = KMatrix(H, random_scalars(H, rng, (1, 1)))
        y = KMatrix(H, random_scalars(H, rng, (1, 1)))
        assert rel(complex_embedding(matmul(x, y)), complex_embedding(x) @ complex_embedding(y)) <= 1e-11


def test_embedding_homomorphism_matrices(field, rng):
    for _ in range(50):
        a = random_kmatrix(field, 3, 4, rng)
        b = random_kmatrix(field, 4, 2, rng)
        assert rel(complex_embedding(a @ b), complex_embedding(a) @ complex_embedding(b)) <= 1e-11


def test_embedding_projection_roundtrip(rng):
    a = random_kmatrix(H, 3, 3, rng)
    assert from_complex_embedding(complex_embedding(a), tol=1e-12).allclose(a, 1e-14)


def test_det_abs_examples():
    assert det_abs(KMatrix.identity(H, 3)) == pytest.approx(1.0)
    assert det_abs(KMatrix(H, [[[2.0, 0, 0, 0]]])) == pytest.approx(4.0)


def test_det_multiplicative(field, rng):
    for _ in range(50):
        a, b = random_kmatrix(field, 3, 3, rng), random_kmatrix(field, 3, 3, rng)
        assert det_abs(a @ b) == pytest.approx(det_abs(a) * det_abs(b), rel=1e-10)


def test_sigma_examples():
    assert sigma_spectrum(KMatrix.diag(R, [3.0, 1.0, 1.0 / 3.0])).sigmas == pytest.approx((1 / 3, 1, 3))
    assert sigma_spectrum(KMatrix(R, [[1.0, 1.0], [0.0, 1.0]])).sigmas == pytest.approx((1, 1))
    assert sigma_spectrum(KMatrix.diag(H, [2.0, 0.5])).sigmas == pytest.approx((0.5, 2.0))


@given(st.floats(min_value=-50, max_value=50).filter(lambda x: abs(x) > 1e-3), st.integers(0, 2**31))
def test_sigma_projective_scale_invariance(lam, seed):
    rng = np.random.default_rng(seed)
    for field in (R, C, H):
        a = random_kmatrix(field, 3, 3, rng)
        np.testing.assert_allclose(sigma_spectrum(a * lam).sigmas, sigma_spectrum(a).sigmas, rtol=1e-10)


def test_sigma_product_one_and_pairing(rng):
    for _ in range(200):
        s = sigma_spectrum(random_kmatrix(H, 3, 3, rng))
        assert s.pair_residual <= 1e-8
        assert np.prod(s.sigmas) == pytest.approx(1.0, rel=1e-10)


def test_sigma_against_embedding_eigenvalues(rng):
    a = random_kmatrix(H, 3, 3, rng)
    e = complex_embedding(a)
    mods = np.sort(np.abs(np.linalg.eigvals(e)))[::2]
    mods = mods / abs(np.linalg.det(e)) ** (1 / 6)
    np.testing.assert_allclose(sigma_spectrum(a).sigmas, mods, rtol=1e-8)


def test_kak_unitary_and_diag(field, rng):
    u = random_unitary(field, 3, rng)
    np.testing.assert_allclose(kak_decompose(u).a, [1, 1, 1], atol=1e-12)
    f = kak_decompose(KMatrix.diag(field, [5.0, 1.0]))
    np.testing.assert_allclose(f.a, [5, 1])
    assert (f.reconstruct() - KMatrix.diag(field, [5.0, 1.0])).norm_fro() <= 1e-10


def test_kak_random_quaternionic(rng):
    for _ in range(100):
        a = random_kmatrix(H, 3, 3, rng)
        f = kak_decompose(a)
        assert (f.reconstruct() - a).norm_fro() <= 1e-9 * a.norm_fro()
        assert unitarity_residual(f.k1) <= 1e-10 and unitarity_residual(f.k2) <= 1e-10
        sv = np.linalg.svd(complex_embedding(a), compute_uv=False)[::2]
        np.testing.assert_allclose(f.a, sv, rtol=1e-10)


def test_congruence_examples(field):
    g = hermitian_congruence_normalize(KMatrix.identity(field, 3))
    assert g.allclose(KMatrix.identity(field, 3), 1e-15)
    a = KMatrix.diag(field, [4.0, 9.0])
    g = hermitian_congruence_normalize(a)
    assert (conj_transpose(g) @ a @ g).allclose(KMatrix.identity(field, 2), 1e-14)
    np.testing.assert_allclose(g.data[[0, 1], [0, 1], 0], [0.5, 1 / 3])


def test_congruence_random_pd(field, rng):
    for _ in range(50):
        b = random_kmatrix(field, 4, 4, rng)
        a = conj_transpose(b) @ b + KMatrix.identity(field, 4)
        g = hermitian_congruence_normalize(a)
        assert np.abs((conj_transpose(g) @ a @ g - KMatrix.identity(field, 4)).data).max() <= 1e-10


def test_congruence_rejects():
    with pytest.raises(NotHermitianError):
        hermitian_congruence_normalize(KMatrix(R, [[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NotPositiveDefiniteError):
        hermitian_congruence_normalize(KMatrix.diag(R, [1.0, -1.0]))


def test_lie_bracket_nilpotent_pair(rng):
    w = random_scalars(H, rng)
    u = random_scalars(H, rng)
    w[0] = u[0] = 0.0
    up = np.zeros((2, 2, 4))
    lo = np.zeros((2, 2, 4))
    up[0, 1], lo[1, 0] = w, u
    br = lie_bracket(KMatrix(H, up), KMatrix(H, lo))
    wu = KMatrix(H, [[w]]) @ KMatrix(H, [[u]])
    uw = KMatrix(H, [[u]]) @ KMatrix(H, [[w]])
    np.testing.assert_allclose(br.data[0, 0], wu.data[0, 0], atol=1e-14)
    np.testing.assert_allclose(br.data[1, 1], -uw.data[0, 0], atol=1e-14)
    assert np.abs(br.data[0, 1]).max() == 0.0 and np.abs(br.data[1, 0]).max() == 0.0


def test_lie_bracket_self_and_jacobi(field, rng):
    a, b, c = (random_kmatrix(field, 3, 3, rng) for _ in range(3))
    assert np.abs(lie_bracket(a, a).data).max() == 0.0
    jac = (lie_bracket(a, lie_bracket(b, c)) + lie_bracket(b, lie_bracket(c, a))
           + lie_bracket(c, lie_bracket(a, b)))
    assert np.abs(jac.data).max() <= 1e-12 * max(1.0, a.norm_fro() * b.norm_fro() * c.norm_fro())


def test_eigen_lines_diagonal():
    lines = eigen_lines(KMatrix.diag(R, [0.5, 3.0, 1.0]))
    assert [round(abs(l), 12) for l, _ in lines] == [3.0, 1.0, 0.5]
    assert abs(lines[0][1][1, 0]) == pytest.approx(1.0)


def test_shape_checks(rng):
    with pytest.raises(DimensionError):
        random_kmatrix(R, 2, 3, rng) @ random_kmatrix(R, 2, 3, rng)
    with pytest.raises(DimensionError):
        sigma_spectrum(random_kmatrix(R, 2, 3, rng))


def test_json_roundtrip(field, rng):
    a = random_kmatrix(field, 2, 3, rng)
    assert KMatrix.from_json(a.to_json()).allclose(a, 0.0)
