import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import oracle_mul
from kprojective import _kernels
from kprojective._kernels import python as py

needs_compiled = pytest.mark.skipif(_kernels.compiled is None, reason="compiled kernels not built")


def arr(rng, *shape):
    return rng.standard_normal(shape + (4,))


def test_python_qmatvec_matches_oracle(rng):
    a, v = arr(rng, 3, 3), arr(rng, 3)
    want = np.array([sum(oracle_mul(a[i, j], v[j]) for j in range(3)) for i in range(3)])
    assert np.allclose(py.qmatvec(a, v), want, atol=1e-13)


def test_python_abs_pairing_matches_direct(rng):
    f, p = arr(rng, 4, 3), arr(rng, 5, 3)
    got = py.abs_pairing(f, p)
    for i in range(4):
        for k in range(5):
            ip = sum(oracle_mul(f[i, j] * [1, -1, -1, -1], p[k, j]) for j in range(3))
            assert got[i, k] == pytest.approx(np.linalg.norm(ip), rel=1e-12)


def test_canonical_rep_properties(rng):
    v = arr(rng, 4)
    v[0] = 0.0
    w, piv = py.canonicalize_rep(v)
    assert piv == 1 and w[1, 0] > 0 and np.all(w[1, 1:] == 0)
    assert np.sqrt((w * w).sum()) == pytest.approx(1.0)
    assert py.canonicalize_rep(np.zeros((3, 4)))[1] == -1


@needs_compiled
@given(st.integers(0, 2 ** 32 - 1))
def test_qmatmul_agrees(seed):
    rng = np.random.default_rng(seed)
    a, b = arr(rng, 3, 4), arr(rng, 4, 2)
    assert np.allclose(_kernels.compiled.qmatmul(a, b), py.qmatmul(a, b), atol=1e-12)
    v = arr(rng, 4)
    assert np.allclose(_kernels.compiled.qmatvec(a, v), py.qmatvec(a, v), atol=1e-12)


@needs_compiled
@given(st.integers(0, 2 ** 32 - 1))
def test_canonicalize_and_chordal_agree(seed):
    rng = np.random.default_rng(seed)
    v, u = arr(rng, 4), arr(rng, 4)
    wc, pc = _kernels.compiled.canonicalize_rep(v)
    wp, pp = py.canonicalize_rep(v)
    assert pc == pp and np.allclose(wc, wp, atol=1e-14)
    u = py.canonicalize_rep(u)[0]
    assert _kernels.compiled.chordal(wp, u) == pytest.approx(py.chordal(wp, u), abs=1e-14)


@needs_compiled
def test_min_abs_pairing_agrees(rng):
    f, p = arr(rng, 20, 3), arr(rng, 5000, 3)
    assert np.allclose(_kernels.compiled.min_abs_pairing(f, p), py.min_abs_pairing(f, p, 512),
                       rtol=1e-12, atol=1e-14)


@needs_compiled
def test_orbit_and_power_agree(rng):
    m = np.zeros((3, 3, 4))
    for i, s in enumerate((3.0, 1.0, 0.5)):
        m[i, i, 0] = s
    g = arr(rng, 3, 3)
    from kprojective.kmatrix import KMatrix

    gk = KMatrix("h", g)
    m = (gk @ KMatrix("h", m) @ gk.inv()).data
    v = arr(rng, 3)
    assert np.allclose(_kernels.compiled.normalized_orbit(m, v, 15), py.normalized_orbit(m, v, 15),
                       atol=1e-12)
    rc, ic, cc, _ = _kernels.compiled.power_iterate(m, v, 500, 1e-13)
    rp, ip, cp, _ = py.power_iterate(m, v, 500, 1e-13)
    assert cc and cp and ic == ip
    assert np.allclose(rc, rp, atol=1e-12)


def test_backend_name():
    assert _kernels.BACKEND in ("cython", "python")
