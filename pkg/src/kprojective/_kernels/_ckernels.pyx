# cython: language_level=3
"""Compiled twins of the kernels in ``_pykernels``.

Same signatures and semantics; arrays must be C-contiguous float64 with a
trailing axis of 4 quaternion coefficients.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()

BACKEND = "cython"


cdef inline void _qmul_acc(const double* a, const double* b, double* r) noexcept nogil:
    r[0] += a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    r[1] += a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    r[2] += a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    r[3] += a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]


cdef inline void _qconjmul_acc(const double* a, const double* b, double* r) noexcept nogil:
    # r += conj(a) * b
    r[0] += a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
    r[1] += a[0] * b[1] - a[1] * b[0] - a[2] * b[3] + a[3] * b[2]
    r[2] += a[0] * b[2] + a[1] * b[3] - a[2] * b[0] - a[3] * b[1]
    r[3] += a[0] * b[3] - a[1] * b[2] + a[2] * b[1] - a[3] * b[0]


def qmatmul(a, b):
    cdef const double[:, :, ::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, :, ::1] B = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0], m = A.shape[1], p = B.shape[1]
    if B.shape[0] != m:
        raise ValueError("inner dimensions differ")
    out = np.zeros((n, p, 4))
    cdef double[:, :, ::1] O = out
    cdef Py_ssize_t i, j, k
    with nogil:
        for i in range(n):
            for k in range(p):
                for j in range(m):
                    _qmul_acc(&A[i, j, 0], &B[j, k, 0], &O[i, k, 0])
    return out


cdef void _matvec(const double[:, :, ::1] M, const double[:, ::1] v, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = M.shape[0], m = M.shape[1], i, j, c
    for i in range(n):
        for c in range(4):
            out[i, c] = 0.0
        for j in range(m):
            _qmul_acc(&M[i, j, 0], &v[j, 0], &out[i, 0])


def qmatvec(a, v):
    cdef const double[:, :, ::1] M = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, ::1] V = np.ascontiguousarray(v, dtype=np.float64)
    out = np.zeros((M.shape[0], 4))
    _matvec(M, V, out)
    return out


def min_abs_pairing(f, p, chunk=0):
    cdef const double[:, :, ::1] F = np.ascontiguousarray(f, dtype=np.float64)
    cdef const double[:, :, ::1] P = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t m = F.shape[0], k = P.shape[0], n = F.shape[1]
    out = np.empty(m)
    cdef double[::1] O = out
    cdef double acc[4]
    cdef double best, val
    cdef Py_ssize_t a, b, i
    with nogil:
        for a in range(m):
            best = INFINITY
            for b in range(k):
                acc[0] = 0.0; acc[1] = 0.0; acc[2] = 0.0; acc[3] = 0.0
                for i in range(n):
                    _qconjmul_acc(&F[a, i, 0], &P[b, i, 0], acc)
                val = acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2] + acc[3] * acc[3]
                if val < best:
                    best = val
            O[a] = sqrt(best)
    return out


cdef int _canonicalize(double[:, ::1] v, double pivot_rel) noexcept nogil:
    cdef Py_ssize_t n = v.shape[0], i, piv = -1
    cdef double top = 0.0, m2, a0, a1, a2, a3, b0, b1, b2, b3, s, norm2 = 0.0
    for i in range(n):
        m2 = v[i, 0] * v[i, 0] + v[i, 1] * v[i, 1] + v[i, 2] * v[i, 2] + v[i, 3] * v[i, 3]
        if m2 > top:
            top = m2
    if top == 0.0:
        return -1
    for i in range(n):
        m2 = v[i, 0] * v[i, 0] + v[i, 1] * v[i, 1] + v[i, 2] * v[i, 2] + v[i, 3] * v[i, 3]
        if sqrt(m2) > pivot_rel * sqrt(top):
            piv = i
            break
    s = sqrt(v[piv, 0] * v[piv, 0] + v[piv, 1] * v[piv, 1] + v[piv, 2] * v[piv, 2]
             + v[piv, 3] * v[piv, 3])
    # right-multiply every coordinate by alpha = conj(v_piv) / |v_piv|
    b0 = v[piv, 0] / s
    b1 = -v[piv, 1] / s
    b2 = -v[piv, 2] / s
    b3 = -v[piv, 3] / s
    for i in range(n):
        a0 = v[i, 0]; a1 = v[i, 1]; a2 = v[i, 2]; a3 = v[i, 3]
        v[i, 0] = a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3
        v[i, 1] = a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2
        v[i, 2] = a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1
        v[i, 3] = a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0
    v[piv, 1] = 0.0; v[piv, 2] = 0.0; v[piv, 3] = 0.0
    for i in range(n):
        norm2 += v[i, 0] * v[i, 0] + v[i, 1] * v[i, 1] + v[i, 2] * v[i, 2] + v[i, 3] * v[i, 3]
    s = sqrt(norm2)
    for i in range(n):
        v[i, 0] /= s; v[i, 1] /= s; v[i, 2] /= s; v[i, 3] /= s
    return <int>piv


cdef double _chordal(const double[:, ::1] u, const double[:, ::1] w) noexcept nogil:
    cdef Py_ssize_t n = u.shape[0], i
    cdef double ip[4]
    cdef double r[4]
    cdef double tot = 0.0
    ip[0] = 0.0; ip[1] = 0.0; ip[2] = 0.0; ip[3] = 0.0
    for i in range(n):
        _qconjmul_acc(&u[i, 0], &w[i, 0], ip)
    for i in range(n):
        r[0] = 0.0; r[1] = 0.0; r[2] = 0.0; r[3] = 0.0
        _qmul_acc(&u[i, 0], ip, r)
        tot += ((w[i, 0] - r[0]) ** 2 + (w[i, 1] - r[1]) ** 2
                + (w[i, 2] - r[2]) ** 2 + (w[i, 3] - r[3]) ** 2)
    return sqrt(tot)


def canonicalize_rep(v, pivot_rel=1e-12):
    out = np.array(v, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] V = out
    piv = _canonicalize(V, pivot_rel)
    return out, piv


def chordal(u, w):
    cdef const double[:, ::1] U = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[:, ::1] W = np.ascontiguousarray(w, dtype=np.float64)
    return _chordal(U, W)


def normalized_orbit(m, v, Py_ssize_t steps, double pivot_rel=1e-12):
    cdef const double[:, :, ::1] M = np.ascontiguousarray(m, dtype=np.float64)
    out = np.empty((steps + 1, v.shape[0], 4))
    cdef double[:, :, ::1] O = out
    cur_arr = np.array(v, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] cur = cur_arr
    cdef double[:, ::1] nxt = np.empty_like(cur_arr)
    cdef Py_ssize_t s
    with nogil:
        _canonicalize(cur, pivot_rel)
        O[0, :, :] = cur
        for s in range(1, steps + 1):
            _matvec(M, cur, nxt)
            _canonicalize(nxt, pivot_rel)
            cur[:, :] = nxt
            O[s, :, :] = cur
    return out


def power_iterate(m, v, Py_ssize_t maxit, double tol, double pivot_rel=1e-12):
    cdef const double[:, :, ::1] M = np.ascontiguousarray(m, dtype=np.float64)
    cur_arr = np.array(v, dtype=np.float64, order="C", copy=True)
    nxt_arr = np.empty_like(cur_arr)
    cdef double[:, ::1] cur = cur_arr
    cdef double[:, ::1] nxt = nxt_arr
    cdef double change = INFINITY
    cdef Py_ssize_t it
    cdef int piv = 0
    cdef bint done = False
    _canonicalize(cur, pivot_rel)
    with nogil:
        for it in range(1, maxit + 1):
            _matvec(M, cur, nxt)
            piv = _canonicalize(nxt, pivot_rel)
            if piv < 0:
                break
            change = _chordal(cur, nxt)
            cur[:, :] = nxt
            if change <= tol:
                done = True
                break
    if not done and piv >= 0:
        it = maxit
    return cur_arr, int(it), bool(done), float(change)
