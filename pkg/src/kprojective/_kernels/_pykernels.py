"""Reference numpy implementations of the hot kernels.

These are the fallbacks used when the compiled extension is unavailable and
the oracle the compiled versions are tested against.  All arrays carry a
trailing axis of 4 real coefficients (see :mod:`kprojective.kscalar`).
"""

import numpy as np

from ..kscalar import MULT_TABLE, qconj, qmul

BACKEND = "python"


def qmatmul(a, b):
    return np.einsum("ija,jkb,abc->ikc", a, b, MULT_TABLE, optimize=True)


def qmatvec(a, v):
    return qmul(a, v[None, :, :]).sum(axis=1)


def _split(x):
    # q = z1 + z2 j with z1 = a + b i, z2 = c + d i
    return x[..., 0] + 1j * x[..., 1], x[..., 2] + 1j * x[..., 3]


def abs_pairing(f, p):
    """|<f_a, p_b>| for f of shape (m, n, 4) and p of shape (k, n, 4)."""
    a, b = _split(np.asarray(f, dtype=float))
    c, e = _split(np.asarray(p, dtype=float))
    # conj(a + b j)(c + e j) = (conj(a) c + b conj(e)) + (conj(a) e - b conj(c)) j
    x = a.conj() @ c.T + b @ e.conj().T
    y = a.conj() @ e.T - b @ c.conj().T
    return np.sqrt(np.abs(x) ** 2 + np.abs(y) ** 2)


def min_abs_pairing(f, p, chunk=2048):
    """Per-functional minimum of |<f, p>| over the point batch."""
    f = np.asarray(f, dtype=float)
    p = np.asarray(p, dtype=float)
    out = np.full(f.shape[0], np.inf)
    for start in range(0, p.shape[0], chunk):
        block = abs_pairing(f, p[start:start + chunk])
        np.minimum(out, block.min(axis=1), out=out)
    return out


def canonicalize_rep(v, pivot_rel=1e-12):
    """Unit rep whose first significant coordinate is real and positive."""
    v = np.array(v, dtype=float)
    mods = np.sqrt((v * v).sum(axis=-1))
    top = mods.max()
    if top == 0.0:
        return v, -1
    piv = int(np.argmax(mods > pivot_rel * top))
    alpha = qconj(v[piv]) / mods[piv]
    w = qmul(v, alpha[None, :])
    w[piv, 1:] = 0.0
    w /= np.sqrt((w * w).sum())
    return w, piv


def chordal(u, w):
    """sin of the angle between the K-lines of unit vectors u and w."""
    ip = qmul(qconj(u), w).sum(axis=0)
    resid = w - qmul(u, ip[None, :])
    return float(np.sqrt((resid * resid).sum()))


def normalized_orbit(m, v, steps, pivot_rel=1e-12):
    out = np.empty((steps + 1,) + v.shape)
    cur, _ = canonicalize_rep(v, pivot_rel)
    out[0] = cur
    for s in range(1, steps + 1):
        cur, _ = canonicalize_rep(qmatvec(m, cur), pivot_rel)
        out[s] = cur
    return out


def power_iterate(m, v, maxit, tol, pivot_rel=1e-12):
    """Return (rep, iterations, converged, last_step_distance)."""
    cur, _ = canonicalize_rep(v, pivot_rel)
    change = np.inf
    for it in range(1, maxit + 1):
        nxt, piv = canonicalize_rep(qmatvec(m, cur), pivot_rel)
        if piv < 0:
            return cur, it, False, change
        change = chordal(cur, nxt)
        cur = nxt
        if change <= tol:
            return cur, it, True, change
    return cur, maxit, False, change
