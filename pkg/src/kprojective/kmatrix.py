"""Dense matrices over R, C and H.

A :class:`KMatrix` stores its entries as a ``(rows, cols, 4)`` float array.
Spectral questions over H are answered through the complex embedding
``M_n(H) -> M_2n(C)`` (never by a native quaternionic QR): each entry
``z1 + z2 j`` becomes the 2x2 block ``[[z1, z2], [-conj(z2), conj(z1)]]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .config import DEFAULTS
from .errors import (
    ConvergenceError, DimensionError, NotHermitianError, NotPositiveDefiniteError,
    SpectralPairingError, TagMismatchError, ValidationError,
)
from .kscalar import Field, Scalar, enforce_field, kinner, qconj, qmul, random_scalars

__all__ = [
    "KMatrix", "SigmaSpectrum", "KakFactors",
    "matmul", "conj_transpose", "operator_norm", "operator_norm_power",
    "complex_embedding", "from_complex_embedding", "vector_embedding", "vector_from_embedding",
    "det_abs", "sigma_spectrum", "kak_decompose", "hermitian_congruence_normalize",
    "lie_bracket", "eigen_lines", "random_kmatrix", "random_unitary", "gram_schmidt",
    "unitarity_residual",
]


class KMatrix:
    """Immutable dense matrix over a field."""

    __slots__ = ("field", "data")

    def __init__(self, field, data):
        field = Field.parse(field)
        arr = np.asarray(data, dtype=float)
        if arr.ndim == 2:
            arr = arr[..., None]
        if arr.ndim != 3 or arr.shape[2] > 4:
            raise DimensionError(f"expected (rows, cols, <=4) array, got shape {arr.shape}")
        if arr.shape[2] < 4:
            arr = np.concatenate([arr, np.zeros(arr.shape[:2] + (4 - arr.shape[2],))], axis=2)
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise DimensionError("matrices must have positive dimensions")
        arr = enforce_field(arr, field)
        arr.setflags(write=False)
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("KMatrix is immutable")

    # construction -------------------------------------------------------
    @classmethod
    def identity(cls, field, n: int) -> "KMatrix":
        data = np.zeros((n, n, 4))
        data[np.arange(n), np.arange(n), 0] = 1.0
        return cls(field, data)

    @classmethod
    def diag(cls, field, entries) -> "KMatrix":
        field = Field.parse(field)
        entries = [e.array() if isinstance(e, Scalar) else np.atleast_1d(np.asarray(e, float))
                   for e in entries]
        n = len(entries)
        data = np.zeros((n, n, 4))
        for i, e in enumerate(entries):
            data[i, i, :e.size] = e
        return cls(field, data)

    @classmethod
    def from_complex(cls, field, arr) -> "KMatrix":
        """Build an R or C matrix from a numpy (real or complex) array."""
        field = Field.parse(field)
        if field is Field.H:
            raise ValidationError("use from_complex_embedding for quaternionic matrices")
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise DimensionError("expected a 2-d array")
        data = np.zeros(arr.shape + (4,))
        data[..., 0] = arr.real
        if field is Field.C:
            data[..., 1] = arr.imag
        elif np.iscomplexobj(arr) and np.abs(arr.imag).max(initial=0.0) > 0:
            raise ValidationError("complex entries in a real matrix")
        return cls(field, data)

    # basic properties ---------------------------------------------------
    @property
    def shape(self):
        return self.data.shape[:2]

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def entry(self, i: int, j: int) -> Scalar:
        return Scalar.from_array(self.field, self.data[i, j])

    @property
    def H(self) -> "KMatrix":
        return conj_transpose(self)

    def to_complex(self) -> np.ndarray:
        """Native complex array (R, C only)."""
        if self.field is Field.H:
            raise ValidationError("quaternionic matrices have no native complex form")
        return self.data[..., 0] + 1j * self.data[..., 1]

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "KMatrix") -> None:
        if not isinstance(other, KMatrix):
            raise TypeError(f"expected KMatrix, got {type(other).__name__}")
        if other.field is not self.field:
            raise TagMismatchError(f"field {self.field.value} vs {other.field.value}")

    def __matmul__(self, other):
        if isinstance(other, np.ndarray):
            return self.apply(other)
        return matmul(self, other)

    def __add__(self, other):
        self._check(other)
        if other.shape != self.shape:
            raise DimensionError(f"{self.shape} + {other.shape}")
        return KMatrix(self.field, self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        if other.shape != self.shape:
            raise DimensionError(f"{self.shape} - {other.shape}")
        return KMatrix(self.field, self.data - other.data)

    def __neg__(self):
        return KMatrix(self.field, -self.data)

    def __mul__(self, s):
        """Multiplication by a real number."""
        if not np.isscalar(s) or np.iscomplexobj(s):
            raise TypeError("KMatrix * x needs a real number; use right_scale for field scalars")
        return KMatrix(self.field, self.data * float(s))

    __rmul__ = __mul__

    def right_scale(self, s: Scalar) -> "KMatrix":
        """Entrywise right multiplication by a field scalar."""
        return KMatrix(self.field, qmul(self.data, s.array()))

    def left_scale(self, s: Scalar) -> "KMatrix":
        return KMatrix(self.field, qmul(s.array(), self.data))

    def apply(self, v) -> np.ndarray:
        """Matrix times a (cols, 4) vector."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.cols, 4):
            raise DimensionError(f"vector shape {v.shape} vs matrix {self.shape}")
        if self.field is Field.H:
            return _kernels.qmatvec(self.data, v)
        return qmul(self.data, v[None, :, :]).sum(axis=1)

    def inv(self) -> "KMatrix":
        if self.rows != self.cols:
            raise DimensionError("inverse of a non-square matrix")
        try:
            if self.field is Field.H:
                return from_complex_embedding(np.linalg.inv(complex_embedding(self)))
            return KMatrix.from_complex(self.field, np.linalg.inv(self.to_complex()))
        except np.linalg.LinAlgError as exc:
            raise ValidationError(f"singular matrix: {exc}") from None

    def norm_fro(self) -> float:
        return float(np.sqrt((self.data ** 2).sum()))

    def allclose(self, other: "KMatrix", atol: float = 1e-10) -> bool:
        self._check(other)
        return self.shape == other.shape and float(np.abs(self.data - other.data).max()) <= atol

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        r = self.field.r
        return {
            "field": self.field.value,
            "rows": self.rows,
            "cols": self.cols,
            "entries": [[list(map(float, self.data[i, j, :r])) for j in range(self.cols)]
                        for i in range(self.rows)],
        }

    @classmethod
    def from_json(cls, payload) -> "KMatrix":
        try:
            field = Field.parse(payload["field"])
            entries = payload["entries"]
        except (KeyError, TypeError):
            raise ValidationError("matrix JSON needs 'field' and 'entries'") from None
        rows = len(entries)
        cols = len(entries[0]) if rows else 0
        if payload.get("rows", rows) != rows or payload.get("cols", cols) != cols:
            raise ValidationError("declared rows/cols disagree with entries")
        data = np.zeros((rows, cols, 4))
        for i, row in enumerate(entries):
            if len(row) != cols:
                raise ValidationError("ragged matrix entries")
            for j, val in enumerate(row):
                val = [val] if isinstance(val, (int, float)) else list(val)
                if len(val) != field.r:
                    raise ValidationError(
                        f"field {field.value} entries take {field.r} numbers, got {len(val)}")
                data[i, j, :field.r] = val
        return cls(field, data)

    def __repr__(self):
        return f"KMatrix[{self.field.value}]{self.shape}"


def matmul(a: KMatrix, b: KMatrix) -> KMatrix:
    a._check(b)
    if a.cols != b.rows:
        raise DimensionError(f"{a.shape} @ {b.shape}")
    if a.field is Field.H:
        return KMatrix(a.field, _kernels.qmatmul(a.data, b.data))
    return KMatrix.from_complex(a.field, a.to_complex() @ b.to_complex())


def conj_transpose(a: KMatrix) -> KMatrix:
    return KMatrix(a.field, qconj(a.data.transpose(1, 0, 2)))


def lie_bracket(a: KMatrix, b: KMatrix) -> KMatrix:
    if a.shape != b.shape or a.rows != a.cols:
        raise DimensionError(f"bracket of {a.shape} and {b.shape}")
    return matmul(a, b) - matmul(b, a)


# complex embedding --------------------------------------------------------

def complex_embedding(m: KMatrix) -> np.ndarray:
    """Complex matrix of ``m``: as-is for R and C, doubled size for H."""
    if m.field is not Field.H:
        return m.to_complex()
    z1 = m.data[..., 0] + 1j * m.data[..., 1]
    z2 = m.data[..., 2] + 1j * m.data[..., 3]
    out = np.empty((2 * m.rows, 2 * m.cols), dtype=complex)
    out[0::2, 0::2] = z1
    out[0::2, 1::2] = z2
    out[1::2, 0::2] = -z2.conj()
    out[1::2, 1::2] = z1.conj()
    return out


def from_complex_embedding(e, tol: float | None = None) -> KMatrix:
    """Project a 2n x 2m complex matrix onto the image of the H embedding.

    With ``tol`` set, a relative projection residual above it raises
    :class:`ConvergenceError`.
    """
    e = np.asarray(e, dtype=complex)
    if e.ndim != 2 or e.shape[0] % 2 or e.shape[1] % 2:
        raise DimensionError(f"embedding shape {e.shape} is not even")
    z1 = 0.5 * (e[0::2, 0::2] + e[1::2, 1::2].conj())
    z2 = 0.5 * (e[0::2, 1::2] - e[1::2, 0::2].conj())
    data = np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=-1)
    out = KMatrix(Field.H, data)
    if tol is not None:
        resid = np.linalg.norm(complex_embedding(out) - e) / max(np.linalg.norm(e), 1e-300)
        if resid > tol:
            raise ConvergenceError(f"embedding projection residual {resid:.3e} > {tol:.1e}")
    return out


def vector_embedding(v, field) -> np.ndarray:
    """First embedding column of a (n, 4) vector (length n, or 2n for H)."""
    field = Field.parse(field)
    v = np.asarray(v, dtype=float)
    if field is not Field.H:
        return v[:, 0] + 1j * v[:, 1]
    out = np.empty(2 * v.shape[0], dtype=complex)
    out[0::2] = v[:, 0] + 1j * v[:, 1]
    out[1::2] = -(v[:, 2] - 1j * v[:, 3])
    return out


def vector_from_embedding(c, field) -> np.ndarray:
    """Inverse of :func:`vector_embedding` (any complex vector pulls back)."""
    field = Field.parse(field)
    c = np.asarray(c, dtype=complex)
    if field is not Field.H:
        out = np.zeros((c.shape[0], 4))
        out[:, 0] = c.real
        if field is Field.C:
            out[:, 1] = c.imag
        return out
    z1 = c[0::2]
    z2 = -c[1::2].conj()
    return np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=-1)


def _partner(c):
    out = np.empty_like(c)
    out[0::2] = -c[1::2].conj()
    out[1::2] = c[0::2].conj()
    return out


# norms, determinants, spectra ----------------------------------------------

def operator_norm(m: KMatrix) -> float:
    """Largest singular value (the embedding is isometric, so this is exact)."""
    return float(np.linalg.norm(complex_embedding(m), 2))


def operator_norm_power(m: KMatrix, tol: float = 1e-15, maxit: int = 100_000, seed: int = 0):
    """Operator norm by power iteration on conj(m)^T m over K-vectors."""
    gram = matmul(conj_transpose(m), m)
    rng = np.random.default_rng(seed)
    v = random_scalars(m.field, rng, m.cols)
    v /= np.sqrt((v ** 2).sum())
    lam = 0.0
    for _ in range(maxit):
        w = gram.apply(v)
        nw = float(np.sqrt((w ** 2).sum()))
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(nw - lam) <= tol * nw:
            lam = nw
            break
        lam = nw
    return float(np.sqrt(lam))


def det_abs(m: KMatrix) -> float:
    if m.rows != m.cols:
        raise DimensionError("determinant of a non-square matrix")
    return float(abs(np.linalg.det(complex_embedding(m))))


def _logdet_abs(e) -> float:
    sign, logdet = np.linalg.slogdet(e)
    if sign == 0:
        return -np.inf
    return float(logdet)


@dataclass(frozen=True)
class SigmaSpectrum:
    """Moduli of eigenvalues of the D = 1 representative, nondecreasing."""

    sigmas: tuple
    normalization: float
    pair_residual: float = 0.0

    def __len__(self):
        return len(self.sigmas)

    @property
    def top_gap(self) -> float:
        return self.sigmas[-1] / self.sigmas[-2]

    @property
    def bottom_gap(self) -> float:
        return self.sigmas[1] / self.sigmas[0]


def _pair_conjugates(eigs, rel_tol):
    """Greedy pairing of eigenvalues with their conjugates.

    Returns (moduli of the pairs, worst relative residual).
    """
    remaining = list(eigs)
    mods, worst = [], 0.0
    while remaining:
        lam = remaining.pop(0)
        if not remaining:
            raise SpectralPairingError("odd number of embedding eigenvalues")
        dists = [abs(mu - np.conj(lam)) for mu in remaining]
        j = int(np.argmin(dists))
        scale = max(abs(lam), 1e-300)
        resid = dists[j] / scale
        worst = max(worst, resid)
        if resid > rel_tol:
            raise SpectralPairingError(
                f"eigenvalue {lam:.6g} has no conjugate partner (relative residual {resid:.2e})")
        mu = remaining.pop(j)
        mods.append(0.5 * (abs(lam) + abs(mu)))
    return mods, worst


def sigma_spectrum(phi: KMatrix, pairing_tol: float | None = None) -> SigmaSpectrum:
    if phi.rows != phi.cols:
        raise DimensionError("sigma spectrum of a non-square matrix")
    pairing_tol = DEFAULTS["pairing_relative"] if pairing_tol is None else pairing_tol
    e = complex_embedding(phi)
    logd = _logdet_abs(e)
    if not np.isfinite(logd):
        raise ValidationError("sigma spectrum of a singular matrix")
    eigs = np.linalg.eigvals(e)
    n_emb = e.shape[0]
    scale = float(np.exp(-logd / n_emb))
    if phi.field is Field.H:
        # sort by argument so that conjugates are close in the greedy scan
        eigs = sorted(eigs, key=lambda z: (abs(z), abs(z.imag), z.real))
        mods, resid = _pair_conjugates(eigs, pairing_tol)
    else:
        mods, resid = list(np.abs(eigs)), 0.0
    sig = tuple(sorted(float(m * scale) for m in mods))
    return SigmaSpectrum(sig, scale, float(resid))


def eigen_lines(phi: KMatrix):
    """Eigenvalues of the embedding with K-vectors spanning their lines.

    Returns a list of ``(eigenvalue, vector)`` sorted by decreasing modulus;
    for H only one member of each conjugate pair is kept.
    """
    e = complex_embedding(phi)
    vals, vecs = np.linalg.eig(e)
    order = np.argsort(-np.abs(vals), kind="stable")
    out = []
    for idx in order:
        lam, c = vals[idx], vecs[:, idx]
        v = vector_from_embedding(c, phi.field)
        if phi.field is Field.R:
            if abs(lam.imag) > 1e-12 * max(abs(lam), 1.0):
                continue  # no real eigenline
            v = vector_from_embedding(c * np.exp(-1j * np.angle(c[np.argmax(np.abs(c))])),
                                      phi.field)
        out.append((complex(lam), v))
    if phi.field is Field.H:
        kept = []
        for lam, v in out:
            if any(abs(lam - np.conj(mu)) <= 1e-8 * max(abs(lam), 1e-300) and _same_line(v, w)
                   for mu, w in kept):
                continue
            kept.append((lam, v))
        out = kept
    return out


def _same_line(u, w, tol=1e-6):
    nu = np.sqrt((u ** 2).sum())
    nw = np.sqrt((w ** 2).sum())
    ip = kinner(u / nu, w / nw)
    return abs(1.0 - float(np.sqrt((ip ** 2).sum()))) <= tol


# KAK ----------------------------------------------------------------------

@dataclass(frozen=True)
class KakFactors:
    k1: KMatrix
    a: tuple
    k2: KMatrix

    def reconstruct(self) -> KMatrix:
        return matmul(matmul(self.k1, KMatrix.diag(self.k1.field, self.a)), self.k2)

    def rescaled(self) -> tuple:
        """Singular values normalized so that the largest is 1."""
        return tuple(x / self.a[0] for x in self.a)


def unitarity_residual(k: KMatrix) -> float:
    e = complex_embedding(k)
    return float(np.abs(e.conj().T @ e - np.eye(e.shape[0])).max())


def kak_decompose(phi: KMatrix, tol: float | None = None) -> KakFactors:
    """phi = k1 diag(a) k2 with K-unitary k1, k2 and nonincreasing a > 0."""
    tol = DEFAULTS["kak_projection"] if tol is None else tol
    if phi.rows != phi.cols:
        raise DimensionError("KAK of a non-square matrix")
    if phi.field is not Field.H:
        arr = phi.to_complex()
        if phi.field is Field.R:
            arr = arr.real
        try:
            u, s, vh = np.linalg.svd(arr)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"SVD failed: {exc}") from None
        if s[-1] <= 0.0:
            raise ValidationError("KAK of a singular matrix")
        return KakFactors(KMatrix.from_complex(phi.field, u), tuple(map(float, s)),
                          KMatrix.from_complex(phi.field, vh))

    e = complex_embedding(phi)
    n = phi.rows
    try:
        _, s, vh = np.linalg.svd(e)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"SVD failed: {exc}") from None
    if s[-1] <= 0.0:
        raise ValidationError("KAK of a singular matrix")
    basis = []  # complex columns; each quaternionic column contributes c and partner(c)
    for row in vh:
        c = row.conj()
        for b in basis:
            c = c - b * np.vdot(b, c)
        nc = np.linalg.norm(c)
        if nc < 0.5:
            continue
        c = c / nc
        p = _partner(c)
        basis.extend([c, p])
        if len(basis) == 2 * n:
            break
    if len(basis) != 2 * n:
        raise ConvergenceError("could not assemble a quaternionic right singular basis")
    right_cols = basis[0::2]
    left_cols, a = [], []
    for c in right_cols:
        img = e @ c
        s_k = float(np.linalg.norm(img))
        a.append(s_k)
        left_cols.append(img / s_k)
    v_k = np.stack([vector_from_embedding(c, Field.H) for c in right_cols], axis=1)
    u_k = np.stack([vector_from_embedding(c, Field.H) for c in left_cols], axis=1)
    k1 = KMatrix(Field.H, u_k)
    k2 = conj_transpose(KMatrix(Field.H, v_k))
    factors = KakFactors(k1, tuple(a), k2)
    resid = max(unitarity_residual(k1), unitarity_residual(k2))
    rec = (factors.reconstruct() - phi).norm_fro() / phi.norm_fro()
    if resid > tol or rec > tol:
        raise ConvergenceError(
            f"KAK projection residual {resid:.2e}, reconstruction {rec:.2e} exceed {tol:.1e}")
    return factors


# Hermitian congruence -----------------------------------------------------

def _is_hermitian(a: KMatrix, tol: float) -> bool:
    diff = (a - conj_transpose(a)).norm_fro()
    return diff <= tol * max(1.0, a.norm_fro())


def hermitian_congruence_normalize(a: KMatrix, tol: float = 1e-12) -> KMatrix:
    """Return g with conj(g)^T a g = Id for a positive definite K-Hermitian a.

    Cholesky a = L conj(L)^T over K, then g = conj(L^{-1})^T.
    """
    if a.rows != a.cols:
        raise DimensionError("congruence of a non-square matrix")
    if not _is_hermitian(a, 1e-10):
        raise NotHermitianError("matrix is not K-Hermitian")
    n = a.rows
    A = a.data
    L = np.zeros_like(A)
    for j in range(n):
        s = A[j, j].copy()
        for k in range(j):
            s -= qmul(L[j, k], qconj(L[j, k]))
        pivot = s[0]
        if pivot <= tol * max(1.0, float(np.abs(A).max())):
            raise NotPositiveDefiniteError(f"pivot {pivot:.3e} at index {j}")
        L[j, j, 0] = np.sqrt(pivot)
        for i in range(j + 1, n):
            t = A[i, j].copy()
            for k in range(j):
                t -= qmul(L[i, k], qconj(L[j, k]))
            L[i, j] = t / L[j, j, 0]
    # X = L^{-1}, lower triangular; diagonal entries are real
    X = np.zeros_like(L)
    for i in range(n):
        X[i, i, 0] = 1.0 / L[i, i, 0]
        for j in range(i):
            t = np.zeros(4)
            for k in range(j, i):
                t += qmul(L[i, k], X[k, j])
            X[i, j] = -t / L[i, i, 0]
    return conj_transpose(KMatrix(a.field, X))


# construction helpers -----------------------------------------------------

def gram_schmidt(vectors, form=None, tol: float = 1e-12):
    """Orthonormalize K-vectors for the Hermitian form ``conj(u)^T J v``.

    ``form`` is an optional KMatrix J (identity by default).  Vectors are
    scaled so that ``<e, e>_J = +1 or -1``; dependent inputs raise.
    """
    out = []
    signs = []
    for v in vectors:
        w = np.array(v, dtype=float)
        for e, s in zip(out, signs):
            jw = w if form is None else form.apply(w)
            coef = kinner(e, jw) * s  # <e, e> = s
            w = w - qmul(e, coef[None, :])
        jw = w if form is None else form.apply(w)
        q = float(kinner(w, jw)[0])
        if abs(q) <= tol * max(1.0, float((w ** 2).sum())):
            raise ValidationError("degenerate vector in Gram-Schmidt")
        out.append(w / np.sqrt(abs(q)))
        signs.append(1.0 if q > 0 else -1.0)
    return out


def random_kmatrix(field, rows: int, cols: int, rng) -> KMatrix:
    return KMatrix(field, random_scalars(field, rng, (rows, cols)))


def random_unitary(field, n: int, rng) -> KMatrix:
    field = Field.parse(field)
    cols = gram_schmidt([random_scalars(field, rng, n) for _ in range(n)])
    return KMatrix(field, np.stack(cols, axis=1))
