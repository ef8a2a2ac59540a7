"""Points, functionals and maps of the projective space P(K^{d+1}).

Lines are parametrized on the right: ``v`` and ``v q`` (q a nonzero scalar)
name the same point.  A functional ``f`` acts by ``f(v) = sum conj(f_i) v_i``,
which identifies the dual space with K^{d+1}.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .config import DEFAULTS
from .errors import DimensionError, GeometryError, TagMismatchError, ValidationError, ZeroVectorError
from .kmatrix import (
    KMatrix, complex_embedding, conj_transpose, gram_schmidt, matmul, operator_norm,
)
from .kscalar import Field, Scalar, enforce_field, kinner, qinv, qmul

__all__ = [
    "ProjPoint", "DualPoint", "ProjMap", "EndClass", "Line",
    "canonicalize", "apply", "pairing", "vanishes", "proj_distance", "line_through",
    "end_distance", "dual_map", "from_chart", "chart_coords", "coords_from_json", "point_from_json",
]


def _as_vector(field: Field, v) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 1:
        if field is not Field.R:
            raise DimensionError("non-real coordinates need shape (n, r)")
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] > 4 or arr.shape[0] < 1:
        raise DimensionError(f"bad coordinate array shape {arr.shape}")
    if arr.shape[1] < 4:
        arr = np.concatenate([arr, np.zeros((arr.shape[0], 4 - arr.shape[1]))], axis=1)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("non-finite coordinates")
    if np.any(arr[:, field.r:] != 0.0):
        raise ValidationError(f"coordinates have components outside field {field.value}")
    return arr


class ProjPoint:
    """A K-line, stored as its canonical unit representative."""

    __slots__ = ("field", "rep", "pivot")
    is_dual = False

    def __init__(self, field, v, *, _canonical: bool = False):
        field = Field.parse(field)
        arr = _as_vector(field, v)
        if _canonical:
            rep, piv = arr, int(np.argmax(np.sqrt((arr ** 2).sum(axis=1)) > 0))
        else:
            rep, piv = _kernels.canonicalize_rep(arr, DEFAULTS["pivot_relative"])
            if piv < 0:
                raise ZeroVectorError("the zero vector does not define a point")
            rep = enforce_field(rep, field)
        rep.setflags(write=False)
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "rep", rep)
        object.__setattr__(self, "pivot", int(piv))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def dim(self) -> int:
        """Projective dimension d (the vector has d + 1 coordinates)."""
        return self.rep.shape[0] - 1

    @property
    def n(self) -> int:
        return self.rep.shape[0]

    def is_close(self, other, tol: float | None = None) -> bool:
        tol = DEFAULTS["point_equality"] if tol is None else tol
        _check_same_space(self, other)
        return float(np.abs(self.rep - other.rep).max()) <= tol

    def __eq__(self, other):
        if not isinstance(other, ProjPoint) or other.is_dual != self.is_dual:
            return NotImplemented
        try:
            return self.is_close(other)
        except (TagMismatchError, DimensionError):
            return False

    __hash__ = None

    def coordinate(self, i: int) -> Scalar:
        return Scalar.from_array(self.field, self.rep[i])

    def to_json(self) -> dict:
        r = self.field.r
        return {
            "field": self.field.value,
            "coords": [list(map(float, row[:r])) for row in self.rep],
            "dual": self.is_dual,
        }

    def __repr__(self):
        coords = ", ".join(repr(self.coordinate(i))[len("Scalar[x]"):] for i in range(self.n))
        return f"{type(self).__name__}[{self.field.value}]({coords})"


class DualPoint(ProjPoint):
    """A functional line, acting by f(v) = sum conj(f_i) v_i."""

    __slots__ = ()
    is_dual = True

    def kernel_basis(self):
        """Orthonormal K-basis of ker f."""
        n = self.n
        cands = [np.eye(n)[i][:, None] * np.array([[1.0, 0, 0, 0]]) for i in range(n)]
        basis = [self.rep]
        out = []
        for c in cands:
            w = c.copy()
            for b in basis:
                w = w - qmul(b, kinner(b, w)[None, :])
            nw = float(np.sqrt((w ** 2).sum()))
            if nw > 1e-8:
                w = w / nw
                basis.append(w)
                out.append(w)
            if len(out) == n - 1:
                break
        return out


def _check_same_space(a, b):
    if a.field is not b.field:
        raise TagMismatchError(f"field {a.field.value} vs {b.field.value}")
    if a.n != b.n:
        raise DimensionError(f"P^{a.dim} vs P^{b.dim}")


def canonicalize(field, v) -> ProjPoint:
    return ProjPoint(field, v)


def from_chart(field, z) -> ProjPoint:
    """The point [1 : z_1 : ... : z_d] of the standard affine chart."""
    field = Field.parse(field)
    z = np.asarray(z, dtype=float)
    if z.ndim == 1 and field is Field.R:
        z = z[:, None]
    z = _as_vector(field, z) if z.size else np.zeros((0, 4))
    v = np.vstack([np.array([[1.0, 0.0, 0.0, 0.0]]), z])
    return ProjPoint(field, v)


def chart_coords(p: ProjPoint, index: int = 0) -> np.ndarray:
    """Affine coordinates z_i = v_i v_index^{-1} (the index coordinate removed)."""
    v0 = p.rep[index]
    if float(np.sqrt((v0 ** 2).sum())) <= DEFAULTS["vanish"]:
        raise GeometryError("point lies at infinity of this chart")
    z = qmul(p.rep, qinv(v0)[None, :])
    return np.delete(z, index, axis=0)


def pairing(f: DualPoint, p: ProjPoint) -> Scalar:
    """f(p) on the canonical representatives; its modulus is well defined."""
    _check_same_space(f, p)
    return Scalar.from_array(f.field, kinner(f.rep, p.rep))


def vanishes(f: DualPoint, p: ProjPoint, tol: float | None = None) -> bool:
    tol = DEFAULTS["vanish"] if tol is None else tol
    return abs(pairing(f, p)) <= tol


def proj_distance(p: ProjPoint, q: ProjPoint) -> float:
    """Chordal distance: the sine of the angle between the two lines."""
    _check_same_space(p, q)
    return min(1.0, max(0.0, float(_kernels.chordal(p.rep, q.rep))))


def _coeffs(s) -> np.ndarray:
    if isinstance(s, Scalar):
        return s.array()
    flat = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.zeros(4)
    out[:flat.size] = flat
    return out


class Line:
    """The projective line through two distinct points."""

    def __init__(self, x: ProjPoint, y: ProjPoint):
        _check_same_space(x, y)
        if proj_distance(x, y) <= DEFAULTS["point_equality"]:
            raise GeometryError("a line needs two distinct points")
        self.x, self.y = x, y
        self.field = x.field
        self._basis = gram_schmidt([x.rep, y.rep])

    def point(self, s, t) -> ProjPoint:
        """canonicalize(x s + y t) for scalars (or coefficient arrays) s, t."""
        s, t = _coeffs(s), _coeffs(t)
        return ProjPoint(self.field, qmul(self.x.rep, s[None, :]) + qmul(self.y.rep, t[None, :]))

    def contains(self, p: ProjPoint, tol: float = 1e-9) -> bool:
        _check_same_space(self.x, p)
        w = p.rep.copy()
        for b in self._basis:
            w = w - qmul(b, kinner(b, w)[None, :])
        return float(np.sqrt((w ** 2).sum())) <= tol


def line_through(x: ProjPoint, y: ProjPoint) -> Line:
    return Line(x, y)


class ProjMap:
    """An element of PGL_{d+1}(K), stored with D(matrix) = 1."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: KMatrix):
        if not isinstance(matrix, KMatrix):
            raise TypeError("ProjMap needs a KMatrix")
        if matrix.rows != matrix.cols:
            raise DimensionError("projective maps need square matrices")
        e = complex_embedding(matrix)
        sign, logdet = np.linalg.slogdet(e)
        if sign == 0 or not np.isfinite(logdet):
            raise ValidationError("projective maps need invertible matrices")
        scale = float(np.exp(-logdet / e.shape[0]))
        object.__setattr__(self, "matrix", matrix * scale)

    def __setattr__(self, name, value):
        raise AttributeError("ProjMap is immutable")

    @classmethod
    def identity(cls, field, n: int) -> "ProjMap":
        return cls(KMatrix.identity(field, n))

    @property
    def field(self) -> Field:
        return self.matrix.field

    @property
    def n(self) -> int:
        return self.matrix.rows

    def __call__(self, p):
        return apply(self, p)

    def __matmul__(self, other: "ProjMap") -> "ProjMap":
        return ProjMap(matmul(self.matrix, other.matrix))

    def inverse(self) -> "ProjMap":
        return ProjMap(self.matrix.inv())

    def dual(self) -> "ProjMap":
        return dual_map(self)

    def is_close(self, other: "ProjMap", tol: float = 1e-10) -> bool:
        """Equality in PGL: up to field scalars (R, C) or real scalars (H)."""
        a = self.matrix.data.reshape(-1, 4)
        b = other.matrix.data.reshape(-1, 4)
        if self.field is Field.H:
            c = np.array([np.sign((a * b).sum()) or 1.0, 0, 0, 0])
        else:
            za = a[:, 0] + 1j * a[:, 1]
            zb = b[:, 0] + 1j * b[:, 1]
            ratio = np.vdot(zb, za) / np.vdot(zb, zb)
            ratio /= abs(ratio)
            c = np.array([ratio.real, ratio.imag, 0, 0])
        return float(np.abs(a - qmul(b, c[None, :])).max()) <= tol

    def to_json(self) -> dict:
        return self.matrix.to_json()

    def __repr__(self):
        return f"ProjMap[{self.field.value}]({self.n}x{self.n})"


def apply(phi: ProjMap, p: ProjPoint) -> ProjPoint:
    """phi . p; DualPoints are moved by the map's matrix as vectors too."""
    if phi.field is not p.field:
        raise TagMismatchError(f"field {phi.field.value} vs {p.field.value}")
    if phi.n != p.n:
        raise DimensionError(f"{phi.n}x{phi.n} map on P^{p.dim}")
    w = phi.matrix.apply(p.rep)
    if float(np.sqrt((w ** 2).sum())) <= 1e-300:
        raise GeometryError("map sends the representative to zero")
    return type(p)(p.field, w)


def dual_map(phi: ProjMap) -> ProjMap:
    """*phi(f) = f o phi, which acts on dual coordinates by conj(phi)^T."""
    return ProjMap(conj_transpose(phi.matrix))


class EndClass:
    """A nonzero endomorphism up to real scalars, stored with operator norm 1."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: KMatrix):
        nrm = operator_norm(matrix)
        if nrm == 0.0:
            raise ZeroVectorError("the zero endomorphism has no class")
        object.__setattr__(self, "matrix", matrix * (1.0 / nrm))

    def __setattr__(self, name, value):
        raise AttributeError("EndClass is immutable")

    @property
    def field(self):
        return self.matrix.field

    def rank(self, tol: float = 1e-8) -> int:
        """Rank over K (embedding rank divided by 2 for H)."""
        s = np.linalg.svd(complex_embedding(self.matrix), compute_uv=False)
        r = int((s > tol * s[0]).sum())
        return r // 2 if self.field is Field.H else r

    def to_json(self) -> dict:
        return self.matrix.to_json()


def end_distance(a: EndClass, b: EndClass) -> float:
    if a.matrix.shape != b.matrix.shape:
        raise DimensionError("endomorphisms of different spaces")
    if a.field is not b.field:
        raise TagMismatchError(f"field {a.field.value} vs {b.field.value}")
    return min((a.matrix - b.matrix).norm_fro(), (a.matrix + b.matrix).norm_fro())


# JSON helpers ---------------------------------------------------------------

def coords_from_json(field, coords) -> np.ndarray:
    """Coordinate array from a JSON list (numbers for R, lists of r numbers otherwise)."""
    field = Field.parse(field)
    out = []
    for c in coords:
        c = [c] if isinstance(c, (int, float)) else list(c)
        if len(c) != field.r:
            raise ValidationError(f"field {field.value} coordinates take {field.r} numbers, got {len(c)}")
        out.append(c + [0.0] * (4 - len(c)))
    if not out:
        raise DimensionError("empty coordinate list")
    return np.array(out, dtype=float)


def point_from_json(payload, field=None):
    """ProjPoint or DualPoint from {"field", "coords", "dual"} or a bare coordinate list."""
    if isinstance(payload, dict):
        try:
            field = payload["field"]
            coords = payload["coords"]
        except KeyError:
            raise ValidationError("point JSON needs 'field' and 'coords'") from None
        cls = DualPoint if payload.get("dual", False) else ProjPoint
    else:
        if field is None:
            raise ValidationError("bare coordinate lists need an explicit field")
        coords, cls = payload, ProjPoint
    return cls(field, coords_from_json(field, coords))
