"""Scalars over the real division algebras R, C and H.

Every scalar is stored as four real coefficients ``(a, b, c, d)`` standing
for ``a + b i + c j + d k``; for R and C the trailing coefficients are kept
at exactly zero.  The array helpers at the top of the module (``qmul``,
``qconj`` ...) work on any array whose last axis has length 4 and are the
building blocks used by :mod:`kprojective.kmatrix`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import TagMismatchError, ValidationError

__all__ = [
    "Field", "Scalar", "MULT_TABLE",
    "qmul", "qconj", "qabs2", "qabs", "qinv", "kinner", "knorm", "enforce_field",
    "mul", "conj", "abs_", "real_imag_split", "real_representation",
    "left_mult_matrix", "random_scalars",
]


class Field(enum.Enum):
    R = "r"
    C = "c"
    H = "h"

    @property
    def r(self) -> int:
        """Real dimension of the algebra."""
        return {"r": 1, "c": 2, "h": 4}[self.value]

    @classmethod
    def parse(cls, value) -> "Field":
        if isinstance(value, Field):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown field {value!r}; expected r, c or h") from None


# MULT_TABLE[a, b, c] is the coefficient of basis element c in e_a * e_b,
# with e = (1, i, j, k) and i^2 = j^2 = k^2 = ijk = -1.
MULT_TABLE = np.zeros((4, 4, 4))
for _a, _b, _c, _s in [
    (0, 0, 0, 1), (0, 1, 1, 1), (0, 2, 2, 1), (0, 3, 3, 1),
    (1, 0, 1, 1), (1, 1, 0, -1), (1, 2, 3, 1), (1, 3, 2, -1),
    (2, 0, 2, 1), (2, 1, 3, -1), (2, 2, 0, -1), (2, 3, 1, 1),
    (3, 0, 3, 1), (3, 1, 2, 1), (3, 2, 1, -1), (3, 3, 0, -1),
]:
    MULT_TABLE[_a, _b, _c] = _s
MULT_TABLE.setflags(write=False)

_CONJ_SIGN = np.array([1.0, -1.0, -1.0, -1.0])


def qmul(x, y):
    """Elementwise algebra product of two (..., 4) arrays (broadcasting)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a0, a1, a2, a3 = np.moveaxis(x, -1, 0)
    b0, b1, b2, b3 = np.moveaxis(y, -1, 0)
    return np.stack([
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    ], axis=-1)


def qconj(x):
    return np.asarray(x, dtype=float) * _CONJ_SIGN


def qabs2(x):
    x = np.asarray(x, dtype=float)
    return np.einsum("...i,...i->...", x, x)


def qabs(x):
    return np.sqrt(qabs2(x))


def qinv(x):
    x = np.asarray(x, dtype=float)
    return qconj(x) / qabs2(x)[..., None]


def kinner(u, v):
    """Standard inner product sum_i conj(u_i) v_i of (..., n, 4) arrays."""
    return qmul(qconj(u), v).sum(axis=-2)


def knorm(v):
    v = np.asarray(v, dtype=float)
    return np.sqrt(np.einsum("...ij,...ij->...", v, v))


def enforce_field(arr, field: Field):
    """Zero the coefficients that do not exist for ``field`` (returns a copy)."""
    out = np.array(arr, dtype=float, copy=True)
    out[..., Field.parse(field).r:] = 0.0
    return out


def left_mult_matrix(w, field: Field):
    """Real r x r matrix of z -> w z acting on K = R^r (vectorized over w)."""
    field = Field.parse(field)
    w = np.asarray(w, dtype=float)
    # column c of the matrix is w * e_c; MULT_TABLE contracts to L[out, c]
    full = np.einsum("...a,acd->...dc", w, MULT_TABLE)
    r = field.r
    return full[..., :r, :r]


def random_scalars(field: Field, rng, size=()):
    """Standard normal coefficients in the field's real dimensions."""
    field = Field.parse(field)
    shape = tuple(np.atleast_1d(size)) if size != () else ()
    out = np.zeros(shape + (4,))
    out[..., :field.r] = rng.standard_normal(shape + (field.r,))
    return out


@dataclass(frozen=True)
class Scalar:
    """An element of R, C or H with value semantics."""

    field: Field
    coeffs: tuple

    def __post_init__(self):
        field = Field.parse(self.field)
        c = tuple(float(v) for v in self.coeffs)
        if len(c) > 4:
            raise ValidationError("a scalar has at most four coefficients")
        c = c + (0.0,) * (4 - len(c))
        if any(v != 0.0 for v in c[field.r:]):
            raise ValidationError(
                f"coefficients beyond index {field.r - 1} must vanish for field {field.value}")
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def of(cls, field, *coeffs) -> "Scalar":
        return cls(Field.parse(field), coeffs)

    @classmethod
    def from_array(cls, field, arr) -> "Scalar":
        return cls(Field.parse(field), tuple(np.asarray(arr, dtype=float).ravel()))

    def array(self) -> np.ndarray:
        return np.array(self.coeffs)

    def _check(self, other: "Scalar") -> None:
        if not isinstance(other, Scalar):
            raise TypeError(f"expected Scalar, got {type(other).__name__}")
        if other.field is not self.field:
            raise TagMismatchError(f"field {self.field.value} vs {other.field.value}")

    def _coerce(self, other):
        if isinstance(other, (int, float)):
            return Scalar(self.field, (float(other),))
        return other

    def __add__(self, other):
        other = self._coerce(other)
        self._check(other)
        return Scalar(self.field, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        self._check(other)
        return Scalar(self.field, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Scalar(self.field, tuple(-a for a in self.coeffs))

    def __mul__(self, other):
        other = self._coerce(other)
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self._coerce(other), self)

    def __truediv__(self, other):
        return self.right_div(self._coerce(other))

    def conj(self) -> "Scalar":
        return conj(self)

    def __abs__(self) -> float:
        return abs_(self)

    def abs2(self) -> float:
        return sum(a * a for a in self.coeffs)

    @property
    def real(self) -> float:
        return self.coeffs[0]

    @property
    def imag(self) -> "Scalar":
        return Scalar(self.field, (0.0,) + self.coeffs[1:])

    def inverse(self) -> "Scalar":
        n2 = self.abs2()
        if n2 == 0.0:
            raise ZeroDivisionError("inverse of zero scalar")
        a, b, c, d = self.coeffs
        return Scalar(self.field, (a / n2, -b / n2, -c / n2, -d / n2))

    def right_div(self, other: "Scalar") -> "Scalar":
        """x / y := x * conj(y) / |y|^2, i.e. x y^{-1}."""
        self._check(other)
        return mul(self, other.inverse())

    def left_div(self, other: "Scalar") -> "Scalar":
        """y \\ x := conj(y) * x / |y|^2, i.e. y^{-1} x."""
        self._check(other)
        return mul(other.inverse(), self)

    def is_close(self, other: "Scalar", tol: float = 1e-12) -> bool:
        self._check(other)
        return max(abs(a - b) for a, b in zip(self.coeffs, other.coeffs)) <= tol

    def to_json(self) -> dict:
        return {"field": self.field.value, "value": list(self.coeffs[: self.field.r])}

    @classmethod
    def from_json(cls, payload) -> "Scalar":
        if isinstance(payload, dict):
            field = Field.parse(payload["field"])
            value = payload["value"]
        else:
            raise ValidationError("scalar JSON must be an object with 'field' and 'value'")
        value = [value] if isinstance(value, (int, float)) else list(value)
        if len(value) != field.r:
            raise ValidationError(
                f"field {field.value} scalars take {field.r} numbers, got {len(value)}")
        return cls(field, tuple(value))

    def __repr__(self) -> str:
        names = ("", "i", "j", "k")
        parts = [f"{v:+.6g}{n}" for v, n in zip(self.coeffs[: self.field.r], names)]
        return f"Scalar[{self.field.value}]({' '.join(parts)})"


def mul(x: Scalar, y: Scalar) -> Scalar:
    x._check(y)
    a0, a1, a2, a3 = x.coeffs
    b0, b1, b2, b3 = y.coeffs
    return Scalar(x.field, (
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    ))


def conj(x: Scalar) -> Scalar:
    a, b, c, d = x.coeffs
    return Scalar(x.field, (a, -b, -c, -d))


def abs_(x: Scalar) -> float:
    return math.sqrt(x.abs2())


def real_imag_split(x: Scalar):
    """Return ``(Real(x), Imag(x))`` with ``Imag(x)`` purely imaginary."""
    return x.real, x.imag


def real_representation(w: Scalar) -> np.ndarray:
    """The r x r real matrix of left multiplication by ``w``."""
    return left_mult_matrix(w.array(), w.field)
