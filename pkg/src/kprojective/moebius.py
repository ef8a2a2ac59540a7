"""Moebius transformations of K u {oo} = P(K^2).

[z1 : z2] is identified with z1 z2^{-1} and [1 : 0] with oo; a 2x2 matrix
acts by (a z + b)(c z + d)^{-1}.  Every computation lifts to K^2, applies
the matrix and projects back, so oo needs no special arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULTS
from .errors import GeometryError, TagMismatchError, ValidationError
from .kmatrix import KMatrix, complex_embedding, lie_bracket, matmul
from .kscalar import Field, Scalar, qabs2, qconj, qinv, qmul, random_scalars

__all__ = [
    "ExtendedScalar", "INF", "MoebiusMap", "SpherePlane", "HalfspaceReport",
    "apply", "map_sphereplane", "halfspace_aut_membership", "generate_from_UV",
    "u_matrix", "v_matrix", "uv_bracket", "cayley", "to_zero_from_boundary", "to_one_from_interior",
    "halfspace_samples",
]

_INF_TOL = 1e-300


def _arr(x, field: Field) -> np.ndarray:
    if isinstance(x, Scalar):
        if x.field is not field:
            raise TagMismatchError(f"field {x.field.value} vs {field.value}")
        return x.array()
    a = np.zeros(4)
    v = np.atleast_1d(np.asarray(x, dtype=float))
    a[: v.size] = v
    if np.any(a[field.r:] != 0.0):
        raise ValidationError(f"value has components outside field {field.value}")
    return a


class ExtendedScalar:
    """A point of K u {oo}."""

    __slots__ = ("field", "value")

    def __init__(self, field, value=None):
        field = Field.parse(field)
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "value", None if value is None else _arr(value, field))

    def __setattr__(self, name, value):
        raise AttributeError("ExtendedScalar is immutable")

    @classmethod
    def infinity(cls, field) -> "ExtendedScalar":
        return cls(field, None)

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def scalar(self) -> Scalar:
        if self.value is None:
            raise GeometryError("oo has no finite value")
        return Scalar.from_array(self.field, self.value)

    def lift(self) -> np.ndarray:
        """A representative in K^2: [z : 1] or [1 : 0]."""
        v = np.zeros((2, 4))
        if self.value is None:
            v[0, 0] = 1.0
        else:
            v[0] = self.value
            v[1, 0] = 1.0
        return v

    @classmethod
    def project(cls, field, v) -> "ExtendedScalar":
        v = np.asarray(v, dtype=float)
        n2 = float(qabs2(v[1]))
        if n2 <= _INF_TOL * max(float(qabs2(v[0])), _INF_TOL):
            if float(qabs2(v[0])) == 0.0:
                raise GeometryError("the zero vector is not a point")
            return cls(field, None)
        return cls(field, qmul(v[0], qinv(v[1])))

    def is_close(self, other: "ExtendedScalar", tol: float = 1e-12) -> bool:
        if self.is_infinite or other.is_infinite:
            return self.is_infinite and other.is_infinite
        return float(np.abs(self.value - other.value).max()) <= tol * max(
            1.0, float(np.abs(self.value).max()))

    def to_json(self):
        if self.value is None:
            return "inf"
        return list(map(float, self.value[: self.field.r]))

    @classmethod
    def from_json(cls, field, payload) -> "ExtendedScalar":
        if payload == "inf":
            return cls(field, None)
        return cls(field, payload)

    def __repr__(self):
        if self.value is None:
            return f"ExtendedScalar[{self.field.value}](oo)"
        return f"ExtendedScalar[{self.field.value}]({self.value[: self.field.r]})"


def INF(field) -> ExtendedScalar:
    return ExtendedScalar.infinity(field)


class MoebiusMap:
    """z -> (a z + b)(c z + d)^{-1} for an invertible 2x2 matrix over K."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: KMatrix):
        if matrix.shape != (2, 2):
            raise ValidationError("Moebius maps need a 2x2 matrix")
        det = abs(np.linalg.det(complex_embedding(matrix)))
        if not det > 1e-300 * max(1.0, float(np.abs(matrix.data).max())) ** 4:
            raise ValidationError("Moebius map with a singular matrix")
        object.__setattr__(self, "matrix", matrix)

    def __setattr__(self, name, value):
        raise AttributeError("MoebiusMap is immutable")

    @classmethod
    def from_entries(cls, field, a, b, c, d) -> "MoebiusMap":
        field = Field.parse(field)
        data = np.stack([np.stack([_arr(a, field), _arr(b, field)]),
                         np.stack([_arr(c, field), _arr(d, field)])])
        return cls(KMatrix(field, data))

    @classmethod
    def identity(cls, field) -> "MoebiusMap":
        return cls(KMatrix.identity(field, 2))

    @property
    def field(self) -> Field:
        return self.matrix.field

    def entries(self):
        d = self.matrix.data
        return d[0, 0], d[0, 1], d[1, 0], d[1, 1]

    def __call__(self, z):
        return apply(self, z)

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return MoebiusMap(matmul(self.matrix, other.matrix))

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.matrix.inv())

    def to_json(self) -> dict:
        return self.matrix.to_json()

    @classmethod
    def from_json(cls, payload) -> "MoebiusMap":
        return cls(KMatrix.from_json(payload))

    def __repr__(self):
        return f"MoebiusMap[{self.field.value}]"


def apply(m: MoebiusMap, z) -> ExtendedScalar:
    if not isinstance(z, ExtendedScalar):
        z = ExtendedScalar(m.field, z)
    if z.field is not m.field:
        raise TagMismatchError(f"field {z.field.value} vs {m.field.value}")
    return ExtendedScalar.project(m.field, m.matrix.apply(z.lift()))


def apply_batch(m: MoebiusMap, z: np.ndarray) -> np.ndarray:
    """Finite images of a (k, 4) batch; poles give non-finite rows."""
    a, b, c, d = m.entries()
    num = qmul(a[None], z) + b[None]
    den = qmul(c[None], z) + d[None]
    with np.errstate(divide="ignore", invalid="ignore"):
        return qmul(num, qinv(den))


# spheres and hyperplanes ---------------------------------------------------------

class SpherePlane:
    """The locus |z - a| = R |z - b|, stored in a fixed gauge.

    Internally the locus is A |z|^2 - 2 Re(conj(beta) z) + C = 0 with
    (A, beta, C) of unit norm.  The (a, b, R) gauge has R >= 1, |a - b| = 1,
    and for spheres a, b on the real axis through the centre; hyperplanes
    are the R = 1 stratum.
    """

    __slots__ = ("field", "a", "b", "R", "coeffs")

    def __init__(self, field, a, b, R: float):
        field = Field.parse(field)
        a, b = _arr(a, field), _arr(b, field)
        R = float(R)
        if not R > 0.0:
            raise ValidationError("R must be positive")
        A = 1.0 - R * R
        beta = a - R * R * b
        C = float(qabs2(a) - R * R * qabs2(b))
        self._set(field, A, beta, C)

    def _set(self, field, A, beta, C):
        vec = np.concatenate([[A], beta, [C]])
        nrm = float(np.linalg.norm(vec))
        if nrm == 0.0:
            raise ValidationError("degenerate locus (a = b, R = 1)")
        A, beta, C = A / nrm, beta / nrm, C / nrm
        if A < 0.0 or (A == 0.0 and C < 0.0):
            A, beta, C = -A, -beta, -C
        scale = max(abs(A), float(np.sqrt(qabs2(beta))), abs(C))
        if abs(A) <= 1e-14 * scale:
            A = 0.0
            bn = float(np.sqrt(qabs2(beta)))
            if bn == 0.0:
                raise ValidationError("empty locus")
            n = beta / bn
            delta = C / (2.0 * bn)
            a, b, R = n * (delta + 0.5), n * (delta - 0.5), 1.0
        else:
            centre = beta / A
            rho2 = float(qabs2(centre)) - C / A
            if rho2 <= 0.0:
                raise ValidationError("empty locus (imaginary radius)")
            rho = math.sqrt(rho2)
            s = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * rho2))
            one = np.array([1.0, 0, 0, 0])
            a, b, R = centre + s * one, centre + (rho2 / s) * one, s / rho
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "R", float(R))
        object.__setattr__(self, "coeffs", (float(A), np.array(beta), float(C)))

    @classmethod
    def from_coeffs(cls, field, A, beta, C) -> "SpherePlane":
        obj = cls.__new__(cls)
        obj._set(Field.parse(field), float(A), _arr(beta, Field.parse(field)), float(C))
        return obj

    @classmethod
    def sphere(cls, field, centre, radius: float) -> "SpherePlane":
        field = Field.parse(field)
        c = _arr(centre, field)
        return cls.from_coeffs(field, 1.0, c, float(qabs2(c)) - radius * radius)

    def __setattr__(self, name, value):
        raise AttributeError("SpherePlane is immutable")

    @property
    def is_plane(self) -> bool:
        return self.coeffs[0] == 0.0

    @property
    def centre(self) -> np.ndarray:
        A, beta, _ = self.coeffs
        if A == 0.0:
            raise GeometryError("a hyperplane has no centre")
        return beta / A

    @property
    def radius(self) -> float:
        A, beta, C = self.coeffs
        if A == 0.0:
            return math.inf
        return math.sqrt(float(qabs2(beta / A)) - C / A)

    def residual(self, z) -> np.ndarray:
        """Scale-free defining value (A|z|^2 - 2Re(conj(beta) z) + C) / (1 + |z|^2)."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        A, beta, C = self.coeffs
        n2 = qabs2(z)
        val = A * n2 - 2.0 * (z @ beta) + C
        return np.abs(val) / (1.0 + n2)

    def sample(self, count: int, rng) -> np.ndarray:
        r = self.field.r
        w = random_scalars(self.field, rng, count)
        if self.is_plane:
            _, beta, C = self.coeffs
            bn = float(np.sqrt(qabs2(beta)))
            n = beta / bn
            w = w - n[None] * (w @ n)[:, None]
            w *= np.exp(rng.uniform(-1.0, 1.0, count))[:, None]
            return w + n[None] * (C / (2.0 * bn))
        w /= np.sqrt(qabs2(w))[:, None]
        if r == 1:
            w[:, 0] = np.where(rng.random(count) < 0.5, -1.0, 1.0)
        return self.centre[None] + self.radius * w

    def is_close(self, other: "SpherePlane", tol: float = 1e-8) -> bool:
        a = np.concatenate([[self.coeffs[0]], self.coeffs[1], [self.coeffs[2]]])
        b = np.concatenate([[other.coeffs[0]], other.coeffs[1], [other.coeffs[2]]])
        return float(min(np.abs(a - b).max(), np.abs(a + b).max())) <= tol

    def to_json(self) -> dict:
        r = self.field.r
        return {"field": self.field.value, "a": list(map(float, self.a[:r])),
                "b": list(map(float, self.b[:r])), "R": self.R,
                "kind": "plane" if self.is_plane else "sphere"}

    @classmethod
    def from_json(cls, payload) -> "SpherePlane":
        try:
            return cls(payload["field"], payload["a"], payload["b"], payload["R"])
        except KeyError as exc:
            raise ValidationError(f"sphere JSON is missing {exc}") from None

    def __repr__(self):
        kind = "plane" if self.is_plane else "sphere"
        return f"SpherePlane[{self.field.value}]({kind}, R={self.R:.6g})"


def _fit_rows(z: np.ndarray, r: int) -> np.ndarray:
    n2 = qabs2(z)
    rows = np.column_stack([n2, -2.0 * z[:, :r], np.ones(len(z))])
    return rows / (1.0 + n2)[:, None]


def map_sphereplane(m: MoebiusMap, S: SpherePlane, *, fit_points: int | None = None,
                    holdout: int = 50, seed: int = 0, tol: float | None = None) -> SpherePlane:
    """Image of a sphere or hyperplane, fitted to sampled image points."""
    if m.field is not S.field:
        raise TagMismatchError(f"field {m.field.value} vs {S.field.value}")
    field, r = m.field, m.field.r
    tol = DEFAULTS["sphere_fit"] if tol is None else tol
    fit_points = 4 * r + 4 if fit_points is None else max(int(fit_points), 3 * r)
    rng = np.random.default_rng(seed)
    need = fit_points + holdout
    pts = np.zeros((0, 4))
    for _ in range(10):
        img = apply_batch(m, S.sample(2 * need, rng))
        img = img[np.all(np.isfinite(img), axis=1) & (qabs2(img) < 1e12)]
        pts = np.vstack([pts, img])
        if len(pts) >= need:
            break
    if len(pts) < need:
        raise GeometryError("could not sample enough finite image points")
    fit, hold = pts[:fit_points], pts[fit_points:need]
    _, _, vh = np.linalg.svd(_fit_rows(fit, r))
    coef = vh[-1]
    beta = np.zeros(4)
    beta[:r] = coef[1:1 + r]
    out = SpherePlane.from_coeffs(field, coef[0], beta, coef[-1])
    resid = float(out.residual(hold).max())
    if resid > tol:
        raise GeometryError(f"image does not fit a sphere or hyperplane (holdout residual {resid:.3e})")
    return out


# the half-space H+ = {Re z > 0} -----------------------------------------------------

def u_matrix(field, w) -> KMatrix:
    field = Field.parse(field)
    w = _arr(w, field)
    data = np.zeros((2, 2, 4))
    data[0, 0, 0] = data[1, 1, 0] = 1.0
    data[0, 1] = w
    return KMatrix(field, data)


def v_matrix(field, w) -> KMatrix:
    field = Field.parse(field)
    w = _arr(w, field)
    data = np.zeros((2, 2, 4))
    data[0, 0, 0] = data[1, 1, 0] = 1.0
    data[1, 0] = w
    return KMatrix(field, data)


def uv_bracket(field, w, u) -> KMatrix:
    """[[0, w], [0, 0]], [[0, 0], [u, 0]]] = diag(wu, -uw)."""
    field = Field.parse(field)
    x = np.zeros((2, 2, 4))
    y = np.zeros((2, 2, 4))
    x[0, 1] = _arr(w, field)
    y[1, 0] = _arr(u, field)
    return lie_bracket(KMatrix(field, x), KMatrix(field, y))


def _check_imaginary(w, field, what="parameter"):
    w = _arr(w, field)
    if abs(w[0]) > 1e-14 * max(1.0, float(np.abs(w).max())):
        raise ValidationError(f"{what} must be purely imaginary (real part {w[0]:.3e})")
    return w


def generate_from_UV(word, field=None) -> MoebiusMap:
    """Product of U(w) = [[1, w], [0, 1]] and V(w) = [[1, 0], [w, 1]] factors, left to right."""
    word = list(word)
    if field is None:
        field = next((w.field for _, w in word if isinstance(w, Scalar)), None)
        if field is None:
            raise ValidationError("field is needed for a word without Scalar parameters")
    field = Field.parse(field)
    m = KMatrix.identity(field, 2)
    for kind, w in word:
        w = _check_imaginary(w, field)
        kind = str(kind).upper()
        if kind == "U":
            g = u_matrix(field, w)
        elif kind == "V":
            g = v_matrix(field, w)
        else:
            raise ValidationError(f"unknown generator {kind!r} (use U or V)")
        m = matmul(m, g)
    return MoebiusMap(m)


def cayley(field) -> MoebiusMap:
    """z -> (z - 1)(z + 1)^{-1}, taking H+ onto the unit ball."""
    return MoebiusMap.from_entries(field, 1.0, -1.0, 1.0, 1.0)


def halfspace_samples(field, count: int, rng, boundary: bool = False) -> np.ndarray:
    """Points of H+ (log-uniform real parts) or of its boundary Re z = 0."""
    field = Field.parse(field)
    z = random_scalars(field, rng, count) * np.exp(rng.uniform(-2, 2, count))[:, None]
    if boundary:
        z[:, 0] = 0.0
    else:
        z[:, 0] = 10.0 ** rng.uniform(-6, 2, count)
    return z


@dataclass(frozen=True)
class HalfspaceReport:
    member: bool
    normal_form: str | None
    sampled: int
    failures: int

    def to_json(self) -> dict:
        return {"member": self.member, "normal_form": self.normal_form,
                "sampled": self.sampled, "failures": self.failures}


def _triangular_check(a, b, d, tol):
    """z -> (a z + b) d^{-1} preserves H+ iff d^{-1} a > 0 and Re(b d^{-1}) = 0."""
    q = qmul(qinv(d), a)
    scale = float(np.sqrt(qabs2(q)))
    ok_scale = q[0] > 0.0 and float(np.sqrt((q[1:] ** 2).sum())) <= tol * scale
    t = qmul(b, qinv(d))
    return bool(ok_scale and abs(t[0]) <= tol * max(1.0, float(np.sqrt(qabs2(t)))))


def halfspace_aut_membership(m: MoebiusMap, samples: int = 1000, seed: int = 0,
                             tol: float = 1e-12) -> HalfspaceReport:
    """Does m preserve H+?  Exact for triangular normal forms, sampled otherwise."""
    a, b, c, d = m.entries()
    scale = float(np.abs(m.matrix.data).max())
    if float(np.abs(c).max()) <= tol * scale:
        return HalfspaceReport(_triangular_check(a, b, d, 1e-10), "P_inf", 0, 0)
    if float(np.abs(b).max()) <= tol * scale:
        # J m J with J = [[0, 1], [1, 0]] is upper triangular [[d, c], [0, a]]
        return HalfspaceReport(_triangular_check(d, c, a, 1e-10), "P_0", 0, 0)
    # interior must stay inside and the boundary must stay on the boundary
    # (the second test rejects maps of H+ onto a proper subset)
    rng = np.random.default_rng(seed)
    z = halfspace_samples(m.field, samples, rng)
    img = apply_batch(m, z)
    bad = ~np.all(np.isfinite(img), axis=1) | (img[:, 0] <= 0.0)
    zb = halfspace_samples(m.field, samples, rng, boundary=True)
    imb = apply_batch(m, zb)
    finite = np.all(np.isfinite(imb), axis=1) & (qabs2(imb) < 1e16)
    off = np.zeros(len(zb), dtype=bool)
    off[finite] = np.abs(imb[finite, 0]) > 1e-9 * (1.0 + np.sqrt(qabs2(imb[finite])))
    fails = int(bad.sum() + off.sum())
    return HalfspaceReport(fails == 0, None, 2 * len(z), fails)


def to_zero_from_boundary(field, x) -> MoebiusMap:
    """An element of P_oo taking the boundary point x (Re x = 0) to 0."""
    field = Field.parse(field)
    x = _check_imaginary(x, field, "boundary point")
    return MoebiusMap(u_matrix(field, -x))


def to_one_from_interior(field, p) -> MoebiusMap:
    """An element of P_oo taking p in H+ to 1: translate, then z -> s^{-1/2} z s^{-1/2}."""
    field = Field.parse(field)
    p = _arr(p, field)
    if not p[0] > 0.0:
        raise ValidationError("point is not in the half-space")
    shift = np.array(p)
    shift[0] = 0.0
    lam = 1.0 / math.sqrt(p[0])
    scale = KMatrix.diag(field, [lam, 1.0 / lam])
    return MoebiusMap(matmul(scale, u_matrix(field, -shift)))
