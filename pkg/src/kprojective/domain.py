"""Proper domains in P(K^{d+1}) and their dual sets.

Every domain is described by a real defining function ``h`` on K^{d+1} which
is homogeneous of degree 2 and invariant under right multiplication by unit
scalars; the domain is ``{h < 0}``.  Because of the two symmetries, the real
gradient of ``h`` at a boundary point is itself a functional whose kernel is
the tangent K-hyperplane there.

Model domains (ball, paraboloid, half-space) are quadrics ``h = v* Q v`` with a
stored projective map onto the ball, so their duals are known exactly.  The
other domains get probabilistically certified dual samples.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .config import DEFAULTS
from .errors import DimensionError, DomainError, SingularBoundaryError, ValidationError
from .kmatrix import KMatrix, complex_embedding, conj_transpose, matmul
from .kscalar import Field, kinner, qabs2, qconj, qinv, qmul, random_scalars
from .projspace import DualPoint, ProjMap, ProjPoint, from_chart

__all__ = [
    "Region", "Domain", "QuadricDomain", "Ball", "Paraboloid", "HalfSpace", "C11ExampleDomain",
    "GraphDomain", "TransformedDomain", "TangentData", "DualSample", "BallDual",
    "BoundaryDistance", "make_ball", "make_paraboloid", "make_halfspace", "make_sec9",
    "make_graph", "domain_from_json", "default_fhat", "constant_fhat",
    "dual_exact_ball", "dual_sample", "certify", "boundary_distance", "cayley_matrix",
]


class Region(enum.Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


def _normalize(v):
    v = np.asarray(v, dtype=float)
    return v / np.sqrt(np.einsum("...ij,...ij->...", v, v))[..., None, None]


def _hermitian_values(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Re(v* Q v) for a (n, n, 4) form and a (..., n, 4) batch."""
    qv = qmul(q[None, :, :, :], v[..., None, :, :]).sum(axis=-2) if v.ndim > 2 else \
        qmul(q, v[None, :, :]).sum(axis=1)
    return np.einsum("...ij,...ij->...", v, qv)


class Domain:
    """Base class: a proper domain given by a defining function."""

    kind = "abstract"

    def __init__(self, field, dim: int):
        self.field = Field.parse(field)
        if int(dim) < 1:
            raise ValidationError("domains need dimension d >= 1")
        self.dim = int(dim)

    @property
    def n(self) -> int:
        return self.dim + 1

    # defining function ---------------------------------------------------
    def raw_values(self, v: np.ndarray) -> np.ndarray:
        """Degree-2 homogeneous defining function on a (..., n, 4) batch."""
        raise NotImplementedError

    def defining_values(self, v) -> np.ndarray:
        return self.raw_values(_normalize(v))

    def defining_value(self, p: ProjPoint) -> float:
        self._check_point(p)
        return float(self.raw_values(p.rep))

    def _check_point(self, p):
        if p.field is not self.field:
            raise ValidationError(f"point over {p.field.value} in a domain over {self.field.value}")
        if p.n != self.n:
            raise DimensionError(f"point of P^{p.dim} in a domain of P^{self.dim}")

    def contains(self, p: ProjPoint, eps: float | None = None) -> Region:
        eps = DEFAULTS["boundary_band"] if eps is None else eps
        val = self.defining_value(p)
        if val < -eps:
            return Region.INSIDE
        if val <= eps:
            return Region.BOUNDARY
        return Region.OUTSIDE

    def inside_mask(self, v, eps: float | None = None) -> np.ndarray:
        eps = DEFAULTS["boundary_band"] if eps is None else eps
        return self.defining_values(v) < -eps

    def gradient(self, rep: np.ndarray) -> np.ndarray:
        """Real gradient of the defining function at a representative (central differences)."""
        step = 1e-6
        r, n = self.field.r, self.n
        idx = [(i, c) for i in range(n) for c in range(r)]
        batch = np.repeat(rep[None, :, :], 2 * len(idx), axis=0)
        for k, (i, c) in enumerate(idx):
            batch[2 * k, i, c] += step
            batch[2 * k + 1, i, c] -= step
        vals = self.raw_values(batch)
        g = np.zeros((n, 4))
        for k, (i, c) in enumerate(idx):
            g[i, c] = (vals[2 * k] - vals[2 * k + 1]) / (2 * step)
        return g

    # sampling -----------------------------------------------------------------
    def interior_samples(self, count: int, rng) -> np.ndarray:
        raise NotImplementedError

    def boundary_samples(self, count: int, rng) -> np.ndarray:
        raise NotImplementedError

    def center(self) -> ProjPoint:
        raise NotImplementedError

    # model data -----------------------------------------------------------
    def to_ball(self) -> ProjMap | None:
        """A projective map taking the domain onto the unit ball, if known."""
        return None

    @property
    def quadric_form(self) -> KMatrix | None:
        return None

    def dual_center(self) -> DualPoint | None:
        """A functional deep inside the dual set, if one is known."""
        psi = self.to_ball()
        if psi is None:
            return None
        e0 = np.zeros((self.n, 4))
        e0[0, 0] = 1.0
        return DualPoint(self.field, conj_transpose(psi.matrix).apply(e0))

    def tangent_hyperplane(self, x: ProjPoint, tol: float | None = None) -> "TangentData":
        return tangent_hyperplane(self, x, tol)

    def to_json(self) -> dict:
        return {"kind": self.kind, "field": self.field.value, "dim": self.dim}

    def __repr__(self):
        return f"{type(self).__name__}[{self.field.value}](d={self.dim})"


# quadrics -----------------------------------------------------------------

class QuadricDomain(Domain):
    """{v* Q v < 0} for a Hermitian Q of signature (1, d), with Q = M* Q_ball M."""

    kind = "quadric"

    def __init__(self, field, dim, to_ball_matrix: KMatrix):
        super().__init__(field, dim)
        if to_ball_matrix.shape != (self.n, self.n):
            raise DimensionError("model map has the wrong size")
        self._m = to_ball_matrix
        qb = KMatrix.diag(self.field, [-1.0] + [1.0] * self.dim)
        self._q = matmul(matmul(conj_transpose(to_ball_matrix), qb), to_ball_matrix)
        self._m_inv = to_ball_matrix.inv()
        self._q_inv = self._q.inv()

    @property
    def quadric_form(self) -> KMatrix:
        return self._q

    @property
    def dual_form(self) -> KMatrix:
        """Q^{-1}: f is in the closed dual set iff f* Q^{-1} f <= 0."""
        return self._q_inv

    def raw_values(self, v):
        return _hermitian_values(self._q.data, np.asarray(v, dtype=float))

    def gradient(self, rep):
        return 2.0 * self._q.apply(rep)

    def to_ball(self) -> ProjMap:
        return ProjMap(self._m)

    def _from_ball(self, v):
        return _normalize(qmul(self._m_inv.data[None], v[:, None, :, :]).sum(axis=2))

    def interior_samples(self, count, rng):
        return self._from_ball(_ball_interior(self.field, self.dim, count, rng))

    def boundary_samples(self, count, rng):
        return self._from_ball(_ball_boundary(self.field, self.dim, count, rng))

    def center(self):
        e0 = np.zeros((self.n, 4))
        e0[0, 0] = 1.0
        return ProjPoint(self.field, self._m_inv.apply(e0))


def _ball_interior(field, d, count, rng):
    """Chart points [1 : z] with |z| < 1; half uniform in volume, half hugging the sphere."""
    z = random_scalars(field, rng, (count, d))
    z /= np.sqrt(qabs2(z).sum(axis=1))[:, None, None]
    rd = field.r * d
    radius = rng.random(count) ** (1.0 / rd)
    near = rng.random(count) < 0.5
    radius[near] = 1.0 - 10.0 ** rng.uniform(-8, -1, near.sum())
    z *= radius[:, None, None]
    v = np.concatenate([np.tile([[[1.0, 0, 0, 0]]], (count, 1, 1)), z], axis=1)
    return _normalize(v)


def _ball_boundary(field, d, count, rng):
    z = random_scalars(field, rng, (count, d))
    z /= np.sqrt(qabs2(z).sum(axis=1))[:, None, None]
    v = np.concatenate([np.tile([[[1.0, 0, 0, 0]]], (count, 1, 1)), z], axis=1)
    return _normalize(v)


class Ball(QuadricDomain):
    """{[1 : z] : |z| < 1}."""

    kind = "ball"

    def __init__(self, field, dim):
        super().__init__(field, dim, KMatrix.identity(field, int(dim) + 1))


def cayley_matrix(field, dim: int) -> KMatrix:
    """Map of the paraboloid onto the ball; for d = 1 the Cayley transform (z-1)(z+1)^{-1}."""
    n = int(dim) + 1
    data = np.zeros((n, n, 4))
    data[0, 0, 0], data[0, 1, 0] = 0.5, 0.5
    data[1, 0, 0], data[1, 1, 0] = -0.5, 0.5
    for i in range(2, n):
        data[i, i, 0] = 1.0
    return KMatrix(field, data)


class Paraboloid(QuadricDomain):
    """{[1 : z] : Re(z_1) > sum_{i >= 2} |z_i|^2}."""

    kind = "paraboloid"

    def __init__(self, field, dim):
        super().__init__(field, dim, cayley_matrix(field, dim))


class HalfSpace(Paraboloid):
    """{z in K : Re(z) > 0} inside P(K^2)."""

    kind = "halfspace"

    def __init__(self, field, dim=1):
        if int(dim) != 1:
            raise ValidationError("the half-space model lives in dimension 1")
        super().__init__(field, 1)


def make_ball(field, d) -> Ball:
    return Ball(field, d)


def make_paraboloid(field, d) -> Paraboloid:
    return Paraboloid(field, d)


def make_halfspace(field) -> HalfSpace:
    return HalfSpace(field)


# the C^{1,1} example ------------------------------------------------------

def default_fhat(v: np.ndarray) -> np.ndarray:
    """2 + s|s|/2 with s = (|v_0|^2 - sum_{i>0} |v_i|^2) / |v|^2.

    Positive, degree-0 homogeneous and C^{1,1}; the second derivative jumps
    where |v_0| equals the norm of the remaining coordinates.
    """
    a2 = qabs2(v)
    tot = a2.sum(axis=-1)
    if v.shape[-2] == 1:
        return np.full(tot.shape, 2.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(tot > 0, (a2[..., 0] - a2[..., 1:].sum(axis=-1)) / tot, 0.0)
    return 2.0 + 0.5 * s * np.abs(s)


def constant_fhat(value: float):
    value = float(value)

    def fhat(v):
        return np.full(v.shape[:-2], value)

    fhat.constant = value
    return fhat


class C11ExampleDomain(Domain):
    """{[1 : z_1 : z'] : Im(z_1) > |z'|^2 F(z')} with F degree-0 homogeneous.

    ``convention`` picks the component of z_1 bounded below: "imag" uses the
    i-component (the default; it makes T[z0 : z1 : z'] = [z1 : -z0 : z'] a
    symmetry) and "real" uses the real part.
    """

    kind = "sec9"

    def __init__(self, field, dim: int = 3, fhat=None, convention: str = "imag",
                 fhat_spec=None, check_samples: int = 2000, seed: int = 0):
        super().__init__(field, dim)
        if self.dim < 2:
            raise ValidationError("this example needs d >= 2")
        if convention not in ("imag", "real"):
            raise ValidationError("convention must be 'imag' or 'real'")
        if convention == "imag" and self.field is Field.R:
            raise ValidationError("the imaginary-part convention needs field c or h")
        self.convention = convention
        self.fhat = default_fhat if fhat is None else fhat
        self.fhat_spec = fhat_spec or ({"type": "default"} if fhat is None else {"type": "custom"})
        rng = np.random.default_rng(seed)
        probe = random_scalars(self.field, rng, (check_samples, self.dim - 1))
        vals = self.fhat(probe)
        if not np.all(np.isfinite(vals)) or vals.min() <= 0.0:
            raise ValidationError("F must be positive on sampled points")
        self._f_lower = float(vals.min())

    def _component(self, x):
        return x[..., 1] if self.convention == "imag" else x[..., 0]

    def raw_values(self, v):
        v = np.asarray(v, dtype=float)
        tail = v[..., 2:, :]
        t2 = qabs2(tail).sum(axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            fh = np.where(t2 > 0, self.fhat(tail), 0.0)
        lin = self._component(qmul(v[..., 1, :], qconj(v[..., 0, :])))
        return t2 * fh - lin

    def _unit_axis(self):
        u = np.zeros(4)
        u[1 if self.convention == "imag" else 0] = 1.0
        return u

    def _chart_points(self, zp, height, rng):
        count = zp.shape[0]
        t2 = qabs2(zp).sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            fh = np.where(t2 > 0, self.fhat(zp), 0.0)
        free = random_scalars(self.field, rng, count) * (10.0 ** rng.uniform(-2, 1, count))[:, None]
        axis = self._unit_axis()
        free -= free[:, [int(np.argmax(axis))]] * axis
        z1 = free + (t2 * fh + height)[:, None] * axis
        v = np.concatenate([np.tile([[[1.0, 0, 0, 0]]], (count, 1, 1)), z1[:, None, :], zp], axis=1)
        return _normalize(v)

    def interior_samples(self, count, rng):
        chunks, have = [], 0
        while have < count:
            m = 2 * (count - have) + 8
            zp = random_scalars(self.field, rng, (m, self.dim - 1))
            zp *= (10.0 ** rng.uniform(-2, 1, m))[:, None, None]
            height = 10.0 ** rng.uniform(-6, 2, m)
            pts = self._chart_points(zp, height, rng)
            pts = pts[self.inside_mask(pts)]
            chunks.append(pts)
            have += pts.shape[0]
        return np.concatenate(chunks)[:count]

    def boundary_samples(self, count, rng):
        zp = random_scalars(self.field, rng, (count, self.dim - 1))
        zp *= (10.0 ** rng.uniform(-2, 1, count))[:, None, None]
        return self._chart_points(zp, np.zeros(count), rng)

    def center(self):
        v = np.zeros((self.n, 4))
        v[0, 0] = 1.0
        v[1] = self._unit_axis()
        return ProjPoint(self.field, v)

    def symmetry_T(self) -> ProjMap:
        """[z0 : z1 : z'] -> [z1 : -z0 : z']."""
        data = np.zeros((self.n, self.n, 4))
        data[0, 1, 0] = 1.0
        data[1, 0, 0] = -1.0
        for i in range(2, self.n):
            data[i, i, 0] = 1.0
        return ProjMap(KMatrix(self.field, data))

    def scaling(self, t: float) -> ProjMap:
        """[z0 : z1 : z'] -> [e^t z0 : e^{-t} z1 : z']."""
        return ProjMap(KMatrix.diag(self.field, [math.exp(t), math.exp(-t)] + [1.0] * (self.n - 2)))

    def distinguished_points(self):
        e0 = np.zeros((self.n, 4))
        e1 = np.zeros((self.n, 4))
        e0[0, 0] = 1.0
        e1[1, 0] = 1.0
        return ProjPoint(self.field, e0), ProjPoint(self.field, e1)

    def graph_function(self, zp: np.ndarray) -> np.ndarray:
        """|z'|^2 fhat(z') on a (..., d-1, 4) batch: the height of the boundary over z'."""
        t2 = qabs2(zp).sum(axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return t2 * np.where(t2 > 0, self.fhat(zp), 0.0)

    def to_json(self):
        out = super().to_json()
        out["fhat"] = dict(self.fhat_spec)
        out["convention"] = self.convention
        return out


def make_sec9(field, d: int = 3, fhat=None, convention: str = "imag") -> C11ExampleDomain:
    return C11ExampleDomain(field, d, fhat=fhat, convention=convention)


# graph domains from an expression tree ----------------------------------------

_BINARY = {"add", "sub", "mul", "div"}
_UNARY = {"neg", "abs", "abs2", "re", "im", "conj"}


def _eval_expr(node, z, field):
    """Evaluate an expression tree on a (..., d, 4) batch of chart coordinates."""
    if isinstance(node, (int, float)):
        out = np.zeros(z.shape[:-2] + (4,))
        out[..., 0] = float(node)
        return out
    if not isinstance(node, dict) or "op" not in node:
        raise ValidationError(f"bad expression node {node!r}")
    op = node["op"]
    if op == "const":
        val = node.get("value", 0.0)
        val = [val] if isinstance(val, (int, float)) else list(val)
        out = np.zeros(z.shape[:-2] + (4,))
        out[..., :len(val)] = val
        return out
    if op == "var":
        i = int(node["index"])
        if not 1 <= i <= z.shape[-2]:
            raise ValidationError(f"variable index {i} out of range 1..{z.shape[-2]}")
        return z[..., i - 1, :]
    if op in _BINARY:
        a = _eval_expr(node["args"][0], z, field)
        b = _eval_expr(node["args"][1], z, field)
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        if op == "mul":
            return qmul(a, b)
        return qmul(a, qinv(b))
    if op in _UNARY:
        a = _eval_expr(node["args"][0], z, field)
        out = np.zeros_like(a)
        if op == "neg":
            return -a
        if op == "conj":
            return qconj(a)
        if op == "abs":
            out[..., 0] = np.sqrt(qabs2(a))
        elif op == "abs2":
            out[..., 0] = qabs2(a)
        elif op == "re":
            out[..., 0] = a[..., 0]
        else:
            part = int(node.get("part", 1))
            if not 1 <= part < field.r:
                raise ValidationError(f"imaginary part {part} does not exist over {field.value}")
            out[..., 0] = a[..., part]
        return out
    if op == "pow":
        a = _eval_expr(node["args"][0], z, field)
        k = int(node["exponent"])
        if k < 0:
            raise ValidationError("negative powers are not supported")
        out = np.zeros_like(a)
        out[..., 0] = 1.0
        for _ in range(k):
            out = qmul(out, a)
        return out
    raise ValidationError(f"unknown expression op {op!r}")


class GraphDomain(Domain):
    """{[1 : z] : r(z) < 0} for an expression r, bounded inside |z| < radius."""

    kind = "graph"

    def __init__(self, field, dim, expr, radius: float = 10.0, center=None,
                 check_samples: int = 2000, seed: int = 0):
        super().__init__(field, dim)
        self.expr = expr
        self.radius = float(radius)
        c = np.zeros((self.dim, 4)) if center is None else np.asarray(center, dtype=float)
        if c.ndim == 1:
            c = np.concatenate([c[:, None], np.zeros((c.shape[0], 3))], axis=1)
        if c.shape[1] < 4:
            c = np.concatenate([c, np.zeros((c.shape[0], 4 - c.shape[1]))], axis=1)
        self._center_chart = c
        if self.chart_values(c[None])[0] >= -DEFAULTS["boundary_band"]:
            raise DomainError("the declared center is not inside the domain")
        rng = np.random.default_rng(seed)
        sphere = random_scalars(self.field, rng, (check_samples, self.dim))
        sphere *= (self.radius / np.sqrt(qabs2(sphere).sum(axis=1)))[:, None, None]
        if np.any(self.chart_values(sphere) < 0):
            raise DomainError("domain is not contained in the declared chart ball")

    def chart_values(self, z):
        return _eval_expr(self.expr, np.asarray(z, dtype=float), self.field)[..., 0]

    def raw_values(self, v):
        v = np.asarray(v, dtype=float)
        a2 = qabs2(v[..., 0, :])
        tot = np.einsum("...ij,...ij->...", v, v)
        safe = a2 > 1e-24 * tot
        v0 = np.where(safe[..., None], v[..., 0, :], np.array([1.0, 0, 0, 0]))
        z = qmul(v[..., 1:, :], qinv(v0)[..., None, :])
        with np.errstate(all="ignore"):
            vals = a2 * self.chart_values(z)
        return np.where(safe, vals, tot)

    def _ray_exit(self, dirs):
        """Chart radius where the ray from the center along each direction leaves."""
        lo = np.zeros(dirs.shape[0])
        hi = np.full(dirs.shape[0], self.radius * 2.0)
        c = self._center_chart[None]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            inside = self.chart_values(c + mid[:, None, None] * dirs) < 0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return lo, hi

    def _chart_to_rep(self, z):
        v = np.concatenate([np.tile([[[1.0, 0, 0, 0]]], (z.shape[0], 1, 1)), z], axis=1)
        return _normalize(v)

    def interior_samples(self, count, rng):
        dirs = random_scalars(self.field, rng, (count, self.dim))
        dirs /= np.sqrt(qabs2(dirs).sum(axis=1))[:, None, None]
        lo, _ = self._ray_exit(dirs)
        frac = rng.random(count)
        near = rng.random(count) < 0.5
        frac[near] = 1.0 - 10.0 ** rng.uniform(-8, -1, near.sum())
        z = self._center_chart[None] + (frac * lo)[:, None, None] * dirs
        return self._chart_to_rep(z)

    def boundary_samples(self, count, rng):
        dirs = random_scalars(self.field, rng, (count, self.dim))
        dirs /= np.sqrt(qabs2(dirs).sum(axis=1))[:, None, None]
        lo, hi = self._ray_exit(dirs)
        z = self._center_chart[None] + (0.5 * (lo + hi))[:, None, None] * dirs
        return self._chart_to_rep(z)

    def center(self):
        return from_chart(self.field, self._center_chart)

    def to_json(self):
        out = super().to_json()
        r = self.field.r
        out.update({"expr": self.expr, "radius": self.radius,
                    "center": [list(map(float, row[:r])) for row in self._center_chart]})
        return out


def make_graph(field, dim, expr, radius=10.0, center=None) -> GraphDomain:
    return GraphDomain(field, dim, expr, radius, center)


# transported domains ------------------------------------------------------------

class TransformedDomain(Domain):
    """The image phi(Omega) of a domain under a projective map."""

    kind = "transformed"

    def __init__(self, base: Domain, phi: ProjMap):
        super().__init__(base.field, base.dim)
        if phi.field is not base.field or phi.n != base.n:
            raise DimensionError("map does not act on the domain's space")
        self.base = base
        self.phi = phi
        self._inv = phi.inverse().matrix

    def _pull(self, v):
        v = np.asarray(v, dtype=float)
        if v.ndim == 2:
            return self._inv.apply(v)
        return qmul(self._inv.data[None], v[:, None, :, :]).sum(axis=2)

    def raw_values(self, v):
        return self.base.raw_values(self._pull(v))

    def gradient(self, rep):
        # h'(v) = h(A v) with A = phi^{-1}, so grad h' = A* grad h(A v)
        return conj_transpose(self._inv).apply(self.base.gradient(self._inv.apply(rep)))

    def _push(self, v):
        m = self.phi.matrix.data
        return _normalize(qmul(m[None], v[:, None, :, :]).sum(axis=2))

    def interior_samples(self, count, rng):
        return self._push(self.base.interior_samples(count, rng))

    def boundary_samples(self, count, rng):
        return self._push(self.base.boundary_samples(count, rng))

    def center(self):
        return self.phi(self.base.center())

    def to_ball(self):
        psi = self.base.to_ball()
        return None if psi is None else psi @ self.phi.inverse()

    @property
    def quadric_form(self):
        q = self.base.quadric_form
        if q is None:
            return None
        return matmul(matmul(conj_transpose(self._inv), q), self._inv)

    @property
    def dual_form(self):
        q = self.quadric_form
        return None if q is None else q.inv()

    def to_json(self):
        return {"kind": "transformed", "field": self.field.value, "dim": self.dim,
                "base": self.base.to_json(), "matrix": self.phi.matrix.to_json()}


def domain_from_json(payload) -> Domain:
    if not isinstance(payload, dict):
        raise ValidationError("domain descriptor must be a JSON object")
    try:
        kind = payload["kind"]
        field = Field.parse(payload["field"])
    except KeyError as exc:
        raise ValidationError(f"domain descriptor is missing {exc}") from None
    dim = int(payload.get("dim", 1))
    if kind == "ball":
        return Ball(field, dim)
    if kind == "paraboloid":
        return Paraboloid(field, dim)
    if kind == "halfspace":
        return HalfSpace(field, payload.get("dim", 1))
    if kind == "sec9":
        spec = payload.get("fhat", {"type": "default"})
        if spec.get("type", "default") == "default":
            fhat = None
        elif spec["type"] == "constant":
            fhat = constant_fhat(spec.get("value", 1.0))
        else:
            raise ValidationError(f"unknown fhat type {spec.get('type')!r}")
        return C11ExampleDomain(field, payload.get("dim", 3), fhat=fhat,
                          convention=payload.get("convention", "imag"), fhat_spec=spec)
    if kind == "graph":
        if "expr" not in payload:
            raise ValidationError("graph domains need an 'expr' tree")
        return GraphDomain(field, dim, payload["expr"], payload.get("radius", 10.0),
                           payload.get("center"))
    if kind == "transformed":
        return TransformedDomain(domain_from_json(payload["base"]),
                                 ProjMap(KMatrix.from_json(payload["matrix"])))
    raise ValidationError(f"unknown domain kind {kind!r}")


# tangent hyperplanes ------------------------------------------------------------

@dataclass(frozen=True)
class TangentData:
    at: ProjPoint
    hyperplane: DualPoint
    gradient_norm: float


def tangent_hyperplane(domain: Domain, x: ProjPoint, tol: float | None = None) -> TangentData:
    """The tangent K-hyperplane at a boundary point, as a functional."""
    tol = DEFAULTS["boundary_band"] if tol is None else tol
    domain._check_point(x)
    val = domain.defining_value(x)
    if abs(val) > tol:
        raise DomainError(f"point is not on the boundary (defining value {val:.3e})")
    g = domain.gradient(np.array(x.rep))
    gn = float(np.sqrt((g ** 2).sum()))
    if gn < DEFAULTS["tangent_gradient_min"]:
        raise SingularBoundaryError(f"gradient norm {gn:.3e} at a boundary point")
    return TangentData(x, DualPoint(domain.field, g), gn)


def _tangent_batch(domain: Domain, reps: np.ndarray) -> np.ndarray:
    """Unit tangent functionals for a batch of boundary representatives."""
    if domain.quadric_form is not None:
        q = domain.quadric_form.data
        g = qmul(q[None], reps[:, None, :, :]).sum(axis=2)
    else:
        g = np.stack([domain.gradient(r) for r in reps])
    norms = np.sqrt(np.einsum("kij,kij->k", g, g))
    keep = norms >= DEFAULTS["tangent_gradient_min"]
    return g[keep] / norms[keep][:, None, None]


# duals ------------------------------------------------------------------------

@dataclass(frozen=True)
class BallDual:
    """B* = {[1 : u] : |u| < 1}; the unit sphere of u gives the extreme functionals."""

    field: Field
    dim: int

    def functional(self, u) -> DualPoint:
        u = np.asarray(u, dtype=float)
        if u.ndim == 1 and self.field is Field.R:
            u = u[:, None]
        v = np.zeros((self.dim + 1, 4))
        v[0, 0] = 1.0
        v[1:, :u.shape[1]] = u
        return DualPoint(self.field, v)

    def parameter(self, f: DualPoint) -> np.ndarray:
        """u = f' conj(f_0)^{-1}... in coordinates, u_i = f_i f_0^{-1}."""
        f0 = f.rep[0]
        if qabs2(f0) == 0.0:
            raise DomainError("functional is not in the chart of the dual ball")
        return qmul(f.rep[1:], qinv(f0)[None, :])

    def contains(self, f: DualPoint, tol: float = 0.0) -> bool:
        """Closed-dual membership |u| <= 1 + tol."""
        f0 = qabs2(f.rep[0])
        return float(qabs2(f.rep[1:]).sum()) <= (1.0 + tol) ** 2 * f0

    def sample(self, count: int, rng, extreme: bool = False) -> np.ndarray:
        u = random_scalars(self.field, rng, (count, self.dim))
        u /= np.sqrt(qabs2(u).sum(axis=1))[:, None, None]
        if not extreme:
            u *= (rng.random(count) ** (1.0 / (self.field.r * self.dim)))[:, None, None]
        v = np.concatenate([np.tile([[[1.0, 0, 0, 0]]], (count, 1, 1)), u], axis=1)
        return _normalize(v)


def dual_exact_ball(field, d: int) -> BallDual:
    return BallDual(Field.parse(field), int(d))


@dataclass
class DualSample:
    """Certified functionals of a domain (rows of ``array`` are unit reps)."""

    domain: Domain
    array: np.ndarray
    seed: int
    requested: int
    exact: bool = False
    complete: bool = True
    warnings: list = dc_field(default_factory=list)

    @property
    def count(self) -> int:
        return self.array.shape[0]

    @property
    def functionals(self):
        return [DualPoint(self.domain.field, f) for f in self.array]

    def extend(self, extra: np.ndarray) -> "DualSample":
        return DualSample(self.domain, np.concatenate([self.array, extra]), self.seed,
                          self.requested + extra.shape[0], self.exact, self.complete,
                          list(self.warnings))


def _quadric_certificate(domain: Domain, fs: np.ndarray, tol: float) -> np.ndarray:
    """Exact test f* Q^{-1} f <= tol for quadric domains (closed dual)."""
    qinv_form = domain.dual_form
    scale = float(np.linalg.norm(complex_embedding(qinv_form), 2))
    return _hermitian_values(qinv_form.data, fs) <= tol * scale


def certify(domain: Domain, fs: np.ndarray, samples: np.ndarray | None = None,
            tol: float | None = None, rng=None, kernel_probes: int = 64) -> np.ndarray:
    """Boolean mask of functionals whose kernel misses the domain.

    Quadrics get the exact algebraic test.  Every domain then gets the
    sampled sweep (no interior sample may be annihilated within ``tol``) and
    a probe of random points of each kernel, none of which may lie inside.
    """
    tol = DEFAULTS["certify_tol"] if tol is None else tol
    rng = np.random.default_rng(0) if rng is None else rng
    fs = np.ascontiguousarray(fs, dtype=float)
    ok = np.ones(fs.shape[0], dtype=bool)
    if getattr(domain, "dual_form", None) is not None:
        ok &= _quadric_certificate(domain, fs, tol)
    if samples is None:
        samples = domain.interior_samples(DEFAULTS["certify_samples"], rng)
    samples = np.ascontiguousarray(samples)
    ok &= _kernels.min_abs_pairing(fs, samples) > tol
    if kernel_probes:
        for k in np.flatnonzero(ok):
            basis = DualPoint(domain.field, fs[k]).kernel_basis()
            coef = random_scalars(domain.field, rng, (kernel_probes, len(basis)))
            pts = sum(qmul(b[None, :, :], coef[:, j][:, None, :]) for j, b in enumerate(basis))
            if np.any(domain.inside_mask(pts)):
                ok[k] = False
    return ok


def dual_sample(domain: Domain, n: int, seed: int = 0, *, retries: int = 8,
                samples: int | None = None, kernel_probes: int | None = None) -> DualSample:
    """n certified functionals: tangent functionals, pushed into the dual.

    Each tangent functional at a random boundary point is moved a random
    fraction of the way toward a central functional (or randomly perturbed
    when none is known); the move is halved until the candidate certifies.
    """
    rng = np.random.default_rng(seed)
    count = samples or DEFAULTS["certify_samples"]
    sweep = domain.interior_samples(count, rng)
    probes = (0 if domain.quadric_form is not None else 16) if kernel_probes is None else kernel_probes
    center = domain.dual_center()
    out = []
    have = 0
    budget = 4
    while have < n and budget > 0:
        budget -= 1
        need = n - have
        tangents = _tangent_batch(domain, domain.boundary_samples(int(need * 1.2) + 4, rng))
        if center is not None:
            c = np.array(center.rep)
            # align each tangent's phase with the center before interpolating
            ip = kinner(tangents, c[None])
            phase = ip / np.maximum(np.sqrt(qabs2(ip)), 1e-300)[:, None]
            tangents = qmul(tangents, phase[:, None, :])
            direction = c[None] - tangents
        else:
            direction = random_scalars(domain.field, rng, tangents.shape[:2])
            direction /= np.sqrt(np.einsum("kij,kij->k", direction, direction))[:, None, None]
        step = rng.random(tangents.shape[0]) * (0.9 if center is not None else 0.05)
        accepted = np.zeros(tangents.shape[0], dtype=bool)
        cand = tangents.copy()
        for attempt in range(retries + 1):
            pending = ~accepted
            if not pending.any():
                break
            trial = _normalize(tangents[pending] + step[pending][:, None, None] * direction[pending])
            ok = certify(domain, trial, sweep, rng=rng, kernel_probes=probes)
            idx = np.flatnonzero(pending)
            cand[idx[ok]] = trial[ok]
            accepted[idx[ok]] = True
            step[idx[~ok]] *= 0.5
            if attempt == retries - 1:
                step[idx[~ok]] = 0.0
        got = cand[accepted]
        got = np.stack([_kernels.canonicalize_rep(f, DEFAULTS["pivot_relative"])[0] for f in got]) \
            if got.shape[0] else got.reshape(0, domain.n, 4)
        out.append(got[:need])
        have += min(need, got.shape[0])
    arr = np.concatenate(out) if out else np.zeros((0, domain.n, 4))
    result = DualSample(domain, arr, seed, n, exact=domain.quadric_form is not None,
                        complete=arr.shape[0] >= n)
    if not result.complete:
        result.warnings.append(f"only {arr.shape[0]} of {n} functionals certified")
    return result


# distance to the boundary ----------------------------------------------------------

@dataclass(frozen=True)
class BoundaryDistance:
    """Upper bound for the d_P-distance from a point to the complement."""

    value: float
    directions: int
    witness: ProjPoint | None


def boundary_distance(domain: Domain, p: ProjPoint, directions: int | None = None,
                      seed: int = 0, scan: int = 64, bisections: int = 60) -> BoundaryDistance:
    directions = DEFAULTS["boundary_directions"] if directions is None else directions
    if domain.contains(p) is not Region.INSIDE:
        raise DomainError("boundary distance needs an interior point")
    rng = np.random.default_rng(seed)
    v = np.array(p.rep)
    w = random_scalars(domain.field, rng, (directions, domain.n))
    w = w - qmul(v[None], kinner(v[None], w)[:, None, :])
    w = _normalize(w)
    thetas = np.linspace(0.0, 0.5 * np.pi, scan + 1)[1:]
    best, witness = 1.0, None
    for k in range(directions):
        path = np.cos(thetas)[:, None, None] * v[None] + np.sin(thetas)[:, None, None] * w[k][None]
        inside = domain.inside_mask(path)
        out_idx = np.flatnonzero(~inside)
        if out_idx.size == 0:
            continue
        hi = thetas[out_idx[0]]
        lo = thetas[out_idx[0] - 1] if out_idx[0] > 0 else 0.0
        for _ in range(bisections):
            mid = 0.5 * (lo + hi)
            pt = math.cos(mid) * v + math.sin(mid) * w[k]
            if domain.inside_mask(pt[None])[0]:
                lo = mid
            else:
                hi = mid
        if math.sin(hi) < best:
            best = math.sin(hi)
            witness = ProjPoint(domain.field, math.cos(hi) * v + math.sin(hi) * w[k])
    return BoundaryDistance(best, directions, witness)
