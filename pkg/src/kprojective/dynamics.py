"""Proximal dynamics of projective maps and the standard-form coordinates.

A map is proximal when its top sigma is strictly separated from the next
one, bi-proximal when its inverse is proximal too.  Bi-proximal maps have an
attracting line x+ and a repelling line x-; for automorphisms of a domain
both lie on the boundary and the normal form built from them and from the
two tangent hyperplanes puts the domain in the shape Re(z_1) > F(Im z_1, z').
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .config import DEFAULTS
from .domain import Domain, Region, tangent_hyperplane
from .errors import ConvergenceError, DomainError, GeometryError, ValidationError
from .hilbert_metric import ball_isometry
from .kmatrix import (
    KMatrix, SigmaSpectrum, complex_embedding, conj_transpose, eigen_lines,
    hermitian_congruence_normalize, matmul, operator_norm, random_unitary,
    _partner, sigma_spectrum, vector_embedding, vector_from_embedding,
)
from .kscalar import Field, kinner, qabs2, qconj, qinv, qmul, random_scalars
from .projspace import DualPoint, EndClass, ProjMap, ProjPoint, end_distance, proj_distance

__all__ = [
    "Proximality", "ProximalClass", "classify", "iterate_orbit", "orbit_rate",
    "RankOneLimit", "rank_one_limit", "canonical_rank_one",
    "StandardForm", "standard_form", "extend_graph_function", "special_one_parameter",
    "AutomorphismReport", "automorphism_check", "SearchResult", "compose_biproximal_search",
    "LimitSetSample", "limit_set_sample", "ContractionReport", "contraction_check",
    "ball_boost", "random_ball_automorphism", "random_biproximal_ball_map",
]


def _as_map(phi) -> ProjMap:
    if isinstance(phi, ProjMap):
        return phi
    if isinstance(phi, KMatrix):
        return ProjMap(phi)
    raise TypeError("expected a ProjMap or a KMatrix")


def _unit_norm(m: KMatrix) -> KMatrix:
    return m * (1.0 / operator_norm(m))


# classification --------------------------------------------------------------

class Proximality(enum.Enum):
    NOT_PROXIMAL = "NotProximal"
    PROXIMAL_ONLY = "ProximalOnly"
    BI_PROXIMAL = "BiProximal"


@dataclass(frozen=True)
class ProximalClass:
    variant: Proximality
    spectrum: SigmaSpectrum
    gap_top: float
    gap_bottom: float
    x_plus: ProjPoint | None = None
    x_minus: ProjPoint | None = None

    @property
    def is_biproximal(self) -> bool:
        return self.variant is Proximality.BI_PROXIMAL

    def to_json(self) -> dict:
        out = {
            "variant": self.variant.value,
            "sigmas": list(self.spectrum.sigmas),
            "gap_top": self.gap_top,
            "gap_bottom": self.gap_bottom,
        }
        if self.x_plus is not None:
            out["x_plus"] = self.x_plus.to_json()
        if self.x_minus is not None:
            out["x_minus"] = self.x_minus.to_json()
        return out


def _dominant_line(m: KMatrix) -> ProjPoint:
    """Attracting line of a proximal matrix: eigenvector seed refined by power iteration."""
    field = m.field
    mu = _unit_norm(m)
    lines = eigen_lines(mu)
    if lines:
        seed = lines[0][1]
    else:
        seed = np.zeros((m.rows, 4))
        seed[:, 0] = 1.0
    rep, _, converged, _ = _kernels.power_iterate(
        np.ascontiguousarray(mu.data), np.ascontiguousarray(seed, dtype=float),
        DEFAULTS["power_maxit"], DEFAULTS["power_tol"], DEFAULTS["pivot_relative"])
    p = ProjPoint(field, rep)
    if not converged:
        resid = proj_distance(ProjPoint(field, mu.apply(p.rep)), p)
        if resid > 1e-9:
            raise ConvergenceError(
                f"power iteration did not settle (eigenline residual {resid:.3e})")
    return p


def classify(phi) -> ProximalClass:
    """Spectral type of a projective map and, when proximal, its fixed lines."""
    phi = _as_map(phi)
    spec = sigma_spectrum(phi.matrix)
    tie = DEFAULTS["sigma_tie"]
    sig = spec.sigmas
    if len(sig) < 2:
        return ProximalClass(Proximality.NOT_PROXIMAL, spec, 1.0, 1.0)
    gap_top = sig[-1] / sig[-2]
    gap_bottom = sig[1] / sig[0]
    forward = gap_top > 1.0 + tie
    backward = gap_bottom > 1.0 + tie
    x_plus = _dominant_line(phi.matrix) if forward else None
    x_minus = _dominant_line(phi.matrix.inv()) if backward else None
    if forward and backward:
        variant = Proximality.BI_PROXIMAL
    elif forward:
        variant = Proximality.PROXIMAL_ONLY
    else:
        variant = Proximality.NOT_PROXIMAL
    return ProximalClass(variant, spec, float(gap_top), float(gap_bottom), x_plus, x_minus)


# orbits -------------------------------------------------------------------------

def iterate_orbit(phi, p: ProjPoint, n: int) -> list:
    """[p, phi p, ..., phi^n p], renormalizing every step."""
    phi = _as_map(phi)
    if int(n) < 0:
        raise ValidationError("orbit length must be nonnegative")
    mu = _unit_norm(phi.matrix)
    arr = _kernels.normalized_orbit(np.ascontiguousarray(mu.data), np.ascontiguousarray(p.rep),
                                    int(n), DEFAULTS["pivot_relative"])
    return [type(p)(p.field, a) for a in arr]


def orbit_rate(phi, p: ProjPoint, target: ProjPoint, steps: int = 200,
               upper: float = 1e-2, lower: float = 1e-11) -> float:
    """Per-step contraction factor of d_P(phi^k p, target), by a log-linear fit."""
    pts = iterate_orbit(phi, p, steps)
    d = np.array([proj_distance(q, target) for q in pts])
    k = np.arange(len(d))
    sel = (d < upper) & (d > lower)
    if sel.sum() < 3:
        raise ConvergenceError("orbit does not pass through the fitting window")
    # use the first contiguous run inside the window
    idx = np.flatnonzero(sel)
    run = [idx[0]]
    for i in idx[1:]:
        if i != run[-1] + 1:
            break
        run.append(i)
    if len(run) < 3:
        raise ConvergenceError("orbit does not pass through the fitting window")
    slope = np.polyfit(k[run], np.log(d[run]), 1)[0]
    return float(math.exp(slope))


# rank-one limits ------------------------------------------------------------------

@dataclass(frozen=True)
class RankOneLimit:
    end: EndClass
    image: ProjPoint
    kernel: DualPoint
    squarings: int
    change: float

    def to_json(self) -> dict:
        return {"end": self.end.to_json(), "image": self.image.to_json(),
                "kernel": self.kernel.to_json(), "squarings": self.squarings,
                "change": self.change}


def canonical_rank_one(m: KMatrix):
    """Nearest rank-one class x f^* with x, f the canonical top singular lines.

    The middle scalar of a rank-one endomorphism is fixed to 1, which removes
    the phase that powers of a map with non-real top eigenvalue keep rotating.
    """
    e = complex_embedding(m)
    u, s, vh = np.linalg.svd(e)
    left, right = u[:, 0], np.conj(vh[0])
    if m.field is Field.R:
        # strip the arbitrary complex phase of the singular vectors
        left = left * np.exp(-1j * np.angle(left[np.argmax(np.abs(left))]))
        right = right * np.exp(-1j * np.angle(right[np.argmax(np.abs(right))]))
    x = ProjPoint(m.field, vector_from_embedding(left, m.field))
    f = DualPoint(m.field, vector_from_embedding(right, m.field))
    data = qmul(x.rep[:, None, :], qconj(f.rep)[None, :, :])
    return EndClass(KMatrix(m.field, data)), x, f


def rank_one_limit(phi, cls: ProximalClass | None = None) -> RankOneLimit:
    """Limit of phi^n / |phi^n| in P(End), by iterated squaring."""
    phi = _as_map(phi)
    cls = classify(phi) if cls is None else cls
    if not cls.is_biproximal:
        raise ValidationError(f"rank-one limits need a bi-proximal map, got {cls.variant.value}")
    tol = DEFAULTS["rank_one_tol"]
    m = _unit_norm(phi.matrix)
    prev, _, _ = canonical_rank_one(m)
    change = math.inf
    for k in range(1, DEFAULTS["rank_one_max_squarings"] + 1):
        m = _unit_norm(matmul(m, m))
        cur, x, f = canonical_rank_one(m)
        change = end_distance(cur, prev)
        if change <= tol:
            return RankOneLimit(cur, x, f, k, float(change))
        prev = cur
    raise ConvergenceError(
        f"normalized powers did not settle (gap {cls.gap_top:.3e}, last change {change:.3e})")


# standard form -----------------------------------------------------------------------

def _complement(vectors, n: int):
    """Orthonormal basis of the K-orthogonal complement of the given vectors."""
    basis = []
    for v in vectors:
        w = np.array(v, dtype=float)
        for b in basis:
            w = w - qmul(b, kinner(b, w)[None, :])
        nw = float(np.sqrt((w ** 2).sum()))
        if nw > 1e-10:
            basis.append(w / nw)
    k = len(basis)
    out = []
    for i in range(n):
        w = np.zeros((n, 4))
        w[i, 0] = 1.0
        for b in basis + out:
            w = w - qmul(b, kinner(b, w)[None, :])
        nw = float(np.sqrt((w ** 2).sum()))
        if nw > 1e-8:
            out.append(w / nw)
        if len(out) == n - k:
            break
    return out


def _unit_basis(field):
    return [np.eye(4)[c] for c in range(field.r)]


@dataclass(frozen=True)
class StandardForm:
    """Coordinates z = B^{-1} v with x+ = [1:0:...], x- = [0:1:0:...].

    ``basis`` holds B (columns v_1, v_2, ...); ``phi_std`` is B^{-1} phi B.
    The graph function F is probed locally by a one-dimensional root find
    along the real part of z_1.
    """

    domain: Domain
    phi: ProjMap
    classification: ProximalClass
    basis: KMatrix
    basis_inv: KMatrix
    phi_std: KMatrix
    hessian: KMatrix | None
    probe_radius: float
    residuals: dict = dc_field(default_factory=dict)

    @property
    def change_of_basis(self) -> ProjMap:
        return ProjMap(self.basis_inv)

    @property
    def field(self) -> Field:
        return self.domain.field

    @property
    def lambda_plus(self) -> np.ndarray:
        return np.array(self.phi_std.data[0, 0])

    @property
    def lambda_minus(self) -> np.ndarray:
        return np.array(self.phi_std.data[1, 1])

    @property
    def block(self) -> KMatrix:
        return KMatrix(self.field, self.phi_std.data[2:, 2:])

    def to_standard(self, p: ProjPoint) -> ProjPoint:
        return type(p)(p.field, self.basis_inv.apply(p.rep)) if not p.is_dual else \
            DualPoint(p.field, conj_transpose(self.basis).apply(p.rep))

    def chart_vector(self, x, z, s: float = 0.0) -> np.ndarray:
        """B [1 : s + x : z] in original coordinates."""
        n = self.domain.n
        c = np.zeros((n, 4))
        c[0, 0] = 1.0
        c[1] = np.asarray(x, dtype=float)
        c[1, 0] += s
        if n > 2:
            c[2:] = np.asarray(z, dtype=float).reshape(n - 2, 4)
        return self.basis.apply(c)

    def inside_standard(self, reps: np.ndarray) -> np.ndarray:
        """Membership mask for representatives given in standard coordinates."""
        b = self.basis.data
        v = qmul(b[None], reps[:, None, :, :]).sum(axis=2)
        return self.domain.inside_mask(v)

    def graph_function(self, x, z) -> float:
        """F(x, z): the value of Re(z_1) where the boundary is crossed."""
        x = np.asarray(x, dtype=float)
        if abs(x[0]) > 0.0:
            raise ValidationError("x must be purely imaginary")
        base = self.chart_vector(x, z)
        step = self.basis.data[:, 1, :]
        dom = self.domain

        def h(s):
            return float(dom.defining_values((base + s * step)[None])[0])

        span = 1.0
        for _ in range(8):
            grid = np.linspace(-span, span, 4001)
            vals = dom.defining_values(base[None] + grid[:, None, None] * step[None])
            outside = vals >= 0.0
            hit = np.flatnonzero(outside[:-1] & ~outside[1:])
            if outside[0] and hit.size:
                i = int(hit[0])
                if vals[i + 1] == 0.0:
                    return float(grid[i + 1])
                return float(brentq(h, grid[i], grid[i + 1], xtol=1e-17, rtol=9e-16, maxiter=200))
            span *= 4.0
        raise GeometryError("no boundary crossing along Re(z_1) near the chart origin")

    def to_json(self) -> dict:
        return {
            "basis": self.basis.to_json(),
            "change_of_basis": self.basis_inv.to_json(),
            "phi_standard": self.phi_std.to_json(),
            "lambda_plus": list(self.lambda_plus[: self.field.r]),
            "lambda_minus": list(self.lambda_minus[: self.field.r]),
            "hessian": None if self.hessian is None else self.hessian.to_json(),
            "residuals": self.residuals,
            "probe_radius": self.probe_radius,
        }


def _estimate_hessian(sf: StandardForm, step: float) -> KMatrix:
    """A with F(0, z) ~ z* A z, from symmetric second differences."""
    field = sf.field
    m = sf.domain.n - 2
    x0 = np.zeros(4)

    def quad(z):
        return 0.5 * (sf.graph_function(x0, step * z) + sf.graph_function(x0, -step * z)) / step ** 2

    A = np.zeros((m, m, 4))
    diag = []
    for i in range(m):
        e = np.zeros((m, 4))
        e[i, 0] = 1.0
        diag.append(quad(e))
        A[i, i, 0] = diag[-1]
    for i in range(m):
        for j in range(i + 1, m):
            for c, q in enumerate(_unit_basis(field)):
                z = np.zeros((m, 4))
                z[i, 0] = 1.0
                z[j] = q
                val = 0.5 * (quad(z) - diag[i] - diag[j])  # Re(A_ij q)
                A[i, j, c] = val if c == 0 else -val
            A[j, i] = qconj(A[i, j])
    return KMatrix(field, A)


def standard_form(domain: Domain, phi, *, normalize_hessian: bool = True,
                  probe_radius: float | None = None, band: float | None = None) -> StandardForm:
    """Coordinates adapted to a bi-proximal automorphism."""
    phi = _as_map(phi)
    field = domain.field
    if phi.field is not field or phi.n != domain.n:
        raise ValidationError("map does not act on the domain's space")
    band = DEFAULTS["boundary_band"] if band is None else band
    probe_radius = DEFAULTS["local_probe_radius"] if probe_radius is None else probe_radius
    cls = classify(phi)
    if not cls.is_biproximal:
        raise ValidationError(f"standard form needs a bi-proximal map, got {cls.variant.value}")
    for name, x in (("x+", cls.x_plus), ("x-", cls.x_minus)):
        if domain.contains(x, band) is not Region.BOUNDARY:
            raise DomainError(f"{name} is not on the boundary "
                              f"(defining value {domain.defining_value(x):.3e})")
    tp = tangent_hyperplane(domain, cls.x_plus, band)
    tm = tangent_hyperplane(domain, cls.x_minus, band)
    n = domain.n
    cols = [np.array(cls.x_plus.rep), np.array(cls.x_minus.rep)]
    cols += _complement([tp.hyperplane.rep, tm.hyperplane.rep], n)
    if len(cols) != n:
        raise GeometryError("tangent hyperplanes at x+ and x- coincide")
    data = np.stack(cols, axis=1)

    # orient: T_0 of the boundary is K_P x K^{d-1} and Re(z_1) grows inward
    grad = conj_transpose(KMatrix(field, data)).apply(domain.gradient(np.array(cls.x_plus.rep)))
    gamma = grad[1]
    gnorm = float(np.sqrt((gamma ** 2).sum()))
    if gnorm <= DEFAULTS["tangent_gradient_min"]:
        raise GeometryError("x- lies on the tangent hyperplane at x+")
    data[:, 1] = qmul(data[:, 1], (-gamma / gnorm)[None, :])
    basis = KMatrix(field, data)

    def assemble(b, hess):
        b_inv = b.inv()
        phi_std = matmul(matmul(b_inv, phi.matrix), b)
        return StandardForm(domain, phi, cls, b, b_inv, phi_std, hess, float(probe_radius))

    sf = assemble(basis, None)
    hess = None
    if n > 2:
        hess = _estimate_hessian(sf, DEFAULTS["hessian_step"])
        if normalize_hessian:
            g = hermitian_congruence_normalize(hess)
            data = np.array(basis.data)
            data[:, 2:] = matmul(KMatrix(field, data[:, 2:]), g).data
            basis = KMatrix(field, data)
    sf = assemble(basis, hess)
    object.__setattr__(sf, "residuals", _standard_residuals(sf, tp.hyperplane, tm.hyperplane))
    return sf


def _standard_residuals(sf: StandardForm, fp: DualPoint, fm: DualPoint) -> dict:
    field, n = sf.field, sf.domain.n
    e0 = ProjPoint(field, np.eye(n)[:, :1] * np.array([1.0, 0, 0, 0]))
    e1 = ProjPoint(field, np.eye(n)[:, 1:2] * np.array([1.0, 0, 0, 0]))
    xp = sf.to_standard(sf.classification.x_plus)
    xm = sf.to_standard(sf.classification.x_minus)
    bh = conj_transpose(sf.basis)
    gp = bh.apply(fp.rep)
    gm = bh.apply(fm.rep)
    # H+ = {z_1 = 0}, H- = {z_0 = 0}: all other functional entries vanish
    hp = float(np.sqrt((np.delete(gp, 1, axis=0) ** 2).sum() / (gp ** 2).sum()))
    hm = float(np.sqrt((np.delete(gm, 0, axis=0) ** 2).sum() / (gm ** 2).sum()))
    p = sf.phi_std.data
    scale = float(np.abs(p).max())
    mask = np.ones(p.shape[:2], dtype=bool)
    mask[0, 0] = mask[1, 1] = False
    mask[2:, 2:] = False
    off = float(np.abs(p[mask]).max()) / scale if mask.any() else 0.0
    return {
        "x_plus": proj_distance(xp, e0),
        "x_minus": proj_distance(xm, e1),
        "h_plus": hp,
        "h_minus": hm,
        "off_block": off,
    }


def extend_graph_function(sf: StandardForm, x, z, *, phi=None, probe=None,
                          radius: float | None = None, max_steps: int = 10_000) -> float:
    """F(x, z) anywhere, from a local probe and the contraction of phi.

    F(x, z) = mu^{-N} F(phi^N . (x, z)) with mu = lambda^- / lambda^+ and N
    the least power bringing the point into the probe neighbourhood; the
    value with N + 1 must agree.
    """
    field = sf.field
    probe = sf.graph_function if probe is None else probe
    radius = sf.probe_radius if radius is None else radius
    if phi is None:
        m = sf.phi_std
    else:
        m = matmul(matmul(sf.basis_inv, _as_map(phi).matrix), sf.basis)
        p = m.data
        mask = np.ones(p.shape[:2], dtype=bool)
        mask[0, 0] = mask[1, 1] = False
        mask[2:, 2:] = False
        if mask.any() and float(np.abs(p[mask]).max()) > 1e-9 * float(np.abs(p).max()):
            raise GeometryError("map is not block diagonal in these coordinates")
    lp, lm = m.data[0, 0], m.data[1, 1]
    mu_q = qmul(lm, qinv(lp))
    mu = float(mu_q[0])
    if float(np.sqrt((mu_q[1:] ** 2).sum())) > 1e-8 * abs(mu) or mu <= 0.0:
        raise GeometryError("lambda- / lambda+ is not a positive real")
    if mu >= 1.0:
        raise GeometryError("the map does not contract towards x+")
    n = sf.domain.n
    x = np.asarray(x, dtype=float)
    zz = np.zeros((n - 2, 4)) if n == 2 else np.asarray(z, dtype=float).reshape(n - 2, 4)
    v = np.zeros((n, 4))
    v[0, 0] = 1.0
    v[1] = x
    v[2:] = zz
    steps = 0
    while True:
        chart = qmul(v[1:], qinv(v[0])[None, :])
        if float(np.sqrt((chart ** 2).sum())) <= radius:
            break
        steps += 1
        if steps > max_steps:
            raise ConvergenceError("contraction never entered the probe neighbourhood")
        v = m.apply(v)
        v = v / float(np.sqrt((v ** 2).sum()))

    def value(vec, k):
        chart = qmul(vec[1:], qinv(vec[0])[None, :])
        xi = np.array(chart[0])
        xi[0] = 0.0
        return probe(xi, chart[1:]) * mu ** (-k)

    a = value(v, steps)
    w = m.apply(v)
    b = value(w / float(np.sqrt((w ** 2).sum())), steps + 1)
    if abs(a - b) > DEFAULTS["extension_agreement"] * max(abs(a), abs(b), 1e-300):
        raise ConvergenceError(f"extension depends on the power used ({a!r} vs {b!r})")
    return float(a)


def special_one_parameter(sf: StandardForm, t: float) -> ProjMap:
    """psi_t = diag(e^t, e^-t, Id) in standard coordinates, conjugated back."""
    n = sf.domain.n
    d = KMatrix.diag(sf.field, [math.exp(t), math.exp(-t)] + [1.0] * (n - 2))
    return ProjMap(matmul(matmul(sf.basis, d), sf.basis_inv))


# automorphism checks and composition search ------------------------------------------

@dataclass(frozen=True)
class AutomorphismReport:
    ok: bool
    failures: int
    checked: int
    worst: float

    def to_json(self) -> dict:
        return {"ok": self.ok, "failures": self.failures, "checked": self.checked,
                "worst": self.worst}


def automorphism_check(domain: Domain, phi, samples: int | None = None,
                       seed: int = 0, band: float | None = None) -> AutomorphismReport:
    """Sampled membership preservation.

    Interior samples (half of them within 1e-1..1e-8 of the boundary) are
    mapped; an image fails when its normalized defining value exceeds the
    boundary band.
    """
    phi = _as_map(phi)
    samples = DEFAULTS["automorphism_samples"] if samples is None else int(samples)
    band = DEFAULTS["boundary_band"] if band is None else band
    rng = np.random.default_rng(seed)
    pts = domain.interior_samples(samples, rng)
    m = phi.matrix.data
    img = qmul(m[None], pts[:, None, :, :]).sum(axis=2)
    vals = domain.defining_values(img)
    fails = int((vals > band).sum())
    return AutomorphismReport(fails == 0, fails, len(pts), float(vals.max()))


@dataclass(frozen=True)
class SearchResult:
    gamma: ProjMap
    classification: ProximalClass
    word: str
    tried: int


def _on_boundary(domain, cls, band):
    return all(domain.contains(x, band) is Region.BOUNDARY for x in (cls.x_plus, cls.x_minus))


def compose_biproximal_search(phis, psis, domain: Domain, *, word_length: int = 3,
                              band: float | None = None, check_samples: int | None = None,
                              seed: int = 0) -> SearchResult:
    """First bi-proximal gamma among phi_k psi_k^{-1}, then short words in all maps."""
    band = DEFAULTS["boundary_band"] if band is None else band
    phis = [_as_map(p) for p in (phis if isinstance(phis, (list, tuple)) else [phis])]
    psis = [_as_map(p) for p in (psis if isinstance(psis, (list, tuple)) else [psis])]
    for i, g in enumerate(phis + psis):
        rep = automorphism_check(domain, g, check_samples, seed)
        if not rep.ok:
            raise ValidationError(f"map {i} fails the automorphism sample check "
                                  f"({rep.failures}/{rep.checked})")
    tried = 0

    def test(gamma):
        try:
            cls = classify(gamma)
        except ArithmeticError:
            return None
        if cls.is_biproximal and _on_boundary(domain, cls, band):
            return cls
        return None

    for k, (a, b) in enumerate(zip(phis, psis), start=1):
        gamma = a @ b.inverse()
        tried += 1
        cls = test(gamma)
        if cls is not None:
            return SearchResult(gamma, cls, f"phi_{k} psi_{k}^-1", tried)
    letters = []
    for i, g in enumerate(phis):
        letters += [(f"phi_{i + 1}", g), (f"phi_{i + 1}^-1", g.inverse())]
    for i, g in enumerate(psis):
        letters += [(f"psi_{i + 1}", g), (f"psi_{i + 1}^-1", g.inverse())]
    frontier = [("", None)]
    for _ in range(word_length):
        nxt = []
        for name, w in frontier:
            for lname, g in letters:
                gamma = g if w is None else w @ g
                word = lname if not name else f"{name} {lname}"
                tried += 1
                cls = test(gamma)
                if cls is not None:
                    return SearchResult(gamma, cls, word, tried)
                nxt.append((word, gamma))
        frontier = nxt
    raise ConvergenceError(f"no bi-proximal product among {tried} candidates")


# limit sets ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitSetSample:
    points: tuple
    multiplicities: tuple
    raw: np.ndarray
    words: tuple
    seed: int
    depth: int

    @property
    def cluster_count(self) -> int:
        return len(self.points)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "depth": self.depth,
            "clusters": [{"point": p.to_json(), "multiplicity": m}
                         for p, m in zip(self.points, self.multiplicities)],
            "accumulated": int(self.raw.shape[0]),
            "words": list(self.words),
        }

    def to_csv(self, field: Field) -> str:
        r = field.r
        n = self.raw.shape[1] if self.raw.size else 0
        head = ",".join(f"x{i}_{c}" for i in range(n) for c in range(r))
        lines = [head]
        for rep in self.raw:
            lines.append(",".join(repr(float(v)) for v in rep[:, :r].ravel()))
        return "\n".join(lines) + "\n"


def _project_to_boundary(domain: Domain, center: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Exit point of the real ray from the centre through w (within the K-line pencil)."""
    a = kinner(center, w)
    if float(np.sqrt((a ** 2).sum())) <= 1e-14:
        raise GeometryError("point is orthogonal to the domain centre")
    diff = w - qmul(center, a[None, :])
    u = qmul(diff, qinv(a)[None, :])
    t = float(np.sqrt((u ** 2).sum()))
    if t == 0.0:
        raise GeometryError("point coincides with the domain centre")
    u = u / t

    def h(s):
        return float(domain.defining_values((center + s * u)[None])[0])

    lo, hi = t, 2.0 * t
    while h(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e16:
            raise GeometryError("ray never leaves the domain")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if h(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    v = center + hi * u
    return v / float(np.sqrt((v ** 2).sum()))


def limit_set_sample(generators, domain: Domain, p: ProjPoint, depth: int = 40, seed: int = 0,
                     *, words: int = 256, threshold: float = 1e-8,
                     cluster_radius: float = 1e-3, check_samples: int | None = None) -> LimitSetSample:
    """Boundary accumulation points of random reduced words applied to p.

    Word lengths come from the geometric ladder depth, depth/2, depth/4, ...;
    an orbit point counts when its normalized defining value is within
    ``threshold`` of zero, and is then pushed to the boundary along the ray
    from the domain centre.
    """
    gens = [_as_map(g) for g in generators]
    if not gens:
        raise ValidationError("need at least one generator")
    for i, g in enumerate(gens):
        rep = automorphism_check(domain, g, check_samples, seed)
        if not rep.ok:
            raise ValidationError(f"generator {i} does not preserve the domain "
                                  f"({rep.failures}/{rep.checked} samples leave it)")
    depth = int(depth)
    if depth < 1:
        raise ValidationError("depth must be positive")
    letters = []
    for g in gens:
        letters.append(_unit_norm(g.matrix).data)
        letters.append(_unit_norm(g.matrix.inv()).data)
    ladder = sorted({max(1, depth >> k) for k in range(depth.bit_length())}, reverse=True)
    center = np.array(domain.center().rep)
    start = np.array(p.rep)
    used, raw = [], []
    for w in range(int(words)):
        rng = np.random.default_rng([int(seed), w])
        length = ladder[int(rng.integers(len(ladder)))]
        prev = -1
        v = start.copy()
        word = []
        for _ in range(length):
            choices = [c for c in range(len(letters)) if prev < 0 or c != (prev ^ 1)]
            c = choices[int(rng.integers(len(choices)))]
            v = qmul(letters[c], v[None, :, :]).sum(axis=1)
            v = v / float(np.sqrt((v ** 2).sum()))
            prev = c
            word.append(f"g{c // 2}" + ("^-1" if c % 2 else ""))
        if float(domain.defining_values(v[None])[0]) >= -threshold:
            raw.append(_project_to_boundary(domain, center, v))
            used.append(" ".join(word))
    pts, mult = [], []
    for rep in raw:
        q = ProjPoint(domain.field, rep)
        for i, c in enumerate(pts):
            if proj_distance(q, c) <= cluster_radius:
                mult[i] += 1
                break
        else:
            pts.append(q)
            mult.append(1)
    raw_arr = np.array(raw) if raw else np.zeros((0, domain.n, 4))
    return LimitSetSample(tuple(pts), tuple(mult), raw_arr, tuple(used), int(seed), depth)


# contraction ---------------------------------------------------------------------

@dataclass(frozen=True)
class ContractionReport:
    measured: int
    predicted: int
    samples: int


def contraction_check(domain: Domain, phi, radius: float = 0.05, samples: int = 1000,
                      seed: int = 0, max_steps: int = 10_000) -> ContractionReport:
    """Least m with phi^m(boundary minus U-) inside U+, next to the eigen-coefficient prediction.

    A sample with x+ coefficient a and remaining part b (orthogonal to x+)
    needs about log(b / (a r)) / log(gap_top) steps.
    """
    phi = _as_map(phi)
    cls = classify(phi)
    if not cls.is_biproximal:
        raise ValidationError("contraction needs a bi-proximal map")
    rng = np.random.default_rng(seed)
    pts = domain.boundary_samples(samples, rng)
    xm = np.array(cls.x_minus.rep)
    xp = np.array(cls.x_plus.rep)

    def dist(batch, x):
        ip = qmul(qconj(x)[None], batch).sum(axis=1)
        resid = batch - qmul(x[None], ip[:, None, :])
        return np.sqrt((resid ** 2).sum(axis=(1, 2)))

    pts = pts[dist(pts, xm) > radius]
    m = _unit_norm(phi.matrix).data
    steps = 0
    cur = pts
    while dist(cur, xp).max() > radius:
        steps += 1
        if steps > max_steps:
            raise ConvergenceError("boundary samples never reached the attracting neighbourhood")
        cur = qmul(m[None], cur[:, None, :, :]).sum(axis=2)
        cur /= np.sqrt((cur ** 2).sum(axis=(1, 2)))[:, None, None]
    # model: in an eigenbasis (x+, rest) the rest shrinks by 1/gap_top per step
    e = complex_embedding(phi.matrix)
    lead = vector_embedding(xp, phi.field)
    vals, vecs = np.linalg.eig(e)
    order = np.argsort(-np.abs(vals))
    basis = np.column_stack([lead] + [vecs[:, i] for i in order[1 if phi.field is not Field.H else 2:]])
    if phi.field is Field.H:
        basis = np.column_stack([lead, _partner(lead)] + list(basis[:, 1:].T))
    basis /= np.linalg.norm(basis, axis=0)
    emb = np.stack([vector_embedding(v, phi.field) for v in pts], axis=1)
    coef = np.linalg.solve(basis, emb)
    k = 2 if phi.field is Field.H else 1
    a = np.linalg.norm(coef[:k], axis=0)
    rest = basis[:, k:] @ coef[k:]
    top = basis[:, :k]
    rest = rest - top @ (top.conj().T @ rest)
    b = np.linalg.norm(rest, axis=0)
    need = np.log(np.maximum(b / (a * radius), 1.0)) / math.log(cls.gap_top)
    predicted = int(math.ceil(float(need.max())))
    return ContractionReport(steps, predicted, len(pts))


# ball automorphisms -------------------------------------------------------------------

def ball_boost(field, d: int, s: float) -> KMatrix:
    """The hyperbolic element fixing [1 : +-1 : 0 ...], translation length 2s."""
    field = Field.parse(field)
    n = d + 1
    data = np.zeros((n, n, 4))
    data[0, 0, 0] = data[1, 1, 0] = math.cosh(s)
    data[0, 1, 0] = data[1, 0, 0] = math.sinh(s)
    for i in range(2, n):
        data[i, i, 0] = 1.0
    return KMatrix(field, data)


def random_ball_automorphism(field, d: int, rng, max_radius: float = 0.9) -> KMatrix:
    """A random element of U_K(1, d): a unitary block times the move of a random point to 0."""
    field = Field.parse(field)
    z = random_scalars(field, rng, d)
    z *= max_radius * rng.random() ** (1.0 / (field.r * d)) / math.sqrt(qabs2(z).sum())
    v = np.vstack([np.array([[1.0, 0, 0, 0]]), z])
    iso = ball_isometry(ProjPoint(field, v))
    n = d + 1
    block = np.zeros((n, n, 4))
    u0 = random_scalars(field, rng)
    block[0, 0] = u0 / math.sqrt(qabs2(u0))
    block[1:, 1:] = random_unitary(field, d, rng).data
    return matmul(KMatrix(field, block), iso)


def random_biproximal_ball_map(field, d: int, rng, s_range=(0.3, 2.0)) -> ProjMap:
    """g boost_s g^{-1} with g random in U_K(1, d)."""
    g = random_ball_automorphism(field, d, rng)
    s = float(rng.uniform(*s_range))
    return ProjMap(matmul(matmul(g, ball_boost(field, d, s)), g.inv()))
