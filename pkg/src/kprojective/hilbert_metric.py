"""The dual-set metric C(p, q) = sup log |f(p) g(q) / (f(q) g(p))| over f, g in the dual.

On the ball the value has a closed form obtained by moving p to the origin
with an element of U_K(1, d) and rotating q onto the first axis.  On other
domains a finite certified dual gives a lower bound; when the domain has a
known map onto the ball, the bound is refined by local ascent over the
exact dual and becomes exact up to the ascent tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import minimize

from .config import DEFAULTS
from .domain import Ball, BallDual, Domain, DualSample, Region, TransformedDomain, tangent_hyperplane
from .errors import CertificationError, DomainError, ValidationError
from .kmatrix import KMatrix, conj_transpose, gram_schmidt
from .kscalar import kinner, qabs2, qconj, qinv, qmul
from .projspace import DualPoint, ProjMap, ProjPoint, proj_distance

__all__ = [
    "DistanceResult", "InvarianceReport", "EscapeProfile",
    "ball_distance", "ball_isometry", "general_distance", "invariance_check",
    "transport_dual", "pair_escape_profile", "witness_value",
]


@dataclass(frozen=True)
class DistanceResult:
    value: float
    kind: str  # "exact" or "lower_bound"
    witnesses: tuple  # (f, g) DualPoints
    details: dict = dc_field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "kind": self.kind,
            "witnesses": [w.to_json() for w in self.witnesses],
            "details": self.details,
        }


def witness_value(f: DualPoint, g: DualPoint, p: ProjPoint, q: ProjPoint) -> float:
    """log |f(p) g(q)| - log |f(q) g(p)| on the canonical representatives."""
    vals = [float(np.sqrt(qabs2(kinner(a.rep, b.rep)))) for a, b in ((f, p), (g, q), (f, q), (g, p))]
    if min(vals) < DEFAULTS["log_floor"]:
        raise CertificationError("a witness functional vanishes at one of the points")
    return math.log(vals[0]) + math.log(vals[1]) - math.log(vals[2]) - math.log(vals[3])


# closed form on the ball -------------------------------------------------------

def _q_form(field, n):
    return KMatrix.diag(field, [-1.0] + [1.0] * (n - 1))


def ball_isometry(p: ProjPoint) -> KMatrix:
    """An element of U_K(1, d) sending p to [1 : 0 : ... : 0].

    Its inverse has columns e_0 ~ p and a Q-orthonormal completion, built by
    Gram-Schmidt against Q = diag(-1, 1, ..., 1).
    """
    n = p.n
    q = _q_form(p.field, n)
    cols = [np.array(p.rep)]
    for i in range(1, n):
        e = np.zeros((n, 4))
        e[i, 0] = 1.0
        cols.append(e)
    basis = gram_schmidt(cols, form=q)
    e = KMatrix(p.field, np.stack(basis, axis=1))
    # E* Q E = Q, hence E^{-1} = Q E* Q
    return q @ conj_transpose(e) @ q


def _first_axis_rotation(z: np.ndarray, field) -> KMatrix:
    """A K-unitary U with U z = |z| e_1 (z a nonzero (d, 4) vector)."""
    d = z.shape[0]
    cols = [z / np.sqrt((z ** 2).sum())]
    for i in range(d):
        e = np.zeros((d, 4))
        e[i, 0] = 1.0
        cols.append(e)
    basis = []
    for c in cols:
        w = c.copy()
        for b in basis:
            w = w - qmul(b, kinner(b, w)[None, :])
        nw = float(np.sqrt((w ** 2).sum()))
        if nw > 1e-8:
            basis.append(w / nw)
        if len(basis) == d:
            break
    return conj_transpose(KMatrix(field, np.stack(basis, axis=1)))


def _ball_t(p: ProjPoint, q: ProjPoint):
    """(t, 1 - t^2) for the pair, free of cancellation near the sphere.

    With chart points z, w and c = <z, w>/|z|^2, w = z c + w_perp:
    t^2 |1 - <z, w>|^2 = |z|^2 |1 - c|^2 + (1 - |z|^2) |w_perp|^2, where
    1 - c = <z, z - w>/|z|^2, and 1 - t^2 = (1 - |z|^2)(1 - |w|^2)/|1 - <z, w>|^2.
    The transported coordinate of q under the isometry carries the same t but
    loses all digits once 1 - |z| approaches machine precision.
    """
    vp, vq = np.array(p.rep), np.array(q.rep)
    if qabs2(vp[1:]).sum() < qabs2(vq[1:]).sum():
        vp, vq = vq, vp  # the formula divides by |z|^2; t is symmetric
    z = qmul(vp[1:], qinv(vp[0])[None, :])
    w = qmul(vq[1:], qinv(vq[0])[None, :])
    # 1 - |z|^2 = (|v0|^2 - |v'|^2) / |v0|^2 straight from the representative
    sz = float(qabs2(vp[0]) - qabs2(vp[1:]).sum()) / float(qabs2(vp[0]))
    sw = float(qabs2(vq[0]) - qabs2(vq[1:]).sum()) / float(qabs2(vq[0]))
    diff = z - w
    zz = float(qabs2(z).sum())
    zd = kinner(z, diff)
    denom_c = np.zeros(4)
    denom_c[0] = sz
    denom = float(qabs2(denom_c + zd))
    if zz == 0.0:
        num = float(qabs2(w).sum())
    else:
        one_minus_c = zd / zz
        w_perp = qmul(z, one_minus_c[None, :]) - diff
        num = zz * float(qabs2(one_minus_c)) + sz * float(qabs2(w_perp).sum())
    t = min(math.sqrt(num / denom), 1.0 - 1e-16)
    return t, min(1.0, sz * sw / denom)


def ball_distance(p: ProjPoint, q: ProjPoint) -> DistanceResult:
    """Exact C_B(p, q) = log((1 + t) / (1 - t)) with q moved to [1 : t : 0 ...]."""
    if p.field is not q.field or p.n != q.n:
        raise ValidationError("points live in different spaces")
    ball = Ball(p.field, p.dim)
    for pt in (p, q):
        if ball.contains(pt) is not Region.INSIDE:
            raise DomainError("ball distance needs points strictly inside the ball")
    n = p.n
    phi = ball_isometry(p)
    qq = phi.apply(q.rep)
    z = qmul(qq[1:], qinv(qq[0])[None, :])
    t_iso = float(np.sqrt(qabs2(z).sum()))
    if t_iso > 0.0:
        rot = np.zeros((n, n, 4))
        rot[0, 0, 0] = 1.0
        rot[1:, 1:] = _first_axis_rotation(z, p.field).data
        psi = KMatrix(p.field, rot) @ phi
    else:
        psi = phi
    t, one_minus_t2 = _ball_t(p, q)
    value = 2.0 * math.log1p(t) - math.log(one_minus_t2)
    f0 = np.zeros((n, 4))
    g0 = np.zeros((n, 4))
    f0[0, 0], f0[1, 0] = 1.0, -1.0
    g0[0, 0], g0[1, 0] = 1.0, 1.0
    psi_h = conj_transpose(psi)
    f = DualPoint(p.field, psi_h.apply(f0))
    g = DualPoint(p.field, psi_h.apply(g0))
    return DistanceResult(value, "exact", (f, g), {"t": t, "t_isometry": t_iso})


# general domains ------------------------------------------------------------

def _abs_pair(fs, rep):
    return np.sqrt(qabs2(kinner(fs, rep[None])))


def _ball_param_objective(u, a, b):
    """log|<(1,u), a>| - log|<(1,u), b>|."""
    fa = a[0] + kinner(u, a[1:])
    fb = b[0] + kinner(u, b[1:])
    ma = float(qabs2(fa))
    mb = float(qabs2(fb))
    if ma <= 0.0 or mb <= 0.0:
        return -np.inf
    return 0.5 * (math.log(ma) - math.log(mb))


def _objective_and_grad(u, a, b):
    fa = a[0] + kinner(u, a[1:])
    fb = b[0] + kinner(u, b[1:])
    ma, mb = float(qabs2(fa)), float(qabs2(fb))
    # grad_u log|a0 + <u, a'>| = a' conj(A) / |A|^2 in real coordinates
    ga = qmul(a[1:], qconj(fa)[None, :]) / ma
    gb = qmul(b[1:], qconj(fb)[None, :]) / mb
    return 0.5 * (math.log(ma) - math.log(mb)), ga - gb


def _ascend(u, a, b, field, max_iter: int = 500):
    """Local ascent of the objective on the sphere |u| = 1.

    The supremum over the closed dual ball is attained on its boundary, so
    the search runs over u = w / |w| with BFGS on the real coordinates of w.
    """
    r = field.r
    shape = u.shape
    nrm = math.sqrt(float((u ** 2).sum()))
    if nrm == 0.0:
        u = np.zeros(shape)
        u[0, 0], nrm = 1.0, 1.0
    w0 = (u / nrm)[:, :r].ravel()

    def unpack(w):
        full = np.zeros(shape)
        full[:, :r] = w.reshape(shape[0], r)
        return full

    def fun(w):
        wf = unpack(w)
        nw = math.sqrt(float((wf ** 2).sum()))
        uu = wf / nw
        val, g = _objective_and_grad(uu, a, b)
        g = g[:, :r].ravel()
        uv = uu[:, :r].ravel()
        g = (g - uv * float(g @ uv)) / nw
        return -val, -g

    res = minimize(fun, w0, jac=True, method="BFGS", options={"gtol": DEFAULTS["ascent_gtol"], "maxiter": max_iter})
    wf = unpack(res.x)
    uu = wf / math.sqrt(float((wf ** 2).sum()))
    _, g = fun(res.x)
    converged = bool(res.success) or float(np.abs(g).max()) <= DEFAULTS["ascent_converged"]
    return uu, _ball_param_objective(uu, a, b), converged


def _to_param(f_ball):
    """u with (1, u) ~ f for a functional in ball coordinates."""
    f0 = f_ball[0]
    u = qmul(f_ball[1:], qinv(f0)[None, :])
    nrm = math.sqrt(float((u ** 2).sum()))
    return u / nrm if nrm > 1.0 else u


def general_distance(domain: Domain, p: ProjPoint, q: ProjPoint, dual=None, *,
                     ascent: bool = True, seed: int = 0, extreme_samples: int = 256) -> DistanceResult:
    """max over the dual of log |f(p) g(q) / (f(q) g(p))|.

    ``dual`` is a :class:`DualSample`, a :class:`BallDual` (exact dual of a
    ball), or None for domains with a known map onto the ball.
    """
    for pt in (p, q):
        if domain.contains(pt) is not Region.INSIDE:
            raise DomainError("distance needs points inside the domain")
    psi = domain.to_ball()
    if isinstance(dual, DualSample):
        fs = dual.array
        source = "sample"
    elif isinstance(dual, BallDual) or dual is None:
        if psi is None:
            raise ValidationError("an exact dual needs a domain with a known map onto the ball")
        rng = np.random.default_rng(seed)
        bd = BallDual(domain.field, domain.dim)
        fb = bd.sample(extreme_samples, rng, extreme=True)
        ph = conj_transpose(psi.matrix).data
        fs = qmul(ph[None], fb[:, None, :, :]).sum(axis=2)
        source = "exact"
    else:
        raise ValidationError("unsupported dual description")
    if fs.shape[0] == 0:
        raise ValidationError("empty dual")
    ap, aq = _abs_pair(fs, p.rep), _abs_pair(fs, q.rep)
    if min(ap.min(), aq.min()) < DEFAULTS["log_floor"]:
        raise CertificationError("a dual functional vanishes at an interior point")
    lp, lq = np.log(ap), np.log(aq)
    i = int(np.argmax(lp - lq))
    j = int(np.argmax(lq - lp))
    f = DualPoint(domain.field, fs[i])
    g = DualPoint(domain.field, fs[j])
    kind = "lower_bound"
    details = {"dual_size": int(fs.shape[0]), "dual": source,
               "discrete_value": float((lp[i] - lq[i]) + (lq[j] - lp[j]))}
    if ascent and psi is not None:
        m = psi.matrix
        a, b = m.apply(p.rep), m.apply(q.rep)
        inv_h = conj_transpose(m.inv())
        uf = _to_param(inv_h.apply(f.rep))
        ug = _to_param(inv_h.apply(g.rep))
        uf, _, ok_f = _ascend(uf, a, b, domain.field)
        ug, _, ok_g = _ascend(ug, b, a, domain.field)
        mh = conj_transpose(m)
        e0 = np.array([[1.0, 0.0, 0.0, 0.0]])
        f_new = DualPoint(domain.field, mh.apply(np.vstack([e0, uf])))
        g_new = DualPoint(domain.field, mh.apply(np.vstack([e0, ug])))
        if witness_value(f_new, g_new, p, q) >= witness_value(f, g, p, q):
            f, g = f_new, g_new
        if ok_f and ok_g:
            kind = "exact"
        details["ascent_converged"] = bool(ok_f and ok_g)
    value = max(0.0, witness_value(f, g, p, q))
    return DistanceResult(value, kind, (f, g), details)


# invariance ---------------------------------------------------------------------

def transport_dual(dual: DualSample, phi: ProjMap, domain: Domain | None = None) -> DualSample:
    """The dual of phi(Omega): f -> f o phi^{-1}, i.e. conj(phi^{-1})^T f."""
    new_domain = domain if domain is not None else TransformedDomain(dual.domain, phi)
    m = conj_transpose(phi.inverse().matrix).data
    arr = qmul(m[None], dual.array[:, None, :, :]).sum(axis=2)
    arr /= np.sqrt(np.einsum("kij,kij->k", arr, arr))[:, None, None]
    return DualSample(new_domain, arr, dual.seed, dual.requested, dual.exact, dual.complete,
                      list(dual.warnings))


@dataclass(frozen=True)
class InvarianceReport:
    value: float
    transported_value: float
    difference: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.difference <= self.tolerance


def invariance_check(domain: Domain, phi: ProjMap, p: ProjPoint, q: ProjPoint,
                     dual: DualSample, tol: float = 1e-10) -> InvarianceReport:
    """Compare C_Omega(p, q) with C_{phi Omega}(phi p, phi q) over a transported dual."""
    image = TransformedDomain(domain, phi)
    moved = transport_dual(dual, phi, image)
    v1 = general_distance(domain, p, q, dual, ascent=False).value
    v2 = general_distance(image, phi(p), phi(q), moved, ascent=False).value
    return InvarianceReport(v1, v2, abs(v1 - v2), tol)


# boundary behaviour -----------------------------------------------------------------

@dataclass
class EscapeProfile:
    values: list
    bounded: bool
    limit_p: ProjPoint
    limit_q: ProjPoint
    limit_distance: float
    vanishing_checks: list = dc_field(default_factory=list)
    violations: int = 0

    def to_json(self) -> dict:
        return {
            "values": self.values, "bounded": self.bounded,
            "limit_p": self.limit_p.to_json(), "limit_q": self.limit_q.to_json(),
            "limit_distance": self.limit_distance,
            "vanishing_checks": self.vanishing_checks, "violations": self.violations,
        }


def _distance(domain, p, q, dual):
    if isinstance(domain, Ball) and dual is None:
        return ball_distance(p, q).value
    return general_distance(domain, p, q, dual).value


def pair_escape_profile(domain: Domain, ps, qs, dual=None, *, limit_p: ProjPoint | None = None,
                        limit_q: ProjPoint | None = None, bound: float = 20.0,
                        tol: float = 1e-6) -> EscapeProfile:
    """C(p_n, q_n) along two sequences, plus the vanishing test at the limits.

    The sequence counts as bounded when every value stays below ``bound``.
    For a bounded sequence every functional vanishing at the limit x of p_n
    (the tangent functional at x, and dual-sample members with |f(x)| <= tol)
    should vanish at the limit y of q_n; larger values are violations.
    """
    if len(ps) != len(qs) or not ps:
        raise ValidationError("need two nonempty sequences of equal length")
    values = [_distance(domain, p, q, dual) for p, q in zip(ps, qs)]
    x = limit_p if limit_p is not None else ps[-1]
    y = limit_q if limit_q is not None else qs[-1]
    prof = EscapeProfile(values, max(values) < bound, x, y, proj_distance(x, y))
    if not prof.bounded:
        return prof
    funcs = []
    if domain.contains(x, eps=tol) is Region.BOUNDARY:
        try:
            funcs.append(("tangent", tangent_hyperplane(domain, x, tol).hyperplane))
        except Exception:  # singular boundary point: nothing to test
            pass
    if isinstance(dual, DualSample):
        vals = _abs_pair(dual.array, x.rep)
        for k in np.flatnonzero(vals <= tol):
            funcs.append((f"dual[{int(k)}]", DualPoint(domain.field, dual.array[k])))
    for name, f in funcs:
        r = float(np.sqrt(qabs2(kinner(f.rep, y.rep))))
        prof.vanishing_checks.append({"functional": name, "value_at_y": r})
        if r > tol:
            prof.violations += 1
    return prof
