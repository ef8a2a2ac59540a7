"""The ten acceptance experiments, shared by the test suite and ``kproj verify``.

Each ``criterion_N`` returns a :class:`CriterionResult` with the measured
quantity next to the required one.  Seeds are fixed, so every run measures
the same numbers.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .domain import Region, make_ball, make_paraboloid, make_sec9, tangent_hyperplane
from .dynamics import (
    classify, extend_graph_function, orbit_rate, random_ball_automorphism,
    random_biproximal_ball_map, rank_one_limit, standard_form,
)
from .domain import dual_sample
from .hilbert_metric import ball_distance, ball_isometry, general_distance, pair_escape_profile
from .kmatrix import (
    KMatrix, conj_transpose, det_abs, eigen_lines, hermitian_congruence_normalize, kak_decompose,
    matmul, random_kmatrix, sigma_spectrum,
)
from .kscalar import Field, qabs2, qmul, random_scalars
from .moebius import (
    MoebiusMap, SpherePlane, apply_batch, cayley, generate_from_UV, halfspace_aut_membership,
    halfspace_samples, map_sphereplane,
)
from .projspace import DualPoint, ProjMap, ProjPoint, from_chart, proj_distance

__all__ = ["CriterionResult", "CRITERIA", "run_all", "uniform_ball_points"]

FIELDS = (Field.R, Field.C, Field.H)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict
    expected: dict
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        meas = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        exp = ", ".join(f"{k} {v}" for k, v in self.expected.items())
        return f"[{status}] criterion {self.number}: {self.title} | measured {meas} | required {exp}"

    def to_json(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "measured": self.measured, "expected": self.expected}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def uniform_ball_points(field, d: int, count: int, rng, rmax: float = 1.0) -> list:
    """Points [1 : z] with z uniform in the volume of the radius-rmax ball of K^d."""
    field = Field.parse(field)
    z = random_scalars(field, rng, (count, d))
    z /= np.sqrt(qabs2(z).sum(axis=1))[:, None, None]
    z *= (rmax * rng.random(count) ** (1.0 / (field.r * d)))[:, None, None]
    return [from_chart(field, zz) for zz in z]


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# 1 --------------------------------------------------------------------------------

@_timed
def criterion_1(seed: int = 0) -> CriterionResult:
    """Ball closed form log((1 + t)/(1 - t)) for x_0 and x_t."""
    t0 = time.perf_counter()
    worst = 0.0
    for field in FIELDS:
        for d in (1, 2, 3):
            x0 = from_chart(field, np.zeros((d, 4)))
            for t in (0.1, 0.5, 0.9, 0.99):
                z = np.zeros((d, 4))
                z[0, 0] = t
                val = ball_distance(x0, from_chart(field, z)).value
                worst = max(worst, abs(val - math.log((1 + t) / (1 - t))))
    elapsed = time.perf_counter() - t0
    return CriterionResult(1, "ball closed form", worst <= 1e-9 and elapsed < 1.0,
                           {"max_abs_error": worst, "runtime_s": elapsed},
                           {"max_abs_error": "<= 1e-9", "runtime_s": "< 1"}, 0.0)


# 2 --------------------------------------------------------------------------------

@_timed
def criterion_2(seed: int = 0) -> CriterionResult:
    """Sampled dual (10^4 certified functionals) plus ascent against the closed form."""
    t0 = time.perf_counter()
    field, d = Field.C, 2
    ball = make_ball(field, d)
    ds = dual_sample(ball, 10_000, seed=seed)
    rng = np.random.default_rng(seed + 1)
    ps = uniform_ball_points(field, d, 50, rng)
    qs = uniform_ball_points(field, d, 50, rng)
    err, over = 0.0, -math.inf
    for p, q in zip(ps, qs):
        exact = ball_distance(p, q).value
        approx = general_distance(ball, p, q, ds).value
        err = max(err, abs(approx - exact))
        over = max(over, approx - exact)
    elapsed = time.perf_counter() - t0
    ok = ds.count == 10_000 and err <= 1e-2 and over <= 1e-9 and elapsed < 30.0
    return CriterionResult(2, "dual-sup convergence", ok,
                           {"certified": ds.count, "max_abs_error": err, "max_overshoot": over,
                            "runtime_s": elapsed},
                           {"certified": "= 10000", "max_abs_error": "<= 1e-2",
                            "max_overshoot": "<= 1e-9", "runtime_s": "< 30"}, 0.0)


# 3 --------------------------------------------------------------------------------

@_timed
def criterion_3(seed: int = 0) -> CriterionResult:
    """Symmetry, triangle inequality and Q-unitary invariance on the ball."""
    rng = np.random.default_rng(seed + 3)
    sym, slack, inv = 0.0, math.inf, 0.0
    for field in FIELDS:
        d = 2
        pts = uniform_ball_points(field, d, 3000, rng)
        for k in range(1000):
            p, q, r = pts[3 * k: 3 * k + 3]
            pq = ball_distance(p, q).value
            qp = ball_distance(q, p).value
            qr = ball_distance(q, r).value
            pr = ball_distance(p, r).value
            sym = max(sym, abs(pq - qp))
            slack = min(slack, pq + qr - pr)
        for k in range(100):
            g = ProjMap(random_ball_automorphism(field, d, rng))
            p, q = pts[2 * k], pts[2 * k + 1]
            inv = max(inv, abs(ball_distance(g(p), g(q)).value - ball_distance(p, q).value))
    ok = sym <= 1e-10 and slack >= -1e-9 and inv <= 1e-9
    return CriterionResult(3, "metric axioms and invariance", ok,
                           {"symmetry": sym, "triangle_slack_min": slack, "invariance": inv},
                           {"symmetry": "<= 1e-10", "triangle_slack_min": ">= -1e-9",
                            "invariance": "<= 1e-9"}, 0.0)


# 4 --------------------------------------------------------------------------------

@_timed
def criterion_4(seed: int = 0) -> CriterionResult:
    """Orbit rate against sigma_d / sigma_{d+1}; rank-one limit image and kernel."""
    rng = np.random.default_rng(seed + 4)
    lo, hi, img_res, ker_res, count = math.inf, 0.0, 0.0, 0.0, 0
    for field in FIELDS:
        ball = make_ball(field, 2)
        for _ in range(50):
            phi = random_biproximal_ball_map(field, 2, rng)
            cls = classify(phi)
            if not cls.is_biproximal:
                return CriterionResult(4, "proximal dynamics", False,
                                       {"non_biproximal_sample": cls.variant.value},
                                       {"all_biproximal": True}, 0.0)
            p = ProjPoint(field, ball.interior_samples(1, rng)[0])
            ratio = orbit_rate(phi, p, cls.x_plus) * cls.gap_top
            lo, hi = min(lo, ratio), max(hi, ratio)
            lim = rank_one_limit(phi, cls)
            m = lim.end.matrix
            for v in random_scalars(field, rng, (5, 3)):
                img_res = max(img_res, proj_distance(ProjPoint(field, m.apply(v)), cls.x_plus))
            for _, w in eigen_lines(phi.matrix)[1:]:
                w = w / np.sqrt((w ** 2).sum())
                ker_res = max(ker_res, float(np.sqrt((m.apply(w) ** 2).sum())))
            count += 1
    ok = lo >= 0.5 and hi <= 2.0 and img_res <= 1e-8 and ker_res <= 1e-8
    return CriterionResult(4, "proximal dynamics", ok,
                           {"maps": count, "rate_ratio_min": lo, "rate_ratio_max": hi,
                            "image_residual": img_res, "kernel_residual": ker_res},
                           {"rate_ratio": "in [0.5, 2]", "image_residual": "<= 1e-8",
                            "kernel_residual": "<= 1e-8"}, 0.0)


# 5 --------------------------------------------------------------------------------

@_timed
def criterion_5(seed: int = 0) -> CriterionResult:
    """Conjugate pairing, D multiplicativity and KAK over H."""
    rng = np.random.default_rng(seed + 5)
    pair, dmul, kak = 0.0, 0.0, 0.0
    for _ in range(1000):
        a = random_kmatrix(Field.H, 3, 3, rng)
        b = random_kmatrix(Field.H, 3, 3, rng)
        pair = max(pair, sigma_spectrum(a).pair_residual)
        da, db, dab = det_abs(a), det_abs(b), det_abs(matmul(a, b))
        dmul = max(dmul, abs(dab - da * db) / (da * db))
        f = kak_decompose(a)
        kak = max(kak, (f.reconstruct() - a).norm_fro() / a.norm_fro())
    ok = pair <= 1e-8 and dmul <= 1e-10 and kak <= 1e-9
    return CriterionResult(5, "spectral machinery over H", ok,
                           {"pair_residual": pair, "det_multiplicativity": dmul,
                            "kak_reconstruction": kak},
                           {"pair_residual": "<= 1e-8", "det_multiplicativity": "<= 1e-10",
                            "kak_reconstruction": "<= 1e-9"}, 0.0)


# 6 --------------------------------------------------------------------------------

def _random_pd(field, n, rng):
    m = random_kmatrix(field, n, n, rng)
    a = matmul(conj_transpose(m), m) + KMatrix.identity(field, n) * 0.1
    return (a + conj_transpose(a)) * 0.5


def paraboloid_standard_form(field, d: int = 3, t: float = 1.0):
    par = make_paraboloid(field, d)
    phi = ProjMap(KMatrix.diag(field, [math.exp(-t), math.exp(t)] + [1.0] * (d - 1)))
    return standard_form(par, phi)


def real_hessian(F, m: int, field, h: float) -> np.ndarray:
    """Second-difference real Hessian at 0 of F on K^m = R^{rm}."""
    r = field.r
    dims = [(i, c) for i in range(m) for c in range(r)]

    def unit(i, c):
        z = np.zeros((m, 4))
        z[i, c] = 1.0
        return z

    out = np.zeros((len(dims), len(dims)))
    for a, (i, c) in enumerate(dims):
        for b, (j, e) in enumerate(dims):
            ea, eb = unit(i, c), unit(j, e)
            out[a, b] = (F(h * (ea + eb)) - F(h * (ea - eb)) - F(h * (eb - ea)) + F(-h * (ea + eb))) / (4 * h * h)
    return out


@_timed
def criterion_6(seed: int = 0) -> CriterionResult:
    """Congruence normalization; homogeneity and Hessian of the paraboloid's F."""
    rng = np.random.default_rng(seed + 6)
    cong, homog, hess = 0.0, 0.0, 0.0
    for field in FIELDS:
        for _ in range(100):
            n = int(rng.integers(2, 6))
            a = _random_pd(field, n, rng)
            g = hermitian_congruence_normalize(a)
            res = matmul(matmul(conj_transpose(g), a), g) - KMatrix.identity(field, n)
            cong = max(cong, float(np.abs(res.data).max()))
        sf = paraboloid_standard_form(field, 3)
        x0 = np.zeros(4)

        def F(z):
            return extend_graph_function(sf, x0, z)

        for _ in range(20):
            z = random_scalars(field, rng, 2)
            z *= rng.uniform(0.05, 1.0) / math.sqrt(qabs2(z).sum())
            w = random_scalars(field, rng)
            w *= rng.uniform(0.2, 3.0) / math.sqrt(qabs2(w))
            lhs = F(qmul(w[None], z))
            rhs = float(qabs2(w)) * F(z)
            homog = max(homog, abs(lhs - rhs) / abs(rhs))
        H = real_hessian(F, 2, field, 1e-3)
        hess = max(hess, float(np.abs(H - 2.0 * np.eye(H.shape[0])).max()) / 2.0)
    ok = cong <= 1e-10 and homog <= 1e-9 and hess <= 1e-4
    return CriterionResult(6, "normal form and Hessian", ok,
                           {"congruence_residual": cong, "homogeneity": homog,
                            "hessian_vs_2Id": hess},
                           {"congruence_residual": "<= 1e-10", "homogeneity": "<= 1e-9",
                            "hessian_vs_2Id": "<= 1e-4"}, 0.0)


# 7 --------------------------------------------------------------------------------

@_timed
def criterion_7(seed: int = 0) -> CriterionResult:
    """Sphere transport, Cayley image of the boundary, U/V words."""
    rng = np.random.default_rng(seed + 7)
    holdout = 0.0
    for k in range(50):
        m = MoebiusMap(random_kmatrix(Field.H, 2, 2, rng))
        S = SpherePlane.sphere(Field.H, random_scalars(Field.H, rng), float(rng.uniform(0.2, 3.0)))
        img = map_sphereplane(m, S, seed=seed + k, tol=math.inf)
        check = apply_batch(m, S.sample(50, rng))
        holdout = max(holdout, float(img.residual(check).max()))
    cay = 0.0
    for field in FIELDS:
        z = halfspace_samples(field, 1000, rng, boundary=True)
        cay = max(cay, float(np.abs(np.sqrt(qabs2(apply_batch(cayley(field), z))) - 1.0).max()))
    words, fails = 0, 0
    for field in (Field.C, Field.H):
        for _ in range(20):
            word = []
            for _ in range(int(rng.integers(1, 7))):
                w = random_scalars(field, rng)
                w[0] = 0.0
                word.append(("U" if rng.random() < 0.5 else "V", w))
            rep = halfspace_aut_membership(generate_from_UV(word, field), samples=1000, seed=seed)
            words += 1
            fails += 0 if rep.member else 1
    ok = holdout <= 1e-8 and cay <= 1e-10 and fails == 0
    return CriterionResult(7, "Moebius layer", ok,
                           {"holdout_residual": holdout, "cayley_sphere_error": cay,
                            "uv_words": words, "uv_failures": fails},
                           {"holdout_residual": "<= 1e-8", "cayley_sphere_error": "<= 1e-10",
                            "uv_failures": "= 0"}, 0.0)


# 8 --------------------------------------------------------------------------------

def example_boundary_height(domain, zp) -> float:
    """Root of the defining function along the distinguished component of z_1."""
    axis = np.zeros(4)
    axis[1 if domain.convention == "imag" else 0] = 1.0
    n = domain.n

    def h(t):
        v = np.zeros((n, 4))
        v[0, 0] = 1.0
        v[1] = t * axis
        v[2:] = zp
        return float(domain.defining_values(v[None])[0])

    hi = 1.0
    while h(hi) >= 0.0:
        hi *= 2.0
    return brentq(h, -1.0, hi, xtol=1e-15, rtol=1e-15)


@_timed
def criterion_8(seed: int = 0) -> CriterionResult:
    """Symmetries, distinct tangents and the crease of the C^{1,1} example."""
    rng = np.random.default_rng(seed + 8)
    inv_fail, tang, jump = 0, math.inf, math.inf
    for field in (Field.C, Field.H):
        dom = make_sec9(field, 3)
        pts = np.concatenate([dom.interior_samples(1000, rng), dom.boundary_samples(200, rng)])
        pts = np.concatenate([pts, random_scalars(field, rng, (1000, dom.n))])
        vals = dom.defining_values(pts)
        keep = np.abs(vals) > 1e-7
        pts, inside = pts[keep], vals[keep] < 0
        for g in (dom.symmetry_T(), dom.scaling(0.7), dom.scaling(-1.3)):
            img = qmul(g.matrix.data[None], pts[:, None, :, :]).sum(axis=2)
            inv_fail += int(((dom.defining_values(img) < 0) != inside).sum())
        x0, x1 = dom.distinguished_points()
        t0 = tangent_hyperplane(dom, x0).hyperplane
        t1 = tangent_hyperplane(dom, x1).hyperplane
        tang = min(tang, proj_distance(t0, t1))

        def F(theta):
            zp = np.zeros((2, 4))
            zp[0, 0], zp[1, 0] = math.cos(theta), math.sin(theta)
            return example_boundary_height(dom, zp)

        step = 1e-3

        def second(theta):
            return (F(theta + step) - 2 * F(theta) + F(theta - step)) / step ** 2

        jump = min(jump, abs(second(math.pi / 4 - 0.05) - second(math.pi / 4 + 0.05)))
    ok = inv_fail == 0 and tang >= 0.1 and jump >= 0.5
    return CriterionResult(8, "C^{1,1} example", ok,
                           {"invariance_failures": inv_fail, "tangent_distance": tang,
                            "second_difference_jump": jump},
                           {"invariance_failures": "= 0", "tangent_distance": ">= 0.1",
                            "second_difference_jump": ">= 0.5"}, 0.0)


# 9 --------------------------------------------------------------------------------

@_timed
def criterion_9(seed: int = 0) -> CriterionResult:
    """Escape to distinct boundary points, and collapse when C(p_n, q_n) -> 0."""
    rng = np.random.default_rng(seed + 9)
    escape_min, collapse_max, violations = math.inf, 0.0, 0
    schedule = [1.0 - 2.0 ** (-k) for k in range(1, 25)]
    for field in FIELDS:
        d = 2
        ball = make_ball(field, d)
        for _ in range(5):
            a = random_scalars(field, rng, d)
            b = random_scalars(field, rng, d)
            a /= math.sqrt(qabs2(a).sum())
            b /= math.sqrt(qabs2(b).sum())
            ps = [from_chart(field, r * a) for r in schedule]
            qs = [from_chart(field, r * b) for r in schedule]
            prof = pair_escape_profile(ball, ps, qs, limit_p=from_chart(field, a),
                                       limit_q=from_chart(field, b))
            escape_min = min(escape_min, prof.values[-1])
            # q_n at distance 1/n from p_n
            qs2 = []
            for k, p in enumerate(ps, start=1):
                iso_inv = ball_isometry(p).inv()
                z = random_scalars(field, rng, d)
                z *= math.tanh(0.5 / k) / math.sqrt(qabs2(z).sum())
                qs2.append(ProjPoint(field, iso_inv.apply(from_chart(field, z).rep)))
            prof2 = pair_escape_profile(ball, ps, qs2, limit_p=from_chart(field, a),
                                        limit_q=qs2[-1])
            collapse_max = max(collapse_max, proj_distance(ps[-1], qs2[-1]))
            violations += prof2.violations
    ok = escape_min > 20.0 and collapse_max <= 1e-3 and violations == 0
    return CriterionResult(9, "boundary asymptotics", ok,
                           {"escape_final_min": escape_min, "collapse_distance": collapse_max,
                            "vanishing_violations": violations},
                           {"escape_final_min": "> 20", "collapse_distance": "<= 1e-3",
                            "vanishing_violations": "= 0"}, 0.0)


# 10 -------------------------------------------------------------------------------

DETERMINISM_COMMANDS = [
    ["dist", "--field", "c", "--dim", "2", "--p", "[[1,0],[0,0],[0,0]]",
     "--q", "[[1,0],[0.5,0],[0,0]]"],
    ["dist", "--field", "h", "--dim", "2", "--samples", "2000", "--seed", "5", "--sampled"],
    ["classify", "--field", "r", "--matrix", "[[2,0,0],[0,1,0],[0,0,0.5]]"],
    ["iterate", "--field", "r", "--matrix", "[[2,0,0],[0,1,0],[0,0,0.5]]",
     "--point", "[1,1,1]", "--steps", "10"],
    ["standard-form", "--domain", '{"kind": "ball", "field": "c", "dim": 2}',
     "--matrix", "[[[1.5430806348152437,0],[1.1752011936438014,0],[0,0]],"
                 "[[1.1752011936438014,0],[1.5430806348152437,0],[0,0]],[[0,0],[0,0],[1,0]]]"],
    ["limit-set", "--domain", '{"kind": "ball", "field": "c", "dim": 2}', "--random-generators", "2",
     "--depth", "24", "--seed", "11", "--words", "64"],
    ["dual", "--domain", '{"kind": "ball", "field": "h", "dim": 2}', "--samples", "300", "--seed", "3"],
    ["moebius", "map-sphere", "--field", "h", "--random", "--seed", "4"],
]


@_timed
def criterion_10(seed: int = 0) -> CriterionResult:
    """Every seeded command prints the same bytes twice."""
    from . import cli

    mismatched = []
    for argv in DETERMINISM_COMMANDS:
        outs = []
        for _ in range(2):
            buf = io.StringIO()
            code = cli.main(argv, stdout=buf)
            outs.append((code, buf.getvalue()))
        if outs[0] != outs[1] or outs[0][0] != 0:
            mismatched.append(" ".join(argv[:1]) + f" (exit {outs[0][0]})")
    ok = not mismatched
    return CriterionResult(10, "determinism", ok,
                           {"commands": len(DETERMINISM_COMMANDS), "mismatched": len(mismatched),
                            "failures": "; ".join(mismatched) or "none"},
                           {"mismatched": "= 0"}, 0.0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def run_all(seed: int = 0, only=None) -> list:
    out = []
    for k, fn in enumerate(CRITERIA, start=1):
        if only and k not in only:
            continue
        out.append(fn(seed))
    return out
