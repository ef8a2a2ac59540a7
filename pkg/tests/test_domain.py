import math

import numpy as np
import pytest

from kprojective.domain import (
    Ball, Region, TransformedDomain, boundary_distance, certify, domain_from_json, dual_exact_ball,
    dual_sample, make_ball, make_halfspace, make_paraboloid, make_sec9, tangent_hyperplane,
)
from kprojective.dynamics import random_ball_automorphism
from kprojective.errors import DomainError, ValidationError
from kprojective.kmatrix import KMatrix, conj_transpose
from kprojective.kscalar import Field, kinner, qabs2, qmul, random_scalars
from kprojective.moebius import apply_batch, cayley, halfspace_samples
from kprojective.projspace import DualPoint, ProjMap, ProjPoint, from_chart, proj_distance, vanishes

FIELDS = [Field.R, Field.C, Field.H]


def chart(field, *z):
    arr = np.zeros((len(z), 4))
    arr[:, 0] = z
    return from_chart(field, arr)


def test_ball_regions(field):
    b = make_ball(field, 2)
    assert b.contains(chart(field, 0.0, 0.0)) is Region.INSIDE
    assert b.contains(chart(field, 0.5, 0.0)) is Region.INSIDE
    assert b.contains(chart(field, 1.0, 0.0)) is Region.BOUNDARY
    inf = np.zeros((3, 4))
    inf[1, 0] = 1.0
    assert b.contains(ProjPoint(field, inf)) is Region.OUTSIDE


def test_ball_closed_under_q_unitaries(field, rng):
    b = make_ball(field, 2)
    pts = b.interior_samples(500, rng)
    for _ in range(10):
        g = random_ball_automorphism(field, 2, rng).data
        img = qmul(g[None], pts[:, None]).sum(axis=2)
        assert (b.defining_values(img) < 0).all()


def test_paraboloid_and_halfspace(field, rng):
    par = make_paraboloid(field, 2)
    assert par.contains(chart(field, 1.0, 0.0)) is Region.INSIDE
    assert par.contains(chart(field, 1.0, 2.0)) is Region.OUTSIDE
    z = halfspace_samples(field, 200, rng, boundary=True)
    img = apply_batch(cayley(field), z)
    assert np.abs(np.sqrt(qabs2(img)) - 1.0).max() <= 1e-10
    hs = make_halfspace(field)
    assert hs.contains(chart(field, 1.0)) is Region.INSIDE
    assert hs.contains(chart(field, -1.0)) is Region.OUTSIDE


@pytest.mark.parametrize("field", [Field.C, Field.H], ids=["c", "h"])
def test_sec9_symmetries(field, rng):
    dom = make_sec9(field, 3)
    pts = dom.interior_samples(1000, rng)
    for g in (dom.symmetry_T(), dom.scaling(0.4), dom.scaling(-2.0)):
        img = qmul(g.matrix.data[None], pts[:, None]).sum(axis=2)
        assert (dom.defining_values(img) < 0).all()


def test_sec9_constant_fhat_is_quadric(rng):
    dom = domain_from_json({"kind": "sec9", "field": "c", "dim": 2,
                            "fhat": {"type": "constant", "value": 1.0}})
    z = random_scalars(Field.C, rng, (200, 2))
    v = np.concatenate([np.tile([[[1.0, 0, 0, 0]]], (200, 1, 1)), z], axis=1)
    expected = qabs2(z[:, 1]) - z[:, 0, 1]
    np.testing.assert_allclose(dom.raw_values(v), expected, atol=1e-12)


def test_sec9_real_field_needs_real_convention():
    with pytest.raises(ValidationError):
        make_sec9(Field.R, 3)
    assert make_sec9(Field.R, 3, convention="real").convention == "real"


def test_tangent_on_ball():
    b = make_ball(Field.R, 2)
    x = ProjPoint(Field.R, [1.0, 1.0, 0.0])
    t = tangent_hyperplane(b, x)
    assert vanishes(t.hyperplane, x)
    # the tangent functional of the sphere at (1, 0) is z_1 = 1, i.e. [-1 : 1 : 0]
    assert proj_distance(t.hyperplane, DualPoint(Field.R, [-1.0, 1.0, 0.0])) <= 1e-12
    with pytest.raises(DomainError):
        tangent_hyperplane(b, chart(Field.R, 0.2, 0.0))


def test_tangent_on_paraboloid_at_origin(field):
    par = make_paraboloid(field, 2)
    t = tangent_hyperplane(par, chart(field, 0.0, 0.0))
    # kernel = {z_1 purely imaginary} x K: the functional is e_1 up to scale
    assert proj_distance(t.hyperplane, DualPoint(field, [[0.0], [1.0], [0.0]])) <= 1e-12


def test_tangent_gradient_finite_differences(field, rng):
    b = make_ball(field, 2)
    pts = b.boundary_samples(100, rng)
    h = 1e-6
    for rep in pts[:20]:
        g = b.gradient(rep)
        fd = np.zeros_like(g)
        for i in range(3):
            for c in range(field.r):
                e = np.zeros_like(rep)
                e[i, c] = h
                fd[i, c] = (b.raw_values(rep + e) - b.raw_values(rep - e)) / (2 * h)
        assert np.abs(fd - g).max() <= 1e-4


def test_dual_exact_ball(field, rng):
    bd = dual_exact_ball(field, 2)
    assert bd.contains(bd.functional(np.zeros((2, field.r))))
    u = np.zeros((2, 4))
    u[0, 0] = -1.0
    f = bd.functional(u)
    assert bd.contains(f, 1e-12) and not bd.contains(bd.functional(1.01 * u))
    fs = bd.sample(1000, rng)
    pts = make_ball(field, 2).interior_samples(1000, rng)
    vals = np.sqrt(qabs2(kinner(fs[:, None], pts[None])))
    assert vals.min() > 0.0


def test_dual_sample_inside_exact_dual(field):
    ds = dual_sample(make_ball(field, 2), 100, seed=3)
    bd = dual_exact_ball(field, 2)
    assert ds.count == 100 and ds.complete
    for f in ds.functionals:
        assert bd.contains(f, 1e-6)


def test_dual_sample_halfspace_tangents(field, rng):
    hs = make_halfspace(field)
    z = halfspace_samples(field, 50, rng, boundary=True)
    tangents = np.stack([hs.gradient(np.stack([np.array([1.0, 0, 0, 0]), zz])) for zz in z])
    assert certify(hs, tangents, rng=rng).all()


@pytest.mark.parametrize("field", [Field.C, Field.H], ids=["c", "h"])
def test_sec9_distinguished_tangents_certified_and_distinct(field, rng):
    dom = make_sec9(field, 3)
    x0, x1 = dom.distinguished_points()
    f0 = tangent_hyperplane(dom, x0).hyperplane
    f1 = tangent_hyperplane(dom, x1).hyperplane
    assert certify(dom, np.stack([f0.rep, f1.rep]), rng=rng).all()
    assert proj_distance(f0, f1) >= 0.1


def test_dual_monotone_under_inclusion(field, rng):
    big = make_ball(field, 2)
    small = TransformedDomain(big, ProjMap(KMatrix.diag(field, [1.0, 0.5, 0.5])))
    ds = dual_sample(big, 200, seed=1)
    assert certify(small, ds.array, rng=rng).all()


def test_dual_transport(field, rng):
    b = make_ball(field, 2)
    ds = dual_sample(b, 100, seed=2)
    g = random_ball_automorphism(field, 2, rng)
    # f -> f o g^{-1} has coordinates conj(g^{-1})^T f
    moved = qmul(conj_transpose(g.inv()).data[None], ds.array[:, None]).sum(axis=2)
    assert certify(b, moved, rng=rng).all()


def test_boundary_distance(rng):
    b = make_ball(Field.R, 2)
    center = chart(Field.R, 0.0, 0.0)
    # oracle: dense sampling of the sphere
    th = np.linspace(0, 2 * np.pi, 20001)
    sphere = [ProjPoint(Field.R, [1.0, math.cos(a), math.sin(a)]) for a in th[::50]]
    oracle = min(proj_distance(center, s) for s in sphere)
    assert abs(boundary_distance(b, center).value - oracle) <= 1e-3
    vals = [boundary_distance(b, chart(Field.R, r, 0.0)).value for r in (0.0, 0.5, 0.9, 0.99)]
    assert vals == sorted(vals, reverse=True)
    # the estimate is a sampled infimum: never below the true distance, and close to it
    p = chart(Field.R, 0.99, 0.0)
    exact = proj_distance(p, chart(Field.R, 1.0, 0.0))
    assert exact - 1e-12 <= boundary_distance(b, p).value <= exact * (1 + 1e-3)


def test_domain_json_roundtrip():
    for payload in ({"kind": "ball", "field": "h", "dim": 3},
                    {"kind": "paraboloid", "field": "c", "dim": 2},
                    {"kind": "sec9", "field": "h", "dim": 3}):
        d = domain_from_json(payload)
        assert domain_from_json(d.to_json()).to_json() == d.to_json()
    with pytest.raises(ValidationError):
        domain_from_json({"kind": "torus", "field": "r"})
