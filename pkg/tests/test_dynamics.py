import math

import numpy as np
import pytest

from kprojective.domain import make_ball, make_paraboloid
from kprojective.dynamics import (
    Proximality, automorphism_check, ball_boost, canonical_rank_one, classify,
    compose_biproximal_search, contraction_check, extend_graph_function, iterate_orbit,
    limit_set_sample, orbit_rate, random_ball_automorphism, random_biproximal_ball_map,
    rank_one_limit, special_one_parameter, standard_form,
)
from kprojective.errors import ConvergenceError, ValidationError
from kprojective.kmatrix import KMatrix, eigen_lines, matmul, random_kmatrix
from kprojective.kscalar import Field, qabs2, random_scalars
from kprojective.projspace import EndClass, ProjMap, ProjPoint, end_distance, proj_distance

FIELDS = [Field.R, Field.C, Field.H]


def e(field, n, i):
    v = np.zeros((n, 4))
    v[i, 0] = 1.0
    return ProjPoint(field, v)


def diag(field, *x):
    return ProjMap(KMatrix.diag(field, list(x)))


def test_classify_examples(field):
    c = classify(diag(field, 2.0, 1.0, 0.5))
    assert c.variant is Proximality.BI_PROXIMAL
    assert c.x_plus.is_close(e(field, 3, 0)) and c.x_minus.is_close(e(field, 3, 2))
    assert classify(ProjMap(KMatrix(field, [[1.0, 1.0], [0.0, 1.0]]))).variant is Proximality.NOT_PROXIMAL
    assert classify(diag(field, 2.0, 2.0, 1.0)).variant is Proximality.NOT_PROXIMAL
    # the top of (1/2, 1/2, 1) is isolated: proximal, but its inverse is not
    assert classify(diag(field, 0.5, 0.5, 1.0)).variant is Proximality.PROXIMAL_ONLY


def test_classify_projective_and_inverse(field, rng):
    for _ in range(10):
        phi = random_biproximal_ball_map(field, 2, rng)
        c = classify(phi)
        c2 = classify(ProjMap(phi.matrix * -3.7))
        assert c2.variant is c.variant and c2.x_plus.is_close(c.x_plus, 1e-9)
        ci = classify(phi.inverse())
        assert proj_distance(ci.x_plus, c.x_minus) <= 1e-9
        assert proj_distance(ci.x_minus, c.x_plus) <= 1e-9


def test_orbit_fixed_point(field):
    phi = diag(field, 2.0, 1.0, 0.5)
    for p in iterate_orbit(phi, e(field, 3, 0), 10):
        assert p.is_close(e(field, 3, 0))


def test_orbit_rate_diagonal(field, rng):
    phi = diag(field, 2.0, 1.0, 0.5)
    p = ProjPoint(field, random_scalars(field, rng, 3))
    assert orbit_rate(phi, p, e(field, 3, 0)) == pytest.approx(0.5, rel=0.1)
    assert orbit_rate(phi.inverse(), p, e(field, 3, 2)) == pytest.approx(0.5, rel=0.1)


def test_rank_one_diagonal():
    lim = rank_one_limit(diag(Field.R, 4.0, 2.0, 1.0))
    target = EndClass(KMatrix.diag(Field.R, [1.0, 0.0, 0.0]))
    assert end_distance(lim.end, target) <= 1e-10
    assert lim.end.rank() == 1


def test_rank_one_image_kernel(field, rng):
    for _ in range(10):
        phi = random_biproximal_ball_map(field, 2, rng)
        c = classify(phi)
        lim = rank_one_limit(phi, c)
        m = lim.end.matrix
        for v in random_scalars(field, rng, (5, 3)):
            assert proj_distance(ProjPoint(field, m.apply(v)), c.x_plus) <= 1e-8
        for _, w in eigen_lines(phi.matrix)[1:]:
            w = w / np.sqrt((w ** 2).sum())
            assert np.sqrt((m.apply(w) ** 2).sum()) <= 1e-8


def test_rank_one_conjugation(field, rng):
    phi = random_biproximal_ball_map(field, 2, rng)
    g = random_kmatrix(field, 3, 3, rng)
    lim = rank_one_limit(phi).end.matrix
    conj_lim = canonical_rank_one(matmul(matmul(g, lim), g.inv()))[0]
    direct = rank_one_limit(ProjMap(matmul(matmul(g, phi.matrix), g.inv()))).end
    assert end_distance(conj_lim, direct) <= 1e-8


def test_rank_one_needs_biproximal(field):
    with pytest.raises(ValidationError):
        rank_one_limit(diag(field, 2.0, 2.0, 1.0))


def test_contraction_prediction(field, rng):
    ball = make_ball(field, 2)
    for _ in range(5):
        rep = contraction_check(ball, random_biproximal_ball_map(field, 2, rng), seed=1)
        assert 0.5 <= rep.measured / max(rep.predicted, 1) <= 2.0


def boost_form(field, d=2, s=1.0):
    return standard_form(make_ball(field, d), ProjMap(ball_boost(field, d, s)))


def test_standard_form_ball_becomes_paraboloid(field, rng):
    sf = boost_form(field)
    assert max(sf.residuals.values()) <= 1e-9
    pts = random_scalars(field, rng, (10_000, 2)) * 2.0
    v = np.concatenate([np.tile([[[1.0, 0, 0, 0]]], (10_000, 1, 1)), pts], axis=1)
    para = pts[:, 0, 0] > qabs2(pts[:, 1])
    agree = (sf.inside_standard(v) == para).mean()
    assert agree >= 0.999


def test_standard_form_block_shape(field):
    sf = boost_form(field, 3, 0.7)
    p = sf.phi_std.data
    mask = np.ones(p.shape[:2], dtype=bool)
    mask[0, 0] = mask[1, 1] = False
    mask[2:, 2:] = False
    assert np.abs(p[mask]).max() <= 1e-9 * np.abs(p).max()
    x_plus = sf.to_standard(sf.classification.x_plus)
    assert x_plus.is_close(e(field, 4, 0), 1e-9)


def para_form(field, d=3, t=1.0):
    phi = diag(field, math.exp(-t), math.exp(t), *([1.0] * (d - 1)))
    return standard_form(make_paraboloid(field, d), phi)


def test_extension_matches_closed_form(field, rng):
    sf = para_form(field)
    x0 = np.zeros(4)
    assert extend_graph_function(sf, x0, np.zeros((2, 4))) == pytest.approx(0.0, abs=1e-15)
    for _ in range(5):
        z = random_scalars(field, rng, 2)
        z *= rng.uniform(2.0, 20.0) / math.sqrt(qabs2(z).sum())
        val = extend_graph_function(sf, x0, z)
        assert val == pytest.approx(float(qabs2(z).sum()), rel=1e-9)
        if field is not Field.R:
            x = random_scalars(field, rng)
            x[0] = 0.0
            assert extend_graph_function(sf, x, z) == pytest.approx(val, rel=1e-9)


def test_special_one_parameter(field, rng):
    sf = para_form(field, 2)
    n = 3
    assert special_one_parameter(sf, 0.0).is_close(ProjMap.identity(field, n))
    par = make_paraboloid(field, 2)
    pts = par.interior_samples(1000, rng)
    for t in (-1.3, 0.4, 2.0):
        g = special_one_parameter(sf, t).matrix.data
        img = qmul_batch(g, pts)
        assert (par.defining_values(img) < 1e-9).all()
    s, t = rng.uniform(-2, 2, 2)
    lhs = special_one_parameter(sf, s) @ special_one_parameter(sf, t)
    assert lhs.is_close(special_one_parameter(sf, s + t), 1e-9)


def qmul_batch(g, pts):
    from kprojective.kscalar import qmul

    return qmul(g[None], pts[:, None]).sum(axis=2)


def test_search_finds_transverse_product(rng):
    field = Field.C
    ball = make_ball(field, 2)
    a = ProjMap(ball_boost(field, 2, 1.0))
    rot = np.zeros((3, 3, 4))
    rot[0, 0, 0] = rot[2, 1, 0] = 1.0
    rot[1, 2, 0] = -1.0
    r = KMatrix(field, rot)
    b = ProjMap(matmul(matmul(r, ball_boost(field, 2, 0.5)), r.inv()))
    res = compose_biproximal_search([a], [b], ball)
    assert res.word == "phi_1 psi_1^-1" and res.classification.is_biproximal


def test_search_identity_pair_fails(field):
    ball = make_ball(field, 2)
    a = ProjMap(ball_boost(field, 2, 1.0))
    with pytest.raises(ConvergenceError):
        compose_biproximal_search([a], [a], ball, word_length=0)


def test_paraboloid_translation_composite_is_automorphism(field, rng):
    par = make_paraboloid(field, 2)
    w = random_scalars(field, rng)
    w[0] = 0.0
    u = np.zeros((3, 3, 4))
    for i in range(3):
        u[i, i, 0] = 1.0
    u[1, 0] = w
    psi = diag(field, math.exp(0.3), math.exp(-0.3), 1.0)
    assert automorphism_check(par, psi @ ProjMap(KMatrix(field, u))).ok


def test_automorphism_check_rejects(field):
    assert not automorphism_check(make_ball(field, 2), diag(field, 1.0, 2.0, 1.0)).ok


def test_limit_set_one_generator(field):
    ball = make_ball(field, 2)
    phi = ProjMap(ball_boost(field, 2, 1.0))
    c = classify(phi)
    s = limit_set_sample([phi], ball, ball.center(), depth=40, seed=0, words=32)
    assert s.cluster_count == 2
    for p in s.points:
        assert min(proj_distance(p, c.x_plus), proj_distance(p, c.x_minus)) <= 1e-6


def test_limit_set_two_generators(rng):
    field = Field.H
    ball = make_ball(field, 2)
    gens = [random_biproximal_ball_map(field, 2, rng) for _ in range(2)]
    s = limit_set_sample(gens, ball, ball.center(), depth=30, seed=1, words=128)
    assert s.cluster_count >= 4
    for p in s.points:
        assert abs(ball.defining_value(p)) <= 1e-6
    again = limit_set_sample(gens, ball, ball.center(), depth=30, seed=1, words=128)
    assert again.to_json() == s.to_json()


def test_limit_set_identity_is_empty(field):
    ball = make_ball(field, 2)
    s = limit_set_sample([ProjMap.identity(field, 3)], ball, ball.center(), depth=10, words=8)
    assert s.cluster_count == 0


def test_limit_set_rejects_non_automorphism(field):
    with pytest.raises(ValidationError):
        limit_set_sample([diag(field, 1.0, 3.0, 1.0)], make_ball(field, 2),
                         make_ball(field, 2).center(), depth=5)


def test_random_ball_automorphism_preserves_form(field, rng):
    q = KMatrix.diag(field, [-1.0, 1.0, 1.0])
    g = random_ball_automorphism(field, 2, rng)
    from kprojective.kmatrix import conj_transpose

    assert np.abs((conj_transpose(g) @ q @ g - q).data).max() <= 1e-10
