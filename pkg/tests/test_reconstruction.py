from dataclasses import replace

import numpy as np
import pytest

from cosetgauge import reconstruction
from cosetgauge.connections import (
    ConnectionOnSigma,
    ConstantConnection,
    InducedConnectionOnSigma,
    JetPointY,
    Section,
    f_labels,
    vertical_covariant_differential,
)
from cosetgauge.coset import CosetChart, fundamental_matrix
from cosetgauge.errors import Inconsistent, OutsideChart, ValidationError
from cosetgauge.expr import ExprArray, parse
from cosetgauge.lie import HRepresentation, ReductiveSplit, abelian
from cosetgauge.reconstruction import (
    ConfigPoint,
    adapted_config,
    config_from_fields,
    null_direction,
    reconstruct,
    reduced_vertical_differential,
    solve_theta,
    theta_affinity_residual,
    universal_vertical_differential,
)

from test_connections import random_section, random_x_connection


def point(chart, D=2, x=None, a=None, sigma=None, sigma_jet=None, y=None, y_jet=None):
    n, F, k = chart.alg.dim, chart.f_dim, chart.rep.fibre_dim
    z = np.zeros
    return ConfigPoint(z(D) if x is None else x, z((n, D)) if a is None else a, z((n, D, D)),
                       z(F) if sigma is None else sigma, z((F, D)) if sigma_jet is None else sigma_jet,
                       z(k) if y is None else y, z((k, D)) if y_jet is None else y_jet)


def random_point(rng, chart, D=2, radius=1.0):
    n, F, k = chart.alg.dim, chart.f_dim, chart.rep.fibre_dim
    s = rng.standard_normal(F)
    s *= radius * rng.random() / np.linalg.norm(s)
    return ConfigPoint(rng.uniform(-1, 1, D), rng.uniform(-1, 1, (n, D)), rng.uniform(-1, 1, (n, D, D)), s,
                       rng.uniform(-1, 1, (F, D)), rng.uniform(-1, 1, k), rng.uniform(-1, 1, (k, D)))


def test_config_point_validation(so3_chart):
    with pytest.raises(ValidationError):
        ConfigPoint(np.zeros(2), np.zeros((3, 2)), np.zeros((3, 2, 2)), np.zeros(2), np.zeros((2, 3)), np.zeros(2),
                    np.zeros((2, 2)))
    assert point(so3_chart).base_dim == 2


def test_solve_theta_zero(so3_chart):
    sol = solve_theta(so3_chart, point(so3_chart, sigma=np.array([0.3, -0.2])))
    np.testing.assert_allclose(sol.theta, 0, atol=1e-14)


def test_solve_theta_origin_sign(so3_chart, rng):
    a = rng.uniform(-1, 1, (3, 2))
    sol = solve_theta(so3_chart, point(so3_chart, a=a))
    np.testing.assert_allclose(sol.theta[:2], -a[:2], atol=1e-12)
    np.testing.assert_allclose(sol.theta[2], 0, atol=1e-12)
    assert sol.rank == 2


@pytest.mark.parametrize("chart_name", ["so3_chart", "su2_chart", "so4_chart"])
def test_solve_theta_random_substitution(chart_name, request, rng):
    chart = request.getfixturevalue(chart_name)
    for _ in range(10):
        p = random_point(rng, chart)
        sol = solve_theta(chart, p)
        J, _ = fundamental_matrix(chart, p.sigma)
        D = p.sigma_jet - J.T @ p.a
        assert np.max(np.abs(J.T @ sol.theta - D)) <= 1e-10
        assert np.max(sol.residual) <= 1e-10


def test_solve_theta_inconsistent(so3_chart, monkeypatch):
    def deficient(chart, sigma, step=None):
        J = np.zeros((3, 2))
        J[0, 0] = 1.0
        return J, np.zeros((3, 1))

    monkeypatch.setattr(reconstruction, "fundamental_matrix", deficient)
    sj = np.array([[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(Inconsistent):
        solve_theta(so3_chart, point(so3_chart, sigma_jet=sj))


def test_solve_theta_outside_chart(so3_chart):
    with pytest.raises(OutsideChart):
        solve_theta(so3_chart, point(so3_chart, sigma=np.array([3.0, 0.0])))


def test_minimum_norm_canonical(so3_chart, so4_chart, rng):
    for chart in (so3_chart, so4_chart):
        for _ in range(5):
            p = random_point(rng, chart)
            sol = solve_theta(chart, p)
            v = null_direction(chart, p.sigma)
            assert v is not None
            J, _ = fundamental_matrix(chart, p.sigma)
            assert np.linalg.norm(J.T @ v) <= 1e-10
            base = np.linalg.norm(sol.theta)
            for lam in range(2):
                bumped = sol.theta.copy()
                bumped[:, lam] += 0.05 * v
                assert np.linalg.norm(bumped) > base


def test_adapted_config_identity_at_origin(so3_chart, rng):
    a = rng.uniform(-1, 1, (3, 2))
    p = point(so3_chart, a=a)
    q = adapted_config(so3_chart, p)
    np.testing.assert_allclose(q.a, a, atol=1e-12)
    assert not np.any(q.sigma) and not np.any(q.sigma_jet)


def test_adapted_config_constant_translation(so3_chart):
    q = adapted_config(so3_chart, point(so3_chart, sigma=np.array([0.4, -0.3])))
    np.testing.assert_allclose(q.a, 0, atol=1e-12)
    assert not np.any(q.sigma)


def test_adapted_config_linear_higgs(so3_chart):
    sj = np.array([[1.0, 0.0], [0.0, 0.0]])
    q = adapted_config(so3_chart, point(so3_chart, sigma_jet=sj))
    assert q.a[0, 0] == pytest.approx(-1.0, abs=1e-12)
    np.testing.assert_allclose(np.delete(q.a.ravel(), 0), 0, atol=1e-12)


def test_adapted_exact_matches_finite_difference(so3_chart, su2_chart, rng):
    for chart in (so3_chart, su2_chart):
        for _ in range(5):
            p = random_point(rng, chart)
            exact = adapted_config(chart, p).a
            h = lambda xp, p=p: p.sigma + p.sigma_jet @ (np.asarray(xp) - p.x)
            fd = adapted_config(chart, p, extension=h).a
            np.testing.assert_allclose(exact, fd, atol=1e-7)


def test_uvd_examples(so3_chart, rng):
    y, yj = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, (2, 2))
    p = point(so3_chart, y=y, y_jet=yj)
    np.testing.assert_allclose(universal_vertical_differential(so3_chart, so3_chart.rep, p), yj, atol=1e-14)
    a = np.zeros((3, 2))
    a[2] = [0.6, -1.1]
    p = point(so3_chart, a=a, y=y, y_jet=yj)
    rec = reconstruct(so3_chart, p)
    np.testing.assert_allclose(rec.theta.theta, 0, atol=1e-12)
    I = so3_chart.rep.generators[0]
    oracle = yj - np.outer(I @ y, a[2])
    np.testing.assert_allclose(rec.vertical_differential, oracle, atol=1e-12)


def test_integral_configuration(so3_chart, so4_chart, rng):
    """sigma_jet = a J makes Theta vanish and D~ match the h-part connection on Sigma."""
    for chart in (so3_chart, so4_chart):
        H = chart.h_dim
        for _ in range(5):
            p = random_point(rng, chart)
            J, _ = fundamental_matrix(chart, p.sigma)
            p = replace(p, sigma_jet=J.T @ p.a)
            rec = reconstruct(chart, p)
            np.testing.assert_allclose(rec.theta.theta, 0, atol=1e-8)
            induced = InducedConnectionOnSigma(ConstantConnection(p.a), chart)
            jet = JetPointY(p.x, p.sigma, p.y, p.sigma_jet, p.y_jet)
            np.testing.assert_allclose(vertical_covariant_differential(induced, chart.rep, jet),
                                       rec.vertical_differential, atol=1e-7)
        p = point(chart, a=rng.uniform(-1, 1, (chart.alg.dim, 2)), y=rng.uniform(-1, 1, chart.rep.fibre_dim),
                  y_jet=rng.uniform(-1, 1, (chart.rep.fibre_dim, 2)))
        p = replace(p, sigma_jet=fundamental_matrix(chart, p.sigma)[0].T @ p.a)
        rec = reconstruct(chart, p)
        h = list(chart.split.h_indices)
        Ax = ExprArray((H, 2), {(i, l): parse(repr(float(p.a[h][i, l]))) for i in range(H) for l in range(2)})
        conn = ConnectionOnSigma(Ax, ExprArray((H, chart.f_dim)), f_labels(chart))
        jet = JetPointY(p.x, p.sigma, p.y, p.sigma_jet, p.y_jet)
        np.testing.assert_allclose(rec.vertical_differential, vertical_covariant_differential(conn, chart.rep, jet),
                                   atol=1e-12)


@pytest.mark.parametrize("chart_name", ["so3_chart", "su2_chart", "so4_chart"])
def test_theorem6_fields(chart_name, request, rng):
    chart = request.getfixturevalue(chart_name)
    D = 2
    for _ in range(5):
        conn = random_x_connection(rng, chart.alg.dim, D)
        higgs = random_section(rng, chart.f_dim, D)
        matter = random_section(rng, chart.rep.fibre_dim, D, scale=1.0)
        x = rng.uniform(-1, 1, D)
        p = config_from_fields(conn, chart, higgs, matter, x)
        got = reconstruct(chart, p).vertical_differential
        ref = reduced_vertical_differential(conn, chart, higgs, matter, x)
        assert np.max(np.abs(got - ref)) <= 1e-5


def test_zero_connection_constant_higgs(so3_chart, rng):
    zero = ConstantConnection(np.zeros((3, 2)))
    higgs = Section(ExprArray((2,), {(0,): parse("0.3"), (1,): parse("-0.2")}))
    matter = random_section(rng, 2, 2, scale=1.0)
    x = np.array([0.1, 0.4])
    p = config_from_fields(zero, so3_chart, higgs, matter, x)
    got = reconstruct(so3_chart, p).vertical_differential
    ref = reduced_vertical_differential(zero, so3_chart, higgs, matter, x)
    assert np.max(np.abs(got - ref)) == pytest.approx(0.0, abs=1e-12)


def test_corrupted_theta_is_detected(so3_chart, rng):
    y = np.array([1.0, 0.0])
    p = point(so3_chart, a=rng.uniform(-1, 1, (3, 2)), y=y, y_jet=rng.uniform(-1, 1, (2, 2)))
    good = reconstruct(so3_chart, p).vertical_differential
    shift = np.zeros((3, 2))
    shift[2, 0] = 0.1
    bad = reconstruct(so3_chart, p, theta_shift=shift).vertical_differential
    assert np.max(np.abs(bad - good)) == pytest.approx(0.1, abs=1e-12)


@pytest.mark.parametrize("chart_name", ["so3_chart", "su2_chart"])
def test_theta_affinity(chart_name, request, rng):
    chart = request.getfixturevalue(chart_name)
    worst = 0.0
    for _ in range(50):
        p = random_point(rng, chart, radius=0.8)
        worst = max(worst, theta_affinity_residual(chart, p, rng.uniform(-1, 1, p.sigma_jet.shape)))
    assert worst <= 1e-9


def test_extension_independence(so3_chart, su2_chart, rng):
    for chart in (so3_chart, su2_chart):
        for _ in range(5):
            p = random_point(rng, chart, radius=0.8)
            Q = rng.uniform(-0.5, 0.5, (chart.f_dim, 2, 2))

            def quad(xp, p=p, Q=Q):
                d = np.asarray(xp) - p.x
                return p.sigma + p.sigma_jet @ d + np.einsum("mab,a,b->m", Q, d, d)

            lin = reconstruct(chart, p).vertical_differential
            other = reconstruct(chart, p, extension=quad).vertical_differential
            assert np.max(np.abs(lin - other)) <= 1e-5


def test_null_direction_abelian_is_h_axis():
    alg = abelian(2)
    chart = CosetChart(alg, ReductiveSplit.from_h(2, [0]), HRepresentation(np.zeros((1, 1, 1))))
    v = null_direction(chart, [0.4])
    np.testing.assert_allclose(np.abs(v), [1.0, 0.0], atol=1e-10)
