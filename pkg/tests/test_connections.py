import numpy as np
import pytest

from cosetgauge.connections import (
    ConnectionOnSigma,
    ConnectionOnX,
    ConstantConnection,
    InducedConnectionOnSigma,
    JetPointY,
    Section,
    TransformedConnection,
    associated_vector_on_sigma,
    covariant_differential_pullback,
    covariant_differential_sigma,
    exp_field,
    f_labels,
    gauge_transform_connection,
    h_component_reduced,
    jet_of_sections,
    pullback_connection,
    theorem1_residual,
    vertical_covariant_differential,
)
from cosetgauge.coset import fundamental_vector, wigner_decompose
from cosetgauge.errors import OutsideChart
from cosetgauge.expr import ExprArray, parse
from cosetgauge.lie import matrix_exp


def expr_array(shape, entries):
    return ExprArray(shape, {k: parse(v) for k, v in entries.items()})


def random_poly(rng, variables):
    terms = [repr(rng.uniform(-0.5, 0.5))] + [f"{rng.uniform(-0.5, 0.5)!r}*{v}" for v in variables]
    terms.append(f"{rng.uniform(-0.3, 0.3)!r}*{variables[0]}*{variables[-1]}")
    return parse(" + ".join(terms))


def random_sigma_connection(rng, chart, D):
    H, F = chart.h_dim, chart.f_dim
    labels = f_labels(chart)
    vars_ = [f"x{l}" for l in range(1, D + 1)] + [f"s{m}" for m in labels]
    Ax = ExprArray((H, D), {(a, l): random_poly(rng, vars_) for a in range(H) for l in range(D)})
    As = ExprArray((H, F), {(a, m): random_poly(rng, vars_) for a in range(H) for m in range(F)})
    return ConnectionOnSigma(Ax, As, labels)


def random_x_connection(rng, n, D):
    xs = [f"x{l}" for l in range(1, D + 1)]
    return ConnectionOnX(ExprArray((n, D), {(p, l): random_poly(rng, xs) for p in range(n) for l in range(D)}))


def random_section(rng, rows, D, scale=0.4):
    xs = [f"x{l}" for l in range(1, D + 1)]
    entries = {}
    for r in range(rows):
        terms = [repr(rng.uniform(-scale, scale))] + [f"{rng.uniform(-scale, scale)!r}*{x}" for x in xs]
        terms.append(f"{rng.uniform(-scale, scale)!r}*sin({xs[0]})")
        entries[(r,)] = parse(" + ".join(terms))
    return Section(ExprArray((rows,), entries))


def test_associated_vector_examples(so3_chart):
    assert not np.any(associated_vector_on_sigma(np.zeros((3, 2)), so3_chart, [0, 0], [0.3, 0.1]))
    a = np.zeros((3, 2))
    a[2] = [1.0, -2.0]
    np.testing.assert_allclose(associated_vector_on_sigma(a, so3_chart, [0, 0], [0.0, 0.0]), 0, atol=1e-12)
    a = np.zeros((3, 2))
    a[0, 0] = 1.0
    np.testing.assert_allclose(associated_vector_on_sigma(a, so3_chart, [0, 0], [0.0, 0.0]), [[1, 0], [0, 0]], atol=1e-12)
    with pytest.raises(OutsideChart):
        associated_vector_on_sigma(a, so3_chart, [0, 0], [3.0, 0.0])


def test_covariant_differential_sigma_examples(so3_chart, rng):
    a = rng.uniform(-1, 1, (3, 2))
    sigma = np.array([0.2, -0.4])
    M = associated_vector_on_sigma(a, so3_chart, [0, 0], sigma)
    np.testing.assert_allclose(covariant_differential_sigma(a, so3_chart, [0, 0], sigma, M), 0, atol=1e-15)
    sj = rng.uniform(-1, 1, (2, 2))
    np.testing.assert_allclose(covariant_differential_sigma(np.zeros((3, 2)), so3_chart, [0, 0], sigma, sj), sj)
    a = np.zeros((3, 2))
    a[0, 0] = 1.0
    sj = np.zeros((2, 2))
    sj[0, 0] = 2.0
    assert covariant_differential_sigma(a, so3_chart, [0, 0], [0, 0], sj)[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_vertical_covariant_differential_examples(so3_chart, rng):
    rep = so3_chart.rep
    labels = f_labels(so3_chart)
    zero = ConnectionOnSigma(ExprArray((1, 2)), ExprArray((1, 2)), labels)
    jet = JetPointY(np.zeros(2), np.array([0.1, 0.2]), np.array([0.4, -0.3]), rng.uniform(-1, 1, (2, 2)),
                    rng.uniform(-1, 1, (2, 2)))
    np.testing.assert_array_equal(vertical_covariant_differential(zero, rep, jet), jet.y_jet)
    conn = random_sigma_connection(rng, so3_chart, 2)
    jet0 = JetPointY(jet.x, jet.sigma, np.zeros(2), jet.sigma_jet, jet.y_jet)
    np.testing.assert_array_equal(vertical_covariant_differential(conn, rep, jet0), jet.y_jet)
    one = ConnectionOnSigma(expr_array((1, 2), {(0, 0): "1"}), ExprArray((1, 2)), labels)
    jet1 = JetPointY(np.zeros(2), np.zeros(2), np.array([1.0, 0.0]), np.zeros((2, 2)), np.zeros((2, 2)))
    Dt = vertical_covariant_differential(one, rep, jet1)
    # one-line oracle: y_jet - A I y with A^3_1 = 1
    oracle = np.zeros((2, 2))
    oracle[:, 0] = -np.array([[0.0, -1.0], [1.0, 0.0]]) @ np.array([1.0, 0.0])
    np.testing.assert_array_equal(Dt, oracle)
    assert Dt[:, 0].tolist() == [0.0, -1.0]


def test_pullback_examples(so3_chart, rng):
    labels = f_labels(so3_chart)
    const_higgs = Section(expr_array((2,), {(0,): "0.3", (1,): "-0.2"}))
    As_only = ConnectionOnSigma(ExprArray((1, 2)), expr_array((1, 2), {(0, 0): "s1 + x2", (0, 1): "x1*s2"}), labels)
    np.testing.assert_allclose(pullback_connection(As_only, so3_chart, const_higgs, [0.5, 0.1]), 0, atol=1e-12)
    Ax_only = ConnectionOnSigma(expr_array((1, 2), {(0, 0): "s1*x1", (0, 1): "cos(s2)"}), ExprArray((1, 2)), labels)
    higgs = Section(expr_array((2,), {(0,): "x1", (1,): "0.1*x2"}))
    x = np.array([0.4, -0.7])
    np.testing.assert_allclose(pullback_connection(Ax_only, so3_chart, higgs, x), [[0.4 * 0.4, np.cos(-0.07)]], atol=1e-12)
    conn = ConnectionOnSigma(ExprArray((1, 2)), expr_array((1, 2), {(0, 0): "s1"}), labels)
    B = pullback_connection(conn, so3_chart, Section(expr_array((2,), {(0,): "x1"})), [2.0, 0.0])
    assert B[0, 0] == pytest.approx(2.0, abs=1e-10)
    with pytest.raises(OutsideChart):
        pullback_connection(conn, so3_chart, Section(expr_array((2,), {(0,): "5"})), [0.0, 0.0])


def test_gauge_transform_examples(so3_chart, rng):
    alg = so3_chart.alg
    a = rng.uniform(-1, 1, (3, 2))
    same = gauge_transform_connection(a, alg, lambda x: np.eye(3))([0.3, 0.2])
    np.testing.assert_allclose(same, a, atol=1e-15)
    g = expr_array((3,), {(2,): "x1"})
    out = gauge_transform_connection(np.zeros((3, 2)), alg, g)([0.1, -0.3])
    # Frozen convention a' = Ad(g) a + (dg) g^-1: for g = exp(x1 E3) the x1 column is +e3.
    np.testing.assert_allclose(out, [[0, 0], [0, 0], [1, 0]], atol=1e-8)


def test_gauge_transform_composition(so3_chart, rng):
    alg = so3_chart.alg
    conn = random_x_connection(rng, 3, 2)
    g1 = exp_field(alg, expr_array((3,), {(0,): "0.3*x1 - 0.2", (2,): "sin(x2)"}))
    g2 = exp_field(alg, expr_array((3,), {(1,): "x1*x2", (2,): "0.4 - x1"}))
    first = TransformedConnection(gauge_transform_connection(conn, alg, g1))
    twice = gauge_transform_connection(first, alg, g2)
    once = gauge_transform_connection(conn, alg, lambda x: g2(x) @ g1(x))
    for _ in range(10):
        x = rng.uniform(-1, 1, 2)
        np.testing.assert_allclose(twice(x), once(x), atol=1e-6)


def test_sign_convention_keeps_D_covariant(so3_chart, rng):
    """Under sigma -> g sigma the transformed connection maps D to the pushed-forward D."""
    alg = so3_chart.alg
    conn = random_x_connection(rng, 3, 2)
    higgs = random_section(rng, 2, 2)
    g_of = exp_field(alg, expr_array((3,), {(0,): "0.4*x1 + 0.1", (1,): "-0.3*x2", (2,): "0.5*x1*x2"}))
    transformed = gauge_transform_connection(conn, alg, g_of)
    h = 1e-4
    for _ in range(5):
        x = rng.uniform(-1, 1, 2)
        sigma = higgs.value(x)
        D = covariant_differential_sigma(conn, so3_chart, x, sigma, higgs.jacobian(x))

        def moved(xp):
            return wigner_decompose(so3_chart, g_of(xp), higgs.value(xp)).sigma_new

        s_new = moved(x)
        jac_new = np.column_stack([(moved(x + h * e) - moved(x - h * e)) / (2 * h) for e in np.eye(2)])
        D_new = covariant_differential_sigma(transformed(x), so3_chart, x, s_new, jac_new)
        act = lambda s: wigner_decompose(so3_chart, g_of(x), s).sigma_new
        push = np.column_stack([(act(sigma + h * e) - act(sigma - h * e)) / (2 * h) for e in np.eye(2)])
        np.testing.assert_allclose(D_new, push @ D, atol=1e-6)


def test_h_component_examples(so3_chart, rng):
    zero_higgs = Section(ExprArray((2,)))
    a = rng.uniform(-1, 1, (3, 2))
    Abar, Theta = h_component_reduced(ConstantConnection(a), so3_chart, zero_higgs, [0.2, 0.3])
    np.testing.assert_allclose(Abar, a[[2]], atol=1e-12)
    np.testing.assert_allclose(Theta, a[[0, 1]], atol=1e-12)
    ah = np.zeros((3, 2))
    ah[2] = [0.5, -0.1]
    _, Theta = h_component_reduced(ConstantConnection(ah), so3_chart, zero_higgs, [0.2, 0.3])
    assert not np.any(np.abs(Theta) > 1e-14)
    c = 0.7
    a1 = np.zeros((3, 2))
    a1[0, 0] = c
    Abar, Theta = h_component_reduced(ConstantConnection(a1), so3_chart, zero_higgs, [0.0, 0.0])
    assert not np.any(Abar) and Theta[0, 0] == pytest.approx(c)
    D = covariant_differential_sigma(a1, so3_chart, [0, 0], [0, 0], np.zeros((2, 2)))
    np.testing.assert_allclose(D, -Theta, atol=1e-12)


@pytest.mark.parametrize("chart_name", ["so3_chart", "su2_chart", "so4_chart"])
def test_theorem1_pointwise(chart_name, request, rng):
    chart = request.getfixturevalue(chart_name)
    n = chart.alg.dim
    conn = random_x_connection(rng, n, 2)
    higgs = random_section(rng, chart.f_dim, 2)
    u = ExprArray((n,), {(a,): random_poly(rng, ["x1", "x2"]) for a in chart.split.h_indices})
    for _ in range(10):
        assert theorem1_residual(conn, chart, higgs, u, rng.uniform(-1, 1, 2)) <= 1e-5


@pytest.mark.parametrize("chart_name", ["so3_chart", "su2_chart", "so4_chart"])
def test_theorem4_restriction(chart_name, request, rng):
    chart = request.getfixturevalue(chart_name)
    conn = random_sigma_connection(rng, chart, 2)
    higgs = random_section(rng, chart.f_dim, 2)
    matter = random_section(rng, chart.rep.fibre_dim, 2, scale=1.0)
    for _ in range(20):
        x = rng.uniform(-1, 1, 2)
        jet = jet_of_sections(higgs, matter, x)
        B = pullback_connection(conn, chart, higgs, x)
        lhs = vertical_covariant_differential(conn, chart.rep, jet)
        rhs = covariant_differential_pullback(B, chart.rep, jet.y, jet.y_jet)
        assert np.max(np.abs(lhs - rhs)) <= 1e-6


@pytest.mark.parametrize("chart_name", ["so3_chart", "su2_chart", "so4_chart"])
def test_pullback_of_induced_connection_is_reduced(chart_name, request, rng):
    chart = request.getfixturevalue(chart_name)
    conn = random_x_connection(rng, chart.alg.dim, 2)
    higgs = random_section(rng, chart.f_dim, 2)
    induced = InducedConnectionOnSigma(conn, chart)
    for _ in range(10):
        x = rng.uniform(-1, 1, 2)
        Abar, _ = h_component_reduced(conn, chart, higgs, x)
        assert np.max(np.abs(pullback_connection(induced, chart, higgs, x) - Abar)) <= 1e-5


def test_induced_connection_at_origin_is_h_part(so3_chart, rng):
    a = rng.uniform(-1, 1, (3, 2))
    Ax, As = InducedConnectionOnSigma(ConstantConnection(a), so3_chart).at([0, 0], [0.0, 0.0])
    np.testing.assert_allclose(Ax, a[[2]], atol=1e-15)
    np.testing.assert_allclose(As, 0, atol=1e-15)


def test_fundamental_vector_used_by_associated_vector(so3_chart, rng):
    a = rng.uniform(-1, 1, (3, 2))
    sigma = np.array([0.5, 0.3])
    M = associated_vector_on_sigma(a, so3_chart, [0, 0], sigma)
    for lam in range(2):
        np.testing.assert_allclose(M[:, lam], fundamental_vector(so3_chart, a[:, lam], sigma)[0])


def test_exp_field(so3_chart):
    g = exp_field(so3_chart.alg, expr_array((3,), {(2,): "x1"}))
    np.testing.assert_allclose(g([0.3, 0.0]), matrix_exp(0.3 * so3_chart.alg.matrices[2]))
