"""Connections on P -> X and P -> Sigma, covariant differentials, pull-backs
and gauge transformations.

Conventions (frozen by tests/test_connections.py):

* a connection on X acts on the coset bundle through the horizontal lift
  ``d_l + a^p_l J_p``; its covariant differential is ``sigma_l - a^p_l J_p``;
* a gauge transformation ``g(x)`` sends ``a -> Ad(g) a + (d g) g^-1``, which is
  the law keeping that covariant differential equivariant under ``sigma -> g sigma``;
* on the fibre V the vertical differential is ``y_l - (A_l + A_m sigma^m_l) I y``.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .coset import DEFAULT_FD_STEP, CosetChart, fundamental_vector, representative
from .errors import OutsideChart
from .expr import ExprArray
from .lie import LieAlgebraData, adjoint_of_group_element, matrix_exp


def x_env(x) -> dict:
    return {f"x{i + 1}": float(v) for i, v in enumerate(x)}


def xs_env(x, sigma, f_labels) -> dict:
    env = x_env(x)
    env.update({f"s{m}": float(v) for m, v in zip(f_labels, sigma)})
    return env


def f_labels(chart: CosetChart) -> tuple:
    return tuple(m + 1 for m in chart.split.f_indices)


def _jacobian(fn, x, step):
    """Central-difference Jacobian of a vector function of x, shape (out, D)."""
    x = np.asarray(x, dtype=float)
    cols = []
    for lam in range(x.size):
        e = np.zeros_like(x)
        e[lam] = step
        cols.append((fn(x + e) - fn(x - e)) / (2 * step))
    return np.stack(cols, axis=-1)


@dataclass(frozen=True, eq=False)
class ConnectionOnX:
    """Coefficients ``a[p, l](x)`` of a connection on P -> X, valued in the full algebra."""

    coefficients: ExprArray

    def at(self, x) -> np.ndarray:
        return self.coefficients.evaluate(x_env(x))


@dataclass(frozen=True, eq=False)
class ConstantConnection:
    values: np.ndarray

    def at(self, x) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


class SigmaConnectionBase:
    """Anything with ``at(x, sigma) -> (A_x[a, l], A_s[a, m])``."""

    def at(self, x, sigma):
        raise NotImplementedError

    def sigma_derivative(self, x, sigma, m, step=DEFAULT_FD_STEP):
        """Central differences of both coefficient arrays in ``sigma^m`` (slot index)."""
        sigma = np.asarray(sigma, dtype=float)
        e = np.zeros_like(sigma)
        e[m] = step
        px, ps = self.at(x, sigma + e)
        mx, ms = self.at(x, sigma - e)
        return (px - mx) / (2 * step), (ps - ms) / (2 * step)


@dataclass(frozen=True, eq=False)
class ConnectionOnSigma(SigmaConnectionBase):
    """``A_x[a, l](x, sigma)`` and ``A_s[a, m](x, sigma)`` as field expressions."""

    A_x: ExprArray
    A_s: ExprArray
    f_labels: tuple

    def at(self, x, sigma):
        env = xs_env(x, sigma, self.f_labels)
        return self.A_x.evaluate(env), self.A_s.evaluate(env)


@dataclass(frozen=True, eq=False)
class InducedConnectionOnSigma(SigmaConnectionBase):
    """Connection on P -> Sigma built from a connection on P -> X.

    At ``(x, sigma)`` it is the h-part of ``a`` gauge-transformed by ``s(sigma)^-1``:
    ``A_x = [Ad(s^-1) a]_h`` and ``A_s[:, m] = [-s^-1 d_m s]_h``. Its pull-back by any
    Higgs field equals the h-part of the adapted connection.
    """

    conn_x: object
    chart: CosetChart
    step: float = DEFAULT_FD_STEP

    def at(self, x, sigma):
        chart = self.chart
        alg = chart.alg
        h = list(chart.split.h_indices)
        sigma = np.asarray(sigma, dtype=float)
        s_inv = representative(chart, -sigma)
        a = self.conn_x.at(x)
        Ax = (adjoint_of_group_element(s_inv, alg) @ a)[h]
        X = kernels.combine(sigma, chart._Ef)
        cols = [alg.coordinates(-s_inv @ kernels.expm_frechet(X, chart._Ef[m])) for m in range(chart.f_dim)]
        As = np.column_stack(cols)[h] if cols else np.zeros((len(h), 0))
        return Ax, As


@dataclass(frozen=True, eq=False)
class Section:
    """Vector of field expressions over x: a Higgs field (values sigma^m) or a matter field (values y^i)."""

    components: ExprArray

    def value(self, x) -> np.ndarray:
        return self.components.evaluate(x_env(x))

    def jacobian(self, x, step=DEFAULT_FD_STEP) -> np.ndarray:
        return _jacobian(self.value, x, step)


HiggsSection = Section
MatterSection = Section


@dataclass(frozen=True)
class JetPointY:
    x: np.ndarray
    sigma: np.ndarray
    y: np.ndarray
    sigma_jet: np.ndarray  # (F, D)
    y_jet: np.ndarray  # (k, D)


def jet_of_sections(higgs: Section, matter: Section, x, step=DEFAULT_FD_STEP) -> JetPointY:
    x = np.asarray(x, dtype=float)
    return JetPointY(x, higgs.value(x), matter.value(x), higgs.jacobian(x, step), matter.jacobian(x, step))


def _coefficients(conn, x):
    if isinstance(conn, np.ndarray):
        return conn
    return conn.at(x)


def associated_vector_on_sigma(conn_x, chart: CosetChart, x, sigma, step=DEFAULT_FD_STEP) -> np.ndarray:
    """``M[m, l] = a^p_l(x) J_p^m(sigma)``, one fundamental vector per base direction."""
    a = _coefficients(conn_x, x)
    chart.check_inside(sigma)
    M = np.zeros((chart.f_dim, a.shape[1]))
    for lam in range(a.shape[1]):
        M[:, lam] = fundamental_vector(chart, a[:, lam], sigma, step=step)[0]
    return M


def covariant_differential_sigma(conn_x, chart: CosetChart, x, sigma, sigma_jet, step=DEFAULT_FD_STEP):
    """``D[m, l] = sigma^m_l - a^p_l J_p^m(sigma)``."""
    return np.asarray(sigma_jet, dtype=float) - associated_vector_on_sigma(conn_x, chart, x, sigma, step)


def apply_generators(rep, coeffs, y) -> np.ndarray:
    """Columns ``sum_a coeffs[a, l] I_a y`` for each base direction l; shape (k, D)."""
    Iy = np.einsum("aij,j->ai", rep.generators, y)
    return np.einsum("al,ai->il", coeffs, Iy)


def vertical_covariant_differential(conn_sigma, rep, jet: JetPointY) -> np.ndarray:
    """``D~[i, l] = y^i_l - (A^a_l + A^a_m sigma^m_l) (I_a y)^i``."""
    Ax, As = conn_sigma.at(jet.x, jet.sigma)
    combined = Ax + As @ jet.sigma_jet
    return jet.y_jet - apply_generators(rep, combined, jet.y)


def pullback_connection(conn_sigma, chart: CosetChart, higgs: Section, x, step=DEFAULT_FD_STEP) -> np.ndarray:
    """``B[a, l] = A^a_m(x, h(x)) d_l h^m(x) + A^a_l(x, h(x))``."""
    x = np.asarray(x, dtype=float)
    hx = higgs.value(x)
    if not np.linalg.norm(hx) < chart.chart_radius:
        raise OutsideChart(f"Higgs value {hx} leaves the chart")
    Ax, As = conn_sigma.at(x, hx)
    return As @ higgs.jacobian(x, step) + Ax


def covariant_differential_pullback(B, rep, y, y_jet) -> np.ndarray:
    """Covariant differential of a matter field under the pulled-back connection."""
    return np.asarray(y_jet, dtype=float) - apply_generators(rep, B, np.asarray(y, dtype=float))


def exp_field(alg: LieAlgebraData, exponent: ExprArray) -> Callable:
    """Group-valued field ``x -> exp(phi^p(x) E_p)``."""

    def g(x):
        return matrix_exp(alg.element(exponent.evaluate(x_env(x))))

    return g


def gauge_transform_connection(conn_x, alg: LieAlgebraData, g_field, step=DEFAULT_FD_STEP) -> Callable:
    """Pointwise evaluator ``x -> Ad(g) a + (d_l g) g^-1`` in basis coordinates, shape (n, D).

    ``g_field`` is a callable returning the group element at x, or an ExprArray of
    algebra coordinates that is exponentiated pointwise. ``d_l g`` is a central
    difference of the full matrix.
    """
    g_of = exp_field(alg, g_field) if isinstance(g_field, ExprArray) else g_field

    def transformed(x):
        x = np.asarray(x, dtype=float)
        a = _coefficients(conn_x, x)
        g = g_of(x)
        g_inv = np.linalg.inv(g)
        out = adjoint_of_group_element(g, alg) @ a
        for lam in range(x.size):
            e = np.zeros_like(x)
            e[lam] = step
            dg = (g_of(x + e) - g_of(x - e)) / (2 * step)
            out[:, lam] += alg.coordinates(dg @ g_inv, tol=1e-6)
        return out

    return transformed


class TransformedConnection:
    """Wraps a gauge-transformed evaluator so it can be transformed again."""

    def __init__(self, fn):
        self._fn = fn

    def at(self, x):
        return self._fn(x)


def adapted_gauge(chart: CosetChart, higgs_fn: Callable) -> Callable:
    """``x -> s(h(x))^-1``: moves the Higgs field to the chart origin."""

    def g(x):
        return representative(chart, -np.asarray(higgs_fn(x), dtype=float))

    return g


def h_component_reduced(conn_x, chart: CosetChart, higgs: Section, x, step=DEFAULT_FD_STEP):
    """Split the adapted connection into its h-part ``Abar`` (h_dim, D) and f-part ``Theta`` (F, D)."""
    x = np.asarray(x, dtype=float)
    hx = higgs.value(x)
    if not np.linalg.norm(hx) < chart.chart_radius:
        raise OutsideChart(f"Higgs value {hx} leaves the chart")
    adapted = gauge_transform_connection(conn_x, chart.alg, adapted_gauge(chart, higgs.value), step)(x)
    return adapted[list(chart.split.h_indices)], adapted[list(chart.split.f_indices)]


def theorem1_residual(conn_x, chart: CosetChart, higgs: Section, u_exponent: ExprArray, x, step=DEFAULT_FD_STEP):
    """Compare an H-valued gauge change of the adapted connection with the expected laws.

    ``u(x) = exp(phi^a(x) e_a)`` with ``phi`` h-valued. After ``u``, the h-part must be
    ``Ad_h(u) Abar + (d u) u^-1`` and the f-part ``Ad_f(u) Theta``, where ``Ad_h``,
    ``Ad_f`` are the diagonal blocks of ``Ad(u)``. The left side is one transformation by
    the composite gauge ``u s(h)^-1``, so it shares no differencing with the right side.
    Returns the max abs misfit.
    """
    alg = chart.alg
    h = list(chart.split.h_indices)
    f = list(chart.split.f_indices)
    x = np.asarray(x, dtype=float)
    Abar, Theta = h_component_reduced(conn_x, chart, higgs, x, step)
    u_of = exp_field(alg, u_exponent)
    to_origin = adapted_gauge(chart, higgs.value)
    after = gauge_transform_connection(conn_x, alg, lambda xp: u_of(xp) @ to_origin(xp), step)(x)

    u = u_of(x)
    Ad = adjoint_of_group_element(u, alg)
    u_inv = np.linalg.inv(u)
    mc = np.zeros((alg.dim, x.size))
    for lam in range(x.size):
        e = np.zeros_like(x)
        e[lam] = step
        mc[:, lam] = alg.coordinates((u_of(x + e) - u_of(x - e)) / (2 * step) @ u_inv, tol=1e-6)
    expected_h = Ad[np.ix_(h, h)] @ Abar + mc[h]
    expected_f = Ad[np.ix_(f, f)] @ Theta
    return max(float(np.max(np.abs(after[h] - expected_h))), float(np.max(np.abs(after[f] - expected_f), initial=0.0)))
