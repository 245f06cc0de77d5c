"""Infinitesimal gauge transformations of the composite bundle Y -> Sigma -> X,
their first jet prolongation, and Lie derivatives of matter Lagrangians.

A gauge parameter ``xi(x)`` acts on (sigma, y) by
``v = xi^p J_p^m d_m + theta^a(x, sigma) (I_a y)^i d_i``, where ``theta`` is the h-part
of the coset factorization velocity. The same automorphism of P -> Sigma moves the
connection ``omega`` used to build the vertical differential:

    delta omega = d Theta + [Theta, omega] - L_V omega,

with ``Theta = theta^a I_a`` and ``V = v^m d_m``. For a Lagrangian that factors
through the vertical differential the Lie derivative includes that variation.
"""

from dataclasses import dataclass

import numpy as np

from .connections import JetPointY, apply_generators, vertical_covariant_differential, x_env
from .coset import DEFAULT_FD_STEP, CosetChart, fundamental_vector
from .expr import ExprArray, variables_of
from .errors import ValidationError

FACTORED = "factored"
RAW = "raw"


@dataclass(frozen=True, eq=False)
class GaugeParameter:
    """Algebra-valued gauge parameter ``xi^p(x)``."""

    components: ExprArray

    def at(self, x) -> np.ndarray:
        return self.components.evaluate(x_env(x))


@dataclass(frozen=True, eq=False)
class MatterLagrangian:
    """``kind='factored'``: L(y_i, k_i_l) of formal variables with ``k = D~``.
    ``kind='raw'``: L(s_m, y_i, sj_m_l, yj_i_l) of jet coordinates."""

    kind: str
    body: object  # FieldExpr
    fibre_dim: int
    base_dim: int
    f_labels: tuple

    def __post_init__(self):
        allowed = self.allowed_variables()
        extra = variables_of(self.body) - allowed
        if self.kind not in (FACTORED, RAW):
            raise ValidationError(f"unknown Lagrangian kind {self.kind!r}")
        if extra:
            raise ValidationError(f"{self.kind} Lagrangian uses undeclared variables {sorted(extra)}")

    def allowed_variables(self) -> frozenset:
        k, D = self.fibre_dim, self.base_dim
        names = {f"y{i}" for i in range(1, k + 1)}
        if self.kind == FACTORED:
            names |= {f"k{i}_{l}" for i in range(1, k + 1) for l in range(1, D + 1)}
        else:
            names |= {f"s{m}" for m in self.f_labels}
            names |= {f"sj{m}_{l}" for m in self.f_labels for l in range(1, D + 1)}
            names |= {f"yj{i}_{l}" for i in range(1, k + 1) for l in range(1, D + 1)}
        return frozenset(names)

    def formal(self, y, kappa) -> float:
        env = {f"y{i + 1}": float(v) for i, v in enumerate(y)}
        for (i, l), v in np.ndenumerate(kappa):
            env[f"k{i + 1}_{l + 1}"] = float(v)
        return self.body._eval(env)

    def on_jet(self, jet: JetPointY, conn_sigma=None, rep=None) -> float:
        if self.kind == FACTORED:
            return self.formal(jet.y, vertical_covariant_differential(conn_sigma, rep, jet))
        env = {f"y{i + 1}": float(v) for i, v in enumerate(jet.y)}
        env.update({f"s{m}": float(v) for m, v in zip(self.f_labels, jet.sigma)})
        for (m, l), v in np.ndenumerate(jet.sigma_jet):
            env[f"sj{self.f_labels[m]}_{l + 1}"] = float(v)
        for (i, l), v in np.ndenumerate(jet.y_jet):
            env[f"yj{i + 1}_{l + 1}"] = float(v)
        return self.body._eval(env)


@dataclass(frozen=True)
class GeneratorValue:
    v_sigma: np.ndarray  # (F,)
    v_y: np.ndarray  # (k,)
    dv_sigma: np.ndarray  # (F, D) total derivatives d_l v^m
    dv_y: np.ndarray  # (k, D)


def _xi_value(xi, x):
    return xi.at(x) if hasattr(xi, "at") else np.asarray(xi, dtype=float)


def generator(chart: CosetChart, xi, x, sigma, y, step=DEFAULT_FD_STEP):
    """``(v_sigma, v_y)`` of the infinitesimal gauge transformation at one point."""
    J, theta = fundamental_vector(chart, _xi_value(xi, x), sigma, step=step)
    return J, chart.rep.act(theta, np.asarray(y, dtype=float))


@dataclass(frozen=True)
class _GeneratorJet:
    """Generator data at a jet point plus its partial derivatives (central differences)."""

    J: np.ndarray  # (F,)
    theta: np.ndarray  # (H,)
    dJ_dx: np.ndarray  # (F, D)
    dtheta_dx: np.ndarray  # (H, D)
    dJ_ds: np.ndarray  # (F, F)
    dtheta_ds: np.ndarray  # (H, F)
    value: GeneratorValue


def _generator_jet(chart: CosetChart, xi, jet: JetPointY, step) -> _GeneratorJet:
    x = np.asarray(jet.x, dtype=float)
    sigma = np.asarray(jet.sigma, dtype=float)
    y = np.asarray(jet.y, dtype=float)
    D, F, k = x.size, sigma.size, y.size
    rep = chart.rep

    xi0 = _xi_value(xi, x)
    J0, th0 = fundamental_vector(chart, xi0, sigma, step=step)

    dJ_dx = np.zeros((F, D))
    dth_dx = np.zeros((chart.h_dim, D))
    for lam in range(D):
        e = np.zeros(D)
        e[lam] = step
        Jp, tp = fundamental_vector(chart, _xi_value(xi, x + e), sigma, step=step)
        Jm, tm = fundamental_vector(chart, _xi_value(xi, x - e), sigma, step=step)
        dJ_dx[:, lam] = (Jp - Jm) / (2 * step)
        dth_dx[:, lam] = (tp - tm) / (2 * step)

    dJ_ds = np.zeros((F, F))
    dth_ds = np.zeros((chart.h_dim, F))
    for m in range(F):
        e = np.zeros(F)
        e[m] = step
        Jp, tp = fundamental_vector(chart, xi0, sigma + e, step=step)
        Jm, tm = fundamental_vector(chart, xi0, sigma - e, step=step)
        dJ_ds[:, m] = (Jp - Jm) / (2 * step)
        dth_ds[:, m] = (tp - tm) / (2 * step)

    # v_y = theta^a I_a y: its x- and sigma-partials follow from those of theta;
    # the y-partials are differenced on the same map.
    dvy_dx = np.einsum("al,aij,j->il", dth_dx, rep.generators, y)
    dvy_ds = np.einsum("am,aij,j->im", dth_ds, rep.generators, y)
    dvy_dy = np.zeros((k, k))
    for j in range(k):
        e = np.zeros(k)
        e[j] = step
        dvy_dy[:, j] = (rep.act(th0, y + e) - rep.act(th0, y - e)) / (2 * step)

    dv_sigma = dJ_dx + dJ_ds @ jet.sigma_jet
    dv_y = dvy_dx + dvy_ds @ jet.sigma_jet + dvy_dy @ jet.y_jet
    value = GeneratorValue(J0, rep.act(th0, y), dv_sigma, dv_y)
    return _GeneratorJet(J0, th0, dJ_dx, dth_dx, dJ_ds, dth_ds, value)


def prolong(chart: CosetChart, xi, jet: JetPointY, step=DEFAULT_FD_STEP) -> GeneratorValue:
    """First jet prolongation: total derivatives ``d_l = d/dx^l + sigma^m_l d_m + y^i_l d_i``."""
    return _generator_jet(chart, xi, jet, step).value


def _jet_vector(jet: JetPointY):
    return np.concatenate([jet.sigma, jet.y, jet.sigma_jet.ravel(), jet.y_jet.ravel()])


def _jet_from_vector(template: JetPointY, v) -> JetPointY:
    F, k = template.sigma.size, template.y.size
    FD, kD = template.sigma_jet.size, template.y_jet.size
    return JetPointY(
        template.x,
        v[:F],
        v[F : F + k],
        v[F + k : F + k + FD].reshape(template.sigma_jet.shape),
        v[F + k + FD : F + k + FD + kD].reshape(template.y_jet.shape),
    )


def _gradient(fn, v, step):
    g = np.zeros_like(v)
    for i in range(v.size):
        e = np.zeros_like(v)
        e[i] = step
        g[i] = (fn(v + e) - fn(v - e)) / (2 * step)
    return g


def connection_variation(chart: CosetChart, conn_sigma, gj: _GeneratorJet, jet: JetPointY, step) -> np.ndarray:
    """``delta omega`` contracted with the jet, as (k, k, D): ``delta Omega_l + delta Omega_m sigma^m_l``."""
    I = chart.rep.generators
    x, sigma = jet.x, jet.sigma
    F, D = sigma.size, x.size
    Ax, As = conn_sigma.at(x, sigma)
    Om_x = np.einsum("al,aij->lij", Ax, I)  # (D, k, k)
    Om_s = np.einsum("am,aij->mij", As, I)  # (F, k, k)
    Th = np.einsum("a,aij->ij", gj.theta, I)
    dTh_x = np.einsum("al,aij->lij", gj.dtheta_dx, I)
    dTh_s = np.einsum("am,aij->mij", gj.dtheta_ds, I)
    dOm_x = np.zeros((F, D) + Th.shape)  # d_k Omega_l
    dOm_s = np.zeros((F, F) + Th.shape)  # d_k Omega_m
    for kk in range(F):
        dAx, dAs = conn_sigma.sigma_derivative(x, sigma, kk, step)
        dOm_x[kk] = np.einsum("al,aij->lij", dAx, I)
        dOm_s[kk] = np.einsum("am,aij->mij", dAs, I)
    v = gj.J

    def bracket(A, B):
        return A @ B - B @ A

    delta_x = np.empty((D,) + Th.shape)
    for lam in range(D):
        lie = np.einsum("k,kij->ij", v, dOm_x[:, lam]) + np.einsum("kij,k->ij", Om_s, gj.dJ_dx[:, lam])
        delta_x[lam] = dTh_x[lam] + bracket(Th, Om_x[lam]) - lie
    delta_s = np.empty((F,) + Th.shape)
    for m in range(F):
        lie = np.einsum("k,kij->ij", v, dOm_s[:, m]) + np.einsum("kij,k->ij", Om_s, gj.dJ_ds[:, m])
        delta_s[m] = dTh_s[m] + bracket(Th, Om_s[m]) - lie
    return np.transpose(delta_x, (1, 2, 0)) + np.einsum("mij,ml->ijl", delta_s, jet.sigma_jet)


def lie_derivative(L: MatterLagrangian, conn_sigma, rep, chart: CosetChart, xi, jet: JetPointY,
                   step=DEFAULT_FD_STEP, include_connection=True) -> float:
    """Lie derivative of the matter Lagrangian along the prolonged gauge generator.

    Jet part: ``v^m dL/dsigma^m + v^i dL/dy^i + d_l v^m dL/dsigma^m_l + d_l v^i dL/dy^i_l``
    with every partial a central difference of L as a function of jet coordinates.
    For a factored Lagrangian the gauge variation of the connection enters through
    ``k = D~`` and is added unless ``include_connection`` is False.
    """
    gj = _generator_jet(chart, xi, jet, step)
    g = gj.value
    v0 = _jet_vector(jet)
    flow = np.concatenate([g.v_sigma, g.v_y, g.dv_sigma.ravel(), g.dv_y.ravel()])
    grad = _gradient(lambda v: L.on_jet(_jet_from_vector(jet, v), conn_sigma, rep), v0, step)
    total = float(grad @ flow)
    if L.kind == FACTORED and include_connection:
        kappa = vertical_covariant_differential(conn_sigma, rep, jet)
        dL_dk = _gradient(lambda kv: L.formal(jet.y, kv.reshape(kappa.shape)), kappa.ravel(), step).reshape(kappa.shape)
        delta = connection_variation(chart, conn_sigma, gj, jet, step)
        dk = -np.einsum("ijl,j->il", delta, jet.y)
        total += float(np.sum(dL_dk * dk))
    return total


def formal_lie_derivative(L: MatterLagrangian, conn_sigma, rep, chart: CosetChart, xi, jet: JetPointY,
                          step=DEFAULT_FD_STEP) -> float:
    """Induced variation on the formal variables: ``v^i dL/dy^i + (d_j v^i) k^j_l dL/dk^i_l``."""
    if L.kind != FACTORED:
        raise ValidationError("formal variables exist only for factored Lagrangians")
    J, theta = fundamental_vector(chart, _xi_value(xi, jet.x), jet.sigma, step=step)
    kappa = vertical_covariant_differential(conn_sigma, rep, jet)
    vy = rep.act(theta, jet.y)
    dv = np.tensordot(theta, rep.generators, axes=1)
    flow_k = dv @ kappa
    fn = lambda v: L.formal(v[: jet.y.size], v[jet.y.size :].reshape(kappa.shape))
    grad = _gradient(fn, np.concatenate([jet.y, kappa.ravel()]), step)
    return float(grad @ np.concatenate([vy, flow_k.ravel()]))


__all__ = [
    "FACTORED",
    "RAW",
    "GaugeParameter",
    "GeneratorValue",
    "MatterLagrangian",
    "apply_generators",
    "connection_variation",
    "formal_lie_derivative",
    "generator",
    "lie_derivative",
    "prolong",
]
