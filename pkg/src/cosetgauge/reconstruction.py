"""Recover the f-part Theta of a connection from jets of (a, sigma) and build the
universal vertical differential of matter fields.

Work happens in the adapted gauge, where the Higgs jet sits at the chart origin.
There the system ``Theta^p_l J_p^m = D^m_l`` has the coordinate projection as
``J`` and the minimum-norm solution puts Theta in f only.
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import kernels
from .connections import (
    Section,
    TransformedConnection,
    apply_generators,
    gauge_transform_connection,
    h_component_reduced,
)
from .coset import DEFAULT_FD_STEP, CosetChart, fundamental_matrix, representative
from .errors import Inconsistent, ValidationError
from .lie import adjoint_of_group_element

CONSISTENCY_TOL = 1e-8


@dataclass(frozen=True)
class ConfigPoint:
    """A point of the joint jet space of connections, Higgs fields and matter fields."""

    x: np.ndarray  # (D,)
    a: np.ndarray  # (n, D)
    a_jet: np.ndarray  # (n, D, D), a_jet[r, l, mu] = d_l a^r_mu
    sigma: np.ndarray  # (F,)
    sigma_jet: np.ndarray  # (F, D)
    y: np.ndarray  # (k,)
    y_jet: np.ndarray  # (k, D)

    def __post_init__(self):
        for name in ("x", "a", "a_jet", "sigma", "sigma_jet", "y", "y_jet"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        D = self.x.size
        n = self.a.shape[0]
        F, k = self.sigma.size, self.y.size
        expected = {
            "a": (n, D),
            "a_jet": (n, D, D),
            "sigma_jet": (F, D),
            "y_jet": (k, D),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValidationError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def base_dim(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class ThetaSolution:
    theta: np.ndarray  # (n, D)
    residual: np.ndarray  # (D,)
    rank: int


def solve_theta(chart: CosetChart, point: ConfigPoint, step=DEFAULT_FD_STEP, tol=CONSISTENCY_TOL) -> ThetaSolution:
    """Minimum-norm ``Theta`` with ``Theta^p_l J_p^m(sigma) = D^m_l`` for every base direction.

    ``D = sigma_jet - a^p J_p`` is formed with the same ``J`` matrix, so only the
    least-squares step contributes to the residual. SVD-based ``lstsq`` reports the rank.
    """
    chart.check_inside(point.sigma)
    J, _ = fundamental_matrix(chart, point.sigma, step=step)  # (n, F)
    D = point.sigma_jet - J.T @ point.a
    theta, _, rank, _ = np.linalg.lstsq(J.T, D, rcond=None)
    residual = np.linalg.norm(J.T @ theta - D, axis=0)
    worst = float(np.max(residual, initial=0.0))
    if not worst <= tol:
        raise Inconsistent(f"Theta system is inconsistent at sigma={point.sigma} (residual {worst:.3e})", worst)
    return ThetaSolution(theta, residual, int(rank))


def _linear_extension(point: ConfigPoint) -> Callable:
    def h(xp):
        return point.sigma + point.sigma_jet @ (np.asarray(xp, dtype=float) - point.x)

    return h


def _adapted_connection_linear(chart: CosetChart, point: ConfigPoint) -> np.ndarray:
    """``Ad(g) a + (d g) g^-1`` for ``g = s(-h_lin)``; exact derivative of the exponential."""
    alg = chart.alg
    X = -kernels.combine(point.sigma, chart._Ef)
    g = representative(chart, -point.sigma)
    g_inv = np.linalg.inv(g)
    out = adjoint_of_group_element(g, alg) @ point.a
    for lam in range(point.base_dim):
        dX = -kernels.combine(np.ascontiguousarray(point.sigma_jet[:, lam]), chart._Ef)
        out[:, lam] += alg.coordinates(kernels.expm_frechet(X, dX) @ g_inv, tol=1e-6)
    return out


def adapted_config(chart: CosetChart, point: ConfigPoint, extension: Optional[Callable] = None,
                   step=DEFAULT_FD_STEP) -> ConfigPoint:
    """Gauge-transport the point so that the Higgs jet sits at ``sigma = 0, sigma_jet = 0``.

    The gauge is ``g(x') = s(h(x'))^-1`` where ``h`` extends the first jet; by default
    the linear extension, for which ``(d g) g^-1`` is computed exactly. Any other
    ``extension`` (a callable with the same first jet) goes through central differences.
    ``a_jet`` is carried along by differencing the transformed linearized connection.
    """
    chart.check_inside(point.sigma)
    h_fn = extension if extension is not None else _linear_extension(point)
    alg = chart.alg

    def g_of(xp):
        return representative(chart, -np.asarray(h_fn(xp), dtype=float))

    if extension is None:
        a_new = _adapted_connection_linear(chart, point)
    else:
        a_new = gauge_transform_connection(point.a, alg, g_of, step)(point.x)

    def a_lin(xp):
        return point.a + np.einsum("rlm,l->rm", point.a_jet, np.asarray(xp, dtype=float) - point.x)

    transformed = gauge_transform_connection(TransformedConnection(a_lin), alg, g_of, step)
    D = point.base_dim
    a_jet_new = np.zeros_like(point.a_jet)
    for lam in range(D):
        e = np.zeros(D)
        e[lam] = step
        a_jet_new[:, lam, :] = (transformed(point.x + e) - transformed(point.x - e)) / (2 * step)
    return replace(
        point,
        a=a_new,
        a_jet=a_jet_new,
        sigma=np.zeros_like(point.sigma),
        sigma_jet=np.zeros_like(point.sigma_jet),
    )


@dataclass(frozen=True)
class Reconstruction:
    adapted: ConfigPoint
    theta: ThetaSolution
    combined: np.ndarray  # (h_dim, D): a^a_l - Theta^a_l, h rows only
    vertical_differential: np.ndarray  # (k, D)


def reconstruct(chart: CosetChart, point: ConfigPoint, theta_shift=None, extension=None,
                step=DEFAULT_FD_STEP) -> Reconstruction:
    """Adapted point, Theta, the combined h coefficient and ``D~`` in one pass.

    ``theta_shift`` (n, D) is added to the solved Theta; it exists for sensitivity controls.
    """
    adapted = adapted_config(chart, point, extension=extension, step=step)
    sol = solve_theta(chart, adapted, step=step)
    theta = sol.theta if theta_shift is None else sol.theta + np.asarray(theta_shift, dtype=float)
    h = list(chart.split.h_indices)
    combined = adapted.a[h] - theta[h]
    Dt = adapted.y_jet - apply_generators(chart.rep, combined, adapted.y)
    return Reconstruction(adapted, replace(sol, theta=theta), combined, Dt)


def universal_vertical_differential(chart: CosetChart, rep, point: ConfigPoint, theta_shift=None,
                                    extension=None, step=DEFAULT_FD_STEP) -> np.ndarray:
    """``D~^i_l = y^i_l - (a^a_l - Theta^a_l)(I_a y)^i`` evaluated in the adapted gauge."""
    if rep is not chart.rep and rep.generators.shape != chart.rep.generators.shape:
        raise ValidationError("representation does not match the chart")
    return reconstruct(chart, point, theta_shift=theta_shift, extension=extension, step=step).vertical_differential


def config_from_fields(conn_x, chart: CosetChart, higgs: Section, matter: Section, x,
                       step=DEFAULT_FD_STEP) -> ConfigPoint:
    """Sample the jets of a connection, a Higgs field and a matter field at ``x``."""
    x = np.asarray(x, dtype=float)
    a = conn_x.at(x)
    D = x.size
    a_jet = np.zeros((a.shape[0], D, D))
    for lam in range(D):
        e = np.zeros(D)
        e[lam] = step
        a_jet[:, lam, :] = (conn_x.at(x + e) - conn_x.at(x - e)) / (2 * step)
    return ConfigPoint(x, a, a_jet, higgs.value(x), higgs.jacobian(x, step), matter.value(x), matter.jacobian(x, step))


def reduced_vertical_differential(conn_x, chart: CosetChart, higgs: Section, matter: Section, x,
                                  step=DEFAULT_FD_STEP) -> np.ndarray:
    """Covariant differential of the matter field under the h-part of the adapted connection."""
    Abar, _ = h_component_reduced(conn_x, chart, higgs, x, step)
    return matter.jacobian(x, step) - apply_generators(chart.rep, Abar, matter.value(x))


def theta_affinity_residual(chart: CosetChart, point: ConfigPoint, delta, t=1.0, step=DEFAULT_FD_STEP) -> float:
    """Max second difference of Theta along ``sigma_jet + s t delta`` for ``s`` in {-1, 0, 1}."""
    thetas = []
    for s in (-1.0, 0.0, 1.0):
        p = replace(point, sigma_jet=point.sigma_jet + s * t * np.asarray(delta, dtype=float))
        thetas.append(solve_theta(chart, adapted_config(chart, p, step=step), step=step).theta)
    return float(np.max(np.abs(thetas[0] - 2 * thetas[1] + thetas[2])))


def null_direction(chart: CosetChart, sigma, step=DEFAULT_FD_STEP) -> Optional[np.ndarray]:
    """A unit vector ``v`` with ``v^p J_p(sigma) = 0``, or None when ``J`` has full row rank n."""
    J, _ = fundamental_matrix(chart, sigma, step=step)
    _, s, vt = np.linalg.svd(J.T)
    rank = int(np.sum(s > 1e-10 * max(s.max(initial=0.0), 1.0)))
    if rank >= J.shape[0]:
        return None
    return vt[rank]


__all__ = [
    "ConfigPoint",
    "Reconstruction",
    "ThetaSolution",
    "adapted_config",
    "config_from_fields",
    "null_direction",
    "reconstruct",
    "reduced_vertical_differential",
    "solve_theta",
    "theta_affinity_residual",
    "universal_vertical_differential",
]
