"""Local geometry of G/H in exponential coordinates through the complement f.

A coset point is ``s(sigma) H`` with ``s(sigma) = exp(sum_m sigma^m E_m)``; G acts
on the left. ``wigner_decompose`` factors ``g s(sigma) = s(sigma') h`` and is the
chart form of the induced action on ``(G x V)/H``.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NoConvergence, OutsideChart, ValidationError
from .lie import HRepresentation, LieAlgebraData, ReductiveSplit, check_reductive, matrix_exp

DEFAULT_FD_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class CosetChart:
    alg: LieAlgebraData
    split: ReductiveSplit
    rep: HRepresentation
    chart_radius: float = 0.0

    def __post_init__(self):
        report = check_reductive(self.alg, self.split)
        if not (report.subalgebra and report.f_h_in_f):
            bad = report.violations[0].describe(self.alg.basis_labels)
            raise ValidationError(f"split is not reductive: {bad}")
        if self.rep.generators.shape[0] != self.split.h_dim:
            raise ValidationError("representation must have one generator per h index")
        if self.chart_radius <= 0.0:
            object.__setattr__(self, "chart_radius", default_chart_radius(self.alg, self.split))
        f, h = list(self.split.f_indices), list(self.split.h_indices)
        object.__setattr__(self, "_Ef", np.ascontiguousarray(self.alg.matrices[f]))
        object.__setattr__(self, "_Eh", np.ascontiguousarray(self.alg.matrices[h]))

    @property
    def f_dim(self) -> int:
        return self.split.f_dim

    @property
    def h_dim(self) -> int:
        return self.split.h_dim

    def check_inside(self, sigma):
        r = float(np.linalg.norm(sigma))
        if not r < self.chart_radius:
            raise OutsideChart(f"|sigma| = {r:.6g} is not inside the chart radius {self.chart_radius:.6g}")


def default_chart_radius(alg: LieAlgebraData, split: ReductiveSplit) -> float:
    """``0.9 pi / max_m ||ad_{e_m}||`` over the f basis."""
    norms = [np.linalg.norm(alg.ad_matrices[m], 2) for m in split.f_indices]
    top = max(norms, default=0.0)
    return float(0.9 * np.pi / top) if top > 0 else float("inf")


def representative(chart: CosetChart, sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    chart.check_inside(sigma)
    return matrix_exp(kernels.combine(sigma, chart._Ef))


@dataclass(frozen=True)
class WignerResult:
    sigma_new: np.ndarray
    h_element: np.ndarray
    h_coords: np.ndarray  # h_element = exp(h_coords . E_h)
    residual: float
    iterations: int


def wigner_decompose(chart: CosetChart, g, sigma, max_iter=64, tol=1e-10, guess=None) -> WignerResult:
    """Factor ``g s(sigma) = s(sigma') h`` with ``h = exp(theta . E_h)`` in H.

    Solved by damped Gauss-Newton in (sigma', theta), started from ``(sigma, 0)``
    unless ``guess`` is given.
    """
    sigma = np.asarray(sigma, dtype=float)
    M = np.ascontiguousarray(np.asarray(g, dtype=float) @ representative(chart, sigma))
    if guess is None:
        s0, t0 = sigma.copy(), np.zeros(chart.h_dim)
    else:
        s0, t0 = (np.asarray(v, dtype=float).copy() for v in guess)
    s_new, theta, resid, iters, ok = kernels.factor_coset(M, chart._Ef, chart._Eh, s0, t0, max_iter, tol)
    if not ok:
        raise NoConvergence(f"coset factorization did not converge in {max_iter} iterations (residual {resid:.3e})")
    chart.check_inside(s_new)
    h = matrix_exp(kernels.combine(theta, chart._Eh))
    return WignerResult(s_new, h, theta, float(resid), int(iters))


def fundamental_vector(chart: CosetChart, xi, sigma, step=DEFAULT_FD_STEP):
    """Velocity of ``sigma`` and of the h-factor under ``exp(t xi)`` at ``t = 0``.

    Returns ``(J_value, theta)``: ``J_value = xi^p J_p(sigma)`` in f coordinates and
    ``theta`` the h coordinates of ``dh/dt``. Both by central differences of
    :func:`wigner_decompose`.
    """
    xi = np.asarray(xi, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    chart.check_inside(sigma)
    if not np.any(xi):
        return np.zeros(chart.f_dim), np.zeros(chart.h_dim)
    X = chart.alg.element(xi)
    plus = wigner_decompose(chart, matrix_exp(step * X), sigma)
    minus = wigner_decompose(chart, matrix_exp(-step * X), sigma)
    J = (plus.sigma_new - minus.sigma_new) / (2 * step)
    theta = (plus.h_coords - minus.h_coords) / (2 * step)
    return J, theta


def fundamental_matrix(chart: CosetChart, sigma, step=DEFAULT_FD_STEP):
    """``J[p, m] = J_p^m(sigma)`` and ``T[p, a] = theta^a_{e_p}(sigma)`` for every basis direction."""
    n = chart.alg.dim
    J = np.zeros((n, chart.f_dim))
    T = np.zeros((n, chart.h_dim))
    for p in range(n):
        J[p], T[p] = fundamental_vector(chart, np.eye(n)[p], sigma, step=step)
    return J, T


def fundamental_vector_algebraic(chart: CosetChart, xi, sigma):
    """Closed-form velocities from ``Ad(s^-1) xi = sum_m v^m s^-1 d_m s + theta``.

    Independent cross-check of :func:`fundamental_vector`; exact Frechet derivatives,
    no differencing.
    """
    sigma = np.asarray(sigma, dtype=float)
    alg = chart.alg
    X = kernels.combine(sigma, chart._Ef)
    s_inv = matrix_exp(-X)
    target = alg.coordinates(s_inv @ alg.element(xi) @ np.linalg.inv(s_inv))
    cols = [alg.coordinates(s_inv @ kernels.expm_frechet(X, chart._Ef[m])) for m in range(chart.f_dim)]
    cols += [np.eye(alg.dim)[a] for a in chart.split.h_indices]
    sol = np.linalg.solve(np.column_stack(cols), target)
    return sol[: chart.f_dim], sol[chart.f_dim:]


def rep_exp(chart: CosetChart, theta) -> np.ndarray:
    return matrix_exp(np.tensordot(np.asarray(theta, dtype=float), chart.rep.generators, axes=1))
