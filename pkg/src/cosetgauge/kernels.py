"""Numeric inner loops: matrix exponential, its Frechet derivative, the
Gauss-Newton solve behind the coset factorization, and the Jacobi sum.

Every ``py_*`` function is plain numpy restricted to what numba's nopython mode
accepts; the public names are the same functions passed through
:func:`cosetgauge._backend.jit`.
"""

import math

import numpy as np

from ._backend import HAS_NUMBA, jit

# Pade [13/13] coefficients and the 1-norm bound from Higham (2005).
_PADE13 = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)
_THETA13 = 5.371920351148152


def py_expm(A):
    n = A.shape[0]
    A = np.ascontiguousarray(A)
    norm1 = np.max(np.sum(np.abs(A), axis=0))
    if norm1 == 0.0:
        return np.eye(n)
    s = 0
    if norm1 > _THETA13:
        s = int(math.ceil(math.log2(norm1 / _THETA13)))
    As = A / (2.0**s)
    b = _PADE13
    ident = np.eye(n)
    A2 = As @ As
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = As @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    R = np.linalg.solve(V - U, V + U)
    R = np.ascontiguousarray(R)
    for _ in range(s):
        R = R @ R
    return R


expm = jit(py_expm)


def py_expm_frechet(X, E):
    # d/dt exp(X + tE) at t=0, read off the block exponential [[X, E], [0, X]].
    n = X.shape[0]
    big = np.zeros((2 * n, 2 * n))
    big[:n, :n] = X
    big[n:, n:] = X
    big[:n, n:] = E
    return np.ascontiguousarray(expm(big)[:n, n:])


expm_frechet = jit(py_expm_frechet)


def py_combine(coeffs, basis):
    out = np.zeros((basis.shape[1], basis.shape[2]))
    for p in range(basis.shape[0]):
        out += coeffs[p] * basis[p]
    return out


combine = jit(py_combine)


def py_factor_coset(M, Ef, Eh, sigma0, theta0, max_iter, resid_tol):
    """Solve ``M = exp(sigma.Ef) exp(theta.Eh)`` for (sigma, theta).

    Damped Gauss-Newton with exact Jacobian columns from Frechet derivatives.
    Iterates past ``resid_tol`` until the step stalls so the result sits at
    rounding level. Returns (sigma, theta, residual, iterations, converged).
    """
    F = Ef.shape[0]
    H = Eh.shape[0]
    d = M.shape[0]
    n = F + H
    sigma = sigma0.copy()
    theta = theta0.copy()

    X = combine(sigma, Ef)
    Y = combine(theta, Eh)
    S = expm(X)
    Hm = expm(Y)
    R = S @ Hm - M
    resid = math.sqrt(np.sum(R * R))
    scale = 1.0 + math.sqrt(np.sum(M * M))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jac = np.empty((d * d, n))
        for m in range(F):
            col = expm_frechet(X, Ef[m]) @ Hm
            jac[:, m] = col.reshape(d * d)
        for a in range(H):
            col = S @ expm_frechet(Y, Eh[a])
            jac[:, F + a] = col.reshape(d * d)
        rhs = -R.reshape(d * d)
        step = np.linalg.lstsq(jac, rhs, -1.0)[0]
        step_norm = math.sqrt(np.sum(step * step))

        t = 1.0
        accepted = False
        for _ in range(30):
            sig_new = sigma + t * step[:F]
            th_new = theta + t * step[F:]
            X_new = combine(sig_new, Ef)
            Y_new = combine(th_new, Eh)
            S_new = expm(X_new)
            H_new = expm(Y_new)
            R_new = S_new @ H_new - M
            res_new = math.sqrt(np.sum(R_new * R_new))
            if res_new <= resid or res_new <= 1e-15 * scale:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # No descent left: at rounding level or stuck.
            converged = resid <= resid_tol
            break
        sigma = sig_new
        theta = th_new
        X = X_new
        Y = Y_new
        S = S_new
        Hm = H_new
        R = R_new
        resid = res_new
        xnorm = math.sqrt(np.sum(sigma * sigma) + np.sum(theta * theta))
        # Quadratic convergence: a step this small leaves an error far below rounding.
        if resid <= resid_tol and t * step_norm <= 1e-10 * (1.0 + xnorm):
            converged = True
            break
    if resid <= resid_tol:
        converged = True
    return sigma, theta, resid, it, converged


factor_coset = jit(py_factor_coset)


def py_jacobi_loops(c):
    n = c.shape[0]
    worst = 0.0
    for p in range(n):
        for q in range(n):
            for r in range(n):
                for u in range(n):
                    acc = 0.0
                    for s in range(n):
                        acc += c[p, q, s] * c[s, r, u] + c[q, r, s] * c[s, p, u] + c[r, p, s] * c[s, q, u]
                    if abs(acc) > worst:
                        worst = abs(acc)
    return worst


def py_jacobi_vectorized(c):
    t = (
        np.einsum("pqs,sru->pqru", c, c)
        + np.einsum("qrs,spu->pqru", c, c)
        + np.einsum("rps,squ->pqru", c, c)
    )
    return float(np.max(np.abs(t))) if t.size else 0.0


if HAS_NUMBA:
    jacobi_residual = jit(py_jacobi_loops)
else:
    jacobi_residual = py_jacobi_vectorized
