"""Finite-dimensional real Lie algebras of matrix groups.

Indices are 0-based internally. Scenario files and reports use 1-based labels.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DegenerateKilling, DependentBasis, SpanViolation, ValidationError

EXACT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LieAlgebraData:
    """Basis matrices ``E_p`` and structure constants ``[E_p, E_q] = c[p, q, r] E_r``."""

    matrices: np.ndarray
    structure_constants: np.ndarray
    basis_labels: tuple = ()
    name: str = ""

    def __post_init__(self):
        mats = np.ascontiguousarray(self.matrices, dtype=float)
        c = np.ascontiguousarray(self.structure_constants, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValidationError("matrices must have shape (n, d, d)")
        n = mats.shape[0]
        if c.shape != (n, n, n):
            raise ValidationError(f"structure constants must have shape ({n}, {n}, {n})")
        mats.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "structure_constants", c)
        if not self.basis_labels:
            object.__setattr__(self, "basis_labels", tuple(f"e{p + 1}" for p in range(n)))

    @property
    def dim(self) -> int:
        return self.matrices.shape[0]

    @property
    def matrix_size(self) -> int:
        return self.matrices.shape[1]

    @cached_property
    def _flat_pinv(self):
        flat = self.matrices.reshape(self.dim, -1)
        return np.linalg.pinv(flat)

    def coordinates(self, M, tol=1e-9):
        """Least-squares coordinates of ``M`` in the basis; raise if ``M`` is off the span."""
        M = np.asarray(M, dtype=float)
        coords = M.reshape(-1) @ self._flat_pinv
        resid = float(np.linalg.norm(M - np.tensordot(coords, self.matrices, axes=1)))
        if resid > tol * (1.0 + np.linalg.norm(M)):
            raise SpanViolation(f"matrix leaves the algebra span (residual {resid:.3e})", resid)
        return coords

    def element(self, coords):
        """The matrix ``sum_p coords[p] E_p``."""
        return np.tensordot(np.asarray(coords, dtype=float), self.matrices, axes=1)

    def bracket(self, u, v):
        return np.einsum("p,q,pqr->r", u, v, self.structure_constants)

    @cached_property
    def ad_matrices(self):
        # (ad_p)[r, s] = c[p, s, r]
        return np.transpose(self.structure_constants, (0, 2, 1)).copy()

    def ad(self, u):
        return np.tensordot(np.asarray(u, dtype=float), self.ad_matrices, axes=1)

    def antisymmetry_residual(self) -> float:
        c = self.structure_constants
        return float(np.max(np.abs(c + np.transpose(c, (1, 0, 2))))) if c.size else 0.0

    def jacobi_residual(self) -> float:
        return float(kernels.jacobi_residual(self.structure_constants))

    def realization_residual(self) -> float:
        E = self.matrices
        comm = np.einsum("pij,qjk->pqik", E, E) - np.einsum("qij,pjk->pqik", E, E)
        expected = np.einsum("pqr,rik->pqik", self.structure_constants, E)
        return float(np.max(np.abs(comm - expected))) if comm.size else 0.0


def structure_constants_from_matrices(matrices, tol=EXACT_TOL):
    """Solve ``[E_p, E_q] = c[p, q, r] E_r`` by least squares.

    Returns ``(c, residual)``, where residual is the largest commutator misfit.
    """
    E = np.asarray(matrices, dtype=float)
    n = E.shape[0]
    flat = E.reshape(n, -1)
    gram = flat @ flat.T
    if n and np.linalg.cond(gram) > 1e12:
        raise DependentBasis("basis matrices are linearly dependent (singular Gram matrix)")
    comm = np.einsum("pij,qjk->pqik", E, E) - np.einsum("qij,pjk->pqik", E, E)
    rhs = comm.reshape(n * n, -1)
    sol, *_ = np.linalg.lstsq(flat.T, rhs.T, rcond=None)
    c = sol.T.reshape(n, n, n)
    misfit = rhs - c.reshape(n * n, n) @ flat
    residual = float(np.max(np.abs(misfit))) if misfit.size else 0.0
    if residual > tol * (1.0 + float(np.max(np.abs(rhs), initial=0.0))):
        raise SpanViolation(f"commutators leave the span of the basis (residual {residual:.3e})", residual)
    return c, residual


def algebra_from_matrices(matrices, labels=(), name="", tol=EXACT_TOL) -> LieAlgebraData:
    c, _ = structure_constants_from_matrices(matrices, tol=tol)
    # Snap rounding noise so exactly representable constants (integers, halves, ...) stay exact.
    snapped = np.round(c * 1024.0) / 1024.0
    c = np.where(np.abs(c - snapped) < 1e-13, snapped, c)
    return LieAlgebraData(np.asarray(matrices, dtype=float), c, tuple(labels), name)


def killing_form(alg: LieAlgebraData) -> np.ndarray:
    ad = alg.ad_matrices
    return np.einsum("prs,qsr->pq", ad, ad)


@dataclass(frozen=True)
class ReductiveSplit:
    h_indices: tuple
    f_indices: tuple

    def __post_init__(self):
        object.__setattr__(self, "h_indices", tuple(int(i) for i in self.h_indices))
        object.__setattr__(self, "f_indices", tuple(int(i) for i in self.f_indices))
        if set(self.h_indices) & set(self.f_indices):
            raise ValidationError("h_indices and f_indices overlap")

    @property
    def h_dim(self) -> int:
        return len(self.h_indices)

    @property
    def f_dim(self) -> int:
        return len(self.f_indices)

    @classmethod
    def from_h(cls, dim, h_indices):
        h = tuple(sorted(int(i) for i in h_indices))
        return cls(h, tuple(i for i in range(dim) if i not in h))


@dataclass(frozen=True)
class Violation:
    condition: str  # "[h,h]<h", "[f,h]<f" or "[f,f]<h"
    p: int
    q: int
    r: int
    value: float

    def describe(self, labels) -> str:
        return f"[{labels[self.p]},{labels[self.q]}] has component {self.value:+.6g} on {labels[self.r]}"


@dataclass(frozen=True)
class ReductiveReport:
    violations: tuple
    subalgebra: bool
    f_h_in_f: bool
    f_f_in_h: bool

    @property
    def valid(self) -> bool:
        return not self.violations


def check_reductive(alg: LieAlgebraData, split: ReductiveSplit, tol=EXACT_TOL) -> ReductiveReport:
    n = alg.dim
    if sorted(split.h_indices + split.f_indices) != list(range(n)):
        raise ValidationError("h_indices and f_indices must partition the basis")
    c = alg.structure_constants
    h, f = split.h_indices, split.f_indices
    found = []
    for cond, left, right, target in (
        ("[h,h]<h", h, h, f),
        ("[f,h]<f", f, h, h),
        ("[f,f]<h", f, f, f),
    ):
        for p in left:
            for q in right:
                if cond != "[f,h]<f" and q <= p:
                    continue
                for r in target:
                    if abs(c[p, q, r]) > tol:
                        found.append(Violation(cond, p, q, r, float(c[p, q, r])))
    conds = {v.condition for v in found}
    return ReductiveReport(tuple(found), "[h,h]<h" not in conds, "[f,h]<f" not in conds, "[f,f]<h" not in conds)


@dataclass(frozen=True)
class ComplementSplit:
    """Adapted basis (h first, then its Killing complement) with the resulting split."""

    algebra: LieAlgebraData
    split: ReductiveSplit
    change_of_basis: np.ndarray  # columns: new basis vectors in old coordinates
    report: ReductiveReport = field(compare=False)


def orthogonal_complement_split(alg: LieAlgebraData, h_indices: Sequence[int], tol=1e-10) -> ComplementSplit:
    """Split off the Killing-orthogonal complement of the subalgebra ``span{e_a : a in h_indices}``.

    Each ``e_j`` outside ``h`` is replaced by ``e_j`` minus its Killing projection onto ``h``.
    """
    n = alg.dim
    h = [int(i) for i in h_indices]
    kappa = killing_form(alg)
    k_hh = kappa[np.ix_(h, h)]
    if not h or abs(np.linalg.det(k_hh)) <= tol * max(1.0, float(np.max(np.abs(kappa), initial=0.0))) ** len(h):
        raise DegenerateKilling("Killing form restricted to h is degenerate")
    rest = [j for j in range(n) if j not in h]
    basis = np.eye(n)
    cols = [basis[:, a] for a in h]
    k_inv = np.linalg.inv(k_hh)
    for j in rest:
        proj = k_inv @ kappa[h, j]
        v = basis[:, j].copy()
        v[h] -= proj
        cols.append(v)
    T = np.column_stack(cols)
    new_mats = np.einsum("pk,pij->kij", T, alg.matrices)
    new_alg = algebra_from_matrices(new_mats, name=alg.name + "/adapted")
    split = ReductiveSplit(tuple(range(len(h))), tuple(range(len(h), n)))
    return ComplementSplit(new_alg, split, T, check_reductive(new_alg, split))


def matrix_exp(element) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a degree-13 Pade approximant."""
    A = np.ascontiguousarray(element, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix_exp needs finite entries")
    return kernels.expm(A)


def adjoint_of_group_element(g, alg: LieAlgebraData, tol=1e-9) -> np.ndarray:
    """``Ad(g)`` with ``g E_p g^-1 = Ad[r, p] E_r``."""
    g = np.asarray(g, dtype=float)
    ginv = np.linalg.inv(g)
    conj = np.einsum("ij,pjk,kl->pil", g, alg.matrices, ginv)
    return np.column_stack([alg.coordinates(conj[p], tol=tol) for p in range(alg.dim)])


@dataclass(frozen=True, eq=False)
class HRepresentation:
    """Matrices ``I_a`` acting on the fibre, one per h index (same order as ``h_indices``)."""

    generators: np.ndarray

    def __post_init__(self):
        gens = np.ascontiguousarray(self.generators, dtype=float)
        if gens.ndim != 3 or gens.shape[1] != gens.shape[2]:
            raise ValidationError("representation generators must have shape (h_dim, k, k)")
        gens.setflags(write=False)
        object.__setattr__(self, "generators", gens)

    @property
    def fibre_dim(self) -> int:
        return self.generators.shape[1]

    def act(self, coeffs, y):
        """``sum_a coeffs[a] I_a y``."""
        return np.tensordot(np.asarray(coeffs, dtype=float), self.generators, axes=1) @ y

    def commutation_residual(self, alg: LieAlgebraData, split: ReductiveSplit) -> float:
        h = list(split.h_indices)
        if len(h) != self.generators.shape[0]:
            raise ValidationError(f"representation has {self.generators.shape[0]} generators, h has {len(h)}")
        I = self.generators
        comm = np.einsum("aij,bjk->abik", I, I) - np.einsum("bij,ajk->abik", I, I)
        c_hh = alg.structure_constants[np.ix_(h, h, h)]
        expected = np.einsum("abc,cik->abik", c_hh, I)
        return float(np.max(np.abs(comm - expected))) if comm.size else 0.0


def _levi_civita():
    eps = np.zeros((3, 3, 3))
    for (i, j, k), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (1, 0, 2): -1, (2, 1, 0): -1, (0, 2, 1): -1}.items():
        eps[i, j, k] = s
    return eps


def so3() -> LieAlgebraData:
    """Rotation generators ``(E_p)_{jk} = -eps_{pjk}``; ``[E_1, E_2] = E_3``."""
    return algebra_from_matrices(-_levi_civita(), labels=("e1", "e2", "e3"), name="so3")


def complex_to_real(Z) -> np.ndarray:
    """Real 2d x 2d embedding ``X + iY -> [[X, -Y], [Y, X]]``."""
    Z = np.asarray(Z, dtype=complex)
    X, Y = Z.real, Z.imag
    return np.block([[X, -Y], [Y, X]])


def su2() -> LieAlgebraData:
    """``-(i/2) sigma_k`` in the real 4x4 embedding; same constants as so(3)."""
    pauli = [
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]
    mats = np.array([complex_to_real(-0.5j * s) for s in pauli])
    return algebra_from_matrices(mats, labels=("e1", "e2", "e3"), name="su2")


def so4() -> LieAlgebraData:
    """so(4) with the so(3) rotating the first three axes listed first."""
    def gen(i, j):
        m = np.zeros((4, 4))
        m[i, j], m[j, i] = -1.0, 1.0
        return m

    mats = [gen(1, 2), gen(2, 0), gen(0, 1), gen(0, 3), gen(1, 3), gen(2, 3)]
    return algebra_from_matrices(np.array(mats), labels=("L1", "L2", "L3", "K1", "K2", "K3"), name="so4")


def abelian(n=2) -> LieAlgebraData:
    mats = np.array([np.diag(np.eye(n)[p]) for p in range(n)])
    return algebra_from_matrices(mats, name=f"abelian{n}")


BUILTIN_ALGEBRAS = {"so3": so3, "su2": su2, "so4": so4, "abelian": abelian}
