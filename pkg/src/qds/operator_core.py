"""Dense linear-algebra primitives on full matrix algebras M_n.

Conventions
-----------
* Matrices are ``numpy.ndarray`` of dtype ``complex128``.
* Vectorization is column stacking (Fortran order): ``vec(E_ij)`` is the unit
  vector at position ``i + j*n``.  With this order ``vec(a @ x @ b)`` equals
  ``kron(b.T, a) @ vec(x)``; every superoperator matrix in the package
  commits to it.
* Hilbert-Schmidt inner product ``<a, b> = tr(a^dagger b)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, InvalidInput, NotAlgebraError

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_PSD = 1e-10
TOL_FAITHFUL = 1e-9
TOL_CLOSURE = 1e-9

__all__ = [
    "DensityState",
    "OperatorSubspace",
    "Superoperator",
    "algebra_closure",
    "as_matrix",
    "center_of",
    "dagger",
    "devectorize",
    "hs_inner",
    "identity_superoperator",
    "is_projection",
    "matrix_units",
    "null_space",
    "pauli",
    "psd_sqrt",
    "random_unitary",
    "superop_from_function",
    "superop_of",
    "support_projection",
    "vectorize",
]


def as_matrix(x, dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a finite square complex matrix."""
    m = np.asarray(x, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {m.shape[0]}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix has non-finite entries")
    return m


def dagger(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.vdot(a, b))


def vectorize(x: np.ndarray) -> np.ndarray:
    """Column-stack ``x`` into a vector of length n**2."""
    return np.asarray(x).reshape(-1, order="F")


def devectorize(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise DimensionMismatch(f"vector of length {v.size} is not n**2")
    return v.reshape((dim, dim), order="F")


def matrix_units(n: int) -> list[np.ndarray]:
    """Orthonormal HS basis {E_ij}, enumerated in column-stacking order."""
    units = []
    for j in range(n):
        for i in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1.0
            units.append(e)
    return units


def pauli(name: str) -> np.ndarray:
    table = {
        "I": [[1, 0], [0, 1]],
        "X": [[0, 1], [1, 0]],
        "Y": [[0, -1j], [1j, 0]],
        "Z": [[1, 0], [0, -1]],
    }
    return np.array(table[name.upper()], dtype=complex)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def psd_sqrt(a: np.ndarray, power: float = 0.5) -> np.ndarray:
    """Real power of a positive definite Hermitian matrix via ``eigh``."""
    w, v = np.linalg.eigh((a + dagger(a)) / 2)
    if power < 0 and w.min() <= 0:
        raise InvalidInput("negative power of a singular matrix")
    w = np.clip(w, 0.0, None)
    return (v * w**power) @ dagger(v)


def null_space(a: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal columns spanning {v : |a v| small}; singular values <= tol count as zero."""
    a = np.atleast_2d(a)
    if a.shape[0] == 0:
        return np.eye(a.shape[1], dtype=complex)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    rank = int(np.sum(s > tol))
    return dagger(vh[rank:])


# ---------------------------------------------------------------------------
# Superoperators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Superoperator:
    """Linear map on M_n stored as an n**2 x n**2 matrix acting on ``vectorize(x)``."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.dim**2, self.dim**2):
            raise DimensionMismatch(f"superoperator for n={self.dim} must be {self.dim**2} square")
        object.__setattr__(self, "matrix", m)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return devectorize(self.matrix @ vectorize(as_matrix(x, self.dim)), self.dim)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        if other.dim != self.dim:
            raise DimensionMismatch("cannot compose superoperators of different dimension")
        return Superoperator(self.dim, self.matrix @ other.matrix)

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues read off the diagonal of the complex Schur form."""
        t, _ = scipy.linalg.schur(self.matrix, output="complex")
        return np.diag(t).copy()

    def invariant_subspace(self, select: Callable[[complex], bool]) -> np.ndarray:
        """Orthonormal basis (columns) of the invariant subspace for the selected eigenvalues."""
        t, z, k = scipy.linalg.schur(self.matrix, output="complex", sort=select)
        return z[:, :k]

    def distance(self, other: "Superoperator") -> float:
        return float(np.linalg.norm(self.matrix - other.matrix, 2))


def identity_superoperator(n: int) -> Superoperator:
    return Superoperator(n, np.eye(n * n, dtype=complex))


def superop_from_function(f: Callable[[np.ndarray], np.ndarray], n: int) -> Superoperator:
    cols = [vectorize(f(e)) for e in matrix_units(n)]
    return Superoperator(n, np.column_stack(cols))


def superop_of(cp_map) -> Superoperator:
    """Superoperator of x -> sum_i l_i x l_i^dagger.

    Accepts any object with a ``kraus`` attribute or a plain sequence of
    Kraus matrices.
    """
    kraus = getattr(cp_map, "kraus", cp_map)
    kraus = [np.asarray(l, dtype=complex) for l in kraus]
    if not kraus:
        raise InvalidInput("empty Kraus family")
    n = kraus[0].shape[0]
    for l in kraus:
        if l.shape != (n, n):
            raise DimensionMismatch("Kraus operators must share one square shape")
    mat = np.zeros((n * n, n * n), dtype=complex)
    for l in kraus:
        mat += np.kron(np.conj(l), l)
    return Superoperator(n, mat)


# ---------------------------------------------------------------------------
# States and projections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityState:
    """Positive trace-one matrix; construction validates within the given tolerances."""

    rho: np.ndarray
    tol_herm: float = TOL_HERM
    tol_trace: float = TOL_TRACE
    tol_psd: float = TOL_PSD
    tol_faithful: float = TOL_FAITHFUL
    eigenvalues: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rho = as_matrix(self.rho)
        if np.linalg.norm(rho - dagger(rho)) > self.tol_herm:
            raise InvalidInput("density matrix is not Hermitian")
        rho = (rho + dagger(rho)) / 2
        if abs(np.trace(rho) - 1) > self.tol_trace:
            raise InvalidInput(f"density matrix has trace {np.trace(rho).real:.3g}")
        w = np.linalg.eigvalsh(rho)
        if w.min() < -self.tol_psd:
            raise InvalidInput(f"density matrix has negative eigenvalue {w.min():.3g}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "eigenvalues", w)

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityState":
        return cls(np.eye(n, dtype=complex) / n)

    @classmethod
    def pure(cls, psi) -> "DensityState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def faithful(self) -> bool:
        return bool(self.eigenvalues.min() > self.tol_faithful)

    def expect(self, x: np.ndarray) -> complex:
        return complex(np.trace(self.rho @ x))

    def __call__(self, x: np.ndarray) -> complex:
        return self.expect(x)


def support_projection(state: DensityState, tol: float = TOL_PSD) -> np.ndarray:
    """Spectral projection of ``state.rho`` onto eigenvalues > tol."""
    w, v = np.linalg.eigh(state.rho)
    keep = v[:, w > tol]
    return keep @ dagger(keep)


def is_projection(p: np.ndarray, tol: float = 1e-10) -> bool:
    p = np.asarray(p, dtype=complex)
    return bool(np.linalg.norm(p - dagger(p)) <= tol and np.linalg.norm(p @ p - p) <= tol)


# ---------------------------------------------------------------------------
# Operator subspaces and *-algebras
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OperatorSubspace:
    """Subspace of M_n given by an HS-orthonormal basis.

    ``basis`` has shape (r, n, n).  Membership is decided by the norm of the
    HS-orthogonal projection residual.
    """

    ambient_dim: int
    basis: np.ndarray
    is_algebra: bool = False

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex).reshape(-1, self.ambient_dim, self.ambient_dim)
        object.__setattr__(self, "basis", b)

    @classmethod
    def span(cls, mats: Iterable[np.ndarray], n: int, tol: float = TOL_CLOSURE) -> "OperatorSubspace":
        vecs = [vectorize(np.asarray(m, dtype=complex)) for m in mats]
        if not vecs:
            return cls(n, np.zeros((0, n, n), dtype=complex))
        return cls.from_columns(np.column_stack(vecs), n, tol)

    @classmethod
    def from_columns(cls, cols: np.ndarray, n: int, tol: float = TOL_CLOSURE) -> "OperatorSubspace":
        """Orthonormalize the vectorized columns ``cols`` (shape (n**2, k))."""
        if cols.shape[1] == 0:
            return cls(n, np.zeros((0, n, n), dtype=complex))
        u, s, _ = np.linalg.svd(cols, full_matrices=False)
        rank = int(np.sum(s > tol * max(1.0, s[0])))
        return cls(n, np.array([devectorize(u[:, i], n) for i in range(rank)]))

    @classmethod
    def full(cls, n: int) -> "OperatorSubspace":
        return cls(n, np.array(matrix_units(n)), is_algebra=True)

    @classmethod
    def scalars(cls, n: int) -> "OperatorSubspace":
        return cls(n, np.eye(n, dtype=complex)[None] / np.sqrt(n), is_algebra=True)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def columns(self) -> np.ndarray:
        """Basis as an (n**2, r) matrix of vectorized elements."""
        return self.basis.transpose(0, 2, 1).reshape(self.dim, -1).T

    def projector(self) -> np.ndarray:
        c = self.columns
        return c @ dagger(c)

    def project(self, x: np.ndarray) -> np.ndarray:
        c = self.columns
        return devectorize(c @ (dagger(c) @ vectorize(x)), self.ambient_dim)

    def residual(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, x: np.ndarray, tol: float = TOL_CLOSURE) -> bool:
        return self.residual(x) <= tol * max(1.0, float(np.linalg.norm(x)))

    def contains_subspace(self, other: "OperatorSubspace", tol: float = TOL_CLOSURE) -> bool:
        return all(self.residual(b) <= tol for b in other.basis)

    def same_as(self, other: "OperatorSubspace", tol: float = TOL_CLOSURE) -> bool:
        return self.dim == other.dim and self.contains_subspace(other, tol)

    def adjoint(self) -> "OperatorSubspace":
        return OperatorSubspace(self.ambient_dim, dagger(self.basis), self.is_algebra)

    def intersect(self, other: "OperatorSubspace", tol: float = TOL_CLOSURE) -> "OperatorSubspace":
        """Intersection via the null space of [A, -B] on coefficient space."""
        if self.dim == 0 or other.dim == 0:
            return OperatorSubspace(self.ambient_dim, np.zeros((0,) + self.basis.shape[1:], dtype=complex))
        a, b = self.columns, other.columns
        ns = null_space(np.hstack([a, -b]), tol)
        return OperatorSubspace.from_columns(a @ ns[: a.shape[1]], self.ambient_dim, tol)

    def closure_residual(self) -> float:
        """Max projection residual of products and adjoints of basis elements."""
        n = self.ambient_dim
        eye = np.eye(n, dtype=complex)
        worst = self.residual(eye)
        for a in self.basis:
            worst = max(worst, self.residual(dagger(a)))
            for b in self.basis:
                worst = max(worst, self.residual(a @ b))
        return worst

    def check_algebra(self, tol: float = TOL_CLOSURE) -> bool:
        return self.closure_residual() <= tol


def algebra_closure(generators: Sequence[np.ndarray], tol: float = TOL_CLOSURE, n: int | None = None) -> OperatorSubspace:
    """Smallest unital *-subalgebra of M_n containing ``generators``."""
    gens = [np.asarray(g, dtype=complex) for g in generators]
    if n is None:
        if not gens:
            raise InvalidInput("ambient dimension unknown: pass n or at least one generator")
        n = gens[0].shape[0]
    for g in gens:
        if g.shape != (n, n):
            raise DimensionMismatch("generators must share the ambient dimension")
    seed = [np.eye(n, dtype=complex)] + gens + [dagger(g) for g in gens]
    space = OperatorSubspace.span(seed, n, tol)
    new = list(space.basis)
    while new:
        candidates = []
        for a in new:
            for b in space.basis:
                candidates.extend((a @ b, b @ a))
        vecs = [vectorize(b) for b in space.basis]
        added = []
        for c in candidates + [dagger(c) for c in candidates]:
            r = c - space.project(c)
            if np.linalg.norm(r) > tol * max(1.0, np.linalg.norm(c)):
                vecs.append(vectorize(c))
                added.append(c)
                space = OperatorSubspace.from_columns(np.column_stack(vecs), n, tol)
                vecs = [vectorize(b) for b in space.basis]
        if space.dim >= n * n:
            break
        new = added
    return OperatorSubspace(n, space.basis, is_algebra=True)


def center_of(alg: OperatorSubspace, tol: float = TOL_CLOSURE) -> OperatorSubspace:
    """Center of a *-algebra, computed as the null space of the stacked commutator map."""
    if not alg.check_algebra(tol):
        raise NotAlgebraError("input subspace is not closed under products and adjoints")
    r = alg.dim
    blocks = []
    for b in alg.basis:
        cols = [vectorize(a @ b - b @ a) for a in alg.basis]
        blocks.append(np.column_stack(cols))
    coeffs = null_space(np.vstack(blocks), tol)
    elems = np.tensordot(coeffs.T, alg.basis, axes=(1, 0)) if coeffs.size else np.zeros((0, alg.ambient_dim, alg.ambient_dim))
    return OperatorSubspace(alg.ambient_dim, OperatorSubspace.span(list(elems), alg.ambient_dim, tol).basis, is_algebra=True)
