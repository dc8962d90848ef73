"""Quantum Markov semigroups on M_n: invariant states, KMS dual, the algebras
F, G and G_0, conditional expectations and the ergodic / mixing / Kolmogorov
classification.

Maps are in the Heisenberg picture, ``tau(x) = sum_i l_i x l_i^dagger`` with
``sum_i l_i l_i^dagger = I``.  The predual (Schrodinger) action is
``rho -> sum_i l_i^dagger rho l_i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg

from . import kernels
from .errors import (
    DisagreementError,
    DimensionMismatch,
    InvalidInput,
    NonFaithfulStateError,
    NonInvariantStateError,
    NotSubharmonicError,
    VerificationError,
)
from .operator_core import (
    DensityState,
    OperatorSubspace,
    Superoperator,
    as_matrix,
    dagger,
    devectorize,
    matrix_units,
    null_space,
    psd_sqrt,
    superop_of,
    support_projection,
    vectorize,
)

TOL_UNITAL = 1e-9
TOL_PERIPHERAL = 1e-8
TOL_INVARIANT = 1e-9
TOL_VERIFY = 1e-8
MAX_CLIPPED_MASS = 1e-6


@dataclass(frozen=True)
class CPMap:
    """Unital completely positive map given by a Kraus family."""

    kraus: np.ndarray
    tol: float = TOL_UNITAL

    def __post_init__(self):
        ks = [as_matrix(l) for l in self.kraus]
        if not ks:
            raise InvalidInput("a CP map needs at least one Kraus operator")
        n = ks[0].shape[0]
        if any(l.shape != (n, n) for l in ks):
            raise DimensionMismatch("Kraus operators must share one square shape")
        arr = np.ascontiguousarray(np.array(ks))
        err = np.linalg.norm(np.einsum("aij,akj->ik", arr, arr.conj()) - np.eye(n))
        if err > self.tol:
            raise InvalidInput(f"map is not unital: |sum l l^dagger - I| = {err:.3g}")
        object.__setattr__(self, "kraus", arr)

    @property
    def dim(self) -> int:
        return self.kraus.shape[1]

    @property
    def rank(self) -> int:
        return self.kraus.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return apply(self, x)

    def predual(self, rho: np.ndarray) -> np.ndarray:
        return kernels.kraus_apply(dagger(self.kraus), rho)

    def power(self, x: np.ndarray, n: int) -> np.ndarray:
        return kernels.kraus_power_apply(self.kraus, as_matrix(x, self.dim), n)

    def compose(self, other: "CPMap") -> "CPMap":
        """self o other, i.e. x -> self(other(x))."""
        return CPMap([a @ b for a in self.kraus for b in other.kraus])

    @cached_property
    def superop(self) -> Superoperator:
        return superop_of(self)

    @cached_property
    def predual_superop(self) -> Superoperator:
        return superop_of(dagger(self.kraus))

    def choi(self) -> np.ndarray:
        return choi_matrix(self.superop)

    def is_completely_positive(self, tol: float = 1e-10) -> bool:
        return bool(np.linalg.eigvalsh(self.choi()).min() >= -tol)


def choi_matrix(s: Superoperator) -> np.ndarray:
    """sum_ij E_ij (x) T(E_ij); PSD exactly when T is completely positive."""
    n = s.dim
    c = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1
            c[i * n : (i + 1) * n, j * n : (j + 1) * n] = s(e)
    return (c + dagger(c)) / 2


def kraus_from_superop(s: Superoperator, tol: float = 1e-10, unital_tol: float = TOL_UNITAL) -> CPMap:
    """Minimal Kraus family read off the Choi matrix (eigenvalues <= tol dropped)."""
    n = s.dim
    w, v = np.linalg.eigh(choi_matrix(s))
    if w.min() < -max(tol, 1e-8):
        raise VerificationError("superoperator is not completely positive", {"choi_min_eig": float(w.min())})
    kraus = [np.sqrt(wk) * v[:, k].reshape(n, n).T for k, wk in enumerate(w) if wk > tol]
    return CPMap(kraus, tol=unital_tol)


def minimal_kraus(cp_map: CPMap, tol: float = 1e-10) -> CPMap:
    return kraus_from_superop(cp_map.superop, tol, unital_tol=max(cp_map.tol, TOL_UNITAL))


# ---------------------------------------------------------------------------
# Lindblad generators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LindbladGenerator:
    """L(x) = i[H, x] + sum_k (L_k^dagger x L_k - 1/2 {L_k^dagger L_k, x})."""

    hamiltonian: np.ndarray
    jumps: Sequence[np.ndarray] = ()
    tol: float = 1e-10

    def __post_init__(self):
        h = as_matrix(self.hamiltonian)
        if np.linalg.norm(h - dagger(h)) > self.tol:
            raise InvalidInput("Hamiltonian is not Hermitian")
        jumps = tuple(as_matrix(l, h.shape[0]) for l in self.jumps)
        object.__setattr__(self, "hamiltonian", (h + dagger(h)) / 2)
        object.__setattr__(self, "jumps", jumps)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        h = self.hamiltonian
        out = 1j * (h @ x - x @ h)
        for l in self.jumps:
            ll = dagger(l) @ l
            out = out + dagger(l) @ x @ l - 0.5 * (ll @ x + x @ ll)
        return out

    @cached_property
    def superop(self) -> Superoperator:
        n = self.dim
        eye = np.eye(n)
        h = self.hamiltonian
        m = 1j * (np.kron(eye, h) - np.kron(h.T, eye))
        for l in self.jumps:
            ll = dagger(l) @ l
            m = m + np.kron(l.T, dagger(l)) - 0.5 * (np.kron(eye, ll) + np.kron(ll.T, eye))
        return Superoperator(n, m)

    def check(self, tol: float = 1e-10) -> dict:
        n = self.dim
        rng = np.random.default_rng(0)
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        return {
            "unital": float(np.linalg.norm(self(np.eye(n)))),
            "hermiticity": float(np.linalg.norm(self(dagger(x)) - dagger(self(x)))),
        }


def lindblad_exponential(gen: LindbladGenerator, t: float, tol: float = 1e-9) -> Superoperator:
    """exp(t L) as a superoperator; unitality and complete positivity are verified."""
    if t < 0:
        raise InvalidInput("t must be non-negative")
    m = scipy.linalg.expm(t * gen.superop.matrix)
    if not np.all(np.isfinite(m)):
        raise VerificationError("matrix exponential did not converge", {"t": t})
    s = Superoperator(gen.dim, m)
    n = gen.dim
    unital = float(np.linalg.norm(s(np.eye(n)) - np.eye(n)))
    choi_min = float(np.linalg.eigvalsh(choi_matrix(s)).min())
    if unital > tol or choi_min < -tol * max(1.0, np.linalg.norm(m)):
        raise VerificationError(
            "exp(tL) is not a unital CP map", {"unital": unital, "choi_min_eig": choi_min}
        )
    return s


def lindblad_channel(gen: LindbladGenerator, t: float) -> CPMap:
    return kraus_from_superop(lindblad_exponential(gen, t))


# ---------------------------------------------------------------------------
# Basic actions
# ---------------------------------------------------------------------------


def apply(cp_map: CPMap, x: np.ndarray) -> np.ndarray:
    """sum_i l_i x l_i^dagger."""
    return kernels.kraus_apply(cp_map.kraus, as_matrix(x, cp_map.dim))


def invariance_residual(cp_map: CPMap, state: DensityState) -> float:
    return float(np.linalg.norm(cp_map.predual(state.rho) - state.rho))


def _require_invariant(cp_map: CPMap, state: DensityState, tol: float):
    if state.dim != cp_map.dim:
        raise DimensionMismatch("state and map act on different dimensions")
    r = invariance_residual(cp_map, state)
    if r > tol:
        raise NonInvariantStateError(f"state is not invariant (residual {r:.3g})")


def _require_faithful(state: DensityState):
    if not state.faithful:
        raise NonFaithfulStateError(
            f"state is not faithful (min eigenvalue {state.eigenvalues.min():.3g}); reduce to its support first"
        )


# ---------------------------------------------------------------------------
# Invariant states
# ---------------------------------------------------------------------------


def invariant_states(cp_map: CPMap, tol: float = TOL_INVARIANT) -> list[DensityState]:
    """Density matrices spanning the fixed space of the predual map.

    Each Hermitian fixed element is split into positive and negative parts,
    which are again fixed for a trace-preserving positive map; a maximal
    linearly independent family of the normalized parts is returned.
    """
    n = cp_map.dim
    s = cp_map.predual_superop.matrix
    ns = null_space(s - np.eye(n * n), max(tol, 1e-12) * 10)
    if ns.shape[1] == 0:
        raise VerificationError("eigensolver found no fixed point of the predual map")
    herm = []
    for v in ns.T:
        x = devectorize(v, n)
        herm.append((x + dagger(x)) / 2)
        herm.append((x - dagger(x)) / 2j)
    candidates = []
    for h in herm:
        w, u = np.linalg.eigh(h)
        for sign in (1, -1):
            part = w * sign
            keep = part > tol
            if not keep.any():
                continue
            rho = (u[:, keep] * part[keep]) @ dagger(u[:, keep])
            tr = np.trace(rho).real
            if tr <= tol:
                continue
            rho = rho / tr
            if np.linalg.norm(cp_map.predual(rho) - rho) > 1e3 * tol + MAX_CLIPPED_MASS:
                continue
            candidates.append(rho)
    chosen: list[np.ndarray] = []
    vecs = np.zeros((n * n, 0), dtype=complex)
    for rho in candidates:
        trial = np.column_stack([vecs, vectorize(rho)])
        if np.linalg.matrix_rank(trial, tol=1e-8) > vecs.shape[1]:
            vecs = trial
            chosen.append(rho)
        if len(chosen) == ns.shape[1]:
            break
    if not chosen:
        raise VerificationError("no invariant density matrix could be extracted")
    return [DensityState(r, tol_trace=1e-8, tol_herm=1e-8, tol_psd=1e-8) for r in chosen]


def invariant_state(cp_map: CPMap, tol: float = TOL_INVARIANT) -> DensityState:
    """Barycenter of the extracted invariant states: the invariant state of maximal support."""
    states = invariant_states(cp_map, tol)
    rho = sum(s.rho for s in states) / len(states)
    return DensityState(rho, tol_trace=1e-8, tol_herm=1e-8, tol_psd=1e-8)


def has_faithful_invariant_state(cp_map: CPMap, tol: float = TOL_INVARIANT) -> bool:
    return invariant_state(cp_map, tol).faithful


# ---------------------------------------------------------------------------
# KMS dual
# ---------------------------------------------------------------------------


def sigma_half(x: np.ndarray, state: DensityState) -> np.ndarray:
    """rho^{-1/2} x rho^{1/2}."""
    return psd_sqrt(state.rho, -0.5) @ x @ psd_sqrt(state.rho, 0.5)


def sigma_minus_half(y: np.ndarray, state: DensityState) -> np.ndarray:
    """rho^{1/2} y rho^{-1/2}."""
    return psd_sqrt(state.rho, 0.5) @ y @ psd_sqrt(state.rho, -0.5)


def kms_dual(cp_map: CPMap, state: DensityState, tol: float = TOL_INVARIANT) -> CPMap:
    """KMS adjoint with Kraus operators rho^{-1/2} l_i^dagger rho^{1/2}.

    Satisfies phi0(sigma_half(x) tau(y)) = phi0(dual(x) sigma_minus_half(y)).
    """
    _require_faithful(state)
    _require_invariant(cp_map, state, tol)
    r_half = psd_sqrt(state.rho, 0.5)
    r_mhalf = psd_sqrt(state.rho, -0.5)
    kraus = [r_mhalf @ dagger(l) @ r_half for l in cp_map.kraus]
    cond = float(state.eigenvalues.max() / state.eigenvalues.min())
    return CPMap(kraus, tol=max(cp_map.tol, tol * cond))


def kms_residual(cp_map: CPMap, dual: CPMap, state: DensityState, basis: Sequence[np.ndarray] | None = None) -> float:
    """max over basis pairs of |phi0(sigma_half(x) tau(y)) - phi0(dual(x) sigma_minus_half(y))|."""
    n = cp_map.dim
    basis = np.array(matrix_units(n) if basis is None else basis)
    rho = state.rho
    r_half = psd_sqrt(rho, 0.5)
    r_mhalf = psd_sqrt(rho, -0.5)
    left = np.array([rho @ r_mhalf @ x @ r_half for x in basis])
    right_y = np.array([cp_map(y) for y in basis])
    lhs = np.einsum("iab,jba->ij", left, right_y)
    dual_x = np.array([rho @ dual(x) for x in basis])
    sig_y = np.array([r_half @ y @ r_mhalf for y in basis])
    rhs = np.einsum("iab,jba->ij", dual_x, sig_y)
    return float(np.abs(lhs - rhs).max())


# ---------------------------------------------------------------------------
# Multiplicative domain, G, G_0
# ---------------------------------------------------------------------------


def stinespring_isometry(cp_map: CPMap) -> np.ndarray:
    """V: C^n -> C^n (x) C^m, V xi = sum_i (l_i^dagger xi) (x) e_i, so V^dagger (x (x) I) V = tau(x)."""
    m = cp_map.rank
    eye = np.eye(m)
    return sum(np.kron(dagger(l), eye[:, [i]]) for i, l in enumerate(cp_map.kraus))


def multiplicative_domain(cp_map: CPMap, tol: float = TOL_VERIFY) -> OperatorSubspace:
    """Two-sided multiplicative domain of a single map.

    With the Stinespring isometry V, tau(x^dagger x) - tau(x)^dagger tau(x)
    = B^dagger B for B = (1 - V V^dagger)(x (x) 1) V, so the defect vanishes
    exactly on the kernel of the linear map x -> B.
    """
    n, m = cp_map.dim, cp_map.rank
    v = stinespring_isometry(cp_map)
    q = np.eye(n * m) - v @ dagger(v)
    cols = [(q @ np.kron(e, np.eye(m)) @ v).ravel() for e in matrix_units(n)]
    right = OperatorSubspace.from_columns(null_space(np.column_stack(cols), tol), n, tol)
    dom = right.intersect(right.adjoint(), tol)
    dom = OperatorSubspace(n, dom.basis, is_algebra=True)
    res = dom.closure_residual()
    if res > 10 * tol:
        raise VerificationError("multiplicative domain is not a *-algebra", {"closure": res})
    return dom


def peripheral_subspace(cp_map: CPMap, tol_peripheral: float = TOL_PERIPHERAL) -> OperatorSubspace:
    basis = cp_map.superop.invariant_subspace(lambda z: abs(z) >= 1 - tol_peripheral)
    return OperatorSubspace.from_columns(basis, cp_map.dim)


def modular_commutator(x: np.ndarray, state: DensityState) -> np.ndarray:
    """[log rho, x], the generator of the modular group acting on x."""
    w, v = np.linalg.eigh(state.rho)
    log_rho = (v * np.log(w)) @ dagger(v)
    return log_rho @ x - x @ log_rho


def algebra_G(
    cp_map: CPMap,
    state: DensityState,
    tol: float = TOL_VERIFY,
    tol_peripheral: float = TOL_PERIPHERAL,
) -> OperatorSubspace:
    """Maximal subalgebra on which tau is multiplicative and commutes with the modular group.

    Computed as the span of eigenvectors with unimodular eigenvalues, then
    verified; a failed verification raises with the residuals.
    """
    _require_faithful(state)
    _require_invariant(cp_map, state, TOL_INVARIANT)
    g = peripheral_subspace(cp_map, tol_peripheral)
    dual = kms_dual(cp_map, state)
    res = {
        "closure": g.closure_residual(),
        "dual_inverse": max((np.linalg.norm(dual(cp_map(b)) - b) for b in g.basis), default=0.0),
        "modular": max(
            (
                np.linalg.norm(cp_map(modular_commutator(b, state)) - modular_commutator(cp_map(b), state))
                for b in g.basis
            ),
            default=0.0,
        ),
        "multiplicative": max(
            (np.linalg.norm(cp_map(dagger(b) @ b) - dagger(cp_map(b)) @ cp_map(b)) for b in g.basis), default=0.0
        ),
    }
    res = {k: float(v) for k, v in res.items()}
    if max(res.values()) > tol:
        raise VerificationError("peripheral eigenspace failed the G verification", res)
    return OperatorSubspace(g.ambient_dim, g.basis, is_algebra=True)


def algebra_G_iterative(cp_map: CPMap, state: DensityState, tol: float = 1e-8) -> OperatorSubspace:
    """G = intersection over k of ker(dual^k tau^k - id), by direct iteration."""
    n = cp_map.dim
    s = cp_map.superop.matrix
    d = kms_dual(cp_map, state).superop.matrix
    space = OperatorSubspace.full(n)
    sk = np.eye(n * n, dtype=complex)
    dk = np.eye(n * n, dtype=complex)
    for _ in range(n * n + 1):
        sk = s @ sk
        dk = d @ dk
        kern = OperatorSubspace.from_columns(null_space(dk @ sk - np.eye(n * n), tol), n, tol)
        space = space.intersect(kern, tol)
    return OperatorSubspace(n, space.basis, is_algebra=True)


def image_subspace(cp_map: CPMap, space: OperatorSubspace, tol: float = TOL_VERIFY) -> OperatorSubspace:
    return OperatorSubspace.span([cp_map(b) for b in space.basis], space.ambient_dim, tol)


def algebra_G0(cp_map: CPMap, state: DensityState, tol: float = TOL_VERIFY) -> OperatorSubspace:
    """Intersection of the images tau^k(G); the chain decreases and stabilizes."""
    g = algebra_G(cp_map, state, tol)
    n = cp_map.dim
    current = g
    stable = 0
    while stable < n * n:
        nxt = current.intersect(image_subspace(cp_map, current, tol), tol)
        stable = stable + 1 if nxt.dim == current.dim else 0
        current = nxt
    dual = kms_dual(cp_map, state)
    res = {
        "invariance": float(max((current.residual(cp_map(b)) for b in current.basis), default=0.0)),
        "dual_tau": float(max((np.linalg.norm(dual(cp_map(b)) - b) for b in current.basis), default=0.0)),
        "tau_dual": float(max((np.linalg.norm(cp_map(dual(b)) - b) for b in current.basis), default=0.0)),
    }
    if image_subspace(cp_map, current, tol).dim != current.dim or max(res.values()) > tol:
        raise VerificationError("tau does not act as an automorphism of G0", res)
    return OperatorSubspace(n, current.basis, is_algebra=True)


# ---------------------------------------------------------------------------
# Conditional expectation
# ---------------------------------------------------------------------------


def conditional_expectation(alg: OperatorSubspace, state: DensityState, tol: float = TOL_VERIFY) -> Superoperator:
    """State-preserving conditional expectation onto a modular-invariant *-subalgebra.

    Realized as the orthogonal projection for <a, b> = tr(rho a^dagger b).
    """
    _require_faithful(state)
    n = alg.ambient_dim
    if state.dim != n:
        raise DimensionMismatch("state and algebra act on different dimensions")
    modular = max((alg.residual(modular_commutator(b, state)) for b in alg.basis), default=0.0)
    if modular > tol * max(1.0, float(np.abs(np.log(state.eigenvalues)).max())):
        raise VerificationError("algebra is not invariant under the modular group", {"modular": float(modular)})
    b = alg.columns
    metric = np.kron(state.rho.T, np.eye(n))
    gram = dagger(b) @ metric @ b
    e = Superoperator(n, b @ np.linalg.solve(gram, dagger(b) @ metric))
    eye = np.eye(n)
    rng = np.random.default_rng(12345)
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    res = {
        "unital": float(np.linalg.norm(e(eye) - eye)),
        "idempotent": float(np.linalg.norm(e.matrix @ e.matrix - e.matrix)),
        "positive": float(max(0.0, -np.linalg.eigvalsh(e(dagger(x) @ x)).min())),
        "state_preserving": float(abs(state.expect(e(x)) - state.expect(x))),
    }
    if max(res.values()) > tol * max(1.0, np.linalg.norm(x) ** 2):
        raise VerificationError("projection is not a conditional expectation", res)
    return e


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------


def is_subharmonic(cp_map: CPMap, p: np.ndarray, tol: float = 1e-10) -> bool:
    diff = cp_map(p) - p
    return bool(np.linalg.eigvalsh((diff + dagger(diff)) / 2).min() >= -tol)


def range_basis(p: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the range of a projection."""
    w, v = np.linalg.eigh((p + dagger(p)) / 2)
    return v[:, w > 0.5]


def reduced_semigroup(cp_map: CPMap, p: np.ndarray, tol: float = 1e-10) -> CPMap:
    """Corner map x -> p tau(p x p) p written on range(p) with Kraus {Q^dagger l_i Q}."""
    p = as_matrix(p, cp_map.dim)
    if not is_subharmonic(cp_map, p, tol):
        raise NotSubharmonicError("tau(p) >= p fails")
    q = range_basis(p)
    return CPMap([dagger(q) @ l @ q for l in cp_map.kraus], tol=max(cp_map.tol, 1e3 * tol))


def reduced_state(state: DensityState, p: np.ndarray) -> DensityState:
    q = range_basis(p)
    rho = dagger(q) @ state.rho @ q
    return DensityState(rho / np.trace(rho).real, tol_trace=1e-8)


def subharmonic_limit(
    cp_map: CPMap, p: np.ndarray, n_max: int = 100_000, tol: float = 1e-8
) -> tuple[np.ndarray, bool]:
    """Monotone limit of tau^k(p) and whether it equals the identity within tol."""
    n = cp_map.dim
    y = as_matrix(p, n)
    s = cp_map.superop
    step_tol = tol * 1e-3
    for _ in range(n_max):
        nxt = s(y)
        diff = nxt - y
        if np.linalg.eigvalsh((diff + dagger(diff)) / 2).min() < -1e-10:
            raise NotSubharmonicError("iterates of p are not increasing")
        y = nxt
        if np.linalg.norm(diff) <= step_tol:
            break
    return y, bool(np.linalg.norm(y - np.eye(n)) <= tol)


# ---------------------------------------------------------------------------
# Convergence and correlations
# ---------------------------------------------------------------------------


def trace_norm(a: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh((a + dagger(a)) / 2)).sum())


def predual_distance(cp_map: CPMap, phi: DensityState, phi0: DensityState, n: int) -> float:
    """|| (tau_*)^n rho_phi - rho_phi0 ||_1."""
    rho = kernels.kraus_power_apply(dagger(cp_map.kraus), phi.rho, n)
    return trace_norm(rho - phi0.rho)


def correlation(cp_map: CPMap, state: DensityState, x: np.ndarray, y: np.ndarray, n: int) -> complex:
    """tr(rho tau^n(x) tau^n(y))."""
    return complex(np.trace(state.rho @ cp_map.power(x, n) @ cp_map.power(y, n)))


def correlation_defect(cp_map: CPMap, state: DensityState, n: int, basis: Sequence[np.ndarray] | None = None) -> float:
    """max over basis pairs of |phi0(tau^n(x) tau^n(y)) - phi0(x) phi0(y)|."""
    dim = cp_map.dim
    basis = np.array(matrix_units(dim) if basis is None else basis)
    tn = np.linalg.matrix_power(cp_map.superop.matrix, n)
    evolved = np.array([devectorize(tn @ vectorize(b), dim) for b in basis])
    corr = np.einsum("iab,jba->ij", np.matmul(state.rho, evolved), evolved)
    means = np.array([state.expect(b) for b in basis])
    return float(np.abs(corr - np.outer(means, means)).max())


def iterate_mixing_verdict(
    cp_map: CPMap, state: DensityState, n: int = 200, tol: float = 1e-6
) -> tuple[bool, float]:
    """Whether |tau^n(x) - phi0(x) I| <= tol for every matrix unit x."""
    dim = cp_map.dim
    tn = np.linalg.matrix_power(cp_map.superop.matrix, n)
    worst = 0.0
    for e in matrix_units(dim):
        worst = max(worst, float(np.linalg.norm(devectorize(tn @ vectorize(e), dim) - state.expect(e) * np.eye(dim))))
    return worst <= tol, worst


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


@dataclass
class Classification:
    ergodic: bool
    strong_mixing: bool
    kolmogorov: bool
    peripheral_eigenvalues: list[complex]
    spectral_gap: float
    fixed_algebra_dim: int
    G_dim: int
    faithful: bool = True
    support_reduced: bool = False
    reduced: "Classification | None" = None
    residuals: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        d = {
            "ergodic": self.ergodic,
            "strong_mixing": self.strong_mixing,
            "kolmogorov": self.kolmogorov,
            "peripheral_eigenvalues": [[z.real, z.imag] for z in self.peripheral_eigenvalues],
            "spectral_gap": self.spectral_gap,
            "fixed_algebra_dim": self.fixed_algebra_dim,
            "G_dim": self.G_dim,
            "faithful": self.faithful,
            "support_reduced": self.support_reduced,
            "residuals": dict(self.residuals),
            "notes": list(self.notes),
        }
        if self.reduced is not None:
            d["reduced"] = self.reduced.as_dict()
        return d


def spectrum(cp_map: CPMap, tol_peripheral: float = TOL_PERIPHERAL) -> dict:
    """Peripheral eigenvalues, second-largest modulus and the spectral gap."""
    ev = cp_map.superop.eigenvalues()
    mod = np.abs(ev)
    per = mod >= 1 - tol_peripheral
    peripheral = sorted((complex(z) for z in ev[per]), key=lambda z: (round(np.angle(z), 8), z.real))
    inner = float(mod[~per].max()) if (~per).any() else 0.0
    return {
        "eigenvalues": ev,
        "peripheral": [_snap(z) for z in peripheral],
        "second_modulus": inner,
        "gap": 1.0 - inner,
    }


def _snap(z: complex, digits: int = 12) -> complex:
    return complex(round(z.real, digits) + 0.0, round(z.imag, digits) + 0.0)


def fixed_space(cp_map: CPMap, tol: float = TOL_PERIPHERAL) -> OperatorSubspace:
    n = cp_map.dim
    ns = null_space(cp_map.superop.matrix - np.eye(n * n), tol)
    return OperatorSubspace.from_columns(ns, n)


def classify(
    cp_map: CPMap,
    state: DensityState | None = None,
    tol: float = TOL_VERIFY,
    tol_peripheral: float = TOL_PERIPHERAL,
    horizon: int = 200,
) -> Classification:
    """Ergodic / strongly mixing / Kolmogorov verdicts from the single-step spectrum.

    A non-faithful invariant state is handled by also classifying the corner
    map on its support; both verdicts are reported.
    """
    if state is None:
        state = invariant_state(cp_map)
    _require_invariant(cp_map, state, TOL_INVARIANT)
    sp = spectrum(cp_map, tol_peripheral)
    fixed_dim = fixed_space(cp_map, tol_peripheral).dim
    ergodic = fixed_dim == 1
    mixing = ergodic and len(sp["peripheral"]) == 1
    residuals: dict = {}
    notes: list[str] = []

    if state.faithful:
        g = algebra_G(cp_map, state, tol, tol_peripheral)
        g_dim = g.dim
        kolmogorov = _kolmogorov_crosscheck(cp_map, state, mixing, sp["second_modulus"], horizon, residuals, notes)
        return Classification(
            ergodic, mixing, kolmogorov, sp["peripheral"], sp["gap"], fixed_dim, g_dim,
            residuals=residuals, notes=notes,
        )

    p = support_projection(state)
    reduced_map = reduced_semigroup(cp_map, p)
    reduced = classify(reduced_map, reduced_state(state, p), tol, tol_peripheral, horizon)
    defect = max(correlation_defect(cp_map, state, horizon), correlation_defect(cp_map, state, horizon + 1))
    residuals["correlation_defect"] = defect
    _, full_limit = subharmonic_limit(cp_map, p)
    if not full_limit:
        notes.append("support projection does not increase to the identity")
    return Classification(
        ergodic, mixing, defect <= 1e-6, sp["peripheral"], sp["gap"], fixed_dim, len(sp["peripheral"]),
        faithful=False, support_reduced=True, reduced=reduced, residuals=residuals, notes=notes,
    )


def _kolmogorov_crosscheck(cp_map, state, mixing, second_modulus, horizon, residuals, notes) -> bool:
    """Correlation factorization at a late time must agree with the spectral verdict."""
    if mixing and second_modulus**horizon > 1e-8:
        notes.append("kolmogorov cross-check inconclusive: mixing too slow for the horizon")
        residuals["correlation_defect"] = None
        return mixing
    defect = max(correlation_defect(cp_map, state, horizon), correlation_defect(cp_map, state, horizon + 1))
    residuals["correlation_defect"] = defect
    factorizes = defect <= 1e-6
    if factorizes != mixing:
        raise DisagreementError(
            "spectral mixing verdict and correlation factorization disagree",
            {"correlation_defect": defect, "strong_mixing": mixing},
        )
    return factorizes


def restricted_classification(cp_map: CPMap, alg: OperatorSubspace, tol: float = TOL_PERIPHERAL) -> tuple[bool, bool]:
    """(ergodic, strongly mixing) for tau restricted to a tau-invariant subspace."""
    mat = np.array([[np.vdot(a, cp_map(b)) for b in alg.basis] for a in alg.basis])
    ev = np.linalg.eigvals(mat) if alg.dim else np.array([])
    fixed = int(np.sum(np.abs(ev - 1) <= tol))
    peripheral = int(np.sum(np.abs(ev) >= 1 - tol))
    ergodic = fixed == 1
    return ergodic, ergodic and peripheral == 1
