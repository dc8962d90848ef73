"""Translation-invariant spin-chain states from Popescu data (l_1, ..., l_d).

The tensor defines the transfer map eta(x) = sum_i l_i x l_i^dagger on the
bond algebra M_k.  For an eta-invariant state rho the chain state evaluates
matrix units through the word function
``C(I, J) = tr(rho l_I l_J^dagger)`` with ``l_I = l_{i1} ... l_{im}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from . import kernels
from .errors import (
    AmbiguousReductionError,
    CapExceededError,
    DisagreementError,
    InvalidInput,
    VerificationError,
)
from .operator_core import (
    DensityState,
    algebra_closure,
    as_matrix,
    center_of,
    dagger,
    support_projection,
)
from .semigroup import (
    CPMap,
    classify,
    correlation_defect,
    fixed_space,
    invariant_state,
    invariant_states,
    range_basis,
)

MAX_WORD_LEN = 6
MAX_SITES = 4
MARGINAL_CAP = 4096


@dataclass(frozen=True)
class PopescuTensor:
    ops: np.ndarray

    def __post_init__(self):
        ops = [as_matrix(l) for l in self.ops]
        if not ops:
            raise InvalidInput("a Popescu tensor needs at least one operator")
        k = ops[0].shape[0]
        if any(l.shape != (k, k) for l in ops):
            raise InvalidInput("operators must share the bond dimension")
        object.__setattr__(self, "ops", np.ascontiguousarray(np.array(ops)))

    @property
    def d(self) -> int:
        return self.ops.shape[0]

    @property
    def k(self) -> int:
        return self.ops.shape[1]

    def row_isometry_residual(self) -> float:
        return float(np.linalg.norm(np.einsum("aij,akj->ik", self.ops, self.ops.conj()) - np.eye(self.k), 2))


def validate(tensor: PopescuTensor, tol: float = 1e-10) -> dict:
    """Check sum_i l_i l_i^dagger = I; raises when the residual exceeds tol."""
    res = tensor.row_isometry_residual()
    report = {"check": "row_isometry", "residual": res, "tolerance": tol, "pass": res <= tol}
    if res > tol:
        raise VerificationError(f"sum l_i l_i^dagger deviates from I by {res:.3g}", {"row_isometry": res})
    return report


def eta_map(tensor: PopescuTensor, tol: float = 1e-10) -> CPMap:
    validate(tensor, tol)
    return CPMap(tensor.ops, tol=max(tol, 1e-9))


def word_operator(tensor: PopescuTensor, word: Sequence[int]) -> np.ndarray:
    """l_{i1} ... l_{im}; letters are 0-based, the empty word gives the identity."""
    out = np.eye(tensor.k, dtype=complex)
    for letter in word:
        if not 0 <= letter < tensor.d:
            raise InvalidInput(f"letter {letter} outside 0..{tensor.d - 1}")
        out = out @ tensor.ops[letter]
    return out


def word_function(tensor: PopescuTensor, state: DensityState, I: Sequence[int], J: Sequence[int]) -> complex:
    """C(I, J) = tr(rho l_I l_J^dagger)."""
    return complex(np.trace(state.rho @ word_operator(tensor, I) @ dagger(word_operator(tensor, J))))


def all_words(d: int, length: int) -> list[tuple[int, ...]]:
    """Words of a fixed length in the lexicographic order used by ``kernels.word_products``."""
    return list(product(range(d), repeat=length))


def word_table(tensor: PopescuTensor, state: DensityState, max_len: int = 4) -> dict:
    """C(I, J) for all words with |I|, |J| <= max_len, keyed by (I, J)."""
    if max_len > MAX_WORD_LEN:
        raise CapExceededError(f"word length {max_len} above the cap {MAX_WORD_LEN}")
    words, mats = [], []
    for m in range(max_len + 1):
        words.extend(all_words(tensor.d, m))
        mats.append(kernels.word_products(tensor.ops, m))
    mats = np.concatenate(mats)
    # tr(rho W_I W_J^dagger) = tr(W_J^dagger rho W_I) = gram[J, I]
    gram = kernels.gram_marginal(mats, state.rho)
    return {(wi, wj): complex(gram[b, a]) for a, wi in enumerate(words) for b, wj in enumerate(words)}


def marginal_density(tensor: PopescuTensor, state: DensityState, m: int, check: bool = True, tol: float = 1e-10) -> DensityState:
    """Reduced density matrix of m consecutive sites, D[I, J] = tr(rho l_J l_I^dagger)."""
    if m < 1:
        raise ValueError("need at least one site")
    if tensor.d**m > MARGINAL_CAP:
        raise CapExceededError(f"marginal dimension {tensor.d ** m} above the cap {MARGINAL_CAP}")
    words = kernels.word_products(tensor.ops, m)
    # tr(rho l_J l_I^dagger) = tr(l_I^dagger rho l_J)
    dmat = kernels.gram_marginal(words, state.rho)
    dmat = (dmat + dagger(dmat)) / 2
    if check:
        res = marginal_consistency(tensor, state, m, dmat)
        w_min = float(np.linalg.eigvalsh(dmat).min())
        res["psd"] = max(0.0, -w_min)
        res["trace"] = abs(np.trace(dmat) - 1)
        if max(res.values()) > tol:
            raise VerificationError("marginal failed its consistency checks", res)
    return DensityState(dmat, tol_herm=tol, tol_trace=tol, tol_psd=tol)


def partial_trace_last(dmat: np.ndarray, d: int) -> np.ndarray:
    n = dmat.shape[0] // d
    return np.einsum("iaja->ij", dmat.reshape(n, d, n, d))


def partial_trace_first(dmat: np.ndarray, d: int) -> np.ndarray:
    n = dmat.shape[0] // d
    return np.einsum("aiaj->ij", dmat.reshape(d, n, d, n))


def marginal_consistency(tensor: PopescuTensor, state: DensityState, m: int, dmat: np.ndarray | None = None) -> dict:
    """Residuals of tracing the first or last site of the m-marginal against the (m-1)-marginal."""
    if dmat is None:
        dmat = kernels.gram_marginal(kernels.word_products(tensor.ops, m), state.rho)
    smaller = kernels.gram_marginal(kernels.word_products(tensor.ops, m - 1), state.rho)
    return {
        "trace_last": float(np.linalg.norm(partial_trace_last(dmat, tensor.d) - smaller)),
        "trace_first": float(np.linalg.norm(partial_trace_first(dmat, tensor.d) - smaller)),
    }


def support_reduce(tensor: PopescuTensor, tol: float = 1e-10, strict: bool = False) -> tuple[PopescuTensor, DensityState]:
    """Compress the tensor to the support of its maximal-support invariant state.

    With ``strict=True`` a non-unique invariant state whose extremal
    supports are not nested raises ``AmbiguousReductionError``.
    """
    eta = eta_map(tensor, tol)
    if strict:
        states = invariant_states(eta)
        supports = [support_projection(s) for s in states]
        for a in supports:
            for b in supports:
                if not (_leq(a, b) or _leq(b, a)):
                    raise AmbiguousReductionError("invariant states with non-comparable supports")
    state = invariant_state(eta)
    if state.faithful:
        return tensor, state
    q = range_basis(support_projection(state))
    reduced = PopescuTensor([dagger(q) @ l @ q for l in tensor.ops])
    rho = dagger(q) @ state.rho @ q
    return reduced, DensityState(rho / np.trace(rho).real, tol_trace=1e-8)


def _leq(p: np.ndarray, q: np.ndarray, tol: float = 1e-8) -> bool:
    return bool(np.linalg.norm(p - q @ p) <= tol)


def extremality_check(tensor: PopescuTensor, tol: float = 1e-9) -> tuple[bool, bool]:
    """(factor, ergodic): trivial center of {l_i, l_i^dagger}'' and trivial fixed space of eta."""
    alg = algebra_closure(list(tensor.ops), tol, n=tensor.k)
    factor = center_of(alg, tol).dim == 1
    ergodic = fixed_space(eta_map(tensor)).dim == 1
    return factor, ergodic


@dataclass
class ChainReport:
    pure: bool
    extremal: bool
    factor: bool
    ergodic: bool
    peripheral_eigenvalues: list
    gap: float
    support_reduced: bool
    fixed_algebra_dim: int = 1
    bond_dim: int = 1
    residuals: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "pure": self.pure,
            "extremal": self.extremal,
            "factor": self.factor,
            "ergodic": self.ergodic,
            "peripheral_eigenvalues": [[complex(z).real, complex(z).imag] for z in self.peripheral_eigenvalues],
            "gap": self.gap,
            "support_reduced": self.support_reduced,
            "fixed_algebra_dim": self.fixed_algebra_dim,
            "bond_dim": self.bond_dim,
            "residuals": dict(self.residuals),
        }


def purity_check(tensor: PopescuTensor, tol: float = 1e-10, horizon: int = 200) -> ChainReport:
    """Pure iff the support-reduced transfer map is strongly mixing.

    The spectral verdict is cross-checked by correlation factorization; a
    disagreement raises.
    """
    reduced, state = support_reduce(tensor, tol)
    eta = eta_map(reduced, max(tol, 1e-9))
    cl = classify(eta, state, horizon=horizon)
    factor, ergodic = extremality_check(reduced)
    defect = cl.residuals.get("correlation_defect")
    if defect is not None and (defect <= 1e-6) != cl.strong_mixing:
        raise DisagreementError("spectral and correlation purity verdicts disagree", {"correlation_defect": defect})
    return ChainReport(
        pure=cl.strong_mixing,
        extremal=factor and ergodic,
        factor=factor,
        ergodic=ergodic,
        peripheral_eigenvalues=cl.peripheral_eigenvalues,
        gap=cl.spectral_gap,
        support_reduced=reduced.k != tensor.k,
        fixed_algebra_dim=cl.fixed_algebra_dim,
        bond_dim=reduced.k,
        residuals={"correlation_defect": defect, "row_isometry": tensor.row_isometry_residual()},
    )


def correlation_purity(tensor: PopescuTensor, horizon: int = 200, tol: float = 1e-6) -> bool:
    """Direct route: correlations of the reduced transfer map factorize at late times."""
    reduced, state = support_reduce(tensor)
    eta = eta_map(reduced, 1e-9)
    defect = max(correlation_defect(eta, state, horizon), correlation_defect(eta, state, horizon + 1))
    return defect <= tol


def gauge_transform(tensor: PopescuTensor, g: np.ndarray, tol: float = 1e-10) -> PopescuTensor:
    """l_i' = sum_j conj(g_ij) l_j for a unitary g on the spin space."""
    g = as_matrix(g, tensor.d)
    if np.linalg.norm(dagger(g) @ g - np.eye(tensor.d)) > tol:
        raise InvalidInput("gauge matrix is not unitary")
    out = PopescuTensor(np.einsum("ij,jab->iab", g.conj(), tensor.ops))
    validate(out, max(tol, 1e-9))
    return out


def bond_rotation(tensor: PopescuTensor, w: np.ndarray) -> PopescuTensor:
    """l_i -> w l_i w^dagger; leaves the chain state unchanged."""
    return PopescuTensor([w @ l @ dagger(w) for l in tensor.ops])


# ---------------------------------------------------------------------------
# Example tensors
# ---------------------------------------------------------------------------


def product_tensor(coeffs: Sequence[complex]) -> PopescuTensor:
    """k = 1 tensor: a translation-invariant product state."""
    c = np.asarray(coeffs, dtype=complex)
    c = c / np.linalg.norm(c)
    return PopescuTensor(c.reshape(-1, 1, 1))


def diagonal_partition_tensor(k: int = 2) -> PopescuTensor:
    """l_i = E_ii: the even mixture of constant configurations."""
    return PopescuTensor([np.diag(e).astype(complex) for e in np.eye(k)])


def random_tensor(d: int, k: int, rng: np.random.Generator) -> PopescuTensor:
    """Random row isometry: [l_1 ... l_d] has orthonormal rows."""
    z = rng.standard_normal((k * d, k)) + 1j * rng.standard_normal((k * d, k))
    v, _ = np.linalg.qr(z)
    return PopescuTensor([dagger(b) for b in v.reshape(d, k, k)])


def padded_tensor(d: int, rng: np.random.Generator) -> PopescuTensor:
    """k = 3 block-triangular tensor whose invariant state lives on a 2-dim block.

    The rows of [l_1 ... l_d] are orthonormal; the first two rows only touch
    the first two columns of every l_i, so the predual keeps states on the block.
    """
    k = 3
    cols = np.arange(k * d).reshape(d, k)
    block_cols = cols[:, :2].ravel()
    rows = np.zeros((k, k * d), dtype=complex)
    z = rng.standard_normal((len(block_cols), 2)) + 1j * rng.standard_normal((len(block_cols), 2))
    q, _ = np.linalg.qr(z)
    rows[0, block_cols] = q[:, 0]
    rows[1, block_cols] = q[:, 1]
    r = rng.standard_normal(k * d) + 1j * rng.standard_normal(k * d)
    r = r - rows[:2].T @ (rows[:2].conj() @ r)
    rows[2] = r / np.linalg.norm(r)
    return PopescuTensor([rows[:, cols[i]] for i in range(d)])
