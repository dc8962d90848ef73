"""Finite-horizon minimal weak Markov dilation of a discrete-time CP map.

The base space is the GNS space of (M_n, phi0), realized on C^n (x) C^n with
observables acting as ``I (x) x`` and the vacuum ``Omega = rho^{1/2}``.  One
time step appends a noise factor C^m through the Stinespring isometry of the
map; level t is ``base (x) (C^m)^{(x) t}`` and everything is embedded in
level T.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .errors import CapExceededError, HorizonError
from .operator_core import DensityState, dagger, matrix_units, psd_sqrt, random_unitary, support_projection
from .semigroup import (
    CPMap,
    _require_invariant,
    correlation_defect,
    minimal_kraus,
    reduced_semigroup,
    reduced_state,
    stinespring_isometry,
    TOL_INVARIANT,
)

DEFAULT_DIM_CAP = 200_000
GS_TOL = 1e-8


def dim_cap() -> int:
    return int(os.environ.get("QDS_DIM_CAP", DEFAULT_DIM_CAP))


@dataclass(frozen=True)
class DilationSpace:
    cp_map: CPMap
    state: DensityState
    horizon: int
    step: np.ndarray
    embeddings: tuple
    omega: np.ndarray
    support_reduced: bool = False

    @property
    def n(self) -> int:
        return self.cp_map.dim

    @property
    def base_dim(self) -> int:
        return self.n**2

    @property
    def noise_dim(self) -> int:
        return self.cp_map.rank

    @property
    def total_dim(self) -> int:
        return self.base_dim * self.noise_dim**self.horizon

    def level_dim(self, t: int) -> int:
        return self.base_dim * self.noise_dim**t

    def embedding(self, t: int) -> np.ndarray:
        self._check_time(t)
        return self.embeddings[t]

    def filtration(self, t: int) -> np.ndarray:
        """F_t] = iota_t iota_t^dagger."""
        e = self.embedding(t)
        return e @ dagger(e)

    def local(self, x: np.ndarray, t: int) -> np.ndarray:
        """I (x) x (x) I_noise^t on level t."""
        return np.kron(np.kron(np.eye(self.n), x), np.eye(self.noise_dim**t))

    def local_left(self, x: np.ndarray, t: int, m: np.ndarray) -> np.ndarray:
        """``local(x, t) @ m`` without forming the Kronecker product."""
        n, k = self.n, m.shape[1]
        return np.einsum("ij,ajrc->airc", x, m.reshape(n, n, -1, k)).reshape(-1, k)

    def local_right(self, m: np.ndarray, x: np.ndarray, t: int) -> np.ndarray:
        """``m @ local(x, t)``."""
        n, rows = self.n, m.shape[0]
        return np.einsum("cajr,jk->cakr", m.reshape(rows, n, n, -1), x).reshape(rows, -1)

    def j(self, t: int, x: np.ndarray) -> np.ndarray:
        e = self.embedding(t)
        return e @ self.local(x, t) @ dagger(e)

    def _check_time(self, t: int):
        if not 0 <= t <= self.horizon:
            raise HorizonError(f"time {t} outside the horizon [0, {self.horizon}]")


def build_dilation(
    cp_map: CPMap,
    state: DensityState,
    horizon: int,
    minimize: bool = True,
    cap: int | None = None,
) -> DilationSpace:
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    _require_invariant(cp_map, state, TOL_INVARIANT)
    reduced = False
    if not state.faithful:
        p = support_projection(state)
        cp_map, state, reduced = reduced_semigroup(cp_map, p), reduced_state(state, p), True
    if minimize:
        cp_map = minimal_kraus(cp_map)
    n, m = cp_map.dim, cp_map.rank
    cap = dim_cap() if cap is None else cap
    total = n * n * m**horizon
    if total > cap:
        raise CapExceededError(f"dilation needs dimension {total} > cap {cap}")
    step = np.kron(np.eye(n), stinespring_isometry(cp_map))
    embeddings = [None] * (horizon + 1)
    embeddings[horizon] = np.eye(total, dtype=complex)
    for t in range(horizon - 1, -1, -1):
        w = np.kron(step, np.eye(m**t))
        embeddings[t] = embeddings[t + 1] @ w
    omega_base = psd_sqrt(state.rho).T.reshape(-1)
    omega = embeddings[0] @ omega_base
    return DilationSpace(cp_map, state, horizon, step, tuple(embeddings), omega, reduced)


def _report(check: str, residual: float, tol: float, **extra) -> dict:
    return {"check": check, "residual": float(residual), "tolerance": tol, "pass": bool(residual <= tol), **extra}


def structure_report(d: DilationSpace, tol: float = 1e-10) -> list[dict]:
    """Isometry, filtration, Stinespring, stationarity and multiplicativity residuals.

    Operators of the form ``iota_t A iota_t^dagger`` are compared through
    their level-t representatives ``A``; the Frobenius norms coincide
    whenever the embeddings are isometric, which is the first check.
    """
    n, T = d.n, d.horizon
    grams = [dagger(e) @ e for e in d.embeddings]
    iso = max(np.linalg.norm(g - np.eye(g.shape[0])) for g in grams)
    # F_s] F_t] = F_s] for s <= t  <=>  iota_t iota_t^dagger iota_s = iota_s
    filt = 0.0
    for s in range(T + 1):
        es = d.embeddings[s]
        for t in range(s, T + 1):
            et = d.embeddings[t]
            filt = max(filt, np.linalg.norm(et @ (dagger(et) @ es) - es))
    v = stinespring_isometry(d.cp_map)
    m = d.noise_dim
    units = matrix_units(n)
    stine = max(np.linalg.norm(dagger(v) @ np.kron(x, np.eye(m)) @ v - d.cp_map(x)) for x in units)
    vac, mult = 0.0, 0.0
    for t in range(T + 1):
        w = dagger(d.embeddings[t]) @ d.omega
        vac = max(vac, max(abs(np.vdot(w, d.local_left(x, t, w[:, None])[:, 0]) - d.state.expect(x)) for x in units))
        # j_t(x) j_t(y) - j_t(xy) has representative L(x) (G - I) L(y) since L
        # itself is exactly multiplicative; for matrix units that is the
        # (b, c) block of G - I
        h = (grams[t] - np.eye(grams[t].shape[0])).reshape(n, n, -1, n, n, d.noise_dim**t)
        mult = max(mult, max(np.linalg.norm(h[:, b, :, :, c, :]) for b in range(n) for c in range(n)))
    return [
        _report("isometry", iso, tol),
        _report("filtration", filt, tol),
        _report("stinespring", stine, tol),
        _report("vacuum_stationarity", vac, tol),
        _report("multiplicativity", mult, tol),
    ]


def filtration_ranks(d: DilationSpace) -> list[int]:
    return [int(round(np.trace(d.filtration(t)).real)) for t in range(d.horizon + 1)]


def markov_property_check(d: DilationSpace, cp_map: CPMap | None = None, tol: float = 1e-10) -> dict:
    """max |F_s] j_t(x) F_s] - j_s(tau^{t-s}(x))| over matrix units and 0 <= s <= t <= T.

    Both sides live in the range of ``iota_s``, so the residual is evaluated as
    ``|P L_t(x) P^dagger - L_s(tau^{t-s}(x))|`` with ``P = iota_s^dagger iota_t``.
    """
    cp_map = d.cp_map if cp_map is None else cp_map
    worst = 0.0
    for s in range(d.horizon + 1):
        for t in range(s, d.horizon + 1):
            p = dagger(d.embeddings[s]) @ d.embeddings[t]
            for x in matrix_units(d.n):
                lhs = d.local_right(p, x, t) @ dagger(p)
                rhs = d.local(cp_map.power(x, t - s), s)
                worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return _report("markov", worst, tol)


Monomial = Sequence[tuple[int, np.ndarray]]


def shift(mono: Monomial, s: int, horizon: int) -> list[tuple[int, np.ndarray]]:
    """Time shift of a j-monomial; leaving the window is an error, never a truncation."""
    out = [(t + s, x) for t, x in mono]
    if any(t > horizon or t < 0 for t, _ in out):
        raise HorizonError(f"shift by {s} leaves the horizon {horizon}")
    return out


def apply_monomial(d: DilationSpace, mono: Monomial, vectors: np.ndarray) -> np.ndarray:
    """j_{t1}(x1) ... j_{tr}(xr) applied to the columns of ``vectors``."""
    out = vectors
    for t, x in reversed(list(mono)):
        e = d.embedding(t)
        out = e @ d.local_left(x, t, dagger(e) @ out)
    return out


def _base_to_observable(block: np.ndarray, n: int) -> tuple[np.ndarray, float]:
    """Write an operator on C^n (x) C^n as I (x) y; return y and the residual."""
    y = np.einsum("aiaj->ij", block.reshape(n, n, n, n)) / n
    return y, float(np.linalg.norm(block - np.kron(np.eye(n), y)))


def compression_check(
    d: DilationSpace,
    cp_map: CPMap | None = None,
    tol: float = 1e-10,
    max_factors: int = 3,
    draws: int = 2,
    seed: int = 0,
) -> dict:
    """F_0] alpha_s(X) F_0] = j_0(tau^s(y)) where F_0] X F_0] = j_0(y).

    X ranges over monomials j_{t1}(x1)...j_{tr}(xr) with r <= max_factors,
    t_i <= T - 1, seeded random x_i, and every shift s keeping X inside the window.
    """
    cp_map = d.cp_map if cp_map is None else cp_map
    n, T = d.n, d.horizon
    rng = np.random.default_rng(seed)
    e0 = d.embedding(0)
    worst, form, count = 0.0, 0.0, 0
    for r in range(1, max_factors + 1):
        for times in product(range(T), repeat=r):
            for _ in range(draws):
                mono = [(t, rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) for t in times]
                y, f0 = _base_to_observable(dagger(e0) @ apply_monomial(d, mono, e0), n)
                form = max(form, f0)
                for s in range(1, T - max(times) + 1):
                    z, f1 = _base_to_observable(dagger(e0) @ apply_monomial(d, shift(mono, s, T), e0), n)
                    form = max(form, f1)
                    worst = max(worst, float(np.linalg.norm(z - cp_map.power(y, s))) / max(1.0, np.linalg.norm(y)))
                    count += 1
    rep = _report("compression", max(worst, form), tol, monomials=count)
    return rep


def random_hs_basis(n: int, rng: np.random.Generator) -> list[np.ndarray]:
    u = random_unitary(n * n, rng)
    return [u[:, k].reshape(n, n) for k in range(n * n)]


def cyclicity_check(
    d: DilationSpace, tol: float = GS_TOL, basis: Sequence[np.ndarray] | None = None
) -> tuple[int, bool]:
    """Dimension of span{j_{t_r}(x_r)...j_{t_1}(x_1) Omega : t_1 <= ... <= t_r}.

    Time-ordered products are grown level by level; each new block is
    orthogonalized against the current span and its numerical rank is read
    off an SVD with cutoff ``tol * |Omega|``.
    """
    basis = matrix_units(d.n) if basis is None else list(basis)
    lead = float(np.linalg.norm(d.omega))
    q = (d.omega / lead)[:, None]
    for t in range(d.horizon + 1):
        e = d.embedding(t)
        pulled = dagger(e) @ q
        fresh = np.column_stack([e @ d.local_left(x, t, pulled) for x in basis])
        q = _extend_basis(q, fresh, tol * lead)
    dim = q.shape[1]
    return dim, dim == d.total_dim


def _extend_basis(q: np.ndarray, vectors: np.ndarray, tol: float) -> np.ndarray:
    r = vectors - q @ (dagger(q) @ vectors)
    r = r - q @ (dagger(q) @ r)
    if not r.size:
        return q
    if r.shape[1] > r.shape[0]:
        # r = R^dagger Q^dagger: same range and singular values, square factor
        r = dagger(np.linalg.qr(dagger(r), mode="r"))
    u, sv, _ = np.linalg.svd(r, full_matrices=False)
    keep = sv > tol
    return np.column_stack([q, u[:, keep]]) if keep.any() else q


def kolmogorov_correlation_profile(cp_map: CPMap, state: DensityState, N: int) -> list[float]:
    """c_n = max over matrix-unit pairs of |phi0(tau^n(x) tau^n(y)) - phi0(x) phi0(y)|, n = 0..N."""
    _require_invariant(cp_map, state, TOL_INVARIANT)
    return [correlation_defect(cp_map, state, n) for n in range(N + 1)]


def decay_slope(profile: Sequence[float], lo: int = 5, hi: int = 15) -> float:
    """Least-squares slope of log c_n over n in [lo, hi]."""
    ns = np.arange(lo, hi + 1)
    return float(np.polyfit(ns, np.log(np.asarray(profile)[lo : hi + 1]), 1)[0])


@dataclass
class DilationReport:
    total_dim: int
    ranks: list
    residuals: list = field(default_factory=list)
    cyclic_dim: int | None = None

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.residuals)

    def as_dict(self) -> dict:
        d = {"total_dim": self.total_dim, "ranks": self.ranks, "residuals": self.residuals, "pass": self.passed}
        if self.cyclic_dim is not None:
            d["cyclic_dim"] = self.cyclic_dim
        return d


def run_checks(d: DilationSpace, checks: Sequence[str], tol: float = 1e-10) -> DilationReport:
    rep = DilationReport(d.total_dim, filtration_ranks(d), structure_report(d, tol))
    for name in checks:
        if name == "markov":
            rep.residuals.append(markov_property_check(d, tol=tol))
        elif name == "compression":
            rep.residuals.append(compression_check(d, tol=tol))
        elif name == "cyclicity":
            dim, full = cyclicity_check(d)
            rep.cyclic_dim = dim
            rep.residuals.append(
                {"check": "cyclicity", "residual": float(d.total_dim - dim), "tolerance": 0, "pass": True,
                 "cyclic_dim": dim, "minimal": full}
            )
        else:
            raise ValueError(f"unknown check {name!r}")
    return rep
