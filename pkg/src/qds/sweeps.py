"""Seeded random property sweeps.

Instance ``i`` of a sweep with seed ``s`` draws from
``numpy.random.default_rng(splitmix64(s, i))``, so results depend only on
(s, i) and never on thread scheduling.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .channels import random_channel, random_lindblad
from .errors import QDSError
from .semigroup import (
    classify,
    fixed_space,
    invariant_state,
    kms_dual,
    kms_residual,
    lindblad_channel,
)

MASK64 = (1 << 64) - 1
SAMPLE_TIMES = (1.0, 5.0, 20.0)


def splitmix64(seed: int, index: int) -> int:
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def instance_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(splitmix64(seed, index))


def lindblad_instance(seed: int, index: int, max_dim: int, times=SAMPLE_TIMES) -> dict:
    """Ergodic implies strongly mixing at every sampled time for one random generator."""
    rng = instance_rng(seed, index)
    n = int(rng.integers(2, max_dim + 1)) if max_dim > 2 else 2
    gen = random_lindblad(n, rng)
    rec = {"index": index, "dim": n, "times": list(times)}
    base = lindblad_channel(gen, 1.0)
    state = invariant_state(base)
    rec["faithful"] = state.faithful
    rec["generator_ergodic"] = fixed_space_of_generator(gen) == 1
    if not state.faithful:
        rec["skipped"] = True
        return rec
    verdicts = []
    for t in times:
        cl = classify(lindblad_channel(gen, t), state)
        verdicts.append({"t": t, "ergodic": cl.ergodic, "strong_mixing": cl.strong_mixing, "gap": cl.spectral_gap})
    rec["verdicts"] = verdicts
    rec["counterexample"] = any(v["ergodic"] and not v["strong_mixing"] for v in verdicts)
    return rec


def fixed_space_of_generator(gen, tol: float = 1e-8) -> int:
    s = np.linalg.svd(gen.superop.matrix, compute_uv=False)
    return int(np.sum(s <= tol * max(1.0, s[0])))


def kms_instance(seed: int, index: int, max_dim: int) -> dict:
    """Adjoint-relation and involution residuals for one random channel."""
    rng = instance_rng(seed, index)
    n = int(rng.integers(2, max_dim + 1)) if max_dim > 2 else 2
    c = random_channel(n, rng, int(rng.integers(1, n + 2)))
    rec = {"index": index, "dim": n, "kraus_rank": c.rank}
    state = invariant_state(c)
    if not state.faithful:
        rec["skipped"] = True
        return rec
    dual = kms_dual(c, state)
    rec["kms_residual"] = kms_residual(c, dual, state)
    rec["involution_residual"] = float(np.abs(kms_dual(dual, state).superop.matrix - c.superop.matrix).max())
    return rec


def run_sweep(kind: str, count: int, max_dim: int, seed: int, workers: int = 1) -> dict:
    if kind == "lindblad":
        job = lambda i: lindblad_instance(seed, i, max_dim)
    elif kind == "kms":
        job = lambda i: kms_instance(seed, i, max_dim)
    else:
        raise ValueError(f"unknown sweep kind {kind!r}")

    def safe(i):
        try:
            return job(i)
        except QDSError as exc:
            return {"index": i, "error": type(exc).__name__, "message": str(exc)}

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(safe, range(count)))
    else:
        records = [safe(i) for i in range(count)]
    summary = {
        "kind": kind,
        "count": count,
        "max_dim": max_dim,
        "errors": sum("error" in r for r in records),
        "skipped": sum(bool(r.get("skipped")) for r in records),
    }
    if kind == "lindblad":
        summary["counterexamples_ergodic_not_mixing"] = sum(bool(r.get("counterexample")) for r in records)
        summary["ergodic_instances"] = sum(bool(r.get("generator_ergodic")) for r in records)
    else:
        done = [r for r in records if "kms_residual" in r]
        summary["max_kms_residual"] = max((r["kms_residual"] for r in done), default=0.0)
        summary["max_involution_residual"] = max((r["involution_residual"] for r in done), default=0.0)
    summary["instances"] = records
    return summary
