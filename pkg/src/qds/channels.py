"""Standard unital channels (Heisenberg picture) and random ensembles."""
from __future__ import annotations

import numpy as np

from .operator_core import dagger, pauli, random_unitary
from .semigroup import CPMap, LindbladGenerator


def identity_channel(n: int) -> CPMap:
    return CPMap([np.eye(n, dtype=complex)])


def unitary_channel(u) -> CPMap:
    """x -> u x u^dagger."""
    return CPMap([np.asarray(u, dtype=complex)])


def weyl_operators(n: int) -> list[np.ndarray]:
    """Clock-and-shift unitaries X^a Z^b, (a, b) in Z_n x Z_n, identity first."""
    omega = np.exp(2j * np.pi / n)
    shift = np.roll(np.eye(n, dtype=complex), 1, axis=0)
    clock = np.diag(omega ** np.arange(n))
    ops = []
    for a in range(n):
        for b in range(n):
            ops.append(np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
    return ops


def depolarizing(p: float, n: int = 2) -> CPMap:
    """x -> (1 - p) x + p tr(x)/n I."""
    if not 0 <= p <= 1 + 1 / (n * n - 1):
        raise ValueError("depolarizing parameter out of the completely positive range")
    w = weyl_operators(n)
    kraus = [np.sqrt(1 - p + p / n**2) * w[0]] + [np.sqrt(p) / n * u for u in w[1:]]
    return CPMap([k for k in kraus if np.linalg.norm(k) > 0])


def dephase_then_flip() -> CPMap:
    """Kraus {X P0, X P1}: kills coherences and swaps the populations, so Z -> -Z."""
    x = pauli("X")
    return CPMap([x @ np.diag([1, 0]).astype(complex), x @ np.diag([0, 1]).astype(complex)])


def amplitude_damping(gamma: float) -> CPMap:
    """Heisenberg map whose predual relaxes every state to |0><0|."""
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return CPMap([dagger(k0), dagger(k1)])


def dephasing(n: int = 2) -> CPMap:
    return CPMap([np.diag(e).astype(complex) for e in np.eye(n)])


def block_diagonal(*channels: CPMap) -> CPMap:
    """Direct sum of channels acting on orthogonal blocks (reducible, block-diagonal center)."""
    dims = [c.dim for c in channels]
    n = sum(dims)
    kraus = []
    offset = 0
    for c, d in zip(channels, dims):
        for l in c.kraus:
            k = np.zeros((n, n), dtype=complex)
            k[offset : offset + d, offset : offset + d] = l
            kraus.append(k)
        offset += d
    return CPMap(kraus)


def random_channel(n: int, rng: np.random.Generator, kraus_rank: int | None = None) -> CPMap:
    """Haar-random Stinespring isometry V: C^n -> C^n (x) C^m, with l_i = V_i^dagger."""
    m = kraus_rank or n
    z = rng.standard_normal((n * m, n)) + 1j * rng.standard_normal((n * m, n))
    v, _ = np.linalg.qr(z)
    blocks = v.reshape(m, n, n)
    return CPMap([dagger(b) for b in blocks])


def random_lindblad(n: int, rng: np.random.Generator, n_jumps: int | None = None, scale: float = 1.0) -> LindbladGenerator:
    """Random Hermitian H and Ginibre jump operators."""
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = (a + dagger(a)) / 2
    jumps = []
    for _ in range(n_jumps if n_jumps is not None else n):
        jumps.append(scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2 * n))
    return LindbladGenerator(h, jumps)


def random_unitary_channel(n: int, rng: np.random.Generator) -> CPMap:
    return unitary_channel(random_unitary(n, rng))
