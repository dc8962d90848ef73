import numpy as np
import pytest

from qds.channels import (
    amplitude_damping,
    dephase_then_flip,
    depolarizing,
    identity_channel,
    random_channel,
    unitary_channel,
)
from qds.operator_core import DensityState
from qds.semigroup import CPMap, reduced_semigroup


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def theta_unitary():
    return np.diag([1, np.exp(1j * np.sqrt(2) * np.pi)])


def named_corpus(n_random: int = 50, seed: int = 11) -> list[tuple[str, CPMap]]:
    """Fixed channel corpus: structured examples plus seeded random channels."""
    rng = np.random.default_rng(seed)
    corpus = [
        ("identity", identity_channel(2)),
        ("unitary_theta", unitary_channel(theta_unitary())),
        ("unitary_i", unitary_channel(np.diag([1, 1j]))),
        ("depolarizing_0.25", depolarizing(0.25)),
        ("depolarizing_0.75", depolarizing(0.75)),
        ("depolarizing_1", depolarizing(1.0)),
        ("dephase_then_flip", dephase_then_flip()),
        ("amplitude_damping_reduced", reduced_semigroup(amplitude_damping(0.3), np.diag([1, 0]).astype(complex))),
    ]
    for i in range(n_random):
        n = int(rng.integers(2, 5))
        corpus.append((f"random_{i}_n{n}", random_channel(n, rng, int(rng.integers(1, 4)))))
    return corpus


def triangular_channel(block: CPMap, c: float, rng: np.random.Generator) -> CPMap:
    """Block channel on C^n (+) C, extra direction decaying into the block.

    Kraus family: the block operators padded by zero, plus one operator
    mapping the last basis vector into a random row (b, c) with |b|^2 + c^2 = 1.
    """
    n = block.dim
    kraus = []
    for l in block.kraus:
        k = np.zeros((n + 1, n + 1), dtype=complex)
        k[:n, :n] = l
        kraus.append(k)
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    b = np.sqrt(1 - c**2) * b / np.linalg.norm(b)
    last = np.zeros((n + 1, n + 1), dtype=complex)
    last[n, :n] = b
    last[n, n] = c
    kraus.append(last)
    return CPMap(kraus)


@pytest.fixture
def maximally_mixed2():
    return DensityState.maximally_mixed(2)


CRITERIA: dict[int, str] = {}


@pytest.fixture
def record_criterion():
    """Store one pass/fail line per acceptance criterion for the terminal summary."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        CRITERIA[number] = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}" + (f": {detail}" if detail else "")
        print(CRITERIA[number])

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])
