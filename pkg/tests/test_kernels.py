import os
import subprocess
import sys
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qds import _fallback, kernels


def _ops(rng, d, k):
    return rng.standard_normal((d, k, k)) + 1j * rng.standard_normal((d, k, k))


def test_backend_name():
    assert kernels.BACKEND in {"cython", "python"}


@pytest.mark.skipif(kernels.compiled is None, reason="compiled extension not built")
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 4), st.integers(0, 3))
def test_compiled_matches_fallback(seed, d, k, length):
    rng = np.random.default_rng(seed)
    ops = _ops(rng, d, k)
    x = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    ext = kernels.compiled
    assert np.allclose(ext.kraus_apply(ops, x), _fallback.kraus_apply(ops, x), atol=1e-12)
    assert np.allclose(ext.kraus_power_apply(ops, x, 3), _fallback.kraus_power_apply(ops, x, 3), atol=1e-10)
    words = ext.word_products(ops, length)
    assert np.allclose(words, _fallback.word_products(ops, length), atol=1e-12)
    h = x + x.conj().T
    assert np.allclose(ext.gram_marginal(words, h), _fallback.gram_marginal(words, h), atol=1e-10)


@pytest.mark.parametrize("impl", [kernels, _fallback], ids=["active", "fallback"])
def test_word_order_is_lexicographic(impl, rng):
    ops = _ops(rng, 2, 2)
    words = impl.word_products(ops, 3)
    for idx, w in enumerate(product(range(2), repeat=3)):
        assert np.allclose(words[idx], ops[w[0]] @ ops[w[1]] @ ops[w[2]])


@pytest.mark.parametrize("impl", [kernels, _fallback], ids=["active", "fallback"])
def test_gram_marginal_entries(impl, rng):
    words = _ops(rng, 3, 2)
    rho = np.diag([0.6, 0.4]).astype(complex)
    g = impl.gram_marginal(words, rho)
    for i, j in product(range(3), repeat=2):
        assert np.isclose(g[i, j], np.trace(words[i].conj().T @ rho @ words[j]))


@pytest.mark.parametrize("impl", [kernels, _fallback], ids=["active", "fallback"])
def test_kraus_apply_and_power(impl, rng):
    ops = _ops(rng, 2, 3)
    x = rng.standard_normal((3, 3)) + 0j
    once = sum(l @ x @ l.conj().T for l in ops)
    assert np.allclose(impl.kraus_apply(ops, x), once)
    assert np.allclose(impl.kraus_power_apply(ops, x, 2), sum(l @ once @ l.conj().T for l in ops))
    assert np.allclose(impl.kraus_power_apply(ops, x, 0), x)


def test_pure_python_switch():
    out = subprocess.run(
        [sys.executable, "-c", "from qds import kernels; print(kernels.BACKEND)"],
        env={**os.environ, "QDS_PURE_PYTHON": "1"}, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_empty_word_is_identity(rng):
    assert np.allclose(kernels.word_products(_ops(rng, 2, 3), 0), np.eye(3)[None])
