"""Hot loops, dispatched to the compiled extension when it is importable.

Set ``QDS_PURE_PYTHON=1`` to force the numpy fallback.  ``gram_marginal``
always uses the BLAS-backed numpy product, which outruns the compiled loop
at every size we measured; the compiled version stays available as
``compiled.gram_marginal`` for comparison.
"""
import os

import numpy as np

from . import _fallback

try:
    from ._ext import kernels as compiled
except ImportError:
    compiled = None

if compiled is not None and os.environ.get("QDS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    BACKEND = "cython"
    _impl = compiled
else:
    BACKEND = "python"
    _impl = _fallback


def _stack(mats):
    return np.ascontiguousarray(np.asarray(mats, dtype=np.complex128))


def kraus_apply(kraus, x):
    return _impl.kraus_apply(_stack(kraus), _stack(x))


def kraus_power_apply(kraus, x, steps):
    return _impl.kraus_power_apply(_stack(kraus), _stack(x), int(steps))


def word_products(ops, length):
    return _impl.word_products(_stack(ops), int(length))


def gram_marginal(words, rho):
    """D[I, J] = tr(W_I^dagger rho W_J) for Hermitian rho."""
    return _fallback.gram_marginal(_stack(words), _stack(rho))
