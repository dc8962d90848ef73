"""Pure numpy versions of the compiled kernels in ``qds._ext.kernels``."""
import numpy as np


def kraus_apply(kraus, x):
    """sum_i l_i x l_i^dagger."""
    return np.einsum("aij,jk,alk->il", kraus, x, kraus.conj())


def kraus_power_apply(kraus, x, steps):
    cur = np.array(x, dtype=complex, copy=True)
    for _ in range(steps):
        cur = kraus_apply(kraus, cur)
    return cur


def word_products(ops, length):
    """All products l_{i1} ... l_{im} for words of the given length, lexicographic order."""
    d, k, _ = ops.shape
    out = np.eye(k, dtype=complex)[None]
    for _ in range(length):
        out = np.matmul(out[:, None], ops[None]).reshape(-1, k, k)
    return out


def gram_marginal(words, rho):
    """D[I, J] = tr(W_I^dagger rho W_J) for Hermitian rho."""
    count = words.shape[0]
    a = words.reshape(count, -1)
    b = np.matmul(rho, words).reshape(count, -1)
    return a.conj() @ b.T
