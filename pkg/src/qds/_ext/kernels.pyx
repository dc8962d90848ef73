# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled inner loops; must stay numerically interchangeable with ``qds._fallback``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef void _matmul(const double complex[:, ::1] a, const double complex[:, ::1] b,
                  double complex[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0], p = a.shape[1], m = b.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double complex s
    for i in range(n):
        for j in range(m):
            s = 0
            for k in range(p):
                s = s + a[i, k] * b[k, j]
            out[i, j] = s


def kraus_apply(const double complex[:, :, ::1] kraus, const double complex[:, ::1] x):
    """sum_i l_i x l_i^dagger."""
    cdef Py_ssize_t m = kraus.shape[0], n = kraus.shape[1]
    cdef Py_ssize_t a, i, j, k
    cdef double complex s
    out_arr = np.zeros((n, n), dtype=np.complex128)
    tmp_arr = np.empty((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef double complex[:, ::1] tmp = tmp_arr
    with nogil:
        for a in range(m):
            _matmul(kraus[a], x, tmp)
            for i in range(n):
                for j in range(n):
                    s = 0
                    for k in range(n):
                        s = s + tmp[i, k] * kraus[a, j, k].conjugate()
                    out[i, j] = out[i, j] + s
    return out_arr


def kraus_power_apply(const double complex[:, :, ::1] kraus, const double complex[:, ::1] x, int steps):
    cur = np.array(x, dtype=np.complex128, copy=True)
    cdef int t
    for t in range(steps):
        cur = kraus_apply(kraus, cur)
    return cur


def word_products(const double complex[:, :, ::1] ops, int length):
    """All products l_{i1} ... l_{im} for words of the given length, lexicographic order."""
    cdef Py_ssize_t d = ops.shape[0], k = ops.shape[1]
    cdef Py_ssize_t count = d ** length
    out_arr = np.empty((count, k, k), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef Py_ssize_t w, letter, level, prev_count, i
    if length == 0:
        out_arr[0] = np.eye(k, dtype=np.complex128)
        return out_arr
    # level-by-level extension; tmp holds the next level before it is copied back
    for letter in range(d):
        out[letter, :, :] = ops[letter]
    prev_count = d
    tmp_arr = np.empty((count, k, k), dtype=np.complex128)
    cdef double complex[:, :, ::1] tmp = tmp_arr
    for level in range(1, length):
        with nogil:
            for w in range(prev_count):
                for letter in range(d):
                    _matmul(out[w], ops[letter], tmp[w * d + letter])
        out_arr[: prev_count * d] = tmp_arr[: prev_count * d]
        prev_count = prev_count * d
    return out_arr


def gram_marginal(const double complex[:, :, ::1] words, const double complex[:, ::1] rho):
    """D[I, J] = tr(W_I^dagger rho W_J) for Hermitian rho."""
    cdef Py_ssize_t count = words.shape[0], k = words.shape[1]
    cdef Py_ssize_t I, J, a, b
    cdef double complex s
    rw_arr = np.empty((count, k, k), dtype=np.complex128)
    cdef double complex[:, :, ::1] rw = rw_arr
    out_arr = np.empty((count, count), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    with nogil:
        for J in range(count):
            _matmul(rho, words[J], rw[J])
        for I in range(count):
            for J in range(I, count):
                s = 0
                for a in range(k):
                    for b in range(k):
                        s = s + words[I, a, b].conjugate() * rw[J, a, b]
                out[I, J] = s
                out[J, I] = s.conjugate()
    return out_arr
