from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qds.errors import AmbiguousReductionError, CapExceededError, InvalidInput, VerificationError
from qds.operator_core import DensityState, random_unitary
from qds.spinchain import (
    PopescuTensor,
    correlation_purity,
    diagonal_partition_tensor,
    gauge_transform,
    marginal_consistency,
    marginal_density,
    padded_tensor,
    product_tensor,
    purity_check,
    random_tensor,
    support_reduce,
    validate,
    word_function,
    word_operator,
    word_table,
)


def test_validate_rejects_non_isometry():
    t = PopescuTensor([np.eye(2) / np.sqrt(3), np.eye(2) / np.sqrt(3)])
    assert np.isclose(t.row_isometry_residual(), 1 / 3)
    with pytest.raises(VerificationError):
        validate(t)


def test_word_function_product_state():
    t = product_tensor([0.6, 0.8])
    state = DensityState(np.eye(1))
    # C(I, J) = prod c_I * conj(prod c_J)
    assert np.isclose(word_function(t, state, (0, 1), (1, 1)), 0.6 * 0.8 * 0.8 * 0.8)
    assert np.isclose(word_function(t, state, (), ()), 1)


def test_word_operator_letter_range():
    with pytest.raises(InvalidInput):
        word_operator(product_tensor([1, 0]), (2,))


def test_word_table_matches_direct_evaluation(rng):
    t = random_tensor(2, 2, rng)
    _, state = support_reduce(t)
    table = word_table(t, state, 2)
    for (i, j), v in table.items():
        assert np.isclose(v, word_function(t, state, i, j))
    with pytest.raises(CapExceededError):
        word_table(t, state, 7)


def test_diagonal_partition_marginals():
    t = diagonal_partition_tensor()
    red, state = support_reduce(t)
    d2 = marginal_density(red, state, 2).rho
    expected = np.zeros((4, 4))
    expected[0, 0] = expected[3, 3] = 0.5
    assert np.allclose(d2, expected)


def test_product_marginal_is_tensor_power():
    c = np.array([0.6, 0.8j])
    t = product_tensor(c)
    # D[I, J] = C(J, I) = conj(c_I) c_J
    one = np.outer(c.conj(), c)
    d2 = marginal_density(t, DensityState(np.eye(1)), 2).rho
    assert np.allclose(d2, np.kron(one, one))
    assert np.linalg.matrix_rank(d2, tol=1e-10) == 1


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_marginal_consistency_random(seed, m):
    rng = np.random.default_rng(seed)
    t, state = support_reduce(random_tensor(2, 2, rng))
    dm = marginal_density(t, state, m)
    assert max(marginal_consistency(t, state, m, dm.rho).values()) <= 1e-10


def test_purity_examples():
    assert purity_check(product_tensor([0.6, 0.8])).pure
    rep = purity_check(diagonal_partition_tensor())
    assert not rep.pure and rep.fixed_algebra_dim == 2
    assert not rep.factor and not rep.ergodic


def test_padded_tensor_reduces(rng):
    t = padded_tensor(2, rng)
    red, state = support_reduce(t)
    assert red.k == 2 and state.faithful
    assert purity_check(t).support_reduced


def test_strict_reduction_rejects_disjoint_supports():
    with pytest.raises(AmbiguousReductionError):
        support_reduce(diagonal_partition_tensor(), strict=True)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_gauge_transform_of_marginal(m, rng):
    t, state = support_reduce(random_tensor(2, 2, rng))
    g = random_unitary(2, rng)
    dm = marginal_density(t, state, m).rho
    gm = marginal_density(gauge_transform(t, g), state, m).rho
    gk = np.eye(1)
    for _ in range(m):
        gk = np.kron(gk, g)
    assert np.allclose(gm, gk @ dm @ gk.conj().T, atol=1e-10)


def test_circle_gauge_leaves_marginals_invariant(rng):
    t, state = support_reduce(random_tensor(2, 2, rng))
    z = np.exp(0.7j) * np.eye(2)
    for m in (1, 2, 3):
        assert np.allclose(marginal_density(gauge_transform(t, z), state, m).rho, marginal_density(t, state, m).rho)


def test_gauge_rejects_non_unitary(rng):
    with pytest.raises(InvalidInput):
        gauge_transform(random_tensor(2, 2, rng), np.diag([1.0, 2.0]))


def test_cuntz_compatibility(rng):
    t, state = support_reduce(random_tensor(2, 3, rng))
    table = word_table(t, state, 4)
    for (i, j), v in table.items():
        if len(i) < 4 and len(j) < 4:
            s = sum(table[(i + (a,), j + (a,))] for a in range(t.d))
            assert abs(s - v) <= 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_spectral_and_correlation_purity_agree(seed):
    rng = np.random.default_rng(seed)
    t = random_tensor(2, 2, rng)
    assert purity_check(t).pure == correlation_purity(t)


def test_words_enumerate_lexicographically(rng):
    t = random_tensor(2, 2, rng)
    _, state = support_reduce(t)
    table = word_table(t, state, 2)
    keys = [k[0] for k in table if k[1] == ()]
    assert keys == [()] + [(a,) for a in range(2)] + list(product(range(2), repeat=2))
