import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qds.channels import depolarizing, random_channel, unitary_channel
from qds.errors import InvalidInput, NotAlgebraError
from qds.operator_core import (
    DensityState,
    OperatorSubspace,
    algebra_closure,
    center_of,
    devectorize,
    identity_superoperator,
    is_projection,
    matrix_units,
    pauli,
    psd_sqrt,
    superop_from_function,
    support_projection,
    vectorize,
)


def test_vectorize_is_column_stacking():
    x = np.array([[1, 2], [3, 4]], dtype=complex)
    assert np.allclose(vectorize(x), [1, 3, 2, 4])
    assert np.allclose(devectorize(vectorize(x)), x)


def test_vectorize_preserves_hs_norm(rng):
    x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.isclose(np.linalg.norm(vectorize(x)), np.sqrt(np.trace(x.conj().T @ x).real))


def test_kron_identity_for_left_right_multiplication(rng):
    a, x, b = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(3))
    assert np.allclose(vectorize(a @ x @ b), np.kron(b.T, a) @ vectorize(x))


def test_unitary_conjugation_spectrum():
    u = np.diag([1, 1j])
    ev = unitary_channel(u).superop.eigenvalues()
    # oracle: eigenvalues of x -> u x u^dagger are u_a conj(u_b)
    expected = [a * np.conj(b) for a in np.diag(u) for b in np.diag(u)]
    assert np.allclose(sorted(ev, key=lambda z: (z.real, z.imag)), sorted(expected, key=lambda z: (z.real, z.imag)))


def test_depolarizing_spectrum_on_pauli_basis():
    c = depolarizing(0.75)
    # Pauli matrices are eigenvectors; read eigenvalues off directly
    for name, lam in [("I", 1.0), ("X", 0.25), ("Y", 0.25), ("Z", 0.25)]:
        p = pauli(name)
        assert np.allclose(c(p), lam * p)
    assert np.allclose(np.sort(np.abs(c.superop.eigenvalues())), [0.25, 0.25, 0.25, 1.0])


def test_superop_from_function_matches_direct_action(rng):
    a = rng.standard_normal((2, 2))
    s = superop_from_function(lambda x: a @ x - x @ a, 2)
    x = rng.standard_normal((2, 2)) + 0j
    assert np.allclose(s(x), a @ x - x @ a)
    assert np.allclose((s @ identity_superoperator(2)).matrix, s.matrix)


def test_density_state_validation():
    with pytest.raises(InvalidInput):
        DensityState(np.diag([0.7, 0.4]))
    with pytest.raises(InvalidInput):
        DensityState(np.diag([1.2, -0.2]))
    with pytest.raises(InvalidInput):
        DensityState(np.array([[0.5, 0.3], [0.1, 0.5]]))
    s = DensityState(np.diag([0.7, 0.3]))
    assert s.faithful and np.isclose(s(pauli("Z")), 0.4)
    assert not DensityState.pure([1, 0]).faithful


def test_support_projection_pure_and_rank_two():
    p = support_projection(DensityState.pure([1, 1j] / np.sqrt(2)))
    assert is_projection(p) and np.isclose(np.trace(p).real, 1)
    assert np.allclose(p @ np.array([1, 1j]), np.array([1, 1j]))
    q = support_projection(DensityState(np.diag([0.5, 0.5, 0.0])))
    assert np.allclose(q, np.diag([1, 1, 0]))


def test_psd_sqrt_inverse_power():
    a = np.array([[2.0, 0.5], [0.5, 1.0]])
    r = psd_sqrt(a)
    assert np.allclose(r @ r, a)
    assert np.allclose(psd_sqrt(a, -0.5) @ r, np.eye(2))


@pytest.mark.parametrize(
    "gens, dim",
    [
        ([pauli("Z")], 2),
        ([pauli("X"), pauli("Z")], 4),
        ([np.diag([1, 0, 0]).astype(complex)], 2),
        ([np.diag([1, 2, 3]).astype(complex)], 3),
    ],
)
def test_algebra_closure_dimensions(gens, dim):
    alg = algebra_closure(gens)
    assert alg.dim == dim
    assert alg.closure_residual() <= 1e-9


def test_center_of_block_algebra():
    # M2 (+) M2 inside M4: center spanned by the two block identities
    gens = []
    for off in (0, 2):
        for name in ("X", "Z"):
            g = np.zeros((4, 4), dtype=complex)
            g[off:off + 2, off:off + 2] = pauli(name)
            gens.append(g)
    alg = algebra_closure(gens, n=4)
    assert alg.dim == 8
    z = center_of(alg)
    assert z.dim == 2
    assert z.contains(np.diag([1, 1, 0, 0]).astype(complex))
    assert z.contains(np.diag([0, 0, 1, 1]).astype(complex))


def test_center_rejects_non_algebra():
    space = OperatorSubspace.span([np.array([[0, 1], [0, 0]], dtype=complex)], 2)
    with pytest.raises(NotAlgebraError):
        center_of(space)


def test_subspace_intersection_and_adjoint():
    units = matrix_units(2)
    upper = OperatorSubspace.span([units[0], units[2]], 2)   # E11, E12
    diag = OperatorSubspace.span([units[0], units[3]], 2)    # E11, E22
    both = upper.intersect(diag)
    assert both.dim == 1 and both.contains(units[0])
    assert upper.adjoint().contains(units[1])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_superop_composition_matches_sequential_action(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_channel(n, rng, 2), random_channel(n, rng, 3)
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    assert np.allclose((a.superop @ b.superop)(x), a(b(x)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_closure_is_idempotent(seed):
    rng = np.random.default_rng(seed)
    g = np.diag(rng.standard_normal(3)).astype(complex)
    alg = algebra_closure([g], n=3)
    again = algebra_closure(list(alg.basis), n=3)
    assert again.same_as(alg)
