import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qds.channels import (
    amplitude_damping,
    block_diagonal,
    dephase_then_flip,
    depolarizing,
    identity_channel,
    random_channel,
    unitary_channel,
)
from qds.errors import NonFaithfulStateError, NonInvariantStateError, QDSError
from qds.operator_core import DensityState, OperatorSubspace, matrix_units, pauli, support_projection
from qds.semigroup import (
    CPMap,
    LindbladGenerator,
    algebra_G,
    algebra_G0,
    algebra_G_iterative,
    classify,
    conditional_expectation,
    correlation,
    invariant_state,
    invariant_states,
    iterate_mixing_verdict,
    kms_dual,
    kms_residual,
    lindblad_channel,
    minimal_kraus,
    multiplicative_domain,
    predual_distance,
    reduced_semigroup,
    spectrum,
    subharmonic_limit,
)

X, Y, Z, I2 = pauli("X"), pauli("Y"), pauli("Z"), np.eye(2, dtype=complex)


def test_cpmap_rejects_non_unital():
    with pytest.raises(QDSError):
        CPMap([np.diag([1.0, 0.5])])


def test_dephase_then_flip_action():
    c = dephase_then_flip()
    # oracle: explicit sum over the two Kraus products
    P0, P1 = np.diag([1, 0]), np.diag([0, 1])
    for x in (Z, X, I2):
        direct = sum((X @ p) @ x @ (X @ p).conj().T for p in (P0, P1))
        assert np.allclose(c(x), direct)
    assert np.allclose(c(Z), -Z)
    assert np.allclose(c(X), 0)


def test_amplitude_damping_unique_invariant_state():
    c = amplitude_damping(0.3)
    states = invariant_states(c)
    assert len(states) == 1
    # oracle: least-squares solve of (S_* - I) vec(rho) = 0 with trace one
    s = c.predual_superop.matrix
    a = np.vstack([s - np.eye(4), np.eye(2).reshape(1, -1)])
    b = np.zeros(5, dtype=complex)
    b[-1] = 1
    rho = np.linalg.lstsq(a, b, rcond=None)[0].reshape(2, 2, order="F")
    assert np.allclose(states[0].rho, rho, atol=1e-10)
    assert np.allclose(rho, np.diag([1, 0]), atol=1e-10)


def test_identity_has_all_states_invariant():
    assert len(invariant_states(identity_channel(2))) >= 2


def test_kms_dual_of_unitary_is_inverse_conjugation(maximally_mixed2):
    u = np.array([[1, 1], [1j, -1j]]) / np.sqrt(2)
    d = kms_dual(unitary_channel(u), maximally_mixed2)
    x = np.array([[0.3, 1j], [2, -1]])
    assert np.allclose(d(x), u.conj().T @ x @ u)


def test_depolarizing_is_self_dual(maximally_mixed2):
    c = depolarizing(0.75)
    assert np.allclose(kms_dual(c, maximally_mixed2).superop.matrix, c.superop.matrix)


def test_kms_dual_requires_faithful_invariant_state():
    with pytest.raises(NonFaithfulStateError):
        kms_dual(amplitude_damping(0.3), DensityState(np.diag([1.0, 0.0])))
    with pytest.raises(NonInvariantStateError):
        kms_dual(amplitude_damping(0.3), DensityState(np.diag([0.6, 0.4])))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_kms_relation_and_involution(seed, n):
    rng = np.random.default_rng(seed)
    c = random_channel(n, rng, int(rng.integers(1, 4)))
    state = invariant_state(c)
    d = kms_dual(c, state)
    assert kms_residual(c, d, state) <= 1e-9
    assert np.abs(kms_dual(d, state).superop.matrix - c.superop.matrix).max() <= 1e-9
    assert np.allclose(d(np.eye(n)), np.eye(n))
    assert d.is_completely_positive()


def test_multiplicative_domain_examples():
    assert multiplicative_domain(depolarizing(0.75)).dim == 1
    dom = multiplicative_domain(dephase_then_flip())
    assert dom.dim == 2
    assert dom.contains(Z) and dom.contains(I2)
    assert multiplicative_domain(unitary_channel(np.diag([1, 1j]))).dim == 4


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_multiplicative_domain_members_are_multiplicative(seed):
    rng = np.random.default_rng(seed)
    c = block_diagonal(depolarizing(0.5), unitary_channel(np.diag([1, 1j])))
    dom = multiplicative_domain(c)
    coeffs = rng.standard_normal(dom.dim) + 1j * rng.standard_normal(dom.dim)
    x = np.tensordot(coeffs, dom.basis, 1)
    for a, b in [(x.conj().T, x), (x, x.conj().T)]:
        assert np.linalg.norm(c(a @ b) - c(a) @ c(b)) <= 1e-9
    # off-block elements are not multiplicative
    e = np.zeros((4, 4), dtype=complex)
    e[0, 3] = 1
    assert np.linalg.norm(c(e.conj().T @ e) - c(e).conj().T @ c(e)) > 1e-3


@pytest.mark.parametrize(
    "cp_map, g_dim",
    [
        (depolarizing(0.75), 1),
        (dephase_then_flip(), 2),
        (unitary_channel(np.diag([1, 1j])), 4),
        (identity_channel(2), 4),
    ],
)
def test_algebra_G_matches_iterative_oracle(cp_map, g_dim):
    state = invariant_state(cp_map)
    g = algebra_G(cp_map, state)
    assert g.dim == g_dim
    assert g.same_as(algebra_G_iterative(cp_map, state))
    assert g.closure_residual() <= 1e-9


def test_G0_of_dephase_then_flip_is_diagonal():
    c = dephase_then_flip()
    g0 = algebra_G0(c, DensityState.maximally_mixed(2))
    assert g0.dim == 2 and g0.contains(Z)


def test_conditional_expectation_onto_diagonal():
    state = DensityState(np.diag([0.7, 0.3]))
    diag = OperatorSubspace.span([np.diag([1, 0]), np.diag([0, 1])], 2)
    e = conditional_expectation(diag, state)
    x = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
    assert np.allclose(e(x), np.diag([1.0, 4.0]))
    assert np.allclose((e @ e).matrix, e.matrix)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_conditional_expectation_commutes_with_map_on_G(seed):
    rng = np.random.default_rng(seed)
    c = block_diagonal(dephase_then_flip(), random_channel(2, rng, 2))
    state = invariant_state(c)
    e = conditional_expectation(algebra_G(c, state), state)
    assert np.abs((e @ c.superop).matrix - (c.superop @ e).matrix).max() <= 1e-8
    x = rng.standard_normal((4, 4)) + 0j
    assert np.isclose(state(e(x)), state(x))


def test_reduced_semigroup_and_subharmonic_limit():
    c = amplitude_damping(0.3)
    p = np.diag([1, 0]).astype(complex)
    r = reduced_semigroup(c, p)
    assert r.dim == 1 and np.allclose(r(np.eye(1)), 1)
    # oracle: tau^n(diag(0,1)) = (1 - gamma)^n diag(0,1), so tau^n(p) = I - 0.7^n diag(0,1)
    for n in (1, 5, 20):
        assert np.allclose(c.power(p, n), np.eye(2) - 0.7**n * np.diag([0, 1]))
    _, full = subharmonic_limit(c, p)
    assert full


def test_predual_distance_examples():
    mm = DensityState.maximally_mixed(2)
    up = DensityState.pure([1, 0])
    # depolarizing: |0.25^n (rho - I/2)|_1 = 0.25^n for a pure state
    for n in (1, 2, 3):
        assert np.isclose(predual_distance(depolarizing(0.75), up, mm, n), 0.25**n)
    assert np.isclose(predual_distance(dephase_then_flip(), up, mm, 51), 1.0)


def test_correlation_examples():
    mm = DensityState.maximally_mixed(2)
    for n in (1, 2, 4):
        assert np.isclose(correlation(depolarizing(0.75), mm, Z, Z, n), 0.0625**n)
    assert np.isclose(correlation(dephase_then_flip(), mm, Z, Z, 7), 1.0)


def test_classify_depolarizing():
    cl = classify(depolarizing(0.75))
    assert cl.ergodic and cl.strong_mixing and cl.kolmogorov
    assert np.isclose(cl.spectral_gap, 0.75)
    assert cl.peripheral_eigenvalues == [1]


def test_classify_dephase_then_flip():
    cl = classify(dephase_then_flip())
    assert cl.ergodic and not cl.strong_mixing and not cl.kolmogorov
    assert sorted(z.real for z in cl.peripheral_eigenvalues) == [-1.0, 1.0]
    assert cl.G_dim == 2


def test_classify_identity_and_unitary():
    cl = classify(identity_channel(2), DensityState.maximally_mixed(2))
    assert not cl.ergodic and cl.fixed_algebra_dim == 4
    cl = classify(unitary_channel(np.diag([1, np.exp(1j * np.sqrt(2))])), DensityState.maximally_mixed(2))
    assert not cl.ergodic and cl.fixed_algebra_dim == 2


def test_classify_non_faithful_reports_reduction():
    cl = classify(amplitude_damping(0.3))
    assert not cl.faithful and cl.support_reduced
    assert cl.reduced.ergodic and cl.reduced.strong_mixing
    assert cl.ergodic and cl.strong_mixing and cl.kolmogorov


def test_spectrum_gap_of_depolarizing():
    sp = spectrum(depolarizing(0.25))
    assert np.isclose(sp["second_modulus"], 0.75)
    assert np.isclose(sp["gap"], 0.25)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_spectral_and_iterate_verdicts_agree(seed, n):
    rng = np.random.default_rng(seed)
    c = random_channel(n, rng, int(rng.integers(1, 4)))
    state = invariant_state(c)
    cl = classify(c, state)
    if spectrum(c)["second_modulus"] ** 200 > 1e-8:
        return
    assert iterate_mixing_verdict(c, state)[0] == cl.strong_mixing


def test_minimal_kraus_preserves_the_map():
    c = CPMap([X / np.sqrt(2), X / np.sqrt(2)])
    m = minimal_kraus(c)
    assert m.rank == 1
    assert np.allclose(m.superop.matrix, c.superop.matrix)


# Lindblad generators


def test_lindblad_pure_hamiltonian_is_unitary_conjugation():
    gen = LindbladGenerator(Z, [])
    t = np.pi / 3
    u = expm(1j * t * Z)
    x = np.array([[0, 1], [0, 0]], dtype=complex)
    assert np.allclose(lindblad_channel(gen, t)(x), u @ x @ u.conj().T)


def test_lindblad_decay_converges_to_ground_state():
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    gen = LindbladGenerator(np.zeros((2, 2)), [sm])
    c = lindblad_channel(gen, 30.0)
    rho = c.predual(np.diag([0.0, 1.0]).astype(complex))
    assert np.allclose(rho, np.diag([1, 0]), atol=1e-10)


def test_lindblad_generator_is_unital_and_semigroup():
    rng = np.random.default_rng(3)
    h = rng.standard_normal((3, 3))
    gen = LindbladGenerator(h + h.T, [rng.standard_normal((3, 3)) + 0j])
    assert np.allclose(gen(np.eye(3)), 0)
    a, b = lindblad_channel(gen, 0.4), lindblad_channel(gen, 0.6)
    assert np.allclose((a.superop @ b.superop).matrix, lindblad_channel(gen, 1.0).superop.matrix, atol=1e-10)


def test_matrix_units_order():
    u = matrix_units(2)
    assert np.allclose(u[1], [[0, 0], [1, 0]])


def test_support_projection_is_subharmonic_for_amplitude_damping():
    c = amplitude_damping(0.5)
    p = support_projection(invariant_state(c))
    gap = c(p) - p
    assert np.linalg.eigvalsh(gap).min() >= -1e-12
