import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlgcompress import opcore
from nlgcompress.opcore import I2, X, Y, Z

from conftest import random_unitary

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def test_pauli_labels_and_signs():
    assert np.array_equal(opcore.pauli("-XZ"), -np.kron(X, Z))
    assert np.array_equal(opcore.pauli("+YI"), np.kron(Y, I2))
    assert np.array_equal(opcore.pauli("1Z"), np.kron(I2, Z))
    with pytest.raises(ValueError):
        opcore.pauli("XQ")


def test_operator_rejects_non_square():
    with pytest.raises(opcore.DimensionError):
        opcore.Operator(np.zeros((2, 3)))


@given(st.lists(st.tuples(finite, finite), min_size=4, max_size=4))
def test_operator_json_round_trip_is_bit_exact(pairs):
    m = np.array([complex(a, b) for a, b in pairs]).reshape(2, 2)
    data = json.loads(json.dumps(opcore.Operator(m).to_json()))
    back = opcore.Operator.from_json(data).array
    assert np.array_equal(back.view(float), m.view(float))


def test_state_vector_norm_is_enforced():
    with pytest.raises(ValueError):
        opcore.StateVector(np.array([1.0, 1.0]))
    s = opcore.StateVector(opcore.max_entangled(2))
    assert np.array_equal(opcore.StateVector.from_json(s.to_json()).array, s.array)


def test_operator_json_dim_mismatch():
    data = opcore.Operator(np.eye(2)).to_json()
    data["dim"] = 3
    with pytest.raises(opcore.DimensionError):
        opcore.Operator.from_json(data)


@pytest.mark.parametrize("d", [2, 4, 8])
def test_max_entangled_marginals_and_schmidt(d):
    phi = opcore.max_entangled(d)
    assert np.allclose(opcore.partial_trace(phi, [d, d], [0]), np.eye(d) / d, atol=1e-14)
    assert np.allclose(opcore.schmidt_coefficients(phi, (d, d)), 1 / np.sqrt(d), atol=1e-14)
    assert opcore.schmidt_rank(phi, (d, d)) == d


def _random_state(d, rng):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 2), (2, 3), (3, 4)]))
def test_partial_trace_of_product_state(seed, dims):
    rng = np.random.default_rng(seed)
    a, b = _random_state(dims[0], rng), _random_state(dims[1], rng)
    psi = np.kron(a, b)
    assert np.allclose(opcore.partial_trace(psi, dims, [0]), np.outer(a, a.conj()), atol=1e-12)
    rho = np.outer(psi, psi.conj())
    assert np.allclose(opcore.partial_trace(rho, dims, [1]), np.outer(b, b.conj()), atol=1e-12)
    assert opcore.schmidt_rank(psi, dims) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permute_subsystems_swaps_kron_factors(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3))
    swapped = opcore.permute_subsystems(np.kron(a, b), [2, 3], [1, 0])
    assert np.allclose(swapped, np.kron(b, a))
    u, v = _random_state(2, rng), _random_state(3, rng)
    assert np.allclose(opcore.permute_subsystems(np.kron(u, v), [2, 3], [1, 0]), np.kron(v, u))


def test_partial_trace_rejects_bad_dims():
    with pytest.raises(opcore.DimensionError):
        opcore.partial_trace(np.ones(6) / np.sqrt(6), [2, 2], [0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_commutator_is_antisymmetric(seed, d):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    assert np.allclose(opcore.commutator(a, b), -opcore.commutator(b, a))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_simultaneous_diag_recovers_a_commuting_family(seed, d):
    rng = np.random.default_rng(seed)
    u = random_unitary(d, rng)
    diags = [rng.integers(-2, 3, size=d).astype(float) for _ in range(3)]
    ops = [u @ np.diag(x) @ u.conj().T for x in diags]
    vecs, found = opcore.simultaneous_diag(ops, rng=np.random.default_rng(seed))
    assert opcore.is_unitary(vecs, 1e-10)
    for op, dg in zip(ops, found):
        assert np.allclose(vecs.conj().T @ op @ vecs, np.diag(dg), atol=1e-9)


def test_simultaneous_diag_reports_noncommuting_norm():
    with pytest.raises(opcore.NonCommutingError) as err:
        opcore.simultaneous_diag([X, Z])
    # [X, Z] = -2iY has Frobenius norm 2 * sqrt(2)
    assert err.value.max_norm == pytest.approx(2 * np.sqrt(2))


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(opcore.NotHermitianError):
        opcore.herm_eig(np.array([[0, 1], [0, 0]]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_rotated_projective_measurement_is_a_povm(seed, d):
    u = random_unitary(d, np.random.default_rng(seed))
    elements = [np.outer(u[:, j], u[:, j].conj()) for j in range(d)]
    check = opcore.is_povm(elements)
    assert check.ok and check.completeness < 1e-12


def test_is_povm_reports_each_defect():
    assert not opcore.is_povm([np.eye(2) / 2])
    assert opcore.is_povm([np.eye(2) / 2]).completeness == pytest.approx(np.sqrt(2) / 2)
    neg = opcore.is_povm([np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])])
    assert not neg.ok and neg.min_eigenvalue == pytest.approx(-0.5)
    herm = opcore.is_povm([np.array([[1, 1], [0, 0]]), np.array([[0, -1], [0, 1]])])
    assert not herm.ok and herm.hermiticity > 0
    assert not opcore.is_povm([])


def test_check_dims_power_of_two():
    assert opcore.check_dims_power_of_two(8) == 3
    assert opcore.check_dims_power_of_two(1) == 0
    with pytest.raises(opcore.DimensionError):
        opcore.check_dims_power_of_two(6)


def test_expectation_and_unitarity():
    phi = opcore.max_entangled(2)
    assert opcore.expectation(phi, np.kron(Z, Z)) == pytest.approx(1)
    assert opcore.expectation(phi, np.kron(Y, Y)) == pytest.approx(-1)
    assert opcore.is_unitary(opcore.H) and not opcore.is_unitary(2 * opcore.H)
