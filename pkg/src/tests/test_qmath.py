import math

import numpy as np
import pytest

from hypothesis import given, settings, strategies as st

import nqsot
from nqsot.qmath import (PAULI_X, PAULI_Y, PAULI_Z, DensityMatrix, DepolarizingChannel, QubitBasis, bb84_state,
                         binary_entropy, binary_entropy_inv, c_distance, depolarize, fidelity, random_density_matrix,
                         trace_distance, von_neumann_entropy)


@pytest.mark.parametrize('entries', [
    [[1, 0.5], [0.4, 0]],
    [[0.6, 0], [0, 0.6]],
    [[1.5, 0], [0, -0.5]],
    [[1.0]],
])
def test_density_matrix_rejects(entries: list) -> None:
    with pytest.raises(nqsot.ValidationError):
        DensityMatrix(entries)


def test_density_matrix_is_read_only() -> None:
    rho = DensityMatrix.maximally_mixed(2)
    with pytest.raises(ValueError):
        rho.entries[0, 0] = 1.0


@pytest.mark.parametrize('tag,expected', [
    ('+', QubitBasis.COMPUTATIONAL),
    ('x', QubitBasis.HADAMARD),
    ('×', QubitBasis.HADAMARD),
    (QubitBasis.HADAMARD, QubitBasis.HADAMARD),
])
def test_basis_parse(tag: str, expected: QubitBasis) -> None:
    assert QubitBasis.parse(tag) is expected
    assert expected.other.other is expected
    assert QubitBasis.from_index(expected.index) is expected


def test_basis_parse_unknown() -> None:
    with pytest.raises(nqsot.ParameterError):
        QubitBasis.parse('y')


def test_bb84_states() -> None:
    plus = bb84_state(0, 'x')
    assert plus.is_pure()
    assert np.allclose(plus.entries, np.full((2, 2), 0.5))
    # Conjugate bases overlap with probability 1/2
    assert fidelity(bb84_state(0, '+'), plus) ** 2 == pytest.approx(0.5)


@pytest.mark.parametrize('r,expected', [
    (1.0, 0.0),
    (0.0, 1.0),
    (0.9, binary_entropy(0.95)),
])
def test_depolarized_bb84_entropy(r: float, expected: float) -> None:
    rho = DepolarizingChannel(r)(bb84_state(1, '+'))
    assert von_neumann_entropy(rho) == pytest.approx(expected, abs=1e-12)


def test_depolarize_rejects_bad_r() -> None:
    with pytest.raises(nqsot.ParameterError):
        depolarize(bb84_state(0, '+'), 1.5)


def test_trace_distance_examples() -> None:
    assert trace_distance(bb84_state(0, '+'), bb84_state(1, '+')) == pytest.approx(1.0)
    assert trace_distance(bb84_state(0, '+'), bb84_state(0, 'x')) == pytest.approx(math.sqrt(0.5))
    rho = DensityMatrix.diagonal([0.75, 0.25])
    assert trace_distance(rho, DensityMatrix.maximally_mixed(2)) == pytest.approx(0.25)


def test_c_distance_equals_trace_distance_on_pure() -> None:
    rng = nqsot.make_rng(3)
    for _ in range(20):
        rho = random_density_matrix(2, rng, components=1)
        sigma = random_density_matrix(2, rng, components=1)
        assert c_distance(rho, sigma) == pytest.approx(trace_distance(rho, sigma), abs=1e-7)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32), st.floats(min_value=0, max_value=1))
def test_distances_contract_under_noise(seed: int, r: float) -> None:
    rng = nqsot.make_rng(seed)
    rho = random_density_matrix(2, rng)
    sigma = random_density_matrix(2, rng)
    noisy = trace_distance(depolarize(rho, r), depolarize(sigma, r))
    assert noisy == pytest.approx(r * trace_distance(rho, sigma), abs=1e-9)
    assert trace_distance(rho, sigma) <= c_distance(rho, sigma) + 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32), st.floats(min_value=0, max_value=1),
       st.floats(min_value=0, max_value=1))
def test_depolarize_is_affine(seed: int, r: float, weight: float) -> None:
    rng = nqsot.make_rng(seed)
    rho = random_density_matrix(2, rng)
    sigma = random_density_matrix(2, rng)
    mixed = DensityMatrix(weight * rho.entries + (1 - weight) * sigma.entries, validate=False)
    expected = weight * depolarize(rho, r).entries + (1 - weight) * depolarize(sigma, r).entries
    assert np.allclose(depolarize(mixed, r).entries, expected, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32), st.floats(min_value=0, max_value=1))
def test_depolarize_commutes_with_paulis(seed: int, r: float) -> None:
    rho = random_density_matrix(2, nqsot.make_rng(seed))
    for pauli in (PAULI_X, PAULI_Y, PAULI_Z):
        rotated = DensityMatrix(pauli @ rho.entries @ pauli.conj().T, validate=False)
        expected = pauli @ depolarize(rho, r).entries @ pauli.conj().T
        assert np.allclose(depolarize(rotated, r).entries, expected, atol=1e-12)


@pytest.mark.parametrize('p,expected', [
    (0.0, 0.0),
    (0.5, 1.0),
    (0.11, 0.499916),
])
def test_binary_entropy(p: float, expected: float) -> None:
    assert binary_entropy(p) == pytest.approx(expected, abs=1e-6)


def test_binary_entropy_inverse_branches() -> None:
    low = binary_entropy_inv(0.5, branch='lower')
    high = binary_entropy_inv(0.5, branch='upper')
    assert low == pytest.approx(0.11003, abs=5e-4)
    assert high == pytest.approx(1 - low)
    assert binary_entropy(low) == pytest.approx(0.5, abs=1e-12)
    assert binary_entropy_inv(1.0) == 0.5
    with pytest.raises(nqsot.ParameterError):
        binary_entropy_inv(0.5, branch='middle')


@pytest.mark.parametrize('p', np.linspace(0.001, 0.49, 50))
def test_binary_entropy_inverse_identity(p: float) -> None:
    assert binary_entropy_inv(binary_entropy(p), branch='lower') == pytest.approx(p, abs=1e-9)
    assert binary_entropy_inv(binary_entropy(1 - p), branch='upper') == pytest.approx(1 - p, abs=1e-9)
