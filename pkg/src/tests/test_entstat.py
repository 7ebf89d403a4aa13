import math

import numpy as np
import pytest

import nqsot
from nqsot import entstat, verify
from nqsot.entstat import BoundParams, CqState
from nqsot.qmath import DensityMatrix, bb84_state, random_density_matrix


def _bit_state(rho0: DensityMatrix, rho1: DensityMatrix, p0: float = 0.5) -> CqState:
    return CqState([0, 1], [p0, 1 - p0], [rho0, rho1])


def test_min_entropy_examples() -> None:
    mixed = DensityMatrix.maximally_mixed(2)
    assert entstat.min_entropy_cq(_bit_state(mixed, mixed)) == pytest.approx(1.0)
    copied = CqState.from_joint_distribution(np.array([[0.5, 0.0], [0.0, 0.5]]))
    assert entstat.min_entropy_cq(copied) == pytest.approx(0.0)
    conjugate = _bit_state(bb84_state(0, '+'), bb84_state(0, 'x'))
    assert entstat.min_entropy_cq(conjugate) == pytest.approx(0.228487, abs=1e-6)
    assert entstat.guess_prob(conjugate) == pytest.approx(math.cos(math.pi / 8) ** 2, abs=1e-12)


def test_dual_matches_helstrom() -> None:
    rng = nqsot.make_rng(11)
    for _ in range(5):
        state = _bit_state(random_density_matrix(2, rng), random_density_matrix(2, rng), p0=0.3)
        helstrom = entstat.min_entropy_cq(state)
        assert entstat.min_entropy_dual(state) == pytest.approx(helstrom, abs=1e-6)


def test_classical_guess_over_many_labels() -> None:
    pxe = np.array([[0.2, 0.1], [0.05, 0.3], [0.25, 0.1]])
    state = CqState.from_joint_distribution(pxe, labels=['a', 'b', 'c'])
    assert state.is_classical
    assert entstat.guess_prob(state) == pytest.approx(0.25 + 0.3)


def test_unsupported_quantum_instance() -> None:
    rng = nqsot.make_rng(5)
    state = CqState([0, 1, 2], [0.2, 0.3, 0.5], [random_density_matrix(8, rng) for _ in range(3)])
    with pytest.raises(nqsot.UnsupportedInstance):
        entstat.guess_prob(state)


def test_cq_state_validation() -> None:
    rho = DensityMatrix.maximally_mixed(2)
    with pytest.raises(nqsot.ValidationError):
        CqState([0, 1], [0.6, 0.6], [rho, rho])
    with pytest.raises(nqsot.ParameterError):
        CqState([0, 0], [0.5, 0.5], [rho, rho])
    with pytest.raises(nqsot.ValidationError):
        CqState([0, 1], [0.5, 0.5], [rho, DensityMatrix.maximally_mixed(4)])


@pytest.mark.parametrize('pxe,expected', [
    ([[0.25, 0.25], [0.25, 0.25]], 0.0),
    ([[0.5, 0.0], [0.0, 0.5]], 0.5),
    ([[0.75], [0.25]], 0.25),
])
def test_non_uniformity(pxe: list, expected: float) -> None:
    state = CqState.from_joint_distribution(np.array(pxe))
    assert entstat.non_uniformity(state) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize('hmin,ell,eps,expected', [
    (5, 5, 0.0, 0.5),
    (10, 4, 0.0, 0.0625),
    (20, 10, 0.01, 0.025625),
])
def test_pa_bound(hmin: float, ell: int, eps: float, expected: float) -> None:
    assert entstat.pa_bound(hmin, ell, eps) == pytest.approx(expected, abs=1e-15)


def test_pa_bound_rejects_negative_ell() -> None:
    with pytest.raises(nqsot.ParameterError):
        entstat.pa_bound(3, -1, 0.0)


def test_aep_lower_bound() -> None:
    params = BoundParams(n=10 ** 6, eps=1e-3)
    delta = entstat.aep_delta(params)
    assert delta == pytest.approx(0.035442, abs=1e-5)
    entropies = [0.5] * params.n
    plain = entstat.aep_lower_bound(params, entropies)
    assert plain == pytest.approx(500000 - delta * params.n, rel=1e-12)
    assert entstat.aep_lower_bound(params, entropies, use_gamma=True) == pytest.approx(plain, rel=1e-12)
    assert entstat.aep_lower_bound(BoundParams(n=34, eps=1e-3), [0.0] * 34) < 0


def test_aep_floor_and_mismatch() -> None:
    assert entstat.aep_floor(1e-3) == 34
    with pytest.raises(nqsot.PreconditionError):
        entstat.aep_lower_bound(BoundParams(n=33, eps=1e-3), [0.5] * 33)
    with pytest.raises(nqsot.ParameterError):
        entstat.aep_lower_bound(BoundParams(n=40, eps=1e-3), [0.5] * 39)


@pytest.mark.parametrize('branches,alpha,index,guaranteed', [
    ([3, 7], 10, 0, 5),
    ([4, 4], None, 0, 4),
    ([6, 2], None, 1, 4),
    ([3, 3, 3, 3], 12, 0, 4),
])
def test_split_index(branches: list, alpha: float, index: int, guaranteed: float) -> None:
    result = entstat.split_index(branches, alpha=alpha)
    assert result.index == index
    assert result.guaranteed_bits == pytest.approx(guaranteed)


@pytest.mark.parametrize('branches', [[], [1.0], [1.0, -0.5]])
def test_split_index_rejects(branches: list) -> None:
    with pytest.raises(nqsot.ParameterError):
        entstat.split_index(branches)


@pytest.mark.parametrize('n,eps,expected', [
    (50, 0.0, 1.0),
    (100, 0.1, 0.270671),
    (10 ** 4, 0.05, 3.8575e-22),
])
def test_chernoff_tail(n: int, eps: float, expected: float) -> None:
    assert entstat.chernoff_tail(n, eps) == pytest.approx(expected, rel=1e-4)


def test_entropy_suite_small() -> None:
    result = verify.check_entropy(seed=1, duality=10, classical=100, products=5)
    assert result.passed, result.counterexample
    assert result.checks == 10 + 100 * 4 + 5 * 2
