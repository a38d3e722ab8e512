import numpy as np
import pytest

from qreset.errors import (
    DimensionMismatch,
    InvalidEpsilon,
    InvariantViolation,
    NotDensity,
    SumMismatch,
    ValidationError,
)
from qreset.operator_core import random_density
from qreset.purity_majorization import (
    SpectrumPartition,
    dimension_sweep,
    epsilon_reset_check,
    exhaustive_max_purity,
    majorizes,
    max_qubit_purity,
    optimal_reshuffle,
    spectrum,
    thermal_ladder,
    thermal_qubit,
)


def test_majorizes():
    assert majorizes([0.7, 0.2, 0.1], [0.5, 0.3, 0.2])
    assert majorizes([0.1, 0.2, 0.7], [0.5, 0.3, 0.2])
    assert not majorizes([0.5, 0.3, 0.2], [0.7, 0.2, 0.1])
    assert majorizes([0.4, 0.6], [0.6, 0.4])

    with pytest.raises(DimensionMismatch):
        majorizes([1.0], [0.5, 0.5])
    with pytest.raises(SumMismatch):
        majorizes([0.5, 0.4], [0.5, 0.5])


def test_spectrum():
    rng = np.random.default_rng(0)
    values = spectrum(random_density(4, rng))
    assert values.sum() == pytest.approx(1)
    assert np.all(np.diff(values) <= 0)
    assert np.all(values >= 0)

    with pytest.raises(NotDensity):
        spectrum(np.diag([1.0, 1.0]))


@pytest.mark.parametrize('d_b, expected', [(2, 0.909646), (3, 0.9703), (4, 0.99506)])
def test_max_purity_of_thermal_ancillas(d_b, expected):
    purity = max_qubit_purity(thermal_qubit(1.0, 1.0), thermal_ladder(d_b, 3.0, 1.0))
    assert purity == pytest.approx(expected, abs=5e-5)


def test_reshuffle_of_four_level_ancilla():
    partition = optimal_reshuffle(thermal_qubit(1.0, 1.0), thermal_ladder(4, 3.0, 1.0))
    assert partition.dims == (2, 4)
    assert partition.s_prime == pytest.approx([0.997525, 0.002475], abs=1e-6)
    assert np.all(np.diff(partition.lambdas_prime.ravel()) <= 0)

    p = partition.permutation_matrix()
    assert np.allclose(p @ p.T, np.eye(8))
    assert np.allclose(p @ np.diag(partition.lambdas.ravel()) @ p.T, np.diag(partition.lambdas_prime.ravel()))

    restored = SpectrumPartition.from_json(partition.to_json())
    assert restored.purity == pytest.approx(partition.purity)

    with pytest.raises(ValidationError):
        SpectrumPartition(partition.lambdas, partition.lambdas_prime, partition.s_prime, partition.permutation[::-1])


def test_reshuffle_marginal_majorizes_diagonal_reshuffles():
    rng = np.random.default_rng(4)
    rho_s, rho_b = random_density(2, rng), random_density(3, rng)
    partition = optimal_reshuffle(rho_s, rho_b)
    values = partition.lambdas.ravel()
    for _ in range(20):
        shuffled = rng.permutation(values).reshape(2, 3).sum(axis=1)
        assert majorizes(partition.s_prime, shuffled)


@pytest.mark.parametrize('d_s, d_b', [(2, 2), (2, 3), (2, 5), (3, 3), (3, 4)])
def test_exhaustive_search_agrees(d_s, d_b):
    rng = np.random.default_rng(d_s * 10 + d_b)
    rho_s, rho_b = random_density(d_s, rng), random_density(d_b, rng)
    assert exhaustive_max_purity(rho_s, rho_b, threads=2) == pytest.approx(max_qubit_purity(rho_s, rho_b), abs=1e-12)


def test_exhaustive_search_size_limit():
    with pytest.raises(ValidationError):
        exhaustive_max_purity(np.eye(2) / 2, np.eye(7) / 7)


def test_epsilon_reset_check():
    cold = np.diag([0.97, 0.01, 0.01, 0.01])
    check = epsilon_reset_check(cold, d_s=2, eps=0.1)
    assert check.eligible
    assert check.required == 2
    assert check.threshold == pytest.approx(0.0125)
    assert check.achieved_infidelity == pytest.approx(1 - 0.98**2 - 0.02**2)

    warm = epsilon_reset_check(thermal_ladder(2, 3.0, 1.0), d_s=2, eps=0.01)
    assert not warm.eligible
    assert warm.achieved_infidelity == pytest.approx(1 - 0.909646, abs=1e-6)

    with pytest.raises(InvalidEpsilon):
        epsilon_reset_check(cold, d_s=2, eps=0)
    with pytest.raises(ValidationError):
        epsilon_reset_check(cold, d_s=1, eps=0.1)


def test_dimension_sweep():
    sweep = dimension_sweep([2, 3, 4], [0.5, 1.0], threads=2)
    assert list(sweep.columns) == ['d_b', 'beta', 'max_purity']
    assert len(sweep) == 6
    for _, group in sweep.groupby('beta'):
        assert group.sort_values('d_b').max_purity.is_monotonic_increasing
    row = sweep[(sweep.d_b == 4) & (sweep.beta == 1.0)].iloc[0]
    assert row.max_purity == pytest.approx(0.99506, abs=5e-5)

    with pytest.raises(ValidationError):
        thermal_ladder(1, 3.0, 1.0)


def test_epsilon_reset_check_raises_when_bound_fails(monkeypatch):
    monkeypatch.setattr('qreset.purity_majorization.max_qubit_purity', lambda rho_s, rho_b: 0.5)
    with pytest.raises(InvariantViolation):
        epsilon_reset_check(np.diag([0.97, 0.01, 0.01, 0.01]), d_s=2, eps=0.1)
    assert not epsilon_reset_check(thermal_ladder(2, 3.0, 1.0), d_s=2, eps=0.01).eligible
