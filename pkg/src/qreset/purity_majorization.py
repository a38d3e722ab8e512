"""
Maximum qubit purity reachable by a joint unitary on qubit and ancilla.

A unitary keeps the joint spectrum {s_i·b_j}; with a product output the qubit marginal
s′ is a grouping of that spectrum into d_S blocks of d_B values. The grouping whose
marginal majorizes all others (largest values first) maximizes every Schur-convex
function of s′, the purity Σ(s′_i)² among them.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd

from .errors import DimensionMismatch, InvalidEpsilon, InvariantViolation, NotDensity, SumMismatch, ValidationError
from .model import thermal_state
from .operator_core import SIGMA_3, OperatorMatrix, as_operator, is_density
from .utils.iter import parallel_map

LOGGER = logging.getLogger(__name__)

SUM_TOL = 1e-12
EXHAUSTIVE_MAX_SIZE = 12


def majorizes(a: Sequence[float], b: Sequence[float], tol: float = SUM_TOL) -> bool:
    """
    True when every prefix sum of sorted(a, reverse) dominates that of b.

    >>> majorizes([1, 0], [0.5, 0.5]), majorizes([0.5, 0.5], [0.6, 0.4])
    (True, False)
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f'Cannot compare vectors of lengths `{len(a)}` and `{len(b)}`')
    if abs(a.sum() - b.sum()) > tol:
        raise SumMismatch(f'Vectors sum to `{a.sum()}` and `{b.sum()}`')
    prefix_a = np.cumsum(np.sort(a)[::-1])
    prefix_b = np.cumsum(np.sort(b)[::-1])
    return bool(np.all(prefix_a >= prefix_b - tol))


def spectrum(rho: OperatorMatrix) -> np.ndarray:
    """Eigenvalues of a density matrix in descending order, clipped at zero and renormalized."""
    rho = as_operator(rho)
    if not is_density(rho):
        raise NotDensity('Spectrum requires a density matrix')
    values = np.clip(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[::-1], 0.0, None)
    return values / values.sum()


@dataclass
class SpectrumPartition:
    """
    Joint spectrum before (`lambdas[i, j] = s_i·b_j`) and after the reshuffle.

    `lambdas_prime.ravel()[k] == lambdas.ravel()[permutation[k]]`; row i of `lambdas_prime`
    is the block summing to s′_i.
    """

    lambdas: np.ndarray
    lambdas_prime: np.ndarray
    s_prime: np.ndarray
    permutation: np.ndarray

    def __post_init__(self):
        if abs(self.lambdas.sum() - 1) > SUM_TOL:
            raise SumMismatch(f'Joint spectrum sums to `{self.lambdas.sum()}`')
        if not np.array_equal(self.lambdas.ravel()[self.permutation], self.lambdas_prime.ravel()):
            raise ValidationError('Permutation does not map the joint spectrum onto the reshuffled one')

    @property
    def purity(self) -> float:
        return float(np.sum(self.s_prime**2))

    @property
    def dims(self):
        return self.lambdas.shape

    def permutation_matrix(self) -> OperatorMatrix:
        """P with diag(λ′) = P·diag(λ)·Pᵀ in the joint eigenbasis, qubit index first."""
        size = self.lambdas.size
        p = np.zeros((size, size), dtype=complex)
        p[np.arange(size), self.permutation] = 1
        return p

    def to_json(self) -> Dict:
        return {
            'lambdas': self.lambdas.tolist(),
            'lambdas_prime': self.lambdas_prime.tolist(),
            's_prime': self.s_prime.tolist(),
            'permutation': self.permutation.tolist(),
            'purity': self.purity,
        }

    @classmethod
    def from_json(cls, data: Dict) -> SpectrumPartition:
        return cls(
            lambdas=np.asarray(data['lambdas'], dtype=float),
            lambdas_prime=np.asarray(data['lambdas_prime'], dtype=float),
            s_prime=np.asarray(data['s_prime'], dtype=float),
            permutation=np.asarray(data['permutation'], dtype=int),
        )


def optimal_reshuffle(rho_s: OperatorMatrix, rho_b: OperatorMatrix) -> SpectrumPartition:
    """Sort the joint spectrum descending (stable) and cut it into d_S consecutive blocks of d_B."""
    s, b = spectrum(rho_s), spectrum(rho_b)
    lambdas = np.outer(s, b)
    permutation = np.argsort(-lambdas.ravel(), kind='stable')
    lambdas_prime = lambdas.ravel()[permutation].reshape(lambdas.shape)
    return SpectrumPartition(lambdas, lambdas_prime, lambdas_prime.sum(axis=1), permutation)


def max_qubit_purity(rho_s: OperatorMatrix, rho_b: OperatorMatrix) -> float:
    """
    Largest purity of the qubit marginal over all joint unitaries.

    >>> max_qubit_purity(np.eye(2) / 2, np.diag([1.0, 0.0]))
    1.0
    """
    return optimal_reshuffle(rho_s, rho_b).purity


def _best_grouping(values: np.ndarray, size: int) -> float:
    """Maximum Σ(block sum)² over all partitions of `values` into blocks of `size`."""
    if len(values) == 0:
        return 0.0
    first, rest = values[0], values[1:]
    best = 0.0
    for chosen in itertools.combinations(range(len(rest)), size - 1):
        block = first + rest[list(chosen)].sum()
        remaining = np.delete(rest, chosen)
        best = max(best, block**2 + _best_grouping(remaining, size))
    return best


def exhaustive_max_purity(rho_s: OperatorMatrix, rho_b: OperatorMatrix, threads: Optional[int] = None) -> float:
    """Brute force over every grouping of the joint spectrum, parallel over the block holding the first value."""
    s, b = spectrum(rho_s), spectrum(rho_b)
    values = np.outer(s, b).ravel()
    size = len(b)
    if len(values) > EXHAUSTIVE_MAX_SIZE:
        raise ValidationError(f'Exhaustive search limited to d_S·d_B <= {EXHAUSTIVE_MAX_SIZE}, got `{len(values)}`')
    first, rest = values[0], values[1:]

    def grouping(chosen):
        block = first + rest[list(chosen)].sum()
        return block**2 + _best_grouping(np.delete(rest, chosen), size)

    choices = list(itertools.combinations(range(len(rest)), size - 1))
    return float(max(parallel_map(grouping, choices, threads=threads, desc='Groupings')))


class EpsilonCheck(NamedTuple):
    eligible: bool
    achieved_infidelity: float
    required: int
    threshold: float


def epsilon_reset_check(rho_b: OperatorMatrix, d_s: int, eps: float) -> EpsilonCheck:
    """
    Whether the ancilla has enough small eigenvalues to reset any d_S-level system ε-close to purity.

    Eligible when at least ⌈d_B(d_S−1)/d_S⌉ eigenvalues lie below ε/(2d_B(d_S−1)); the infidelity
    1 − 𝒫 is evaluated for the maximally mixed system, the hardest input.
    """
    if not eps > 0:
        raise InvalidEpsilon(f'eps must be positive, got `{eps}`')
    if d_s < 2:
        raise ValidationError(f'System dimension must be at least 2, got `{d_s}`')
    b = spectrum(rho_b)
    d_b = len(b)
    required = -(-d_b * (d_s - 1) // d_s)
    threshold = eps / (2 * d_b * (d_s - 1))
    eligible = int(np.sum(b < threshold)) >= required
    infidelity = 1 - max_qubit_purity(np.eye(d_s) / d_s, rho_b)
    if eligible and infidelity > eps + SUM_TOL:
        raise InvariantViolation(f'Eligible ancilla leaves infidelity {infidelity} above {eps}')
    return EpsilonCheck(bool(eligible), float(infidelity), required, threshold)


def thermal_ladder(d_b: int, gap: float, beta: float) -> OperatorMatrix:
    """Gibbs state of d_B equidistant levels 0, gap, 2·gap, ..."""
    if d_b < 2:
        raise ValidationError(f'Ancilla needs at least two levels, got `{d_b}`')
    return thermal_state(np.diag(gap * np.arange(d_b)).astype(complex), beta)


def thermal_qubit(omega_s: float, beta: float) -> OperatorMatrix:
    return thermal_state(omega_s / 2 * SIGMA_3, beta)


def dimension_sweep(
    dims: Sequence[int],
    betas: Sequence[float],
    omega_s: float = 1.0,
    gap: float = 3.0,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """Maximum qubit purity for thermal qubit and ladder ancilla over (d_B, β)."""
    points = list(itertools.product(dims, betas))
    rows: List[Dict] = parallel_map(
        lambda point: {
            'd_b': int(point[0]),
            'beta': float(point[1]),
            'max_purity': max_qubit_purity(thermal_qubit(omega_s, point[1]), thermal_ladder(point[0], gap, point[1])),
        },
        points,
        threads=threads,
        desc='Dimension sweep',
    )
    return pd.DataFrame(rows, columns=['d_b', 'beta', 'max_purity'])
