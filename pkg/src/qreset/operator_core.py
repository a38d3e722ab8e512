"""
Dense complex matrix kernel.

Every Hamiltonian, propagator and density matrix in the package is a plain
square complex `numpy.ndarray`; `OperatorMatrix` is only an alias naming that role.
"""
import logging
from functools import reduce
from typing import Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, NotDensity, NotHermitian, ValidationError

LOGGER = logging.getLogger(__name__)

OperatorMatrix = np.ndarray

HERMITICITY_TOL = 1e-10
UNITARITY_TOL = 1e-10
DENSITY_TOL = 1e-8
EQUALITY_TOL = 1e-9

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_1, SIGMA_2, SIGMA_3)

SUBSYSTEM_S = 'S'
SUBSYSTEM_B = 'B'


def as_operator(matrix) -> OperatorMatrix:
    """Coerce to a square complex array."""
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
        raise DimensionMismatch(f'Expected a square matrix, got shape `{matrix.shape}`')
    return matrix


def is_hermitian(matrix, tol: float = HERMITICITY_TOL) -> bool:
    matrix = as_operator(matrix)
    return bool(np.max(np.abs(matrix - matrix.conj().T)) <= tol)


def is_unitary(matrix, tol: float = UNITARITY_TOL) -> bool:
    matrix = as_operator(matrix)
    return bool(np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0]))) <= tol)


def is_density(matrix, tol: float = DENSITY_TOL) -> bool:
    """Hermitian, unit trace and positive semidefinite, all within `tol`."""
    matrix = as_operator(matrix)
    if not is_hermitian(matrix, tol):
        return False
    if abs(np.trace(matrix) - 1) > tol:
        return False
    eigenvalues = np.linalg.eigvalsh((matrix + matrix.conj().T) / 2)
    return bool(eigenvalues[0] >= -tol)


def tensor(*operators: OperatorMatrix) -> OperatorMatrix:
    """Kronecker product of all arguments, left to right."""
    return reduce(np.kron, operators)


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    return a @ b - b @ a


def hs_inner(a: OperatorMatrix, b: OperatorMatrix) -> complex:
    """Hilbert-Schmidt inner product tr{a† b}."""
    return complex(np.vdot(a, b))


def frobenius_norm(matrix: OperatorMatrix) -> float:
    return float(np.linalg.norm(matrix, 'fro'))


def hermitian_eig(h: OperatorMatrix) -> Tuple[np.ndarray, OperatorMatrix]:
    """
    Eigenvalues in ascending order and the unitary matrix of eigenvectors (columns).

    >>> values, _ = hermitian_eig(SIGMA_3)
    >>> values.tolist()
    [-1.0, 1.0]
    """
    h = as_operator(h)
    if not is_hermitian(h):
        raise NotHermitian(f'Matrix is not Hermitian within {HERMITICITY_TOL}')
    return np.linalg.eigh((h + h.conj().T) / 2)


def propagator(h: OperatorMatrix, t: float) -> OperatorMatrix:
    """
    exp(-iHt) through the eigendecomposition of H.

    Exact for time-independent H; the result is unitary to rounding.
    """
    values, vectors = hermitian_eig(h)
    return (vectors * np.exp(-1j * values * t)) @ vectors.conj().T


def propagators(h: OperatorMatrix, times: Sequence[float]) -> np.ndarray:
    """exp(-iHt) for many times sharing one eigendecomposition, shape (len(times), d, d)."""
    values, vectors = hermitian_eig(h)
    phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), values))
    return np.einsum('ij,tj,kj->tik', vectors, phases, vectors.conj())


def partial_trace(matrix: OperatorMatrix, dims: Tuple[int, int], which: str = SUBSYSTEM_B) -> OperatorMatrix:
    """
    Trace out one factor of a bipartite operator.

    Args:
        matrix: operator on the d_S·d_B dimensional joint space, qubit factor first
        dims: (d_S, d_B)
        which: the subsystem traced out, `'B'` keeps the qubit and `'S'` keeps the ancilla

    >>> partial_trace(np.eye(4), (2, 2)).real.tolist()
    [[2.0, 0.0], [0.0, 2.0]]
    """
    matrix = as_operator(matrix)
    d_s, d_b = dims
    if matrix.shape[0] != d_s * d_b:
        raise DimensionMismatch(f'Matrix of dimension `{matrix.shape[0]}` does not match dims `{dims}`')
    blocks = matrix.reshape(d_s, d_b, d_s, d_b)
    if which == SUBSYSTEM_B:
        return np.einsum('ajbj->ab', blocks)
    if which == SUBSYSTEM_S:
        return np.einsum('iaib->ab', blocks)
    raise ValidationError(f'Unknown subsystem `{which}`, use `{SUBSYSTEM_S}` or `{SUBSYSTEM_B}`')


def purity(rho: OperatorMatrix) -> float:
    """
    tr{ρ²} of a density matrix.

    >>> purity(np.eye(2) / 2)
    0.5
    """
    rho = as_operator(rho)
    if not is_density(rho):
        raise NotDensity('Purity requires a density matrix')
    value = np.trace(rho @ rho)
    return float(value.real)


def random_unitary(dim: int, rng: np.random.Generator) -> OperatorMatrix:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_density(dim: int, rng: np.random.Generator, rank: int = None) -> OperatorMatrix:
    """Random density matrix from a Ginibre matrix of the given rank."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng: np.random.Generator) -> OperatorMatrix:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2
