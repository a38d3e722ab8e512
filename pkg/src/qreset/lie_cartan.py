"""
Dynamical Lie algebras of the qubit-ancilla system and their Cartan decompositions.

Anti-Hermitian 4×4 matrices are handled as real vectors (real and imaginary parts
stacked), so that the real Hilbert-Schmidt product Re tr{X†Y} is the dot product and
spans, projections and null spaces reduce to real linear algebra.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import DecompositionFailure, NotAntiHermitian, ValidationError
from .model import OperatorSelector, operator_of
from .operator_core import IDENTITY_2, PAULIS, OperatorMatrix, commutator, tensor
from .utils.iter import parallel_map

LOGGER = logging.getLogger(__name__)

CLOSURE_TOL = 1e-9
SPAN_TOL = 1e-8
COMMUTING_TOL = 1e-9

CLASSIFICATION_PARAMETERS = {'omega_s': 1.0, 'omega_b': 3.0, 'j': 0.1, 'eps': 0.7}


def _vec(matrix: OperatorMatrix) -> np.ndarray:
    return np.concatenate([matrix.real.ravel(), matrix.imag.ravel()])


def _unvec(vector: np.ndarray, dim: int) -> OperatorMatrix:
    n = dim * dim
    return (vector[:n] + 1j * vector[n:]).reshape(dim, dim)


def pauli_element(a: int, b: int) -> OperatorMatrix:
    """i·σ_a⊗σ_b, index 0 standing for the identity."""
    factors = (IDENTITY_2,) + PAULIS
    return 1j * tensor(factors[a], factors[b])


LOCAL_DIRECTIONS = [pauli_element(a, 0) for a in (1, 2, 3)] + [pauli_element(0, b) for b in (1, 2, 3)]
NONLOCAL_DIRECTIONS = [pauli_element(a, b) for a in (1, 2, 3) for b in (1, 2, 3)]


@dataclass
class AlgebraBasis:
    """Orthonormal basis (real Hilbert-Schmidt product) of a real subspace of anti-Hermitian matrices."""

    elements: List[OperatorMatrix] = field(default_factory=list)
    dim_space: int = 4

    @property
    def dim(self) -> int:
        return len(self.elements)

    def __len__(self):
        return self.dim

    def __iter__(self):
        return iter(self.elements)

    @property
    def vectors(self) -> np.ndarray:
        if not self.elements:
            return np.zeros((0, 2 * self.dim_space**2))
        return np.array([_vec(e) for e in self.elements])

    @property
    def projector(self) -> np.ndarray:
        v = self.vectors
        return v.T @ v

    def residual(self, matrix: OperatorMatrix) -> OperatorMatrix:
        """Component of `matrix` orthogonal to the span."""
        x = _vec(matrix)
        v = self.vectors
        if len(v):
            x = x - v.T @ (v @ x)
        return _unvec(x, self.dim_space)

    def contains(self, matrix: OperatorMatrix, tol: float = SPAN_TOL) -> bool:
        return np.linalg.norm(self.residual(matrix)) <= tol * max(1.0, np.linalg.norm(matrix))

    def same_span(self, other: AlgebraBasis, tol: float = SPAN_TOL) -> bool:
        return self.dim == other.dim and np.max(np.abs(self.projector - other.projector), initial=0.0) <= tol

    def admit(self, matrix: OperatorMatrix, tol: float = CLOSURE_TOL) -> bool:
        """Append the normalized orthogonal residual of `matrix` when its norm exceeds `tol`."""
        rest = self.residual(self.residual(matrix))
        norm = np.linalg.norm(rest)
        if norm <= tol:
            return False
        self.elements.append(rest / norm)
        return True

    @classmethod
    def spanned_by(cls, matrices: Iterable[OperatorMatrix], tol: float = CLOSURE_TOL) -> AlgebraBasis:
        basis = cls()
        for m in matrices:
            basis.admit(m, tol)
        return basis


def _check_anti_hermitian(matrix: OperatorMatrix, tol: float = 1e-10):
    if np.max(np.abs(matrix + matrix.conj().T)) > tol * max(1.0, np.max(np.abs(matrix))):
        raise NotAntiHermitian('Lie algebra generators must be anti-Hermitian')


def lie_closure(generators: Sequence[OperatorMatrix], tol: float = CLOSURE_TOL) -> AlgebraBasis:
    """
    Smallest real Lie algebra containing the generators.

    Generators are made traceless and normalized; iterated commutators are added by
    Gram-Schmidt while their orthogonal residual exceeds `tol`.
    """
    dim = generators[0].shape[0]
    basis = AlgebraBasis(dim_space=dim)
    for g in generators:
        g = np.asarray(g, dtype=complex)
        _check_anti_hermitian(g)
        g = g - np.trace(g) / dim * np.eye(dim)
        norm = np.linalg.norm(g)
        if norm > tol:
            basis.admit(g / norm, tol)

    checked = 0
    while checked < basis.dim:
        new = basis.elements[checked]
        for old in basis.elements[: checked + 1]:
            c = commutator(old, new)
            norm = np.linalg.norm(c)
            if norm > tol:
                basis.admit(c / norm, tol)
        checked += 1

    LOGGER.debug(f'Lie closure of {len(generators)} generators has dimension {basis.dim}')
    return basis


def cartan_split(algebra: AlgebraBasis, tol: float = SPAN_TOL) -> Tuple[AlgebraBasis, AlgebraBasis]:
    """
    Split an algebra against su(4) = 𝔨 ⊕ 𝔭, 𝔨 local and 𝔭 non-local.

    Basis elements mixing both parts are re-based by projecting every element onto 𝔨
    and 𝔭; both projections must again lie in the algebra.
    """
    local = AlgebraBasis.spanned_by([d / 2 for d in LOCAL_DIRECTIONS])
    nonlocal_ = AlgebraBasis.spanned_by([d / 2 for d in NONLOCAL_DIRECTIONS])

    k_part, p_part = AlgebraBasis(), AlgebraBasis()
    for element in algebra:
        k_component = element - local.residual(element)
        p_component = element - nonlocal_.residual(element)
        for part, component in ((k_part, k_component), (p_part, p_component)):
            if np.linalg.norm(component) <= tol:
                continue
            if not algebra.contains(component, tol):
                raise DecompositionFailure('Projection of an algebra element leaves the algebra')
            part.admit(component, tol)

    if k_part.dim + p_part.dim != algebra.dim:
        raise DecompositionFailure(
            f'dim k ({k_part.dim}) + dim p ({p_part.dim}) differs from the algebra dimension ({algebra.dim})'
        )
    return k_part, p_part


def _centralizer(elements: Sequence[OperatorMatrix], p_part: AlgebraBasis, tol: float) -> AlgebraBasis:
    """Elements of span(p_part) commuting with every matrix in `elements`."""
    columns = [np.concatenate([_vec(commutator(x, p)) for x in elements]) for p in p_part]
    ad = np.array(columns).T
    _, singular, vh = np.linalg.svd(ad)
    scale = max(1.0, singular[0]) if len(singular) else 1.0
    rank = int(np.sum(singular > tol * scale))
    null = vh[rank:]
    return AlgebraBasis([sum(c * p for c, p in zip(coefficients, p_part)) for coefficients in null])


def _is_maximal_abelian(elements: Sequence[OperatorMatrix], p_part: AlgebraBasis, tol: float) -> bool:
    commuting = all(np.linalg.norm(commutator(a, b)) <= tol for a, b in itertools.combinations(elements, 2))
    return commuting and _centralizer(elements, p_part, tol).dim == len(elements)


def cartan_subalgebra(p_part: AlgebraBasis, tol: float = COMMUTING_TOL, attempts: int = 10) -> AlgebraBasis:
    """
    A maximal Abelian subalgebra of 𝔭.

    Greedy over the basis of 𝔭: start from the first element and keep every later one commuting with
    all kept so far. When the result is not maximal in 𝔭 (a rotated basis can block the greedy pass),
    the centralizer of a generic element of 𝔭 drawn from fixed seeds is used instead.
    """
    if p_part.dim == 0:
        return AlgebraBasis()

    chosen = [p_part.elements[0]]
    for element in p_part.elements[1:]:
        if all(np.linalg.norm(commutator(element, c)) <= tol for c in chosen):
            chosen.append(element)
    if _is_maximal_abelian(chosen, p_part, tol):
        return AlgebraBasis(chosen, dim_space=p_part.dim_space)
    LOGGER.debug(f'Greedy Cartan subalgebra of dim {len(chosen)} is not maximal, using a generic element')

    for seed in range(attempts):
        weights = np.random.default_rng(seed).standard_normal(p_part.dim)
        generic = sum(w * p for w, p in zip(weights, p_part))
        candidate = _centralizer([generic], p_part, tol)
        if _is_maximal_abelian(candidate.elements, p_part, tol):
            return candidate
        LOGGER.debug(f'Cartan subalgebra attempt {seed} hit a non-generic element')
    raise DecompositionFailure(f'No maximal Abelian subalgebra found in {attempts} attempts')


@dataclass
class CartanReport:
    l_basis: AlgebraBasis
    k_basis: AlgebraBasis
    p_basis: AlgebraBasis
    a_basis: AlgebraBasis

    @property
    def dim_l(self) -> int:
        return self.l_basis.dim

    @property
    def dim_k(self) -> int:
        return self.k_basis.dim

    @property
    def dim_p(self) -> int:
        return self.p_basis.dim

    @property
    def dim_a(self) -> int:
        return self.a_basis.dim

    @property
    def purifiable(self) -> bool:
        return self.dim_a == 2


def analyze(generators: Sequence[OperatorMatrix]) -> CartanReport:
    algebra = lie_closure(generators)
    k_part, p_part = cartan_split(algebra)
    return CartanReport(algebra, k_part, p_part, cartan_subalgebra(p_part))


def classification_generators(
    o_s: OperatorSelector,
    o_b: OperatorSelector,
    o_c: OperatorSelector,
    omega_s: float = CLASSIFICATION_PARAMETERS['omega_s'],
    omega_b: float = CLASSIFICATION_PARAMETERS['omega_b'],
    j: float = CLASSIFICATION_PARAMETERS['j'],
    eps: float = CLASSIFICATION_PARAMETERS['eps'],
) -> List[OperatorMatrix]:
    """
    Drift terms −i(ω_S/2)σ₃⊗𝟙, −i(ω_B/2)𝟙⊗σ₃, −iJ·O_S⊗O_B and the control −iε·O_c⊗𝟙.

    The drift terms enter separately, their parameters being independent symbols.
    """
    if 0 in (omega_s, omega_b, j, eps):
        raise ValidationError('Classification needs nonzero omega_s, omega_b, j and eps')
    return [
        -0.5j * omega_s * tensor(PAULIS[2], IDENTITY_2),
        -0.5j * omega_b * tensor(IDENTITY_2, PAULIS[2]),
        -1j * j * tensor(operator_of(o_s), operator_of(o_b)),
        -1j * eps * tensor(operator_of(o_c), IDENTITY_2),
    ]


def classify_case(
    o_s: OperatorSelector, o_b: OperatorSelector, o_c: OperatorSelector, parameters: Optional[Dict] = None
) -> Dict:
    report = analyze(classification_generators(o_s, o_b, o_c, **(parameters or {})))
    return {
        'o_s': o_s.label,
        'o_b': o_b.label,
        'o_c': o_c.label,
        'dim_l': report.dim_l,
        'dim_k': report.dim_k,
        'dim_p': report.dim_p,
        'dim_a': report.dim_a,
        'purifiable': report.purifiable,
    }


def pauli_cases() -> List[tuple]:
    """All (O_S, O_B, O_c) ∈ {σ₁, σ₂, σ₃}³, O_S slowest."""
    sigmas = [OperatorSelector.sigma(k) for k in (1, 2, 3)]
    return list(itertools.product(sigmas, sigmas, sigmas))


def classify_all_27(
    parameters: Optional[Dict] = None, threads: Optional[int] = None, use_tqdm: bool = False
) -> pd.DataFrame:
    """Dimensions of 𝓛, 𝔨, 𝔭, 𝔞 for all 27 Pauli variants; purifiable rows have dim 𝔞 = 2."""
    rows = parallel_map(
        lambda case: classify_case(*case, parameters=parameters),
        pauli_cases(),
        threads=threads,
        use_tqdm=use_tqdm,
        desc='Classifying',
    )
    table = pd.DataFrame(rows, columns=['o_s', 'o_b', 'o_c', 'dim_l', 'dim_k', 'dim_p', 'dim_a', 'purifiable'])
    LOGGER.info(f'{int(table.purifiable.sum())} of {len(table)} cases are purifiable')
    return table
