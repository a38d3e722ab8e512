"""
Non-local (Weyl) coordinates of two-qubit unitaries and the time-optimal reset bounds built on them.

A two-qubit unitary is locally equivalent to A(c) = exp{(i/2) Σ c_k σ_k⊗σ_k}. After acting on
𝟙⊗ρ_B the qubit sees the image 𝟙 + 2Re(γ) s₂s₃ σ₁ − 2Im(γ) s₁s₃ σ₂ − (p_g − p_e) s₁s₂ σ₃
(s_k = sin c_k), which is unital exactly when all three coefficients vanish.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar

from .errors import (
    DimensionMismatch,
    InvalidAncillaState,
    InvalidCoupling,
    InvariantViolation,
    NotUnitary,
    ValidationError,
)
from .model import SystemSpec, ancilla_thermal_state
from .operator_core import IDENTITY_2, PAULIS, OperatorMatrix, as_operator, is_unitary, partial_trace, tensor
from .utils.iter import parallel_map
from .utils.json import complex_from_json, complex_to_json

LOGGER = logging.getLogger(__name__)

UNITARITY_TOL = 1e-8
UNITAL_TOL = 1e-12
ANCILLA_PURITY_TOL = 1e-8
ACCEPT_TOL = 1e-9
OPTIMIZER_TOL = 1e-6
MIN_GRID_N = 64

MAGIC = (
    np.array(
        [
            [1, 0, 0, 1j],
            [0, 1j, 1, 0],
            [0, 1j, -1, 0],
            [1, 0, 0, -1j],
        ],
        dtype=complex,
    )
    / np.sqrt(2)
)

_SIGMA_PAIRS = [tensor(p, p) for p in PAULIS]


def fold_coordinates(c) -> Tuple[float, float, float]:
    """
    Canonical representative: every c_k reduced mod π, reflected into [0, π/2] and sorted descending.

    >>> [round(x, 6) for x in fold_coordinates((3 * np.pi / 2, 0.1, np.pi - 0.2))]
    [1.570796, 0.2, 0.1]
    """
    c = np.mod(np.asarray(c, dtype=float), np.pi)
    c = np.minimum(c, np.pi - c)
    c[np.abs(c) < 1e-13] = 0.0
    return tuple(float(x) for x in sorted(c, reverse=True))


@dataclass(frozen=True)
class WeylCoordinates:
    """
    Coordinates (c₁, c₂, c₃) of A(c).

    `raw` keeps the unreduced triple when the instance was produced by `canonical`.
    """

    c1: float
    c2: float
    c3: float
    raw: Optional[Tuple[float, float, float]] = field(default=None, compare=False)

    @classmethod
    def of(cls, c) -> WeylCoordinates:
        return cls(*(float(x) for x in c))

    @property
    def values(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3])

    @property
    def total(self) -> float:
        return self.c1 + self.c2 + self.c3

    def canonical(self) -> WeylCoordinates:
        return WeylCoordinates(*fold_coordinates(self.values), raw=(self.c1, self.c2, self.c3))

    def isclose(self, other: WeylCoordinates, tol: float = 1e-7) -> bool:
        return bool(np.max(np.abs(self.values - other.values)) <= tol)

    def to_json(self) -> Dict:
        return {'c1': self.c1, 'c2': self.c2, 'c3': self.c3}

    @classmethod
    def from_json(cls, data: Dict) -> WeylCoordinates:
        return cls(float(data['c1']), float(data['c2']), float(data['c3']))


def canonical_gate(c: WeylCoordinates) -> OperatorMatrix:
    """A(c) as the product of the three commuting factors cos(c_k/2) 𝟙 + i sin(c_k/2) σ_k⊗σ_k."""
    gate = np.eye(4, dtype=complex)
    for ck, pair in zip(c.values, _SIGMA_PAIRS):
        gate = gate @ (np.cos(ck / 2) * np.eye(4) + 1j * np.sin(ck / 2) * pair)
    return gate


NAMED_GATES = {
    'identity': np.eye(4, dtype=complex),
    'cnot': np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    'swap': np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}


def _check_two_qubit_unitary(u) -> OperatorMatrix:
    u = as_operator(u)
    if u.shape != (4, 4):
        raise DimensionMismatch(f'Expected a two-qubit unitary, got shape `{u.shape}`')
    if not is_unitary(u, UNITARITY_TOL):
        raise NotUnitary(f'Matrix is not unitary within {UNITARITY_TOL}')
    return u


def local_invariants(u: OperatorMatrix) -> Tuple[float, float, float]:
    """Local invariants (Re G₁, Im G₁, G₂) from the magic-basis spectrum."""
    u = _check_two_qubit_unitary(u)
    um = MAGIC.conj().T @ u @ MAGIC
    det_um = np.linalg.det(um)
    m = um.T @ um
    tr2 = np.trace(m) ** 2
    g1 = tr2 / (16 * det_um)
    g2 = (tr2 - np.trace(m @ m)) / (4 * det_um)
    return float(g1.real), float(g1.imag), float(g2.real)


def invariants_from_coordinates(c: WeylCoordinates) -> Tuple[float, float, float]:
    """
    Local invariants of A(c).

    >>> [round(x, 12) + 0.0 for x in invariants_from_coordinates(WeylCoordinates(0, 0, 0))]
    [1.0, 0.0, 3.0]
    """
    cos2, sin2 = np.cos(c.values) ** 2, np.sin(c.values) ** 2
    g1_re = np.prod(cos2) - np.prod(sin2)
    g1_im = np.prod(np.sin(2 * c.values)) / 4
    g2 = 4 * np.prod(cos2) - 4 * np.prod(sin2) - np.prod(np.cos(2 * c.values))
    return float(g1_re), float(g1_im), float(g2)


def weyl_coordinates(u: OperatorMatrix) -> WeylCoordinates:
    """
    Canonical non-local coordinates of a two-qubit unitary.

    The eigenphases 2φ_j of MᵀM, M being the SU(4)-normalized unitary in the magic basis,
    give c₁ = φ₁ + φ₃, c₂ = φ₂ + φ₃, c₃ = φ₁ + φ₂ up to the symmetries removed by folding.
    """
    u = _check_two_qubit_unitary(u)
    u = u / np.linalg.det(u) ** 0.25
    m = MAGIC.conj().T @ u @ MAGIC
    phases = np.angle(np.linalg.eigvals(m.T @ m)) / 2
    raw = (phases[0] + phases[2], phases[1] + phases[2], phases[0] + phases[1])
    coordinates = WeylCoordinates(*fold_coordinates(raw), raw=tuple(float(x) for x in raw))

    expected = local_invariants(u)
    found = invariants_from_coordinates(coordinates)
    deviation = max(abs(expected[0] - found[0]), abs(abs(expected[1]) - abs(found[1])), abs(expected[2] - found[2]))
    if deviation >= 1e-6:
        raise InvariantViolation(f'Local invariants of {coordinates} deviate by {deviation} from the unitary')
    return coordinates


@dataclass(frozen=True)
class AncillaLocalState:
    """
    Ancilla state ρ_B′ = [[p_e, γ], [γ*, p_g]] in the (e, g) basis after a local operation.

    When `initial_purity` is given, the state must conserve it.
    """

    p_e: float
    p_g: float
    gamma: complex = 0j
    initial_purity: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'gamma', complex(self.gamma))
        if min(self.p_e, self.p_g) < -1e-12 or abs(self.p_e + self.p_g - 1) > 1e-10:
            raise InvalidAncillaState(f'Populations `{self.p_e}`, `{self.p_g}` do not form a distribution')
        if abs(self.gamma) ** 2 > self.p_e * self.p_g + 1e-12:
            raise InvalidAncillaState(f'Coherence `{self.gamma}` makes the state non-positive')
        if self.initial_purity is not None and abs(self.purity - self.initial_purity) > ANCILLA_PURITY_TOL:
            raise InvalidAncillaState(
                f'Local operations conserve purity: `{self.purity}` differs from `{self.initial_purity}`'
            )

    @property
    def purity(self) -> float:
        return self.p_e**2 + self.p_g**2 + 2 * abs(self.gamma) ** 2

    @property
    def density(self) -> OperatorMatrix:
        return np.array([[self.p_e, self.gamma], [np.conj(self.gamma), self.p_g]], dtype=complex)

    @classmethod
    def from_density(cls, rho: OperatorMatrix) -> AncillaLocalState:
        rho = as_operator(rho)
        if rho.shape != (2, 2):
            raise DimensionMismatch(f'Expected a qubit density matrix, got shape `{rho.shape}`')
        return cls(float(rho[0, 0].real), float(rho[1, 1].real), complex(rho[0, 1]))

    @classmethod
    def thermal(cls, spec: SystemSpec) -> AncillaLocalState:
        return cls.from_density(ancilla_thermal_state(spec))

    @classmethod
    def with_coherence(cls, purity: float, real: float = 0.0, imag: float = 0.0) -> AncillaLocalState:
        """Populations fixed by the purity budget left after the coherence, p_e ≤ p_g."""
        p_squares = purity - 2 * (real**2 + imag**2)
        discriminant = 2 * p_squares - 1
        if discriminant < -1e-12:
            raise InvalidAncillaState(f'Coherence `{complex(real, imag)}` exceeds the purity budget `{purity}`')
        delta = np.sqrt(max(discriminant, 0.0))
        return cls((1 - delta) / 2, (1 + delta) / 2, complex(real, imag), initial_purity=purity)

    def to_json(self) -> Dict:
        return {'p_e': self.p_e, 'p_g': self.p_g, 'gamma': complex_to_json(self.gamma)}

    @classmethod
    def from_json(cls, data: Dict) -> AncillaLocalState:
        return cls(float(data['p_e']), float(data['p_g']), complex_from_json(data.get('gamma', 0.0)))


def _image_coefficients(c: WeylCoordinates, anc: AncillaLocalState) -> np.ndarray:
    s1, s2, s3 = np.sin(c.values)
    return np.array(
        [
            2 * anc.gamma.real * s2 * s3,
            -2 * anc.gamma.imag * s1 * s3,
            -(anc.p_g - anc.p_e) * s1 * s2,
        ]
    )


def unital_image(c: WeylCoordinates, anc: AncillaLocalState) -> OperatorMatrix:
    """tr_B{A(c)(𝟙⊗ρ_B′)A(c)†} from the closed form."""
    a = _image_coefficients(c, anc)
    return IDENTITY_2 + a[0] * PAULIS[0] + a[1] * PAULIS[1] + a[2] * PAULIS[2]


def unital_image_direct(c: WeylCoordinates, anc: AncillaLocalState) -> OperatorMatrix:
    gate = canonical_gate(c)
    return partial_trace(gate @ tensor(IDENTITY_2, anc.density) @ gate.conj().T, (2, 2))


def is_unital(c: WeylCoordinates, anc: AncillaLocalState, tol: float = UNITAL_TOL) -> bool:
    return bool(np.max(np.abs(_image_coefficients(c, anc))) <= tol)


def purity_at_coords(c: WeylCoordinates, anc: AncillaLocalState) -> float:
    """
    Qubit purity after A(c) for a maximally mixed qubit.

    >>> purity_at_coords(WeylCoordinates(0, 0, 0), AncillaLocalState(0.1, 0.9))
    0.5
    """
    return float(_purity_grid(*(np.sin(c.values) ** 2), anc))


def _purity_grid(s1sq, s2sq, s3sq, anc: AncillaLocalState):
    populations = anc.p_g**2 + anc.p_e**2 - 0.5
    return (
        0.5
        + populations * s1sq * s2sq
        + 2 * anc.gamma.real**2 * s2sq * s3sq
        + 2 * anc.gamma.imag**2 * s1sq * s3sq
    )


def tori_min_time(c: WeylCoordinates, j: float) -> float:
    """
    Minimum time Σc_k/(2J) to generate A(c) with coupling J.

    >>> round(tori_min_time(WeylCoordinates(np.pi / 2, np.pi / 2, 0), 0.1), 6)
    15.707963
    """
    if not j > 0:
        raise InvalidCoupling(f'Coupling must be positive, got `{j}`')
    if np.any(c.values < -1e-12) or np.any(c.values > np.pi + 1e-12):
        raise ValidationError(f'Coordinates {c} outside [0, π]')
    return c.total / (2 * j)


def unitary_min_time(u: OperatorMatrix, j: float) -> float:
    return tori_min_time(weyl_coordinates(u), j)


def stationarity_residuals(c: WeylCoordinates, anc: AncillaLocalState) -> np.ndarray:
    """
    Gradient of the purity over (c₁, c₂, c₃), halved.

    With K = 𝒫_B/2 − 1/4 − Re(γ)² − Im(γ)²:
        sin 2c₁ (K s₂² + Im(γ)² s₃²), sin 2c₂ (K s₁² + Re(γ)² s₃²), sin 2c₃ (Re(γ)² s₂² + Im(γ)² s₁²).
    """
    re2, im2 = anc.gamma.real**2, anc.gamma.imag**2
    k = anc.purity / 2 - 0.25 - re2 - im2
    s1sq, s2sq, s3sq = np.sin(c.values) ** 2
    sin2 = np.sin(2 * c.values)
    return np.array(
        [
            sin2[0] * (k * s2sq + im2 * s3sq),
            sin2[1] * (k * s1sq + re2 * s3sq),
            sin2[2] * (re2 * s2sq + im2 * s1sq),
        ]
    )


@dataclass
class QslReport:
    min_total_angle: float
    optimizers: List[WeylCoordinates]
    max_residual: float
    target_purity: float
    grid_n: int
    candidates: pd.DataFrame = field(repr=False, default=None)

    def to_json(self) -> Dict:
        return {
            'min_total_angle': self.min_total_angle,
            'optimizers': [o.to_json() for o in self.optimizers],
            'max_residual': self.max_residual,
            'target_purity': self.target_purity,
            'grid_n': self.grid_n,
        }

    def to_frame(self) -> pd.DataFrame:
        """Near-optimal grid points of the scan."""
        if self.candidates is None:
            return pd.DataFrame(columns=['c1', 'c2', 'c3', 'purity', 'total_angle'])
        return self.candidates

    @classmethod
    def from_json(cls, data: Dict) -> QslReport:
        return cls(
            min_total_angle=data['min_total_angle'],
            optimizers=[WeylCoordinates.from_json(o) for o in data['optimizers']],
            max_residual=data['max_residual'],
            target_purity=data['target_purity'],
            grid_n=data['grid_n'],
        )


def _refine(seed: np.ndarray, anc: AncillaLocalState, h: float, sweeps: int = 3) -> np.ndarray:
    """Coordinate-wise bounded maximization of the purity around a grid point."""
    point = seed.copy()
    best = purity_at_coords(WeylCoordinates.of(point), anc)
    for _ in range(sweeps):
        for axis in range(3):
            lower, upper = max(0.0, point[axis] - 2 * h), min(np.pi, point[axis] + 2 * h)

            def negative_purity(x):
                trial = point.copy()
                trial[axis] = x
                return -purity_at_coords(WeylCoordinates.of(trial), anc)

            result = minimize_scalar(negative_purity, bounds=(lower, upper), method='bounded', options={'xatol': 1e-10})
            if -result.fun > best + 1e-15:
                point[axis] = result.x
                best = -result.fun
    return point


def qsl_verify(
    anc: AncillaLocalState, grid_n: int = 101, refine: bool = True, threads: Optional[int] = None
) -> QslReport:
    """
    Brute-force check of the minimum reset time.

    Scans (c₁, c₂, c₃) ∈ [0, π]³, refines the near-optimal grid points with the smallest
    total angle, keeps the points reaching 𝒫_B − 1e−9 and reports the smallest Σc_k among them.
    """
    if grid_n < MIN_GRID_N:
        raise ValidationError(f'grid_n must be at least {MIN_GRID_N}, got `{grid_n}`')
    grid = np.linspace(0, np.pi, grid_n)
    h = np.pi / (grid_n - 1)
    sq = np.sin(grid) ** 2
    target = anc.purity

    slabs = parallel_map(
        lambda i: _purity_grid(sq[i], sq[:, None], sq[None, :], anc),
        range(grid_n),
        threads=threads,
        desc='Scanning grid',
    )
    purity = np.stack(slabs)

    threshold = purity.max() - (4 * (target - 0.5) * h**2 + ACCEPT_TOL)
    indices = np.argwhere(purity >= threshold)
    points = grid[indices]
    totals = points.sum(axis=1)
    candidates = pd.DataFrame(
        {
            'c1': points[:, 0],
            'c2': points[:, 1],
            'c3': points[:, 2],
            'purity': purity[tuple(indices.T)],
            'total_angle': totals,
        }
    )

    seeds = points[totals <= totals.min() + 3 * h]
    refined = [_refine(s, anc, h) for s in seeds] if refine else list(seeds)
    accepted = [p for p in refined if purity_at_coords(WeylCoordinates.of(p), anc) >= target - ACCEPT_TOL]
    if not accepted:
        LOGGER.warning(f'No scanned point reaches the ancilla purity {target:.12g}')
        return QslReport(float('nan'), [], float('nan'), target, grid_n, candidates)

    sums = np.array([p.sum() for p in accepted])
    min_total = float(sums.min())
    optimal = {tuple(np.round(p, 6) + 0.0) for p, s in zip(accepted, sums) if s <= min_total + OPTIMIZER_TOL}
    optimizers = [WeylCoordinates.of(p) for p in sorted(optimal)]
    max_residual = max(float(np.max(np.abs(stationarity_residuals(o, anc)))) for o in optimizers)
    LOGGER.info(f'Minimum total angle {min_total:.9f} at {len(optimizers)} optimizer(s)')
    return QslReport(min_total, optimizers, max_residual, target, grid_n, candidates)
