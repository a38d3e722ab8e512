"""
System specifications, operators, thermal states and the qubit-ancilla Hamiltonians.

Conventions: ħ = 1, the qubit factor comes first in tensor products, the qubit basis is
ordered (e, g) and qudit ancilla levels are ordered by descending energy.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import bisect

from .errors import InvalidCaseSelector, InvalidSystemSpec, NegativeBeta, NoResonance, ValidationError, WrongAncillaDim
from .operator_core import IDENTITY_2, PAULIS, SIGMA_3, OperatorMatrix, hermitian_eig, tensor

LOGGER = logging.getLogger(__name__)

RESONANCE_TOL = 1e-10
RESONANCE_SCAN_POINTS = 257

_PAULI_ANGLES = {1: (0.0, np.pi / 2), 2: (np.pi / 2, np.pi / 2), 3: (0.0, 0.0)}


@dataclass(frozen=True)
class OperatorSelector:
    """
    A traceless 2×2 operator with eigenvalues ±1, given by a Pauli index or by Bloch angles.

    >>> OperatorSelector.parse('s2').angles
    (1.5707963267948966, 1.5707963267948966)
    """

    pauli: Optional[int] = None
    phi: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if self.pauli is not None:
            if self.pauli not in _PAULI_ANGLES:
                raise InvalidCaseSelector(f'Pauli index `{self.pauli}` not in (1, 2, 3)')
            phi, theta = _PAULI_ANGLES[self.pauli]
            object.__setattr__(self, 'phi', phi)
            object.__setattr__(self, 'theta', theta)
        elif not 0 <= self.theta <= np.pi:
            raise InvalidCaseSelector(f'Polar angle `{self.theta}` outside [0, π]')

    @classmethod
    def sigma(cls, k: int) -> OperatorSelector:
        return cls(pauli=k)

    @classmethod
    def bloch(cls, phi: float, theta: float) -> OperatorSelector:
        return cls(phi=float(phi), theta=float(theta))

    @classmethod
    def parse(cls, text: str) -> OperatorSelector:
        match = re.fullmatch(r's([123])', text.strip())
        if match is None:
            raise InvalidCaseSelector(f'Unknown operator `{text}`, use s1, s2 or s3')
        return cls.sigma(int(match[1]))

    @property
    def angles(self) -> Tuple[float, float]:
        return self.phi, self.theta

    @property
    def label(self) -> str:
        if self.pauli is not None:
            return f's{self.pauli}'
        return f'phi={self.phi:.6g},theta={self.theta:.6g}'

    @property
    def bloch_vector(self) -> np.ndarray:
        return np.array(
            [np.cos(self.phi) * np.sin(self.theta), np.sin(self.phi) * np.sin(self.theta), np.cos(self.theta)]
        )

    @property
    def matrix(self) -> OperatorMatrix:
        return operator_of(self)

    def to_json(self) -> Dict:
        if self.pauli is not None:
            return {'pauli': self.pauli}
        return {'phi': self.phi, 'theta': self.theta}

    @classmethod
    def from_json(cls, data) -> OperatorSelector:
        if isinstance(data, str):
            return cls.parse(data)
        if not isinstance(data, dict):
            raise InvalidSystemSpec(f'Operator selector must be an object or a string, got `{data}`')
        unknown = set(data) - {'pauli', 'phi', 'theta'}
        if unknown:
            raise InvalidSystemSpec(f'Unknown operator selector keys `{sorted(unknown)}`')
        if 'pauli' in data:
            if len(data) > 1:
                raise InvalidSystemSpec(f'Selector `{data}` mixes `pauli` with Bloch angles')
            return cls.sigma(int(data['pauli']))
        try:
            return cls.bloch(data['phi'], data['theta'])
        except KeyError as error:
            raise InvalidSystemSpec(f'Selector `{data}` misses key {error}')


def operator_of(selector: OperatorSelector) -> OperatorMatrix:
    """
    cos φ sin θ σ₁ + sin φ sin θ σ₂ + cos θ σ₃, or the exact Pauli matrix for Pauli selectors.

    >>> operator_of(OperatorSelector.sigma(1)).real.tolist()
    [[0.0, 1.0], [1.0, 0.0]]
    """
    if selector.pauli is not None:
        return PAULIS[selector.pauli - 1].copy()
    n = selector.bloch_vector
    return n[0] * PAULIS[0] + n[1] * PAULIS[1] + n[2] * PAULIS[2]


def parse_case(text: str) -> Tuple[OperatorSelector, OperatorSelector, OperatorSelector]:
    """
    Parse `s{i}s{j}:s{k}` into (O_S, O_B, O_c).

    >>> [s.pauli for s in parse_case('s1s2:s3')]
    [1, 2, 3]
    """
    match = re.fullmatch(r's([123])s([123]):s([123])', text.strip())
    if match is None:
        raise InvalidCaseSelector(f'Case `{text}` does not match `s<i>s<j>:s<k>`')
    return tuple(OperatorSelector.sigma(int(k)) for k in match.groups())


def case_label(o_s: OperatorSelector, o_b: OperatorSelector, o_c: OperatorSelector) -> str:
    return f'{o_s.label}{o_b.label}:{o_c.label}'


SIGMA_1_SELECTOR = OperatorSelector.sigma(1)
SIGMA_3_SELECTOR = OperatorSelector.sigma(3)


@dataclass(frozen=True)
class SystemSpec:
    """
    Physical parameters of the qubit and its ancilla.

    Attributes:
        omega_s: qubit splitting ω_S
        ancilla_levels: ancilla energies in ascending order
        j: coupling strength J
        beta: inverse temperature of the initial thermal states
        o_s: qubit side of the interaction
        o_b: ancilla side of the interaction, unused for qudit ancillas
        o_c: operator the control field couples to
    """

    omega_s: float
    ancilla_levels: Tuple[float, ...]
    j: float
    beta: float = 1.0
    o_s: OperatorSelector = SIGMA_1_SELECTOR
    o_b: OperatorSelector = SIGMA_1_SELECTOR
    o_c: OperatorSelector = SIGMA_3_SELECTOR

    def __post_init__(self):
        object.__setattr__(self, 'ancilla_levels', tuple(float(e) for e in self.ancilla_levels))
        if not self.omega_s > 0:
            raise InvalidSystemSpec(f'omega_s must be positive, got `{self.omega_s}`')
        if self.j < 0:
            raise InvalidSystemSpec(f'Coupling j must be non-negative, got `{self.j}`')
        if self.beta < 0:
            raise NegativeBeta(f'Inverse temperature must be non-negative, got `{self.beta}`')
        levels = self.ancilla_levels
        if len(levels) < 2:
            raise InvalidSystemSpec(f'Ancilla needs at least two levels, got `{levels}`')
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise InvalidSystemSpec(f'Ancilla levels `{levels}` are not strictly ascending')
        if self.d_b == 2 and self.omega_b < self.omega_s:
            raise InvalidSystemSpec(
                f'Two-level ancilla needs omega_b >= omega_s, got `{self.omega_b}` < `{self.omega_s}`'
            )

    @classmethod
    def from_gaps(cls, omega_s: float, gaps: Sequence[float], j: float, **kwargs) -> SystemSpec:
        """
        Levels from transition gaps: ±ω_B/2 for a qubit ancilla, otherwise E₀ = −ω_{B,1}, E₁ = 0, E₂ = ω_{B,2}, ...

        >>> SystemSpec.from_gaps(1, [3, 2], 0.1).ancilla_levels
        (-3.0, 0.0, 2.0)
        """
        gaps = [float(g) for g in gaps]
        if len(gaps) == 1:
            levels = (-gaps[0] / 2, gaps[0] / 2)
        else:
            levels = (-gaps[0], 0.0, *np.cumsum(gaps[1:]).tolist())
        return cls(omega_s=omega_s, ancilla_levels=levels, j=j, **kwargs)

    @property
    def d_b(self) -> int:
        return len(self.ancilla_levels)

    @property
    def omega_b(self) -> float:
        """ω_B for a qubit ancilla, ω_{B,1} (the 0↔1 gap) for qudits."""
        return self.ancilla_levels[1] - self.ancilla_levels[0]

    def with_case(
        self,
        o_s: Optional[OperatorSelector] = None,
        o_b: Optional[OperatorSelector] = None,
        o_c: Optional[OperatorSelector] = None,
    ) -> SystemSpec:
        return replace(
            self,
            o_s=self.o_s if o_s is None else o_s,
            o_b=self.o_b if o_b is None else o_b,
            o_c=self.o_c if o_c is None else o_c,
        )

    def to_json(self) -> Dict:
        return {
            'omega_s': self.omega_s,
            'ancilla_levels': list(self.ancilla_levels),
            'j': self.j,
            'beta': self.beta,
            'o_s': self.o_s.to_json(),
            'o_b': self.o_b.to_json(),
            'o_c': self.o_c.to_json(),
        }

    KEYS = ('omega_s', 'ancilla_levels', 'j', 'beta', 'o_s', 'o_b', 'o_c')

    @classmethod
    def from_json(cls, data: Dict) -> SystemSpec:
        if not isinstance(data, dict):
            raise InvalidSystemSpec(f'System spec must be an object, got `{type(data).__name__}`')
        unknown = set(data) - set(cls.KEYS)
        if unknown:
            raise InvalidSystemSpec(f'Unknown system spec keys `{sorted(unknown)}`')
        missing = {'omega_s', 'ancilla_levels', 'j'} - set(data)
        if missing:
            raise InvalidSystemSpec(f'Missing system spec keys `{sorted(missing)}`')
        kwargs = {key: OperatorSelector.from_json(data[key]) for key in ('o_s', 'o_b', 'o_c') if key in data}
        try:
            return cls(
                omega_s=float(data['omega_s']),
                ancilla_levels=tuple(float(e) for e in data['ancilla_levels']),
                j=float(data['j']),
                beta=float(data.get('beta', 1.0)),
                **kwargs,
            )
        except (TypeError, ValueError) as error:
            if isinstance(error, ValidationError):
                raise
            raise InvalidSystemSpec(f'Malformed system spec: {error}')


def thermal_state(h: OperatorMatrix, beta: float) -> OperatorMatrix:
    """
    Gibbs state exp(−βH)/tr{exp(−βH)}, computed from shifted eigenvalues.

    >>> bool(np.allclose(thermal_state(SIGMA_3, 0), np.eye(2) / 2))
    True
    """
    if beta < 0:
        raise NegativeBeta(f'Inverse temperature must be non-negative, got `{beta}`')
    values, vectors = hermitian_eig(h)
    weights = np.exp(-beta * (values - values[0]))
    weights /= weights.sum()
    return (vectors * weights) @ vectors.conj().T


def qubit_hamiltonian(spec: SystemSpec, eps: float) -> OperatorMatrix:
    """H_S(ε) = (ω_S/2)σ₃ + ε·O_c."""
    return spec.omega_s / 2 * SIGMA_3 + eps * operator_of(spec.o_c)


def ancilla_hamiltonian(spec: SystemSpec) -> OperatorMatrix:
    if spec.d_b == 2:
        return spec.omega_b / 2 * SIGMA_3
    return np.diag(spec.ancilla_levels[::-1]).astype(complex)


def lowering_operator(d: int) -> OperatorMatrix:
    """
    Truncated lowering operator in the descending basis {|d−1⟩, …, |0⟩}.

    >>> lowering_operator(3).real.round(6).tolist()
    [[0.0, 0.0, 0.0], [1.414214, 0.0, 0.0], [0.0, 1.0, 0.0]]
    """
    a = np.zeros((d, d), dtype=complex)
    for n in range(1, d):
        a[d - n, d - 1 - n] = np.sqrt(n)
    return a


def build_hamiltonian(spec: SystemSpec, eps: float) -> OperatorMatrix:
    """H = H_S(ε)⊗𝟙 + 𝟙⊗(ω_B/2)σ₃ + J·O_S⊗O_B for a two-level ancilla."""
    if spec.d_b != 2:
        raise WrongAncillaDim(f'build_hamiltonian needs a two-level ancilla, got d_b=`{spec.d_b}`')
    return (
        tensor(qubit_hamiltonian(spec, eps), IDENTITY_2)
        + tensor(IDENTITY_2, ancilla_hamiltonian(spec))
        + spec.j * tensor(operator_of(spec.o_s), operator_of(spec.o_b))
    )


def build_qudit_hamiltonian(spec: SystemSpec, eps: float) -> OperatorMatrix:
    """H = H_S(ε)⊗𝟙 + 𝟙⊗H_B + J·O_S⊗(a + a†), O_S being σ₁ in the default spec."""
    d = spec.d_b
    if d < 3:
        raise WrongAncillaDim(f'build_qudit_hamiltonian needs d_b >= 3, got `{d}`')
    a = lowering_operator(d)
    return (
        tensor(qubit_hamiltonian(spec, eps), np.eye(d))
        + tensor(IDENTITY_2, ancilla_hamiltonian(spec))
        + spec.j * tensor(operator_of(spec.o_s), a + a.conj().T)
    )


def hamiltonian(
    spec: SystemSpec, eps: float, eps2: float = 0.0, control2: Optional[OperatorSelector] = None
) -> OperatorMatrix:
    """Joint Hamiltonian for any ancilla dimension, with an optional second control channel on the qubit."""
    h = build_hamiltonian(spec, eps) if spec.d_b == 2 else build_qudit_hamiltonian(spec, eps)
    if control2 is not None and eps2 != 0:
        h = h + eps2 * tensor(operator_of(control2), np.eye(spec.d_b))
    return h


def ancilla_thermal_state(spec: SystemSpec) -> OperatorMatrix:
    return thermal_state(ancilla_hamiltonian(spec), spec.beta)


def qubit_thermal_state(spec: SystemSpec) -> OperatorMatrix:
    """Thermal state of the undriven qubit, (ω_S/2)σ₃ at the spec's β."""
    return thermal_state(spec.omega_s / 2 * SIGMA_3, spec.beta)


def initial_state(spec: SystemSpec, rho_s: Optional[OperatorMatrix] = None) -> OperatorMatrix:
    """Product state ρ_S⊗ρ_B with a thermal ancilla; the qubit is thermal unless given."""
    rho_s = qubit_thermal_state(spec) if rho_s is None else rho_s
    return tensor(rho_s, ancilla_thermal_state(spec))


def dressed_splitting(spec: SystemSpec, eps: float) -> float:
    values = np.linalg.eigvalsh(qubit_hamiltonian(spec, eps))
    return float(values[1] - values[0])


def resonant_amplitude(spec: SystemSpec) -> float:
    """
    Smallest ε ≥ 0 whose dressed qubit splitting equals ω_B (ω_{B,1} for qudits).

    The bracket [0, (ω_B + ω_S)/2] always contains the root when ω_B > ω_S because
    the splitting is at least 2ε − ω_S.

    >>> round(resonant_amplitude(SystemSpec(1, (-1.5, 1.5), 0.1)), 9)
    1.0
    """
    target = spec.omega_b

    def mismatch(eps):
        return dressed_splitting(spec, eps) - target

    tol = RESONANCE_TOL * max(1.0, target)
    start = mismatch(0.0)
    if abs(start) <= tol:
        return 0.0

    upper = 1.01 * (target + spec.omega_s) / 2 + tol
    grid = np.linspace(0.0, upper, RESONANCE_SCAN_POINTS)
    values = np.array([mismatch(e) for e in grid])
    crossing = np.nonzero(np.sign(values) != np.sign(start))[0]
    if len(crossing) == 0:
        raise NoResonance(f'No field amplitude brings the qubit into resonance with `{target}` for o_c `{spec.o_c}`')
    k = crossing[0]
    if abs(values[k]) <= tol:
        return float(grid[k])
    eps = bisect(mismatch, grid[k - 1], grid[k], xtol=1e-14, maxiter=200)
    if abs(mismatch(eps)) > tol:
        raise NoResonance(f'Resonance bisection did not converge: splitting off by `{mismatch(eps)}`')
    LOGGER.debug(f'Resonant amplitude {eps:.12g} for target splitting {target:.12g}')
    return float(eps)


@dataclass
class PulseSchedule:
    """
    Piecewise-constant control field on [0, duration] with equal segments.

    `second_amplitudes` drive the optional second control channel on the same grid.
    """

    duration: float
    amplitudes: np.ndarray
    eps_max: Optional[float] = None
    second_amplitudes: Optional[np.ndarray] = None

    def __post_init__(self):
        self.amplitudes = np.atleast_1d(np.asarray(self.amplitudes, dtype=float))
        if not self.duration > 0:
            raise ValidationError(f'Pulse duration must be positive, got `{self.duration}`')
        if len(self.amplitudes) < 1:
            raise ValidationError('Pulse needs at least one segment')
        if self.second_amplitudes is not None:
            self.second_amplitudes = np.asarray(self.second_amplitudes, dtype=float)
            if self.second_amplitudes.shape != self.amplitudes.shape:
                raise ValidationError(
                    f'Second channel has `{len(self.second_amplitudes)}` segments instead of `{len(self.amplitudes)}`'
                )
        if self.eps_max is not None:
            for amplitudes in self.channels:
                if np.max(np.abs(amplitudes)) > self.eps_max + 1e-12:
                    raise ValidationError(f'Amplitude exceeds the bound eps_max=`{self.eps_max}`')

    @classmethod
    def constant(
        cls,
        duration: float,
        n_segments: int,
        eps: float,
        eps_max: Optional[float] = None,
        second: Optional[float] = None,
    ) -> PulseSchedule:
        return cls(
            duration=duration,
            amplitudes=np.full(n_segments, float(eps)),
            eps_max=eps_max,
            second_amplitudes=None if second is None else np.full(n_segments, float(second)),
        )

    @property
    def n_segments(self) -> int:
        return len(self.amplitudes)

    @property
    def dt(self) -> float:
        return self.duration / self.n_segments

    @property
    def channels(self) -> List[np.ndarray]:
        if self.second_amplitudes is None:
            return [self.amplitudes]
        return [self.amplitudes, self.second_amplitudes]

    @property
    def segment_starts(self) -> np.ndarray:
        return np.arange(self.n_segments) * self.dt

    def second_at(self, k: int) -> float:
        return 0.0 if self.second_amplitudes is None else float(self.second_amplitudes[k])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({'t': self.segment_starts, 'eps': self.amplitudes})
        if self.second_amplitudes is not None:
            frame['eps2'] = self.second_amplitudes
        return frame

    def to_json(self) -> Dict:
        return {
            'duration': self.duration,
            'amplitudes': self.amplitudes.tolist(),
            'eps_max': self.eps_max,
            'second_amplitudes': None if self.second_amplitudes is None else self.second_amplitudes.tolist(),
        }

    @classmethod
    def from_json(cls, data: Dict) -> PulseSchedule:
        return cls(
            duration=data['duration'],
            amplitudes=np.asarray(data['amplitudes'], dtype=float),
            eps_max=data.get('eps_max'),
            second_amplitudes=data.get('second_amplitudes'),
        )


def bloch_density(vector: Sequence[float]) -> OperatorMatrix:
    """(𝟙 + r·σ)/2."""
    r = np.asarray(vector, dtype=float)
    return (IDENTITY_2 + r[0] * PAULIS[0] + r[1] * PAULIS[1] + r[2] * PAULIS[2]) / 2


def random_qubit_states(purity: float, n: int, rng: np.random.Generator) -> List[OperatorMatrix]:
    """Qubit states of fixed purity with uniformly random Bloch directions."""
    if not 0.5 <= purity <= 1:
        raise ValidationError(f'Qubit purity must lie in [0.5, 1], got `{purity}`')
    length = np.sqrt(2 * purity - 1)
    directions = rng.standard_normal((n, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return [bloch_density(length * d) for d in directions]
