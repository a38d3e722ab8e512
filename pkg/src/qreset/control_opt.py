"""
Piecewise-constant control fields maximizing the qubit purity at the final time.

The gradient comes from one forward sweep storing the states and one backward sweep of
the costate Λ_{k−1} = U_k†Λ_kU_k, starting from Λ_N = 2ρ_S⊗𝟙 = ∂𝒫_S/∂ρ.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import DimensionMismatch, NotDensity, ValidationError
from .model import OperatorSelector, PulseSchedule, SystemSpec, hamiltonian, operator_of, resonant_amplitude
from .operator_core import OperatorMatrix, as_operator, hermitian_eig, is_density, partial_trace, tensor

__all__ = [
    'OptimizationResult',
    'OptimizerOptions',
    'PulseSchedule',
    'final_purity',
    'optimize_pulse',
    'pulse_gradient',
]

LOGGER = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-10
MAX_HALVINGS = 40


@dataclass
class OptimizerOptions:
    """
    Attributes:
        n_segments: number of equal pulse segments
        max_iter: ascent iterations
        grad_tol: stop once the gradient ∞-norm drops below
        eps_max: amplitude bound applied to every channel
        control2: operator of an optional second control channel on the qubit
        initial_change: largest amplitude change of the first trial step
        armijo: sufficient increase constant of the line search
    """

    n_segments: int = 200
    max_iter: int = 200
    grad_tol: float = 1e-8
    eps_max: Optional[float] = None
    control2: Optional[OperatorSelector] = None
    initial_change: float = 0.1
    armijo: float = 1e-4

    def __post_init__(self):
        if self.n_segments < 1:
            raise ValidationError(f'n_segments must be at least 1, got `{self.n_segments}`')
        if self.max_iter < 0:
            raise ValidationError(f'max_iter must be non-negative, got `{self.max_iter}`')
        if self.eps_max is not None and not self.eps_max > 0:
            raise ValidationError(f'eps_max must be positive, got `{self.eps_max}`')


@dataclass
class OptimizationResult:
    pulse: PulseSchedule
    final_purity: float
    iterations: int
    converged: bool
    purity_history: List[float] = field(default_factory=list)
    guess_purity: Optional[float] = None
    bound_infeasible: bool = False

    @property
    def improvement(self) -> float:
        return self.final_purity - (self.guess_purity if self.guess_purity is not None else self.purity_history[0])

    def to_frame(self) -> pd.DataFrame:
        return self.pulse.to_frame()

    def to_json(self) -> Dict:
        return {
            'pulse': self.pulse.to_json(),
            'final_purity': self.final_purity,
            'iterations': self.iterations,
            'converged': self.converged,
            'purity_history': list(self.purity_history),
            'guess_purity': self.guess_purity,
            'bound_infeasible': self.bound_infeasible,
        }

    @classmethod
    def from_json(cls, data: Dict) -> OptimizationResult:
        return cls(
            pulse=PulseSchedule.from_json(data['pulse']),
            final_purity=data['final_purity'],
            iterations=data['iterations'],
            converged=data['converged'],
            purity_history=list(data['purity_history']),
            guess_purity=data.get('guess_purity'),
            bound_infeasible=data.get('bound_infeasible', False),
        )


def _check_state(spec: SystemSpec, rho0: OperatorMatrix) -> OperatorMatrix:
    rho0 = as_operator(rho0)
    dim = 2 * spec.d_b
    if rho0.shape != (dim, dim):
        raise DimensionMismatch(f'Initial state has dimension `{rho0.shape[0]}`, expected `{dim}`')
    if not is_density(rho0):
        raise NotDensity('Initial state is not a density matrix')
    return rho0


def _segments(spec: SystemSpec, pulse: PulseSchedule, control2: Optional[OperatorSelector]):
    """Eigendecomposition and propagator of every segment, reusing repeated amplitudes."""
    cache = {}
    result = []
    for k in range(pulse.n_segments):
        key = (float(pulse.amplitudes[k]), pulse.second_at(k))
        if key not in cache:
            energies, vectors = hermitian_eig(hamiltonian(spec, key[0], key[1], control2))
            step = (vectors * np.exp(-1j * energies * pulse.dt)) @ vectors.conj().T
            cache[key] = (energies, vectors, step)
        result.append(cache[key])
    return result


def _qubit_purity(rho: OperatorMatrix, d_b: int) -> float:
    rho_s = partial_trace(rho, (2, d_b))
    return float(np.trace(rho_s @ rho_s).real)


def final_purity(
    spec: SystemSpec, rho0: OperatorMatrix, pulse: PulseSchedule, control2: Optional[OperatorSelector] = None
) -> float:
    rho = _check_state(spec, rho0)
    for _, _, step in _segments(spec, pulse, control2):
        rho = step @ rho @ step.conj().T
    return _qubit_purity(rho, spec.d_b)


def _propagator_derivative(energies: np.ndarray, vectors: np.ndarray, direction: OperatorMatrix, dt: float):
    """Directional derivative of exp(−iH·dt) along `direction`, from divided differences of the phases."""
    phases = np.exp(-1j * energies * dt)
    gaps = energies[:, None] - energies[None, :]
    degenerate = np.abs(gaps) <= DEGENERACY_TOL * max(1.0, np.max(np.abs(energies)))
    safe = np.where(degenerate, 1.0, gaps)
    divided = np.where(degenerate, -1j * dt * phases[:, None], (phases[:, None] - phases[None, :]) / safe)
    return vectors @ (divided * (vectors.conj().T @ direction @ vectors)) @ vectors.conj().T


def pulse_gradient(
    spec: SystemSpec, rho0: OperatorMatrix, pulse: PulseSchedule, control2: Optional[OperatorSelector] = None
) -> np.ndarray:
    """
    ∂𝒫_S(τ)/∂ε_k for every segment, the second channel's derivatives appended when present.

    Per segment: 2·Re tr{Λ_k ∂U_k ρ_{k−1} U_k†}.
    """
    rho = _check_state(spec, rho0)
    d_b = spec.d_b
    segments = _segments(spec, pulse, control2)
    directions = [tensor(operator_of(spec.o_c), np.eye(d_b))]
    if pulse.second_amplitudes is not None:
        if control2 is None:
            raise ValidationError('Pulse has a second channel but no operator for it')
        directions.append(tensor(operator_of(control2), np.eye(d_b)))

    states = [rho]
    for _, _, step in segments:
        states.append(step @ states[-1] @ step.conj().T)

    rho_s = partial_trace(states[-1], (2, d_b))
    costate = tensor(2 * rho_s, np.eye(d_b))
    gradient = np.zeros((len(directions), pulse.n_segments))
    for k in range(pulse.n_segments - 1, -1, -1):
        energies, vectors, step = segments[k]
        forward = states[k] @ step.conj().T
        for channel, direction in enumerate(directions):
            derivative = _propagator_derivative(energies, vectors, direction, pulse.dt)
            gradient[channel, k] = 2 * np.trace(costate @ derivative @ forward).real
        costate = step.conj().T @ costate @ step
    return gradient.ravel()


def _with_amplitudes(pulse: PulseSchedule, flat: np.ndarray) -> PulseSchedule:
    channels = flat.reshape(len(pulse.channels), pulse.n_segments)
    return PulseSchedule(
        duration=pulse.duration,
        amplitudes=channels[0],
        eps_max=pulse.eps_max,
        second_amplitudes=channels[1] if len(channels) > 1 else None,
    )


def _clip(flat: np.ndarray, eps_max: Optional[float]) -> Tuple[np.ndarray, bool]:
    if eps_max is None:
        return flat, False
    clipped = np.clip(flat, -eps_max, eps_max)
    return clipped, bool(np.any(clipped != flat))


def optimize_pulse(
    spec: SystemSpec,
    rho0: OperatorMatrix,
    tau: float,
    options: Optional[OptimizerOptions] = None,
    guess: Optional[PulseSchedule] = None,
) -> OptimizationResult:
    """
    Gradient ascent of 𝒫_S(τ) with a backtracking line search.

    The guess defaults to the constant resonant field (zero on a second channel); a given guess must
    span `tau`. Only steps increasing the purity are accepted, so `purity_history` never decreases.
    The trial step doubles after every accepted step and halves on rejection.
    """
    options = options or OptimizerOptions()
    rho0 = _check_state(spec, rho0)
    if not tau > 0:
        raise ValidationError(f'tau must be positive, got `{tau}`')
    if guess is not None and not np.isclose(guess.duration, tau):
        raise ValidationError(f'Guess duration `{guess.duration}` differs from tau `{tau}`')
    control2 = options.control2

    bound_infeasible = False
    if guess is None:
        resonant = resonant_amplitude(spec)
        if options.eps_max is not None and resonant > options.eps_max:
            bound_infeasible = True
            LOGGER.warning(f'eps_max={options.eps_max} is below the resonant amplitude {resonant:.6g}, clamping')
            resonant = options.eps_max
        guess = PulseSchedule.constant(
            tau, options.n_segments, resonant, options.eps_max, second=0.0 if control2 is not None else None
        )
    flat = np.concatenate(guess.channels)
    flat, clipped = _clip(flat, options.eps_max)
    bound_infeasible = bound_infeasible or clipped
    pulse = _with_amplitudes(guess, flat)

    purity = final_purity(spec, rho0, pulse, control2)
    guess_purity = purity
    history = [purity]
    scale = None
    converged = False
    iteration = 0

    for iteration in range(1, options.max_iter + 1):
        gradient = pulse_gradient(spec, rho0, pulse, control2)
        norm = float(np.max(np.abs(gradient)))
        if norm < options.grad_tol:
            converged = True
            iteration -= 1
            break
        if scale is None:
            scale = options.initial_change / norm

        accepted = False
        for _ in range(MAX_HALVINGS):
            trial_flat, was_clipped = _clip(flat + scale * gradient, options.eps_max)
            trial = _with_amplitudes(pulse, trial_flat)
            trial_purity = final_purity(spec, rho0, trial, control2)
            required = 0.0 if was_clipped else options.armijo * scale * float(gradient @ gradient)
            if trial_purity - purity > required and trial_purity > purity:
                accepted = True
                break
            scale /= 2
        if not accepted:
            LOGGER.info(f'Line search stalled at iteration {iteration}, purity {purity:.12g}')
            converged = True
            iteration -= 1
            break

        flat, pulse, purity = trial_flat, trial, trial_purity
        history.append(purity)
        scale *= 2
        LOGGER.debug(f'Iteration {iteration}: purity {purity:.12g}, |grad| {norm:.3g}')

    LOGGER.info(f'Optimized purity {purity:.12g} from guess {guess_purity:.12g} after {iteration} iterations')
    return OptimizationResult(
        pulse=pulse,
        final_purity=purity,
        iterations=iteration,
        converged=converged,
        purity_history=history,
        guess_purity=guess_purity,
        bound_infeasible=bound_infeasible,
    )
