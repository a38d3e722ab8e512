import numpy as np
import pytest

from qreset.control_opt import (
    OptimizationResult,
    OptimizerOptions,
    PulseSchedule,
    final_purity,
    optimize_pulse,
    pulse_gradient,
)
from qreset.errors import DimensionMismatch, ValidationError
from qreset.model import OperatorSelector, SystemSpec, bloch_density, initial_state, parse_case
from qreset.reset_dynamics import simulate_purity

SIGMA_1 = OperatorSelector.sigma(1)


@pytest.fixture
def spec():
    return SystemSpec(omega_s=1.0, ancilla_levels=(-1.5, 1.5), j=0.1).with_case(*parse_case('s1s1:s3'))


@pytest.fixture
def rho0(spec):
    return initial_state(spec, bloch_density([0.3, 0.2, -0.5]))


def test_options_validation():
    with pytest.raises(ValidationError):
        OptimizerOptions(n_segments=0)
    with pytest.raises(ValidationError):
        OptimizerOptions(max_iter=-1)
    with pytest.raises(ValidationError):
        OptimizerOptions(eps_max=0)


def test_final_purity_matches_simulation(spec, rho0):
    pulse = PulseSchedule(4.0, [0.9, 1.1, 0.7, 1.2])
    curve = simulate_purity(spec, pulse, rho0, [4.0])
    assert final_purity(spec, rho0, pulse) == pytest.approx(curve.values[-1], abs=1e-12)

    with pytest.raises(DimensionMismatch):
        final_purity(spec, np.eye(2) / 2, pulse)


def _numerical_gradient(spec, rho0, pulse, control2, h=1e-6):
    flat = np.concatenate(pulse.channels)
    gradient = np.zeros_like(flat)
    for k in range(len(flat)):
        values = []
        for sign in (1, -1):
            shifted = flat.copy()
            shifted[k] += sign * h
            channels = shifted.reshape(len(pulse.channels), pulse.n_segments)
            trial = PulseSchedule(
                pulse.duration, channels[0], second_amplitudes=channels[1] if len(channels) > 1 else None
            )
            values.append(final_purity(spec, rho0, trial, control2))
        gradient[k] = (values[0] - values[1]) / (2 * h)
    return gradient


def test_gradient_matches_finite_differences(spec, rho0):
    pulse = PulseSchedule(6.0, [0.8, 1.3, 1.0, 0.2, 1.1])
    analytic = pulse_gradient(spec, rho0, pulse)
    assert analytic.shape == (5,)
    assert np.allclose(analytic, _numerical_gradient(spec, rho0, pulse, None), atol=1e-7)


def test_gradient_with_second_channel(spec, rho0):
    pulse = PulseSchedule(6.0, [0.8, 1.3, 1.0], second_amplitudes=[0.1, -0.2, 0.0])
    analytic = pulse_gradient(spec, rho0, pulse, SIGMA_1)
    assert analytic.shape == (6,)
    assert np.allclose(analytic, _numerical_gradient(spec, rho0, pulse, SIGMA_1), atol=1e-7)

    with pytest.raises(ValidationError):
        pulse_gradient(spec, rho0, pulse)


def test_gradient_at_degenerate_segment(rho0):
    # without coupling and field the levels |eg⟩ and |ge⟩ coincide
    free = SystemSpec(omega_s=1.0, ancilla_levels=(-0.5, 0.5), j=0.0, o_c=SIGMA_1)
    pulse = PulseSchedule(2.0, [0.0, 0.0])
    assert np.allclose(pulse_gradient(free, rho0, pulse), _numerical_gradient(free, rho0, pulse, None), atol=1e-7)


def test_optimizer_improves_half_tmin_reset(spec, rho0):
    t_min = np.pi / (2 * spec.j)
    options = OptimizerOptions(n_segments=40, max_iter=30, control2=SIGMA_1)
    result = optimize_pulse(spec, rho0, 0.5 * t_min, options)

    assert result.guess_purity == pytest.approx(result.purity_history[0])
    assert result.final_purity > result.guess_purity
    assert result.improvement > 0
    assert np.all(np.diff(result.purity_history) > 0)
    assert len(result.purity_history) == result.iterations + 1
    assert result.pulse.n_segments == 40
    assert result.pulse.second_amplitudes is not None
    assert not result.bound_infeasible
    assert result.final_purity == pytest.approx(final_purity(spec, rho0, result.pulse, SIGMA_1), abs=1e-12)


def test_optimizer_respects_amplitude_bound(spec, rho0):
    options = OptimizerOptions(n_segments=10, max_iter=5, eps_max=0.5)
    result = optimize_pulse(spec, rho0, 5.0, options)
    assert result.bound_infeasible
    assert np.max(np.abs(result.pulse.amplitudes)) <= 0.5
    assert np.all(np.diff(result.purity_history) >= 0)


def test_optimizer_from_guess(spec, rho0):
    guess = PulseSchedule.constant(5.0, 8, 1.0)
    result = optimize_pulse(spec, rho0, 5.0, OptimizerOptions(max_iter=0), guess=guess)
    assert result.iterations == 0
    assert result.final_purity == result.guess_purity
    assert np.allclose(result.pulse.amplitudes, guess.amplitudes)

    restored = OptimizationResult.from_json(result.to_json())
    assert restored.final_purity == result.final_purity
    assert np.allclose(restored.pulse.amplitudes, result.pulse.amplitudes)
    assert list(result.to_frame().columns) == ['t', 'eps']

    with pytest.raises(ValidationError):
        optimize_pulse(spec, rho0, 0.0)


def test_guess_must_span_tau(spec, rho0):
    guess = PulseSchedule.constant(5.0, 8, 1.0)
    with pytest.raises(ValidationError):
        optimize_pulse(spec, rho0, 7.0, OptimizerOptions(max_iter=0), guess=guess)
