import numpy as np
import pytest

from qreset.errors import InvalidCaseSelector, InvalidSystemSpec, NegativeBeta, ValidationError, WrongAncillaDim
from qreset.model import (
    OperatorSelector,
    PulseSchedule,
    SystemSpec,
    ancilla_thermal_state,
    build_hamiltonian,
    build_qudit_hamiltonian,
    case_label,
    dressed_splitting,
    hamiltonian,
    initial_state,
    operator_of,
    parse_case,
    qubit_thermal_state,
    random_qubit_states,
    resonant_amplitude,
    thermal_state,
)
from qreset.operator_core import SIGMA_1, SIGMA_2, SIGMA_3, is_density, is_hermitian, partial_trace, purity


@pytest.fixture
def spec():
    return SystemSpec(omega_s=1.0, ancilla_levels=(-1.5, 1.5), j=0.1)


def test_selector():
    assert np.allclose(operator_of(OperatorSelector.sigma(2)), SIGMA_2)
    assert OperatorSelector.parse(' s3 ').pauli == 3
    assert np.allclose(operator_of(OperatorSelector.bloch(0, np.pi / 2)), SIGMA_1, atol=1e-15)
    assert np.allclose(operator_of(OperatorSelector.bloch(0, 0)), SIGMA_3)

    bloch = OperatorSelector.bloch(0.3, 1.1)
    assert np.allclose(operator_of(bloch) @ operator_of(bloch), np.eye(2))
    assert OperatorSelector.from_json(bloch.to_json()) == bloch
    assert OperatorSelector.from_json('s1') == OperatorSelector.sigma(1)

    with pytest.raises(InvalidCaseSelector):
        OperatorSelector.sigma(4)
    with pytest.raises(InvalidCaseSelector):
        OperatorSelector.parse('x1')
    with pytest.raises(InvalidCaseSelector):
        OperatorSelector.bloch(0, 4)
    with pytest.raises(InvalidSystemSpec):
        OperatorSelector.from_json({'pauli': 1, 'phi': 0})


def test_parse_case():
    o_s, o_b, o_c = parse_case('s1s2:s3')
    assert (o_s.pauli, o_b.pauli, o_c.pauli) == (1, 2, 3)
    assert case_label(o_s, o_b, o_c) == 's1s2:s3'
    with pytest.raises(InvalidCaseSelector):
        parse_case('s1s2s3')


def test_spec_validation(spec):
    assert spec.d_b == 2
    assert spec.omega_b == pytest.approx(3)
    with pytest.raises(InvalidSystemSpec):
        SystemSpec(omega_s=0, ancilla_levels=(-1.5, 1.5), j=0.1)
    with pytest.raises(InvalidSystemSpec):
        SystemSpec(omega_s=1, ancilla_levels=(1.5, -1.5), j=0.1)
    with pytest.raises(InvalidSystemSpec):
        SystemSpec(omega_s=1, ancilla_levels=(-0.25, 0.25), j=0.1)
    with pytest.raises(InvalidSystemSpec):
        SystemSpec(omega_s=1, ancilla_levels=(-1.5, 1.5), j=-0.1)
    with pytest.raises(NegativeBeta):
        SystemSpec(omega_s=1, ancilla_levels=(-1.5, 1.5), j=0.1, beta=-1)


def test_spec_json(spec):
    other = spec.with_case(o_c=OperatorSelector.bloch(0.1, 0.2))
    assert SystemSpec.from_json(other.to_json()) == other
    assert SystemSpec.from_json({'omega_s': 1, 'ancilla_levels': [-1.5, 1.5], 'j': 0.1}) == spec

    with pytest.raises(InvalidSystemSpec):
        SystemSpec.from_json({'omega_s': 1, 'ancilla_levels': [-1.5, 1.5]})
    with pytest.raises(InvalidSystemSpec):
        SystemSpec.from_json({'omega_s': 1, 'ancilla_levels': [-1.5, 1.5], 'j': 0.1, 'gamma': 1})
    with pytest.raises(InvalidSystemSpec):
        SystemSpec.from_json({'omega_s': 'one', 'ancilla_levels': [-1.5, 1.5], 'j': 0.1})
    with pytest.raises(InvalidSystemSpec):
        SystemSpec.from_json([1, 2])


def test_from_gaps():
    assert SystemSpec.from_gaps(1, [3], 0.1).ancilla_levels == (-1.5, 1.5)
    qutrit = SystemSpec.from_gaps(1, [3, 2], 0.1)
    assert qutrit.d_b == 3
    h = build_qudit_hamiltonian(qutrit, 0.5)
    assert h.shape == (6, 6)
    assert is_hermitian(h)
    with pytest.raises(WrongAncillaDim):
        build_hamiltonian(qutrit, 0.5)


def test_thermal_state():
    rho = thermal_state(1.5 * SIGMA_3, 1.0)
    assert is_density(rho)
    assert (rho[1, 1] - rho[0, 0]).real == pytest.approx(np.tanh(1.5))
    assert np.allclose(thermal_state(SIGMA_3, 0), np.eye(2) / 2)
    with pytest.raises(NegativeBeta):
        thermal_state(SIGMA_3, -1)


def test_ancilla_thermal_purity(spec):
    rho_b = ancilla_thermal_state(spec)
    p_g, p_e = rho_b[1, 1].real, rho_b[0, 0].real
    assert p_g - p_e == pytest.approx(0.905148, abs=1e-6)
    assert purity(qubit_thermal_state(spec)) < purity(rho_b)


def test_hamiltonian(spec):
    h = build_hamiltonian(spec, 0.7)
    assert is_hermitian(h)
    assert np.allclose(hamiltonian(spec, 0.7), h)
    h2 = hamiltonian(spec, 0.7, 0.2, OperatorSelector.sigma(1))
    assert np.allclose(h2 - h, 0.2 * np.kron(SIGMA_1, np.eye(2)))

    rho = initial_state(spec)
    assert is_density(rho)
    assert np.allclose(partial_trace(rho, (2, 2)), qubit_thermal_state(spec))


@pytest.mark.parametrize(
    'o_c, expected',
    [
        (3, 1.0),
        (1, np.sqrt(2)),
        (2, np.sqrt(2)),
    ],
)
def test_resonant_amplitude(spec, o_c, expected):
    case_spec = spec.with_case(o_c=OperatorSelector.sigma(o_c))
    eps = resonant_amplitude(case_spec)
    assert eps == pytest.approx(expected, abs=1e-9)
    assert dressed_splitting(case_spec, eps) == pytest.approx(3, abs=1e-9)


def test_no_resonance():
    spec = SystemSpec(omega_s=1.0, ancilla_levels=(-1.5, 1.5), j=0.1, o_c=OperatorSelector.bloch(0, np.pi / 2))
    assert resonant_amplitude(spec) == pytest.approx(np.sqrt(2), abs=1e-9)
    weak = SystemSpec(omega_s=3.0, ancilla_levels=(-1.5, 1.5), j=0.1)
    assert resonant_amplitude(weak) == 0.0


def test_pulse_schedule():
    pulse = PulseSchedule.constant(2.0, 4, 0.5, second=0.0)
    assert pulse.n_segments == 4
    assert pulse.dt == pytest.approx(0.5)
    assert pulse.segment_starts.tolist() == [0.0, 0.5, 1.0, 1.5]
    assert list(pulse.to_frame().columns) == ['t', 'eps', 'eps2']
    again = PulseSchedule.from_json(pulse.to_json())
    assert np.array_equal(again.amplitudes, pulse.amplitudes)
    assert np.array_equal(again.second_amplitudes, pulse.second_amplitudes)

    with pytest.raises(ValidationError):
        PulseSchedule.constant(0.0, 4, 0.5)
    with pytest.raises(ValidationError):
        PulseSchedule.constant(1.0, 4, 0.5, eps_max=0.1)
    with pytest.raises(ValidationError):
        PulseSchedule(1.0, np.ones(3), second_amplitudes=np.ones(2))


def test_random_qubit_states():
    states = random_qubit_states(0.6, 20, np.random.default_rng(0))
    assert len(states) == 20
    assert all(purity(rho) == pytest.approx(0.6) for rho in states)
    with pytest.raises(ValidationError):
        random_qubit_states(0.4, 1, np.random.default_rng(0))
