import numpy as np
import pytest
from scipy.linalg import expm

from qreset.errors import (
    AncillaNotThermal,
    DimensionMismatch,
    NoPurification,
    NotDensity,
    PulseTooShort,
    SingularAngleConfiguration,
    ValidationError,
)
from qreset.lie_cartan import pauli_cases
from qreset.model import (
    OperatorSelector,
    PulseSchedule,
    SystemSpec,
    ancilla_thermal_state,
    build_hamiltonian,
    case_label,
    initial_state,
    parse_case,
    qubit_hamiltonian,
    qubit_thermal_state,
    random_qubit_states,
    resonant_amplitude,
)
from qreset.operator_core import IDENTITY_2, SIGMA_1, random_density, tensor
from qreset.operator_core import purity as state_purity
from qreset.reset_dynamics import (
    ANGULAR_HBAR1,
    TABLE_I,
    CouplingAngles,
    DressedCaseParams,
    NotPurifiable,
    PurityCurve,
    abar_general,
    analytic_tmin_class,
    angle_scan,
    approx_purity,
    case_parameters,
    closed_form_propagator,
    commutator_measure,
    commutator_measure_and_heat_bound,
    dressed_basis,
    dressed_qubit_state,
    dressed_transform,
    eta_and_tmin,
    peak_time_spread,
    resolve_unit_convention,
    resonant_case_table,
    resonant_curve,
    simulate_purity,
    superconducting_tmin_table,
)


DEFAULT_SPEC = SystemSpec(omega_s=1.0, ancilla_levels=(-1.5, 1.5), j=0.1)
PURIFIABLE_CASES = [
    case_label(*case) for case in pauli_cases() if not isinstance(case_parameters(*case, DEFAULT_SPEC), NotPurifiable)
]


@pytest.fixture
def spec():
    return DEFAULT_SPEC


def case_spec(spec, case):
    return spec.with_case(*parse_case(case))


def test_dressed_basis_diagonalizes_qubit(spec):
    for case in ['s1s1:s3', 's1s1:s1', 's1s1:s2']:
        s = case_spec(spec, case)
        eps = resonant_amplitude(s)
        t_s = dressed_basis(s, eps)
        assert np.allclose(t_s.conj().T @ t_s, np.eye(2))
        h_s = t_s.conj().T @ qubit_hamiltonian(s, eps) @ t_s
        assert np.allclose(h_s, np.diag([1.5, -1.5]))


def test_dressed_qubit_state_without_field(spec):
    p_g, p_e, gamma = dressed_qubit_state(spec, 0.0, qubit_thermal_state(spec))
    assert p_g == pytest.approx(1 / (1 + np.exp(-1.0)))
    assert p_g + p_e == pytest.approx(1)
    assert gamma == pytest.approx(0)

    with pytest.raises(NotDensity):
        dressed_qubit_state(spec, 0.0, SIGMA_1)


@pytest.mark.parametrize(
    'case, a, b',
    [
        ('s1s1:s3', 0.1, 0),
        ('s3s1:s1', -0.0942809, 0.0333333),
        ('s2s2:s1', -0.1, None),
        ('s1s1:s2', -0.1j, None),
    ],
)
def test_case_parameters(spec, case, a, b):
    params = case_parameters(*parse_case(case), spec)
    assert isinstance(params, DressedCaseParams)
    assert params.a == pytest.approx(a, abs=1e-7)
    if b is not None:
        assert params.b == pytest.approx(b, abs=1e-7)
    assert params.omega_b == 3
    assert params.j == 0.1


def test_form_of_imaginary_coupling(spec):
    assert case_parameters(*parse_case('s1s1:s2'), spec).form == 3


def test_not_purifiable(spec):
    params = case_parameters(*parse_case('s1s3:s3'), spec)
    assert isinstance(params, NotPurifiable)
    assert params.label == 's1s3:s3'
    with pytest.raises(NoPurification):
        eta_and_tmin(DressedCaseParams(0, 0.1, 1, 3.0))
    with pytest.raises(NoPurification):
        analytic_tmin_class(*parse_case('s3s3:s1'), spec)


def test_minimum_times(spec):
    assert eta_and_tmin(case_parameters(*parse_case('s1s1:s3'), spec)).t_min == pytest.approx(15.70796, abs=1e-5)

    timing = eta_and_tmin(case_parameters(*parse_case('s1s1:s1'), spec))
    assert abs(timing.t_min - 46.9) < 0.05

    assert eta_and_tmin(case_parameters(*parse_case('s3s1:s1'), spec)).t_min == pytest.approx(16.66, abs=0.01)


def test_sixteen_purifiable_cases():
    assert len(PURIFIABLE_CASES) == 16


@pytest.mark.parametrize('case', PURIFIABLE_CASES)
def test_closed_form_propagator(spec, case):
    s = case_spec(spec, case)
    h_prime, params = dressed_transform(s, resonant_amplitude(s))
    t_min = eta_and_tmin(params).t_min
    for t in np.linspace(0, 2 * t_min, 20):
        assert np.allclose(closed_form_propagator(t, params), expm(-1j * h_prime * t), atol=1e-8)


def test_approx_purity_limits(spec):
    s = case_spec(spec, 's1s1:s3')
    rho_s = qubit_thermal_state(s)
    qubit_init = dressed_qubit_state(s, resonant_amplitude(s), rho_s)
    t_min = eta_and_tmin(case_parameters(*parse_case('s1s1:s3'), spec)).t_min

    p_g, p_e, gamma = qubit_init
    assert approx_purity(0.0, s, qubit_init) == pytest.approx(p_g**2 + p_e**2 + 2 * abs(gamma) ** 2)

    ancilla_g = 1 / (1 + np.exp(-3.0))
    assert approx_purity(t_min, s, qubit_init) == pytest.approx(ancilla_g**2 + (1 - ancilla_g) ** 2)

    values = approx_purity(np.linspace(0, 2 * t_min, 11), s, qubit_init)
    assert values.shape == (11,)
    assert np.argmax(values) == 5

    with pytest.raises(AncillaNotThermal):
        approx_purity(1.0, s, qubit_init, ancilla=np.full((2, 2), 0.5))


def test_resonant_curve_peaks_at_tmin(spec):
    s = case_spec(spec, 's1s1:s3')
    t_min = eta_and_tmin(case_parameters(*parse_case('s1s1:s3'), spec)).t_min
    curve = resonant_curve(s, 2 * t_min, 801)

    assert curve.fitted_peak_time() == pytest.approx(t_min, rel=0.02)
    assert curve.peak_value == pytest.approx(0.909646, abs=5e-3)


@pytest.mark.parametrize('case', PURIFIABLE_CASES)
def test_resonant_peak_of_every_purifiable_case(spec, case):
    s = case_spec(spec, case)
    t_min = eta_and_tmin(case_parameters(*parse_case(case), spec)).t_min
    assert resonant_curve(s, 2 * t_min, 801).fitted_peak_time() == pytest.approx(t_min, rel=0.02)


@pytest.mark.parametrize('gaps', [(3.0, 2.0), (3.0, 2.0, 2.0)])
def test_qudit_peak_time_matches_two_level_tmin(gaps):
    qudit = SystemSpec.from_gaps(1.0, gaps, 0.1)
    t_min = np.pi / (2 * qudit.j)
    assert resonant_curve(qudit, 2 * t_min, 801).fitted_peak_time() == pytest.approx(t_min, rel=0.05)


def test_purity_never_exceeds_ancilla_purity(spec):
    rng = np.random.default_rng(17)
    ceiling = state_purity(ancilla_thermal_state(spec))
    assert ceiling == pytest.approx(0.909646, abs=1e-6)
    for _ in range(200):
        s = case_spec(spec, PURIFIABLE_CASES[rng.integers(len(PURIFIABLE_CASES))])
        rho_s = random_qubit_states(rng.uniform(0.5, ceiling), 1, rng)[0]
        pulse = PulseSchedule(rng.uniform(5.0, 60.0), rng.uniform(-2.0, 2.0, 3))
        curve = simulate_purity(s, pulse, initial_state(s, rho_s), np.linspace(0, pulse.duration, 21))
        assert curve.peak_value <= ceiling + 1e-9


def test_simulation_matches_approximation(spec):
    s = case_spec(spec, 's1s1:s3')
    eps = resonant_amplitude(s)
    rho_s = qubit_thermal_state(s)
    times = np.linspace(0, 30, 31)
    simulated = resonant_curve(s, 30, 31, rho_s).values
    approximate = approx_purity(times, s, dressed_qubit_state(s, eps, rho_s))
    assert np.max(np.abs(simulated - approximate)) < 0.01


def test_simulate_purity_validation(spec):
    rho0 = initial_state(spec)
    pulse = PulseSchedule.constant(10.0, 4, 1.0)

    with pytest.raises(PulseTooShort):
        simulate_purity(spec, pulse, rho0, [0, 5, 11])
    with pytest.raises(ValidationError):
        simulate_purity(spec, pulse, rho0, [3, 1])
    with pytest.raises(DimensionMismatch):
        simulate_purity(spec, pulse, np.eye(2) / 2, [0, 1])
    with pytest.raises(NotDensity):
        simulate_purity(spec, pulse, np.eye(4), [0, 1])


def test_piecewise_simulation_matches_exponential(spec):
    rho0 = initial_state(spec)
    pulse = PulseSchedule(6.0, [0.4, 1.0, -0.3])
    curve = simulate_purity(spec, pulse, rho0, [0.0, 6.0])

    u = np.eye(4)
    for eps in pulse.amplitudes:
        u = expm(-1j * build_hamiltonian(spec, eps) * pulse.dt) @ u
    rho = u @ rho0 @ u.conj().T
    reduced = np.einsum('ajbj->ab', rho.reshape(2, 2, 2, 2))
    assert curve.values[-1] == pytest.approx(np.trace(reduced @ reduced).real, abs=1e-10)


def test_purity_curve_peaks():
    times = np.linspace(0, 1, 41)
    curve = PurityCurve(times, 1 - (times - 0.37) ** 2)
    assert curve.peak_time == pytest.approx(0.375)
    assert curve.interpolated_peak_time() == pytest.approx(0.37)
    assert curve.fitted_peak_time() == pytest.approx(0.37)
    assert PurityCurve.from_json(curve.to_json()).peak_value == curve.peak_value
    assert list(curve.to_frame().columns) == ['t', 'purity']

    edge = PurityCurve(times, times)
    assert edge.interpolated_peak_time() == 1.0

    with pytest.raises(DimensionMismatch):
        PurityCurve(times, times[:-1])


def test_peak_time_spread(spec):
    s = case_spec(spec, 's1s1:s3')
    t_min = eta_and_tmin(case_parameters(*parse_case('s1s1:s3'), spec)).t_min
    mean, std = peak_time_spread(s, purity=0.6, n=50, seed=3, n_times=401, threads=2)
    assert mean == pytest.approx(t_min, rel=0.05)
    assert std <= 0.02 * mean

    with pytest.raises(ValidationError):
        peak_time_spread(s, purity=0.3, n=2)


def test_analytic_classes(spec):
    result = analytic_tmin_class(*parse_case('s1s1:s3'), spec, unit_convention=ANGULAR_HBAR1)
    assert result.label == 'T1'
    assert result.time == pytest.approx(np.pi / 0.2)

    assert analytic_tmin_class(*parse_case('s3s1:s1'), spec).label == 'T3'
    with pytest.raises(ValidationError):
        analytic_tmin_class(*parse_case('s1s1:s3'), spec, unit_convention='seconds')


def test_resonant_case_table(spec):
    table = resonant_case_table(spec, threads=2)
    assert len(table) == 27
    assert table['form'].notna().sum() == 16
    row = table[(table.o_s == 's1') & (table.o_b == 's1') & (table.o_c == 's3')].iloc[0]
    assert row.t_min == pytest.approx(15.70796, abs=1e-5)
    assert np.isnan(table[(table.o_b == 's3') & (table.o_c == 's1')].t_min).all()


def test_superconducting_tmin_table():
    table = superconducting_tmin_table()
    assert len(table) == 16
    for column, expected in [
        ('set1_ns', {151.8, 191.0, 250.3}),
        ('set2_ns', {49.3, 81.1, 62.2}),
        ('set3_ns', {394.8, 402.3, 2054.6}),
    ]:
        assert set(table[column].round(1)) == expected


def test_abar_general_reduces_to_pauli_case(spec):
    angles = (0.0, 0.0, 0.0, np.pi / 2, 0.0, np.pi / 2)
    s = case_spec(spec, 's3s1:s1')
    general = abar_general(angles, spec, resonant_amplitude(s))
    assert general.a_bar == pytest.approx(-0.0942809, abs=1e-7)
    assert general.a_s == pytest.approx(general.a_bar)
    assert general.a_c == pytest.approx(0, abs=1e-12)


def test_abar_general_matches_transform(spec):
    angles = (0.3, 1.1, 0.7, 1.3, 0.2, 0.9)
    s = spec.with_case(*CouplingAngles(*angles).selectors())
    eps = resonant_amplitude(s)
    general = abar_general(angles, spec, eps)
    t = tensor(dressed_basis(s, eps), IDENTITY_2)
    assert np.allclose(general.h_prime, t.conj().T @ build_hamiltonian(s, eps) @ t, atol=1e-9)

    with pytest.raises(SingularAngleConfiguration):
        abar_general((0.0, np.pi / 2, 0.0, np.pi / 2, 0.0, np.pi), spec, 0.5)


def test_commutator_measure(spec):
    o_1, o_3 = parse_case('s1s3:s1')[:2]
    assert commutator_measure(o_1, o_3) == pytest.approx(1)
    assert commutator_measure(o_1, o_1) == pytest.approx(0)

    rng = np.random.default_rng(7)
    for _ in range(5):
        exchange = commutator_measure_and_heat_bound(o_1, o_3, spec, 1.3, random_density(4, rng))
        assert abs(exchange.q_dot) <= exchange.bound + 1e-12
        assert exchange.c == pytest.approx(1)

    with pytest.raises(NotDensity):
        commutator_measure_and_heat_bound(o_1, o_3, spec, 1.0, np.eye(4))


def test_heat_exchange_bound_on_random_instants(spec):
    rng = np.random.default_rng(23)
    sigmas = [OperatorSelector.sigma(k) for k in (1, 2, 3)]
    for _ in range(100):
        o_s, o_c = sigmas[rng.integers(3)], sigmas[rng.integers(3)]
        exchange = commutator_measure_and_heat_bound(o_s, o_c, spec, rng.uniform(-2.0, 2.0), random_density(4, rng))
        assert abs(exchange.q_dot) <= exchange.bound + 1e-9


def _maximal_points(spec, theta_s):
    abar_max, c_max = set(), set()
    for theta_c in np.linspace(0, np.pi, 9):
        for delta_phi in np.linspace(0, 2 * np.pi, 9)[:-1]:
            angles = CouplingAngles(0.0, theta_s, 0.0, np.pi / 2, delta_phi, theta_c)
            o_s, o_b, o_c = angles.selectors()
            eps = resonant_amplitude(spec.with_case(o_s, o_b, o_c))
            point = (round(theta_c, 6), round(delta_phi, 6))
            if abs(abar_general(angles, spec, eps).a_bar) / spec.j > 1 - 1e-9:
                abar_max.add(point)
            if commutator_measure(o_s, o_c) > 1 - 1e-9:
                c_max.add(point)
    return abar_max, c_max


def test_abar_and_commutator_maxima_coincide_for_transverse_qubit_operator(spec):
    abar_max, c_max = _maximal_points(spec, np.pi / 2)
    assert (0.0, 0.0) in abar_max
    assert abar_max == c_max

    tilted_abar, tilted_c = _maximal_points(spec, np.pi / 4)
    assert (round(np.pi / 2, 6), round(np.pi / 2, 6)) in tilted_c - tilted_abar


def test_angle_scan(spec):
    fixed = (0.0, 0.0, 0.0, np.pi / 2, 0.0, 0.0)
    scan = angle_scan('theta_c', fixed, spec, grid_n=16, n_times=401, threads=2)
    assert list(scan.columns) == ['angle', 'abs_abar', 'inv_tmin', 'c']
    assert len(scan) == 16
    assert scan.angle.iloc[-1] == pytest.approx(np.pi)

    coupled = scan[scan.abs_abar > 0.2]
    step = scan.angle.iloc[1]
    assert abs(coupled.angle[coupled.abs_abar.idxmax()] - np.pi + np.arctan(3)) <= step
    assert abs(coupled.abs_abar.idxmax() - coupled.inv_tmin.idxmax()) <= 1

    with pytest.raises(ValidationError):
        angle_scan('theta_x', fixed, spec)
    with pytest.raises(ValidationError):
        angle_scan('theta_c', fixed, spec, grid_n=8)


def test_superconducting_tmin_table_unit_conventions():
    ghz_ns = superconducting_tmin_table(unit_convention='ghz-ns')
    assert list(ghz_ns.columns) == list(superconducting_tmin_table(unit_convention=TABLE_I).columns)
    angular = superconducting_tmin_table(unit_convention=ANGULAR_HBAR1)
    assert list(angular.columns) == ['o_s', 'o_b', 'o_c', 'set1', 'set2', 'set3']
    assert (angular.set1 < ghz_ns.set1_ns).all()


def test_resolve_unit_convention():
    assert resolve_unit_convention('TableI') == TABLE_I
    assert resolve_unit_convention('angular') == ANGULAR_HBAR1
    with pytest.raises(ValidationError):
        resolve_unit_convention('seconds')
