"""
Tasks behind the command-line subcommands.

Each task declares its parameters in `Meta.parameters`; the subcommand name is the task's
slugname with dashes (`QslVerifyTask` → `qsl-verify`).
"""
import logging
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from tabulate import tabulate

from .control_opt import OptimizationResult, OptimizerOptions, optimize_pulse
from .errors import ConfigError, NoPurification, SumMismatch
from .lie_cartan import classify_all_27, classify_case
from .model import (
    OperatorSelector,
    PulseSchedule,
    SystemSpec,
    bloch_density,
    build_hamiltonian,
    case_label,
    initial_state,
    parse_case,
    qubit_thermal_state,
    random_qubit_states,
    resonant_amplitude,
)
from .operator_core import propagator
from .operator_core import purity as state_purity
from .parameter import Parameter
from .purity_majorization import (
    dimension_sweep,
    epsilon_reset_check,
    exhaustive_max_purity,
    optimal_reshuffle,
    thermal_ladder,
    thermal_qubit,
)
from .reset_dynamics import (
    ANGULAR_HBAR1,
    SCAN_AXES,
    TABLE_I,
    UNIT_CHOICES,
    CouplingAngles,
    NotPurifiable,
    PurityCurve,
    abar_general,
    analytic_tmin_class,
    angle_scan,
    approx_purity,
    case_parameters,
    dressed_qubit_state,
    eta_and_tmin,
    resonant_case_table,
    resonant_curve,
    simulate_purity,
    superconducting_tmin_table,
)
from .task import Task
from .utils.iter import parallel_map
from .weyl_qsl import (
    NAMED_GATES,
    AncillaLocalState,
    QslReport,
    WeylCoordinates,
    canonical_gate,
    local_invariants,
    qsl_verify,
    tori_min_time,
    weyl_coordinates,
)

LOGGER = logging.getLogger(__name__)

SIGMA_3_COUPLING = [0.0, 0.0, 0.0, np.pi / 2, 0.0, np.pi / 2]


def _table(frame: pd.DataFrame, floatfmt: str = '.6g') -> str:
    return tabulate(frame, headers='keys', showindex=False, floatfmt=floatfmt)


def _resonant_tmin(spec: SystemSpec) -> float:
    params = case_parameters(spec.o_s, spec.o_b, spec.o_c, spec)
    if isinstance(params, NotPurifiable):
        raise NoPurification(f'Case `{params.label}` is not purifiable: {params.reason}')
    return eta_and_tmin(params).t_min


def _default_t_max(spec: SystemSpec, t_max: Optional[float]) -> float:
    if t_max is not None:
        return t_max
    if spec.d_b != 2:
        raise ConfigError('`t_max` is required for a qudit ancilla')
    return 2 * _resonant_tmin(spec)


def _qubit_state(qubit_bloch: Optional[List[float]]):
    if qubit_bloch is None:
        return None
    if len(qubit_bloch) != 3:
        raise ConfigError(f'`qubit_bloch` needs three components, got `{qubit_bloch}`')
    if np.linalg.norm(qubit_bloch) > 1 + 1e-12:
        raise ConfigError(f'Bloch vector `{qubit_bloch}` is longer than 1')
    return bloch_density(qubit_bloch)


class ClassifyTask(Task):
    """
    Lie-algebraic classification of Pauli couplings: algebra and Cartan dimensions, purifiability.

    Reproduces the controllability table of the 27 Pauli couplings, 16 of them purifiable with dim 𝔞 = 2.
    """

    class Meta:
        default_format = 'csv'
        parameters = [
            Parameter('all_cases', dtype=bool, default=False, name_in_config='all', help='classify all 27 Pauli cases'),
            Parameter('case', dtype=str, default=None, help='single case `s<i>s<j>:s<k>`'),
        ]

    def run(self, all_cases, case, threads, use_tqdm) -> pd.DataFrame:
        if all_cases == (case is not None):
            raise ConfigError('Give exactly one of `--all` and `--case`')
        if case is not None:
            return pd.DataFrame([classify_case(*parse_case(case))])
        table = classify_all_27(threads=threads, use_tqdm=use_tqdm)
        self.save_to_run_info({'purifiable': int(table.purifiable.sum())})
        return table

    def summary(self, value: pd.DataFrame) -> str:
        return f'{_table(value)}\n{int(value.purifiable.sum())} of {len(value)} purifiable'


class TminTask(Task):
    """
    Minimum reset time π/(2η₋) at the resonant field, for one case or all Pauli cases.

    Reproduces the resonant-case table of A, B, η₋ and T_min: 15.7, 16.7 or 46.9 at ω_S = 1, ω_B = 3, J = 0.1.
    """

    class Meta:
        default_format = 'csv'
        parameters = [
            Parameter('case', dtype=str, default=None, help='case `s<i>s<j>:s<k>`, the spec case by default'),
            Parameter('all_cases', dtype=bool, default=False, name_in_config='all', help='all 27 Pauli cases'),
            Parameter(
                'angles',
                dtype=list,
                item_dtype=float,
                default=None,
                help='Bloch angles phi_s theta_s phi_b theta_b phi_c theta_c',
            ),
            Parameter('unit_convention', dtype=str, default=ANGULAR_HBAR1, choices=UNIT_CHOICES),
            Parameter('n_times', dtype=int, default=801, help='samples of simulated curves for Bloch-angle cases'),
        ]

    def _class_columns(self, selectors, spec: SystemSpec, unit_convention: str) -> Dict:
        try:
            tmin_class = analytic_tmin_class(*selectors, spec, unit_convention=unit_convention)
        except NoPurification:
            return {'class': None, 't_class': np.nan}
        return {'class': tmin_class.label, 't_class': tmin_class.time}

    def _simulated_row(self, spec: SystemSpec, angles: CouplingAngles, n_times: int) -> Dict:
        case_spec = spec.with_case(*angles.selectors())
        eps = resonant_amplitude(case_spec)
        general = abar_general(angles, spec, eps)
        amplitude = abs(general.a_bar) * abs(np.sin(angles.theta_b))
        if amplitude <= 1e-12:
            raise NoPurification(f'Coupling {tuple(angles)} has vanishing effective amplitude')
        curve = resonant_curve(case_spec, 2.5 * np.pi / (2 * amplitude), n_times)
        self.save_to_run_info({'abs_abar': float(abs(general.a_bar)), 'peak_purity': float(curve.peak_value)})
        return {
            'o_s': case_spec.o_s.label,
            'o_b': case_spec.o_b.label,
            'o_c': case_spec.o_c.label,
            'form': None,
            'abs_abar': float(abs(general.a_bar)),
            't_min': curve.fitted_peak_time(),
            'method': 'simulated',
        }

    def run(self, spec, case, all_cases, angles, unit_convention, n_times, threads) -> pd.DataFrame:
        if all_cases:
            if case is not None or angles is not None:
                raise ConfigError('`--all` cannot be combined with `--case` or `--angles`')
            table = resonant_case_table(spec, threads=threads)
            classes = []
            for _, row in table.iterrows():
                selectors = tuple(OperatorSelector.parse(row[k]) for k in ('o_s', 'o_b', 'o_c'))
                classes.append(self._class_columns(selectors, spec, unit_convention))
            return pd.concat([table, pd.DataFrame(classes)], axis=1)

        if case is not None and angles is not None:
            raise ConfigError('Give at most one of `--case` and `--angles`')
        if angles is not None:
            if len(angles) != 6:
                raise ConfigError(f'`--angles` needs six values, got {len(angles)}')
            coupling = CouplingAngles(*angles)
            selectors = coupling.selectors()
        elif case is not None:
            selectors = parse_case(case)
        else:
            selectors = (spec.o_s, spec.o_b, spec.o_c)

        params = case_parameters(*selectors, spec)
        if isinstance(params, NotPurifiable):
            if angles is None:
                raise NoPurification(f'Case `{params.label}` is not purifiable: {params.reason}')
            return pd.DataFrame([self._simulated_row(spec, coupling, n_times)])

        timing = eta_and_tmin(params)
        row = {
            'o_s': selectors[0].label,
            'o_b': selectors[1].label,
            'o_c': selectors[2].label,
            'form': params.form,
            'a_re': params.a.real,
            'a_im': params.a.imag,
            'b_re': params.b.real,
            'b_im': params.b.imag,
            'eta': timing.eta_exact,
            'eta_approx': timing.eta_approx,
            't_min': timing.t_min,
            **self._class_columns(selectors, spec, unit_convention),
        }
        return pd.DataFrame([row])

    def summary(self, value: pd.DataFrame) -> str:
        if len(value) == 1:
            return f'{value.t_min.iloc[0]:.6g}'
        return _table(value[['o_s', 'o_b', 'o_c', 'form', 't_min', 'class', 't_class']])


class SuperconductingTask(Task):
    """
    Minimum reset times for three superconducting parameter sets, in ns under `TableI`.

    Reproduces the published nanosecond table with T⁽¹⁾ = π²/f_J, f = ω/2π in GHz; `AngularHbar1` gives π/(2J).
    """

    class Meta:
        name = 'table1'
        default_format = 'csv'
        parameters = [
            Parameter('units', dtype=str, default=TABLE_I, choices=UNIT_CHOICES, help='unit convention'),
        ]

    def run(self, units) -> pd.DataFrame:
        return superconducting_tmin_table(unit_convention=units)

    def summary(self, value: pd.DataFrame) -> str:
        return _table(value, floatfmt='.1f')


class SimulateTask(Task):
    """
    Exact qubit purity under a constant field, for one initial state or a random fixed-purity ensemble.

    Reproduces the purity-versus-time curves of the resonant reset and their peak at T_min = π/(2J).
    """

    class Meta:
        default_format = 'csv'
        parameters = [
            Parameter('t_max', dtype=float, default=None, help='end of the time window, twice T_min by default'),
            Parameter('n_times', dtype=int, default=801),
            Parameter('eps', dtype=float, default=None, help='field amplitude, resonant by default'),
            Parameter('qubit_bloch', dtype=list, item_dtype=float, default=None, help='initial qubit Bloch vector'),
            Parameter('random_states', dtype=int, default=0, help='size of a random fixed-purity ensemble'),
            Parameter('purity', dtype=float, default=0.6, help='purity of the ensemble states'),
            Parameter('approx', dtype=bool, default=False, help='add the leading-order approximation'),
        ]

    def run(
        self, spec, t_max, n_times, eps, qubit_bloch, random_states, purity, approx, seed, threads
    ) -> pd.DataFrame:
        t_max = _default_t_max(spec, t_max)
        times = np.linspace(0, t_max, n_times)
        field = resonant_amplitude(spec) if eps is None else eps
        pulse = PulseSchedule.constant(t_max, 1, field)

        if random_states > 0:
            if qubit_bloch is not None or approx:
                raise ConfigError('`--random-states` cannot be combined with `--qubit-bloch` or `--approx`')
            states = random_qubit_states(purity, random_states, np.random.default_rng(seed))
            curves = parallel_map(
                lambda rho_s: simulate_purity(spec, pulse, initial_state(spec, rho_s), times),
                states,
                threads=threads,
                desc='Random initial states',
            )
            peaks = [curve.fitted_peak_time() for curve in curves]
            self.save_to_run_info({'peak_time_mean': float(np.mean(peaks)), 'peak_time_std': float(np.std(peaks))})
            return pd.concat(
                [curve.to_frame().assign(state=k) for k, curve in enumerate(curves)], ignore_index=True
            )[['state', 't', 'purity']]

        rho_s = _qubit_state(qubit_bloch)
        curve = simulate_purity(spec, pulse, initial_state(spec, rho_s), times)
        frame = curve.to_frame()
        if approx:
            if spec.d_b != 2:
                raise ConfigError('`--approx` needs a two-level ancilla')
            qubit = qubit_thermal_state(spec) if rho_s is None else rho_s
            frame['approx'] = approx_purity(times, spec, dressed_qubit_state(spec, field, qubit))
        return frame

    def summary(self, value: pd.DataFrame) -> str:
        if 'state' in value:
            peaks = [PurityCurve(g.t, g.purity).fitted_peak_time() for _, g in value.groupby('state')]
            return f'peak time {np.mean(peaks):.6g} ± {np.std(peaks):.2g} over {len(peaks)} states'
        curve = PurityCurve(value.t, value.purity)
        return f'peak purity {curve.peak_value:.6g} at t = {curve.fitted_peak_time():.6g}'


class WeylTask(Task):
    """
    Canonical non-local coordinates, local invariants and tori minimum time of a two-qubit unitary.

    Weyl chamber coordinates come from the magic basis; the tori bound is (c₁ + c₂ + c₃)/J.
    """

    class Meta:
        parameters = [
            Parameter('gate', dtype=str, default=None, choices=sorted(NAMED_GATES)),
            Parameter('coords', dtype=list, item_dtype=float, default=None, help='coordinates c1 c2 c3'),
            Parameter('time', dtype=float, default=None, help='propagator of the resonant Hamiltonian at this time'),
        ]

    def run(self, spec, gate, coords, time) -> Dict:
        if sum(v is not None for v in (gate, coords, time)) != 1:
            raise ConfigError('Give exactly one of `--gate`, `--coords` and `--time`')
        if gate is not None:
            source, unitary = gate, NAMED_GATES[gate]
        elif coords is not None:
            if len(coords) != 3:
                raise ConfigError(f'`--coords` needs three values, got {len(coords)}')
            source, unitary = 'coords', canonical_gate(WeylCoordinates.of(coords))
        else:
            if spec.d_b != 2:
                raise ConfigError('`--time` needs a two-level ancilla')
            source = f'propagator t={time}'
            unitary = propagator(build_hamiltonian(spec, resonant_amplitude(spec)), time)

        coordinates = weyl_coordinates(unitary)
        g1_re, g1_im, g2 = local_invariants(unitary)
        return {
            'source': source,
            'coordinates': coordinates.to_json(),
            'invariants': {'g1_re': g1_re, 'g1_im': g1_im, 'g2': g2},
            'min_time': tori_min_time(coordinates, spec.j) if spec.j > 0 else None,
        }

    def summary(self, value: Dict) -> str:
        c = value['coordinates']
        coordinates = f'c = ({c["c1"]:.6g}, {c["c2"]:.6g}, {c["c3"]:.6g})'
        if value['min_time'] is None:
            return coordinates
        return f'{coordinates}, min time {value["min_time"]:.6g}'


class QslVerifyTask(Task):
    """
    Brute-force scan of the non-local coordinates for the fastest unitary reaching the ancilla purity.

    Checks the reset speed limit c₁ + c₂ + c₃ ≥ π and the optimizer families for coherent ancillas.
    """

    class Meta:
        parameters = [
            Parameter('grid_n', dtype=int, default=101),
            Parameter('refine', dtype=bool, default=True),
            Parameter('ancilla_purity', dtype=float, default=None, help='thermal ancilla purity by default'),
            Parameter('coherence', dtype=list, item_dtype=float, default=None, help='Re, Im of the ancilla coherence'),
        ]

    def run(self, spec, grid_n, refine, ancilla_purity, coherence, threads) -> QslReport:
        if ancilla_purity is None and coherence is None:
            ancilla = AncillaLocalState.thermal(spec)
        else:
            if coherence is not None and len(coherence) != 2:
                raise ConfigError(f'`--coherence` needs two values, got {len(coherence)}')
            purity = AncillaLocalState.thermal(spec).purity if ancilla_purity is None else ancilla_purity
            ancilla = AncillaLocalState.with_coherence(purity, *(coherence or (0.0, 0.0)))
        report = qsl_verify(ancilla, grid_n=grid_n, refine=refine, threads=threads)
        if report.optimizers and spec.j > 0:
            self.save_to_run_info({'min_time': float(tori_min_time(report.optimizers[0], spec.j))})
        return report

    def summary(self, value: QslReport) -> str:
        optimizers = ', '.join(f'({o.c1:.6g}, {o.c2:.6g}, {o.c3:.6g})' for o in value.optimizers)
        return f'min total angle {value.min_total_angle:.6g} at {optimizers}'


class MaxPurityTask(Task):
    """
    Largest qubit purity any joint unitary reaches with a thermal ladder ancilla.

    Reproduces the majorization bound: 0.9097, 0.970 and 0.995 for 2, 3 and 4 equidistant levels of gap 3.
    """

    class Meta:
        default_format = 'csv'
        parameters = [
            Parameter('d_b', dtype=int, default=2, help='ancilla levels'),
            Parameter('beta', dtype=float, default=1.0),
            Parameter('gap', dtype=float, default=3.0, help='ancilla level spacing'),
            Parameter('omega_s', dtype=float, default=1.0),
            Parameter('exhaustive', dtype=bool, default=False, help='cross-check by brute force'),
            Parameter('sweep', dtype=bool, default=False, help='sweep over `dims` and `betas`'),
            Parameter('dims', dtype=list, item_dtype=int, default=[2, 3, 4]),
            Parameter('betas', dtype=list, item_dtype=float, default=[1.0]),
        ]

    def run(self, d_b, beta, gap, omega_s, exhaustive, sweep, dims, betas, threads) -> pd.DataFrame:
        if sweep:
            return dimension_sweep(dims, betas, omega_s=omega_s, gap=gap, threads=threads)

        rho_s, rho_b = thermal_qubit(omega_s, beta), thermal_ladder(d_b, gap, beta)
        partition = optimal_reshuffle(rho_s, rho_b)
        row = {'d_b': d_b, 'beta': beta, 'gap': gap, 'omega_s': omega_s, 'max_purity': partition.purity}
        row['ancilla_purity'] = state_purity(rho_b)
        row.update({f's_prime_{i}': float(s) for i, s in enumerate(partition.s_prime)})
        if exhaustive:
            row['exhaustive_purity'] = exhaustive_max_purity(rho_s, rho_b, threads=threads)
        return pd.DataFrame([row])

    def summary(self, value: pd.DataFrame) -> str:
        if len(value) == 1:
            return f'{value.max_purity.iloc[0]:.6g}'
        return _table(value)


class EpsilonCheckTask(Task):
    """
    Whether an ancilla spectrum allows resetting a d_S-level system to infidelity at most eps.

    Eligible when ⌈d_B(d_S−1)/d_S⌉ eigenvalues lie below ε/(2d_B(d_S−1)).
    """

    class Meta:
        parameters = [
            Parameter('eps', dtype=float),
            Parameter('d_s', dtype=int, default=2),
            Parameter('d_b', dtype=int, default=2),
            Parameter('beta', dtype=float, default=1.0),
            Parameter('gap', dtype=float, default=3.0),
            Parameter('ancilla_spectrum', dtype=list, item_dtype=float, default=None, help='explicit eigenvalues'),
        ]

    def run(self, eps, d_s, d_b, beta, gap, ancilla_spectrum) -> Dict:
        if ancilla_spectrum is None:
            rho_b = thermal_ladder(d_b, gap, beta)
        else:
            if abs(sum(ancilla_spectrum) - 1) > 1e-12:
                raise SumMismatch(f'Ancilla spectrum sums to `{sum(ancilla_spectrum)}`')
            rho_b = np.diag(ancilla_spectrum).astype(complex)
        check = epsilon_reset_check(rho_b, d_s, eps)
        return {'eps': eps, 'd_s': d_s, 'd_b': int(rho_b.shape[0]), **check._asdict()}

    def summary(self, value: Dict) -> str:
        return f'eligible={value["eligible"]}, infidelity {value["achieved_infidelity"]:.6g} (eps {value["eps"]:g})'


class AngleScanTask(Task):
    """
    |Ā|, numerical 1/T_min and the commutator measure along one coupling angle.

    Reproduces the coupling-angle scans comparing |Ā| with 1/T_min and with C = ‖[O_S, O_c]‖/(2√2).
    """

    class Meta:
        default_format = 'csv'
        parameters = [
            Parameter('axis', dtype=str, default='theta_c', choices=SCAN_AXES),
            Parameter(
                'fixed',
                dtype=list,
                item_dtype=float,
                default=SIGMA_3_COUPLING,
                help='phi_s theta_s phi_b theta_b phi_c theta_c, the scanned one is ignored',
            ),
            Parameter('grid_n', dtype=int, default=33),
            Parameter('n_times', dtype=int, default=801),
        ]

    def run(self, spec, axis, fixed, grid_n, n_times, threads, use_tqdm) -> pd.DataFrame:
        if len(fixed) != 6:
            raise ConfigError(f'`--fixed` needs six angles, got {len(fixed)}')
        return angle_scan(axis, fixed, spec, grid_n=grid_n, n_times=n_times, threads=threads, use_tqdm=use_tqdm)

    def summary(self, value: pd.DataFrame) -> str:
        return (
            f'max |A| at {value.angle[value.abs_abar.idxmax()]:.6g}, '
            f'max 1/T_min at {value.angle[value.inv_tmin.idxmax()]:.6g}'
        )


class OptimizeTask(Task):
    """
    Gradient ascent of the final qubit purity over piecewise-constant fields.

    Reproduces the optimized-versus-resonant purity comparison at and below T_min.
    """

    class Meta:
        parameters = [
            Parameter('tau', dtype=float, default=None, help='pulse duration, `tau_fraction`·T_min by default'),
            Parameter('tau_fraction', dtype=float, default=1.0),
            Parameter('n_segments', dtype=int, default=200),
            Parameter('max_iter', dtype=int, default=200),
            Parameter('eps_max', dtype=float, default=None),
            Parameter('control2', dtype=str, default=None, choices=['s1', 's2', 's3'], help='second control channel'),
            Parameter('qubit_bloch', dtype=list, item_dtype=float, default=None, help='initial qubit Bloch vector'),
        ]

    def run(
        self, spec, tau, tau_fraction, n_segments, max_iter, eps_max, control2, qubit_bloch
    ) -> OptimizationResult:
        if tau is None:
            tau = tau_fraction * _resonant_tmin(spec)
        options = OptimizerOptions(
            n_segments=n_segments,
            max_iter=max_iter,
            eps_max=eps_max,
            control2=None if control2 is None else OperatorSelector.parse(control2),
        )
        rho0 = initial_state(spec, _qubit_state(qubit_bloch))
        result = optimize_pulse(spec, rho0, tau, options)
        self.save_to_run_info(
            {
                'case': case_label(spec.o_s, spec.o_b, spec.o_c),
                'tau': float(tau),
                'improvement': float(result.improvement),
            }
        )
        return result

    def summary(self, value: OptimizationResult) -> str:
        return (
            f'purity {value.final_purity:.6g} (guess {value.guess_purity:.6g}) after {value.iterations} iterations'
        )
