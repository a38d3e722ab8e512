"""
Reset dynamics in the dressed frame of the driven qubit.

At resonance the transformed Hamiltonian H′ = T†HT (T = T_S⊗𝟙, T_S the eigenvectors of
H_S(ε)) takes one of four sparse forms fixed by two constants A and B. A couples |ee⟩↔|gg⟩
and |eg⟩↔|ge⟩ and drives the purity swap; the time-optimal reset needs π/(2η₋) with η₋ ≈ |A|.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import (
    AncillaNotThermal,
    DimensionMismatch,
    InvariantViolation,
    NoDressedForm,
    NoPurification,
    NotDensity,
    PulseTooShort,
    SingularAngleConfiguration,
    ValidationError,
)
from .lie_cartan import pauli_cases
from .model import (
    OperatorSelector,
    PulseSchedule,
    SystemSpec,
    ancilla_thermal_state,
    build_hamiltonian,
    case_label,
    hamiltonian,
    initial_state,
    operator_of,
    qubit_hamiltonian,
    random_qubit_states,
    resonant_amplitude,
)
from .operator_core import (
    IDENTITY_2,
    SIGMA_3,
    OperatorMatrix,
    as_operator,
    commutator,
    frobenius_norm,
    hermitian_eig,
    is_density,
    partial_trace,
    tensor,
)
from .utils.iter import parallel_map
from .utils.json import complex_from_json, complex_to_json

LOGGER = logging.getLogger(__name__)

TEMPLATE_TOL = 1e-10
GENERAL_FORM_TOL = 1e-9
AMPLITUDE_TOL = 1e-12

TABLE_I = 'TableI'
ANGULAR_HBAR1 = 'AngularHbar1'
UNIT_CONVENTIONS = (TABLE_I, ANGULAR_HBAR1)
UNIT_ALIASES = {'ghz-ns': TABLE_I, 'angular': ANGULAR_HBAR1}
UNIT_CHOICES = UNIT_CONVENTIONS + tuple(UNIT_ALIASES)

RESONANT_CASE_VALUES = ('a_re', 'a_im', 'b_re', 'b_im', 'eta', 't_min')

# (ω_S/2π [GHz], ω_B/2π [GHz], J/2π [GHz])
SUPERCONDUCTING_SETS = ((12.8, 16.1, 0.065), (9.8, 16.1, 0.2), (15.8, 16.1, 0.025))

# entries (1,4), (2,3), (3,2), (4,1) of H′ in terms of A
_FORM_PATTERNS = {
    1: lambda a: (a, a, a, a),
    2: lambda a: (np.conj(a), a, np.conj(a), a),
    3: lambda a: (np.conj(a), np.conj(a), a, a),
    4: lambda a: (a, -a, -a, a),
}


def _as_selector(o: Union[int, OperatorSelector]) -> OperatorSelector:
    return o if isinstance(o, OperatorSelector) else OperatorSelector.sigma(int(o))


def dressing_angles(spec: SystemSpec, eps: float) -> Tuple[float, float]:
    """
    Signed polar angle α and azimuth φ of the qubit field h = (ω_S/2)ẑ + ε·n_c.

    The azimuth is pinned to the control's φ_c, so α < 0 for negative amplitudes.
    """
    phi_c, theta_c = spec.o_c.angles
    return float(np.arctan2(eps * np.sin(theta_c), spec.omega_s / 2 + eps * np.cos(theta_c))), phi_c


def dressed_basis(spec: SystemSpec, eps: float) -> OperatorMatrix:
    """T_S with columns (|e⟩, |g⟩), the eigenvectors of H_S(ε) for the upper and lower level."""
    alpha, phi = dressing_angles(spec, eps)
    c, s = np.cos(alpha / 2), np.sin(alpha / 2)
    left, right = np.exp(-0.5j * phi), np.exp(0.5j * phi)
    return np.array([[left * c, -left * s], [right * s, right * c]])


def dressed_qubit_state(spec: SystemSpec, eps: float, rho_s: OperatorMatrix) -> Tuple[float, float, complex]:
    """Populations (p_g, p_e) and coherence γ = ⟨e|ρ|g⟩ of a bare qubit state in the dressed basis."""
    rho_s = as_operator(rho_s)
    if not is_density(rho_s) or rho_s.shape != (2, 2):
        raise NotDensity('Qubit state must be a 2×2 density matrix')
    t_s = dressed_basis(spec, eps)
    dressed = t_s.conj().T @ rho_s @ t_s
    return float(dressed[1, 1].real), float(dressed[0, 0].real), complex(dressed[0, 1])


@dataclass(frozen=True)
class NotPurifiable:
    """Marker returned for interaction/control combinations that cannot purify the qubit."""

    label: str
    reason: str = 'no dressed form with a non-vanishing A'


@dataclass(frozen=True)
class DressedCaseParams:
    a: complex
    b: complex
    form: int
    omega_b: float
    j: float = 0.0

    @property
    def omega(self) -> float:
        return float(np.sqrt(self.omega_b**2 + 4 * abs(self.b) ** 2))

    @property
    def delta_plus(self) -> float:
        return 1 + self.omega_b / self.omega

    @property
    def delta_minus(self) -> float:
        return 1 - self.omega_b / self.omega

    def _eta_squared(self, sign: int) -> float:
        return abs(self.a) ** 2 + abs(self.b) ** 2 + self.omega_b / 2 * (self.omega_b + sign * self.omega)

    @property
    def eta_plus(self) -> float:
        return float(np.sqrt(self._eta_squared(+1)))

    @property
    def eta_minus(self) -> float:
        return float(np.sqrt(max(self._eta_squared(-1), 0.0)))

    def gauge(self) -> Tuple[np.ndarray, float]:
        """
        Diagonal phases D and real coupling b₁ with H′ = D†·H_c·D, H_c the real form-1 matrix in |A| and b₁.
        """
        phase = np.exp(1j * np.angle(self.a)) if abs(self.a) > 0 else 1.0
        if self.form == 1:
            d, b1 = np.array([1, 1, phase, phase]), self.b
        elif self.form == 2:
            d, b1 = np.array([1, np.conj(phase), 1, np.conj(phase)]), phase * self.b
        elif self.form == 3:
            d, b1 = np.array([1, 1, np.conj(phase), np.conj(phase)]), self.b
        elif self.form == 4:
            d, b1 = np.array([1, 1j, -1j * phase, phase]), -1j * self.b
        else:
            raise NoDressedForm(f'Unknown dressed form `{self.form}`')
        b1 = complex(b1)
        if abs(b1.imag) > TEMPLATE_TOL * max(1.0, abs(b1)):
            raise NoDressedForm(f'Form {self.form} gauge leaves a complex coupling `{b1}`')
        return d.astype(complex), b1.real

    def to_json(self) -> Dict:
        return {
            'a': complex_to_json(self.a),
            'b': complex_to_json(self.b),
            'form': self.form,
            'omega_b': self.omega_b,
            'j': self.j,
        }

    @classmethod
    def from_json(cls, data: Dict) -> DressedCaseParams:
        return cls(
            a=complex_from_json(data['a']),
            b=complex_from_json(data['b']),
            form=int(data['form']),
            omega_b=float(data['omega_b']),
            j=float(data.get('j', 0.0)),
        )


def form_template(form: int, a: complex, b: complex, omega_b: float) -> OperatorMatrix:
    h = np.diag([omega_b, 0, 0, -omega_b]).astype(complex)
    h[0, 3], h[1, 2], h[2, 1], h[3, 0] = _FORM_PATTERNS[form](a)
    h[0, 1], h[1, 0] = b, np.conj(b)
    h[2, 3], h[3, 2] = -b, -np.conj(b)
    return h


def dressed_transform(spec: SystemSpec, eps: float) -> Tuple[OperatorMatrix, DressedCaseParams]:
    """
    H′ = T†HT and the constants read off it, A = H′₄₁ and B = H′₁₂.

    The first of the four templates matching H′ entrywise within 1e−10 fixes the form.
    """
    t = tensor(dressed_basis(spec, eps), IDENTITY_2)
    h_prime = t.conj().T @ build_hamiltonian(spec, eps) @ t
    a, b = complex(h_prime[3, 0]), complex(h_prime[0, 1])
    omega_b = spec.omega_b

    for form in _FORM_PATTERNS:
        deviation = np.max(np.abs(h_prime - form_template(form, a, b, omega_b)))
        if deviation <= TEMPLATE_TOL * max(1.0, omega_b):
            if spec.j > 0 and abs(a) <= AMPLITUDE_TOL:
                break
            LOGGER.debug(f'{case_label(spec.o_s, spec.o_b, spec.o_c)} matches form {form}: A={a:.6g}, B={b:.6g}')
            return h_prime, DressedCaseParams(a, b, form, omega_b, spec.j)
    raise NoDressedForm(f'No dressed form for case `{case_label(spec.o_s, spec.o_b, spec.o_c)}` at eps=`{eps}`')


def case_parameters(
    o_s: Union[int, OperatorSelector],
    o_b: Union[int, OperatorSelector],
    o_c: Union[int, OperatorSelector],
    spec: SystemSpec,
) -> Union[DressedCaseParams, NotPurifiable]:
    """Dressed-frame constants of a case at its resonant amplitude, or `NotPurifiable`."""
    case_spec = spec.with_case(_as_selector(o_s), _as_selector(o_b), _as_selector(o_c))
    label = case_label(case_spec.o_s, case_spec.o_b, case_spec.o_c)
    try:
        _, params = dressed_transform(case_spec, resonant_amplitude(case_spec))
    except NoDressedForm as error:
        return NotPurifiable(label, str(error))
    return params


def closed_form_propagator(t: float, params: DressedCaseParams) -> OperatorMatrix:
    """
    exp(−iH′t) from the analytic solution of the form-1 problem with real constants.

    With s± = sin(η±t)/η± and c± = cos(η±t), U_c has the structure
        [[u₁₁, u₁₂, u₁₃, u₁₄], [u₁₂, u₂₂, u₂₃, u₁₃], [u₁₃, u₂₃, u₂₂*, u₁₂*], [u₁₄, u₁₃, u₁₂*, u₁₁*]]
    and U = D†·U_c·D with the form's diagonal gauge D.
    """
    d, b = params.gauge()
    a = abs(params.a)
    omega_b, omega = params.omega_b, params.omega
    dp, dm = params.delta_plus, params.delta_minus
    eta_p, eta_m = params.eta_plus, params.eta_minus

    cp, cm = np.cos(eta_p * t), np.cos(eta_m * t)
    sp, sm = t * np.sinc(eta_p * t / np.pi), t * np.sinc(eta_m * t / np.pi)
    mixed = dp * sp + dm * sm
    swapped = dm * sp + dp * sm

    u11 = (dp * cp + dm * cm) / 2 - 1j * (omega_b * mixed / 2 + b**2 / omega * (sp - sm))
    u12 = b / omega * (cp - cm) - 0.5j * b * mixed
    u13 = -1j * a * b / omega * (sp - sm)
    u14 = -0.5j * a * mixed
    u22 = (dm * cp + dp * cm) / 2 - 1j * b**2 / omega * (sp - sm)
    u23 = -0.5j * a * swapped

    u_c = np.array(
        [
            [u11, u12, u13, u14],
            [u12, u22, u23, u13],
            [u13, u23, np.conj(u22), np.conj(u12)],
            [u14, u13, np.conj(u12), np.conj(u11)],
        ]
    )
    return (d.conj()[:, None] * u_c) * d[None, :]


class EtaTmin(NamedTuple):
    eta_exact: float
    eta_approx: float
    t_min: float


def eta_and_tmin(params: DressedCaseParams) -> EtaTmin:
    """
    η₋, its leading approximation |A| and T_min = π/(2η₋).

    >>> round(eta_and_tmin(DressedCaseParams(0.1, 0, 1, 3.0, 0.1)).t_min, 5)
    15.70796
    """
    if abs(params.a) <= AMPLITUDE_TOL:
        raise NoPurification(f'A vanishes for form {params.form}, the qubit cannot be purified')
    eta = params.eta_minus
    return EtaTmin(eta, abs(params.a), np.pi / (2 * eta))


def _case_params_or_raise(spec: SystemSpec) -> DressedCaseParams:
    params = case_parameters(spec.o_s, spec.o_b, spec.o_c, spec)
    if isinstance(params, NotPurifiable):
        raise NoPurification(f'Case `{params.label}` is not purifiable: {params.reason}')
    return params


def approx_purity(
    t,
    spec: SystemSpec,
    qubit_init: Tuple[float, float, complex],
    ancilla: Optional[OperatorMatrix] = None,
):
    """
    Leading-order purity of the qubit in the resonant field.

    𝒫_S(t) = [p_S^g p_B^g + p_S^g p_B^e cos²ηt + p_S^e p_B^g sin²ηt]²
           + [p_S^e p_B^e + p_S^g p_B^e sin²ηt + p_S^e p_B^g cos²ηt]² + 2|γ_S|² cos²ηt

    Args:
        t: time or array of times
        spec: two-level ancilla system
        qubit_init: dressed (p_g, p_e, γ) of the qubit, see `dressed_qubit_state`
        ancilla: ancilla density in the (e, g) basis, thermal by default
    """
    rho_b = ancilla_thermal_state(spec) if ancilla is None else as_operator(ancilla)
    if abs(rho_b[0, 1]) > AMPLITUDE_TOL:
        raise AncillaNotThermal(f'Ancilla carries coherence `{rho_b[0, 1]}`, the approximation needs γ_B = 0')
    pb_e, pb_g = float(rho_b[0, 0].real), float(rho_b[1, 1].real)
    ps_g, ps_e, gamma_s = qubit_init

    eta = eta_and_tmin(_case_params_or_raise(spec)).eta_exact
    cos2 = np.cos(eta * np.asarray(t, dtype=float)) ** 2
    sin2 = 1 - cos2
    ground = ps_g * pb_g + ps_g * pb_e * cos2 + ps_e * pb_g * sin2
    excited = ps_e * pb_e + ps_g * pb_e * sin2 + ps_e * pb_g * cos2
    return ground**2 + excited**2 + 2 * abs(gamma_s) ** 2 * cos2


def resolve_unit_convention(name: str) -> str:
    """
    Canonical unit convention for a name or its alias.

    >>> resolve_unit_convention('ghz-ns')
    'TableI'
    """
    convention = UNIT_ALIASES.get(name, name)
    if convention not in UNIT_CONVENTIONS:
        raise ValidationError(f'Unknown unit convention `{name}`, use one of {UNIT_CHOICES}')
    return convention


class TminClass(NamedTuple):
    label: str
    time: float


def analytic_tmin_class(
    o_s: Union[int, OperatorSelector],
    o_b: Union[int, OperatorSelector],
    o_c: Union[int, OperatorSelector],
    spec: SystemSpec,
    unit_convention: str = ANGULAR_HBAR1,
) -> TminClass:
    """
    Assign a case to T⁽¹⁾ = π/(2J), T⁽²⁾ = T⁽¹⁾·ω_B/ω_S or T⁽³⁾ = T⁽¹⁾·ω_B/√(ω_B² − ω_S²) by |A|/J.

    With `TableI` (alias `ghz-ns`) the spec frequencies are read as f = ω/2π in GHz and T⁽¹⁾ = π²/f_J in ns;
    `AngularHbar1` (alias `angular`) takes them as angular frequencies with ħ = 1.
    """
    unit_convention = resolve_unit_convention(unit_convention)
    params = case_parameters(o_s, o_b, o_c, spec)
    if isinstance(params, NotPurifiable):
        raise NoPurification(f'Case `{params.label}` is not purifiable')

    omega_s, omega_b, j = spec.omega_s, spec.omega_b, spec.j
    ratios = {
        'T1': (1.0, 1.0),
        'T2': (omega_s / omega_b, omega_b / omega_s),
        'T3': (np.sqrt(omega_b**2 - omega_s**2) / omega_b, omega_b / np.sqrt(omega_b**2 - omega_s**2)),
    }
    relative = abs(params.a) / j
    label = min(ratios, key=lambda key: abs(ratios[key][0] - relative))
    base = np.pi**2 / j if unit_convention == TABLE_I else np.pi / (2 * j)
    return TminClass(label, float(base * ratios[label][1]))


def resonant_case_table(spec: SystemSpec, threads: Optional[int] = None) -> pd.DataFrame:
    """Form, A, B, η₋ and T_min of all 27 Pauli cases at resonance; non-purifiable rows carry NaN."""

    def row(case):
        params = case_parameters(*case, spec)
        base = {'o_s': case[0].label, 'o_b': case[1].label, 'o_c': case[2].label}
        if isinstance(params, NotPurifiable):
            return {**base, 'form': None, **{key: np.nan for key in RESONANT_CASE_VALUES}}
        timing = eta_and_tmin(params)
        return {
            **base,
            'form': params.form,
            'a_re': params.a.real,
            'a_im': params.a.imag,
            'b_re': params.b.real,
            'b_im': params.b.imag,
            'eta': timing.eta_exact,
            't_min': timing.t_min,
        }

    return pd.DataFrame(parallel_map(row, pauli_cases(), threads=threads, desc='Dressed forms'))


def superconducting_tmin_table(
    parameter_sets: Sequence[Tuple[float, float, float]] = SUPERCONDUCTING_SETS,
    unit_convention: str = TABLE_I,
) -> pd.DataFrame:
    """
    Minimum reset times of the purifiable Pauli cases for superconducting parameter sets.

    Columns are `set<k>_ns` under `TableI` and `set<k>` under `AngularHbar1`.
    """
    unit_convention = resolve_unit_convention(unit_convention)
    suffix = '_ns' if unit_convention == TABLE_I else ''
    specs = [SystemSpec(ws, (-wb / 2, wb / 2), j) for ws, wb, j in parameter_sets]
    rows = []
    for case in pauli_cases():
        if isinstance(case_parameters(*case, specs[0]), NotPurifiable):
            continue
        row = {'o_s': case[0].label, 'o_b': case[1].label, 'o_c': case[2].label}
        for k, spec in enumerate(specs, start=1):
            row[f'set{k}{suffix}'] = analytic_tmin_class(*case, spec, unit_convention=unit_convention).time
        rows.append(row)
    return pd.DataFrame(rows)


@dataclass
class PurityCurve:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1 or len(self.times) == 0:
            raise DimensionMismatch(f'{len(self.times)} times for {len(self.values)} purity values')

    @property
    def peak_index(self) -> int:
        return int(np.argmax(self.values))

    @property
    def peak_time(self) -> float:
        return float(self.times[self.peak_index])

    @property
    def peak_value(self) -> float:
        return float(self.values[self.peak_index])

    def interpolated_peak_time(self) -> float:
        """Vertex of the parabola through the discrete maximum and its two neighbours."""
        k = self.peak_index
        if k == 0 or k == len(self.values) - 1:
            return self.peak_time
        coefficients = np.polyfit(self.times[k - 1 : k + 2], self.values[k - 1 : k + 2], 2)
        if coefficients[0] >= 0:
            return self.peak_time
        return float(-coefficients[1] / (2 * coefficients[0]))

    def fitted_peak_time(self, fraction: float = 0.05) -> float:
        """
        Vertex of a least-squares parabola over the contiguous samples around the maximum lying
        within `fraction` of the curve's range from the top.
        """
        k = self.peak_index
        threshold = self.peak_value - fraction * (self.peak_value - self.values.min())
        above = self.values >= threshold
        lo, hi = k, k
        while lo > 0 and above[lo - 1]:
            lo -= 1
        while hi < len(above) - 1 and above[hi + 1]:
            hi += 1
        if hi - lo < 2:
            return self.interpolated_peak_time()
        coefficients = np.polyfit(self.times[lo : hi + 1], self.values[lo : hi + 1], 2)
        vertex = -coefficients[1] / (2 * coefficients[0]) if coefficients[0] < 0 else np.nan
        if not self.times[lo] <= vertex <= self.times[hi]:
            return self.interpolated_peak_time()
        return float(vertex)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'t': self.times, 'purity': self.values})

    def to_json(self) -> Dict:
        return {
            'times': self.times.tolist(),
            'values': self.values.tolist(),
            'peak_time': self.peak_time,
            'peak_value': self.peak_value,
        }

    @classmethod
    def from_json(cls, data: Dict) -> PurityCurve:
        return cls(np.asarray(data['times']), np.asarray(data['values']))


def _qubit_purities(states: np.ndarray, d_b: int) -> np.ndarray:
    blocks = states.reshape(len(states), 2, d_b, 2, d_b)
    reduced = np.einsum('tajbj->tab', blocks)
    return np.einsum('tab,tba->t', reduced, reduced).real


def simulate_purity(
    spec: SystemSpec,
    pulse: PulseSchedule,
    rho0: OperatorMatrix,
    time_grid: Sequence[float],
    control2: Optional[OperatorSelector] = None,
) -> PurityCurve:
    """
    Qubit purity tr{(tr_B UρU†)²} on `time_grid` under a piecewise-constant field.

    Each segment is propagated exactly from one eigendecomposition of its Hamiltonian.
    """
    rho = as_operator(rho0)
    dim = 2 * spec.d_b
    if rho.shape != (dim, dim):
        raise DimensionMismatch(f'Initial state has dimension `{rho.shape[0]}`, expected `{dim}`')
    if not is_density(rho):
        raise NotDensity('Initial state is not a density matrix')
    times = np.asarray(time_grid, dtype=float)
    if times.ndim != 1 or len(times) == 0 or times[0] < 0 or np.any(np.diff(times) < 0):
        raise ValidationError('Time grid must be a non-empty ascending sequence of non-negative times')
    if times[-1] > pulse.duration * (1 + 1e-12):
        raise PulseTooShort(f'Time grid reaches `{times[-1]}` beyond the pulse duration `{pulse.duration}`')

    starts = pulse.segment_starts
    segment_of = np.clip(np.searchsorted(starts, times, side='right') - 1, 0, pulse.n_segments - 1)
    values = np.empty(len(times))
    cache: Dict[Tuple[float, float], Tuple[np.ndarray, np.ndarray]] = {}

    for k in range(int(segment_of[-1]) + 1):
        key = (float(pulse.amplitudes[k]), pulse.second_at(k))
        if key not in cache:
            cache[key] = hermitian_eig(hamiltonian(spec, key[0], key[1], control2))
        energies, vectors = cache[key]

        mask = segment_of == k
        if np.any(mask):
            offsets = times[mask] - starts[k]
            phases = np.exp(-1j * np.outer(offsets, energies))
            u = np.einsum('ij,tj,kj->tik', vectors, phases, vectors.conj())
            states = u @ rho @ u.conj().transpose(0, 2, 1)
            values[mask] = _qubit_purities(states, spec.d_b)

        step = (vectors * np.exp(-1j * energies * pulse.dt)) @ vectors.conj().T
        rho = step @ rho @ step.conj().T

    return PurityCurve(times, values)


def resonant_curve(
    spec: SystemSpec,
    t_max: float,
    n_times: int = 801,
    rho_s: Optional[OperatorMatrix] = None,
) -> PurityCurve:
    """Purity under the constant resonant field from ρ_S⊗ρ_B^th, ρ_S thermal unless given."""
    pulse = PulseSchedule.constant(t_max, 1, resonant_amplitude(spec))
    return simulate_purity(spec, pulse, initial_state(spec, rho_s), np.linspace(0, t_max, n_times))


def peak_time_spread(
    spec: SystemSpec,
    purity: float = 0.6,
    n: int = 50,
    seed: int = 0,
    t_max: Optional[float] = None,
    n_times: int = 801,
    threads: Optional[int] = None,
) -> Tuple[float, float]:
    """Mean and standard deviation of the fitted peak times over random qubit states of fixed purity."""
    if t_max is None:
        t_max = 2 * eta_and_tmin(_case_params_or_raise(spec)).t_min
    states = random_qubit_states(purity, n, np.random.default_rng(seed))
    peaks = parallel_map(
        lambda rho_s: resonant_curve(spec, t_max, n_times, rho_s).fitted_peak_time(),
        states,
        threads=threads,
        desc='Random initial states',
    )
    return float(np.mean(peaks)), float(np.std(peaks))


class CouplingAngles(NamedTuple):
    phi_s: float
    theta_s: float
    phi_b: float
    theta_b: float
    phi_c: float
    theta_c: float

    def selectors(self) -> Tuple[OperatorSelector, OperatorSelector, OperatorSelector]:
        return (
            OperatorSelector.bloch(self.phi_s, self.theta_s),
            OperatorSelector.bloch(self.phi_b, self.theta_b),
            OperatorSelector.bloch(self.phi_c, self.theta_c),
        )


@dataclass(frozen=True)
class GeneralAngleParams:
    a_bar: complex
    a_c: complex
    a_s: complex
    b_c_plus: float
    b_c_minus: float
    b_s_plus: float
    b_s_minus: float
    xi: float
    omega_plus: float
    omega_minus: float
    gamma_plus_plus: float
    gamma_plus_minus: float
    gamma_minus_plus: float
    gamma_minus_minus: float
    h_prime: OperatorMatrix = field(repr=False, compare=False, default=None)

    def to_json(self) -> Dict:
        data = {
            key: getattr(self, key)
            for key in (
                'b_c_plus', 'b_c_minus', 'b_s_plus', 'b_s_minus', 'xi', 'omega_plus', 'omega_minus',
                'gamma_plus_plus', 'gamma_plus_minus', 'gamma_minus_plus', 'gamma_minus_minus',
            )
        }
        data.update({key: complex_to_json(getattr(self, key)) for key in ('a_bar', 'a_c', 'a_s')})
        return data


def abar_general(angles: Sequence[float], spec: SystemSpec, eps: float) -> GeneralAngleParams:
    """
    Dressed-frame constants for operators O = cos φ sin θ σ₁ + sin φ sin θ σ₂ + cos θ σ₃.

    Ā = J[cos α sin θ_S cos Δφ − sin α cos θ_S − i sin θ_S sin Δφ], Δφ = φ_c − φ_S, and
    B_c^± = J cos θ_B (cos θ_S Γ_±⁻ − ξω_±)/Γ_±⁺, B_s^± = J sin θ_B (ξω_± − cos θ_S Γ_±⁻)/Γ_±⁺.
    Where Γ_±⁺ vanishes the B constants take their continuous limits ∓J·n′_z·cos θ_B and ±J·n′_z·sin θ_B.
    The assembled H′ is compared with T†HT, exactly at resonance.
    """
    angles = CouplingAngles(*angles)
    o_s, o_b, o_c = angles.selectors()
    case_spec = spec.with_case(o_s, o_b, o_c)
    omega_s, omega_b, j = spec.omega_s, spec.omega_b, spec.j

    h_z = omega_s / 2 + eps * np.cos(angles.theta_c)
    h_perp = eps * np.sin(angles.theta_c)
    if np.hypot(h_z, h_perp) <= AMPLITUDE_TOL:
        raise SingularAngleConfiguration('The qubit field vanishes, the dressed basis is undefined')

    cos_a, sin_a = (omega_s + 2 * eps * np.cos(angles.theta_c)) / omega_b, 2 * h_perp / omega_b
    s_s, c_s = np.sin(angles.theta_s), np.cos(angles.theta_s)
    s_b, c_b = np.sin(angles.theta_b), np.cos(angles.theta_b)
    delta_phi = angles.phi_c - angles.phi_s

    a_bar = j * complex(cos_a * s_s * np.cos(delta_phi) - sin_a * c_s, -s_s * np.sin(delta_phi))
    xi = 4 * eps * s_s * np.sin(angles.theta_c) * np.cos(delta_phi)
    omega_plus = 2 * eps * np.cos(angles.theta_c) + omega_s + omega_b
    omega_minus = 2 * eps * np.cos(angles.theta_c) + omega_s - omega_b
    gammas = {
        sign: (4 * h_perp**2 + w**2, 4 * h_perp**2 - w**2)
        for sign, w in ((+1, omega_plus), (-1, omega_minus))
    }
    n_z = s_s * np.cos(delta_phi) * sin_a + c_s * cos_a

    def b_pair(sign, w):
        g_plus, g_minus = gammas[sign]
        if abs(g_plus) <= AMPLITUDE_TOL:
            return -sign * j * n_z * c_b, sign * j * n_z * s_b
        bracket = c_s * g_minus - xi * w
        return j * c_b * bracket / g_plus, -j * s_b * bracket / g_plus

    b_c_plus, b_s_plus = b_pair(+1, omega_plus)
    b_c_minus, b_s_minus = b_pair(-1, omega_minus)
    a_c, a_s = a_bar * c_b, a_bar * s_b

    down, up = np.exp(-1j * angles.phi_b), np.exp(1j * angles.phi_b)
    h_prime = np.array(
        [
            [omega_b - b_c_plus, b_s_plus * down, np.conj(a_c), np.conj(a_s) * down],
            [b_s_plus * up, b_c_plus, np.conj(a_s) * up, -np.conj(a_c)],
            [a_c, a_s * down, -b_c_minus, b_s_minus * down],
            [a_s * up, -a_c, b_s_minus * up, -omega_b + b_c_minus],
        ]
    )

    t = tensor(dressed_basis(case_spec, eps), IDENTITY_2)
    exact = t.conj().T @ build_hamiltonian(case_spec, eps) @ t
    deviation = float(np.max(np.abs(h_prime - exact)))
    if abs(2 * np.hypot(h_z, h_perp) - omega_b) <= GENERAL_FORM_TOL * max(1.0, omega_b):
        if deviation > GENERAL_FORM_TOL:
            raise InvariantViolation(f'General dressed form deviates from T†HT by {deviation}')
    else:
        LOGGER.warning(f'Off resonance (eps={eps:.6g}): general dressed form deviates from T†HT by {deviation:.3g}')

    (g_pp, g_pm), (g_mp, g_mm) = gammas[+1], gammas[-1]
    return GeneralAngleParams(
        a_bar=a_bar,
        a_c=a_c,
        a_s=a_s,
        b_c_plus=float(b_c_plus),
        b_c_minus=float(b_c_minus),
        b_s_plus=float(b_s_plus),
        b_s_minus=float(b_s_minus),
        xi=float(xi),
        omega_plus=float(omega_plus),
        omega_minus=float(omega_minus),
        gamma_plus_plus=float(g_pp),
        gamma_plus_minus=float(g_pm),
        gamma_minus_plus=float(g_mp),
        gamma_minus_minus=float(g_mm),
        h_prime=h_prime,
    )


def commutator_measure(o_s: OperatorSelector, o_c: OperatorSelector) -> float:
    """
    C = ‖[O_S, O_c]‖_F / (2√2), between 0 (commuting) and 1.

    >>> round(commutator_measure(OperatorSelector.sigma(1), OperatorSelector.sigma(3)), 12)
    1.0
    """
    return frobenius_norm(commutator(operator_of(o_s), operator_of(o_c))) / (2 * np.sqrt(2))


class HeatExchange(NamedTuple):
    c: float
    q_dot: float
    bound: float


def commutator_measure_and_heat_bound(
    o_s: OperatorSelector, o_c: OperatorSelector, spec: SystemSpec, eps: float, rho: OperatorMatrix
) -> HeatExchange:
    """Instantaneous qubit energy exchange tr{ρ̇_S H_S} and its bound √2·J(|ε|‖[O_S,O_c]‖ + (ω_S/2)‖[σ₃,O_S]‖)."""
    case_spec = spec.with_case(o_s=o_s, o_c=o_c)
    rho = as_operator(rho)
    if not is_density(rho):
        raise NotDensity('Heat exchange needs a joint density matrix')
    h = build_hamiltonian(case_spec, eps)
    rho_dot_s = partial_trace(-1j * commutator(h, rho), (2, 2))
    q_dot = float(np.trace(rho_dot_s @ qubit_hamiltonian(case_spec, eps)).real)

    m_s, m_c = operator_of(o_s), operator_of(o_c)
    control_part = abs(eps) * frobenius_norm(commutator(m_s, m_c))
    drift_part = spec.omega_s / 2 * frobenius_norm(commutator(SIGMA_3, m_s))
    bound = np.sqrt(2) * spec.j * (control_part + drift_part)
    if abs(q_dot) > bound + 1e-9:
        raise InvariantViolation(f'Energy exchange {q_dot} exceeds its bound {bound}')
    return HeatExchange(commutator_measure(o_s, o_c), q_dot, float(bound))


SCAN_AXES = CouplingAngles._fields


def angle_scan(
    scan_axis: str,
    fixed_angles: Sequence[float],
    spec: SystemSpec,
    grid_n: int = 33,
    n_times: int = 801,
    threads: Optional[int] = None,
    use_tqdm: bool = False,
) -> pd.DataFrame:
    """
    |Ā|, the numerical 1/T_min and C along one coupling angle, the others held at `fixed_angles`.

    Polar angles run over [0, π] and azimuths over [0, 2π]; every point is driven by its own
    resonant constant field and T_min is the fitted first purity peak.
    """
    if scan_axis not in SCAN_AXES:
        raise ValidationError(f'Unknown scan axis `{scan_axis}`, use one of {list(SCAN_AXES)}')
    if grid_n < 16:
        raise ValidationError(f'grid_n must be at least 16, got `{grid_n}`')
    base = CouplingAngles(*fixed_angles)
    upper = np.pi if scan_axis.startswith('theta') else 2 * np.pi
    grid = np.linspace(0, upper, grid_n)

    def point(value):
        angles = base._replace(**{scan_axis: float(value)})
        o_s, o_b, o_c = angles.selectors()
        case_spec = spec.with_case(o_s, o_b, o_c)
        eps = resonant_amplitude(case_spec)
        general = abar_general(angles, spec, eps)
        amplitude = abs(general.a_bar) * abs(np.sin(angles.theta_b))
        t_max = 2.5 * np.pi / (2 * max(amplitude, 0.05 * spec.j))
        peak = resonant_curve(case_spec, t_max, n_times).fitted_peak_time()
        return {
            'angle': float(value),
            'abs_abar': abs(general.a_bar) / spec.j if spec.j > 0 else 0.0,
            'inv_tmin': 1 / peak if peak > 0 else 0.0,
            'c': commutator_measure(o_s, o_c),
        }

    rows = parallel_map(point, grid, threads=threads, use_tqdm=use_tqdm, desc=f'Scanning {scan_axis}')
    return pd.DataFrame(rows, columns=['angle', 'abs_abar', 'inv_tmin', 'c'])
