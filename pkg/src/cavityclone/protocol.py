"""The four-atom, two-mode optimal 1->2 qubit copying program.

The register holds atoms A1..A4 (three levels, order g/e/i) followed by two
field modes.  Qubits ride on the cavity-dark level pair as
|+> = (|i> + |g>)/sqrt(2), |-> = (|i> - |g>)/sqrt(2).  The program:

1. a classical pulse splits A1 between g and e with weights 2/3 : 1/3 and a
   pi Rabi pulse stores that superposition in the first mode;
2. the input atom A2 undergoes a 2*pi pulse (phase gate) in the first mode,
   entangling input and stored weights;
3. a pi/2 pulse shares the stored excitation with A3 and a pi pulse hands
   the remainder to A4, emptying the first mode;
4. classical pulses re-encode A3 and A4 into the dark-level qubit pair and
   lift A2's qubit onto the cavity-coupled g/e pair;
5. A2 imprints its state on the second mode with a pi pulse, and phase
   gates on A3 and A4 against that mode complete the copy map.

After step 5 the clones live on A3 and A4, each with fidelity 5/6 to the
input for every input direction, and the discarded subsystems end in one of
two orthogonal states flagged by the second mode's photon number.

Pulse phases are chosen so the idealized gate convention reproduces the
canonical intermediate states exactly; the preparation pulse carries phase
pi to absorb the transfer sign of that convention (see gates module).  In
the physical convention one deterministic phase correction on A2 before the
mode-b transfer makes the output identical; remarkably, the clone states
are already exact without it because the residual phase error is perfectly
correlated with the ancilla photon number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ATOL_EXACT,
    ATOL_INPUT,
    DensityState,
    StrEnum,
    InvariantViolation,
    LEVEL_E,
    LEVEL_G,
    LEVEL_I,
    PureState,
    RegisterLayout,
    _apply_channel_density,
    _apply_matrix_pure,
    apply_local,
    atom,
    bloch_vector,
    fidelity_pure,
    make_register,
    mode,
    partial_trace,
    product_state,
    qubit_reduce,
    to_density,
)
from .gates import (
    JcConvention,
    KIND_CLASSICAL,
    KIND_JC,
    KIND_PHASE,
    MIXING_PRESET,
    PREP_ANGLE_EQUATORIAL,
    PREP_ANGLE_STANDARD,
    PulseSpec,
    pulse_operator,
)
from .timing import (
    DEFAULT_DAMPING_TIME,
    TimingModel,
    TimingReport,
    default_timing,
    schedule_timing,
)

ATOM_1, ATOM_2, ATOM_3, ATOM_4 = 0, 1, 2, 3
MODE_A, MODE_B = 4, 5
CLONES = (ATOM_3, ATOM_4)
ANCILLA = (ATOM_1, ATOM_2, MODE_A, MODE_B)

KET_G = np.array([1.0, 0.0, 0.0], dtype=complex)
KET_E = np.array([0.0, 1.0, 0.0], dtype=complex)
KET_I = np.array([0.0, 0.0, 1.0], dtype=complex)
KET_PLUS = (KET_I + KET_G) / math.sqrt(2.0)
KET_MINUS = (KET_I - KET_G) / math.sqrt(2.0)

# Clone qubits are read in the i/g span (|0> = |i>, |1> = |g>); the
# equatorial variant embeds |0> as the |-> image and |1> as the |+> image.
EMBEDDING_NOTE = (
    "clone qubits read in span{i,g}; equatorial embedding |0>=|-> image, "
    "|1>=|+> image"
)


class ProtocolVariant(StrEnum):
    TWO_CAVITY = "two_cavity"
    SINGLE_CAVITY = "single_cavity_two_modes"


class Engine(StrEnum):
    PURE = "pure"
    DENSITY = "density"


class Corrections(StrEnum):
    OFF = "off"
    CALIBRATED = "calibrated"


class A1Preparation(StrEnum):
    STANDARD = "standard"
    EQUATORIAL = "equatorial"


STAGE_ENTANGLED = "entangled"
STAGE_SPLIT = "split"
STAGE_RECOVERED = "recovered"
STAGE_IMPRINTED = "imprinted"
STAGES = (STAGE_ENTANGLED, STAGE_SPLIT, STAGE_RECOVERED, STAGE_IMPRINTED)


class CalibrationError(InvariantViolation):
    """Phase calibration could not reach the target overlap."""


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything needed to run one protocol instance."""

    alpha: complex = 1.0 + 0.0j
    beta: complex = 0.0 + 0.0j
    variant: ProtocolVariant = ProtocolVariant.TWO_CAVITY
    convention: JcConvention = JcConvention.IDEALIZED
    phase_corrections: Corrections = Corrections.OFF
    engine: Engine = Engine.PURE
    noise: object | None = None  # NoiseModel; duck-typed to avoid a cycle
    a1_preparation: A1Preparation = A1Preparation.STANDARD
    n_max: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        object.__setattr__(self, "variant", ProtocolVariant(self.variant))
        object.__setattr__(self, "convention", JcConvention(self.convention))
        object.__setattr__(self, "phase_corrections", Corrections(self.phase_corrections))
        object.__setattr__(self, "engine", Engine(self.engine))
        object.__setattr__(self, "a1_preparation", A1Preparation(self.a1_preparation))
        nrm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(nrm - 1.0) > ATOL_INPUT:
            raise ValueError("input amplitudes must satisfy |alpha|^2+|beta|^2 = 1")
        if self.noise is not None and self.engine is not Engine.DENSITY:
            raise ValueError("noisy runs need the density engine")
        if self.n_max < 1:
            raise ValueError("modes need n_max >= 1")

    @property
    def prep_angle(self) -> float:
        if self.a1_preparation is A1Preparation.EQUATORIAL:
            return PREP_ANGLE_EQUATORIAL
        return PREP_ANGLE_STANDARD


@dataclass(frozen=True)
class ScheduleStep:
    spec: PulseSpec
    annotation: str
    stage: str | None = None


@dataclass(frozen=True)
class Schedule:
    """Ordered pulse program plus the structural facts consumers need."""

    variant: ProtocolVariant
    steps: tuple[ScheduleStep, ...]
    mode_a: int = MODE_A
    mode_b: int = MODE_B
    # Step index whose pulse returns a mode to vacuum; None if the mode
    # keeps its excitation until readout.
    mode_unload: dict[int, int | None] = field(default_factory=dict)

    def mode_label(self, m: int) -> str:
        if self.variant is ProtocolVariant.TWO_CAVITY:
            return "cavity_a" if m == self.mode_a else "cavity_b"
        return "mode_a" if m == self.mode_a else "mode_b"

    def target_label(self, spec: PulseSpec) -> str:
        label = f"A{spec.atom + 1}"
        if spec.mode is not None:
            short = ("Ca", "Cb") if self.variant is ProtocolVariant.TWO_CAVITY else ("Ma", "Mb")
            label += ":" + (short[0] if spec.mode == self.mode_a else short[1])
        return label

    def stage_indices(self) -> dict[str, int]:
        return {s.stage: i for i, s in enumerate(self.steps) if s.stage}

    def to_text(self) -> str:
        """Line-oriented dump: index, kind, targets, angle/pi, phase,
        duration, annotation.  Stable format for golden-file tests."""
        lines = []
        for i, step in enumerate(self.steps):
            spec = step.spec
            extra = f" preset={spec.preset}" if spec.preset else ""
            if spec.level_phases is not None:
                phases = ",".join(f"{p / math.pi:.10g}" for p in spec.level_phases)
                extra += f" level_phases/pi=({phases})"
            lines.append(
                f"{i:02d} {spec.kind:<11s} {self.target_label(spec):<6s} "
                f"theta/pi={spec.theta / math.pi:.10g} "
                f"phase/pi={spec.phase / math.pi:.10g} "
                f"dur={spec.duration:.6e}{extra} {step.annotation}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PhaseCorrection:
    """A deterministic phase_shift insertion, anchored before a stage step."""

    before_stage: str
    atom: int
    level_phases: tuple[float, float, float]
    note: str

    def as_step(self) -> ScheduleStep:
        return ScheduleStep(
            PulseSpec(kind=KIND_PHASE, atom=self.atom, level_phases=self.level_phases),
            annotation=f"calibration-phase-A{self.atom + 1}",
        )


def protocol_register(variant: ProtocolVariant | str = ProtocolVariant.TWO_CAVITY,
                      n_max: int = 2) -> RegisterLayout:
    """Atoms A1..A4 followed by the two field modes."""
    variant = ProtocolVariant(variant)
    if variant is ProtocolVariant.TWO_CAVITY:
        mode_labels = ("Ca", "Cb")
    else:
        mode_labels = ("Ma", "Mb")
    return make_register(
        [atom(f"A{k}") for k in (1, 2, 3, 4)]
        + [mode(n_max, mode_labels[0]), mode(n_max, mode_labels[1])]
    )


def prepare_input(alpha: complex, beta: complex) -> np.ndarray:
    """Local A2 state alpha|+> + beta|->, as a (g, e, i) amplitude vector."""
    alpha, beta = complex(alpha), complex(beta)
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > ATOL_INPUT:
        raise ValueError("input amplitudes must satisfy |alpha|^2+|beta|^2 = 1")
    return alpha * KET_PLUS + beta * KET_MINUS


def prepare_blank(layout: RegisterLayout) -> PureState:
    """Canonical initial state of the fixed subsystems.

    A1 carries the 1/3 : 2/3 weight superposition, A3, A4 and both modes
    start in their ground states, and A2 sits in |g> as a placeholder before
    the input is loaded.  In executed schedules the A1 superposition is
    produced by the preparation pulse, whose phase-pi convention flips the
    sign of the e component relative to this canonical form.
    """
    _check_protocol_layout(layout)
    a1 = math.sqrt(2.0 / 3.0) * KET_G + math.sqrt(1.0 / 3.0) * KET_E
    vac_a = _vacuum(layout.dims[MODE_A])
    vac_b = _vacuum(layout.dims[MODE_B])
    return product_state(layout, [a1, KET_G, KET_G, KET_G, vac_a, vac_b])


def _vacuum(dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[0] = 1.0
    return v


def _fock(dim: int, n: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def _check_protocol_layout(layout: RegisterLayout) -> None:
    kinds = [s.kind for s in layout.subsystems]
    if kinds != ["atom3"] * 4 + ["mode"] * 2:
        raise ValueError("protocol register must be four atoms followed by two modes")


def _kron_all(vecs) -> np.ndarray:
    out = np.asarray(vecs[0], dtype=complex)
    for v in vecs[1:]:
        out = np.kron(out, np.asarray(v, dtype=complex))
    return out


def expected_output(alpha: complex, beta: complex,
                    layout: RegisterLayout | None = None,
                    a1_preparation: A1Preparation | str = A1Preparation.STANDARD,
                    ) -> PureState:
    """Analytic target state of the ideal run.

    With storage weights mu = sqrt(2/3), nu = sqrt(1/3) (standard
    preparation; the equatorial variant has mu = nu = sqrt(1/2)):

        alpha [ mu |+>|+> (x) |Anc1> + nu |Phi> (x) |Anc0> ]
      + beta  [ mu |->|-> (x) |Anc0> + nu |Phi> (x) |Anc1> ]

    where |Phi> = (|+>|-> + |->|+>)/sqrt(2) and the orthogonal ancilla
    states |Anc1>, |Anc0> are |g>_1 |g>_2 |0>_a with one and zero photons in
    mode b.  Which ancilla flag pairs with which branch is fixed by direct
    propagation of the pulse program: the symmetric |+>|+> clone term of the
    alpha branch carries the mode-b photon.
    """
    alpha, beta = complex(alpha), complex(beta)
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > ATOL_INPUT:
        raise ValueError("input amplitudes must satisfy |alpha|^2+|beta|^2 = 1")
    if layout is None:
        layout = protocol_register()
    _check_protocol_layout(layout)
    prep = A1Preparation(a1_preparation)
    angle = PREP_ANGLE_EQUATORIAL if prep is A1Preparation.EQUATORIAL else PREP_ANGLE_STANDARD
    mu = math.cos(angle / 2.0)
    nu = math.sin(angle / 2.0)

    dim_a, dim_b = layout.dims[MODE_A], layout.dims[MODE_B]
    vac_a = _vacuum(dim_a)
    f0, f1 = _fock(dim_b, 0), _fock(dim_b, 1)
    s2 = 1.0 / math.sqrt(2.0)

    terms = [
        (alpha * mu, KET_PLUS, KET_PLUS, f1),
        (alpha * nu * s2, KET_PLUS, KET_MINUS, f0),
        (alpha * nu * s2, KET_MINUS, KET_PLUS, f0),
        (beta * mu, KET_MINUS, KET_MINUS, f0),
        (beta * nu * s2, KET_PLUS, KET_MINUS, f1),
        (beta * nu * s2, KET_MINUS, KET_PLUS, f1),
    ]
    amps = np.zeros(layout.total_dimension, dtype=complex)
    for coeff, a3, a4, fb in terms:
        amps += coeff * _kron_all([KET_G, KET_G, a3, a4, vac_a, fb])
    return PureState(layout, amps)


def calibration_table(variant: ProtocolVariant | str,
                      convention: JcConvention | str) -> tuple[PhaseCorrection, ...]:
    """Deterministic, input-independent phase corrections per convention.

    The idealized convention needs none.  In the physical convention every
    sideband phase picked up in the first mode cancels against a later
    withdrawal (deposit and recovery each contribute -i), leaving a single
    uncompensated -i on the mode-b transfer; a -pi/2 phase on A2's e level
    just before that transfer removes it.
    """
    convention = JcConvention(convention)
    ProtocolVariant(variant)
    if convention is JcConvention.IDEALIZED:
        return ()
    return (
        PhaseCorrection(
            before_stage=STAGE_IMPRINTED,
            atom=ATOM_2,
            level_phases=(0.0, -math.pi / 2.0, 0.0),
            note="counter the -i sideband phase of the mode-b transfer",
        ),
    )


def build_schedule(config: ProtocolConfig, timing: TimingModel | None = None) -> Schedule:
    """The ordered pulse program for a config.

    Both variants issue the same logical pulses; the single-cavity order
    interleaves each atom's classical pulses and second-mode pulse into its
    one transit.  The orders differ only by swaps of commuting steps, so the
    final states agree exactly.
    """
    tm = timing or default_timing(str(ProtocolVariant(config.variant)))

    def jc(atom_idx: int, mode_idx: int, theta: float, annotation: str,
           stage: str | None = None) -> ScheduleStep:
        return ScheduleStep(
            PulseSpec(kind=KIND_JC, atom=atom_idx, mode=mode_idx, theta=theta,
                      duration=tm.pulse_duration(theta)),
            annotation, stage,
        )

    def classical(atom_idx: int, transition: str, theta: float, phase: float,
                  annotation: str, preset: str | None = None) -> ScheduleStep:
        return ScheduleStep(
            PulseSpec(kind=KIND_CLASSICAL, atom=atom_idx, transition=transition,
                      theta=theta, phase=phase, preset=preset),
            annotation,
        )

    prep = classical(ATOM_1, "ge", config.prep_angle, math.pi, "set-clone-weights")
    load = jc(ATOM_1, MODE_A, math.pi, "store-clone-weights-in-first-mode")
    entangle = jc(ATOM_2, MODE_A, 2.0 * math.pi,
                  "phase-gate-input-against-first-mode", STAGE_ENTANGLED)
    split = jc(ATOM_3, MODE_A, math.pi / 2.0,
               "split-stored-excitation-with-A3", STAGE_SPLIT)
    recover = jc(ATOM_4, MODE_A, math.pi,
                 "recover-remaining-excitation-to-A4", STAGE_RECOVERED)

    def reencode_clone(atom_idx: int) -> list[ScheduleStep]:
        return [
            classical(atom_idx, "ei", math.pi, 0.0,
                      f"shelve-A{atom_idx + 1}-excitation-on-dark-level"),
            classical(atom_idx, "gi", math.pi / 2.0, 0.0,
                      f"mix-A{atom_idx + 1}-dark-levels", preset=MIXING_PRESET),
        ]

    reencode_input = [
        classical(ATOM_2, "gi", math.pi / 2.0, 0.0,
                  "mix-input-dark-levels", preset=MIXING_PRESET),
        classical(ATOM_2, "ei", math.pi, 0.0, "lift-input-to-coupled-level"),
    ]
    imprint = jc(ATOM_2, MODE_B, math.pi,
                 "imprint-input-on-second-mode", STAGE_IMPRINTED)
    clone_gate_3 = jc(ATOM_3, MODE_B, 2.0 * math.pi, "clone-phase-gate-A3")
    clone_gate_4 = jc(ATOM_4, MODE_B, 2.0 * math.pi, "clone-phase-gate-A4")

    if config.variant is ProtocolVariant.TWO_CAVITY:
        steps = [prep, load, entangle, split, recover,
                 *reencode_clone(ATOM_3), *reencode_clone(ATOM_4),
                 *reencode_input, imprint, clone_gate_3, clone_gate_4]
    else:
        steps = [prep, load, entangle, *reencode_input, imprint,
                 split, *reencode_clone(ATOM_3), clone_gate_3,
                 recover, *reencode_clone(ATOM_4), clone_gate_4]

    if config.phase_corrections is Corrections.CALIBRATED:
        for corr in calibration_table(config.variant, config.convention):
            anchor = next(i for i, s in enumerate(steps) if s.stage == corr.before_stage)
            steps.insert(anchor, corr.as_step())

    unload_idx = next(i for i, s in enumerate(steps) if s.stage == STAGE_RECOVERED)
    return Schedule(
        variant=config.variant,
        steps=tuple(steps),
        mode_unload={MODE_A: unload_idx, MODE_B: None},
    )


@dataclass(frozen=True)
class CloneReport:
    """Summary of one protocol run."""

    f3: float
    f4: float
    bloch_in: tuple[float, float, float]
    bloch3: tuple[float, float, float]
    bloch4: tuple[float, float, float]
    ancilla_overlap: float
    leakage: float
    oracle_overlap: float
    a1_ground_fidelity: float
    a2_ground_fidelity: float
    mode_a_vacuum_fidelity: float
    timing: TimingReport
    embedding: str = EMBEDDING_NOTE
    snapshots: dict[str, PureState] | None = None

    def to_dict(self) -> dict:
        return {
            "f3": self.f3,
            "f4": self.f4,
            "bloch_in": list(self.bloch_in),
            "bloch3": list(self.bloch3),
            "bloch4": list(self.bloch4),
            "ancilla_overlap": self.ancilla_overlap,
            "leakage": self.leakage,
            "oracle_overlap": self.oracle_overlap,
            "a1_ground_fidelity": self.a1_ground_fidelity,
            "a2_ground_fidelity": self.a2_ground_fidelity,
            "mode_a_vacuum_fidelity": self.mode_a_vacuum_fidelity,
            "storage_times_s": dict(self.timing.storage_times),
            "total_duration_s": self.timing.total_duration,
            "feasible": self.timing.feasible,
            "embedding": self.embedding,
        }


def _clone_vector(local3: np.ndarray, local4: np.ndarray) -> np.ndarray:
    return np.kron(local3, local4)


_C_PLUSPLUS = _clone_vector(KET_PLUS, KET_PLUS)
_C_MINUSMINUS = _clone_vector(KET_MINUS, KET_MINUS)
_C_PHI = (_clone_vector(KET_PLUS, KET_MINUS)
          + _clone_vector(KET_MINUS, KET_PLUS)) / math.sqrt(2.0)


def _conditional_inner(state: PureState | DensityState, c_row: np.ndarray,
                       c_col: np.ndarray) -> complex:
    """<u_row | u_col> of the ancilla vectors conditioned on two clone
    configurations (Tr of the cross block for density input)."""
    dims = state.layout.dims
    n = len(dims)
    if isinstance(state, PureState):
        tensor = state.as_tensor()
        moved = np.moveaxis(tensor, CLONES, (0, 1)).reshape(9, -1)
        u_row = c_row.conj() @ moved
        u_col = c_col.conj() @ moved
        return complex(np.vdot(u_row, u_col))
    tensor = state.matrix.reshape(dims + dims)
    moved = np.moveaxis(
        tensor, CLONES + tuple(c + n for c in CLONES), (0, 1, 2, 3)
    ).reshape(9, 9, -1)
    rest = moved.shape[2]
    side = int(round(math.sqrt(rest)))
    block = np.einsum("c,cdx->dx", c_row.conj(), moved)
    block = np.einsum("d,dx->x", c_col, block).reshape(side, side)
    return complex(np.trace(block))


def ancilla_analysis(state: PureState | DensityState) -> tuple[float, DensityState]:
    """Overlap of the two conditional ancilla states, and the reduced
    ancilla density matrix.

    The two conditional states are obtained by projecting the clone pair
    onto |+>|+> and |->|-> (falling back to the symmetric mixed
    configuration when an input pole empties one of them).  Ideal runs give
    overlap zero: the second mode's photon number keeps them orthogonal.
    """
    p_plus = _conditional_inner(state, _C_PLUSPLUS, _C_PLUSPLUS).real
    p_minus = _conditional_inner(state, _C_MINUSMINUS, _C_MINUSMINUS).real
    c_row = _C_PLUSPLUS if p_plus > ATOL_EXACT else _C_PHI
    c_col = _C_MINUSMINUS if p_minus > ATOL_EXACT else _C_PHI
    w_row = _conditional_inner(state, c_row, c_row).real
    w_col = _conditional_inner(state, c_col, c_col).real
    if min(w_row, w_col) <= ATOL_EXACT:
        overlap = 0.0
    else:
        overlap = abs(_conditional_inner(state, c_row, c_col)) / math.sqrt(w_row * w_col)
    return overlap, partial_trace(state, ANCILLA)


def _populations(state: PureState | DensityState) -> np.ndarray:
    if isinstance(state, PureState):
        p = np.abs(state.amplitudes) ** 2
    else:
        p = np.diag(state.matrix).real
    return p.reshape(state.layout.dims)


def _leakage(state: PureState | DensityState) -> float:
    """Population with any mode above one photon or a clone atom in e."""
    pops = _populations(state)
    mask = np.zeros(pops.shape, dtype=bool)
    for m in (MODE_A, MODE_B):
        if pops.shape[m] > 2:
            idx = [slice(None)] * pops.ndim
            idx[m] = slice(2, None)
            mask[tuple(idx)] = True
    for a in CLONES:
        idx = [slice(None)] * pops.ndim
        idx[a] = LEVEL_E
        mask[tuple(idx)] = True
    return float(pops[mask].sum())


_ATOM_REGISTER = make_register([atom()])


def _single_atom_pure(vec: np.ndarray) -> PureState:
    return PureState(_ATOM_REGISTER, vec)


def _oracle_overlap(state: PureState | DensityState, target: PureState) -> float:
    if isinstance(state, PureState):
        return abs(state.overlap(target))
    return math.sqrt(max(fidelity_pure(DensityState(target.layout, state.matrix), target), 0.0))


def _mode_vacuum_fidelity(state, mode_index: int) -> float:
    rho = partial_trace(state, [mode_index])
    return float(rho.matrix[0, 0].real)


def _build_report(config: ProtocolConfig, state: PureState | DensityState,
                  timing_report: TimingReport,
                  snapshots: dict[str, PureState] | None) -> CloneReport:
    input_vec = prepare_input(config.alpha, config.beta)
    psi_in = _single_atom_pure(input_vec)

    rho3 = partial_trace(state, [ATOM_3])
    rho4 = partial_trace(state, [ATOM_4])
    f3 = fidelity_pure(rho3, psi_in)
    f4 = fidelity_pure(rho4, psi_in)

    q_in, _ = qubit_reduce(np.outer(input_vec, input_vec.conj()), "ig", leak_tol=None)
    q3, _ = qubit_reduce(rho3, "ig", leak_tol=None)
    q4, _ = qubit_reduce(rho4, "ig", leak_tol=None)

    overlap, _ = ancilla_analysis(state)
    target = expected_output(config.alpha, config.beta, state.layout,
                             config.a1_preparation)

    rho_a1 = partial_trace(state, [ATOM_1])
    rho_a2 = partial_trace(state, [ATOM_2])
    ground = _single_atom_pure(KET_G)

    return CloneReport(
        f3=f3,
        f4=f4,
        bloch_in=bloch_vector(q_in),
        bloch3=bloch_vector(q3),
        bloch4=bloch_vector(q4),
        ancilla_overlap=overlap,
        leakage=_leakage(state),
        oracle_overlap=_oracle_overlap(state, target),
        a1_ground_fidelity=fidelity_pure(rho_a1, ground),
        a2_ground_fidelity=fidelity_pure(rho_a2, ground),
        mode_a_vacuum_fidelity=_mode_vacuum_fidelity(state, MODE_A),
        timing=timing_report,
        snapshots=snapshots,
    )


def _damping_gamma(dt: float, t1: float) -> float:
    if dt <= 0.0:
        return 0.0
    return 1.0 - math.exp(-dt / t1)


# Kraus branches below this squared norm are dropped during noisy pure-state
# unraveling; the cumulative trace loss stays orders of magnitude under the
# 1e-10 reporting tolerances.
BRANCH_FLOOR = 1e-16


def run_protocol(config: ProtocolConfig, *, timing: TimingModel | None = None,
                 rng: np.random.Generator | None = None,
                 capture_stages: bool = False,
                 ) -> tuple[PureState | DensityState, CloneReport]:
    """Execute the full program and report on the clones.

    Noise (only with the density engine) applies an independent fractional
    over-rotation per pulse and amplitude damping on each mode, weighted by
    the schedule time the mode spends loaded.  Noisy evolution propagates
    the exact Kraus-branch unraveling of the channel sequence (a list of
    unnormalized pure vectors whose outer products sum to the density
    matrix); the result is identical to dense channel propagation and far
    cheaper at this register size.  With ``capture_stages`` the report
    carries pure-state snapshots keyed by stage name.
    """
    schedule = build_schedule(config)
    layout = protocol_register(config.variant, config.n_max)
    dims = layout.dims
    mode_dims = {MODE_A: dims[MODE_A], MODE_B: dims[MODE_B]}
    noise = config.noise

    tm = timing or default_timing(str(config.variant))
    damping_time = DEFAULT_DAMPING_TIME if noise is None else _mean_t1(noise)
    timing_report = schedule_timing(tm, str(config.variant), schedule,
                                    damping_time=damping_time)

    vac_a = _vacuum(dims[MODE_A])
    vac_b = _vacuum(dims[MODE_B])
    psi0 = product_state(
        layout,
        [KET_G, prepare_input(config.alpha, config.beta), KET_G, KET_G, vac_a, vac_b],
    )

    damping = noise is not None and config.engine is Engine.DENSITY
    if noise is not None and rng is None:
        rng = np.random.default_rng(noise.seed)

    # branches: unnormalized pure vectors with sum of |v|^2 = 1.  A noise-free
    # run keeps a single branch; the plain density engine tracks the matrix.
    branches: list[np.ndarray] = [np.array(psi0.amplitudes)]
    dense_rho: np.ndarray | None = None
    if config.engine is Engine.DENSITY and noise is None:
        dense_rho = np.outer(branches[0], branches[0].conj())

    if damping:
        from .noise import damping_channel  # local import to avoid a cycle

        t1_a, t1_b = noise.t1_pair
        t1_by_mode = {MODE_A: t1_a, MODE_B: t1_b}
        if getattr(noise, "damp_throughout", False):
            windows = {m: (0.0, timing_report.total_duration) for m in (MODE_A, MODE_B)}
        else:
            windows = dict(timing_report.mode_windows)
        cursor = {m: windows[m][0] for m in windows}

        def damp_to(m: int, anchor: float) -> None:
            nonlocal branches
            w0, w1 = windows[m]
            seg = min(anchor, w1) - max(cursor[m], w0)
            cursor[m] = max(cursor[m], min(anchor, w1))
            if seg <= 0.0:
                return
            gamma = _damping_gamma(seg, t1_by_mode[m])
            if gamma == 0.0:
                return
            kraus = damping_channel(mode_dims[m], gamma).matrices
            new_branches = []
            for v in branches:
                for k_mat in kraus:
                    w = _apply_matrix_pure(v, dims, k_mat, (m,))
                    if float(np.vdot(w, w).real) > BRANCH_FLOOR:
                        new_branches.append(w)
            branches = new_branches

    snapshots: dict[str, PureState] = {}
    sigma = getattr(noise, "pulse_sigma", 0.0) if noise is not None else 0.0

    for idx, step in enumerate(schedule.steps):
        spec = step.spec
        if damping and spec.kind == KIND_JC:
            win = timing_report.step_windows[idx]
            is_unloader = schedule.mode_unload.get(spec.mode) == idx
            damp_to(spec.mode, win[1] if is_unloader else win[0])

        theta_override = None
        if sigma > 0.0 and spec.kind in (KIND_JC, KIND_CLASSICAL):
            eps = sigma * float(np.clip(rng.standard_normal(), -5.0, 5.0))
            theta_override = spec.theta * (1.0 + eps)
        op = pulse_operator(spec, mode_dims, config.convention, theta_override)
        targets = op.targets
        matrix = op.matrices[0]

        if dense_rho is not None:
            dense_rho = _apply_channel_density(dense_rho, dims, op.matrices, targets)
            total = float(np.einsum("ii->", dense_rho).real)
        else:
            branches = [_apply_matrix_pure(v, dims, matrix, targets) for v in branches]
            total = math.fsum(float(np.vdot(v, v).real) for v in branches)
        if abs(total - 1.0) > ATOL_INPUT:
            raise InvariantViolation("non-normalized intermediate state")

        if capture_stages and step.stage and config.engine is Engine.PURE:
            snapshots[step.stage] = PureState(layout, branches[0])

    if damping:
        for m in windows:
            damp_to(m, windows[m][1])

    state: PureState | DensityState
    if config.engine is Engine.PURE:
        state = PureState(layout, branches[0])
    elif dense_rho is not None:
        state = DensityState(layout, dense_rho)
    else:
        stack = np.stack(branches, axis=1)
        state = DensityState(layout, stack @ stack.conj().T)

    report = _build_report(config, state, timing_report,
                           snapshots if capture_stages else None)
    if noise is None and report.leakage > ATOL_INPUT:
        raise InvariantViolation(
            f"ideal run leaked {report.leakage} outside the computational subspace"
        )
    return state, report


def _mean_t1(noise) -> float:
    t1a, t1b = noise.t1_pair
    return 0.5 * (t1a + t1b)


def equatorial_run(phi_input: float, *,
                   variant: ProtocolVariant | str = ProtocolVariant.TWO_CAVITY,
                   convention: JcConvention | str = JcConvention.IDEALIZED,
                   phase_corrections: Corrections | str = Corrections.OFF,
                   ) -> CloneReport:
    """Clone an equatorial qubit (|0> + e^{i phi}|1>)/sqrt(2).

    Uses the equal-weight A1 preparation; under the documented embedding the
    input atom state is (|-> + e^{i phi}|+>)/sqrt(2).  Reported fidelities
    are against that input.
    """
    s2 = 1.0 / math.sqrt(2.0)
    config = ProtocolConfig(
        alpha=np.exp(1j * phi_input) * s2,
        beta=s2,
        variant=variant,
        convention=convention,
        phase_corrections=phase_corrections,
        a1_preparation=A1Preparation.EQUATORIAL,
    )
    _, report = run_protocol(config)
    return report


def fibonacci_bloch(n: int) -> list[tuple[complex, complex]]:
    """Deterministic (alpha, beta) grid: the |+> pole, then a Fibonacci
    spiral covering the sphere."""
    if n < 1:
        raise ValueError("grid size must be at least 1")
    points: list[tuple[complex, complex]] = [(1.0 + 0.0j, 0.0 + 0.0j)]
    golden = math.pi * (3.0 - math.sqrt(5.0))
    for k in range(1, n):
        z = 1.0 - 2.0 * k / max(n - 1, 1)
        z = min(1.0, max(-1.0, z))
        theta = math.acos(z)
        phi = (k * golden) % (2.0 * math.pi)
        points.append((complex(math.cos(theta / 2.0)),
                       complex(math.sin(theta / 2.0) * np.exp(1j * phi))))
    return points


def random_bloch(n: int, seed: int = 0) -> list[tuple[complex, complex]]:
    """Haar-style random (alpha, beta) directions, deterministic per seed."""
    rng = np.random.default_rng(seed)
    points = []
    for _ in range(n):
        z = rng.uniform(-1.0, 1.0)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        theta = math.acos(z)
        points.append((complex(math.cos(theta / 2.0)),
                       complex(math.sin(theta / 2.0) * np.exp(1j * phi))))
    return points


def calibrate_phases(variant: ProtocolVariant | str = ProtocolVariant.TWO_CAVITY,
                     convention: JcConvention | str = JcConvention.PHYSICAL,
                     grid_size: int = 64, tol: float = 1e-9,
                     ) -> tuple[PhaseCorrection, ...]:
    """Input-independent phase corrections, verified over a Bloch grid.

    The corrections come from tracking the sideband phases analytically
    (see :func:`calibration_table`); this routine then checks that, with
    them inserted, the run output overlaps the analytic target to at least
    1 - tol in absolute value for every grid input.  Failure raises
    :class:`CalibrationError` with the worst offender, rather than
    returning a best-effort answer.
    """
    corrections = calibration_table(variant, convention)
    worst = 1.0
    worst_input = None
    for alpha, beta in fibonacci_bloch(grid_size):
        config = ProtocolConfig(alpha=alpha, beta=beta, variant=variant,
                                convention=convention,
                                phase_corrections=Corrections.CALIBRATED)
        _, report = run_protocol(config)
        if report.oracle_overlap < worst:
            worst = report.oracle_overlap
            worst_input = (alpha, beta)
    if worst < 1.0 - tol:
        raise CalibrationError(
            f"phase calibration reached overlap {worst:.12f} < {1 - tol:.12f} "
            f"at input alpha={worst_input[0]:.6f}, beta={worst_input[1]:.6f}"
        )
    return corrections
