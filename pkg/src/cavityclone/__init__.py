"""Simulator and feasibility toolkit for a four-atom, two-mode cavity-QED
optimal 1->2 qubit copier."""

from .budget import (
    precision_requirement,
    process_fidelity_budget,
    pulse_fidelity_threshold,
    trivial_baseline,
    uqcm_fidelity_bound,
)
from .core import (
    DensityState,
    InvariantViolation,
    LocalOperator,
    PureState,
    RegisterLayout,
    SubsystemSpec,
    apply_local,
    atom,
    basis_state,
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
    PulseSpec,
    classical_pulse,
    jc_pulse,
    mixing_pulse,
    phase_shift,
    qpg,
)
from .noise import NoiseModel, NoisyRunResult, damping_channel, mean_pulse_fidelity, noisy_run
from .protocol import (
    A1Preparation,
    CalibrationError,
    CloneReport,
    Corrections,
    Engine,
    PhaseCorrection,
    ProtocolConfig,
    ProtocolVariant,
    Schedule,
    ScheduleStep,
    ancilla_analysis,
    build_schedule,
    calibrate_phases,
    equatorial_run,
    expected_output,
    prepare_blank,
    prepare_input,
    protocol_register,
    run_protocol,
)
from .timing import TimingModel, TimingReport, default_timing, schedule_timing

__version__ = "0.1.0"
