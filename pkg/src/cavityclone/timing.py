"""Transit timing, storage accounting and feasibility verdicts.

The timing model is calibrated to the reference setup: single-photon Rabi
frequency 50 kHz and atoms at 500 m/s, where one full transit through a
cavity lasts 5e-5 s and the resonant part of the transit accommodates one
2*pi Rabi pulse (2e-5 s).  Those two windows scale inversely with velocity
through two fixed effective lengths.

Storage bookkeeping follows the convention that a mode is at risk from the
moment the loading atom enters the cavity until the recovering atom has
fully left it, so the first mode of the two-cavity program is stored for
four full transits (2e-4 s at the defaults).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .gates import KIND_JC

REF_VELOCITY = 500.0            # m/s
TRANSIT_LENGTH = 0.025          # m; 5e-5 s full transit at 500 m/s
INTERACTION_LENGTH = 0.010      # m; 2e-5 s resonant window = one 2*pi pulse
MODE_SPLITTING_HZ = 130e3       # two-mode frequency splitting, single cavity
SPLITTING_MIN_RATIO = 2.0       # "splitting >> coupling" acceptance ratio
STORAGE_BUDGET_FRACTION = 0.5   # stored time must stay below this x damping
DEFAULT_DAMPING_TIME = 1e-3     # s

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TimingModel:
    """Hardware timing knobs.

    ``transit_time`` overrides the velocity-derived full transit when set.
    ``gap`` is the idle time between consecutive atoms; the default assumes
    each atom enters as soon as the previous one has left.
    """

    rabi_freq: float = 5e4          # Hz, single-photon Rabi frequency
    velocity: float = REF_VELOCITY  # m/s
    transit_time: float | None = None
    gap: float = 0.0

    def __post_init__(self) -> None:
        if self.rabi_freq <= 0 or self.velocity <= 0:
            raise ValueError("rabi_freq and velocity must be positive")
        if self.transit_time is not None and self.transit_time <= 0:
            raise ValueError("transit_time must be positive")
        if self.gap < 0:
            raise ValueError("gap must be non-negative")

    @property
    def transit(self) -> float:
        if self.transit_time is not None:
            return self.transit_time
        return TRANSIT_LENGTH / self.velocity

    @property
    def interaction_window(self) -> float:
        return INTERACTION_LENGTH / self.velocity

    def pulse_duration(self, theta: float) -> float:
        """Duration of a vacuum-Rabi-angle theta pulse: theta / Omega.

        Pulses are scheduled by vacuum angle; higher photon manifolds rotate
        faster by sqrt(n+1) within the same duration.
        """
        return theta / (TWO_PI * self.rabi_freq)


def default_timing(variant: str) -> TimingModel:
    """Variant defaults: 500 m/s for two cavities, 330 m/s for one."""
    if str(variant).startswith("single"):
        return TimingModel(velocity=330.0)
    return TimingModel()


@dataclass(frozen=True)
class TimingReport:
    variant: str
    rabi_freq: float
    velocity: float
    transit_time: float
    interaction_window: float
    step_windows: tuple[tuple[float, float], ...]
    step_durations: tuple[float, ...]
    storage_times: dict[str, float]
    mode_windows: dict[int, tuple[float, float]]
    total_duration: float
    required_angle: float
    angle_bound: float
    achievable_angle: float
    splitting_ratio: float | None
    verdicts: tuple[tuple[str, bool, str], ...]
    feasible: bool
    limiting_constraint: str | None

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "rabi_freq_hz": self.rabi_freq,
            "velocity_m_per_s": self.velocity,
            "transit_time_s": self.transit_time,
            "interaction_window_s": self.interaction_window,
            "storage_times_s": dict(self.storage_times),
            "total_duration_s": self.total_duration,
            "required_angle_over_pi": self.required_angle / math.pi,
            "angle_bound_over_pi": self.angle_bound / math.pi,
            "achievable_angle_over_pi": self.achievable_angle / math.pi,
            "splitting_ratio": self.splitting_ratio,
            "verdicts": [
                {"constraint": name, "passed": ok, "detail": detail}
                for name, ok, detail in self.verdicts
            ],
            "feasible": self.feasible,
            "limiting_constraint": self.limiting_constraint,
        }


def _transit_windows(schedule, timing: TimingModel) -> dict[tuple[int, int], tuple[float, float]]:
    """Window (start, end) of each atom's visit to each mode it pulses."""
    pitch = timing.transit + timing.gap
    windows: dict[tuple[int, int], tuple[float, float]] = {}
    if schedule.variant == "two_cavity":
        # Atoms 0..3 cross the first cavity in order, then atoms 1..3 cross
        # the second; inter-cavity travel does not count (information is
        # atom-borne there).
        for atom in range(4):
            start = atom * pitch
            windows[(atom, schedule.mode_a)] = (start, start + timing.transit)
        for j, atom in enumerate((1, 2, 3)):
            start = (4 + j) * pitch
            windows[(atom, schedule.mode_b)] = (start, start + timing.transit)
    else:
        # One cavity: each atom handles both modes during its single transit.
        for atom in range(4):
            start = atom * pitch
            win = (start, start + timing.transit)
            windows[(atom, schedule.mode_a)] = win
            windows[(atom, schedule.mode_b)] = win
    return windows


def schedule_timing(timing: TimingModel, variant: str, schedule=None,
                    damping_time: float = DEFAULT_DAMPING_TIME) -> TimingReport:
    """Per-step durations, mode storage times and feasibility verdicts.

    An infeasible velocity/angle combination yields an explicit verdict in
    the report, never an exception.
    """
    if schedule is None:
        from .protocol import ProtocolConfig, build_schedule  # lazy: avoids cycle

        schedule = build_schedule(ProtocolConfig(variant=variant))
    if str(schedule.variant) != str(variant):
        raise ValueError("schedule variant does not match requested variant")

    windows = _transit_windows(schedule, timing)

    # Classical and phase steps ride along with the atom's next jc pulse.
    n = len(schedule.steps)
    step_windows: list[tuple[float, float] | None] = [None] * n
    next_jc_window: dict[int, tuple[float, float]] = {}
    for i in range(n - 1, -1, -1):
        spec = schedule.steps[i].spec
        if spec.kind == KIND_JC:
            win = windows[(spec.atom, spec.mode)]
            next_jc_window[spec.atom] = win
            step_windows[i] = win
        else:
            win = next_jc_window.get(spec.atom)
            if win is None:
                win = windows.get((spec.atom, schedule.mode_b), (0.0, 0.0))
            step_windows[i] = (win[0], win[0])

    durations = tuple(
        timing.pulse_duration(step.spec.theta) if step.spec.kind == KIND_JC else 0.0
        for step in schedule.steps
    )
    total_duration = max(end for _, end in windows.values())

    mode_windows: dict[int, tuple[float, float]] = {}
    storage: dict[str, float] = {}
    for m in (schedule.mode_a, schedule.mode_b):
        jc_steps = [i for i, s in enumerate(schedule.steps)
                    if s.spec.kind == KIND_JC and s.spec.mode == m]
        load_start = step_windows[jc_steps[0]][0]
        unload_idx = schedule.mode_unload.get(m)
        unload_end = (step_windows[unload_idx][1] if unload_idx is not None
                      else total_duration)
        mode_windows[m] = (load_start, unload_end)
        storage[schedule.mode_label(m)] = unload_end - load_start

    # Largest total Rabi angle any atom must accumulate during one transit.
    # Two cavities: one transit per (atom, mode) visit; one cavity: each atom
    # does all its pulses in a single transit.
    per_transit: dict[tuple[int, int], float] = {}
    for step in schedule.steps:
        if step.spec.kind != KIND_JC:
            continue
        key = ((step.spec.atom, step.spec.mode) if schedule.variant == "two_cavity"
               else (step.spec.atom, 0))
        per_transit[key] = per_transit.get(key, 0.0) + step.spec.theta
    required = max(per_transit.values())
    bound = TWO_PI if schedule.variant == "two_cavity" else 3.0 * math.pi
    achievable = TWO_PI * timing.rabi_freq * (INTERACTION_LENGTH / timing.velocity)

    verdicts: list[tuple[str, bool, str]] = []
    verdicts.append((
        "pulse-angle bound",
        required <= bound + 1e-12,
        f"max Rabi angle per transit {required / math.pi:.4g}*pi vs bound "
        f"{bound / math.pi:.4g}*pi",
    ))
    verdicts.append((
        "interaction window",
        achievable >= required - 1e-9,
        f"achievable Rabi angle per transit {achievable / math.pi:.4g}*pi at "
        f"{timing.velocity:g} m/s vs required {required / math.pi:.4g}*pi",
    ))
    max_storage = max(storage.values())
    budget = STORAGE_BUDGET_FRACTION * damping_time
    verdicts.append((
        "storage budget",
        max_storage <= budget,
        f"longest mode storage {max_storage:.3e} s vs "
        f"{STORAGE_BUDGET_FRACTION:g} x damping time {damping_time:.3e} s",
    ))
    splitting_ratio = None
    if schedule.variant != "two_cavity":
        splitting_ratio = MODE_SPLITTING_HZ / timing.rabi_freq
        verdicts.append((
            "mode splitting",
            splitting_ratio >= SPLITTING_MIN_RATIO,
            f"mode splitting / coupling = {splitting_ratio:.3g} "
            f"(needs >= {SPLITTING_MIN_RATIO:g})",
        ))

    failing = [name for name, ok, _ in verdicts if not ok]
    return TimingReport(
        variant=str(schedule.variant),
        rabi_freq=timing.rabi_freq,
        velocity=timing.velocity,
        transit_time=timing.transit,
        interaction_window=timing.interaction_window,
        step_windows=tuple(step_windows),
        step_durations=durations,
        storage_times=storage,
        mode_windows=mode_windows,
        total_duration=total_duration,
        required_angle=required,
        angle_bound=bound,
        achievable_angle=achievable,
        splitting_ratio=splitting_ratio,
        verdicts=tuple(verdicts),
        feasible=not failing,
        limiting_constraint=failing[0] if failing else None,
    )
