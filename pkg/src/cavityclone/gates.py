"""Pulse operators for the atom-field register.

Three families of operations drive the protocol:

* resonant quantum Rabi (Jaynes-Cummings) pulses between an atom's g-e
  transition and one field mode, parametrized by the vacuum Rabi angle;
* classical microwave rotations on a single atom (g-e one-photon, g-i
  one-photon, e-i effective two-photon);
* deterministic diagonal phase shifts on one atom, used for calibration.

Phase conventions are explicit because the two natural readings of a
resonant exchange pulse differ by sideband phases:

``physical``
    The resonant Jaynes-Cummings propagator.  In each excitation manifold
    (|e,n>, |g,n+1>) it is the rotation with cos on the diagonal and
    -i sin off-diagonal, effective angle theta*sqrt(n+1).

``idealized``
    The real rotation with the same effective angle, signed so that a half
    pulse splits symmetrically, |g,1> -> (|g,1> + |e,0>)/sqrt(2).  The full
    pulse then transfers |g,1> -> +|e,0> but |e,0> -> -|g,1>; the protocol
    absorbs that minus sign in the phase of its preparation pulse.

Both conventions give |g,1> -> -|g,1> at theta = 2*pi, which is the phase
gate the protocol is built on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LEVEL_E, LEVEL_G, LEVEL_I, LocalOperator, StrEnum


class JcConvention(StrEnum):
    PHYSICAL = "physical"
    IDEALIZED = "idealized"


# Vacuum Rabi angle of the classical pulse preparing the 2/3 : 1/3 weight
# split on the first atom, and the equal-weight variant.
PREP_ANGLE_STANDARD = 2.0 * math.asin(math.sqrt(1.0 / 3.0))
PREP_ANGLE_EQUATORIAL = math.pi / 2.0

KIND_JC = "jc"
KIND_CLASSICAL = "classical"
KIND_PHASE = "phase_shift"

MIXING_PRESET = "mixing"

_TRANSITIONS = {
    "ge": (LEVEL_G, LEVEL_E),
    "gi": (LEVEL_G, LEVEL_I),
    "ei": (LEVEL_E, LEVEL_I),
}


@dataclass(frozen=True)
class PulseSpec:
    """One timed pulse of the protocol program.

    ``theta`` is the vacuum Rabi angle for jc pulses and the rotation angle
    for classical pulses; ``level_phases`` is only used by phase_shift steps;
    ``preset`` selects a named classical pulse (currently only the g/i
    mixing pulse).  Durations are in seconds and zero for classical and
    phase steps, whose real durations are negligible on the transit scale.
    """

    kind: str
    atom: int
    mode: int | None = None
    transition: str | None = None
    theta: float = 0.0
    phase: float = 0.0
    duration: float = 0.0
    preset: str | None = None
    level_phases: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in (KIND_JC, KIND_CLASSICAL, KIND_PHASE):
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if self.kind == KIND_JC and self.mode is None:
            raise ValueError("jc pulses need a mode target")
        if self.theta < 0.0:
            raise ValueError("scheduled pulse angles are non-negative")
        if self.duration < 0.0:
            raise ValueError("pulse duration must be non-negative")


def jc_pulse(theta: float, mode_dim: int = 3,
             convention: JcConvention | str = JcConvention.IDEALIZED,
             atom_dim: int = 3) -> LocalOperator:
    """Resonant quantum Rabi pulse on atom (x) mode, by vacuum Rabi angle.

    Block-diagonal over excitation manifolds: for each n the ordered pair
    (|e,n>, |g,n+1>) rotates by theta*sqrt(n+1).  States |g,0> and |i,n>
    are strictly invariant; the top |e, n_max> state has no partner in the
    truncated mode space and is frozen, exactly as the truncated-generator
    matrix exponential would leave it.
    """
    convention = JcConvention(convention)
    if atom_dim != 3:
        raise ValueError("atoms are three-level systems (g, e, i)")
    if mode_dim < 2:
        raise ValueError("mode dimension must be at least 2")
    if theta < 0.0:
        raise ValueError("vacuum Rabi angle must be non-negative")

    dim = atom_dim * mode_dim
    u = np.eye(dim, dtype=complex)
    for n in range(mode_dim - 1):
        half = 0.5 * theta * math.sqrt(n + 1)
        c, s = math.cos(half), math.sin(half)
        e_n = LEVEL_E * mode_dim + n
        g_n1 = LEVEL_G * mode_dim + (n + 1)
        if convention is JcConvention.PHYSICAL:
            u[e_n, e_n] = c
            u[g_n1, g_n1] = c
            u[e_n, g_n1] = -1j * s
            u[g_n1, e_n] = -1j * s
        else:
            u[e_n, e_n] = c
            u[g_n1, g_n1] = c
            u[e_n, g_n1] = s
            u[g_n1, e_n] = -s
    return LocalOperator.unitary(u)


def qpg(mode_dim: int = 3,
        convention: JcConvention | str = JcConvention.IDEALIZED) -> LocalOperator:
    """Quantum phase gate: the 2*pi Rabi pulse.

    On the computational subspace {|i,0>, |i,1>, |g,0>, |g,1>} it is
    diag(1, 1, 1, -1): a minus sign exactly when the atom is in g and the
    mode holds one photon, i.e. a CNOT in the (|i> +- |g>) basis with the
    photon as control.
    """
    return jc_pulse(2.0 * math.pi, mode_dim=mode_dim, convention=convention)


def classical_pulse(transition: str, theta: float, phase: float = 0.0) -> LocalOperator:
    """Microwave rotation on one atomic level pair, identity on the third.

    For the ordered pair (a, b) of the named transition:
        |a> -> cos(theta/2)|a> + e^{i phase} sin(theta/2)|b>
        |b> -> -e^{-i phase} sin(theta/2)|a> + cos(theta/2)|b>
    """
    if transition not in _TRANSITIONS:
        raise ValueError(f"unknown transition {transition!r}; expected ge, gi or ei")
    a, b = _TRANSITIONS[transition]
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    u = np.eye(3, dtype=complex)
    u[a, a] = c
    u[b, b] = c
    u[b, a] = np.exp(1j * phase) * s
    u[a, b] = -np.exp(-1j * phase) * s
    return LocalOperator.unitary(u)


def mixing_pulse() -> LocalOperator:
    """The g/i mixing pulse used for re-encoding.

    Target map: |g> -> (|i> - |g>)/sqrt(2) and |i> -> (|i> + |g>)/sqrt(2).
    This map has determinant -1 on the g/i block, so it is not a bare
    rotation; it decomposes as the gi rotation by pi/2 (phase 0) followed by
    a pi phase flip on |g>.  The pulse is its own inverse.
    """
    flip = phase_shift((math.pi, 0.0, 0.0))
    rot = classical_pulse("gi", math.pi / 2.0, 0.0)
    return LocalOperator.unitary(flip.matrices[0] @ rot.matrices[0])


def phase_shift(level_phases: tuple[float, float, float]) -> LocalOperator:
    """Diagonal single-atom unitary diag(e^{i pg}, e^{i pe}, e^{i pi_})."""
    pg, pe, pi_ = level_phases
    return LocalOperator.unitary(np.diag(np.exp(1j * np.array([pg, pe, pi_]))))


def pulse_operator(spec: PulseSpec, mode_dims: dict[int, int],
                   convention: JcConvention | str,
                   theta_override: float | None = None) -> LocalOperator:
    """Materialize a schedule pulse as a bound local operator.

    ``theta_override`` substitutes the rotation angle (used by the
    over-rotation error model); phase shifts have no angle and ignore it.
    """
    theta = spec.theta if theta_override is None else theta_override
    if spec.kind == KIND_JC:
        op = jc_pulse(theta, mode_dim=mode_dims[spec.mode], convention=convention)
        return op.on(spec.atom, spec.mode)
    if spec.kind == KIND_CLASSICAL:
        if spec.preset == MIXING_PRESET:
            if theta_override is None:
                return mixing_pulse().on(spec.atom)
            flip = phase_shift((math.pi, 0.0, 0.0))
            rot = classical_pulse("gi", theta, 0.0)
            return LocalOperator.unitary(flip.matrices[0] @ rot.matrices[0]).on(spec.atom)
        if spec.preset is not None:
            raise ValueError(f"unknown classical preset {spec.preset!r}")
        return classical_pulse(spec.transition, theta, spec.phase).on(spec.atom)
    if spec.kind == KIND_PHASE:
        if spec.level_phases is None:
            raise ValueError("phase_shift pulse needs level_phases")
        return phase_shift(spec.level_phases).on(spec.atom)
    raise ValueError(f"unknown pulse kind {spec.kind!r}")
