"""Copy-fidelity bounds and the measurement-precision arithmetic.

Exact rationals where the quantities are exact; floats only for the n-th
root threshold.
"""

from __future__ import annotations

from fractions import Fraction


def uqcm_fidelity_bound(n: int, m: int) -> Fraction:
    """Optimal copy fidelity (n*m + n + m) / (m * (n + 2)) for n -> m
    copying of identical pure qubits."""
    if n < 1 or m < n:
        raise ValueError("need integers 1 <= n <= m")
    return Fraction(n * m + n + m, m * (n + 2))


def trivial_baseline() -> Fraction:
    """Average fidelity of handing out maximally mixed copies."""
    return Fraction(2, 3)


def precision_requirement() -> Fraction:
    """Measurement precision needed to tell optimal copying from the
    trivial baseline: 1 - (gap between them)/2 = 11/12."""
    gap = uqcm_fidelity_bound(1, 2) - trivial_baseline()
    return 1 - gap / 2


def pulse_fidelity_threshold(target_total: float, n_pulses: int) -> float:
    """Per-operation fidelity needed so n_pulses of them multiply out to
    the target: target_total ** (1 / n_pulses)."""
    if not 0.0 < target_total <= 1.0:
        raise ValueError("target_total must lie in (0, 1]")
    if n_pulses < 1:
        raise ValueError("n_pulses must be at least 1")
    return float(target_total) ** (1.0 / n_pulses)


def process_fidelity_budget(per_pulse_fidelity: float, n_pulses: int) -> float:
    """Multiplicative total-fidelity estimate f ** n."""
    if not 0.0 < per_pulse_fidelity <= 1.0:
        raise ValueError("per_pulse_fidelity must lie in (0, 1]")
    if n_pulses < 1:
        raise ValueError("n_pulses must be at least 1")
    return float(per_pulse_fidelity) ** n_pulses


def mixed_copy_average_fidelity() -> Fraction:
    """<psi| (I/2) |psi> for any qubit: the identity behind comparing the
    2/3 baseline with a literal maximally mixed copy."""
    return Fraction(1, 2)
