"""Decoherence channels and the pulse-imperfection Monte Carlo.

Cavity relaxation is modeled as amplitude damping applied as discrete Kraus
channels between schedule steps, weighted by the time each mode spends
loaded; with at most one photon per mode and Markovian loss this discrete
form is exact.  Pulse imperfections are independent Gaussian fractional
over-rotations per pulse, truncated at five standard deviations.  Atomic
lifetime is ignored: it is far longer than the protocol and not limiting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .core import LocalOperator
from .gates import KIND_CLASSICAL, KIND_JC
from .protocol import Engine, ProtocolConfig, build_schedule, run_protocol
from .timing import TimingModel

OVERROTATION_CLIP = 5.0  # truncate fractional errors at +-5 sigma


@dataclass(frozen=True)
class NoiseModel:
    """Cavity damping lifetimes, per-pulse over-rotation spread, RNG seed.

    ``cavity_T1`` is either one lifetime for both modes or a (mode_a,
    mode_b) pair, in seconds.  ``damp_throughout`` drops the loaded-window
    accounting and damps both modes for the whole protocol, for comparison.
    """

    cavity_T1: float | tuple[float, float] = 1e-3
    pulse_sigma: float = 0.0
    seed: int = 0
    trials: int = 100
    damp_throughout: bool = False

    def __post_init__(self) -> None:
        t1a, t1b = self.t1_pair
        if t1a <= 0 or t1b <= 0:
            raise ValueError("cavity lifetimes must be positive")
        if self.pulse_sigma < 0:
            raise ValueError("pulse_sigma must be non-negative")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")

    @property
    def t1_pair(self) -> tuple[float, float]:
        if isinstance(self.cavity_T1, (tuple, list)):
            t1a, t1b = self.cavity_T1
            return float(t1a), float(t1b)
        return float(self.cavity_T1), float(self.cavity_T1)


def damping_channel(mode_dim: int, gamma: float) -> LocalOperator:
    """Photon-loss Kraus set on a Fock-truncated mode.

    Standard binomial-loss construction: K_k drops k photons, with
    K_k[n-k, n] = sqrt(C(n, k) (1-gamma)^(n-k) gamma^k).  Completeness
    holds exactly for any truncation.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("loss probability gamma must lie in [0, 1]")
    if mode_dim < 2:
        raise ValueError("mode dimension must be at least 2")
    kraus = []
    for k in range(mode_dim):
        mat = np.zeros((mode_dim, mode_dim), dtype=complex)
        for n in range(k, mode_dim):
            mat[n - k, n] = math.sqrt(
                math.comb(n, k) * (1.0 - gamma) ** (n - k) * gamma ** k
            )
        kraus.append(mat)
    return LocalOperator.kraus(kraus)


def mean_pulse_fidelity(theta: float, sigma: float) -> float:
    """Average two-level overlap of an over-rotated pulse with its target.

    A fractional error eps rotates by theta*(1+eps) instead of theta, so the
    overlap is cos^2(theta*eps/2); this averages it over the truncated
    Gaussian error model by quadrature.
    """
    if sigma == 0.0 or theta == 0.0:
        return 1.0

    def integrand(u: float) -> float:
        w = math.exp(-0.5 * u * u)
        return w * math.cos(0.5 * theta * sigma * u) ** 2

    def weight(u: float) -> float:
        return math.exp(-0.5 * u * u)

    num, _ = integrate.quad(integrand, -OVERROTATION_CLIP, OVERROTATION_CLIP)
    den, _ = integrate.quad(weight, -OVERROTATION_CLIP, OVERROTATION_CLIP)
    return num / den


@dataclass(frozen=True)
class NoisyRunResult:
    mean_f3: float
    mean_f4: float
    stderr_f3: float
    stderr_f4: float
    trials: int

    def to_dict(self) -> dict:
        return {
            "mean_f3": self.mean_f3,
            "mean_f4": self.mean_f4,
            "stderr_f3": self.stderr_f3,
            "stderr_f4": self.stderr_f4,
            "trials": self.trials,
        }


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def noisy_run(config: ProtocolConfig, noise: NoiseModel,
              timing: TimingModel | None = None) -> NoisyRunResult:
    """Monte Carlo average of the clone fidelities under the noise model.

    Each trial draws its own over-rotations from an RNG stream derived from
    (seed, trial index), so results are deterministic for a given seed and
    independent of any execution order.
    """
    if config.engine is not Engine.DENSITY:
        raise ValueError("noisy runs need the density engine")
    if noise.trials < 1:
        raise ValueError("trials must be at least 1")
    cfg = replace(config, noise=noise)
    f3s: list[float] = []
    f4s: list[float] = []
    for trial in range(noise.trials):
        rng = np.random.default_rng([int(noise.seed), trial])
        _, report = run_protocol(cfg, timing=timing, rng=rng)
        f3s.append(report.f3)
        f4s.append(report.f4)
    mean3, err3 = _mean_stderr(f3s)
    mean4, err4 = _mean_stderr(f4s)
    return NoisyRunResult(mean3, mean4, err3, err4, noise.trials)


def overrotation_budget_check(config: ProtocolConfig, noise: NoiseModel,
                              timing: TimingModel | None = None) -> dict:
    """Measure how well the multiplicative per-pulse budget matches the
    simulated protocol under over-rotations alone.

    Returns the product of per-pulse mean fidelities over the schedule's
    rotations, the simulated mean clone fidelity relative to the ideal 5/6,
    and their discrepancy.  The budget is an approximation; the discrepancy
    is reported, not bounded.
    """
    schedule = build_schedule(config)
    product = 1.0
    for step in schedule.steps:
        if step.spec.kind in (KIND_JC, KIND_CLASSICAL):
            product *= mean_pulse_fidelity(step.spec.theta, noise.pulse_sigma)
    pure_noise = replace(noise, cavity_T1=1e12)  # isolate over-rotations
    result = noisy_run(replace(config, engine=Engine.DENSITY), pure_noise, timing)
    ideal = 5.0 / 6.0
    simulated_ratio = 0.5 * (result.mean_f3 + result.mean_f4) / ideal
    return {
        "pulse_sigma": noise.pulse_sigma,
        "n_rotations": sum(
            1 for s in schedule.steps if s.spec.kind in (KIND_JC, KIND_CLASSICAL)
        ),
        "budget_product": product,
        "simulated_fidelity_ratio": simulated_ratio,
        "discrepancy": product - simulated_ratio,
    }
