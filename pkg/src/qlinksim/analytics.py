"""Rate, latency and resource formulas for a chain of surface-code repeaters."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .montecarlo import TrialPlan, estimate_p_link
from .noise import p_b_of_fidelity

# Operating points quoted for the protocol, not derived here.
HERALD_FREE_MIN_SUCCESS = 0.65
HERALD_FREE_MIN_FIDELITY = 0.96
HERALDED_MIN_FIDELITY = 0.92
REPORTED_D_10 = 30.0

MAX_DISTANCE = 10**7


@dataclass(frozen=True)
class TimingParams:
    t_g: float
    t_m: float
    t_b: float = 1e-6

    def __post_init__(self):
        if self.t_g < 0 or self.t_m < 0 or self.t_b <= 0:
            raise ValueError("gate/measurement times must be >= 0 and T_B > 0")
        if self.t_g + self.t_m == 0:
            raise ValueError("gate and measurement times cannot both be zero")

    @property
    def round_time(self) -> float:
        return 4 * self.t_g + self.t_m


@dataclass(frozen=True)
class ScalingCalibration:
    """p_link(d) = p_ref * 10 ** (-(d - d_ref) / d_10) at a fixed (p_L, F)."""

    d_ref: int
    p_ref: float
    d_10: float
    p_l: float | None = None
    fidelity: float | None = None

    def __post_init__(self):
        if self.d_10 <= 0:
            raise ValueError("d_10 must be positive")
        if not 0 < self.p_ref < 1:
            raise ValueError("p_ref must lie strictly between 0 and 1")

    def p_link(self, d: float) -> float:
        return self.p_ref * 10 ** (-(d - self.d_ref) / self.d_10)


@dataclass(frozen=True)
class ChainSpec:
    n_links: int
    p_c: float
    s_b: float = 1.0

    def __post_init__(self):
        if self.n_links < 1:
            raise ValueError("need at least one link")
        if not 0 < self.p_c < 1:
            raise ValueError("p_c must lie strictly between 0 and 1")
        if not 0 < self.s_b <= 1:
            raise ValueError("S_B must lie in (0, 1]")

    @property
    def p_l(self) -> float:
        return 1.0 - self.s_b


def cycle_time(d: int, timing: TimingParams) -> float:
    if d < 1:
        raise ValueError("d must be at least 1")
    return timing.round_time * d


def cycle_time_lossy(d: int, timing: TimingParams, p_l: float) -> float:
    if not 0 <= p_l < 1:
        raise ValueError("p_L must lie in [0, 1)")
    return cycle_time(d, timing) / (1.0 - p_l)


def required_distance(chain: ChainSpec, cal: ScalingCalibration) -> int:
    """Smallest d with N * p_link(d) <= p_c (union bound over links)."""
    excess = math.log10(chain.n_links * cal.p_ref / chain.p_c)
    d_min = cal.d_ref + cal.d_10 * excess
    if not math.isfinite(d_min) or d_min > MAX_DISTANCE:
        raise ValueError(f"target p_c={chain.p_c} is out of reach")
    d = max(1, math.ceil(d_min - 1e-9))
    while d > 1 and chain.n_links * cal.p_link(d - 1) <= chain.p_c:
        d -= 1
    return d


def qubits_per_repeater(d: int, k: int = 2) -> int:
    if d < 1 or k < 1:
        raise ValueError("d and k must be at least 1")
    return k * (2 * d - 1)


def bell_pairs_per_logical_qubit(d: int) -> int:
    return (2 * d - 1) * d


def heralded_rate(chain: ChainSpec, cal: ScalingCalibration, timing: TimingParams, generators: int = 1) -> float:
    """Logical qubits per second when each link waits T_B per heralded pair.

    A logical qubit needs (2d - 1) d Bell pairs per link, produced by
    ``generators`` parallel sources.
    """
    if generators < 1:
        raise ValueError("need at least one generator")
    d = required_distance(chain, cal)
    return 1.0 / (timing.t_b * math.ceil(bell_pairs_per_logical_qubit(d) / generators))


def calibrate(
    p_l: float,
    fidelity: float,
    d_ref: int = 9,
    trials: int = 20000,
    seed: int = 0,
    d_10: float = REPORTED_D_10,
    workers: int = 1,
) -> ScalingCalibration:
    """Fit p_ref by simulating one distance at the (p_L, F) operating point."""
    plan = TrialPlan(d=d_ref, p_b=p_b_of_fidelity(fidelity), p_l=p_l, trials=trials, master_seed=seed)
    estimate = estimate_p_link(plan, workers)
    if estimate.failures == 0:
        raise ValueError("no failures observed; raise trials or lower d_ref")
    return ScalingCalibration(d_ref, estimate.p_hat, d_10, p_l, fidelity)
