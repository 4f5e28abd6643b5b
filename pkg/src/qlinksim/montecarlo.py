"""Monte Carlo estimation of per-link logical failure and threshold crossings.

Randomness is counter-based: trial ``i`` of a plan always draws from chunk
``i // CHUNK_TRIALS`` of a stream keyed by ``(master_seed, error type,
chunk)``, so results do not depend on how chunks are spread over workers.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .decoder import LatticeMatcher
from .lattice import LinkGeometry, build_geometry
from .noise import BellNoise, component_flip_probability, sample_block

CHUNK_TRIALS = 2048
WILSON_Z = 1.959963984540054

ErrorMode = Literal["x", "z", "combined"]
RoundUnit = Literal["cycle", "measurement"]
_STREAM_KEY = {"x": 0, "z": 1}


@dataclass(frozen=True)
class TrialPlan:
    d: int
    p_b: float = 0.0
    p_l: float = 0.0
    trials: int = 1000
    master_seed: int = 0
    t: int | None = None
    perfect_measurement: bool = False
    error_type: ErrorMode = "x"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.error_type not in ("x", "z", "combined"):
            raise ValueError(f"unknown error type {self.error_type!r}")
        BellNoise(self.p_b, self.p_l)

    @property
    def depth(self) -> int:
        return self.d if self.t is None else self.t

    @property
    def geometry(self) -> LinkGeometry:
        return build_geometry(self.d, self.depth, self.perfect_measurement)

    @property
    def noise(self) -> BellNoise:
        return BellNoise(self.p_b, self.p_l)


@dataclass(frozen=True)
class FailureEstimate:
    failures: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, failures: int, trials: int) -> "FailureEstimate":
        low, high = wilson_interval(failures, trials)
        return cls(int(failures), int(trials), failures / trials, low, high)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.trials)


@dataclass(frozen=True)
class MeanRounds:
    value: float
    ci_low: float
    ci_high: float
    lower_bound: bool = False
    unit: RoundUnit = "cycle"


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


@lru_cache(maxsize=32)
def _matcher(geometry: LinkGeometry) -> LatticeMatcher:
    return LatticeMatcher(geometry)


def chunk_rng(master_seed: int, error_type: str, chunk: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(_STREAM_KEY[error_type], chunk))
    return np.random.default_rng(seq)


def chunk_failures(plan: TrialPlan, chunk: int, error_type: str = "x") -> np.ndarray:
    """Failure flags for the trials of one chunk, in trial order."""
    start = chunk * CHUNK_TRIALS
    n = min(CHUNK_TRIALS, plan.trials - start)
    geometry = plan.geometry
    rng = chunk_rng(plan.master_seed, error_type, chunk)
    flips, erasures = sample_block(geometry, plan.noise, rng, n, error_type)
    return _matcher(geometry).failures(flips, erasures if plan.p_l > 0 else None)


def _chunk_count(args: tuple[TrialPlan, int]) -> int:
    plan, chunk = args
    if plan.error_type == "combined":
        failed = chunk_failures(plan, chunk, "x") | chunk_failures(plan, chunk, "z")
    else:
        failed = chunk_failures(plan, chunk, plan.error_type)
    return int(np.count_nonzero(failed))


def estimate_p_link(plan: TrialPlan, workers: int = 1) -> FailureEstimate:
    """Fraction of independent ``t``-round blocks that end in logical failure.

    With ``error_type="combined"`` a block fails if either its X-type or its
    independently drawn Z-type matching fails, so the estimate targets
    1 - (1 - p_X)^2.
    """
    jobs = [(plan, c) for c in range(math.ceil(plan.trials / CHUNK_TRIALS))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_chunk_count, jobs))
    else:
        counts = [_chunk_count(job) for job in jobs]
    return FailureEstimate.from_counts(sum(counts), plan.trials)


def mean_rounds_from_estimate(estimate: FailureEstimate, t: int, unit: RoundUnit = "cycle") -> MeanRounds:
    """Geometric mean time to the first failed block.

    ``unit="cycle"`` counts error-correction cycles (one decoded ``t``-round
    block each); ``unit="measurement"`` counts stabilizer rounds, ``t`` per
    cycle. With no failures the value is ``inf`` and ``ci_low`` carries the
    lower bound.
    """
    scale = 1 if unit == "cycle" else t
    if estimate.failures == 0:
        return MeanRounds(math.inf, scale / estimate.ci_high, math.inf, True, unit)
    return MeanRounds(scale / estimate.p_hat, scale / estimate.ci_high, scale / estimate.ci_low, False, unit)


def estimate_mean_rounds_to_failure(plan: TrialPlan, unit: RoundUnit = "cycle", workers: int = 1) -> MeanRounds:
    return mean_rounds_from_estimate(estimate_p_link(plan, workers), plan.depth, unit)


@dataclass(frozen=True)
class SweepRow:
    d: int
    t: int
    p_b: float
    p_l: float
    seed: int
    estimate: FailureEstimate | None
    mean_rounds: MeanRounds | None
    error: str | None = None


@dataclass
class SweepResult:
    rows: list[SweepRow]

    def ok_rows(self) -> list[SweepRow]:
        return [r for r in self.rows if r.estimate is not None]

    def curves(self, axis: str = "p_b") -> dict[int, list[SweepRow]]:
        out: dict[int, list[SweepRow]] = {}
        for row in self.ok_rows():
            out.setdefault(row.d, []).append(row)
        for rows in out.values():
            rows.sort(key=lambda r: getattr(r, axis))
        return dict(sorted(out.items()))


def point_seed(master_seed: int, index: int) -> int:
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(index,))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def make_grid(
    ds: Iterable[int],
    p_bs: Iterable[float],
    p_ls: Iterable[float] = (0.0,),
    trials: int = 1000,
    master_seed: int = 0,
    t: int | None = None,
    perfect_measurement: bool = False,
    error_type: ErrorMode = "x",
) -> list[TrialPlan]:
    """Cartesian grid (d outermost, then p_L, then p_B) with per-point seeds."""
    plans = []
    for index, (d, p_l, p_b) in enumerate(itertools.product(ds, p_ls, p_bs)):
        plans.append(
            TrialPlan(
                d=int(d), p_b=float(p_b), p_l=float(p_l), trials=trials,
                master_seed=point_seed(master_seed, index), t=t,
                perfect_measurement=perfect_measurement, error_type=error_type,
            )
        )
    return plans


def run_sweep(
    plans: Sequence[TrialPlan],
    workers: int = 1,
    unit: RoundUnit = "cycle",
    on_row: Callable[[SweepRow], None] | None = None,
) -> SweepResult:
    if not plans:
        raise ValueError("empty sweep")
    rows = []
    for plan in plans:
        try:
            estimate = estimate_p_link(plan, workers)
            row = SweepRow(plan.d, plan.depth, plan.p_b, plan.p_l, plan.master_seed,
                           estimate, mean_rounds_from_estimate(estimate, plan.depth, unit))
        except Exception as exc:  # recorded per point; the sweep carries on
            row = SweepRow(plan.d, plan.depth, plan.p_b, plan.p_l, plan.master_seed, None, None,
                           f"{type(exc).__name__}: {exc}")
        rows.append(row)
        if on_row is not None:
            on_row(row)
    return SweepResult(rows)


class NoCrossing(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdEstimate:
    p_cross: float
    uncertainty: float
    crossings: tuple[tuple[int, int, float], ...]


def _first_upward_crossing(x: np.ndarray, diff: np.ndarray) -> float | None:
    nonzero = np.flatnonzero(diff != 0)
    for a, b in zip(nonzero[:-1], nonzero[1:]):
        if diff[a] < 0 < diff[b]:
            if b == a + 1:
                return float(x[a] - diff[a] * (x[b] - x[a]) / (diff[b] - diff[a]))
            return float(np.mean(x[a + 1:b]))
    return None


def threshold_estimate(sweep: SweepResult, axis: str = "p_b") -> ThresholdEstimate:
    """Mean and spread of pairwise crossings of the p_link curves.

    Each pair of distances is compared through log p_link, interpolated
    linearly between grid points; the crossing is the first place where the
    larger code turns from better to worse. Points where both curves saw no
    failures carry no information and are skipped.
    """
    curves = sweep.curves(axis)
    if len(curves) < 2:
        raise ValueError("need at least two code distances")
    crossings = []
    for d1, d2 in itertools.combinations(curves, 2):
        a = {getattr(r, axis): r.estimate for r in curves[d1]}
        b = {getattr(r, axis): r.estimate for r in curves[d2]}
        xs = sorted(set(a) & set(b))
        xs = [x for x in xs if a[x].failures or b[x].failures]
        if len(xs) < 3:
            continue
        log = lambda e: math.log(max(e.p_hat, 0.5 / e.trials))  # noqa: E731
        diff = np.array([log(b[x]) - log(a[x]) for x in xs])
        cross = _first_upward_crossing(np.array(xs), diff)
        if cross is not None:
            crossings.append((d1, d2, cross))
    if not crossings:
        raise NoCrossing("no crossing in range")
    values = np.array([c[2] for c in crossings])
    return ThresholdEstimate(float(values.mean()), float(values.std()), tuple(crossings))


def fit_suppression(ds: Sequence[int], p_links: Sequence[float]) -> tuple[float, float]:
    """Least-squares line through log10 p_link vs d; returns (slope, d_10).

    ``d_10`` is the distance increase per factor-10 suppression, ``-1/slope``.
    """
    slope = float(np.polyfit(np.asarray(ds, float), np.log10(np.asarray(p_links, float)), 1)[0])
    return slope, (-1.0 / slope if slope != 0 else math.inf)


def exact_p_link(geometry: LinkGeometry, p_b: float, error_type: str = "x", max_bonds: int = 22) -> float:
    """Failure probability of the lattice decoder by summing over every flip set.

    Loss-free only. Each of the 2^n configurations is decoded once and weighted
    by its probability under independent flips at rate 8 p_B / 15.
    """
    n = geometry.num_bonds
    if n > max_bonds:
        raise ValueError(f"refusing to enumerate 2^{n} configurations")
    q = component_flip_probability(p_b, error_type)
    codes = np.arange(2 ** n, dtype=np.int64)
    flips = ((codes[:, None] >> np.arange(n)) & 1).astype(bool)
    weights = flips.sum(axis=1)
    prob = q ** weights * (1 - q) ** (n - weights)
    failed = LatticeMatcher(geometry).failures(flips)
    return float(prob[failed].sum())
