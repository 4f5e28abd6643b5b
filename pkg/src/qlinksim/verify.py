"""Invariant suites run by ``qlinksim verify``.

Every suite returns a :class:`SuiteResult`. Decoder entry points are looked up
on the :mod:`qlinksim.decoder` module at call time so a deliberately broken
matcher can be swapped in to check that the suites notice.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import decoder
from .lattice import build_geometry
from .montecarlo import TrialPlan, estimate_p_link, exact_p_link
from .noise import BellNoise, ErrorPattern, error_class_distribution, reduced_class_counts, sample_pattern

SUITE_VERSION = "1"


@dataclass
class SuiteResult:
    suite: str
    passed: bool
    checked: int
    failures: int
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def min_weight_suite(distances=(3, 5)) -> SuiteResult:
    """No flip set smaller than floor((d+1)/2) may cause a logical failure."""
    checked = failed = 0
    examples = []
    for d in distances:
        geometry = build_geometry(d, d)
        lattice = decoder.LatticeMatcher(geometry)
        budget = (d + 1) // 2 - 1
        for size in range(budget + 1):
            for combo in itertools.combinations(range(geometry.num_bonds), size):
                mask = np.zeros(geometry.num_bonds, dtype=bool)
                mask[list(combo)] = True
                pattern = ErrorPattern(geometry.bonds_of(mask))
                bad = decoder.decode(geometry, pattern).failure or bool(lattice.failures(mask)[0])
                checked += 1
                if bad:
                    failed += 1
                    if len(examples) < 5:
                        examples.append({"d": d, "flips": sorted(map(repr, pattern.flips))})
    return SuiteResult("min-weight", failed == 0, checked, failed, {"distances": list(distances), "examples": examples})


def random_instances(n: int, seed: int = 0, max_defects: int = decoder.MAX_ORACLE_DEFECTS):
    """Yield ``(geometry, pattern)`` pairs with at most ``max_defects`` defects."""
    rng = np.random.default_rng(seed)
    made = 0
    while made < n:
        d = int(rng.choice([3, 5, 7]))
        t = int(rng.integers(1, d + 1))
        geometry = build_geometry(d, t, perfect_measurement=bool(rng.random() < 0.1))
        noise = BellNoise(float(rng.uniform(0.02, 0.35)), float(rng.uniform(0, 0.5)) if rng.random() < 0.5 else 0.0)
        pattern = sample_pattern(geometry, noise, "x", rng)
        if len(decoder.extract_detections(geometry, pattern)) <= max_defects:
            made += 1
            yield geometry, pattern


def oracle_equivalence_suite(instances: int = 2000, seed: int = 0) -> SuiteResult:
    """Matcher weight equals the exhaustive minimum; lattice route agrees too."""
    mismatches = 0
    examples = []
    for geometry, pattern in random_instances(instances, seed):
        graph = decoder.build_matching_graph(
            geometry, decoder.extract_detections(geometry, pattern), pattern.erasures
        )
        fast = decoder.min_weight_matching(graph).total_weight
        exact = decoder.exhaustive_matching(graph).total_weight
        lattice = decoder.LatticeMatcher(geometry).matching_weight(
            geometry.mask_of(pattern.flips), geometry.mask_of(pattern.erasures)
        )
        if not fast == exact == lattice:
            mismatches += 1
            if len(examples) < 5:
                examples.append({"d": geometry.d, "t": geometry.t, "matcher": fast, "exhaustive": exact, "lattice": lattice})
    return SuiteResult("oracle-equivalence", mismatches == 0, instances, mismatches, {"examples": examples})


def residual_suite(instances: int = 500, seed: int = 1) -> SuiteResult:
    """Flips plus correction always leave an empty syndrome."""
    rng = np.random.default_rng(seed)
    failed = 0
    for _ in range(instances):
        d = int(rng.choice([3, 5, 7, 9]))
        geometry = build_geometry(d, d)
        pattern = sample_pattern(geometry, BellNoise(float(rng.uniform(0, 0.4)), float(rng.uniform(0, 0.5))), "x", rng)
        try:
            decoder.decode(geometry, pattern)
        except decoder.ContractViolation:
            failed += 1
    return SuiteResult("residual-syndrome", failed == 0, instances, failed)


def exact_enumeration_suite(trials: int = 100_000, seed: int = 2, p_b: float = 0.15) -> SuiteResult:
    """Monte Carlo p_link at d = t = 3 sits within 3 sigma of full enumeration."""
    exact = exact_p_link(build_geometry(3, 3), p_b)
    est = estimate_p_link(TrialPlan(d=3, t=3, p_b=p_b, trials=trials, master_seed=seed))
    sigma = math.sqrt(exact * (1 - exact) / trials)
    z = (est.p_hat - exact) / sigma
    return SuiteResult("exact-enumeration", abs(z) <= 3, 1, int(abs(z) > 3),
                       {"exact": exact, "estimate": est.p_hat, "z": z})


def error_class_suite(draws: int = 1_000_000, seed: int = 3, p_bs=(0.1, 0.5, 0.9)) -> SuiteResult:
    """Raw 15-Pauli draws reduced by XX, ZZ reproduce the class distribution."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    failed = 0
    for p_b in p_bs:
        counts = reduced_class_counts(p_b, draws, rng)
        expected = error_class_distribution(p_b).as_array()
        sigma = np.sqrt(expected * (1 - expected) / draws)
        z = np.abs(counts / draws - expected) / np.where(sigma > 0, sigma, 1)
        worst = max(worst, float(z.max()))
        failed += int((z > 3).any())
    return SuiteResult("error-classes", failed == 0, len(p_bs), failed, {"max_z": worst})


SUITES = {
    "min-weight": min_weight_suite,
    "oracle-equivalence": oracle_equivalence_suite,
    "residual-syndrome": residual_suite,
    "exact-enumeration": exact_enumeration_suite,
    "error-classes": error_class_suite,
}
