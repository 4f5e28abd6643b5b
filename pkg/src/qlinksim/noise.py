"""Bell-pair noise: depolarizing reduction, fidelity, and bond sampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np

from .lattice import BondId, LinkGeometry

ErrorType = Literal["x", "z"]

PAULI_LABELS = ("I", "X", "Y", "Z")
CLASS_LABELS = ("II", "IX", "IY", "IZ")


def _check_probability(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class BellNoise:
    p_b: float = 0.0
    p_l: float = 0.0

    def __post_init__(self):
        _check_probability("p_b", self.p_b)
        _check_probability("p_l", self.p_l)


@dataclass(frozen=True)
class ErrorClassDistribution:
    p_ii: float
    p_ix: float
    p_iy: float
    p_iz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p_ii, self.p_ix, self.p_iy, self.p_iz])


@dataclass(frozen=True)
class ErrorPattern:
    flips: frozenset[BondId] = field(default_factory=frozenset)
    erasures: frozenset[BondId] = field(default_factory=frozenset)
    error_type: ErrorType = "x"


def error_class_distribution(p_b: float) -> ErrorClassDistribution:
    """Class probabilities after reducing modulo the Bell stabilizers XX, ZZ."""
    p_b = _check_probability("p_b", p_b)
    each = 4.0 * p_b / 15.0
    return ErrorClassDistribution(1.0 - 4.0 * p_b / 5.0, each, each, each)


def component_flip_probability(p_b: float, error_type: ErrorType = "x") -> float:
    # IX and IY flip the X component, IZ and IY the Z component.
    if error_type not in ("x", "z"):
        raise ValueError(f"error type must be 'x' or 'z', got {error_type!r}")
    return 8.0 * _check_probability("p_b", p_b) / 15.0


def fidelity_of(p_b: float) -> float:
    return 1.0 - 4.0 * _check_probability("p_b", p_b) / 5.0


def p_b_of_fidelity(fidelity: float) -> float:
    fidelity = float(fidelity)
    if not 0.2 <= fidelity <= 1.0:
        raise ValueError(f"fidelity must lie in [0.2, 1], got {fidelity}")
    return 5.0 * (1.0 - fidelity) / 4.0


def sample_block(
    geometry: LinkGeometry,
    noise: BellNoise,
    rng: np.random.Generator,
    n: int,
    error_type: ErrorType = "x",
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` independent patterns as boolean ``(n, num_bonds)`` arrays.

    Each trial consumes ``2 * num_bonds`` consecutive uniforms: loss draws
    first, then flip draws. A lost pair is erased and flipped by a fair coin;
    a kept pair flips with the component rate 8 p_B / 15.
    """
    p_flip = component_flip_probability(noise.p_b, error_type)
    u = rng.random((n, 2, geometry.num_bonds))
    erasures = u[:, 0] < noise.p_l
    flips = np.where(erasures, u[:, 1] < 0.5, u[:, 1] < p_flip)
    return flips, erasures


def sample_pattern(
    geometry: LinkGeometry,
    noise: BellNoise,
    error_type: ErrorType,
    rng: np.random.Generator,
) -> ErrorPattern:
    flips, erasures = sample_block(geometry, noise, rng, 1, error_type)
    return ErrorPattern(geometry.bonds_of(flips[0]), geometry.bonds_of(erasures[0]), error_type)


# Independent route through the raw two-qubit depolarizing channel.

def _pauli_matrices() -> list[np.ndarray]:
    i = np.eye(2, dtype=complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    return [i, x, y, z]


@lru_cache(maxsize=None)
def bell_reduction_table() -> np.ndarray:
    """``table[a, b]`` is the class index of ``P_a (x) P_b`` acting on |Phi+>.

    Found numerically: the class is the unique ``I (x) P_c`` that produces the
    same state as ``P_a (x) P_b`` up to a global phase.
    """
    paulis = _pauli_matrices()
    phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    table = np.empty((4, 4), dtype=np.int64)
    for a in range(4):
        for b in range(4):
            state = np.kron(paulis[a], paulis[b]) @ phi
            overlaps = [abs(np.vdot(np.kron(paulis[0], paulis[c]) @ phi, state)) for c in range(4)]
            hits = [c for c, o in enumerate(overlaps) if np.isclose(o, 1.0)]
            assert len(hits) == 1
            table[a, b] = hits[0]
    return table


def sample_raw_bell_errors(p_b: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` two-qubit Paulis: identity w.p. 1 - p_B, else one of 15 uniformly.

    Returns an ``(n, 2)`` array of single-qubit Pauli indices (I, X, Y, Z).
    """
    p_b = _check_probability("p_b", p_b)
    hit = rng.random(n) < p_b
    which = rng.integers(1, 16, size=n) * hit
    return np.stack([which // 4, which % 4], axis=1)


def reduced_class_counts(p_b: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Counts of (II, IX, IY, IZ) after reducing ``n`` raw depolarizing draws."""
    raw = sample_raw_bell_errors(p_b, n, rng)
    classes = bell_reduction_table()[raw[:, 0], raw[:, 1]]
    return np.bincount(classes, minlength=4)
