"""Minimum-weight perfect matching decoder for the link lattice.

Two routes share one contract:

* the explicit pipeline (:func:`decode`) builds the complete defect graph with
  one private boundary node per defect and solves it exactly;
* :class:`LatticeMatcher` hands the bond lattice itself to the matching engine
  and is what the Monte Carlo loop uses for throughput.

Both minimise the same objective (erased bonds weigh 0, others 1), so their
matching weights agree; they may resolve ties differently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator

import numpy as np
import pymatching
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .lattice import BondId, LinkGeometry, VertexId
from .noise import ErrorPattern

MAX_ORACLE_DEFECTS = 12


class ContractViolation(RuntimeError):
    """A decoder postcondition does not hold."""


@dataclass(frozen=True)
class DecodeOutcome:
    correction: frozenset[BondId]
    failure: bool
    matching_weight: int


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]
    total_weight: int


@dataclass(frozen=True)
class _LatticeTables:
    boundary_bonds: np.ndarray  # bond indices with one boundary end
    boundary_vertex: np.ndarray  # their vertex end
    inner_bonds: np.ndarray  # bond indices joining two vertices
    inner_ends: np.ndarray
    bond_between: dict[tuple[int, int], int]


@lru_cache(maxsize=64)
def _tables(geometry: LinkGeometry) -> _LatticeTables:
    ends = geometry.bond_ends
    has_left = ends[:, 0] >= 0
    has_right = ends[:, 1] >= 0
    inner = np.flatnonzero(has_left & has_right)
    one_sided = np.flatnonzero(has_left ^ has_right)
    boundary_vertex = np.where(has_left[one_sided], ends[one_sided, 0], ends[one_sided, 1])
    bond_between = {}
    for k in inner:
        u, v = sorted(ends[k])
        bond_between[(int(u), int(v))] = int(k)
    return _LatticeTables(one_sided, boundary_vertex, inner, ends[inner], bond_between)


def _as_mask(geometry: LinkGeometry, bonds) -> np.ndarray:
    if isinstance(bonds, np.ndarray) and bonds.dtype == bool:
        return bonds
    return geometry.mask_of(bonds)


def syndrome_of(geometry: LinkGeometry, flip_mask: np.ndarray) -> np.ndarray:
    """Defect indicator per vertex (works on a single mask or a batch)."""
    h = geometry.check_matrix
    flip_mask = np.asarray(flip_mask, dtype=np.uint8)
    if flip_mask.ndim == 1:
        return (h @ flip_mask) % 2
    return ((h @ flip_mask.T) % 2).T.astype(np.uint8)


def extract_detections(geometry: LinkGeometry, pattern: ErrorPattern | Iterable[BondId]) -> frozenset[VertexId]:
    """Vertices touched by an odd number of flipped bonds. Erasures never fire."""
    flips = pattern.flips if isinstance(pattern, ErrorPattern) else pattern
    syndrome = syndrome_of(geometry, _as_mask(geometry, flips))
    return frozenset(geometry.vertices[v] for v in np.flatnonzero(syndrome))


class MatchingGraph:
    """Complete graph over defects plus one private boundary node per defect.

    Node ``i < k`` is defect ``i``; node ``k + i`` is its boundary node.
    Defect-defect and defect-boundary weights are lattice path distances with
    the given erasures; boundary-boundary edges weigh 0. ``inf`` marks pairs
    no chain can join (different layers under perfect measurement).
    """

    def __init__(self, geometry: LinkGeometry, defects: Iterable[VertexId], erasures: Iterable[BondId] = ()):
        self.geometry = geometry
        self.defects = tuple(sorted(defects, key=lambda v: (v.r, v.j)))
        self.erasures = frozenset(erasures)
        k = len(self.defects)
        self._defect_idx = np.array([geometry.vertex_index[v] for v in self.defects], dtype=np.int64)
        if k == 0:
            self.pair_weights = np.zeros((0, 0))
            self.boundary_weights = np.zeros(0)
            return

        tables = _tables(geometry)
        erased = geometry.mask_of(self.erasures)
        w_inner = np.where(erased[tables.inner_bonds], 0.0, 1.0)
        nv = geometry.num_vertices
        graph = sp.coo_matrix(
            (w_inner, (tables.inner_ends[:, 0], tables.inner_ends[:, 1])), shape=(nv, nv)
        ).tocsr()
        dist, pred = dijkstra(graph, directed=False, indices=self._defect_idx, return_predecessors=True)
        self._pred = pred

        w_exit = np.where(erased[tables.boundary_bonds], 0.0, 1.0)
        via = dist[:, tables.boundary_vertex] + w_exit[None, :]
        best = np.argmin(via, axis=1)
        self.boundary_weights = via[np.arange(k), best]
        self._exit = best
        self.pair_weights = dist[:, self._defect_idx]

    @property
    def num_defects(self) -> int:
        return len(self.defects)

    @property
    def num_nodes(self) -> int:
        return 2 * len(self.defects)

    def weight(self, u: int, v: int) -> float:
        k = self.num_defects
        if u == v:
            raise ValueError("no self edges")
        u, v = min(u, v), max(u, v)
        if v < k:
            return float(self.pair_weights[u, v])
        if u < k:
            return float(self.boundary_weights[u]) if v == k + u else math.inf
        return 0.0

    def edges(self) -> Iterator[tuple[int, int, float]]:
        k = self.num_defects
        for u in range(k):
            for v in range(u + 1, k):
                yield u, v, float(self.pair_weights[u, v])
            yield u, k + u, float(self.boundary_weights[u])
        for u in range(k, 2 * k):
            for v in range(u + 1, 2 * k):
                yield u, v, 0.0

    def path(self, u: int, v: int) -> list[BondId]:
        """Bonds of the chain realising edge ``(u, v)``."""
        k = self.num_defects
        u, v = min(u, v), max(u, v)
        if u >= k:
            return []
        tables = _tables(self.geometry)
        if v == k + u:
            exit_k = self._exit[u]
            target = int(tables.boundary_vertex[exit_k])
            tail = [int(tables.boundary_bonds[exit_k])]
        elif v < k:
            target = int(self._defect_idx[v])
            tail = []
        else:
            raise ValueError(f"({u}, {v}) is not an edge")
        if not math.isfinite(self.weight(u, v)):
            raise ValueError(f"no chain joins nodes {u} and {v}")
        source = int(self._defect_idx[u])
        bonds = []
        node = target
        while node != source:
            prev = int(self._pred[u, node])
            bonds.append(tables.bond_between[(min(prev, node), max(prev, node))])
            node = prev
        bonds.reverse()
        return [self.geometry.bonds[b] for b in bonds + tail]


def build_matching_graph(
    geometry: LinkGeometry, detections: Iterable[VertexId], erasures: Iterable[BondId] = ()
) -> MatchingGraph:
    return MatchingGraph(geometry, detections, erasures)


def _complete_pairs(k: int, pairs: list[tuple[int, int]], to_boundary: list[int]) -> tuple[tuple[int, int], ...]:
    out = list(pairs) + [(i, k + i) for i in to_boundary]
    spare = sorted(set(range(k, 2 * k)) - {k + i for i in to_boundary})
    out += [(spare[n], spare[n + 1]) for n in range(0, len(spare), 2)]
    return tuple(sorted(out))


def _total_weight(graph: MatchingGraph, pairs) -> int:
    total = sum(graph.weight(u, v) for u, v in pairs)
    if not math.isfinite(total):
        raise ContractViolation("matching uses an edge that no chain realises")
    return int(round(total))


def min_weight_matching(graph: MatchingGraph) -> Matching:
    """Exact minimum-weight perfect matching of a :class:`MatchingGraph`.

    Solved with a blossom-based engine on the defect nodes, where matching a
    defect to the boundary stands for pairing it with its private boundary
    node; leftover boundary nodes pair up in ascending order at weight 0.
    A defect pair whose weight is not below both boundary weights combined is
    never needed, so such edges are dropped (ties therefore go to the boundary).
    """
    k = graph.num_defects
    if k == 0:
        return Matching((), 0)
    engine = pymatching.Matching()
    b = graph.boundary_weights
    w = graph.pair_weights
    for i in range(k):
        engine.add_boundary_edge(i, weight=float(b[i]), merge_strategy="smallest-weight")
    rows, cols = np.nonzero(np.triu(w < b[:, None] + b[None, :], k=1))
    for i, j in zip(rows.tolist(), cols.tolist()):
        engine.add_edge(i, j, weight=float(w[i, j]), merge_strategy="smallest-weight")
    matched = engine.decode_to_matched_dets_array(np.ones(k, dtype=np.uint8))
    pairs, to_boundary = [], []
    for a, c in matched.tolist():
        if c < 0:
            to_boundary.append(a)
        elif a < 0:
            to_boundary.append(c)
        else:
            pairs.append((min(a, c), max(a, c)))
    full = _complete_pairs(k, pairs, to_boundary)
    return Matching(full, _total_weight(graph, full))


def exhaustive_matching(graph: MatchingGraph) -> Matching:
    """Minimum-weight perfect matching by enumerating every pairing.

    Each defect either pairs with another defect or with its boundary node;
    the search walks all such pairings (memoised on the set of unmatched
    defects). Ties keep the first option met: boundary first, then partners
    in ascending order.
    """
    k = graph.num_defects
    if k > MAX_ORACLE_DEFECTS:
        raise ValueError(f"exhaustive matching supports at most {MAX_ORACLE_DEFECTS} defects, got {k}")
    w = graph.pair_weights
    b = graph.boundary_weights

    @lru_cache(maxsize=None)
    def best(mask: int) -> tuple[float, tuple]:
        if mask == 0:
            return 0.0, ()
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        sub, choice = best(rest)
        cost, pick = b[i] + sub, ((i, -1),) + choice
        m = rest
        while m:
            j = (m & -m).bit_length() - 1
            m &= m - 1
            sub, choice = best(rest & ~(1 << j))
            c = w[i, j] + sub
            if c < cost:
                cost, pick = c, ((i, j),) + choice
        return cost, pick

    _, choice = best((1 << k) - 1)
    pairs = [(i, j) for i, j in choice if j >= 0]
    to_boundary = [i for i, j in choice if j < 0]
    full = _complete_pairs(k, pairs, to_boundary)
    return Matching(full, _total_weight(graph, full))


def correction_from_matching(matching: Matching, graph: MatchingGraph) -> frozenset[BondId]:
    geometry = graph.geometry
    mask = np.zeros(geometry.num_bonds, dtype=bool)
    for u, v in matching.pairs:
        for bond in graph.path(u, v):
            mask[geometry.bond_index[bond]] ^= True
    return geometry.bonds_of(mask)


def check_logical_failure(
    geometry: LinkGeometry,
    flips: Iterable[BondId],
    correction: Iterable[BondId],
    column: int | None = None,
) -> bool:
    """Whether the residual chain crosses the link an odd number of times.

    The crossing parity is read off one column of space bonds (by default the
    middle one); any column gives the same answer once the residual has an
    empty syndrome.
    """
    residual = _as_mask(geometry, flips) ^ _as_mask(geometry, correction)
    if syndrome_of(geometry, residual).any():
        raise ContractViolation("residual of flips and correction still has defects")
    mask = geometry.column_mask(geometry.cut_column if column is None else column)
    return bool(np.count_nonzero(residual & mask) % 2)


def _decode_with(
    geometry: LinkGeometry, pattern: ErrorPattern, matcher: Callable[[MatchingGraph], Matching]
) -> DecodeOutcome:
    detections = extract_detections(geometry, pattern)
    graph = build_matching_graph(geometry, detections, pattern.erasures)
    matching = matcher(graph)
    correction = correction_from_matching(matching, graph)
    failure = check_logical_failure(geometry, pattern.flips, correction)
    return DecodeOutcome(correction, failure, matching.total_weight)


def decode(geometry: LinkGeometry, pattern: ErrorPattern) -> DecodeOutcome:
    return _decode_with(geometry, pattern, min_weight_matching)


def oracle_decode(geometry: LinkGeometry, pattern: ErrorPattern) -> DecodeOutcome:
    """Same contract as :func:`decode`, matching found by exhaustive enumeration."""
    if len(extract_detections(geometry, pattern)) > MAX_ORACLE_DEFECTS:
        raise ValueError(f"oracle decoding supports at most {MAX_ORACLE_DEFECTS} defects")
    return _decode_with(geometry, pattern, exhaustive_matching)


class LatticeMatcher:
    """Batch decoder that matches directly on the bond lattice.

    Shortest paths through the lattice give the same defect-graph metric as
    :class:`MatchingGraph`, so the optimum weight is identical. Only the
    crossing parity of the correction on the cut column is tracked.
    """

    def __init__(self, geometry: LinkGeometry):
        self.geometry = geometry
        self._cut = geometry.cut_mask
        self._faults = sp.csc_matrix(self._cut.astype(np.uint8)[None, :])
        self._trivial = geometry.num_vertices == 0
        self._plain = None if self._trivial else self._engine(None)

    def _engine(self, erased: np.ndarray | None) -> pymatching.Matching:
        weights = None if erased is None else np.where(erased, 0.0, 1.0)
        return pymatching.Matching.from_check_matrix(
            self.geometry.check_matrix, weights=weights, faults_matrix=self._faults
        )

    def predict(self, syndromes: np.ndarray, erasures: np.ndarray | None = None) -> np.ndarray:
        """Correction crossing parity per shot, ``(n,)`` booleans."""
        syndromes = np.atleast_2d(np.asarray(syndromes, dtype=np.uint8))
        n = syndromes.shape[0]
        if self._trivial:
            return np.zeros(n, dtype=bool)
        out = np.zeros(n, dtype=bool)
        lossy = np.zeros(n, dtype=bool) if erasures is None else np.asarray(erasures).any(axis=1)
        clean = ~lossy
        if clean.any():
            out[clean] = self._plain.decode_batch(syndromes[clean])[:, 0].astype(bool)
        for s in np.flatnonzero(lossy):
            if syndromes[s].any():
                out[s] = bool(self._engine(erasures[s]).decode(syndromes[s])[0])
        return out

    def failures(self, flips: np.ndarray, erasures: np.ndarray | None = None) -> np.ndarray:
        flips = np.atleast_2d(flips)
        crossing = np.count_nonzero(flips & self._cut, axis=1) % 2 == 1
        return crossing ^ self.predict(syndrome_of(self.geometry, flips), erasures)

    def matching_weight(self, flips: np.ndarray, erasures: np.ndarray | None = None) -> int:
        syndrome = syndrome_of(self.geometry, np.asarray(flips))
        if self._trivial or not syndrome.any():
            return 0
        engine = self._plain if erasures is None or not np.any(erasures) else self._engine(erasures)
        _, weight = engine.decode(syndrome, return_weight=True)
        return int(round(weight))
