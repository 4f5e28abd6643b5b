"""Spacetime bond lattice of a single repeater link.

Bell pair ``2i-1`` of round ``r`` carries the data qubit ``i`` across the link
(a *space* bond); pair ``2j`` carries the outcome of stabilizer ``j`` (a *time*
bond). Detection vertices ``(j, r)`` record a change of stabilizer ``j`` at
layer ``r``; layer 1 compares against the known initial projection and layer
``t + 1`` against the perfect final readout. The left and right spatial
boundaries sit at data indices 0 and ``d``.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Union

import numpy as np
import scipy.sparse as sp


class BondKind(str, enum.Enum):
    SPACE = "space"
    TIME = "time"


class BondId(NamedTuple):
    kind: BondKind
    position: int
    round: int

    def __repr__(self) -> str:
        name = "Space" if self.kind is BondKind.SPACE else "Time"
        return f"{name}({self.position},{self.round})"


class VertexId(NamedTuple):
    j: int
    r: int


class Boundary(enum.Enum):
    BOUNDARY = "boundary"

    def __repr__(self) -> str:
        return "BOUNDARY"


BOUNDARY = Boundary.BOUNDARY

Site = Union[VertexId, Boundary]


def space_bond(i: int, r: int) -> BondId:
    return BondId(BondKind.SPACE, i, r)


def time_bond(j: int, r: int) -> BondId:
    return BondId(BondKind.TIME, j, r)


@dataclass(frozen=True)
class LinkGeometry:
    """The ``d x t`` bond lattice of one link.

    Bonds are indexed space-first (round-major, then data index) followed by
    time bonds (round-major, then stabilizer index). Vertices are indexed
    layer-major. Index ``-1`` in :attr:`bond_ends` stands for the boundary.
    """

    d: int
    t: int
    perfect_measurement: bool = False

    @property
    def pairs_per_round(self) -> int:
        return 2 * self.d - 1

    @property
    def num_space_bonds(self) -> int:
        return self.d * self.t

    @property
    def num_time_bonds(self) -> int:
        return 0 if self.perfect_measurement else (self.d - 1) * self.t

    @property
    def num_bonds(self) -> int:
        return self.num_space_bonds + self.num_time_bonds

    @property
    def num_vertices(self) -> int:
        return (self.d - 1) * (self.t + 1)

    @property
    def vertex_grid(self) -> tuple[int, int]:
        return (self.d - 1, self.t + 1)

    @property
    def cut_column(self) -> int:
        return (self.d + 1) // 2

    @cached_property
    def bonds(self) -> tuple[BondId, ...]:
        out = [space_bond(i, r) for r in range(1, self.t + 1) for i in range(1, self.d + 1)]
        if not self.perfect_measurement:
            out += [time_bond(j, r) for r in range(1, self.t + 1) for j in range(1, self.d)]
        return tuple(out)

    @cached_property
    def bond_index(self) -> dict[BondId, int]:
        return {b: k for k, b in enumerate(self.bonds)}

    @cached_property
    def vertices(self) -> tuple[VertexId, ...]:
        return tuple(VertexId(j, r) for r in range(1, self.t + 2) for j in range(1, self.d))

    @cached_property
    def vertex_index(self) -> dict[VertexId, int]:
        return {v: k for k, v in enumerate(self.vertices)}

    def has_vertex(self, v: VertexId) -> bool:
        return 1 <= v.j <= self.d - 1 and 1 <= v.r <= self.t + 1

    def has_bond(self, b: BondId) -> bool:
        return b in self.bond_index

    def endpoints(self, bond: BondId) -> tuple[Site, Site]:
        """The two sites a bond joins; data indices 0 and d map to BOUNDARY."""
        if bond not in self.bond_index:
            raise ValueError(f"{bond!r} is not a bond of this lattice")
        if bond.kind is BondKind.SPACE:
            i, r = bond.position, bond.round
            left = VertexId(i - 1, r) if i - 1 >= 1 else BOUNDARY
            right = VertexId(i, r) if i <= self.d - 1 else BOUNDARY
            return left, right
        return VertexId(bond.position, bond.round), VertexId(bond.position, bond.round + 1)

    def incident_bonds(self, v: VertexId) -> tuple[BondId, ...]:
        if not self.has_vertex(v):
            raise ValueError(f"{v!r} is not a vertex of this lattice")
        j, r = v
        out = []
        if r <= self.t:
            out += [space_bond(j, r), space_bond(j + 1, r)]
        if not self.perfect_measurement:
            if r >= 2:
                out.append(time_bond(j, r - 1))
            if r <= self.t:
                out.append(time_bond(j, r))
        return tuple(out)

    @cached_property
    def bond_ends(self) -> np.ndarray:
        ends = np.empty((self.num_bonds, 2), dtype=np.int64)
        for k, b in enumerate(self.bonds):
            for s, site in enumerate(self.endpoints(b)):
                ends[k, s] = -1 if site is BOUNDARY else self.vertex_index[site]
        return ends

    @cached_property
    def check_matrix(self) -> sp.csc_matrix:
        """Vertex-by-bond incidence matrix over GF(2)."""
        ends = self.bond_ends
        rows, cols = [], []
        for k in range(self.num_bonds):
            for v in ends[k]:
                if v >= 0:
                    rows.append(v)
                    cols.append(k)
        data = np.ones(len(rows), dtype=np.uint8)
        return sp.csc_matrix((data, (rows, cols)), shape=(self.num_vertices, self.num_bonds))

    @cached_property
    def cut_mask(self) -> np.ndarray:
        return self.column_mask(self.cut_column)

    def column_mask(self, column: int) -> np.ndarray:
        """Boolean mask selecting Space(column, r) for every round."""
        if not 1 <= column <= self.d:
            raise ValueError(f"column must lie in 1..{self.d}")
        mask = np.zeros(self.num_bonds, dtype=bool)
        for r in range(1, self.t + 1):
            mask[self.bond_index[space_bond(column, r)]] = True
        return mask

    def mask_of(self, bonds: Iterable[BondId]) -> np.ndarray:
        mask = np.zeros(self.num_bonds, dtype=bool)
        for b in bonds:
            mask[self.bond_index[b]] = True
        return mask

    def bonds_of(self, mask: np.ndarray) -> frozenset[BondId]:
        return frozenset(self.bonds[k] for k in np.flatnonzero(mask))


def build_geometry(d: int, t: int, perfect_measurement: bool = False) -> LinkGeometry:
    if int(d) != d or d < 1:
        raise ValueError(f"code distance must be a positive integer, got {d!r}")
    if int(t) != t or t < 1:
        raise ValueError(f"round count must be a positive integer, got {t!r}")
    return LinkGeometry(int(d), int(t), bool(perfect_measurement))


def bond_of_bell_pair(geometry: LinkGeometry, pair_index: int, round: int) -> BondId:
    """Map Bell pair ``pair_index`` (1..2d-1) of a round onto its lattice bond.

    Odd pairs move a data qubit (space bond); even pairs carry a stabilizer
    outcome (time bond).
    """
    if not 1 <= pair_index <= geometry.pairs_per_round:
        raise ValueError(f"pair index must lie in 1..{geometry.pairs_per_round}")
    if not 1 <= round <= geometry.t:
        raise ValueError(f"round must lie in 1..{geometry.t}")
    if pair_index % 2:
        return space_bond((pair_index + 1) // 2, round)
    bond = time_bond(pair_index // 2, round)
    if geometry.perfect_measurement:
        raise ValueError("time bonds are disabled under perfect measurement")
    return bond


def path_distance(
    geometry: LinkGeometry,
    a: Site,
    b: Site,
    erased: Iterable[BondId] = (),
) -> tuple[int, list[BondId]]:
    """Cheapest chain of bonds joining two sites.

    Non-erased bonds cost 1 and erased bonds cost 0. ``BOUNDARY`` means the
    nearer spatial boundary; a vertex-to-vertex chain never passes through it.
    Uses a 0-1 breadth-first search.
    """
    if a is BOUNDARY and b is BOUNDARY:
        return 0, []
    if a is BOUNDARY:
        a, b = b, a
    for site in (a, b):
        if site is not BOUNDARY and not geometry.has_vertex(site):
            raise ValueError(f"{site!r} is not a vertex of this lattice")
    if a == b:
        return 0, []
    erased = set(erased)

    dist: dict[VertexId, int] = {a: 0}
    via: dict[VertexId, tuple[VertexId, BondId]] = {}
    done: set[VertexId] = set()
    best_exit: tuple[int, VertexId, BondId] | None = None
    queue: deque[VertexId] = deque([a])
    while queue:
        u = queue.popleft()
        if u in done:
            continue
        done.add(u)
        if u == b:
            break
        for bond in geometry.incident_bonds(u):
            w = 0 if bond in erased else 1
            p, q = geometry.endpoints(bond)
            other = q if p == u else p
            if other is BOUNDARY:
                if b is BOUNDARY:
                    cand = (dist[u] + w, u, bond)
                    if best_exit is None or cand[0] < best_exit[0]:
                        best_exit = cand
                continue
            nd = dist[u] + w
            if nd < dist.get(other, nd + 1):
                dist[other] = nd
                via[other] = (u, bond)
                if w == 0:
                    queue.appendleft(other)
                else:
                    queue.append(other)

    if (b is BOUNDARY and best_exit is None) or (b is not BOUNDARY and b not in done):
        raise ValueError(f"no chain joins {a!r} and {b!r} on this lattice")
    path: list[BondId] = []
    if b is BOUNDARY:
        weight, node, exit_bond = best_exit
        path.append(exit_bond)
    else:
        weight, node = dist[b], b
    while node != a:
        node, bond = via[node]
        path.append(bond)
    path.reverse()
    return weight, path
