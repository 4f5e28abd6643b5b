import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlinksim.lattice import (
    BOUNDARY,
    BondKind,
    VertexId,
    bond_of_bell_pair,
    build_geometry,
    path_distance,
    space_bond,
    time_bond,
)


def reference_graph(geometry, erased=()):
    """Independent lattice model: vertices plus two boundary terminals."""
    g = nx.MultiGraph()
    erased = set(erased)
    d, t = geometry.d, geometry.t
    for r in range(1, t + 1):
        for i in range(1, d + 1):
            left = (i - 1, r) if i > 1 else "L"
            right = (i, r) if i < d else "R"
            g.add_edge(left, right, weight=0 if space_bond(i, r) in erased else 1)
        if not geometry.perfect_measurement:
            for j in range(1, d):
                g.add_edge((j, r), (j, r + 1), weight=0 if time_bond(j, r) in erased else 1)
    return g


def reference_distance(geometry, a, b, erased=()):
    g = reference_graph(geometry, erased)
    if b is BOUNDARY:
        return min(nx.shortest_path_length(g, tuple(a), side, weight="weight") for side in ("L", "R"))
    # a vertex-to-vertex chain may not run through a boundary terminal
    g.remove_nodes_from(["L", "R"])
    return nx.shortest_path_length(g, tuple(a), tuple(b), weight="weight")


def path_is_chain(geometry, a, b, path):
    """A chain's odd-degree vertices are exactly its non-boundary ends."""
    degree = {}
    for bond in path:
        for site in geometry.endpoints(bond):
            degree[site] = degree.get(site, 0) + 1
    odd = {s for s, k in degree.items() if k % 2 and s is not BOUNDARY}
    return odd == {a, b} - {BOUNDARY}


@pytest.mark.parametrize(
    "d,t,perfect,bonds,grid",
    [(3, 1, False, 5, (2, 2)), (3, 3, False, 15, (2, 4)), (5, 5, True, 25, (4, 6))],
)
def test_build_geometry_examples(d, t, perfect, bonds, grid):
    g = build_geometry(d, t, perfect)
    assert g.num_bonds == bonds
    assert g.vertex_grid == grid
    if perfect:
        assert all(b.kind is BondKind.SPACE for b in g.bonds)


def test_build_geometry_counts():
    g = build_geometry(3, 1)
    assert g.num_space_bonds == 3 and g.num_time_bonds == 2


@pytest.mark.parametrize("d,t", [(0, 1), (3, 0), (-1, 2)])
def test_build_geometry_rejects(d, t):
    with pytest.raises(ValueError):
        build_geometry(d, t)


@pytest.mark.parametrize(
    "pair,r,expected",
    [(1, 2, space_bond(1, 2)), (4, 1, time_bond(2, 1)), (5, 1, space_bond(3, 1))],
)
def test_bond_of_bell_pair(pair, r, expected):
    assert bond_of_bell_pair(build_geometry(3, 3), pair, r) == expected


@pytest.mark.parametrize("pair,r", [(0, 1), (6, 1), (1, 4), (1, 0)])
def test_bond_of_bell_pair_out_of_range(pair, r):
    with pytest.raises(ValueError):
        bond_of_bell_pair(build_geometry(3, 3), pair, r)


def test_bond_repr():
    assert repr(space_bond(2, 1)) == "Space(2,1)"
    assert repr(time_bond(1, 3)) == "Time(1,3)"


def test_path_distance_examples():
    g = build_geometry(5, 5)
    w, path = path_distance(g, VertexId(2, 2), VertexId(2, 4))
    assert w == 2 and set(path) == {time_bond(2, 2), time_bond(2, 3)}

    w, path = path_distance(g, VertexId(1, 3), BOUNDARY)
    assert w == 1 and path == [space_bond(1, 3)]

    g3 = build_geometry(3, 1)
    w, path = path_distance(g3, VertexId(1, 1), VertexId(2, 1), erased={space_bond(2, 1)})
    assert w == 0 and path == [space_bond(2, 1)]
    assert reference_distance(g3, VertexId(1, 1), VertexId(2, 1), {space_bond(2, 1)}) == 0


def test_boundary_to_boundary():
    assert path_distance(build_geometry(3, 3), BOUNDARY, BOUNDARY) == (0, [])


def test_unreachable_layers_rejected():
    g = build_geometry(5, 3, perfect_measurement=True)
    with pytest.raises(ValueError):
        path_distance(g, VertexId(1, 1), VertexId(1, 2))


@pytest.mark.parametrize("d,t,perfect", [(1, 1, False), (3, 2, False), (4, 3, False), (5, 2, True)])
def test_incidence_symmetric(d, t, perfect):
    g = build_geometry(d, t, perfect)
    for bond in g.bonds:
        for site in g.endpoints(bond):
            if site is not BOUNDARY:
                assert bond in g.incident_bonds(site)
    for v in g.vertices:
        for bond in g.incident_bonds(v):
            assert v in g.endpoints(bond)


def test_incidence_rule():
    g = build_geometry(5, 4)
    for v in g.vertices:
        j, r = v
        expected = set()
        if r <= g.t:
            expected |= {space_bond(j, r), space_bond(j + 1, r), time_bond(j, r)}
        if r >= 2:
            expected.add(time_bond(j, r - 1))
        assert set(g.incident_bonds(v)) == expected


def test_check_matrix_matches_incidence():
    g = build_geometry(5, 3)
    h = g.check_matrix.toarray()
    for v in g.vertices:
        row = h[g.vertex_index[v]]
        assert set(g.bonds_of(row.astype(bool))) == set(g.incident_bonds(v))


@pytest.mark.parametrize("d", range(2, 8))
@pytest.mark.parametrize("t", [1, 4, 7])
def test_manhattan_and_boundary_exhaustive(d, t):
    g = build_geometry(d, t)
    # the readout layer t+1 has no space bonds; sideways moves step back a round
    for a, b in itertools.combinations(g.vertices, 2):
        detour = 2 if a.r == b.r == t + 1 and a.j != b.j else 0
        assert path_distance(g, a, b)[0] == abs(a.j - b.j) + abs(a.r - b.r) + detour
    for v in g.vertices:
        extra = 1 if v.r == t + 1 else 0
        assert path_distance(g, v, BOUNDARY)[0] == min(v.j, d - v.j) + extra


vertex_triples = st.integers(2, 9).flatmap(
    lambda d: st.integers(1, 9).flatmap(
        lambda t: st.tuples(
            st.just(d),
            st.just(t),
            st.lists(st.tuples(st.integers(1, d - 1), st.integers(1, t + 1)), min_size=3, max_size=3),
        )
    )
)


@given(vertex_triples)
def test_path_distance_is_metric(case):
    d, t, points = case
    g = build_geometry(d, t)
    a, b, c = (VertexId(*p) for p in points)

    def dist(x, y):
        return 0 if x == y else path_distance(g, x, y)[0]

    assert dist(a, b) >= 0
    assert dist(a, b) == dist(b, a)
    assert dist(a, c) <= dist(a, b) + dist(b, c)


erased_cases = st.integers(2, 6).flatmap(
    lambda d: st.integers(1, 5).flatmap(
        lambda t: st.tuples(
            st.just(d),
            st.just(t),
            st.lists(st.integers(0, 10_000), max_size=12),
            st.tuples(st.integers(1, d - 1), st.integers(1, t + 1)),
            st.one_of(st.none(), st.tuples(st.integers(1, d - 1), st.integers(1, t + 1))),
        )
    )
)


@settings(max_examples=300)
@given(erased_cases)
def test_erased_distance_matches_reference(case):
    d, t, picks, a, b = case
    g = build_geometry(d, t)
    erased = {g.bonds[k % g.num_bonds] for k in picks}
    a = VertexId(*a)
    b = BOUNDARY if b is None else VertexId(*b)
    if a == b:
        return
    w, path = path_distance(g, a, b, erased)
    assert w == reference_distance(g, a, b, erased)
    assert w == sum(0 if bond in erased else 1 for bond in path)
    assert path_is_chain(g, a, b, path)


def test_cut_column():
    assert build_geometry(3, 1).cut_column == 2
    assert build_geometry(5, 1).cut_column == 3
    g = build_geometry(5, 3)
    assert set(g.bonds_of(g.cut_mask)) == {space_bond(3, r) for r in (1, 2, 3)}


def test_mask_round_trip():
    g = build_geometry(5, 5)
    rng = np.random.default_rng(0)
    mask = rng.random(g.num_bonds) < 0.3
    assert np.array_equal(g.mask_of(g.bonds_of(mask)), mask)
