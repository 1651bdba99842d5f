import pytest
from hypothesis import given, strategies as st

from dmapf.grid import Coord, GridMap, bfs_distances, compute_tunnel, manhattan, neighbors


def test_neighbors_interior_corner_single():
    assert neighbors(GridMap(3, 3), (1, 1)) == [(0, 1), (2, 1), (1, 0), (1, 2)]
    assert neighbors(GridMap(3, 3), (0, 0)) == [(1, 0), (0, 1)]
    assert neighbors(GridMap(1, 1), (0, 0)) == []


def test_neighbors_ignores_obstacles():
    g = GridMap(3, 1, frozenset({Coord(0, 1)}))
    assert Coord(0, 1) in neighbors(g, (0, 0))


def test_neighbors_out_of_bounds():
    with pytest.raises(ValueError):
        neighbors(GridMap(2, 2), (2, 0))


def test_manhattan_examples():
    assert manhattan((0, 0), (2, 3)) == 5
    assert manhattan((4, 4), (4, 4)) == 0
    assert manhattan((1, 5), (3, 2)) == 5


def test_gridmap_validation():
    with pytest.raises(ValueError):
        GridMap(0, 3)
    with pytest.raises(ValueError):
        GridMap(2, 2, frozenset({(2, 2)}))
    assert GridMap(4, 3).diameter == 5


def test_tunnel_width0_is_path():
    g = GridMap(5, 5)
    path = [(0, 0), (0, 1), (1, 1), (2, 1)]
    assert compute_tunnel(g, path, 0).vertices == set(path)


def test_tunnel_width1_matches_scan():
    g = GridMap(5, 5)
    want = {c for c in g.cells() if manhattan(c, (2, 2)) <= 1}
    assert want == {(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)}
    assert compute_tunnel(g, [(2, 2)], 1).vertices == want


def test_tunnel_full_path_and_blocked_membership():
    g = GridMap(2, 2, frozenset({Coord(1, 1)}))
    assert compute_tunnel(g, list(g.cells()), 0).vertices == set(g.cells())
    assert Coord(1, 1) in compute_tunnel(g, [(0, 1)], 1)


def test_tunnel_errors():
    with pytest.raises(ValueError):
        compute_tunnel(GridMap(2, 2), [], 1)
    with pytest.raises(ValueError):
        compute_tunnel(GridMap(2, 2), [(0, 0)], -1)
    with pytest.raises(ValueError):
        compute_tunnel(GridMap(2, 2), [(5, 0)], 0)


def test_tunnel_edges_are_induced():
    g = GridMap(3, 3)
    t = compute_tunnel(g, [(0, 0), (0, 1)], 0)
    assert t.edges(g) == {((0, 0), (0, 1)), ((0, 1), (0, 0))}


def test_bfs_distances_avoid_blocked():
    g = GridMap(3, 2, frozenset({Coord(0, 1)}))
    d = bfs_distances(g, (0, 0))
    assert d[Coord(0, 2)] == 4 and Coord(0, 1) not in d


sizes = st.tuples(st.integers(1, 7), st.integers(1, 7))


@st.composite
def grid_and_path(draw):
    w, h = draw(sizes)
    g = GridMap(w, h)
    cells = list(g.cells())
    path = draw(st.lists(st.sampled_from(cells), min_size=1, max_size=6))
    return g, path


@given(grid_and_path(), st.integers(0, 6), st.integers(0, 6))
def test_tunnel_monotone_in_width(gp, w1, w2):
    g, path = gp
    lo, hi = sorted((w1, w2))
    assert compute_tunnel(g, path, lo).vertices <= compute_tunnel(g, path, hi).vertices


@given(grid_and_path())
def test_tunnel_wide_enough_covers_grid(gp):
    g, path = gp
    assert compute_tunnel(g, path, g.width + g.height).vertices == set(g.cells())


@given(grid_and_path(), st.integers(0, 4))
def test_tunnel_membership_matches_definition(gp, w):
    g, path = gp
    t = compute_tunnel(g, path, w)
    for c in g.cells():
        assert (c in t) == (min(manhattan(c, v) for v in path) <= w)


@given(sizes, st.data())
def test_neighbors_symmetric(size, data):
    g = GridMap(*size)
    a = data.draw(st.sampled_from(list(g.cells())))
    for b in neighbors(g, a):
        assert a in neighbors(g, b)
