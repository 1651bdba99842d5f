"""4-connected grid graphs, Manhattan distance and tunnels around paths."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence


class Coord(NamedTuple):
    row: int
    col: int

    def __repr__(self) -> str:
        return f"({self.row},{self.col})"


def as_coord(c) -> Coord:
    if isinstance(c, Coord):
        return c
    r, c2 = c
    return Coord(int(r), int(c2))


def manhattan(a: Sequence[int], b: Sequence[int]) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


@dataclass(frozen=True)
class GridMap:
    """A width x height grid. `blocked` holds the static obstacles of the map."""

    width: int
    height: int
    blocked: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.height}x{self.width}")
        blocked = frozenset(as_coord(c) for c in self.blocked)
        for c in blocked:
            if not self.in_bounds(c):
                raise ValueError(f"blocked cell {c} outside {self.height}x{self.width} grid")
        object.__setattr__(self, "blocked", blocked)

    def in_bounds(self, c: Sequence[int]) -> bool:
        return 0 <= c[0] < self.height and 0 <= c[1] < self.width

    def cells(self) -> Iterable[Coord]:
        for r in range(self.height):
            for c in range(self.width):
                yield Coord(r, c)

    def passable(self, c: Sequence[int]) -> bool:
        return self.in_bounds(c) and Coord(*c) not in self.blocked

    @property
    def diameter(self) -> int:
        return (self.width - 1) + (self.height - 1)

    def neighbors(self, c: Sequence[int]) -> list[Coord]:
        return neighbors(self, c)


def neighbors(grid: GridMap, c: Sequence[int]) -> list[Coord]:
    """In-bounds orthogonal neighbours in up, down, left, right order.

    Blocked cells are *not* filtered out; obstacles are handled by the
    occupancy constraints of the encoding.
    """
    if not grid.in_bounds(c):
        raise ValueError(f"{tuple(c)} is outside the {grid.height}x{grid.width} grid")
    r, col = c
    out = []
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        nr, nc = r + dr, col + dc
        if 0 <= nr < grid.height and 0 <= nc < grid.width:
            out.append(Coord(nr, nc))
    return out


def bfs_distances(grid: GridMap, source: Sequence[int], blocked=None) -> dict[Coord, int]:
    """Shortest-path distances from `source` avoiding `blocked` (defaults to the map's)."""
    blocked = grid.blocked if blocked is None else blocked
    src = as_coord(source)
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in neighbors(grid, u):
            if v not in dist and v not in blocked:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


@dataclass(frozen=True)
class Tunnel:
    agent: object
    width: int
    vertices: frozenset

    def __contains__(self, c) -> bool:
        return c in self.vertices

    def edges(self, grid: GridMap) -> set[tuple[Coord, Coord]]:
        """Edges of the induced subgraph, as ordered pairs in both directions."""
        return {(u, v) for u in self.vertices for v in neighbors(grid, u) if v in self.vertices}


def compute_tunnel(grid: GridMap, path: Sequence[Sequence[int]], w: int, agent=None) -> Tunnel:
    """All in-bounds cells within Manhattan distance `w` of some path vertex.

    Blocked cells stay members; a tunnel is purely geometric.
    """
    if not path:
        raise ValueError("cannot build a tunnel around an empty path")
    if w < 0:
        raise ValueError(f"tunnel width must be nonnegative, got {w}")
    pts = {as_coord(v) for v in path}
    for v in pts:
        if not grid.in_bounds(v):
            raise ValueError(f"path vertex {v} outside the grid")
    members = set()
    for (r, c) in pts:
        for dr in range(-w, w + 1):
            span = w - abs(dr)
            for dc in range(-span, span + 1):
                u = (r + dr, c + dc)
                if grid.in_bounds(u):
                    members.add(Coord(*u))
    return Tunnel(agent=agent, width=w, vertices=frozenset(members))
