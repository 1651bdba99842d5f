"""Instance generators: diagonal-corner setups, random instances, map downsampling."""

from __future__ import annotations

import random
import re
from typing import Optional

from .grid import Coord, GridMap, bfs_distances
from .model import Agent, DmapfInstance, Event, EventSequence, MapfInstance


def _corner_cells(size: int, corner: Coord, n: int, rng: random.Random, avoid=()) -> list[Coord]:
    """`n` cells closest to `corner`, layer by layer; the last layer is shuffled."""
    layers: dict[int, list[Coord]] = {}
    for r in range(size):
        for c in range(size):
            cell = Coord(r, c)
            if cell in avoid:
                continue
            layers.setdefault(abs(r - corner.row) + abs(c - corner.col), []).append(cell)
    out = []
    for d in sorted(layers):
        layer = layers[d]
        if len(out) + len(layer) > n:
            layer = sorted(layer)
            rng.shuffle(layer)
            out.extend(layer[: n - len(out)])
            break
        out.extend(layer)
        if len(out) == n:
            break
    return out


def mirror(c: Coord, size: int) -> Coord:
    return Coord(size - 1 - c.row, size - 1 - c.col)


def gen_diagonal_instance(n: int, size: int, seed: int = 0) -> MapfInstance:
    """`n` agents starting near (0,0), each heading to its mirrored cell near the opposite corner.

    Starts are taken from the anti-diagonal layers on the start corner's side
    of the grid, so at most size*(size+1)/2 agents fit.
    """
    limit = size * (size + 1) // 2
    if n < 1 or n > limit:
        raise ValueError(f"{n} diagonal agents do not fit on a {size}x{size} grid (at most {limit})")
    rng = random.Random(seed)
    inits = _corner_cells(size, Coord(0, 0), n, rng)
    agents = [Agent(f"a{i}", c, mirror(c, size)) for i, c in enumerate(inits)]
    return MapfInstance(GridMap(size, size), agents)


def parse_setup(setup: str) -> tuple[int, list[int]]:
    """"20+5" -> (20, [5]); "30+2+2" -> (30, [2, 2])."""
    if not re.fullmatch(r"\d+(\+\d+)*", setup.strip()):
        raise ValueError(f"bad setup {setup!r}; expected something like 20+5")
    parts = [int(p) for p in setup.strip().split("+")]
    return parts[0], parts[1:]


def gen_diagonal_setup(setup: str, size: int, seed: int = 0) -> DmapfInstance:
    """Diagonal base instance plus joiner groups at t=1, 2, ...

    Joiner groups alternate between the (0, size-1) and (size-1, 0) corners
    and head to the mirrored cell near the opposite corner, so consecutive
    groups do not appear on top of each other.
    """
    n, groups = parse_setup(setup)
    base = gen_diagonal_instance(n, size, seed)
    rng = random.Random(seed + 1)
    taken_inits = {a.init for a in base.agents}
    taken_goals = {a.goal for a in base.agents}
    corners = [Coord(0, size - 1), Coord(size - 1, 0)]
    events, i = [], 0
    for k, count in enumerate(groups, start=1):
        corner = corners[(k - 1) % 2]
        pool = _corner_cells(size, corner, size * size, rng, avoid=taken_inits)
        pool = [c for c in pool if mirror(c, size) not in taken_goals]
        if count > len(pool):
            raise ValueError(f"not enough free cells for {count} joining agents at t={k}")
        joiners = []
        for c in pool[:count]:
            joiners.append(Agent(f"j{i}", c, mirror(c, size), join=k))
            taken_inits.add(c)
            taken_goals.add(mirror(c, size))
            i += 1
        events.append(Event(k, agents_join=tuple(joiners)))
    return DmapfInstance(base=base, events=EventSequence(events))


def random_instance(width: int, height: int, n_agents: int, n_obstacles: int = 0,
                    seed: int = 0, rng: Optional[random.Random] = None) -> MapfInstance:
    """Random obstacles and distinct start/goal cells, each goal reachable from its start."""
    rng = rng or random.Random(seed)
    cells = [Coord(r, c) for r in range(height) for c in range(width)]
    if n_obstacles + n_agents > len(cells):
        raise ValueError("grid too small for the requested agents and obstacles")
    for _ in range(1000):
        blocked = set(rng.sample(cells, n_obstacles))
        free = [c for c in cells if c not in blocked]
        inits = rng.sample(free, n_agents)
        goals = rng.sample(free, n_agents)
        grid = GridMap(width, height, frozenset(blocked))
        if all(g in bfs_distances(grid, s) for s, g in zip(inits, goals)):
            agents = [Agent(f"a{i}", s, g) for i, (s, g) in enumerate(zip(inits, goals))]
            return MapfInstance(grid, agents)
    raise ValueError("could not place connected start/goal pairs")


def random_joiners(base: MapfInstance, n: int, k: int, rng: random.Random, prefix: str = "j") -> list[Agent]:
    """Joining agents on free cells that are not used as a start or goal by anyone."""
    grid = base.grid
    used = {a.init for a in base.agents} | {a.goal for a in base.agents}
    free = [c for c in grid.cells() if c not in grid.blocked and c not in used]
    if 2 * n > len(free):
        raise ValueError("not enough free cells for the joining agents")
    picks = rng.sample(free, 2 * n)
    return [Agent(f"{prefix}{i}", picks[2 * i], picks[2 * i + 1], join=k) for i in range(n)]


def downsample_map(grid: GridMap, size: int) -> GridMap:
    """Scale a map to size x size; a target cell is blocked if at least half its source cells are."""
    if size < 1:
        raise ValueError("target size must be positive")
    blocked = set()
    for R in range(size):
        r0, r1 = R * grid.height // size, max((R + 1) * grid.height // size, R * grid.height // size + 1)
        for C in range(size):
            c0, c1 = C * grid.width // size, max((C + 1) * grid.width // size, C * grid.width // size + 1)
            src = [(r, c) for r in range(r0, min(r1, grid.height)) for c in range(c0, min(c1, grid.width))]
            hits = sum((r, c) in grid.blocked for r, c in src)
            if src and 2 * hits >= len(src):
                blocked.add(Coord(R, C))
    return GridMap(size, size, frozenset(blocked))
