"""Lattice-embedded room graphs and their procedural generation."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

# north = +y, south = -y, east = +x, west = -x
OFFSETS = {"north": (0, 1), "south": (0, -1), "east": (1, 0), "west": (-1, 0)}
OPPOSITE = {"north": "south", "south": "north", "east": "west", "west": "east"}

# ADE20K indoor scene categories
ROOM_CATEGORIES = (
    "Attic", "Art Studio", "Balcony", "Bar", "Basement", "Bathroom", "Bedroom",
    "Cafeteria", "Classroom", "Closet", "Conference Room", "Corridor", "Dining Room",
    "Dorm Room", "Game Room", "Garage", "Gym", "Home Office", "Home Theater",
    "Hotel Room", "Kitchen", "Laundry Room", "Library", "Living Room", "Lobby",
    "Music Studio", "Nursery", "Pantry", "Playroom", "Reception", "Sauna",
    "Sewing Room", "Shower", "Staircase", "Storage Room", "Television Room",
    "Utility Room", "Waiting Room", "Wine Cellar",
)

G2X_BUCKETS = {"on": (0, 0), "close": (1, 2), "far": (3, 4)}


class MapGenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Room:
    id: int
    coord: tuple[int, int]
    category: str
    image: str | None = None


@dataclass(frozen=True)
class MapGraph:
    rooms: tuple[Room, ...]
    edges: frozenset[tuple[int, int]]
    start: int
    target: int | None = None
    _adj: dict = field(default=None, init=False, compare=False, repr=False, hash=False)

    def __post_init__(self):
        adj: dict[int, dict[str, int]] = {r.id: {} for r in self.rooms}
        coords = {r.id: r.coord for r in self.rooms}
        for a, b in self.edges:
            d = direction_between(coords[a], coords[b])
            if d is None:
                raise ValueError(f"edge {a}-{b} joins non-adjacent cells")
            adj[a][d] = b
            adj[b][OPPOSITE[d]] = a
        object.__setattr__(self, "_adj", adj)

    @property
    def node_ids(self) -> list[int]:
        return [r.id for r in self.rooms]

    def room(self, node: int) -> Room:
        return self.rooms[node]

    def category(self, node: int) -> str:
        return self.rooms[node].category

    def exits(self, node: int) -> dict[str, int]:
        return self._adj[node]

    def neighbors(self, node: int) -> list[int]:
        return sorted(self._adj[node].values())

    def with_endpoints(self, start: int, target: int | None) -> MapGraph:
        return replace(self, start=start, target=target)

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"id": r.id, "coord": list(r.coord), "category": r.category, "image": r.image}
                for r in self.rooms
            ],
            "edges": sorted([a, b] for a, b in self.edges),
            "start": self.start,
            "target": self.target,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> MapGraph:
        rooms = tuple(
            Room(int(n["id"]), (int(n["coord"][0]), int(n["coord"][1])), n["category"], n.get("image"))
            for n in sorted(d["nodes"], key=lambda n: n["id"])
        )
        edges = frozenset(_edge(int(a), int(b)) for a, b in d["edges"])
        return cls(rooms, edges, int(d["start"]), None if d.get("target") is None else int(d["target"]))


def _edge(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def direction_between(a: tuple[int, int], b: tuple[int, int]) -> str | None:
    delta = (b[0] - a[0], b[1] - a[1])
    for d, off in OFFSETS.items():
        if off == delta:
            return d
    return None


def bfs_distances(m: MapGraph, source: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in m.neighbors(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def check_map(m: MapGraph) -> None:
    """Raise ValueError unless ``m`` satisfies every map invariant."""
    ids = m.node_ids
    if ids != list(range(len(ids))):
        raise ValueError("room ids must be 0..n-1 in order")
    coords = [r.coord for r in m.rooms]
    if len(set(coords)) != len(coords):
        raise ValueError("two rooms share a coordinate")
    for a, b in m.edges:
        if a == b or a not in range(len(ids)) or b not in range(len(ids)):
            raise ValueError(f"bad edge {a}-{b}")
        ca, cb = coords[a], coords[b]
        if abs(ca[0] - cb[0]) + abs(ca[1] - cb[1]) != 1:
            raise ValueError(f"edge {a}-{b} is not lattice-adjacent")
    for node in ids:
        exits = m.exits(node)
        if len(exits) > 4:
            raise ValueError(f"room {node} has degree {len(exits)}")
        for d, other in exits.items():
            if m.exits(other).get(OPPOSITE[d]) != node:
                raise ValueError(f"inconsistent direction labels at {node}")
    if m.start not in ids:
        raise ValueError("start is not a room")
    if m.target is not None and m.target not in ids:
        raise ValueError("target is not a room")
    if len(bfs_distances(m, m.start)) != len(ids):
        raise ValueError("map is not connected")


def _assign_categories(n: int, ambiguity, rng: np.random.Generator, categories: Sequence[str]) -> list[str]:
    if ambiguity is None:
        repeated, times = 0, 1
    else:
        repeated, times = ambiguity
        if repeated < 1 or times < 2:
            raise ValueError("ambiguity (k, m) needs k >= 1 and m >= 2")
    n_distinct = n - repeated * times
    if n_distinct < 0:
        raise ValueError(f"ambiguity {ambiguity} needs more than {n} rooms")
    if repeated + n_distinct > len(categories):
        raise ValueError("not enough room categories")
    picked = [categories[i] for i in rng.choice(len(categories), repeated + n_distinct, replace=False)]
    labels = [c for c in picked[:repeated] for _ in range(times)] + picked[repeated:]
    return [labels[i] for i in rng.permutation(n)]


def gen_map(
    n_rooms: int,
    cycle: bool,
    rng: np.random.Generator,
    ambiguity: tuple[int, int] | None = None,
    categories: Sequence[str] = ROOM_CATEGORIES,
    max_retries: int = 100,
) -> MapGraph:
    """Grow a random tree on the square lattice, optionally closing one loop.

    Each room after the first is attached to a uniformly chosen existing room
    through a free neighbouring cell. ``cycle`` adds one extra edge between
    lattice-adjacent rooms that the tree left unconnected.
    """
    if n_rooms < 1:
        raise ValueError("n_rooms must be positive")
    if cycle and n_rooms < 4:
        raise ValueError("a lattice cycle needs at least 4 rooms")
    directions = list(OFFSETS.values())
    for _ in range(max_retries):
        coords = [(0, 0)]
        occupied = {(0, 0): 0}
        edges: set[tuple[int, int]] = set()
        while len(coords) < n_rooms:
            parent = int(rng.integers(len(coords)))
            dx, dy = directions[int(rng.integers(4))]
            cell = (coords[parent][0] + dx, coords[parent][1] + dy)
            if cell in occupied:
                continue
            occupied[cell] = len(coords)
            coords.append(cell)
            edges.add(_edge(parent, len(coords) - 1))
        if cycle:
            candidates = sorted(
                _edge(i, occupied[(x + dx, y + dy)])
                for i, (x, y) in enumerate(coords)
                for dx, dy in ((1, 0), (0, 1))
                if (x + dx, y + dy) in occupied
                and _edge(i, occupied[(x + dx, y + dy)]) not in edges
            )
            if not candidates:
                continue
            edges.add(candidates[int(rng.integers(len(candidates)))])
        min_x = min(c[0] for c in coords)
        min_y = min(c[1] for c in coords)
        labels = _assign_categories(n_rooms, ambiguity, rng, categories)
        rooms = tuple(
            Room(i, (x - min_x, y - min_y), labels[i]) for i, (x, y) in enumerate(coords)
        )
        m = MapGraph(rooms, frozenset(edges), int(rng.integers(n_rooms)))
        check_map(m)
        return m
    raise MapGenerationError(f"no valid map after {max_retries} attempts")


def select_g2x_endpoints(
    m: MapGraph, bucket: str, rng: np.random.Generator, unique_target: bool = True
) -> tuple[int, int]:
    """Pick (start, target) with BFS distance inside the bucket."""
    lo, hi = G2X_BUCKETS[bucket]
    counts: dict[str, int] = {}
    for r in m.rooms:
        counts[r.category] = counts.get(r.category, 0) + 1
    pairs = []
    for s in m.node_ids:
        dist = bfs_distances(m, s)
        for t, d in sorted(dist.items()):
            if lo <= d <= hi and (not unique_target or counts[m.category(t)] == 1):
                pairs.append((s, t))
    if not pairs:
        raise MapGenerationError(f"no start/target pair at distance {lo}..{hi}")
    return pairs[int(rng.integers(len(pairs)))]


def assign_images(m: MapGraph, catalog: Mapping[str, Sequence[str]], rng: np.random.Generator) -> MapGraph:
    """Attach one image reference per room, drawn from ``catalog[category]``."""
    rooms = []
    for r in m.rooms:
        options = catalog.get(r.category)
        if not options:
            raise ValueError(f"no image for category {r.category!r}")
        rooms.append(replace(r, image=options[int(rng.integers(len(options)))]))
    return MapGraph(tuple(rooms), m.edges, m.start, m.target)
