"""Scoring: exploration efficiency, graph similarity, exploration ratio, leaderboards."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter, deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .core import round2
from .maps import MapGraph
from .parsing import MoveAction, ReportedGraph

GED_MAX_NODES = 12


# --- efficiency ------------------------------------------------------------

def find_shortest_paths(
    edges: Iterable[tuple[int, int]],
    visited: set[int],
    seen: set[int],
    current: int,
) -> set[tuple[int, ...]]:
    """All minimum-length walks from ``current`` covering ``seen - visited``.

    Walks run over the undirected edges among seen rooms and may revisit
    rooms. Breadth-first over walks, dropping any walk that has already
    reached the best length found.
    """
    frontier = set(seen) - set(visited)
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        if a in seen and b in seen:
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
    for v in adj.values():
        v.sort()

    found: set[tuple[int, ...]] = set()
    min_len = math.inf
    queue = deque([(current,)])
    while queue:
        path = queue.popleft()
        if frontier.issubset(path):
            if len(path) < min_len:
                found = set()
                min_len = len(path)
            if len(path) == min_len:
                found.add(path)
            continue
        if len(path) >= min_len:
            continue
        for nxt in adj.get(path[-1], ()):
            queue.append(path + (nxt,))
    return found


@dataclass
class ExplorationTrace:
    """Replay of accepted moves on a map: one flag per accepted action."""

    good_moves: list[bool]
    visited: set[int]
    current: int
    steps: int
    done: bool


@lru_cache(maxsize=1 << 16)
def optimal_next_rooms(edges: frozenset[tuple[int, int]], visited: frozenset[int], current: int) -> frozenset[int]:
    """Second rooms of all shortest covering walks; empty when nothing is left to visit.

    Depends only on the map's edges and the exploration state, so replays of
    many episodes on one map share the search.
    """
    seen = set(visited)
    for a, b in edges:
        if a in visited:
            seen.add(b)
        if b in visited:
            seen.add(a)
    paths = find_shortest_paths(edges, set(visited), seen, current)
    return frozenset(p[1] for p in paths if len(p) > 1)


def trace_moves(m: MapGraph, actions: Sequence[MoveAction], start: int | None = None) -> ExplorationTrace:
    """Flag each accepted action as good or bad against the seen graph.

    Moves with no exit in their direction are rejected by the environment and
    get no flag. DONE is good iff nothing seen is left unvisited; it ends the replay.
    """
    current = m.start if start is None else start
    visited = {current}
    flags: list[bool] = []
    steps = 0
    for action in actions:
        good = optimal_next_rooms(m.edges, frozenset(visited), current)
        if action.is_done:
            flags.append(not good)
            return ExplorationTrace(flags, visited, current, steps, True)
        nxt = m.exits(current).get(action.direction)
        if nxt is None:
            continue
        flags.append(nxt in good)
        current = nxt
        visited.add(nxt)
        steps += 1
    return ExplorationTrace(flags, visited, current, steps, False)


def efficiency_from_flags(flags: Sequence[bool]) -> float:
    return 100.0 * sum(flags) / len(flags) if flags else 0.0


def efficiency(m: MapGraph, actions: Sequence[MoveAction]) -> float:
    return efficiency_from_flags(trace_moves(m, actions).good_moves)


def exploration(n_visited: int, n_rooms: int) -> float:
    return 100.0 * n_visited / n_rooms


# --- graph similarity ------------------------------------------------------

@dataclass(frozen=True)
class LabeledGraph:
    labels: tuple[str, ...]
    edges: frozenset[tuple[int, int]]

    @classmethod
    def build(cls, labels: Sequence[str], edges: Iterable[tuple[int, int]]) -> LabeledGraph:
        return cls(tuple(labels), frozenset((a, b) if a <= b else (b, a) for a, b in edges))

    @classmethod
    def from_reported(cls, g: ReportedGraph) -> LabeledGraph:
        """Rooms are identified by name; direction labels are dropped."""
        names = list(dict.fromkeys(g.nodes))
        index = {n: i for i, n in enumerate(names)}
        pairs = [(index[a], index[b]) for ps in g.edges.values() for a, b in ps]
        return cls.build(names, pairs)

    @classmethod
    def induced(cls, m: MapGraph, nodes: Iterable[int]) -> LabeledGraph:
        keep = sorted(nodes)
        index = {v: i for i, v in enumerate(keep)}
        pairs = [(index[a], index[b]) for a, b in m.edges if a in index and b in index]
        return cls.build([m.category(v) for v in keep], pairs)

    def adjacency(self) -> list[list[int]]:
        n = len(self.labels)
        adj = [[0] * n for _ in range(n)]
        for a, b in self.edges:
            adj[a][b] = adj[b][a] = 1
        return adj


def graph_edit_distance(g1: LabeledGraph, g2: LabeledGraph, max_nodes: int = GED_MAX_NODES) -> int:
    """Exact unit-cost GED on undirected node-labelled graphs.

    Node/edge insertion and deletion and node relabelling each cost 1.
    Depth-first branch and bound over mappings of g1's nodes onto g2's nodes
    (or deletion).
    """
    n1, n2 = len(g1.labels), len(g2.labels)
    if max(n1, n2) > max_nodes:
        raise ValueError(f"exact GED limited to {max_nodes} nodes, got {n1} and {n2}")
    a1, a2 = g1.adjacency(), g2.adjacency()
    lab1, lab2 = g1.labels, g2.labels
    order = sorted(range(n1), key=lambda u: (-sum(a1[u]), u))
    # g1 edges touching order[k:], for the edge bound
    touch1 = []
    for k in range(n1 + 1):
        rest = set(order[k:])
        touch1.append(sum(1 for a, b in g1.edges if a in rest or b in rest))

    best = [len(g1.edges) + len(g2.edges) + n1 + n2]
    used = [False] * n2
    assign: list[int] = [-1] * n1  # -1 = deleted
    rest1 = Counter(lab1)
    rest2 = Counter(lab2)

    def bound(k: int) -> int:
        r1, r2 = n1 - k, sum(rest2.values())
        common = sum((rest1 & rest2).values())
        node_lb = max(r1, r2) - common
        t2 = sum(1 for a, b in g2.edges if not used[a] or not used[b])
        return node_lb + abs(touch1[k] - t2)

    def finish(cost: int) -> int:
        free = [v for v in range(n2) if not used[v]]
        cost += len(free)
        cost += sum(1 for a, b in g2.edges if not used[a] or not used[b])
        return cost

    def dfs(k: int, cost: int) -> None:
        if cost + bound(k) >= best[0]:
            return
        if k == n1:
            best[0] = min(best[0], finish(cost))
            return
        u = order[k]
        done = order[:k]
        lu = lab1[u]
        rest1[lu] -= 1
        candidates = sorted((v for v in range(n2) if not used[v]), key=lambda v: (lab2[v] != lu, v))
        for v in candidates:
            c = cost + (lab2[v] != lu) + (a1[u][u] != a2[v][v])
            for w in done:
                vw = assign[w]
                c += a1[u][w] if vw < 0 else (a1[u][w] != a2[v][vw])
            used[v] = True
            assign[u] = v
            rest2[lab2[v]] -= 1
            dfs(k + 1, c)
            rest2[lab2[v]] += 1
            used[v] = False
        c = cost + 1 + a1[u][u] + sum(a1[u][w] for w in done)
        assign[u] = -1
        dfs(k + 1, c)
        rest1[lu] += 1
        assign[u] = -1

    dfs(0, 0)
    return best[0]


def similarity_from_distance(dist: float) -> float:
    norm = 2.0 * (1.0 / (1.0 + math.exp(-0.5 * dist)) - 0.5)
    return 100.0 * (1.0 - norm)


def graph_similarity(generated: LabeledGraph, truth: LabeledGraph, max_nodes: int = GED_MAX_NODES) -> float:
    return similarity_from_distance(graph_edit_distance(generated, truth, max_nodes))


# --- leaderboard -----------------------------------------------------------

@dataclass
class Leaderboard:
    columns: list[str]
    rows: list[list]

    def _cells(self) -> list[list[str]]:
        out = []
        for row in self.rows:
            out.append([c if isinstance(c, str) else ("" if c is None else round2(c)) for c in row])
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows(self._cells())
        return buf.getvalue()

    def to_text(self) -> str:
        cells = [self.columns] + self._cells()
        widths = [max(len(r[i]) for r in cells) for i in range(len(self.columns))]
        lines = []
        for j, r in enumerate(cells):
            parts = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
            lines.append("  ".join(parts).rstrip())
            if j == 0:
                lines.append("-" * len(lines[0]))
        return "\n".join(lines) + "\n"


def build_leaderboard(results: Sequence) -> Leaderboard:
    """Rows sorted by clemscore (descending), ties broken by model id."""
    if not results:
        raise ValueError("no results")
    ids = [r.model for r in results]
    dupes = sorted(k for k, c in Counter(ids).items() if c > 1)
    if dupes:
        raise ValueError(f"duplicate model ids: {dupes}")
    games = sorted({g for r in results for g in r.per_game})
    columns = ["model", "clemscore", "avg %p", "avg ql"]
    for g in games:
        columns += [f"{g} %p", f"{g} ql"]
    rows = []
    for r in sorted(results, key=lambda r: (-r.clemscore, r.model)):
        row = [r.model, r.clemscore, r.avg_played, r.avg_quality]
        for g in games:
            s = r.per_game.get(g)
            row += [None, None] if s is None else [s.percent_played, s.avg_quality]
        rows.append(row)
    return Leaderboard(columns, rows)
