"""Turn-aware travel-time estimation on the waypoint graph.

Search states are (node, incoming heading) so every 90-degree heading
change costs a fixed penalty (a reversal costs two). The estimator keeps
two caches over the static graph: full single-source time maps, and
concrete node paths per (source, target) pair.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .graph import WaypointGraph, turn_steps


class PathTimeEstimator:
    """Travel-time estimates at constant cruise speed plus turn penalties."""

    def __init__(self, graph: WaypointGraph, cruise_speed: float = 1.5, turn_penalty: float = 2.5):
        if cruise_speed <= 0:
            raise ValueError("cruise speed must be positive")
        if turn_penalty < 0:
            raise ValueError("turn penalty must be nonnegative")
        self.graph = graph
        self.cruise_speed = cruise_speed
        self.turn_penalty = turn_penalty
        self._time_maps: dict[int, dict[int, float]] = {}
        self._path_cache: dict[tuple[int, int], tuple[int, ...] | None] = {}

    # -- times -----------------------------------------------------------

    def time_from(self, source: int) -> dict[int, float]:
        """Minimal travel time from ``source`` to every reachable node.

        The initial heading is free; arrival heading is unconstrained.
        """
        cached = self._time_maps.get(source)
        if cached is not None:
            return cached
        out = self.graph.out_edges
        speed = self.cruise_speed
        pen = self.turn_penalty
        dist: dict[int, float] = {}
        heap: list[tuple[float, int, int]] = []
        for v, length, h in out[source]:
            state = (v << 2) | h
            cost = length / speed
            if cost < dist.get(state, float("inf")):
                dist[state] = cost
                heapq.heappush(heap, (cost, state, h))
        while heap:
            cost, state, h = heapq.heappop(heap)
            if cost > dist.get(state, float("inf")):
                continue
            u = state >> 2
            for v, length, h2 in out[u]:
                nxt = (v << 2) | h2
                ncost = cost + length / speed + pen * turn_steps(h, h2)
                if ncost < dist.get(nxt, float("inf")):
                    dist[nxt] = ncost
                    heapq.heappush(heap, (ncost, nxt, h2))
        best: dict[int, float] = {source: 0.0}
        for state, cost in dist.items():
            node = state >> 2
            if cost < best.get(node, float("inf")):
                best[node] = cost
        self._time_maps[source] = best
        return best

    def path_time(self, a: int, b: int) -> float | None:
        """Seconds from node a to node b, or None when unreachable."""
        return self.time_from(a).get(b)

    def clear_cache(self) -> None:
        self._time_maps.clear()
        self._path_cache.clear()

    # -- concrete routes ---------------------------------------------------

    def plan_path(self, a: int, b: int, banned=frozenset()) -> tuple[int, ...] | None:
        """Minimal-time node path from a to b (A*), or None when unreachable.

        ``banned`` nodes are treated as temporarily removed; such queries
        bypass the cache.
        """
        if a == b:
            return (a,)
        use_cache = not banned
        if use_cache:
            hit = self._path_cache.get((a, b), 0)
            if hit != 0:
                return hit
        path = self._astar(a, b, banned)
        if use_cache:
            self._path_cache[(a, b)] = path
        return path

    def _astar(self, a: int, b: int, banned) -> tuple[int, ...] | None:
        graph = self.graph
        out = graph.out_edges
        speed = self.cruise_speed
        pen = self.turn_penalty
        bx, by = graph.coords[b]
        coords = graph.coords

        def h_of(node: int) -> float:
            x, y = coords[node]
            return ((x - bx) ** 2 + (y - by) ** 2) ** 0.5 / speed

        dist: dict[int, float] = {}
        parent: dict[int, int] = {}
        heap: list[tuple[float, int, int]] = []
        seq = 0
        for v, length, hd in out[a]:
            if v in banned:
                continue
            state = (v << 2) | hd
            cost = length / speed
            if cost < dist.get(state, float("inf")):
                dist[state] = cost
                parent[state] = -1
                heapq.heappush(heap, (cost + h_of(v), seq, state))
                seq += 1
        while heap:
            f, _, state = heapq.heappop(heap)
            node = state >> 2
            cost = dist[state]
            if f - h_of(node) > cost + 1e-12:
                continue
            if node == b:
                rev = [node]
                cur = state
                while parent[cur] != -1:
                    cur = parent[cur]
                    rev.append(cur >> 2)
                rev.append(a)
                rev.reverse()
                return tuple(rev)
            hd = state & 3
            for v, length, h2 in out[node]:
                if v in banned:
                    continue
                nxt = (v << 2) | h2
                ncost = cost + length / speed + pen * turn_steps(hd, h2)
                if ncost < dist.get(nxt, float("inf")):
                    dist[nxt] = ncost
                    parent[nxt] = state
                    heapq.heappush(heap, (ncost + h_of(v), seq, nxt))
                    seq += 1
        return None


@dataclass
class ProminenceField:
    """Per-storage-location minimal travel time to the closest pick station."""

    values: dict[int, float]

    def of(self, location_id: int) -> float:
        return self.values[location_id]

    def __len__(self) -> int:
        return len(self.values)


def prominence(world, estimator: PathTimeEstimator, location_id: int) -> float:
    """Travel time from one storage location to the nearest pick station."""
    stations = world.pick_stations()
    if not stations:
        raise ValueError("world has no pick stations")
    waypoint = world.locations[location_id].waypoint
    times = [estimator.path_time(waypoint, s.waypoint) for s in stations]
    finite = [t for t in times if t is not None]
    if not finite:
        raise ValueError(f"storage location {location_id} cannot reach any pick station")
    return min(finite)


def compute_prominence_field(world, estimator: PathTimeEstimator) -> ProminenceField:
    """All prominences in one multi-source sweep over the reversed graph.

    A backward state (node, h) carries the cost of the best forward path
    from ``node`` to any pick station whose first edge leaves with heading
    h; extending backward over an in-edge charges the turn between the new
    edge and that first heading, which mirrors the forward turn cost.
    """
    graph = world.graph
    speed = estimator.cruise_speed
    pen = estimator.turn_penalty
    in_edges = graph.in_edges

    dist: dict[int, float] = {}
    heap: list[tuple[float, int, int]] = []
    for station in world.pick_stations():
        for w, length, h in in_edges[station.waypoint]:
            state = (w << 2) | h
            cost = length / speed
            if cost < dist.get(state, float("inf")):
                dist[state] = cost
                heapq.heappush(heap, (cost, state, h))
    if not heap:
        raise ValueError("world has no pick stations")
    while heap:
        cost, state, h = heapq.heappop(heap)
        if cost > dist.get(state, float("inf")):
            continue
        u = state >> 2
        for w, length, h2 in in_edges[u]:
            nxt = (w << 2) | h2
            ncost = cost + length / speed + pen * turn_steps(h2, h)
            if ncost < dist.get(nxt, float("inf")):
                dist[nxt] = ncost
                heapq.heappush(heap, (ncost, nxt, h2))

    best: dict[int, float] = {}
    for state, cost in dist.items():
        node = state >> 2
        if cost < best.get(node, float("inf")):
            best[node] = cost
    values = {}
    for loc in world.locations:
        t = best.get(loc.waypoint)
        if t is None:
            raise ValueError(f"storage location {loc.id} cannot reach any pick station")
        values[loc.id] = t
    return ProminenceField(values)
