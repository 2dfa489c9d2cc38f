"""Directed waypoint graph the robots travel on.

Nodes sit on a 1 m grid (plus station / parking stubs just outside it).
Edges are axis-aligned and carry a cardinal heading so path search and
motion timing can charge for turns.
"""

from __future__ import annotations

import math

# Cardinal headings, counterclockwise from +x.
EAST, NORTH, WEST, SOUTH = 0, 1, 2, 3

_HEADING_VECTORS = {EAST: (1, 0), NORTH: (0, 1), WEST: (-1, 0), SOUTH: (0, -1)}


def turn_steps(a: int | None, b: int) -> int:
    """Number of 90-degree turns between two headings (a reversal counts as 2).

    A missing incoming heading (start of a trip) turns for free.
    """
    if a is None or a == b:
        return 0
    d = abs(a - b)
    return min(d, 4 - d)


def heading_between(ax: float, ay: float, bx: float, by: float) -> int:
    dx, dy = bx - ax, by - ay
    if abs(dx) >= abs(dy):
        return EAST if dx > 0 else WEST
    return NORTH if dy > 0 else SOUTH


class WaypointGraph:
    """Adjacency-list digraph with per-edge length and heading."""

    def __init__(self):
        self.coords: list[tuple[float, float]] = []
        self.out_edges: list[list[tuple[int, float, int]]] = []
        self.in_edges: list[list[tuple[int, float, int]]] = []

    def __len__(self) -> int:
        return len(self.coords)

    def add_node(self, x: float, y: float) -> int:
        self.coords.append((float(x), float(y)))
        self.out_edges.append([])
        self.in_edges.append([])
        return len(self.coords) - 1

    def add_edge(self, u: int, v: int) -> None:
        ux, uy = self.coords[u]
        vx, vy = self.coords[v]
        length = math.hypot(vx - ux, vy - uy)
        heading = heading_between(ux, uy, vx, vy)
        self.out_edges[u].append((v, length, heading))
        self.in_edges[v].append((u, length, heading))

    def add_bidirectional(self, u: int, v: int) -> None:
        self.add_edge(u, v)
        self.add_edge(v, u)

    def euclid(self, u: int, v: int) -> float:
        ux, uy = self.coords[u]
        vx, vy = self.coords[v]
        return math.hypot(vx - ux, vy - uy)

    def reachable_from(self, start: int) -> set[int]:
        """Forward BFS; used for the one-off connectivity audit."""
        seen = {start}
        frontier = [start]
        while frontier:
            nxt = []
            for u in frontier:
                for v, _, _ in self.out_edges[u]:
                    if v not in seen:
                        seen.add(v)
                        nxt.append(v)
            frontier = nxt
        return seen

    def co_reachable_to(self, goal: int) -> set[int]:
        """Backward BFS: all nodes with a directed path into ``goal``."""
        seen = {goal}
        frontier = [goal]
        while frontier:
            nxt = []
            for u in frontier:
                for v, _, _ in self.in_edges[u]:
                    if v not in seen:
                        seen.add(v)
                        nxt.append(v)
            frontier = nxt
        return seen
