"""Facility layout generation.

The storage area is a grid of 2x4 storage blocks separated by one-way
aisles, wrapped in a perimeter ring road. Replenishment stations hang off
the west side, pick stations off the east side, and each station is a
small one-way loop (entry, two queue cells, processing head, exit) so
robots queue physically. Every robot also gets access to dedicated
parking stubs so idle robots never block traffic.

Grid arithmetic, for h horizontal and v vertical (internal) aisles:
    width  = 3*v + 4 cells, height = 5*h + 6 cells
    storage locations = 8 * (h+1) * (v+1)
The four built-in layouts carry pod counts equal to 85% of that location
count.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import WaypointGraph
from .world import PICK, REPLENISH, Pod, Station, StorageLocation, World


@dataclass(frozen=True)
class LayoutSpec:
    name: str
    pick_stations: int
    replenish_stations: int
    aisles_horizontal: int
    aisles_vertical: int
    pods: int

    def validate(self) -> None:
        for label in ("pick_stations", "replenish_stations", "aisles_horizontal", "aisles_vertical"):
            if getattr(self, label) < 1:
                raise ValueError(f"layout {self.name}: {label} must be >= 1")
        if self.pods < 0:
            raise ValueError(f"layout {self.name}: pods must be >= 0")


BUILTIN_LAYOUTS = {
    "Small": LayoutSpec("Small", 4, 4, 8, 10, 673),
    "Wide": LayoutSpec("Wide", 8, 8, 16, 10, 1271),
    "Long": LayoutSpec("Long", 4, 4, 8, 22, 1407),
    "Large": LayoutSpec("Large", 8, 8, 16, 22, 2658),
}


def storage_location_count(spec: LayoutSpec) -> int:
    return 8 * (spec.aisles_horizontal + 1) * (spec.aisles_vertical + 1)


def grid_dimensions(spec: LayoutSpec) -> tuple[int, int]:
    return 3 * spec.aisles_vertical + 4, 5 * spec.aisles_horizontal + 6


def _station_rows(count: int, height: int) -> list[int]:
    rows = [round((i + 1) * height / (count + 1)) for i in range(count)]
    if len(set(rows)) != count:
        raise ValueError("station rows collide; layout too small for station count")
    return rows


def generate_layout(spec: LayoutSpec, pod_capacity: int = 40) -> World:
    """Build the full world (graph, locations, stations, empty pods)."""
    spec.validate()
    n_locations = storage_location_count(spec)
    if spec.pods > n_locations:
        raise ValueError(
            f"layout {spec.name}: {spec.pods} pods exceed the {n_locations} "
            f"storage locations this grid provides"
        )

    width, height = grid_dimensions(spec)
    aisle_cols = {0, width - 1} | {3 * k for k in range(1, spec.aisles_vertical + 1)}
    aisle_rows = {0, height - 1} | {5 * j for j in range(1, spec.aisles_horizontal + 1)}

    graph = WaypointGraph()
    node_of = {}
    for y in range(height):
        for x in range(width):
            node_of[(x, y)] = graph.add_node(x, y)

    # Ring road, clockwise: west column north, top row east, east column
    # south, bottom row west.
    col_dir = {0: +1, width - 1: -1}
    for k in range(1, spec.aisles_vertical + 1):
        col_dir[3 * k] = -1 if k % 2 == 1 else +1
    row_dir = {0: -1, height - 1: +1}
    for j in range(1, spec.aisles_horizontal + 1):
        row_dir[5 * j] = +1 if j % 2 == 1 else -1

    for x, d in col_dir.items():
        ys = range(height - 1) if d > 0 else range(height - 1, 0, -1)
        for y in ys:
            graph.add_edge(node_of[(x, y)], node_of[(x, y + d)])
    for y, d in row_dir.items():
        xs = range(width - 1) if d > 0 else range(width - 1, 0, -1)
        for x in xs:
            graph.add_edge(node_of[(x, y)], node_of[(x + d, y)])

    world = World(graph, spec, width, height)

    # Storage cells, each a bidirectional stub off its flanking aisle.
    for y in range(height):
        if y in aisle_rows:
            continue
        for x in range(width):
            if x in aisle_cols:
                continue
            aisle_x = x - 1 if (x % 3) == 1 else x + 1
            graph.add_bidirectional(node_of[(x, y)], node_of[(aisle_x, y)])
            loc = StorageLocation(len(world.locations), node_of[(x, y)], x, y)
            world.locations.append(loc)
    world.index_locations()

    # Stations: east side picks (entered from the north, ring runs south),
    # west side replenishment (entered from the south, ring runs north).
    def build_station(kind: str, head_row: int) -> Station:
        east = kind == PICK
        sx = width if east else -1
        ring_x = width - 1 if east else 0
        step = 1 if east else -1  # queue extends against ring flow
        rows = [head_row + 2 * step, head_row + 1 * step, head_row]
        nodes = [graph.add_node(sx, r) for r in rows]
        graph.add_edge(node_of[(ring_x, rows[0])], nodes[0])
        graph.add_edge(nodes[0], nodes[1])
        graph.add_edge(nodes[1], nodes[2])
        graph.add_edge(nodes[2], node_of[(ring_x, head_row)])
        return Station(
            id=len(world.stations),
            kind=kind,
            waypoint=nodes[2],
            entry_waypoint=nodes[0],
            queue_waypoints=nodes[:2],
        )

    pick_rows = _station_rows(spec.pick_stations, height)
    repl_rows = _station_rows(spec.replenish_stations, height)
    used_east = set()
    for r in pick_rows:
        world.stations.append(build_station(PICK, r))
        used_east.update({r, r + 1, r + 2})
    used_west = set()
    for r in repl_rows:
        world.stations.append(build_station(REPLENISH, r))
        used_west.update({r, r - 1, r - 2})

    # Parking stubs on both sides, one robot each, assigned at run setup.
    for y in range(1, height - 1):
        if y not in used_east:
            stub = graph.add_node(width, y)
            graph.add_bidirectional(node_of[(width - 1, y)], stub)
            world.parking_nodes_east.append(stub)
        if y not in used_west:
            stub = graph.add_node(-1, y)
            graph.add_bidirectional(node_of[(0, y)], stub)
            world.parking_nodes_west.append(stub)

    _audit_reachability(world)

    # Pods fill the locations nearest (straight-line) to a pick station head.
    pick_heads = [graph.coords[s.waypoint] for s in world.pick_stations()]

    def nearest_pick(loc: StorageLocation) -> float:
        return min((loc.grid_x - px) ** 2 + (loc.grid_y - py) ** 2 for px, py in pick_heads)

    order = sorted(world.locations, key=lambda loc: (nearest_pick(loc), loc.id))
    for loc in order[: spec.pods]:
        pod = Pod(len(world.pods), pod_capacity)
        pod.placement = ("stored", loc.id)
        loc.occupant = pod.id
        world.pods.append(pod)

    return world


def _audit_reachability(world: World) -> None:
    """Every location must reach every pick station; every replenishment
    station must reach every location; the working graph is strongly
    connected over locations and stations."""
    graph = world.graph
    loc_nodes = [loc.waypoint for loc in world.locations]
    for station in world.pick_stations():
        into = graph.co_reachable_to(station.waypoint)
        missing = [n for n in loc_nodes if n not in into]
        if missing:
            raise AssertionError(f"{len(missing)} locations cannot reach pick station {station.id}")
    for station in world.replenish_stations():
        out = graph.reachable_from(station.waypoint)
        missing = [n for n in loc_nodes if n not in out]
        if missing:
            raise AssertionError(f"replenish station {station.id} cannot reach {len(missing)} locations")
    anchor = loc_nodes[0]
    fwd = graph.reachable_from(anchor)
    bwd = graph.co_reachable_to(anchor)
    relevant = set(loc_nodes) | {s.waypoint for s in world.stations}
    stranded = [n for n in relevant if n not in fwd or n not in bwd]
    if stranded:
        raise AssertionError(f"{len(stranded)} waypoints break strong connectivity")
