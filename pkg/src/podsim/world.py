"""Domain state: SKUs, pods, storage locations, stations, robots, orders.

A ``World`` owns everything a single simulation run mutates. All mutation
happens inside one event loop; nothing here is shared between runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import WaypointGraph

# Pod placement tags.
STORED = "stored"
CARRIED = "carried"
AT_STATION = "station"

PICK = "pick"
REPLENISH = "replenish"

OPEN = "open"
ASSIGNED = "assigned"
COMPLETED = "completed"


class SkuCatalog:
    """SKU ids 0..n-1 with their relative order-line frequencies."""

    def __init__(self, frequencies):
        freq = np.asarray(frequencies, dtype=float)
        if freq.ndim != 1 or len(freq) == 0:
            raise ValueError("catalog needs a non-empty 1-d frequency vector")
        if np.any(freq < 0):
            raise ValueError("frequencies must be nonnegative")
        if abs(float(freq.sum()) - 1.0) > 1e-9:
            raise ValueError("frequencies must sum to 1 within 1e-9")
        self.frequencies = freq

    def __len__(self) -> int:
        return len(self.frequencies)

    def frequency(self, sku: int) -> float:
        if not 0 <= sku < len(self.frequencies):
            raise KeyError(f"unknown sku {sku}")
        return float(self.frequencies[sku])


@dataclass
class Pod:
    """Movable storage unit. ``inventory`` maps sku -> units (>0 entries only)."""

    id: int
    capacity: int
    inventory: dict[int, int] = field(default_factory=dict)
    placement: tuple[str, int] = (STORED, -1)

    def units(self) -> int:
        return sum(self.inventory.values())

    def free_capacity(self) -> int:
        return self.capacity - self.units()

    def add(self, sku: int, qty: int = 1) -> None:
        if qty > self.free_capacity():
            raise ValueError(f"pod {self.id} over capacity")
        self.inventory[sku] = self.inventory.get(sku, 0) + qty

    def remove(self, sku: int, qty: int = 1) -> None:
        have = self.inventory.get(sku, 0)
        if have < qty:
            raise ValueError(f"pod {self.id} lacks {qty} of sku {sku}")
        if have == qty:
            del self.inventory[sku]
        else:
            self.inventory[sku] = have - qty


@dataclass
class StorageLocation:
    id: int
    waypoint: int
    grid_x: int
    grid_y: int
    occupant: int | None = None  # pod id
    reserved_for: int | None = None  # pod id of an inbound trip

    def is_free(self) -> bool:
        return self.occupant is None and self.reserved_for is None


@dataclass
class Station:
    """Pick or replenishment station with a short physical approach queue."""

    id: int
    kind: str  # PICK | REPLENISH
    waypoint: int  # processing head node
    entry_waypoint: int
    queue_waypoints: list[int]
    unit_time: float = 10.0
    queue: list[int] = field(default_factory=list)  # robot ids queued/processing
    orders: list = field(default_factory=list)  # open orders assigned here
    inbound_claims: dict[int, dict[int, int]] = field(default_factory=dict)
    # inbound_claims: robot id -> {sku: units planned} for dispatched trips

    def claimed_units(self, sku: int) -> int:
        return sum(c.get(sku, 0) for c in self.inbound_claims.values())


@dataclass
class RobotAgent:
    id: int
    node: int
    heading: int
    role: str  # "pick" | "replenish" | "reposition"
    station_id: int | None = None  # home station for pick/replenish roles
    parking_node: int = -1
    carried: int | None = None  # pod id
    task: object | None = None
    speed: float = 0.0
    position: tuple[float, float] = (0.0, 0.0)


@dataclass
class CustomerOrder:
    id: int
    lines: list[list[int]]  # [sku, remaining qty] pairs
    station_id: int
    state: str = OPEN
    creation_time: float = 0.0
    completion_time: float | None = None

    def remaining_units(self) -> int:
        return sum(q for _, q in self.lines)


@dataclass
class ReplenishmentOrder:
    id: int
    sku: int
    quantity: int  # remaining units to load
    station_id: int
    state: str = OPEN


class World:
    """All static and dynamic state of one simulated facility."""

    def __init__(self, graph: WaypointGraph, spec, grid_width: int, grid_height: int):
        self.graph = graph
        self.spec = spec
        self.grid_width = grid_width
        self.grid_height = grid_height
        self.locations: list[StorageLocation] = []
        self.stations: list[Station] = []
        self.pods: list[Pod] = []
        self.robots: list[RobotAgent] = []
        self.catalog: SkuCatalog | None = None
        self.parking_nodes_east: list[int] = []
        self.parking_nodes_west: list[int] = []
        self.clock = 0.0

        self.customer_orders: dict[int, CustomerOrder] = {}
        self.replenishment_orders: dict[int, ReplenishmentOrder] = {}
        self._demand: np.ndarray | None = None  # open units per sku

        # Conservation counters.
        self.units_picked = 0
        self.units_replenished = 0
        self.initial_units = 0

    # -- station views -------------------------------------------------

    def pick_stations(self) -> list[Station]:
        return [s for s in self.stations if s.kind == PICK]

    def replenish_stations(self) -> list[Station]:
        return [s for s in self.stations if s.kind == REPLENISH]

    def location_at_waypoint(self, waypoint: int) -> StorageLocation | None:
        return self._loc_by_waypoint.get(waypoint)

    def index_locations(self) -> None:
        self._loc_by_waypoint = {loc.waypoint: loc for loc in self.locations}

    # -- demand --------------------------------------------------------

    def attach_catalog(self, catalog: SkuCatalog) -> None:
        self.catalog = catalog
        self._demand = np.zeros(len(catalog), dtype=np.int64)

    def demand(self, sku: int, t: float | None = None) -> int:
        """Unfulfilled units of ``sku`` over open and assigned customer orders."""
        if self.catalog is None or not 0 <= sku < len(self.catalog):
            raise KeyError(f"unknown sku {sku}")
        return int(self._demand[sku])

    def demand_vector(self) -> np.ndarray:
        return self._demand

    def add_demand(self, sku: int, qty: int) -> None:
        self._demand[sku] += qty

    def recompute_demand(self) -> np.ndarray:
        """Direct summation over the order backlog (slow; audits the counter)."""
        fresh = np.zeros(len(self.catalog), dtype=np.int64)
        for order in self.customer_orders.values():
            if order.state == COMPLETED:
                continue
            for sku, qty in order.lines:
                fresh[sku] += qty
        return fresh

    # -- aggregate measures ---------------------------------------------

    def fill_level(self) -> float:
        cap = sum(p.capacity for p in self.pods)
        if cap == 0:
            return 0.0
        return sum(p.units() for p in self.pods) / cap

    def total_units(self) -> int:
        return sum(p.units() for p in self.pods)

    def open_customer_orders(self) -> int:
        return sum(1 for o in self.customer_orders.values() if o.state != COMPLETED)

    def open_replenishment_orders(self) -> int:
        return sum(1 for o in self.replenishment_orders.values() if o.state != COMPLETED)

    # -- invariant audits ------------------------------------------------

    def check_unit_conservation(self) -> None:
        in_pods = self.total_units()
        if in_pods + self.units_picked != self.initial_units + self.units_replenished:
            raise AssertionError(
                f"unit conservation broken: pods={in_pods} picked={self.units_picked} "
                f"initial={self.initial_units} replenished={self.units_replenished}"
            )

    def check_placement_bijection(self) -> None:
        for loc in self.locations:
            if loc.occupant is not None:
                pod = self.pods[loc.occupant]
                if pod.placement != (STORED, loc.id):
                    raise AssertionError(
                        f"location {loc.id} lists pod {loc.occupant} but pod is at {pod.placement}"
                    )
        for pod in self.pods:
            kind, ref = pod.placement
            if kind == STORED and self.locations[ref].occupant != pod.id:
                raise AssertionError(
                    f"pod {pod.id} claims location {ref} occupied by {self.locations[ref].occupant}"
                )

    def check_demand_counter(self) -> None:
        fresh = self.recompute_demand()
        if not np.array_equal(fresh, self._demand):
            bad = int(np.flatnonzero(fresh != self._demand)[0])
            raise AssertionError(
                f"demand counter drift at sku {bad}: counter={self._demand[bad]} actual={fresh[bad]}"
            )

    def placement_multiset(self) -> tuple:
        """Sorted (pod, location) pairs of all stored pods."""
        return tuple(sorted((loc.occupant, loc.id) for loc in self.locations if loc.occupant is not None))
