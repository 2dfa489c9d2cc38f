"""Deterministic event-driven execution of one scenario run.

One run owns one world, one event queue and one seeded generator. Robots
move over the waypoint graph in straight rest-to-rest runs timed by the
trapezoidal profile; every run places timed transit reservations on the
nodes it crosses and an open-ended hold on the node it stops at, so no
two robots ever occupy a waypoint at once. Blocked robots wait in place
(lowest robot id wakes first) and re-plan around the obstacle if the wait
drags on; a run never stops on the doorstep of a dead-end stub another
robot must exit through.

The clock starts at 06:00, so in the down-period scenario the daily
replenishment submission lands at +10 h (16:00), the night starts at
+16 h (22:00) and ends at +24 h (06:00). Randomness is consumed in a
fixed order: SKU weight draws, initial pod inventories, initial order
backlog, then stream draws in event order.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .graph import EAST, WEST, heading_between, turn_steps
from .kinematics import KinematicsConfig, time_at_distance
from .layout import LayoutSpec, generate_layout
from .orderstream import OrderStream
from .pathing import PathTimeEstimator, compute_prominence_field
from .policies import (CacheSet, MechanismConfig, build_cache_set, choose_passive_location,
                       compute_cache_threshold, desired_ranks, next_active_move)
from .results import HeatmapSnapshot, RunResult, SamplePoint
from .scoring import (RankTable, _combine, compute_ranks, throughput_upper_bound,
                      well_sortedness_report)
from .world import (AT_STATION, CARRIED, COMPLETED, OPEN, ASSIGNED, PICK, REPLENISH, STORED,
                    CustomerOrder, ReplenishmentOrder, RobotAgent)

DAY = 86400.0
REPLENISH_SUBMIT_OFFSET = 10 * 3600.0  # 16:00 with the clock anchored at 06:00
NIGHT_START_OFFSET = 16 * 3600.0  # 22:00
NIGHT_END_OFFSET = 24 * 3600.0  # 06:00 next day

DOWN_PERIOD = "down-period"
PARALLEL = "parallel"

ROBOT_SPLITS = {
    # robots per pick station: (replenish, pick, repositioner)
    "R1P3A0": (1, 3, 0),
    "R1P2A1": (1, 2, 1),
    "R1P3A1": (1, 3, 1),
}

# Event kinds. Robot arrivals, station unit handling, order arrivals,
# scenario phase changes and metric samples are the externally meaningful
# ones; retry/replan/dispatch/watchdog are engine internals.
EV_ARRIVAL = 0
EV_UNIT = 1
EV_ORDERS = 2
EV_PHASE = 3
EV_SAMPLE = 4
EV_RETRY = 5
EV_REPLAN = 6
EV_DISPATCH = 7
EV_WATCHDOG = 8

WAIT_REPLAN_AFTER = 45.0
DISPATCH_POLL = 60.0


class DeadlockError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    layout: LayoutSpec
    mechanism: MechanismConfig
    horizon: float = 7 * DAY
    repetitions: int = 5
    seed: int = 1
    robot_split: str = "R1P3A0"
    kinematics: KinematicsConfig = field(default_factory=KinematicsConfig)
    # Workload knobs (paper-shaped defaults).
    sku_count: int = 1000
    pod_capacity: int = 40
    initial_fill: float = 0.75
    fill_target: float = 0.75
    customer_backlog: int = 2000
    replenish_backlog: int = 200
    night_orders_per_station: int = 1500
    replenish_order_quantity: int = 20
    pick_order_slots: int = 12  # orders a pick station works on at once
    pick_unit_time: float = 10.0
    replenish_unit_time: float = 10.0
    sample_interval: float = 300.0
    threshold_refresh: float = 900.0

    def __post_init__(self):
        if self.kind not in (DOWN_PERIOD, PARALLEL):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.robot_split not in ROBOT_SPLITS:
            raise ValueError(f"robot split must be one of {sorted(ROBOT_SPLITS)}")
        if not 0 <= self.initial_fill <= 1 or not 0 <= self.fill_target <= 1:
            raise ValueError("fill levels must be fractions")


@dataclass
class Task:
    kind: str  # "pick" | "replenish" | "reposition" | "park"
    stage: str = ""
    station_id: int | None = None
    pod_id: int | None = None
    target_loc: int | None = None
    planned: dict | None = None
    moves: list | None = None
    move_index: int = 0
    start_t: float = 0.0


class ReservationTable:
    """Node occupancy: open-ended holds plus timed transit windows."""

    def __init__(self):
        self.holds: dict[int, tuple[float, int]] = {}  # node -> (start, robot)
        self.transits: dict[int, list[tuple[float, float, int]]] = {}
        self.waiters: dict[int, list[tuple[int, int]]] = {}  # node -> [(robot, epoch)]

    def blocked_by(self, node: int, t0: float, t1: float, robot: int, now: float):
        """None when [t0, t1] is free, else ('hold', holder) or ('transit', clear_t)."""
        hold = self.holds.get(node)
        if hold is not None and hold[1] != robot and t1 > hold[0]:
            return ("hold", hold[1])
        spans = self.transits.get(node)
        if spans:
            live = [s for s in spans if s[1] > now]
            if len(live) != len(spans):
                if live:
                    self.transits[node] = live
                else:
                    del self.transits[node]
                spans = live
            clear = None
            for a, b, r in spans:
                if r != robot and t1 > a and t0 < b:
                    clear = b if clear is None else max(clear, b)
            if clear is not None:
                return ("transit", clear)
        return None

    def add_transit(self, node: int, t0: float, t1: float, robot: int) -> None:
        self.transits.setdefault(node, []).append((t0, t1, robot))

    def set_hold(self, node: int, robot: int, start: float) -> None:
        held = self.holds.get(node)
        if held is not None and held[1] != robot:
            raise AssertionError(f"node {node} already held by robot {held[1]}")
        self.holds[node] = (start, robot)

    def release_hold(self, node: int, robot: int) -> list[tuple[int, int]]:
        held = self.holds.get(node)
        if held is None or held[1] != robot:
            raise AssertionError(f"robot {robot} does not hold node {node}")
        del self.holds[node]
        return self.waiters.pop(node, [])

    def add_waiter(self, node: int, robot: int, epoch: int) -> None:
        self.waiters.setdefault(node, []).append((robot, epoch))


class CachedScores:
    """Combined-score view the policies consume.

    The fleet-wide mapping, normalization maxima and desired ranks refresh
    on the sampling cadence; a single pod's own speed and utility are
    always recomputed exactly against the cached maxima.
    """

    def __init__(self, run: "SimulationRun"):
        self.run = run
        self._map: dict[int, float] = {}
        self._desired: dict[int, int] = {}
        self.max_speed = 0.0
        self.max_utility = 0.0

    def refresh(self) -> None:
        run = self.run
        vec, max_s, max_u = run.combined_score_vector()
        self._map = {i: float(vec[i]) for i in range(len(vec))}
        self.max_speed = max_s
        self.max_utility = max_u
        if self._map:
            self._desired = desired_ranks(self._map, run.rank_table.max_rank)

    def mapping(self) -> dict[int, float]:
        return self._map

    def desired_of(self, pod_id: int) -> int:
        return self._desired[pod_id]

    def score_of(self, pod) -> float:
        run = self.run
        row = run.inventory_matrix[pod.id]
        speed = float(row @ run.stream.frequencies)
        utility = float(np.minimum(row, run.world.demand_vector()).sum())
        return _combine(speed, utility, self.max_speed, self.max_utility,
                        run.config.mechanism.weights)


class SimulationRun:
    """One seeded scenario execution over one world."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.world = generate_layout(config.layout, pod_capacity=config.pod_capacity)
        self.graph = self.world.graph
        kin = config.kinematics
        self.kin = kin
        self.estimator = PathTimeEstimator(self.graph, kin.max_speed, kin.turn_time_90)

        self.stream = OrderStream(self.rng, sku_count=config.sku_count,
                                  replenish_quantity=config.replenish_order_quantity)
        self.world.attach_catalog(self.stream.catalog)

        self.prominence = compute_prominence_field(self.world, self.estimator)
        self.rank_table: RankTable = compute_ranks(self.prominence)
        mech = config.mechanism
        self.cache_set: CacheSet | None = None
        if mech.passive == "C" or mech.active == "C":
            self.cache_set = build_cache_set(self.rank_table, mech.cache_fraction)

        for station in self.world.stations:
            station.active_robot = None
            station.paused = False
            station.window = []
            station.window_size = 0
            station.unit_time = (config.pick_unit_time if station.kind == PICK
                                 else config.replenish_unit_time)

        # Engine mirrors of pod inventories and per-station needs (numpy).
        n_pods = len(self.world.pods)
        self.inventory_matrix = np.zeros((n_pods, config.sku_count), dtype=np.int64)
        self.pod_stored = np.zeros(n_pods, dtype=bool)
        self.stored_sku_units = np.zeros(config.sku_count, dtype=np.int64)
        self.outstanding_replenish = np.zeros(config.sku_count, dtype=np.int64)
        self.pod_claimed = np.zeros(n_pods, dtype=bool)
        self.claimed_pods: set[int] = set()
        self.scores = CachedScores(self)

        self.reservations = ReservationTable()
        self.events: list = []
        self._seq = 0
        self.clock = 0.0
        self.frozen = False  # deactivated-night standstill
        self.night_mode = False  # active-night repositioning window

        self.next_order_id = 0
        self.next_replenishment_id = 0
        self.open_customer_count = 0
        self.open_replenishment_count = 0
        self._round_robin = {PICK: 0, REPLENISH: 0}
        self._dispatch_pending = False
        self._last_activity = 0.0

        self.total_distance = 0.0
        self.moves_executed = 0
        self.orders_completed = 0
        self._completions = deque()  # completion timestamps, trailing hour
        self._trips = deque()  # (t, duration) of pod trips reaching pick stations
        self.series: list[SamplePoint] = []
        self.heatmaps: list[HeatmapSnapshot] = []
        self.extras: dict = {
            "seed": config.seed,
            "scenario": config.kind,
            "layout": config.layout.name,
            "mechanism": mech.label(),
            "robot_split": config.robot_split if config.kind == PARALLEL else "",
            "replenish_submissions": [],
            "night_backlogs": [],
            "night_digests": [],
            "samples_audited": 0,
        }
        self._setup_inventory()
        self._setup_robots()
        self._station_need: dict[int, np.ndarray] = {
            s.id: np.zeros(config.sku_count, dtype=np.int64) for s in self.world.stations
        }
        self._station_claimed: dict[int, np.ndarray] = {
            s.id: np.zeros(config.sku_count, dtype=np.int64) for s in self.world.stations
        }
        self._setup_backlogs()
        self.scores.refresh()
        if self.cache_set is not None:
            self._refresh_threshold()

    # ------------------------------------------------------------------
    # setup

    def _setup_inventory(self) -> None:
        cfg = self.config
        per_pod = round(cfg.initial_fill * cfg.pod_capacity)
        inventories = self.stream.draw_initial_inventory(len(self.world.pods), per_pod)
        for pod, inv in zip(self.world.pods, inventories):
            pod.inventory = dict(sorted(inv.items()))
            for sku, qty in pod.inventory.items():
                self.inventory_matrix[pod.id, sku] = qty
            self.pod_stored[pod.id] = True
        if len(self.world.pods):
            self.stored_sku_units[:] = self.inventory_matrix.sum(axis=0)
        self.world.initial_units = self.world.total_units()

    def _split_counts(self) -> tuple[int, int, int]:
        if self.config.kind == PARALLEL:
            return ROBOT_SPLITS[self.config.robot_split]
        # Down-period fleet: replenishment must outpace picking, or the
        # whole experiment pins to the replenishment rate and pick-side
        # mechanisms cannot move the needle.
        return (2, 3, 0)

    def _setup_robots(self) -> None:
        world = self.world
        repl_per, pick_per, repo_per = self._split_counts()
        picks = world.pick_stations()
        repls = world.replenish_stations()
        east = list(world.parking_nodes_east)
        west = list(world.parking_nodes_west)

        def take_near(pool: list[int], y: float) -> int:
            best = min(pool, key=lambda n: (abs(self.graph.coords[n][1] - y), n))
            pool.remove(best)
            return best

        def spawn(role: str, station_id: int | None, node: int, heading: int) -> None:
            robot = RobotAgent(len(world.robots), node, heading, role,
                               station_id=station_id, parking_node=node)
            robot.position = self.graph.coords[node]
            world.robots.append(robot)
            self.reservations.set_hold(node, robot.id, 0.0)
            robot.pending = [node]
            robot.leg_target = node
            robot.moving = False
            robot.run_len = 0
            robot.run_heading = heading
            robot.wait_epoch = 0
            robot.waiting_on = None
            robot.frozen_pending = False
            robot.divert = False
            robot.abort = False

        for station in picks:
            sy = self.graph.coords[station.waypoint][1]
            for _ in range(pick_per):
                spawn("pick", station.id, take_near(east, sy), WEST)
        for i in range(repl_per * len(picks)):
            station = repls[i % len(repls)]
            sy = self.graph.coords[station.waypoint][1]
            spawn("replenish", station.id, take_near(west, sy), EAST)
        mid = self.world.grid_height / 2
        for _ in range(repo_per * len(picks)):
            spawn("reposition", None, take_near(east, mid), WEST)

    def _setup_backlogs(self) -> None:
        cfg = self.config
        for _ in range(cfg.customer_backlog):
            self._create_customer_order(0.0)
        if cfg.kind == PARALLEL:
            for _ in range(cfg.replenish_backlog):
                self._create_replenishment_order(0.0)

    # ------------------------------------------------------------------
    # events

    def schedule(self, t: float, kind: int, payload=None) -> None:
        if t < self.clock - 1e-9:
            raise AssertionError(f"event kind {kind} scheduled in the past ({t} < {self.clock})")
        heapq.heappush(self.events, (t, self._seq, kind, payload))
        self._seq += 1

    def trigger_dispatch(self) -> None:
        if not self._dispatch_pending:
            self._dispatch_pending = True
            self.schedule(self.clock, EV_DISPATCH, None)

    def execute(self) -> RunResult:
        cfg = self.config
        horizon = cfg.horizon
        if cfg.kind == DOWN_PERIOD:
            day = 0
            while day * DAY < horizon:
                base = day * DAY
                for offset, tag in ((REPLENISH_SUBMIT_OFFSET, "replenish_submit"),
                                    (NIGHT_START_OFFSET, "night_start"),
                                    (NIGHT_END_OFFSET, "night_end")):
                    if base + offset <= horizon:
                        self.schedule(base + offset, EV_PHASE, (tag,))
                day += 1
        for k in range(int(horizon // cfg.sample_interval) + 1):
            self.schedule(k * cfg.sample_interval, EV_SAMPLE, None)
        for k in range(1, int(horizon // DISPATCH_POLL) + 1):
            self.schedule(k * DISPATCH_POLL, EV_DISPATCH, "poll")
        for k in range(1, int(horizon // 3600.0) + 1):
            self.schedule(k * 3600.0, EV_WATCHDOG, None)
        self.trigger_dispatch()

        handlers = {
            EV_ARRIVAL: self._on_arrival,
            EV_UNIT: self._on_unit,
            EV_ORDERS: self._on_orders,
            EV_PHASE: self._on_phase,
            EV_SAMPLE: self._on_sample,
            EV_RETRY: self._on_retry,
            EV_REPLAN: self._on_replan,
            EV_DISPATCH: self._on_dispatch,
            EV_WATCHDOG: self._on_watchdog,
        }
        events = self.events
        while events:
            t, _, kind, payload = heapq.heappop(events)
            if t > horizon + 1e-9:
                break
            if t < self.clock - 1e-9:
                raise AssertionError("event time regression")
            self.clock = t
            handlers[kind](payload)
        return self._finalize()

    # ------------------------------------------------------------------
    # orders and backlogs

    def _station_for_new_order(self, kind: str):
        stations = (self.world.pick_stations() if kind == PICK
                    else self.world.replenish_stations())
        min_len = min(len(s.orders) for s in stations)
        candidates = [s for s in stations if len(s.orders) == min_len]
        idx = self._round_robin[kind] % len(candidates)
        self._round_robin[kind] += 1
        return candidates[idx]

    def _create_customer_order(self, t: float) -> CustomerOrder:
        lines = self.stream.draw_customer_lines()
        station = self._station_for_new_order(PICK)
        order = CustomerOrder(self.next_order_id, lines, station.id, OPEN, t)
        self.next_order_id += 1
        self.world.customer_orders[order.id] = order
        self.open_customer_count += 1
        station.orders.append(order)
        for sku, qty in lines:
            self.world.add_demand(sku, qty)
        if station.window_size < self.config.pick_order_slots and self._fillable(order):
            self._rebuild_station_need(station)
        return order

    def _fillable(self, order, extra=None) -> bool:
        stored = self.stored_sku_units
        if extra is None:
            return all(stored[sku] > 0 for sku, qty in order.lines if qty > 0)
        return all(stored[sku] + extra[sku] > 0 for sku, qty in order.lines if qty > 0)

    def _rebuild_station_need(self, station) -> None:
        """Window need: units of the first ``pick_order_slots`` open orders
        whose remaining lines are all coverable by stored stock (the pod on
        the station's table counts as available to it). Orders that cannot
        currently be picked wait outside the active window."""
        extra = None
        if station.active_robot is not None:
            task = self.world.robots[station.active_robot].task
            if task is not None and task.pod_id is not None:
                extra = self.inventory_matrix[task.pod_id]
        need = self._station_need[station.id]
        need[:] = 0
        taken = 0
        slots = self.config.pick_order_slots
        window = []
        for order in station.orders:
            if taken >= slots:
                break
            if not self._fillable(order, extra):
                continue
            window.append(order)
            taken += 1
            for sku, qty in order.lines:
                need[sku] += qty
        station.window = window
        station.window_size = taken

    def _replenishment_sku(self) -> int:
        """Restock the largest unmet shortfall; frequency-weighted otherwise."""
        shortfall = (self.world.demand_vector() - self.stored_sku_units
                     - self.outstanding_replenish)
        peak = int(shortfall.max()) if len(shortfall) else 0
        if peak > 0:
            return int(shortfall.argmax())
        return self.stream.draw_sku()

    def _create_replenishment_order(self, t: float) -> ReplenishmentOrder:
        sku = self._replenishment_sku()
        station = self._station_for_new_order(REPLENISH)
        order = ReplenishmentOrder(self.next_replenishment_id, sku,
                                   self.stream.replenish_quantity, station.id, OPEN)
        self.next_replenishment_id += 1
        self.world.replenishment_orders[order.id] = order
        self.open_replenishment_count += 1
        self.outstanding_replenish[sku] += order.quantity
        station.orders.append(order)
        return order

    def _complete_customer_order(self, order: CustomerOrder, t: float) -> None:
        order.state = COMPLETED
        order.completion_time = t
        station = self.world.stations[order.station_id]
        station.orders.remove(order)
        self._rebuild_station_need(station)
        del self.world.customer_orders[order.id]
        self.open_customer_count -= 1
        self.orders_completed += 1
        self._completions.append(t)
        if self.open_customer_count < self.config.customer_backlog:
            self._create_customer_order(t)
        self.trigger_dispatch()

    def _complete_replenishment_order(self, order: ReplenishmentOrder, t: float) -> None:
        order.state = COMPLETED
        station = self.world.stations[order.station_id]
        station.orders.remove(order)
        del self.world.replenishment_orders[order.id]
        self.open_replenishment_count -= 1
        if (self.config.kind == PARALLEL
                and self.open_replenishment_count < self.config.replenish_backlog):
            self._create_replenishment_order(t)
        self.trigger_dispatch()

    def _on_orders(self, payload) -> None:
        for _ in range(payload):
            self._create_customer_order(self.clock)
        self.trigger_dispatch()

    # ------------------------------------------------------------------
    # scoring helpers

    def combined_score_vector(self) -> tuple[np.ndarray, float, float]:
        """Exact combined scores for all pods from the inventory mirror."""
        m = self.inventory_matrix
        if len(m) == 0:
            return np.zeros(0), 0.0, 0.0
        speeds = m @ self.stream.frequencies
        utils = np.minimum(m, self.world.demand_vector()[None, :]).sum(axis=1).astype(float)
        max_s = float(speeds.max())
        max_u = float(utils.max())
        weights = self.config.mechanism.weights
        vec = np.zeros(len(m))
        if max_s > 0:
            vec += speeds / max_s * weights.speed_weight
        if max_u > 0:
            vec += utils / max_u * weights.utility_weight
        return vec, max_s, max_u

    def _refresh_threshold(self) -> None:
        if self.cache_set is None or not self.world.pods:
            return
        self.cache_set.threshold = compute_cache_threshold(
            self.scores.mapping().values(), len(self.cache_set))

    # ------------------------------------------------------------------
    # pod claims

    def _claim_pod(self, pod_id: int) -> None:
        self.claimed_pods.add(pod_id)
        self.pod_claimed[pod_id] = True

    def _unclaim_pod(self, pod_id: int) -> None:
        self.claimed_pods.discard(pod_id)
        self.pod_claimed[pod_id] = False

    def _node_blocked_for(self, robot):
        """Predicate: another robot is standing on (holding) this node."""
        holds = self.reservations.holds

        def blocked(node: int) -> bool:
            held = holds.get(node)
            return held is not None and held[1] != robot.id

        return blocked

    # ------------------------------------------------------------------
    # task allocation

    def allocate_tasks(self, t: float) -> list[tuple[int, Task]]:
        """Assign work to every idle robot (id order); returns what was assigned."""
        assigned = []
        repo_exhausted = False
        for robot in self.world.robots:
            if robot.moving:
                continue
            task = robot.task
            if task is not None and (task.kind != "park" or robot.node != robot.parking_node):
                continue
            repo_robot = self.night_mode or robot.role == "reposition"
            if repo_robot and repo_exhausted:
                continue
            new_task = self._next_task_for(robot, t)
            if new_task is None:
                if repo_robot:
                    repo_exhausted = True
                continue
            self._start_task(robot, new_task, t)
            assigned.append((robot.id, new_task))
        return assigned

    def _next_task_for(self, robot, t: float) -> Task | None:
        if self.frozen:
            return None
        mech = self.config.mechanism
        if self.night_mode or robot.role == "reposition":
            if mech.active is None:
                return None
            moves = next_active_move(mech, self.world, self.rank_table, self.cache_set,
                                     self.scores, self.estimator, self.claimed_pods,
                                     blocked=self._node_blocked_for(robot))
            if not moves:
                return None
            for move in moves:
                self._claim_pod(move.pod_id)
                self.world.locations[move.to_location].reserved_for = move.pod_id
            return Task("reposition", stage="to_pod", moves=moves, start_t=t)
        if robot.role == "pick":
            return self._next_pick_task(robot, t)
        if robot.role == "replenish":
            return self._next_replenish_task(robot, t)
        return None

    def _next_pick_task(self, robot, t: float) -> Task | None:
        station = self.world.stations[robot.station_id]
        residual = self._station_need[station.id] - self._station_claimed[station.id]
        np.maximum(residual, 0, out=residual)
        if not residual.any():
            return None
        available = self.pod_stored & ~self.pod_claimed
        if not available.any():
            return None
        pickable = np.minimum(self.inventory_matrix, residual[None, :]).sum(axis=1)
        pickable[~available] = 0
        # skip pods another robot is currently standing over
        for node, (_, holder) in self.reservations.holds.items():
            if holder != robot.id:
                loc = self.world.location_at_waypoint(node)
                if loc is not None and loc.occupant is not None:
                    pickable[loc.occupant] = 0
        best = int(pickable.max())
        if best <= 0:
            return None
        ties = np.flatnonzero(pickable == best)
        rx, ry = self.graph.coords[robot.node]

        def tie_key(pod_id: int):
            loc = self.world.locations[self.world.pods[pod_id].placement[1]]
            return ((loc.grid_x - rx) ** 2 + (loc.grid_y - ry) ** 2, pod_id)

        pod_id = int(min(ties, key=tie_key))
        planned_vec = np.minimum(self.inventory_matrix[pod_id], residual)
        skus = np.flatnonzero(planned_vec)
        planned = {int(s): int(planned_vec[s]) for s in skus}
        self._claim_pod(pod_id)
        claimed = self._station_claimed[station.id]
        for sku, qty in planned.items():
            claimed[sku] += qty
        station.inbound_claims[robot.id] = planned
        station.queue.append(robot.id)
        return Task("pick", stage="to_pod", station_id=station.id, pod_id=pod_id,
                    planned=planned, start_t=t)

    def _next_replenish_task(self, robot, t: float) -> Task | None:
        station = self.world.stations[robot.station_id]
        if not any(o.quantity > 0 for o in station.orders):
            return None
        sx, sy = self.graph.coords[station.waypoint]
        stub_blocked = self._node_blocked_for(robot)
        best = None
        best_key = None
        for pod in self.world.pods:
            if pod.placement[0] != STORED or self.pod_claimed[pod.id]:
                continue
            free = pod.free_capacity()
            if free <= 0:
                continue
            loc = self.world.locations[pod.placement[1]]
            if stub_blocked(loc.waypoint):
                continue
            key = (-free, (loc.grid_x - sx) ** 2 + (loc.grid_y - sy) ** 2, pod.id)
            if best_key is None or key < best_key:
                best, best_key = pod, key
        if best is None:
            return None
        self._claim_pod(best.id)
        station.queue.append(robot.id)
        return Task("replenish", stage="to_pod", station_id=station.id, pod_id=best.id,
                    start_t=t)

    def _start_task(self, robot, task: Task, t: float) -> None:
        self._last_activity = t
        robot.task = task
        if task.kind == "reposition":
            move = task.moves[task.move_index]
            target = self.world.locations[move.from_location].waypoint
        else:
            pod = self.world.pods[task.pod_id]
            target = self.world.locations[pod.placement[1]].waypoint
        self._begin_leg(robot, target, t)

    def _park_or_idle(self, robot, t: float) -> None:
        robot.task = None
        task = self._next_task_for(robot, t)
        if task is not None:
            self._start_task(robot, task, t)
            return
        if robot.node != robot.parking_node:
            robot.task = Task("park")
            self._begin_leg(robot, robot.parking_node, t)

    # ------------------------------------------------------------------
    # motion

    def _begin_leg(self, robot, target_node: int, t: float) -> None:
        robot.leg_target = target_node
        if robot.node == target_node:
            self._leg_done(robot, t)
            return
        path = self.estimator.plan_path(robot.node, target_node)
        if path is None:
            raise AssertionError(f"no path {robot.node} -> {target_node}")
        robot.pending = list(path)
        self._try_start_run(robot, t)

    def _is_pocket(self, node: int, via: int) -> bool:
        out = self.graph.out_edges[node]
        return bool(out) and all(v == via for v, _, _ in out)

    def _try_start_run(self, robot, t: float) -> None:
        if self.frozen:
            robot.frozen_pending = True
            return
        pending = robot.pending
        if len(pending) < 2:
            self._leg_done(robot, t)
            return
        coords = self.graph.coords
        res = self.reservations
        x0, y0 = coords[pending[0]]
        x1, y1 = coords[pending[1]]
        h0 = heading_between(x0, y0, x1, y1)
        k = 1
        while k + 1 < len(pending):
            xa, ya = coords[pending[k]]
            xb, yb = coords[pending[k + 1]]
            if heading_between(xa, ya, xb, yb) != h0:
                break
            k += 1
        turn_t = turn_steps(robot.heading, h0) * self.kin.turn_time_90

        last_block = None
        j = k
        while j >= 1:
            dists = [0.0]
            for i in range(1, j + 1):
                dists.append(dists[-1] + self.graph.euclid(pending[i - 1], pending[i]))
            run_len = dists[j]
            arr = [t]
            for i in range(1, j + 1):
                arr.append(t + turn_t + time_at_distance(dists[i], run_len, self.kin))
            conflict = None
            for i in range(1, j + 1):
                start = arr[i - 1]
                end = math.inf if i == j else arr[i + 1]
                hit = res.blocked_by(pending[i], start, end, robot.id, t)
                if hit is not None:
                    conflict = (i, hit)
                    break
            if conflict is None:
                self._commit_run(robot, j, arr, h0, t)
                return
            c, hit = conflict
            last_block = (pending[c], hit)
            # Never park on the doorstep of a dead-end stub: the robot
            # inside could only leave through the cell we would block.
            if self._is_pocket(pending[c], pending[c - 1]):
                j = c - 2
            else:
                j = c - 1

        node, hit = last_block
        robot.waiting_on = node
        robot.wait_epoch += 1
        if hit[0] == "hold":
            res.add_waiter(node, robot.id, robot.wait_epoch)
            self.schedule(t + WAIT_REPLAN_AFTER, EV_REPLAN, (robot.id, robot.wait_epoch))
        else:
            self.schedule(max(hit[1], t), EV_RETRY, (robot.id, robot.wait_epoch))

    def _commit_run(self, robot, j: int, arr: list[float], heading: int, t: float) -> None:
        res = self.reservations
        pending = robot.pending
        start = pending[0]
        woken = res.release_hold(start, robot.id)
        res.add_transit(start, t, arr[1], robot.id)
        for i in range(1, j):
            res.add_transit(pending[i], arr[i - 1], arr[i + 1], robot.id)
        res.set_hold(pending[j], robot.id, arr[j - 1])
        for waiter, epoch in sorted(woken):
            self.schedule(max(arr[1], t), EV_RETRY, (waiter, epoch))
        robot.moving = True
        robot.waiting_on = None
        robot.wait_epoch += 1  # invalidate any queued retry/replan wakeups
        self._last_activity = t
        robot.run_len = j
        robot.run_heading = heading
        self.total_distance += sum(self.graph.euclid(pending[i], pending[i + 1])
                                   for i in range(j))
        self.schedule(arr[j], EV_ARRIVAL, robot.id)

    def _on_arrival(self, robot_id: int) -> None:
        robot = self.world.robots[robot_id]
        t = self.clock
        self._last_activity = t
        robot.pending = robot.pending[robot.run_len:]
        robot.node = robot.pending[0]
        robot.heading = robot.run_heading
        robot.position = self.graph.coords[robot.node]
        robot.moving = False
        hold = self.reservations.holds.get(robot.node)
        if hold is None or hold[1] != robot.id:
            raise AssertionError(
                f"robot {robot.id} arrived at node {robot.node} without holding it")
        if self.frozen:
            robot.frozen_pending = True
            return
        if robot.abort:
            robot.abort = False
            self._abort_fetch(robot, t)
            return
        if robot.divert:
            robot.divert = False
            self._divert_delivery(robot, t)
            return
        if len(robot.pending) > 1:
            self._try_start_run(robot, t)
        else:
            self._leg_done(robot, t)

    def _on_retry(self, payload) -> None:
        robot_id, epoch = payload
        robot = self.world.robots[robot_id]
        if (robot.moving or robot.waiting_on is None or robot.wait_epoch != epoch
                or self.frozen):
            return
        self._try_start_run(robot, self.clock)

    def _on_replan(self, payload) -> None:
        robot_id, epoch = payload
        robot = self.world.robots[robot_id]
        if (robot.moving or robot.waiting_on is None or robot.wait_epoch != epoch
                or self.frozen):
            return
        blocked = robot.waiting_on
        path = self.estimator.plan_path(robot.node, robot.leg_target, banned={blocked})
        if path is not None:
            robot.wait_epoch += 1
            robot.waiting_on = None
            robot.pending = list(path)
            self._try_start_run(robot, self.clock)
        else:
            self.schedule(self.clock + WAIT_REPLAN_AFTER, EV_REPLAN, (robot_id, epoch))

    # ------------------------------------------------------------------
    # leg completion / task state machine

    def _leg_done(self, robot, t: float) -> None:
        task = robot.task
        if task is None:
            return
        if task.kind == "park":
            if robot.node == robot.parking_node:
                robot.task = None
            else:
                self._begin_leg(robot, robot.parking_node, t)
            return
        if task.kind == "reposition":
            self._reposition_leg_done(robot, task, t)
            return
        if task.stage == "to_pod":
            pod = self.world.pods[task.pod_id]
            loc = self.world.locations[pod.placement[1]]
            if loc.waypoint != robot.node:
                raise AssertionError("fetch leg ended off the pod's location")
            self._lift_pod(robot, pod, loc)
            task.stage = "to_station"
            if self.night_mode:
                self._divert_delivery(robot, t)
                return
            station = self.world.stations[task.station_id]
            self._begin_leg(robot, station.waypoint, t)
            return
        if task.stage == "to_station":
            station = self.world.stations[task.station_id]
            if robot.node != station.waypoint:
                raise AssertionError("delivery leg ended off the station head")
            if self.night_mode:
                self._divert_delivery(robot, t)
                return
            pod = self.world.pods[task.pod_id]
            pod.placement = (AT_STATION, station.id)
            task.stage = "processing"
            if station.kind == PICK:
                self._trips.append((t, t - task.start_t))
            if station.active_robot is not None:
                raise AssertionError(f"station {station.id} already processing")
            station.active_robot = robot.id
            if station.kind == PICK:
                self._rebuild_station_need(station)
            self.schedule(t + station.unit_time, EV_UNIT, station.id)
            return
        if task.stage == "return":
            self._deposit(robot, t)
            return
        raise AssertionError(f"unexpected task state {task.kind}/{task.stage}")

    def _lift_pod(self, robot, pod, loc) -> None:
        if loc.occupant != pod.id:
            raise AssertionError("pod vanished before pickup")
        loc.occupant = None
        pod.placement = (CARRIED, robot.id)
        robot.carried = pod.id
        self.pod_stored[pod.id] = False
        self.stored_sku_units -= self.inventory_matrix[pod.id]
        self.trigger_dispatch()

    def _store_pod(self, robot, pod, loc, t: float) -> None:
        if loc.occupant is not None:
            raise AssertionError(f"location {loc.id} occupied at deposit")
        if loc.reserved_for != pod.id:
            raise AssertionError(f"location {loc.id} not reserved for pod {pod.id}")
        loc.reserved_for = None
        loc.occupant = pod.id
        pod.placement = (STORED, loc.id)
        robot.carried = None
        self.pod_stored[pod.id] = True
        self.stored_sku_units += self.inventory_matrix[pod.id]
        self._unclaim_pod(pod.id)
        self.trigger_dispatch()

    def _begin_return(self, robot, task: Task, t: float) -> None:
        pod = self.world.pods[task.pod_id]
        loc_id = choose_passive_location(self.config.mechanism, pod, robot.node,
                                         self.world, self.estimator, self.rank_table,
                                         self.cache_set, self.scores,
                                         blocked=self._node_blocked_for(robot))
        loc = self.world.locations[loc_id]
        loc.reserved_for = pod.id
        task.stage = "return"
        task.target_loc = loc.id
        self._begin_leg(robot, loc.waypoint, t)

    def _deposit(self, robot, t: float) -> None:
        task = robot.task
        pod = self.world.pods[task.pod_id]
        loc = self.world.locations[task.target_loc]
        if loc.waypoint != robot.node:
            raise AssertionError("return leg ended off the target location")
        self._store_pod(robot, pod, loc, t)
        robot.task = None
        self._park_or_idle(robot, t)

    def _reposition_leg_done(self, robot, task: Task, t: float) -> None:
        move = task.moves[task.move_index]
        if task.stage == "to_pod":
            pod = self.world.pods[move.pod_id]
            loc = self.world.locations[move.from_location]
            if loc.waypoint != robot.node:
                raise AssertionError("reposition fetch ended off the source location")
            self._lift_pod(robot, pod, loc)
            task.stage = "to_target"
            self._begin_leg(robot, self.world.locations[move.to_location].waypoint, t)
            return
        pod = self.world.pods[move.pod_id]
        loc = self.world.locations[move.to_location]
        if loc.waypoint != robot.node:
            raise AssertionError("reposition drop ended off the target location")
        self._store_pod(robot, pod, loc, t)
        self.moves_executed += 1
        task.move_index += 1
        if task.move_index < len(task.moves):
            task.stage = "to_pod"
            nxt = task.moves[task.move_index]
            self._begin_leg(robot, self.world.locations[nxt.from_location].waypoint, t)
            return
        robot.task = None
        self._park_or_idle(robot, t)

    # ------------------------------------------------------------------
    # night transitions

    def _abort_fetch(self, robot, t: float) -> None:
        """Drop an unstarted fetch: unclaim and fall back to idle logic."""
        task = robot.task
        if task is not None and task.pod_id is not None and robot.carried != task.pod_id:
            self._unclaim_pod(task.pod_id)
            if task.station_id is not None:
                station = self.world.stations[task.station_id]
                self._clear_station_claim(robot, station)
        robot.task = None
        self._park_or_idle(robot, t)

    def _clear_station_claim(self, robot, station) -> None:
        planned = station.inbound_claims.pop(robot.id, None)
        if planned:
            claimed = self._station_claimed[station.id]
            for sku, qty in planned.items():
                claimed[sku] -= qty
        if robot.id in station.queue:
            station.queue.remove(robot.id)

    def _divert_delivery(self, robot, t: float) -> None:
        """Send a pod headed for a station back into storage (night start)."""
        task = robot.task
        station = self.world.stations[task.station_id]
        self._clear_station_claim(robot, station)
        self._begin_return(robot, task, t)

    def _night_start(self, t: float) -> None:
        cfg = self.config
        before = self.open_customer_count
        for _ in range(cfg.night_orders_per_station * len(self.world.pick_stations())):
            self._create_customer_order(t)
        self.extras["night_backlogs"].append([t, before, self.open_customer_count])
        for station in self.world.pick_stations():
            self._rebuild_station_need(station)
        self.scores.refresh()
        if self.cache_set is not None:
            self._refresh_threshold()
        self._snapshot(t)

        if cfg.mechanism.active is None:
            self.frozen = True
            for robot in self.world.robots:
                processing = robot.task is not None and robot.task.stage == "processing"
                if not robot.moving and not processing:
                    robot.frozen_pending = True
            return

        self.night_mode = True
        for robot in self.world.robots:
            task = robot.task
            if task is None or task.kind in ("park", "reposition"):
                continue
            if task.stage == "return":
                continue
            if task.stage == "to_pod":
                if robot.moving:
                    robot.abort = True
                else:
                    self._abort_fetch(robot, t)
            elif task.stage == "to_station":
                if robot.moving:
                    robot.divert = True
                else:
                    self._divert_delivery(robot, t)
            elif task.stage == "processing":
                station = self.world.stations[task.station_id]
                station.active_robot = None
                pod = self.world.pods[task.pod_id]
                pod.placement = (CARRIED, robot.id)
                self._divert_delivery(robot, t)
        self.trigger_dispatch()

    def _night_end(self, t: float) -> None:
        self._last_activity = t
        self._snapshot(t)
        if self.config.mechanism.active is None:
            self.frozen = False
            for robot in self.world.robots:
                if robot.frozen_pending and not robot.moving:
                    robot.frozen_pending = False
                    if len(robot.pending) > 1:
                        self._try_start_run(robot, t)
                    else:
                        self._leg_done(robot, t)
        else:
            self.night_mode = False
        for station in self.world.stations:
            if station.active_robot is not None and station.paused:
                station.paused = False
                self.schedule(t + station.unit_time, EV_UNIT, station.id)
        for station in self.world.pick_stations():
            self._rebuild_station_need(station)
        self.trigger_dispatch()

    def _submit_replenishment(self, t: float) -> None:
        cfg = self.config
        capacity = sum(p.capacity for p in self.world.pods)
        fill_before = self.world.fill_level()
        outstanding = int(self.outstanding_replenish.sum())
        need = round(cfg.fill_target * capacity) - self.world.total_units() - outstanding
        submitted = 0
        if need > 0:
            n_orders = -(-need // cfg.replenish_order_quantity)  # ceil division
            for _ in range(n_orders):
                self._create_replenishment_order(t)
                submitted += cfg.replenish_order_quantity
        self.extras["replenish_submissions"].append([t, fill_before, submitted])
        self.trigger_dispatch()

    def _on_phase(self, payload) -> None:
        kind = payload[0]
        if kind == "replenish_submit":
            self._submit_replenishment(self.clock)
        elif kind == "night_start":
            self._night_start(self.clock)
        elif kind == "night_end":
            self._night_end(self.clock)

    def _snapshot(self, t: float) -> None:
        digest = hashlib.sha1(repr(self.world.placement_multiset()).encode()).hexdigest()
        self.extras["night_digests"].append([t, digest])
        vec, _, _ = self.combined_score_vector()
        cells = []
        for loc in self.world.locations:
            score = float(vec[loc.occupant]) if loc.occupant is not None else None
            cells.append((loc.grid_x, loc.grid_y, score))
        self.heatmaps.append(HeatmapSnapshot(t, self.world.grid_width,
                                             self.world.grid_height, cells))

    # ------------------------------------------------------------------
    # stations

    def _on_unit(self, station_id: int) -> None:
        station = self.world.stations[station_id]
        robot_id = station.active_robot
        if robot_id is None:
            return
        robot = self.world.robots[robot_id]
        task = robot.task
        if task is None or task.stage != "processing":
            return
        if self.frozen or self.night_mode:
            station.paused = True
            return
        t = self.clock
        pod = self.world.pods[task.pod_id]
        if station.kind == PICK:
            handled = self._pick_one_unit(station, pod, t)
        else:
            handled = self._load_one_unit(station, pod, t)
        if handled:
            self._last_activity = t
        if self._station_has_work(station, pod):
            self.schedule(t + station.unit_time, EV_UNIT, station.id)
        else:
            self._release_from_station(robot, station, t)

    def _station_has_work(self, station, pod) -> bool:
        if station.kind == PICK:
            need = self._station_need[station.id]
            row = self.inventory_matrix[pod.id]
            return bool(((row > 0) & (need > 0)).any())
        if pod.free_capacity() <= 0:
            return False
        return any(o.quantity > 0 for o in station.orders)

    def _pick_one_unit(self, station, pod, t: float) -> bool:
        for order in station.window:
            for line in order.lines:
                sku, qty = line
                if qty > 0 and pod.inventory.get(sku, 0) > 0:
                    line[1] -= 1
                    pod.remove(sku, 1)
                    self.inventory_matrix[pod.id, sku] -= 1
                    self.world.add_demand(sku, -1)
                    self._station_need[station.id][sku] -= 1
                    self.world.units_picked += 1
                    if order.state == OPEN:
                        order.state = ASSIGNED
                    if order.remaining_units() == 0:
                        self._complete_customer_order(order, t)
                    return True
        return False

    def _load_one_unit(self, station, pod, t: float) -> bool:
        if pod.free_capacity() <= 0:
            return False
        for order in station.orders:
            if order.quantity > 0:
                pod.add(order.sku, 1)
                self.inventory_matrix[pod.id, order.sku] += 1
                order.quantity -= 1
                self.outstanding_replenish[order.sku] -= 1
                self.world.units_replenished += 1
                if order.quantity == 0:
                    self._complete_replenishment_order(order, t)
                return True
        return False

    def _release_from_station(self, robot, station, t: float) -> None:
        station.active_robot = None
        task = robot.task
        self._clear_station_claim(robot, station)
        pod = self.world.pods[task.pod_id]
        pod.placement = (CARRIED, robot.id)
        self._begin_return(robot, task, t)
        self.trigger_dispatch()

    # ------------------------------------------------------------------
    # sampling, dispatch, watchdog

    def _on_dispatch(self, payload) -> None:
        if payload != "poll":
            self._dispatch_pending = False
        if self.frozen:
            return
        self.allocate_tasks(self.clock)

    def _on_sample(self, _) -> None:
        t = self.clock
        cfg = self.config
        while self._completions and self._completions[0] < t - 3600.0:
            self._completions.popleft()
        while self._trips and self._trips[0][0] < t - 3600.0:
            self._trips.popleft()
        self.scores.refresh()
        if self.cache_set is not None and (t % cfg.threshold_refresh) < 1e-9:
            self._refresh_threshold()
        vec, _, _ = self.combined_score_vector()
        score_at = {}
        for loc in self.world.locations:
            score_at[loc.id] = float(vec[loc.occupant]) if loc.occupant is not None else None
        report = well_sortedness_report(self.rank_table, score_at.get)
        mean_trip = (sum(d for _, d in self._trips) / len(self._trips)) if self._trips else 0.0
        self.series.append(SamplePoint(
            t=t,
            orders_per_hour=float(len(self._completions)),
            well_sortedness=report.average_offset,
            mean_trip_time=mean_trip,
            fill_level=self.world.fill_level(),
        ))
        self._audit(full=(t % 3600.0) < 1e-9)

    def _audit(self, full: bool) -> None:
        world = self.world
        world.check_unit_conservation()
        world.check_placement_bijection()
        self.extras["samples_audited"] += 1
        if full:
            world.check_demand_counter()
            if int(self.inventory_matrix.sum()) != world.total_units():
                raise AssertionError("inventory mirror drift")

    def _on_watchdog(self, _) -> None:
        busy = any(r.task is not None and r.task.kind != "park" for r in self.world.robots)
        stalled = self.clock - self._last_activity >= 3600.0 - 1e-9
        if busy and not self.frozen and stalled:
            raise DeadlockError(
                f"no progress for an hour at t={self.clock}: "
                f"{sum(1 for r in self.world.robots if r.task)} tasked robots stalled")

    # ------------------------------------------------------------------

    def _active_seconds(self) -> float:
        cfg = self.config
        if cfg.kind != DOWN_PERIOD:
            return cfg.horizon
        total = cfg.horizon
        day = 0
        while day * DAY < cfg.horizon:
            start = day * DAY + NIGHT_START_OFFSET
            end = day * DAY + NIGHT_END_OFFSET
            total -= max(0.0, min(end, cfg.horizon) - min(start, cfg.horizon))
            day += 1
        return total

    def _finalize(self) -> RunResult:
        cfg = self.config
        active_hours = self._active_seconds() / 3600.0
        ub = throughput_upper_bound(len(self.world.pick_stations()), cfg.pick_unit_time)
        rate = self.world.units_picked / active_hours if active_hours > 0 else 0.0
        score = rate / ub if ub > 0 else 0.0
        totals = {
            "units_picked": float(self.world.units_picked),
            "units_replenished": float(self.world.units_replenished),
            "orders_completed": float(self.orders_completed),
            "moves_executed": float(self.moves_executed),
            "distance_traveled": self.total_distance,
            "active_hours": active_hours,
        }
        return RunResult(utrs=score, series=self.series, totals=totals,
                         heatmaps=self.heatmaps, extras=self.extras)


def run(config: ScenarioConfig) -> RunResult:
    """Execute one scenario run; identical config and seed give identical results."""
    return SimulationRun(config).execute()
