import numpy as np
import pytest

from podsim.engine import (DOWN_PERIOD, PARALLEL, ROBOT_SPLITS, ScenarioConfig,
                           SimulationRun, run)
from podsim.layout import BUILTIN_LAYOUTS, LayoutSpec
from podsim.policies import MechanismConfig

from conftest import TINY


def tiny_config(**overrides) -> ScenarioConfig:
    defaults = dict(kind=DOWN_PERIOD, layout=TINY,
                    mechanism=MechanismConfig.from_label("N-U"),
                    horizon=2 * 3600.0, seed=5, sku_count=60,
                    customer_backlog=40, night_orders_per_station=30)
    defaults.update(overrides)
    return ScenarioConfig(**defaults)


def test_config_validation():
    with pytest.raises(ValueError):
        tiny_config(kind="weekend")
    with pytest.raises(ValueError):
        tiny_config(horizon=0.0)
    with pytest.raises(ValueError):
        tiny_config(repetitions=0)
    with pytest.raises(ValueError):
        tiny_config(robot_split="R9P9A9")


def test_zero_pods_and_orders_runs_to_empty_result():
    cfg = tiny_config(layout=LayoutSpec("Bare", 1, 1, 1, 1, 0),
                      customer_backlog=0, horizon=3600.0)
    result = run(cfg)
    assert result.utrs == 0.0
    assert result.totals["units_picked"] == 0.0
    assert len(result.series) == 13  # every 300 s including both ends
    assert all(p.orders_per_hour == 0.0 and p.fill_level == 0.0 for p in result.series)


def test_same_seed_reproduces_bit_identical_results():
    r1 = run(tiny_config())
    r2 = run(tiny_config())
    assert r1.to_json() == r2.to_json()


def test_different_seeds_differ():
    r1 = run(tiny_config(seed=5))
    r2 = run(tiny_config(seed=6))
    assert r1.to_json() != r2.to_json()


def test_series_timestamps_strictly_increase():
    result = run(tiny_config())
    times = [p.t for p in result.series]
    assert times == sorted(times)
    assert len(set(times)) == len(times)


def test_robot_split_fleet_sizes():
    for split, total in (("R1P3A0", 16), ("R1P2A1", 16), ("R1P3A1", 20)):
        cfg = ScenarioConfig(kind=PARALLEL, layout=BUILTIN_LAYOUTS["Small"],
                             mechanism=MechanismConfig.from_label("N-U"),
                             horizon=600.0, seed=1, robot_split=split)
        sim = SimulationRun(cfg)
        assert len(sim.world.robots) == total
        repl, pick, repo = ROBOT_SPLITS[split]
        roles = [r.role for r in sim.world.robots]
        assert roles.count("replenish") == repl * 4
        assert roles.count("pick") == pick * 4
        assert roles.count("reposition") == repo * 4


def test_parallel_adds_one_repositioner_per_station():
    base = ScenarioConfig(kind=PARALLEL, layout=BUILTIN_LAYOUTS["Small"],
                          mechanism=MechanismConfig.from_label("N-U"),
                          horizon=600.0, seed=1, robot_split="R1P3A0")
    plus = ScenarioConfig(kind=PARALLEL, layout=BUILTIN_LAYOUTS["Small"],
                          mechanism=MechanismConfig.from_label("N-U"),
                          horizon=600.0, seed=1, robot_split="R1P3A1")
    n_base = len(SimulationRun(base).world.robots)
    n_plus = len(SimulationRun(plus).world.robots)
    assert n_plus - n_base == 4  # one per pick station


# -- task allocation ----------------------------------------------------------


def test_single_matching_pod_is_fetched():
    cfg = tiny_config(customer_backlog=0, horizon=600.0)
    sim = SimulationRun(cfg)
    # inject one order for a sku only pod 3 holds
    pod = sim.world.pods[3]
    sku = 59
    for p in sim.world.pods:
        p.inventory.pop(sku, None)
    sim.inventory_matrix[:, sku] = 0
    pod.inventory[sku] = 2
    sim.inventory_matrix[pod.id, sku] = 2
    sim.world.initial_units = sim.world.total_units()
    station = sim.world.pick_stations()[0]
    from podsim.world import CustomerOrder
    order = CustomerOrder(999, [[sku, 1]], station.id)
    sim.world.customer_orders[order.id] = order
    sim.open_customer_count += 1
    station.orders.append(order)
    sim.world.add_demand(sku, 1)
    sim._rebuild_station_need(station)

    assigned = sim.allocate_tasks(0.0)
    fetches = [(rid, t) for rid, t in assigned if t.kind == "pick"]
    assert len(fetches) == 1
    assert fetches[0][1].pod_id == pod.id


def test_pod_with_larger_coverage_wins():
    cfg = tiny_config(customer_backlog=0, horizon=600.0)
    sim = SimulationRun(cfg)
    sku_a, sku_b = 57, 58
    for p in sim.world.pods:
        p.inventory.pop(sku_a, None)
        p.inventory.pop(sku_b, None)
    sim.inventory_matrix[:, [sku_a, sku_b]] = 0
    rich, poor = sim.world.pods[4], sim.world.pods[5]
    rich.inventory[sku_a] = 3
    poor.inventory[sku_b] = 1
    sim.inventory_matrix[rich.id, sku_a] = 3
    sim.inventory_matrix[poor.id, sku_b] = 1
    sim.world.initial_units = sim.world.total_units()
    station = sim.world.pick_stations()[0]
    from podsim.world import CustomerOrder
    for i, (sku, qty) in enumerate(((sku_a, 3), (sku_b, 1))):
        order = CustomerOrder(900 + i, [[sku, qty]], station.id)
        sim.world.customer_orders[order.id] = order
        sim.open_customer_count += 1
        station.orders.append(order)
        sim.world.add_demand(sku, qty)
    sim._rebuild_station_need(station)

    assigned = sim.allocate_tasks(0.0)
    first = next(t for rid, t in assigned if t.kind == "pick")
    assert first.pod_id == rich.id  # 3 coverable units beat 1


def test_replenishment_prefers_most_free_capacity():
    cfg = tiny_config(kind=PARALLEL, customer_backlog=0, replenish_backlog=3,
                      horizon=600.0)
    sim = SimulationRun(cfg)
    # drain one pod so it clearly has the most free capacity
    hollow = sim.world.pods[7]
    sku, qty = next(iter(hollow.inventory.items()))
    hollow.remove(sku, qty)
    sim.inventory_matrix[hollow.id, sku] = 0
    sim.world.initial_units = sim.world.total_units()
    assigned = sim.allocate_tasks(0.0)
    repl = [t for _, t in assigned if t.kind == "replenish"]
    assert repl and repl[0].pod_id == hollow.id


# -- conservation over a full run ------------------------------------------------


def test_units_conserved_and_bijection_holds_throughout():
    # the engine audits both invariants at every sample; completing is passing
    result = run(tiny_config(horizon=4 * 3600.0))
    w = result.totals
    assert w["units_picked"] >= 0
    assert len(result.series) == 49


def test_utrs_in_unit_interval():
    result = run(tiny_config(horizon=4 * 3600.0))
    assert 0.0 <= result.utrs <= 1.0


# -- down-period scenario ----------------------------------------------------------


def down_config(**overrides):
    defaults = dict(kind=DOWN_PERIOD, layout=TINY,
                    mechanism=MechanismConfig.from_label("N-U"),
                    horizon=24 * 3600.0, seed=7, sku_count=60,
                    customer_backlog=40, night_orders_per_station=30)
    defaults.update(overrides)
    return ScenarioConfig(**defaults)


@pytest.fixture(scope="module")
def down_run_active():
    return run(down_config())


@pytest.fixture(scope="module")
def down_run_frozen():
    return run(down_config(mechanism=MechanismConfig.from_label("N")))


def test_night_injection_tops_up_backlog(down_run_active):
    (t, before, after), = down_run_active.extras["night_backlogs"]
    assert t == 16 * 3600.0
    assert after == before + 30 * 1  # one pick station in the tiny layout


def test_replenishment_submission_mass_balance(down_run_active):
    submissions = down_run_active.extras["replenish_submissions"]
    assert len(submissions) == 1
    t, fill_before, submitted = submissions[0]
    assert t == 10 * 3600.0
    capacity = 20 * 40  # pods x capacity
    assert fill_before + submitted / capacity >= 0.75 - 0.01


def test_frozen_night_keeps_placements_identical(down_run_frozen):
    digests = dict(down_run_frozen.extras["night_digests"])
    assert digests[16 * 3600.0] == digests[24 * 3600.0]


def test_active_night_changes_placements(down_run_active):
    digests = dict(down_run_active.extras["night_digests"])
    assert down_run_active.totals["moves_executed"] > 0
    assert digests[16 * 3600.0] != digests[24 * 3600.0]


def test_heatmap_snapshots_taken_at_night_bounds(down_run_active):
    times = [h.t for h in down_run_active.heatmaps]
    assert times == [16 * 3600.0, 24 * 3600.0]
    for snap in down_run_active.heatmaps:
        assert snap.cell_count() == 72  # tiny layout storage locations


def test_active_hours_exclude_down_window(down_run_active):
    assert down_run_active.totals["active_hours"] == 16.0
