"""Acceptance suite: one test per criterion, one printed verdict line each.

The long seeded runs live in session fixtures (conftest.py) and are shared
across criteria. Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import random
import time

import numpy as np
import pytest

from podsim.engine import ScenarioConfig, SimulationRun, run
from podsim.export import export_heatmap, export_time_series
from podsim.layout import BUILTIN_LAYOUTS, LayoutSpec, generate_layout
from podsim.orderstream import OrderStream
from podsim.pathing import PathTimeEstimator, compute_prominence_field
from podsim.policies import MechanismConfig, desired_ranks, next_active_move
from podsim.scoring import compute_ranks, throughput_upper_bound, well_sortedness_report

from conftest import ACCEPT_SEEDS, nightly_config
from test_pathing import plain_shortest_time
from test_scoring import brute_force_well_sortedness


def report(number: int, name: str, ok: bool, detail: str) -> None:
    verdict = "PASS" if ok else "FAIL"
    print(f"\n[ACCEPTANCE] {number:02d} {name}: {verdict} ({detail})")
    assert ok, f"criterion {number} {name}: {detail}"


# -- 1: well-sortedness oracle equivalence -------------------------------------


def test_criterion_01_well_sortedness_oracle_equivalence():
    rng = random.Random(2024)
    t0 = time.time()
    mismatches = 0
    for _ in range(200):
        n_locs = rng.randrange(2, 21)
        n_pods = rng.randrange(0, 21)
        prominences = {loc: float(rng.randrange(1, 10)) for loc in range(n_locs)}
        occupied = rng.sample(range(n_locs), min(n_pods, n_locs))
        scores = {loc: (round(rng.uniform(0, 2), 4) if loc in occupied else None)
                  for loc in range(n_locs)}
        table = compute_ranks(prominences)
        got = well_sortedness_report(table, scores.get).as_tuple()
        want = brute_force_well_sortedness(prominences, scores)
        if got != want:
            mismatches += 1
    elapsed = time.time() - t0
    report(1, "well-sortedness-oracle", mismatches == 0 and elapsed < 10.0,
           f"200 instances, {mismatches} mismatches, {elapsed:.2f}s")


# -- 2: turn-aware search equals plain shortest paths at zero penalty -----------


def test_criterion_02_turn_blind_equivalence_all_layouts():
    t0 = time.time()
    worst = 0.0
    for name, spec in BUILTIN_LAYOUTS.items():
        world = generate_layout(spec)
        est = PathTimeEstimator(world.graph, cruise_speed=1.5, turn_penalty=0.0)
        rng = random.Random(hash(name) & 0xFFFF)
        nodes = [loc.waypoint for loc in world.locations]
        nodes += [s.waypoint for s in world.stations]
        for _ in range(100):
            a, b = rng.choice(nodes), rng.choice(nodes)
            oracle = plain_shortest_time(world.graph, a, b, 1.5)
            got = est.path_time(a, b)
            worst = max(worst, abs(got - oracle))
    elapsed = time.time() - t0
    report(2, "turn-aware-equivalence", worst <= 1e-9 and elapsed < 30.0,
           f"4 layouts x 100 pairs, max abs err {worst:.2e}, {elapsed:.1f}s")


# -- 3: throughput upper bound arithmetic ----------------------------------------


def test_criterion_03_upper_bound_arithmetic():
    ub = throughput_upper_bound(4, 10.0)
    report(3, "upper-bound", ub == 1440.0, f"UB = {ub} units/h")


# -- 4: bit-identical determinism -------------------------------------------------


def test_criterion_04_determinism(tmp_path):
    cfg = nightly_config("N-U", seed=424242, horizon_h=30.0)
    t0 = time.time()
    r1 = run(cfg)
    first_elapsed = time.time() - t0
    r2 = run(cfg)
    total_elapsed = time.time() - t0

    same_json = r1.to_json() == r2.to_json()
    files_equal = True
    for tag, result in (("a", r1), ("b", r2)):
        export_time_series(result, tmp_path / f"{tag}_series.csv")
        for snap in result.heatmaps:
            export_heatmap(snap, tmp_path / f"{tag}_heat_{int(snap.t)}")
    for name_a in sorted(p.name for p in tmp_path.iterdir() if p.name.startswith("a_")):
        twin = tmp_path / ("b_" + name_a[2:])
        if (tmp_path / name_a).read_bytes() != twin.read_bytes():
            files_equal = False
    in_budget = total_elapsed < 2.5 * first_elapsed + 5.0
    report(4, "determinism", same_json and files_equal and in_budget,
           f"json identical={same_json}, files identical={files_equal}, "
           f"{total_elapsed:.0f}s for two runs")


# -- 5/6: nightly resorting direction over 48 h ------------------------------------


def mean_utrs(results, label):
    return sum(results[(label, s)].utrs for s in ACCEPT_SEEDS) / len(ACCEPT_SEEDS)


def test_criterion_05_nightly_resorting_direction(nightly_runs):
    results, walls = nightly_runs
    base = mean_utrs(results, "N")
    act_u = mean_utrs(results, "N-U")
    act_c = mean_utrs(results, "N-C")
    slowest = max(walls.values())
    ok = act_u >= base and act_c >= base and slowest < 600.0
    report(5, "nightly-resorting-direction", ok,
           f"deactivated {base*100:.2f}% vs N-U {act_u*100:.2f}% / N-C {act_c*100:.2f}%, "
           f"slowest run {slowest:.0f}s")


def test_criterion_06_passive_sorted_indifference(nightly_runs):
    results, _ = nightly_runs
    deact = mean_utrs(results, "C")
    act = mean_utrs(results, "C-C")
    delta_pp = abs(act - deact) * 100.0
    report(6, "passive-sorted-indifference", delta_pp <= 1.5,
           f"C-C activated {act*100:.2f}% vs deactivated {deact*100:.2f}%, "
           f"|delta| = {delta_pp:.2f} pp")


# -- 7: robot reallocation penalty ---------------------------------------------------


def test_criterion_07_robot_reallocation_penalty(parallel_runs):
    drops = []
    ok = True
    for seed in ACCEPT_SEEDS:
        full = parallel_runs[("R1P3A0", seed)].utrs
        less = parallel_runs[("R1P2A1", seed)].utrs
        drops.append(f"seed {seed}: {full*100:.1f}->{less*100:.1f}")
        if not less < full:
            ok = False
    report(7, "reallocation-penalty", ok, "; ".join(drops))


# -- 8: well-sortedness descends over the first active night --------------------------


def series_value_at(result, t):
    for point in result.series:
        if abs(point.t - t) < 1e-6:
            return point
    raise AssertionError(f"no sample at t={t}")


def test_criterion_08_well_sortedness_descends(nightly_runs):
    results, _ = nightly_runs
    details = []
    ok = True
    for seed in ACCEPT_SEEDS:
        result = results[("N-U", seed)]
        at_22 = series_value_at(result, 16 * 3600.0).well_sortedness
        at_06 = series_value_at(result, 24 * 3600.0).well_sortedness
        details.append(f"seed {seed}: {at_22:.2f}->{at_06:.2f}")
        if not at_06 < at_22:
            ok = False
    report(8, "well-sortedness-descent", ok, "; ".join(details))


# -- 9: conservation and placement invariants hold at every sample ---------------------


def test_criterion_09_conservation_suite(nightly_runs):
    results, _ = nightly_runs
    result = results[("N-U", ACCEPT_SEEDS[0])]
    expected = int(48 * 3600 / 300) + 1
    audited = result.extras["samples_audited"]
    # every audit raises on violation, so a full count means zero violations
    ok = audited == expected and len(result.series) == expected
    report(9, "conservation-suite", ok,
           f"{audited}/{expected} sampled audits, zero violations")


# -- 10: active-U strictly reduces rank offsets and terminates -------------------------


class FrozenScores:
    def __init__(self, mapping):
        self._map = dict(mapping)

    def mapping(self):
        return self._map


def test_criterion_10_active_utility_progress():
    rng = np.random.default_rng(77)
    failures = []
    for case in range(50):
        n_pods = int(rng.integers(3, 21))
        world = generate_layout(LayoutSpec("Frozen", 1, 1, 2, 2, n_pods))
        stream = OrderStream(np.random.default_rng(int(rng.integers(1 << 30))),
                             sku_count=40)
        world.attach_catalog(stream.catalog)
        est = PathTimeEstimator(world.graph)
        table = compute_ranks(compute_prominence_field(world, est))
        scores = FrozenScores({p.id: float(v) for p, v in
                               zip(world.pods, rng.random(n_pods))})
        mech = MechanismConfig("U", "U")
        desired = desired_ranks(scores.mapping(), table.max_rank)

        def offset_sum():
            return sum(abs(table.rank_of[p.placement[1]] - desired[p.id])
                       for p in world.pods)

        current = offset_sum()
        steps = 0
        while True:
            moves = next_active_move(mech, world, table, None, scores, est)
            if moves is None:
                break
            move = moves[0]
            pod = world.pods[move.pod_id]
            world.locations[pod.placement[1]].occupant = None
            target = world.locations[move.to_location]
            target.occupant = pod.id
            pod.placement = ("stored", target.id)
            after = offset_sum()
            if not after < current:
                failures.append(f"case {case}: offset {current}->{after}")
                break
            current = after
            steps += 1
            if steps > 2000:
                failures.append(f"case {case}: no termination")
                break
    report(10, "active-utility-progress", not failures,
           f"50 frozen instances, {len(failures)} failures")
