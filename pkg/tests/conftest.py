"""Shared fixtures: small worlds for unit tests, long seeded runs for the
acceptance suite (built once per session and shared across criteria)."""

from __future__ import annotations

import time

import numpy as np
import pytest

from podsim.engine import DOWN_PERIOD, PARALLEL, ScenarioConfig, run
from podsim.layout import BUILTIN_LAYOUTS, LayoutSpec, generate_layout
from podsim.orderstream import OrderStream
from podsim.pathing import PathTimeEstimator
from podsim.policies import MechanismConfig

TINY = LayoutSpec("Tiny", 1, 1, 2, 2, 20)
ACCEPT_SEEDS = (101, 102, 103)


@pytest.fixture(scope="session")
def small_world():
    return generate_layout(BUILTIN_LAYOUTS["Small"])


@pytest.fixture(scope="session")
def small_estimator(small_world):
    return PathTimeEstimator(small_world.graph)


@pytest.fixture()
def tiny_world():
    return generate_layout(TINY)


def stock_world(world, seed=0, per_pod=10):
    """Give every pod a random inventory and attach a catalog (100 SKUs)."""
    rng = np.random.default_rng(seed)
    stream = OrderStream(rng, sku_count=100)
    world.attach_catalog(stream.catalog)
    for pod, inv in zip(world.pods, stream.draw_initial_inventory(len(world.pods), per_pod)):
        pod.inventory = dict(sorted(inv.items()))
    world.initial_units = world.total_units()
    return stream


def nightly_config(mechanism: str, seed: int, horizon_h: float = 48.0) -> ScenarioConfig:
    return ScenarioConfig(kind=DOWN_PERIOD, layout=BUILTIN_LAYOUTS["Small"],
                          mechanism=MechanismConfig.from_label(mechanism),
                          horizon=horizon_h * 3600.0, seed=seed)


def parallel_config(mechanism: str, split: str, seed: int,
                    horizon_h: float = 24.0) -> ScenarioConfig:
    return ScenarioConfig(kind=PARALLEL, layout=BUILTIN_LAYOUTS["Small"],
                          mechanism=MechanismConfig.from_label(mechanism),
                          horizon=horizon_h * 3600.0, seed=seed, robot_split=split)


@pytest.fixture(scope="session")
def nightly_runs():
    """48 h Small down-period runs: mechanisms x 3 seeds, with wall times.

    'N' is the deactivated baseline shared by the N-U and N-C comparisons;
    'C' is the deactivated baseline for C-C.
    """
    results = {}
    walls = {}
    for label in ("N", "N-U", "N-C", "C", "C-C"):
        for seed in ACCEPT_SEEDS:
            t0 = time.time()
            results[(label, seed)] = run(nightly_config(label, seed))
            walls[(label, seed)] = time.time() - t0
    return results, walls


@pytest.fixture(scope="session")
def parallel_runs():
    """24 h Small parallel runs for mechanism N-C under two robot splits."""
    results = {}
    for split in ("R1P3A0", "R1P2A1"):
        for seed in ACCEPT_SEEDS:
            results[(split, seed)] = run(parallel_config("N-C", split, seed))
    return results
