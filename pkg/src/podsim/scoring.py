"""Pod and storage-location scoring, inventory well-sortedness, UTRS.

Pod speed is the frequency-weighted unit count of a pod; pod utility caps
each SKU's contribution at the current open demand; the combined score
normalizes both by the fleet-wide maximum and mixes them with weights.
Well-sortedness scans occupied location pairs in prominence order and
averages the rank offset over misplaced pairs (lower is better).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScoringWeights:
    speed_weight: float = 1.0
    utility_weight: float = 1.0

    def __post_init__(self):
        if self.speed_weight < 0 or self.utility_weight < 0:
            raise ValueError("weights must be nonnegative")
        if self.speed_weight + self.utility_weight <= 0:
            raise ValueError("at least one weight must be positive")


def _demand_of(demand, sku: int) -> float:
    if hasattr(demand, "get"):
        return demand.get(sku, 0)
    return demand[sku]


def pod_speed(pod, catalog) -> float:
    """Sum over contained SKUs of units times SKU frequency."""
    freq = catalog.frequencies
    return float(sum(qty * freq[sku] for sku, qty in pod.inventory.items()))


def pod_utility(pod, demand) -> float:
    """Potential picks against the open backlog: sum of min(contained, demanded)."""
    return float(sum(min(qty, _demand_of(demand, sku)) for sku, qty in pod.inventory.items()))


def combined_score(pod, all_pods, weights: ScoringWeights, catalog, demand) -> float:
    """Normalized weighted sum of speed and utility over the current fleet.

    A zero fleet-wide maximum silences that term instead of dividing by
    zero; an empty fleet is an error.
    """
    if not all_pods:
        raise ValueError("combined score needs at least one pod")
    speeds = [pod_speed(p, catalog) for p in all_pods]
    utils = [pod_utility(p, demand) for p in all_pods]
    return _combine(
        pod_speed(pod, catalog), pod_utility(pod, demand), max(speeds), max(utils), weights
    )


def _combine(speed, utility, max_speed, max_utility, weights: ScoringWeights) -> float:
    score = 0.0
    if max_speed > 0:
        score += speed / max_speed * weights.speed_weight
    if max_utility > 0:
        score += utility / max_utility * weights.utility_weight
    return score


def combined_scores(pods, weights: ScoringWeights, catalog, demand) -> np.ndarray:
    """Vector of combined scores for a pod list (indexed like the list)."""
    n = len(pods)
    speeds = np.zeros(n)
    utils = np.zeros(n)
    freq = catalog.frequencies
    for i, pod in enumerate(pods):
        s = 0.0
        u = 0.0
        for sku, qty in pod.inventory.items():
            s += qty * freq[sku]
            u += min(qty, _demand_of(demand, sku))
        speeds[i] = s
        utils[i] = u
    max_s = speeds.max() if n else 0.0
    max_u = utils.max() if n else 0.0
    out = np.zeros(n)
    if max_s > 0:
        out += speeds / max_s * weights.speed_weight
    if max_u > 0:
        out += utils / max_u * weights.utility_weight
    return out


# -- storage location ranks ----------------------------------------------


@dataclass
class RankTable:
    """Locations ordered by prominence; equal prominence shares a rank."""

    entries: list[tuple[int, float, int]]  # (location id, prominence, rank)
    rank_of: dict[int, int]
    max_rank: int


def compute_ranks(field) -> RankTable:
    """Dense ranks over ascending prominence (ties share, next strict value +1)."""
    values = field.values if hasattr(field, "of") else dict(field)
    items = sorted(values.items(), key=lambda kv: (kv[1], kv[0]))
    if not items:
        raise ValueError("prominence field is empty")
    entries = []
    rank_of = {}
    rank = 1
    last = items[0][1]
    for loc_id, prom in items:
        if prom > last:
            rank += 1
            last = prom
        entries.append((loc_id, prom, rank))
        rank_of[loc_id] = rank
    return RankTable(entries, rank_of, rank)


# -- well-sortedness -------------------------------------------------------


@dataclass
class WellSortednessReport:
    misplacements: int  # pair count c
    rank_offset_sum: int  # d
    average_offset: float  # a = d / c, 0 when c == 0

    def as_tuple(self) -> tuple[int, int, float]:
        return self.misplacements, self.rank_offset_sum, self.average_offset


def well_sortedness_report(rank_table: RankTable, score_at) -> WellSortednessReport:
    """Pairwise misplacement scan over occupied locations.

    ``score_at`` maps location id -> occupant pod's combined score, or None
    for an empty location. A pair (better placed i1, worse placed i2) is
    misplaced when both are occupied, their ranks differ and the pod at i1
    scores strictly lower.
    """
    ranks = []
    scores = []
    for loc_id, _, rank in rank_table.entries:
        s = score_at(loc_id)
        if s is not None:
            ranks.append(rank)
            scores.append(s)
    if len(ranks) < 2:
        return WellSortednessReport(0, 0, 0.0)
    r = np.asarray(ranks, dtype=np.int32)
    s = np.asarray(scores, dtype=float)
    # Entries keep ascending-prominence order, so ranks are non-decreasing:
    # r[j] > r[i] already implies j > i and excludes same-rank pairs.
    mis = (r[None, :] > r[:, None]) & (s[:, None] < s[None, :])
    c = int(mis.sum())
    d = int(((r[None, :] - r[:, None]) * mis).sum())
    a = d / c if c else 0.0
    return WellSortednessReport(c, d, a)


def well_sortedness(world, rank_table: RankTable, weights: ScoringWeights) -> WellSortednessReport:
    """Report for the live world at the current instant."""
    scores = combined_scores(world.pods, weights, world.catalog, world.demand_vector())
    occupant_score = {
        loc.id: (float(scores[loc.occupant]) if loc.occupant is not None else None)
        for loc in world.locations
    }
    return well_sortedness_report(rank_table, occupant_score.get)


# -- throughput score -------------------------------------------------------


def throughput_upper_bound(pick_station_count: int, unit_handling_time: float) -> float:
    """Units per hour the pick stations could handle at full tilt."""
    if unit_handling_time <= 0:
        raise ValueError("unit handling time must be positive")
    return pick_station_count * 3600.0 / unit_handling_time


def utrs(avg_units_per_active_hour: float, pick_station_count: int, unit_handling_time: float) -> float:
    """Unit throughput rate score: achieved rate over the theoretical bound."""
    return avg_units_per_active_hour / throughput_upper_bound(pick_station_count, unit_handling_time)
