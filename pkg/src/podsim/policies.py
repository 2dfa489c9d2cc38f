"""Pod repositioning mechanisms.

Three families, each with a passive variant (pick a storage location when
a pod leaves a station) and, for two of them, an active variant (generate
explicit pod moves for idle repositioning robots):

* Nearest (N): always the closest free location by estimated path time.
  No active variant.
* Cache (C): the most prominent quarter of locations is a cache; pods
  scoring at or above a capacity-matched threshold go there, others go
  elsewhere. Actively swaps deserving pods in and undeserving pods out.
* Utility (U): pods are matched proportionally onto location ranks by
  combined score; passively stores near the desired rank, actively moves
  the pod whose actual rank strays furthest from its desired rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .scoring import RankTable, ScoringWeights, combined_scores

PASSIVE_MECHANISMS = ("N", "C", "U")
ACTIVE_MECHANISMS = ("C", "U")


@dataclass(frozen=True)
class MechanismConfig:
    passive: str
    active: str | None = None
    cache_fraction: float = 0.25
    weights: ScoringWeights = field(default_factory=ScoringWeights)

    def __post_init__(self):
        if self.passive not in PASSIVE_MECHANISMS:
            raise ValueError(f"passive mechanism must be one of {PASSIVE_MECHANISMS}")
        if self.active is not None and self.active not in ACTIVE_MECHANISMS:
            raise ValueError(
                f"active mechanism must be one of {ACTIVE_MECHANISMS} or disabled; "
                f"Nearest has no active variant"
            )
        if not 0 < self.cache_fraction <= 1:
            raise ValueError("cache fraction must be in (0, 1]")

    @classmethod
    def from_label(cls, label: str, cache_fraction: float = 0.25,
                   weights: ScoringWeights | None = None) -> "MechanismConfig":
        """Parse "N-U" style labels; a bare passive letter disables active."""
        parts = label.split("-")
        if len(parts) == 1:
            passive, active = parts[0], None
        elif len(parts) == 2:
            passive, active = parts
        else:
            raise ValueError(f"bad mechanism label {label!r}")
        return cls(passive, active, cache_fraction, weights or ScoringWeights())

    def label(self) -> str:
        return self.passive if self.active is None else f"{self.passive}-{self.active}"


@dataclass
class CacheSet:
    """The lowest-prominence storage locations plus the current score cutoff."""

    ids: frozenset[int]
    threshold: float = math.inf

    def __contains__(self, loc_id: int) -> bool:
        return loc_id in self.ids

    def __len__(self) -> int:
        return len(self.ids)


def build_cache_set(rank_table: RankTable, fraction: float) -> CacheSet:
    size = int(fraction * len(rank_table.entries) + 0.5)
    members = frozenset(loc_id for loc_id, _, _ in rank_table.entries[:size])
    return CacheSet(members)


def compute_cache_threshold(scores, cache_capacity: int) -> float:
    """Combined-score cutoff at the cache-capacity quantile (descending).

    With a cache at least as large as the fleet every pod qualifies, so the
    threshold drops to the minimum score.
    """
    scores = sorted(scores, reverse=True)
    if not scores:
        raise ValueError("no pods to rank")
    k = min(cache_capacity, len(scores))
    if k <= 0:
        return math.inf
    return scores[k - 1]


@dataclass(frozen=True)
class RepositioningMove:
    pod_id: int
    from_location: int
    to_location: int
    gain: float


class ExactScores:
    """Score provider that recomputes from live world state on every call.

    The engine swaps in a cached equivalent with the same interface; both
    expose the pod's combined score and the full pod -> score mapping.
    """

    def __init__(self, world, weights: ScoringWeights):
        self.world = world
        self.weights = weights

    def mapping(self) -> dict[int, float]:
        vec = combined_scores(self.world.pods, self.weights, self.world.catalog,
                              self.world.demand_vector())
        return {pod.id: float(vec[i]) for i, pod in enumerate(self.world.pods)}

    def score_of(self, pod) -> float:
        return self.mapping()[pod.id]


# -- desired ranks ----------------------------------------------------------


def desired_ranks(scores: dict[int, float], max_rank: int) -> dict[int, int]:
    """Map pods proportionally onto ranks by descending combined score."""
    order = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    n = len(order)
    return {pod_id: 1 + (pos * max_rank) // n for pos, (pod_id, _) in enumerate(order)}


def desired_rank(pod, rank_table: RankTable, scores: dict[int, float]) -> int:
    return desired_ranks(scores, rank_table.max_rank)[pod.id]


# -- passive variants ---------------------------------------------------------


def _nearest(locations, time_map) -> object | None:
    best = None
    best_key = None
    for loc in locations:
        t = time_map.get(loc.waypoint, math.inf)
        key = (t, loc.id)
        if best_key is None or key < best_key:
            best, best_key = loc, key
    return best


def choose_passive_location(mechanism: MechanismConfig, pod, release_node: int,
                            world, estimator, rank_table: RankTable,
                            cache_set: CacheSet | None, scores,
                            blocked=None) -> int:
    """Storage location for a pod leaving a station at ``release_node``.

    ``blocked`` (node -> bool) filters out locations another robot is
    currently standing in, so nobody ever waits on a dead-end stub whose
    occupant needs the waiter's cell to leave.
    """
    free = [loc for loc in world.locations if loc.is_free()]
    if not free:
        raise RuntimeError("no free storage location; world invariant violated")
    if blocked is not None:
        unblocked = [loc for loc in free if not blocked(loc.waypoint)]
        if unblocked:
            free = unblocked
    time_map = estimator.time_from(release_node)

    if mechanism.passive == "N":
        return _nearest(free, time_map).id

    if mechanism.passive == "C":
        in_cache = [loc for loc in free if loc.id in cache_set]
        outside = [loc for loc in free if loc.id not in cache_set]
        if scores.score_of(pod) >= cache_set.threshold:
            primary, fallback = in_cache, outside
        else:
            primary, fallback = outside, in_cache
        chosen = _nearest(primary, time_map) or _nearest(fallback, time_map)
        return chosen.id

    # Utility: free location nearest in path time within a widening rank
    # window around the pod's desired rank.
    desired = desired_rank(pod, rank_table, scores.mapping())
    rank_of = rank_table.rank_of
    window = 1
    while True:
        candidates = [loc for loc in free if abs(rank_of[loc.id] - desired) <= window]
        if candidates:
            return _nearest(candidates, time_map).id
        window += 1


# -- active variants -----------------------------------------------------------


def next_active_move(mechanism: MechanismConfig, world, rank_table: RankTable,
                     cache_set: CacheSet | None, scores, estimator,
                     excluded_pods=frozenset(), blocked=None):
    """Next explicit repositioning move(s), or None when nothing improves.

    Utility returns a single move; Cache returns either a single move into
    free cache space or a two-move swap through a buffer location.
    ``blocked`` filters sources and targets as in choose_passive_location.
    """
    if blocked is None:
        blocked = lambda node: False
    if mechanism.active == "U":
        return _next_utility_move(world, rank_table, scores, excluded_pods, blocked)
    if mechanism.active == "C":
        return _next_cache_move(world, cache_set, scores, estimator, excluded_pods, blocked)
    raise ValueError("mechanism has no active variant")


def _stored_pods(world, excluded_pods, blocked):
    for pod in world.pods:
        kind, ref = pod.placement
        if kind == "stored" and pod.id not in excluded_pods:
            loc = world.locations[ref]
            if not blocked(loc.waypoint):
                yield pod, loc


def _next_utility_move(world, rank_table, scores, excluded_pods, blocked):
    score_map = scores.mapping()
    desired = desired_ranks(score_map, rank_table.max_rank)
    rank_of = rank_table.rank_of

    judged = []
    for pod, loc in _stored_pods(world, excluded_pods, blocked):
        diff = abs(rank_of[loc.id] - desired[pod.id])
        if diff > 0:
            judged.append((-diff, -score_map[pod.id], pod.id, pod, loc))
    judged.sort(key=lambda item: item[:3])

    free = [loc for loc in world.locations if loc.is_free() and not blocked(loc.waypoint)]
    if not free:
        return None
    for neg_diff, _, _, pod, loc in judged:
        diff = -neg_diff
        want = desired[pod.id]
        best = min(free, key=lambda fl: (abs(rank_of[fl.id] - want), fl.id))
        best_diff = abs(rank_of[best.id] - want)
        if best_diff < diff:
            return [RepositioningMove(pod.id, loc.id, best.id, float(diff - best_diff))]
    return None


def _next_cache_move(world, cache_set, scores, estimator, excluded_pods, blocked):
    score_map = scores.mapping()
    threshold = cache_set.threshold

    best_out = None  # highest-scoring qualifying pod stored outside the cache
    worst_in = None  # lowest-scoring non-qualifying pod stored inside
    for pod, loc in _stored_pods(world, excluded_pods, blocked):
        s = score_map[pod.id]
        if loc.id in cache_set:
            if s < threshold and (worst_in is None or (s, pod.id) < worst_in[:2]):
                worst_in = (s, pod.id, pod, loc)
        elif s >= threshold and (best_out is None or (-s, pod.id) < (-best_out[0], best_out[1])):
            best_out = (s, pod.id, pod, loc)
    if best_out is None:
        return None
    out_score, _, out_pod, out_loc = best_out

    def usable(loc):
        return loc.is_free() and not blocked(loc.waypoint)

    free_cache = [loc for loc in world.locations if usable(loc) and loc.id in cache_set]
    if free_cache:
        time_map = estimator.time_from(out_loc.waypoint)
        target = _nearest(free_cache, time_map)
        return [RepositioningMove(out_pod.id, out_loc.id, target.id, out_score)]

    if worst_in is None:
        return None
    in_score, _, in_pod, in_loc = worst_in
    if out_score <= in_score:
        return None
    free_outside = [loc for loc in world.locations if usable(loc) and loc.id not in cache_set]
    if not free_outside:
        return None
    buffer = _nearest(free_outside, estimator.time_from(in_loc.waypoint))
    return [
        RepositioningMove(in_pod.id, in_loc.id, buffer.id, out_score - in_score),
        RepositioningMove(out_pod.id, out_loc.id, in_loc.id, out_score - in_score),
    ]
