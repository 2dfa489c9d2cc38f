"""Robot motion timing: trapezoidal speed profiles and turn handling.

A robot accelerates from rest toward its speed cap, cruises, and brakes
back to rest at the end of every straight run; runs too short for the cap
become triangular. Turns happen in place at zero speed, one fixed cost
per 90 degrees.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import heading_between, turn_steps


@dataclass(frozen=True)
class KinematicsConfig:
    max_speed: float = 1.5  # m/s
    acceleration: float = 0.5  # m/s^2
    deceleration: float = 0.5  # m/s^2
    turn_time_90: float = 2.5  # s per 90-degree turn

    def __post_init__(self):
        for name in ("max_speed", "acceleration", "deceleration", "turn_time_90"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def segment_time(length: float, kin: KinematicsConfig) -> float:
    """Rest-to-rest travel time over a straight segment."""
    if length <= 0:
        return 0.0
    a, b, vmax = kin.acceleration, kin.deceleration, kin.max_speed
    d_full = vmax * vmax / (2 * a) + vmax * vmax / (2 * b)
    if length >= d_full:
        return vmax / a + vmax / b + (length - d_full) / vmax
    peak = (2 * a * b * length / (a + b)) ** 0.5
    return peak / a + peak / b


def time_at_distance(x: float, length: float, kin: KinematicsConfig) -> float:
    """Elapsed time when a rest-to-rest run over ``length`` reaches ``x``."""
    if x <= 0:
        return 0.0
    if x >= length:
        return segment_time(length, kin)
    a, b, vmax = kin.acceleration, kin.deceleration, kin.max_speed
    d_acc = vmax * vmax / (2 * a)
    d_dec = vmax * vmax / (2 * b)
    if length >= d_acc + d_dec:
        if x <= d_acc:
            return (2 * x / a) ** 0.5
        if x <= length - d_dec:
            return vmax / a + (x - d_acc) / vmax
        return segment_time(length, kin) - (2 * (length - x) / b) ** 0.5
    peak = (2 * a * b * length / (a + b)) ** 0.5
    d_peak = peak * peak / (2 * a)
    if x <= d_peak:
        return (2 * x / a) ** 0.5
    return segment_time(length, kin) - (2 * (length - x) / b) ** 0.5


def profile_path(coords, path, kin: KinematicsConfig, initial_heading: int | None):
    """Timed arrivals along a node path executed from rest to rest.

    Returns (arrivals, total_time, final_heading) where ``arrivals`` pairs
    each path node after the first with its arrival offset in seconds.
    Heading changes stop the robot and charge turn time per 90 degrees;
    the first edge also charges any turn away from ``initial_heading``.
    """
    if len(path) < 2:
        return [], 0.0, initial_heading

    # Split into straight runs of (start index, heading, node distances).
    headings = []
    lengths = []
    for u, v in zip(path, path[1:]):
        ux, uy = coords[u]
        vx, vy = coords[v]
        headings.append(heading_between(ux, uy, vx, vy))
        lengths.append(((vx - ux) ** 2 + (vy - uy) ** 2) ** 0.5)

    arrivals = []
    t = 0.0
    heading = initial_heading
    i = 0
    n = len(headings)
    while i < n:
        h = headings[i]
        t += kin.turn_time_90 * turn_steps(heading, h)
        j = i
        run_len = 0.0
        marks = []
        while j < n and headings[j] == h:
            run_len += lengths[j]
            marks.append((path[j + 1], run_len))
            j += 1
        total = segment_time(run_len, kin)
        for node, x in marks:
            arrivals.append((node, t + time_at_distance(x, run_len, kin)))
        t += total
        heading = h
        i = j
    return arrivals, t, heading
