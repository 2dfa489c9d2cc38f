"""Run outputs: sampled time series, totals, heatmap snapshots, UTRS."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class SamplePoint:
    t: float
    orders_per_hour: float
    well_sortedness: float
    mean_trip_time: float
    fill_level: float

    def row(self) -> list[float]:
        return [self.t, self.orders_per_hour, self.well_sortedness,
                self.mean_trip_time, self.fill_level]


@dataclass
class HeatmapSnapshot:
    """Combined score per storage-location grid cell at one instant."""

    t: float
    width: int
    height: int
    cells: list[tuple[int, int, float | None]]  # (grid x, grid y, score)

    def cell_count(self) -> int:
        return len(self.cells)


@dataclass
class RunResult:
    utrs: float
    series: list[SamplePoint] = field(default_factory=list)
    totals: dict[str, float] = field(default_factory=dict)
    heatmaps: list[HeatmapSnapshot] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "utrs": self.utrs,
            "series": [p.row() for p in self.series],
            "series_columns": ["t", "orders_per_hour", "well_sortedness",
                               "mean_trip_time", "fill_level"],
            "totals": self.totals,
            "heatmaps": [
                {"t": h.t, "width": h.width, "height": h.height,
                 "cells": [[x, y, s] for x, y, s in h.cells]}
                for h in self.heatmaps
            ],
            "extras": self.extras,
        }

    def to_json(self) -> str:
        """Deterministic serialization: sorted keys, no whitespace drift."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
