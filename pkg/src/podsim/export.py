"""File exports: sampled time series (CSV) and score heatmaps (CSV + PPM).

Exports are deterministic byte for byte: same result, same file.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .results import HeatmapSnapshot, RunResult

SERIES_HEADER = "time_s,orders_per_hour,well_sortedness,mean_trip_time_s,fill_level"


def export_time_series(result: RunResult, path) -> Path:
    """One CSV row per sample; header line first; newline-terminated rows."""
    path = Path(path)
    lines = [SERIES_HEADER]
    for p in result.series:
        lines.append(",".join(repr(v) for v in p.row()))
    path.write_text("\n".join(lines) + "\n")
    return path


@dataclass
class HeatmapGrid:
    """Scores addressed by storage-location grid coordinates."""

    width: int
    height: int
    cells: dict[tuple[int, int], float | None]
    t: float

    @classmethod
    def from_snapshot(cls, snapshot: HeatmapSnapshot) -> "HeatmapGrid":
        cells = {(x, y): score for x, y, score in snapshot.cells}
        return cls(snapshot.width, snapshot.height, cells, snapshot.t)


def export_heatmap(snapshot: HeatmapSnapshot, path) -> tuple[Path, Path]:
    """Write the grid as ``<path>.csv`` and ``<path>.ppm``.

    The CSV is a height x width matrix, top row northmost: empty string for
    aisle cells, ``nan`` for an empty storage location, else the score.
    The PPM maps score 0 -> blue through score max -> red, empty locations
    white, aisles gray.
    """
    grid = HeatmapGrid.from_snapshot(snapshot)
    base = Path(path)
    csv_path = base.with_suffix(".csv")
    ppm_path = base.with_suffix(".ppm")

    rows = []
    for y in range(grid.height - 1, -1, -1):
        row = []
        for x in range(grid.width):
            if (x, y) not in grid.cells:
                row.append("")
            else:
                score = grid.cells[(x, y)]
                row.append("nan" if score is None else repr(score))
        rows.append(",".join(row))
    csv_path.write_text("\n".join(rows) + "\n")

    peak = max((s for s in grid.cells.values() if s is not None), default=0.0)
    pixels = bytearray()
    for y in range(grid.height - 1, -1, -1):
        for x in range(grid.width):
            if (x, y) not in grid.cells:
                pixels += bytes((220, 220, 220))
            else:
                score = grid.cells[(x, y)]
                if score is None:
                    pixels += bytes((255, 255, 255))
                else:
                    v = score / peak if peak > 0 else 0.0
                    pixels += bytes((round(255 * v), 40, round(255 * (1 - v))))
    header = f"P6\n{grid.width} {grid.height}\n255\n".encode()
    ppm_path.write_bytes(header + bytes(pixels))
    return csv_path, ppm_path
