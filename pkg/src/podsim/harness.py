"""Batch execution of an experiment plan with per-run artifacts.

Every plan cell runs ``repetitions`` times with seeds derived from the
cell id, so cells can run in any order or in parallel without changing a
single number. Each run writes ``result.json``, ``series.csv`` and any
heatmap snapshots into ``<out>/<cell>/rep<k>/``; the plan summary lands in
``<out>/summary.csv``.
"""

from __future__ import annotations

import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import ExperimentPlan
from .engine import ScenarioConfig, run
from .export import export_heatmap, export_time_series
from .results import RunResult

SUMMARY_HEADER = ("cell,repetitions,utrs_mean_pct,utrs_min_pct,utrs_max_pct,"
                  "units_picked_mean,failures")


@dataclass
class CellSummary:
    cell_id: str
    utrs_values: list[float]
    units_picked: list[float]
    failures: list[str]

    def row(self) -> str:
        n = len(self.utrs_values)
        if n:
            mean = sum(self.utrs_values) / n * 100.0
            low = min(self.utrs_values) * 100.0
            high = max(self.utrs_values) * 100.0
            units = sum(self.units_picked) / n
        else:
            mean = low = high = units = float("nan")
        return ",".join([self.cell_id, str(n), repr(mean), repr(low), repr(high),
                         repr(units), str(len(self.failures))])


@dataclass
class PlanSummary:
    cells: list[CellSummary]
    output_dir: Path

    @property
    def failed(self) -> bool:
        return any(c.failures for c in self.cells)


def _execute_one(args) -> tuple[str, int, RunResult | None, str | None]:
    cell_id, rep, config = args
    try:
        return cell_id, rep, run(config), None
    except Exception:  # noqa: BLE001 - a failed run must not sink the plan
        return cell_id, rep, None, traceback.format_exc()


def write_run_artifacts(result: RunResult, run_dir: Path) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "result.json").write_text(result.to_json() + "\n")
    export_time_series(result, run_dir / "series.csv")
    for snapshot in result.heatmaps:
        export_heatmap(snapshot, run_dir / f"heatmap_t{int(snapshot.t)}")


def run_plan(plan: ExperimentPlan, output_dir=None) -> PlanSummary:
    out = Path(output_dir if output_dir is not None else plan.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = list(plan.runs())

    if plan.parallelism > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=plan.parallelism) as pool:
            outcomes = list(pool.map(_execute_one, jobs))
    else:
        outcomes = [_execute_one(job) for job in jobs]

    by_cell: dict[str, CellSummary] = {
        cell_id: CellSummary(cell_id, [], [], []) for cell_id, _ in plan.cells
    }
    for cell_id, rep, result, error in sorted(outcomes, key=lambda o: (o[0], o[1])):
        cell = by_cell[cell_id]
        if error is not None:
            cell.failures.append(f"rep{rep}: {error.splitlines()[-1]}")
            (out / cell_id / f"rep{rep}").mkdir(parents=True, exist_ok=True)
            (out / cell_id / f"rep{rep}" / "error.txt").write_text(error)
            continue
        cell.utrs_values.append(result.utrs)
        cell.units_picked.append(result.totals["units_picked"])
        write_run_artifacts(result, out / cell_id / f"rep{rep}")

    cells = [by_cell[cell_id] for cell_id, _ in plan.cells]
    lines = [SUMMARY_HEADER] + [c.row() for c in cells]
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    return PlanSummary(cells, out)
