"""Experiment configuration: YAML in, validated ExperimentPlan out.

Accepted top-level keys (anything else is rejected by name):

    scenario      down-period | parallel                     (required)
    layout        built-in name, explicit spec dict, or list (required)
    mechanism     label like "N-U" ("N" disables active), or list (required)
    robot_split   R1P3A0 | R1P2A1 | R1P3A1, or list; parallel scenarios only
    horizon       seconds, or a string like "48h" / "7d"     (default 7d)
    repetitions   runs per cell                              (default 5)
    base_seed     integer folded into every per-run seed     (default 1)
    kinematics    mapping: max_speed, acceleration, deceleration, turn_time_90
    output_dir    artifact directory                         (default "out")
    parallelism   worker processes for the plan              (default 1)

Layout x mechanism (x split) lists expand into one plan cell each. A cell's
repetition seeds derive from the cell id, so execution order never matters.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import yaml

from .engine import DOWN_PERIOD, PARALLEL, ROBOT_SPLITS, ScenarioConfig
from .kinematics import KinematicsConfig
from .layout import BUILTIN_LAYOUTS, LayoutSpec
from .policies import MechanismConfig

TOP_KEYS = ("scenario", "layout", "mechanism", "robot_split", "horizon", "repetitions",
            "base_seed", "kinematics", "output_dir", "parallelism")
KINEMATICS_KEYS = ("max_speed", "acceleration", "deceleration", "turn_time_90")
LAYOUT_KEYS = ("name", "pick_stations", "replenish_stations", "aisles_horizontal",
               "aisles_vertical", "pods")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentPlan:
    cells: list[tuple[str, ScenarioConfig]]
    repetitions: int
    base_seed: int
    output_dir: str
    parallelism: int = 1

    def seed_for(self, cell_id: str, repetition: int) -> int:
        digest = hashlib.sha256(f"{cell_id}|{repetition}|{self.base_seed}".encode()).digest()
        return int.from_bytes(digest[:8], "big")

    def runs(self):
        """Yield (cell_id, repetition, fully seeded ScenarioConfig)."""
        for cell_id, cfg in self.cells:
            for rep in range(self.repetitions):
                yield cell_id, rep, replace(cfg, seed=self.seed_for(cell_id, rep))


def _as_list(value) -> list:
    return value if isinstance(value, list) else [value]


def _parse_horizon(value) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        horizon = float(value)
    elif isinstance(value, str):
        unit = value[-1].lower()
        scale = {"s": 1.0, "m": 60.0, "h": 3600.0, "d": 86400.0}.get(unit)
        if scale is None:
            raise ConfigError(f"horizon {value!r} not understood; use seconds or e.g. '48h', '7d'")
        try:
            horizon = float(value[:-1]) * scale
        except ValueError as exc:
            raise ConfigError(f"horizon {value!r} not understood") from exc
    else:
        raise ConfigError(f"horizon must be a number or duration string, got {value!r}")
    if horizon <= 0:
        raise ConfigError("horizon must be positive")
    return horizon


def _parse_layout(value) -> LayoutSpec:
    if isinstance(value, str):
        if value not in BUILTIN_LAYOUTS:
            raise ConfigError(
                f"layout {value!r} unknown; built-ins: {', '.join(sorted(BUILTIN_LAYOUTS))}"
            )
        return BUILTIN_LAYOUTS[value]
    if isinstance(value, dict):
        unknown = set(value) - set(LAYOUT_KEYS)
        if unknown:
            raise ConfigError(
                f"layout key(s) {sorted(unknown)} not accepted; accepted: {list(LAYOUT_KEYS)}"
            )
        missing = set(LAYOUT_KEYS) - set(value)
        if missing:
            raise ConfigError(f"explicit layout needs key(s) {sorted(missing)}")
        spec = LayoutSpec(**value)
        spec.validate()
        return spec
    raise ConfigError(f"layout must be a name or a mapping, got {value!r}")


def _parse_mechanism(value) -> MechanismConfig:
    if not isinstance(value, str):
        raise ConfigError(f"mechanism must be a label like 'N-U', got {value!r}")
    try:
        return MechanismConfig.from_label(value)
    except ValueError as exc:
        raise ConfigError(f"mechanism {value!r}: {exc}") from exc


def _parse_kinematics(value) -> KinematicsConfig:
    if not isinstance(value, dict):
        raise ConfigError("kinematics must be a mapping")
    unknown = set(value) - set(KINEMATICS_KEYS)
    if unknown:
        raise ConfigError(
            f"kinematics key(s) {sorted(unknown)} not accepted; accepted: {list(KINEMATICS_KEYS)}"
        )
    try:
        return KinematicsConfig(**{k: float(v) for k, v in value.items()})
    except ValueError as exc:
        raise ConfigError(f"kinematics: {exc}") from exc


def parse_config_data(data: dict) -> ExperimentPlan:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(data) - set(TOP_KEYS)
    if unknown:
        raise ConfigError(
            f"config key(s) {sorted(unknown)} not accepted; accepted: {list(TOP_KEYS)}"
        )
    for key in ("scenario", "layout", "mechanism"):
        if key not in data:
            raise ConfigError(f"config needs key {key!r}")

    scenario = data["scenario"]
    if scenario not in (DOWN_PERIOD, PARALLEL):
        raise ConfigError(
            f"scenario {scenario!r} unknown; accepted: {DOWN_PERIOD}, {PARALLEL}"
        )

    repetitions = data.get("repetitions", 5)
    if not isinstance(repetitions, int) or isinstance(repetitions, bool) or repetitions < 1:
        raise ConfigError(f"repetitions must be a positive integer, got {repetitions!r}")
    base_seed = data.get("base_seed", 1)
    if not isinstance(base_seed, int) or isinstance(base_seed, bool):
        raise ConfigError(f"base_seed must be an integer, got {base_seed!r}")
    parallelism = data.get("parallelism", 1)
    if not isinstance(parallelism, int) or isinstance(parallelism, bool) or parallelism < 1:
        raise ConfigError(f"parallelism must be a positive integer, got {parallelism!r}")
    horizon = _parse_horizon(data.get("horizon", 7 * 86400))
    kinematics = _parse_kinematics(data.get("kinematics", {}))
    output_dir = data.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir must be a string")

    layouts = [_parse_layout(v) for v in _as_list(data["layout"])]
    mechanisms = [_parse_mechanism(v) for v in _as_list(data["mechanism"])]

    if scenario == DOWN_PERIOD:
        if "robot_split" in data:
            raise ConfigError("robot_split applies to parallel scenarios only")
        splits = [None]
    else:
        splits = _as_list(data.get("robot_split", "R1P3A0"))
        for s in splits:
            if s not in ROBOT_SPLITS:
                raise ConfigError(
                    f"robot_split {s!r} unknown; accepted: {sorted(ROBOT_SPLITS)}"
                )

    cells = []
    for layout in layouts:
        for mech in mechanisms:
            for split in splits:
                cell_id = f"{scenario}_{layout.name}_{mech.label()}"
                kwargs = dict(kind=scenario, layout=layout, mechanism=mech,
                              horizon=horizon, repetitions=repetitions,
                              kinematics=kinematics)
                if split is not None:
                    cell_id += f"_{split}"
                    kwargs["robot_split"] = split
                cells.append((cell_id, ScenarioConfig(**kwargs)))
    ids = [c for c, _ in cells]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate plan cells")
    return ExperimentPlan(cells, repetitions, base_seed, output_dir, parallelism)


def parse_config(path) -> ExperimentPlan:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is None:
        raise ConfigError(f"config file {path} is empty")
    return parse_config_data(data)


def plan_to_data(plan: ExperimentPlan) -> dict:
    """Canonical config mapping for a plan (inverse of parsing)."""
    first = plan.cells[0][1]
    layouts = []
    mechanisms = []
    splits = []
    for _, cfg in plan.cells:
        if cfg.layout.name not in [l.name for l in layouts]:
            layouts.append(cfg.layout)
        if cfg.mechanism.label() not in mechanisms:
            mechanisms.append(cfg.mechanism.label())
        if cfg.kind == PARALLEL and cfg.robot_split not in splits:
            splits.append(cfg.robot_split)
    data = {
        "scenario": first.kind,
        "layout": [
            l.name if BUILTIN_LAYOUTS.get(l.name) == l else
            {k: getattr(l, k) for k in LAYOUT_KEYS}
            for l in layouts
        ],
        "mechanism": mechanisms,
        "horizon": first.horizon,
        "repetitions": plan.repetitions,
        "base_seed": plan.base_seed,
        "kinematics": {k: getattr(first.kinematics, k) for k in KINEMATICS_KEYS},
        "output_dir": plan.output_dir,
        "parallelism": plan.parallelism,
    }
    if splits:
        data["robot_split"] = splits
    return data


def serialize_plan(plan: ExperimentPlan) -> str:
    return yaml.safe_dump(plan_to_data(plan), sort_keys=True)
