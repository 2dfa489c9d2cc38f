"""Event-driven simulator of robotic mobile fulfillment with pod repositioning."""

from .config import ConfigError, ExperimentPlan, parse_config, parse_config_data
from .engine import (DOWN_PERIOD, PARALLEL, DeadlockError, ScenarioConfig, SimulationRun,
                     run)
from .export import HeatmapGrid, export_heatmap, export_time_series
from .harness import run_plan
from .kinematics import KinematicsConfig
from .layout import BUILTIN_LAYOUTS, LayoutSpec, generate_layout, storage_location_count
from .orderstream import OrderStream
from .pathing import PathTimeEstimator, ProminenceField, compute_prominence_field, prominence
from .policies import (CacheSet, MechanismConfig, RepositioningMove, build_cache_set,
                       choose_passive_location, compute_cache_threshold, desired_rank,
                       desired_ranks, next_active_move)
from .results import HeatmapSnapshot, RunResult, SamplePoint
from .scoring import (RankTable, ScoringWeights, WellSortednessReport, combined_score,
                      combined_scores, compute_ranks, pod_speed, pod_utility,
                      throughput_upper_bound, utrs, well_sortedness, well_sortedness_report)
from .world import (CustomerOrder, Pod, ReplenishmentOrder, RobotAgent, SkuCatalog, Station,
                    StorageLocation, World)

__version__ = "0.1.0"
