"""Seeded multi-robot patrol simulator with latent-inhibition scan policies."""

from __future__ import annotations

__version__ = "0.1.0"

from .engine import Event, Simulation, TrialConfig, TrialResult, run_trial
from .experiments import ExperimentGrid, TrialRecord, expand_grid, run_experiment
from .gridmap import CellCoord, GridMap, default_map, load_map, parse_map, serialize_map
from .pathfind import Path, UnreachableError, plan_path, route_adjacency
from .stats import GroupSummary, TukeyPair, anova_oneway, studentized_range_sf, tukey_hsd

__all__ = [
    "CellCoord",
    "Event",
    "ExperimentGrid",
    "GridMap",
    "GroupSummary",
    "Path",
    "Simulation",
    "TrialConfig",
    "TrialRecord",
    "TrialResult",
    "TukeyPair",
    "UnreachableError",
    "anova_oneway",
    "default_map",
    "expand_grid",
    "load_map",
    "parse_map",
    "plan_path",
    "route_adjacency",
    "run_experiment",
    "run_trial",
    "serialize_map",
    "studentized_range_sf",
    "tukey_hsd",
]
