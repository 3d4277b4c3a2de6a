"""Run configuration: one JSON file, selectively overridable from flags.

Every tunable the pipeline uses is a key here; command line flags only
override, never extend.  Unknown keys are rejected so typos fail fast.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .geo import TravelModel
from .matching import FeasibilityRules
from .scenario import Rectangle, ScenarioConfig, ScenarioError, Window
from .simulation import EmissionModel


class ConfigError(Exception):
    pass


_TOP_KEYS = {
    "gtfs_path", "synthetic_city", "output_dir", "seed", "service_date",
    "tau", "dwell_s", "max_walk_km", "transfer_s", "num_itineraries",
    "seat_capacity", "workers", "capacity_enforcement",
    "meeting_point_route_types", "travel", "rules", "emissions",
    "scenario", "agents_path",
}
_SCENARIO_KEYS = {
    "rectangles", "driver_density", "rider_density", "area_km2",
    "sim_window", "stats_window", "driver_count", "rider_count",
}


@dataclass
class RunConfig:
    gtfs_path: str | None = None
    synthetic_city: bool = False
    output_dir: str = "out"
    seed: int = 0
    service_date: str = "2022-07-20"
    tau: float = 0.15
    dwell_s: int = 60
    max_walk_km: float = 2.5
    transfer_s: int = 60
    num_itineraries: int = 10
    seat_capacity: int = 4
    workers: int = 0  # 0: one worker per CPU
    capacity_enforcement: bool = True
    meeting_point_route_types: tuple[int, ...] = (1,)
    travel: TravelModel = field(default_factory=TravelModel)
    rules: FeasibilityRules = field(default_factory=FeasibilityRules)
    emissions: EmissionModel = field(default_factory=EmissionModel)
    scenario: ScenarioConfig | None = None
    agents_path: str | None = None

    def effective_workers(self) -> int:
        if self.workers > 0:
            return self.workers
        return os.cpu_count() or 1


def _window(value, key: str) -> Window:
    if not (isinstance(value, list) and len(value) == 2):
        raise ConfigError(f"{key} must be a [start, end] pair of HH:MM:SS strings")
    try:
        return Window.from_texts(value[0], value[1])
    except (ValueError, ScenarioError) as exc:
        raise ConfigError(f"bad {key}: {exc}") from None


def _rectangles(value) -> tuple[Rectangle, ...]:
    if value == "city":
        from .synthetic import city_rectangles

        return city_rectangles()
    if not isinstance(value, list) or not value:
        raise ConfigError("scenario.rectangles must be \"city\" or a non-empty list")
    out = []
    for i, item in enumerate(value):
        if not isinstance(item, list) or len(item) not in (4, 5):
            raise ConfigError(
                f"rectangle {i} must be [lat_min, lat_max, lon_min, lon_max] "
                "with an optional weight"
            )
        try:
            out.append(Rectangle(*[float(x) for x in item]))
        except (TypeError, ValueError, ScenarioError) as exc:
            raise ConfigError(f"bad rectangle {i}: {exc}") from None
    return tuple(out)


def _scenario(raw: dict, seed: int, seat_capacity: int) -> ScenarioConfig:
    unknown = set(raw) - _SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    if "rectangles" not in raw:
        raise ConfigError("scenario.rectangles is required")
    kwargs = {
        "rectangles": _rectangles(raw["rectangles"]),
        "driver_density": float(raw.get("driver_density", 0.0)),
        "rider_density": float(raw.get("rider_density", 0.0)),
        "seed": seed,
        "seat_capacity": seat_capacity,
    }
    if "sim_window" in raw:
        kwargs["sim_window"] = _window(raw["sim_window"], "scenario.sim_window")
    if "stats_window" in raw:
        kwargs["stats_window"] = _window(raw["stats_window"], "scenario.stats_window")
    if raw.get("area_km2") is not None:
        kwargs["area_km2"] = float(raw["area_km2"])
    for key in ("driver_count", "rider_count"):
        if raw.get(key) is not None:
            kwargs[key] = int(raw[key])
    try:
        return ScenarioConfig(**kwargs)
    except ScenarioError as exc:
        raise ConfigError(str(exc)) from None


def _sub(raw: dict, key: str, cls, allowed: set[str]):
    value = raw.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"{key} must be an object")
    unknown = set(value) - allowed
    if unknown:
        raise ConfigError(f"unknown {key} keys: {sorted(unknown)}")
    try:
        return cls(**value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {key}: {exc}") from None


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Read a JSON config file and apply flag overrides on top."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    if overrides:
        raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}

    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    cfg = RunConfig()
    try:
        cfg.gtfs_path = raw.get("gtfs_path")
        cfg.synthetic_city = bool(raw.get("synthetic_city", False))
        cfg.output_dir = str(raw.get("output_dir", cfg.output_dir))
        cfg.seed = int(raw.get("seed", cfg.seed))
        cfg.service_date = str(raw.get("service_date", cfg.service_date))
        cfg.tau = float(raw.get("tau", cfg.tau))
        cfg.dwell_s = int(raw.get("dwell_s", cfg.dwell_s))
        cfg.max_walk_km = float(raw.get("max_walk_km", cfg.max_walk_km))
        cfg.transfer_s = int(raw.get("transfer_s", cfg.transfer_s))
        cfg.num_itineraries = int(raw.get("num_itineraries", cfg.num_itineraries))
        cfg.seat_capacity = int(raw.get("seat_capacity", cfg.seat_capacity))
        cfg.workers = int(raw.get("workers", cfg.workers))
        cfg.capacity_enforcement = bool(raw.get("capacity_enforcement", True))
        cfg.meeting_point_route_types = tuple(
            int(x) for x in raw.get("meeting_point_route_types", [1])
        )
        cfg.agents_path = raw.get("agents_path")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from None

    if cfg.tau < 0:
        raise ConfigError("tau must be non-negative")
    if cfg.dwell_s < 0 or cfg.transfer_s < 0:
        raise ConfigError("dwell_s and transfer_s must be non-negative")
    if not cfg.meeting_point_route_types:
        raise ConfigError("meeting_point_route_types must not be empty")
    if cfg.gtfs_path is None and not cfg.synthetic_city:
        raise ConfigError("either gtfs_path or synthetic_city is required")

    cfg.travel = _sub(raw, "travel", TravelModel, {"drive_speed_kmh", "walk_speed_kmh", "circuity"})
    cfg.rules = _sub(raw, "rules", FeasibilityRules, {"max_wait_s", "max_walk_km", "walk_time_bound"})
    cfg.emissions = _sub(raw, "emissions", EmissionModel, {"grams_per_km"})
    if "scenario" in raw:
        if not isinstance(raw["scenario"], dict):
            raise ConfigError("scenario must be an object")
        cfg.scenario = _scenario(raw["scenario"], cfg.seed, cfg.seat_capacity)
    return cfg
