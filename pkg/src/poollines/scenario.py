"""Synthetic demand: agents sampled over weighted rectangles.

Origins and destinations fall uniformly inside rectangles chosen with
probability proportional to their weight (area by default).  Departure
times are uniform over the simulation window; statistics are later
restricted to a narrower stats window.  Everything is driven by one
seed and per-agent substreams, so regeneration is order-independent.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .drivers import Driver
from .geo import GeoPoint
from .gtfs import format_coordinate, parse_gtfs_time
from .matching import Rider

# Metres of latitude per degree, and of longitude per degree at the
# rectangle's mid latitude, via the spherical arc length.
_KM_PER_DEG = math.pi * 6371.0088 / 180.0


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class Rectangle:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    weight: float | None = None  # None: weight by area

    def __post_init__(self) -> None:
        if self.lat_min >= self.lat_max or self.lon_min >= self.lon_max:
            raise ScenarioError("rectangle has non-positive extent")
        if self.weight is not None and self.weight <= 0:
            raise ScenarioError("rectangle weight must be positive")

    @property
    def area_km2(self) -> float:
        mid = math.radians((self.lat_min + self.lat_max) / 2.0)
        return (
            (self.lat_max - self.lat_min)
            * _KM_PER_DEG
            * (self.lon_max - self.lon_min)
            * _KM_PER_DEG
            * math.cos(mid)
        )


@dataclass(frozen=True)
class Window:
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ScenarioError("window must have positive length")

    @property
    def seconds(self) -> int:
        return self.end - self.start

    @property
    def hours(self) -> float:
        return self.seconds / 3600.0

    def contains(self, t: int) -> bool:
        return self.start <= t < self.end

    @classmethod
    def from_texts(cls, start: str, end: str) -> "Window":
        return cls(parse_gtfs_time(start), parse_gtfs_time(end))


@dataclass(frozen=True)
class ScenarioConfig:
    rectangles: tuple[Rectangle, ...]
    driver_density: float  # drivers per km^2 per hour
    rider_density: float
    sim_window: Window = field(default_factory=lambda: Window.from_texts("10:30:00", "11:30:00"))
    stats_window: Window = field(default_factory=lambda: Window.from_texts("10:45:00", "11:15:00"))
    seed: int = 0
    area_km2: float | None = None  # None: sum of rectangle areas
    driver_count: int | None = None  # explicit overrides beat the density formula
    rider_count: int | None = None
    seat_capacity: int = 4

    def __post_init__(self) -> None:
        if not self.rectangles:
            raise ScenarioError("at least one rectangle is required")
        if self.driver_density < 0 or self.rider_density < 0:
            raise ScenarioError("densities must be non-negative")

    @property
    def effective_area_km2(self) -> float:
        if self.area_km2 is not None:
            return self.area_km2
        return sum(r.area_km2 for r in self.rectangles)


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    drivers: tuple[Driver, ...]
    riders: tuple[Rider, ...]


def round_half_down(x: float) -> int:
    """Nearest integer, with exact halves rounding down."""
    return math.ceil(x - 0.5)


def agent_count(density: float, area_km2: float, hours: float) -> int:
    return max(0, round_half_down(density * area_km2 * hours))


def _weights(rectangles: tuple[Rectangle, ...]) -> list[float]:
    weights = [r.weight if r.weight is not None else r.area_km2 for r in rectangles]
    total = sum(weights)
    return [w / total for w in weights]


def sample_point(
    rectangles: tuple[Rectangle, ...], rng: np.random.Generator,
    weights: list[float] | None = None,
) -> GeoPoint:
    """A uniform point from a weight-chosen rectangle."""
    if weights is None:
        weights = _weights(rectangles)
    u = rng.random()
    cumulative = 0.0
    chosen = rectangles[-1]
    for r, w in zip(rectangles, weights):
        cumulative += w
        if u < cumulative:
            chosen = r
            break
    lat = chosen.lat_min + rng.random() * (chosen.lat_max - chosen.lat_min)
    lon = chosen.lon_min + rng.random() * (chosen.lon_max - chosen.lon_min)
    return GeoPoint(lat, lon)


def generate_scenario(cfg: ScenarioConfig) -> Scenario:
    """Sample drivers and riders per the config.

    Each agent draws from its own ``default_rng([seed, tag, id])``
    stream.  Drivers declare at the start of the simulation window.
    """
    hours = cfg.sim_window.hours
    n_drivers = (
        cfg.driver_count
        if cfg.driver_count is not None
        else agent_count(cfg.driver_density, cfg.effective_area_km2, hours)
    )
    n_riders = (
        cfg.rider_count
        if cfg.rider_count is not None
        else agent_count(cfg.rider_density, cfg.effective_area_km2, hours)
    )
    weights = _weights(cfg.rectangles)

    drivers = []
    for i in range(1, n_drivers + 1):
        rng = np.random.default_rng([cfg.seed, 0, i])
        origin = sample_point(cfg.rectangles, rng, weights)
        destination = sample_point(cfg.rectangles, rng, weights)
        departure = int(rng.integers(cfg.sim_window.start, cfg.sim_window.end))
        drivers.append(
            Driver(
                driver_id=i,
                origin=origin,
                destination=destination,
                departure_time=departure,
                declaration_time=cfg.sim_window.start,
                seat_capacity=cfg.seat_capacity,
            )
        )

    riders = []
    for i in range(1, n_riders + 1):
        rng = np.random.default_rng([cfg.seed, 1, i])
        origin = sample_point(cfg.rectangles, rng, weights)
        destination = sample_point(cfg.rectangles, rng, weights)
        departure = int(rng.integers(cfg.sim_window.start, cfg.sim_window.end))
        riders.append(Rider(i, origin, destination, departure))

    return Scenario(cfg, tuple(drivers), tuple(riders))


_AGENT_HEADER = ["kind", "id", "origin_lat", "origin_lon", "destination_lat", "destination_lon", "departure_s"]


def write_agents(path: str | Path, scenario: Scenario) -> None:
    """Agents file: one row per driver and rider, coordinates lossless."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_AGENT_HEADER)
        for d in scenario.drivers:
            writer.writerow(
                [
                    "driver", d.driver_id,
                    format_coordinate(d.origin.lat), format_coordinate(d.origin.lon),
                    format_coordinate(d.destination.lat), format_coordinate(d.destination.lon),
                    d.departure_time,
                ]
            )
        for r in scenario.riders:
            writer.writerow(
                [
                    "rider", r.rider_id,
                    format_coordinate(r.origin.lat), format_coordinate(r.origin.lon),
                    format_coordinate(r.destination.lat), format_coordinate(r.destination.lon),
                    r.departure_time,
                ]
            )


def read_agents(
    path: str | Path, declaration_time: int, seat_capacity: int = 4
) -> tuple[tuple[Driver, ...], tuple[Rider, ...]]:
    """Load an agents file.

    Declaration time and seat capacity are not stored in the file; they
    come from the run configuration.
    """
    drivers: list[Driver] = []
    riders: list[Rider] = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            kind = row["kind"]
            origin = GeoPoint(float(row["origin_lat"]), float(row["origin_lon"]))
            destination = GeoPoint(float(row["destination_lat"]), float(row["destination_lon"]))
            departure = int(row["departure_s"])
            if kind == "driver":
                drivers.append(
                    Driver(
                        driver_id=int(row["id"]),
                        origin=origin,
                        destination=destination,
                        departure_time=departure,
                        declaration_time=min(declaration_time, departure),
                        seat_capacity=seat_capacity,
                    )
                )
            elif kind == "rider":
                riders.append(Rider(int(row["id"]), origin, destination, departure))
            else:
                raise ScenarioError(f"unknown agent kind {kind!r}")
    return tuple(drivers), tuple(riders)
