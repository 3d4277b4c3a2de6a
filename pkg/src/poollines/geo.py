"""Geospatial primitives and the door-to-door travel time model.

All distances are great-circle kilometres scaled by a circuity factor to
approximate road lengths.  Travel times are whole seconds, rounded up.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# IUGG mean Earth radius.
EARTH_RADIUS_KM = 6371.0088

# Guards against float noise pushing an exact quotient just above an
# integer, which ceil would then overshoot by a full second.
_CEIL_EPS = 1e-9


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 coordinate pair in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat!r}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon!r}")


@dataclass(frozen=True)
class TravelModel:
    """Speeds and road circuity used for every off-timetable movement.

    drive_speed_kmh: door-to-door car speed.
    walk_speed_kmh: pedestrian speed.
    circuity: ratio of road distance to great-circle distance, >= 1.
    """

    drive_speed_kmh: float = 40.0
    walk_speed_kmh: float = 5.0
    circuity: float = 1.3

    def __post_init__(self) -> None:
        if self.drive_speed_kmh <= 0 or self.walk_speed_kmh <= 0:
            raise ValueError("speeds must be positive")
        if self.circuity < 1.0:
            raise ValueError("circuity must be >= 1")


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points in kilometres."""
    lat1, lon1, lat2, lon2 = map(math.radians, (a.lat, a.lon, b.lat, b.lon))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(h))


def road_km(a: GeoPoint, b: GeoPoint, model: TravelModel) -> float:
    """Approximate road distance: circuity times the great-circle distance."""
    return model.circuity * haversine_km(a, b)


def _seconds(km: float, speed_kmh: float) -> int:
    raw = km * 3600.0 / speed_kmh
    return max(0, math.ceil(raw - _CEIL_EPS))


def drive_seconds(a: GeoPoint, b: GeoPoint, model: TravelModel) -> int:
    """Driving time over the road distance, rounded up to whole seconds."""
    return _seconds(road_km(a, b, model), model.drive_speed_kmh)


def walk_seconds(a: GeoPoint, b: GeoPoint, model: TravelModel) -> int:
    """Walking time over the road distance, rounded up to whole seconds."""
    return _seconds(road_km(a, b, model), model.walk_speed_kmh)


def haversine_km_to_point(lat_rad: np.ndarray, lon_rad: np.ndarray, p: GeoPoint) -> np.ndarray:
    """Vectorised great-circle distance from many points to one point.

    ``lat_rad``/``lon_rad`` are radian arrays; returns kilometres.
    """
    plat = math.radians(p.lat)
    plon = math.radians(p.lon)
    h = (
        np.sin((plat - lat_rad) / 2.0) ** 2
        + np.cos(lat_rad) * math.cos(plat) * np.sin((plon - lon_rad) / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(h))
