"""A deterministic 20 x 20 km synthetic city with subway and bus service.

Two subway lines cross at the centre and four bus lines cover the inner
ring; the outer edges are transit deserts on purpose, so door-to-door
car trips have something to contribute.  The feed is rebuilt from
constants on every call, no data files involved.
"""
from __future__ import annotations

import math

from .geo import GeoPoint
from .gtfs import (
    ROUTE_TYPE_BUS,
    ROUTE_TYPE_SUBWAY,
    CalendarRow,
    GtfsStopTime,
    Route,
    Stop,
    Timetable,
    Trip,
    parse_gtfs_time,
)
from .scenario import Rectangle

CITY_LAT0 = 45.0
CITY_LON0 = -122.3
CITY_SIZE_KM = 20.0
CITY_SERVICE_DATE = "2022-07-20"  # a Wednesday
CITY_AREA_KM2 = 400.0

_KM_PER_DEG = math.pi * 6371.0088 / 180.0
_MID_LAT = CITY_LAT0 + (CITY_SIZE_KM / 2.0) / _KM_PER_DEG
_KM_PER_DEG_LON = _KM_PER_DEG * math.cos(math.radians(_MID_LAT))

_SERVICE_ID = "EVERYDAY"
_FIRST_DEPARTURE = "09:30:00"
_LAST_DEPARTURE = "12:30:00"

# line id -> (route_type, axis, offset_km, stop_positions_km, hop_s, dwell_s, headway_s)
_LINES: dict[str, tuple[int, str, float, tuple[float, ...], int, int, int]] = {
    "SUB_NS": (ROUTE_TYPE_SUBWAY, "ns", 10.0, tuple(1.0 + 1.5 * k for k in range(13)), 150, 20, 600),
    "SUB_EW": (ROUTE_TYPE_SUBWAY, "ew", 10.0, tuple(1.0 + 1.5 * k for k in range(13)), 150, 20, 600),
    "BUS_W": (ROUTE_TYPE_BUS, "ns", 5.0, tuple(2.0 + 1.6 * k for k in range(11)), 200, 20, 900),
    "BUS_E": (ROUTE_TYPE_BUS, "ns", 15.0, tuple(2.0 + 1.6 * k for k in range(11)), 200, 20, 900),
    "BUS_S": (ROUTE_TYPE_BUS, "ew", 5.0, tuple(2.0 + 1.6 * k for k in range(11)), 200, 20, 900),
    "BUS_N": (ROUTE_TYPE_BUS, "ew", 15.0, tuple(2.0 + 1.6 * k for k in range(11)), 200, 20, 900),
}


def city_point(x_km: float, y_km: float) -> GeoPoint:
    """Map city grid kilometres (x east, y north) to coordinates."""
    return GeoPoint(
        CITY_LAT0 + y_km / _KM_PER_DEG,
        CITY_LON0 + x_km / _KM_PER_DEG_LON,
    )


def city_rectangles() -> tuple[Rectangle, ...]:
    """Demand rectangles: a heavy centre with lighter edge bands."""
    def rect(x0, y0, x1, y1, weight):
        a = city_point(x0, y0)
        b = city_point(x1, y1)
        return Rectangle(a.lat, b.lat, a.lon, b.lon, weight)

    return (
        rect(4.0, 4.0, 16.0, 16.0, 3.0),
        rect(0.0, 0.0, 4.0, 20.0, 1.0),
        rect(16.0, 0.0, 20.0, 20.0, 1.0),
        rect(4.0, 0.0, 16.0, 4.0, 0.75),
        rect(4.0, 16.0, 16.0, 20.0, 0.75),
    )


def _line_stops(line_id: str) -> list[Stop]:
    _, axis, offset, positions, _, _, _ = _LINES[line_id]
    stops = []
    for k, pos in enumerate(positions):
        if axis == "ns":
            point = city_point(offset, pos)
        else:
            point = city_point(pos, offset)
        stop_id = f"{line_id}_{k:02d}"
        stops.append(Stop(stop_id, stop_id, point))
    return stops


def build_synthetic_city() -> Timetable:
    stops: dict[str, Stop] = {}
    routes: dict[str, Route] = {}
    trips: dict[str, Trip] = {}
    stoptimes: dict[str, tuple[GtfsStopTime, ...]] = {}

    first = parse_gtfs_time(_FIRST_DEPARTURE)
    last = parse_gtfs_time(_LAST_DEPARTURE)

    for line_id, (route_type, _, _, _, hop_s, dwell_s, headway_s) in _LINES.items():
        line_stops = _line_stops(line_id)
        for stop in line_stops:
            stops[stop.stop_id] = stop
        routes[line_id] = Route(line_id, f"{line_id} line", route_type)

        for direction, ordered in (("O", line_stops), ("I", list(reversed(line_stops)))):
            start = first
            run = 0
            while start <= last:
                trip_id = f"{line_id}_{direction}_{run:02d}"
                trips[trip_id] = Trip(trip_id, line_id, _SERVICE_ID)
                rows = []
                clock = start
                for sequence, stop in enumerate(ordered):
                    arrival = clock
                    if sequence in (0, len(ordered) - 1):
                        departure = arrival
                    else:
                        departure = arrival + dwell_s
                    rows.append(
                        GtfsStopTime(trip_id, stop.stop_id, arrival, departure, sequence)
                    )
                    clock = departure + hop_s
                stoptimes[trip_id] = tuple(rows)
                start += headway_s
                run += 1

    calendar = (CalendarRow(_SERVICE_ID, (1, 1, 1, 1, 1, 1, 1), 20220101, 20221231),)
    return Timetable(
        stops={k: stops[k] for k in sorted(stops)},
        routes={k: routes[k] for k in sorted(routes)},
        trips={k: trips[k] for k in sorted(trips)},
        stoptimes={k: stoptimes[k] for k in sorted(stoptimes)},
        calendar=calendar,
    )
