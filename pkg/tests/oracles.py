"""Independent reference implementations the tests check the package against.

Nothing here imports from the package's planner internals.  The router
oracle materialises the full time-event graph (one node per scheduled
departure and arrival) and computes reachability over explicit edges,
which is a different algorithm family from the connection scan in the
package, so shared bugs are unlikely.
"""
from __future__ import annotations

import math

import numpy as np

from poollines.geo import GeoPoint, TravelModel
from poollines.gtfs import (
    CalendarRow,
    GtfsStopTime,
    Route,
    Stop,
    Timetable,
    Trip,
)
from poollines.injection import pool_trip_id
from poollines.planner import FootpathSet

SPHERE_RADIUS_KM = 6371.0088


def reference_haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance via the atan2 form of the sphere formula.

    Deliberately not the half-sine form the package uses; stable at all
    separations, so it doubles as the check for tiny distances.
    """
    p1 = math.radians(a.lat)
    p2 = math.radians(b.lat)
    dl = math.radians(b.lon - a.lon)
    y = math.hypot(
        math.cos(p2) * math.sin(dl),
        math.cos(p1) * math.sin(p2) - math.sin(p1) * math.cos(p2) * math.cos(dl),
    )
    x = math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2) * math.cos(dl)
    return SPHERE_RADIUS_KM * math.atan2(y, x)


def reference_road_km(a: GeoPoint, b: GeoPoint, model: TravelModel) -> float:
    return model.circuity * reference_haversine_km(a, b)


def _ceil_seconds(km: float, speed_kmh: float) -> int:
    return max(0, math.ceil(km * 3600.0 / speed_kmh - 1e-9))


def reference_walk_seconds(a: GeoPoint, b: GeoPoint, model: TravelModel) -> int:
    return _ceil_seconds(reference_road_km(a, b, model), model.walk_speed_kmh)


def reference_drive_seconds(a: GeoPoint, b: GeoPoint, model: TravelModel) -> int:
    return _ceil_seconds(reference_road_km(a, b, model), model.drive_speed_kmh)


def reference_path_km(points: list[GeoPoint], model: TravelModel) -> float:
    return sum(reference_road_km(a, b, model) for a, b in zip(points, points[1:]))


class OracleRouter:
    """Earliest arrival by closure over the materialised event graph.

    Events are the scheduled departures and arrivals of every hop.
    Timetable-only edges (stay on the vehicle, change at a stop after
    the buffer, walk a footpath link to a later departure) are listed
    explicitly up front; each query seeds the closure with departures
    walkable from the origin and reads off arrivals walkable to the
    destination.
    """

    def __init__(
        self,
        timetable: Timetable,
        model: TravelModel,
        footpath_links: list[tuple[str, str, int]],
        max_walk_km: float = 2.5,
        transfer_s: int = 60,
    ):
        self.model = model
        self.max_walk_km = max_walk_km
        self.stop_pos = {sid: s.position for sid, s in timetable.stops.items()}

        # Departure event: (trip_id, hop index i) leaving at stoptime i.
        # Arrival event: (trip_id, i) arriving at stoptime i, i >= 1.
        self.dep_events: list[tuple[str, int, str, int]] = []  # trip, i, stop, time
        self.arr_events: list[tuple[str, int, str, int]] = []
        for trip_id in sorted(timetable.stoptimes):
            sts = timetable.stoptimes[trip_id]
            if len(sts) < 2:
                continue
            for i, st in enumerate(sts):
                if i < len(sts) - 1:
                    self.dep_events.append((trip_id, i, st.stop_id, st.departure))
                if i > 0:
                    self.arr_events.append((trip_id, i, st.stop_id, st.arrival))

        deps_at: dict[str, list[int]] = {}
        for k, (_, _, stop, _) in enumerate(self.dep_events):
            deps_at.setdefault(stop, []).append(k)
        walk_from: dict[str, list[tuple[str, int]]] = {}
        for a, b, secs in footpath_links:
            walk_from.setdefault(a, []).append((b, secs))

        dep_index = {
            (trip, i): k for k, (trip, i, _, _) in enumerate(self.dep_events)
        }
        # arr_edges[j] lists departure events usable after arrival event j.
        self.arr_edges: list[list[int]] = []
        for trip, i, stop, t in self.arr_events:
            out: list[int] = []
            cont = dep_index.get((trip, i))
            if cont is not None:
                out.append(cont)
            for k in deps_at.get(stop, ()):
                if self.dep_events[k][3] >= t + transfer_s:
                    out.append(k)
            for other, secs in walk_from.get(stop, ()):
                for k in deps_at.get(other, ()):
                    if self.dep_events[k][3] >= t + secs:
                        out.append(k)
            self.arr_edges.append(sorted(set(out)))

        arr_index = {
            (trip, i): j for j, (trip, i, _, _) in enumerate(self.arr_events)
        }
        # dep_to_arr[k]: the arrival event the hop from departure k reaches.
        self.dep_to_arr = [
            arr_index[(trip, i + 1)] for trip, i, _, _ in self.dep_events
        ]

    def _endpoint_walk(self, point: GeoPoint, stop_id: str) -> int | None:
        km = reference_road_km(point, self.stop_pos[stop_id], self.model)
        if km > self.max_walk_km:
            return None
        return _ceil_seconds(km, self.model.walk_speed_kmh)

    def earliest_arrival(
        self,
        origin: GeoPoint,
        destination: GeoPoint,
        departure: int,
        allowed=None,
        banned: frozenset[str] = frozenset(),
    ) -> int:
        def usable(trip_id: str) -> bool:
            if trip_id in banned:
                return False
            return allowed is None or allowed(trip_id)

        best = departure + reference_walk_seconds(origin, destination, self.model)

        seed: list[int] = []
        access_cache: dict[str, int | None] = {}
        for k, (trip, _, stop, t) in enumerate(self.dep_events):
            if not usable(trip):
                continue
            if stop not in access_cache:
                access_cache[stop] = self._endpoint_walk(origin, stop)
            walk = access_cache[stop]
            if walk is not None and departure + walk <= t:
                seed.append(k)

        dep_reached = [False] * len(self.dep_events)
        arr_reached = [False] * len(self.arr_events)
        stack = list(seed)
        for k in seed:
            dep_reached[k] = True
        while stack:
            k = stack.pop()
            j = self.dep_to_arr[k]
            if arr_reached[j]:
                continue
            arr_reached[j] = True
            for k2 in self.arr_edges[j]:
                if not dep_reached[k2] and usable(self.dep_events[k2][0]):
                    dep_reached[k2] = True
                    stack.append(k2)

        egress_cache: dict[str, int | None] = {}
        for j, (trip, _, stop, t) in enumerate(self.arr_events):
            if not arr_reached[j]:
                continue
            if stop not in egress_cache:
                egress_cache[stop] = self._endpoint_walk(destination, stop)
            walk = egress_cache[stop]
            if walk is not None and t + walk < best:
                best = t + walk
        return best


def footpaths_from_links(
    timetable: Timetable, links: list[tuple[str, str, int, float]]
) -> FootpathSet:
    """Build the CSR footpath structure from explicit directed links.

    ``links`` holds (from_stop, to_stop, seconds, km) and must already
    be symmetric.
    """
    stop_ids = tuple(sorted(timetable.stops))
    index = {sid: i for i, sid in enumerate(stop_ids)}
    rows = sorted((index[a], index[b], s, km) for a, b, s, km in links)
    n = len(stop_ids)
    starts = np.zeros(n + 1, dtype=np.int64)
    counts = np.bincount([r[0] for r in rows], minlength=n) if rows else np.zeros(n, dtype=np.int64)
    starts[1:] = np.cumsum(counts)
    return FootpathSet(
        stop_ids=stop_ids,
        starts=starts,
        targets=np.array([r[1] for r in rows], dtype=np.int64),
        seconds=np.array([r[2] for r in rows], dtype=np.float64),
        km=np.array([r[3] for r in rows], dtype=np.float64),
    )


def random_feed(rng: np.random.Generator, model: TravelModel):
    """A small random timetable plus symmetric footpath links.

    Hop times strictly increase, so no connection has zero duration;
    zero dwells at intermediate stops are allowed and exercised.  A
    quarter of the trips carry carpool trip ids.
    """
    n_stops = int(rng.integers(6, 16))
    stops = {}
    for i in range(n_stops):
        sid = f"S{i:02d}"
        stops[sid] = Stop(
            stop_id=sid,
            name=f"stop {i}",
            position=GeoPoint(
                45.0 + float(rng.uniform(0.0, 0.055)),
                -122.3 + float(rng.uniform(0.0, 0.078)),
            ),
        )
    stop_ids = sorted(stops)

    routes = {}
    trips = {}
    stoptimes = {}
    n_trips = int(rng.integers(3, 14))
    for ti in range(n_trips):
        if rng.random() < 0.25:
            trip_id = pool_trip_id(ti + 1)
            route_type = 3
        else:
            trip_id = f"T{ti:02d}"
            route_type = int(rng.choice([1, 3]))
        route_id = f"R{ti:02d}"
        routes[route_id] = Route(route_id=route_id, name=f"line {ti}", route_type=route_type)
        trips[trip_id] = Trip(trip_id=trip_id, route_id=route_id, service_id="ALL")
        length = int(rng.integers(2, 7))
        path = list(rng.choice(len(stop_ids), size=min(length, len(stop_ids)), replace=False))
        clock = int(rng.integers(8 * 3600, 10 * 3600))
        sts = []
        for seq, si in enumerate(path):
            arrival = clock
            if 0 < seq < len(path) - 1:
                clock += int(rng.integers(0, 121))
            departure = clock
            sts.append(
                GtfsStopTime(
                    trip_id=trip_id,
                    stop_id=stop_ids[int(si)],
                    arrival=arrival,
                    departure=departure,
                    stop_sequence=seq,
                )
            )
            clock += int(rng.integers(60, 900))
        stoptimes[trip_id] = tuple(sts)

    calendar = (
        CalendarRow(
            service_id="ALL",
            weekdays=(1,) * 7,
            start_date=20200101,
            end_date=20291231,
        ),
    )
    t = Timetable(
        stops=stops,
        routes=routes,
        trips=dict(sorted(trips.items())),
        stoptimes=dict(sorted(stoptimes.items())),
        calendar=calendar,
        calendar_dates=(),
        extra_files={},
    )

    links: list[tuple[str, str, int, float]] = []
    n_links = int(rng.integers(0, 11))
    seen = set()
    for _ in range(n_links):
        i, j = rng.choice(len(stop_ids), size=2, replace=False)
        a, b = stop_ids[int(min(i, j))], stop_ids[int(max(i, j))]
        if (a, b) in seen:
            continue
        seen.add((a, b))
        km = reference_road_km(stops[a].position, stops[b].position, model)
        if km > 2.5:
            continue
        secs = _ceil_seconds(km, model.walk_speed_kmh)
        links.append((a, b, secs, km))
        links.append((b, a, secs, km))
    return t, links


def random_endpoints(rng: np.random.Generator):
    origin = GeoPoint(
        45.0 + float(rng.uniform(-0.005, 0.06)),
        -122.3 + float(rng.uniform(-0.005, 0.083)),
    )
    destination = GeoPoint(
        45.0 + float(rng.uniform(-0.005, 0.06)),
        -122.3 + float(rng.uniform(-0.005, 0.083)),
    )
    departure = int(rng.integers(8 * 3600, int(10.5 * 3600)))
    return origin, destination, departure
