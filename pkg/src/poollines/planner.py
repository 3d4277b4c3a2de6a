"""Time-dependent multimodal journey planning over a timetable.

The engine is a connection scan: every stoptime-to-stoptime hop in the
feed becomes one connection, the connections are sorted by departure,
and a single forward pass relaxes earliest arrivals.  Carpool trips are
ordinary connections here; nothing downstream of the feed treats them
specially except leg labelling.

Movement off the timetable follows the shared travel model: direct
walks between the request endpoints, access/egress walks to stops
within ``max_walk_km`` road-kilometres, and stop-to-stop footpaths.
Changing vehicles at one stop costs ``transfer_s`` seconds; a footpath
transfer needs no buffer beyond its own walking time.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial import cKDTree

from .geo import (
    EARTH_RADIUS_KM,
    GeoPoint,
    TravelModel,
    haversine_km_to_point,
    road_km,
    walk_seconds,
)
from .gtfs import Timetable, format_coordinate
from .injection import is_poolline_trip

DEFAULT_MAX_WALK_KM = 2.5
DEFAULT_TRANSFER_S = 60
DEFAULT_NUM_ITINERARIES = 10

_INF = math.inf


class PlanMode(str, Enum):
    TRANSIT = "TRANSIT"            # every trip in the feed, carpool included
    WALK_ONLY = "WALK_ONLY"        # no vehicles at all
    TRANSIT_NO_POOL = "TRANSIT_NO_POOL"  # timetabled service only
    POOL_ONLY = "POOL_ONLY"        # carpool trips only


@dataclass(frozen=True)
class PlanRequest:
    origin: GeoPoint
    destination: GeoPoint
    departure: int
    mode: PlanMode = PlanMode.TRANSIT
    num_itineraries: int = DEFAULT_NUM_ITINERARIES
    date: str | None = None  # ISO date, informational

    def __post_init__(self) -> None:
        if self.departure < 0:
            raise ValueError("departure must be non-negative seconds")
        if self.num_itineraries < 1:
            raise ValueError("num_itineraries must be >= 1")


@dataclass(frozen=True)
class Leg:
    """One contiguous movement: a walk or a ride on a single trip."""

    kind: str  # "walk" | "transit" | "carpool"
    start: int
    end: int
    distance_km: float
    from_point: GeoPoint
    to_point: GeoPoint
    trip_id: str | None = None
    from_stop: str | None = None
    to_stop: str | None = None

    @property
    def duration_s(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class Itinerary:
    legs: tuple[Leg, ...]
    depart: int
    arrive: int
    total_walk_km: float
    total_wait_s: int

    @property
    def ride_legs(self) -> tuple[Leg, ...]:
        return tuple(leg for leg in self.legs if leg.kind != "walk")

    @property
    def carpool_legs(self) -> tuple[Leg, ...]:
        return tuple(leg for leg in self.legs if leg.kind == "carpool")

    @property
    def transit_legs(self) -> tuple[Leg, ...]:
        return tuple(leg for leg in self.legs if leg.kind == "transit")


@dataclass(frozen=True)
class FootpathSet:
    """Symmetric stop-to-stop walking links in CSR layout.

    ``stop_ids`` fixes the stop indexing; for source stop i the targets
    are ``targets[starts[i]:starts[i+1]]``, sorted, with matching walk
    seconds and kilometres.
    """

    stop_ids: tuple[str, ...]
    starts: np.ndarray
    targets: np.ndarray
    seconds: np.ndarray
    km: np.ndarray

    def pair_count(self) -> int:
        return int(len(self.targets)) // 2

    def pairs(self):
        """Yield (from_stop_id, to_stop_id, seconds, km) for every directed link."""
        for i, sid in enumerate(self.stop_ids):
            for k in range(int(self.starts[i]), int(self.starts[i + 1])):
                yield sid, self.stop_ids[int(self.targets[k])], int(self.seconds[k]), float(self.km[k])


def _walk_seconds_vec(road: np.ndarray, model: TravelModel) -> np.ndarray:
    raw = road * 3600.0 / model.walk_speed_kmh
    return np.maximum(0.0, np.ceil(raw - 1e-9))


def build_footpaths(
    t: Timetable, model: TravelModel, max_walk_km: float = DEFAULT_MAX_WALK_KM
) -> FootpathSet:
    """Walking links between every pair of stops within the road-km cap.

    A KD-tree over a local flat projection prefilters candidates with a
    safety margin; exact great-circle distances make the final cut, so
    the result is identical to the quadratic scan.
    """
    stop_ids = tuple(sorted(t.stops))
    n = len(stop_ids)
    starts = np.zeros(n + 1, dtype=np.int64)
    if n == 0 or max_walk_km <= 0:
        empty = np.zeros(0)
        return FootpathSet(stop_ids, starts, empty.astype(np.int64), empty, empty)

    lat = np.array([t.stops[s].position.lat for s in stop_ids])
    lon = np.array([t.stops[s].position.lon for s in stop_ids])
    lat_r = np.radians(lat)
    lon_r = np.radians(lon)
    mid = float(np.mean(lat_r))
    xy = np.column_stack(
        (EARTH_RADIUS_KM * np.cos(mid) * lon_r, EARTH_RADIUS_KM * lat_r)
    )
    radius = max_walk_km / model.circuity
    pairs = cKDTree(xy).query_pairs(r=radius * 1.05 + 0.01, output_type="ndarray")

    links: list[tuple[int, int, int, float]] = []
    if len(pairs):
        a = pairs[:, 0]
        b = pairs[:, 1]
        h = (
            np.sin((lat_r[b] - lat_r[a]) / 2.0) ** 2
            + np.cos(lat_r[a]) * np.cos(lat_r[b]) * np.sin((lon_r[b] - lon_r[a]) / 2.0) ** 2
        )
        hav = 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(h))
        road = model.circuity * hav
        keep = road <= max_walk_km
        secs = _walk_seconds_vec(road[keep], model).astype(np.int64)
        for i, j, s, km in zip(a[keep], b[keep], secs, road[keep]):
            links.append((int(i), int(j), int(s), float(km)))
            links.append((int(j), int(i), int(s), float(km)))

    links.sort()
    targets = np.array([l[1] for l in links], dtype=np.int64)
    seconds = np.array([l[2] for l in links], dtype=np.float64)
    km = np.array([l[3] for l in links], dtype=np.float64)
    counts = np.bincount([l[0] for l in links], minlength=n) if links else np.zeros(n, dtype=np.int64)
    starts[1:] = np.cumsum(counts)
    return FootpathSet(stop_ids, starts, targets, seconds, km)


class Planner:
    """Prepared search structures for one timetable and travel model."""

    def __init__(
        self,
        timetable: Timetable,
        model: TravelModel,
        max_walk_km: float = DEFAULT_MAX_WALK_KM,
        transfer_s: int = DEFAULT_TRANSFER_S,
        footpaths: FootpathSet | None = None,
    ):
        self.timetable = timetable
        self.model = model
        self.max_walk_km = max_walk_km
        self.transfer_s = transfer_s
        if footpaths is None:
            footpaths = build_footpaths(timetable, model, max_walk_km)
        self.footpaths = footpaths

        self._stop_ids = footpaths.stop_ids
        self._stop_index = {sid: i for i, sid in enumerate(self._stop_ids)}
        self._positions = [timetable.stops[sid].position for sid in self._stop_ids]
        self._lat_r = np.radians(np.array([p.lat for p in self._positions]))
        self._lon_r = np.radians(np.array([p.lon for p in self._positions]))

        self._trip_ids: list[str] = []
        self._trip_index: dict[str, int] = {}
        self._pool_flags: list[bool] = []

        dep_s: list[int] = []
        dep_t: list[int] = []
        arr_s: list[int] = []
        arr_t: list[int] = []
        c_trip: list[int] = []
        c_pos: list[int] = []
        self._trip_cum_km: list[list[float]] = []
        self._trip_conns: list[list[int]] = []

        order: list[tuple[int, int, int, int]] = []
        for trip_id in sorted(timetable.stoptimes):
            sts = timetable.stoptimes[trip_id]
            if len(sts) < 2:
                continue
            ti = len(self._trip_ids)
            self._trip_ids.append(trip_id)
            self._trip_index[trip_id] = ti
            self._pool_flags.append(is_poolline_trip(trip_id))
            cum = [0.0]
            for a, b in zip(sts, sts[1:]):
                pa = timetable.stops[a.stop_id].position
                pb = timetable.stops[b.stop_id].position
                cum.append(cum[-1] + road_km(pa, pb, model))
            self._trip_cum_km.append(cum)
            self._trip_conns.append([])
            for pos, (a, b) in enumerate(zip(sts, sts[1:])):
                order.append((a.departure, b.arrival, ti, pos))

        order.sort()
        for departure, arrival, ti, pos in order:
            sts = timetable.stoptimes[self._trip_ids[ti]]
            ci = len(dep_t)
            dep_s.append(self._stop_index[sts[pos].stop_id])
            dep_t.append(departure)
            arr_s.append(self._stop_index[sts[pos + 1].stop_id])
            arr_t.append(arrival)
            c_trip.append(ti)
            c_pos.append(pos)
            self._trip_conns[ti].append(ci)

        self._c_dep_s = dep_s
        self._c_dep_t = dep_t
        self._c_arr_s = arr_s
        self._c_arr_t = arr_t
        self._c_trip = c_trip
        self._c_pos = c_pos
        self._dep_times = np.array(dep_t, dtype=np.int64)

    # ---- helpers ----------------------------------------------------

    def _endpoint_links(self, point: GeoPoint) -> tuple[np.ndarray, np.ndarray]:
        """Walk seconds and km from a request endpoint to every stop.

        Stops beyond the walking cap get infinity.
        """
        n = len(self._stop_ids)
        if n == 0:
            return np.zeros(0), np.zeros(0)
        hav = haversine_km_to_point(self._lat_r, self._lon_r, point)
        road = self.model.circuity * hav
        secs = _walk_seconds_vec(road, self.model)
        out_of_range = road > self.max_walk_km
        secs[out_of_range] = _INF
        road = road.copy()
        road[out_of_range] = _INF
        return secs, road

    def _footpath_seconds_km(self, from_idx: int, to_idx: int) -> tuple[int, float]:
        a = int(self.footpaths.starts[from_idx])
        b = int(self.footpaths.starts[from_idx + 1])
        k = a + int(np.searchsorted(self.footpaths.targets[a:b], to_idx))
        if k >= b or int(self.footpaths.targets[k]) != to_idx:
            raise KeyError(f"no footpath between stop indices {from_idx} and {to_idx}")
        return int(self.footpaths.seconds[k]), float(self.footpaths.km[k])

    def _leg_kind(self, trip_index: int) -> str:
        return "carpool" if self._pool_flags[trip_index] else "transit"

    def _walk_only(self, req: PlanRequest) -> Itinerary:
        km = road_km(req.origin, req.destination, self.model)
        secs = walk_seconds(req.origin, req.destination, self.model)
        leg = Leg(
            kind="walk",
            start=req.departure,
            end=req.departure + secs,
            distance_km=km,
            from_point=req.origin,
            to_point=req.destination,
        )
        return Itinerary((leg,), req.departure, req.departure + secs, km, 0)

    # ---- the scan ---------------------------------------------------

    def _solve(self, req: PlanRequest, banned: frozenset[int]) -> Itinerary:
        if req.mode is PlanMode.WALK_ONLY:
            return self._walk_only(req)

        n = len(self._stop_ids)
        dep = req.departure
        direct = self._walk_only(req)
        best = direct.arrive
        best_stop = -1
        best_egress = _INF
        if n == 0:
            return direct

        access_s, access_km = self._endpoint_links(req.origin)
        egress_s, egress_km = self._endpoint_links(req.destination)

        arr_foot = np.where(np.isfinite(access_s), dep + access_s, _INF)
        foot_prev = np.full(n, -2, dtype=np.int64)
        foot_prev[np.isfinite(access_s)] = -1
        arr_veh = [_INF] * n
        veh_conn = [-1] * n
        n_trips = len(self._trip_ids)
        boarded = bytearray(n_trips)
        board_conn = [-1] * n_trips

        use_pool = req.mode in (PlanMode.TRANSIT, PlanMode.POOL_ONLY)
        use_transit = req.mode in (PlanMode.TRANSIT, PlanMode.TRANSIT_NO_POOL)
        dw = self.transfer_s
        c_dep_s = self._c_dep_s
        c_dep_t = self._c_dep_t
        c_arr_s = self._c_arr_s
        c_arr_t = self._c_arr_t
        c_trip = self._c_trip
        pool_flags = self._pool_flags
        fp_starts = self.footpaths.starts
        fp_targets = self.footpaths.targets
        fp_seconds = self.footpaths.seconds

        lo = int(np.searchsorted(self._dep_times, dep, side="left"))
        for ci in range(lo, len(c_dep_t)):
            t0 = c_dep_t[ci]
            if t0 > best:
                break
            ti = c_trip[ci]
            if pool_flags[ti]:
                if not use_pool:
                    continue
            elif not use_transit:
                continue
            if ti in banned:
                continue
            if not boarded[ti]:
                s = c_dep_s[ci]
                if t0 >= arr_foot[s] or t0 >= arr_veh[s] + dw:
                    boarded[ti] = 1
                    board_conn[ti] = ci
                else:
                    continue
            at = c_arr_t[ci]
            sa = c_arr_s[ci]
            if at < arr_veh[sa]:
                arr_veh[sa] = at
                veh_conn[sa] = ci
                e = egress_s[sa]
                if e != _INF:
                    cand = at + e
                    # Strict improvement, or an equal-time arrival with less
                    # egress walking; the direct walk keeps ties it already holds.
                    if cand < best or (cand == best and best_stop >= 0 and e < best_egress):
                        best = int(cand)
                        best_stop = sa
                        best_egress = e
                a = fp_starts[sa]
                b = fp_starts[sa + 1]
                if a != b:
                    idx = fp_targets[a:b]
                    cand_f = at + fp_seconds[a:b]
                    mask = cand_f < arr_foot[idx]
                    if mask.any():
                        hits = idx[mask]
                        arr_foot[hits] = cand_f[mask]
                        foot_prev[hits] = sa

        if best_stop < 0:
            return direct
        return self._reconstruct(
            req, best, best_stop, access_s, access_km, egress_s, egress_km,
            arr_foot, foot_prev, arr_veh, veh_conn, board_conn,
        )

    def _reconstruct(
        self, req, best, best_stop, access_s, access_km, egress_s, egress_km,
        arr_foot, foot_prev, arr_veh, veh_conn, board_conn,
    ) -> Itinerary:
        dep = req.departure
        dw = self.transfer_s
        legs_rev: list[Leg] = []
        legs_rev.append(
            Leg(
                kind="walk",
                start=int(arr_veh[best_stop]),
                end=int(arr_veh[best_stop] + egress_s[best_stop]),
                distance_km=float(egress_km[best_stop]),
                from_point=self._positions[best_stop],
                to_point=req.destination,
                from_stop=self._stop_ids[best_stop],
            )
        )
        stop = best_stop
        while True:
            ci = veh_conn[stop]
            ti = self._c_trip[ci]
            bi = board_conn[ti]
            sb = self._c_dep_s[bi]
            tb = self._c_dep_t[bi]
            km = self._trip_cum_km[ti][self._c_pos[ci] + 1] - self._trip_cum_km[ti][self._c_pos[bi]]
            legs_rev.append(
                Leg(
                    kind=self._leg_kind(ti),
                    start=tb,
                    end=int(self._c_arr_t[ci]),
                    distance_km=km,
                    from_point=self._positions[sb],
                    to_point=self._positions[self._c_arr_s[ci]],
                    trip_id=self._trip_ids[ti],
                    from_stop=self._stop_ids[sb],
                    to_stop=self._stop_ids[self._c_arr_s[ci]],
                )
            )
            # How was the boarding stop reached?  Prefer walking straight
            # from the origin, then a same-stop change, then a footpath.
            if access_s[sb] != _INF and dep + access_s[sb] <= tb:
                legs_rev.append(
                    Leg(
                        kind="walk",
                        start=dep,
                        end=dep + int(access_s[sb]),
                        distance_km=float(access_km[sb]),
                        from_point=req.origin,
                        to_point=self._positions[sb],
                        to_stop=self._stop_ids[sb],
                    )
                )
                break
            if veh_conn[sb] >= 0 and arr_veh[sb] + dw <= tb:
                stop = sb
                continue
            q = int(foot_prev[sb])
            if q < 0 or arr_foot[sb] > tb:
                raise AssertionError("inconsistent labels during reconstruction")
            walk_s, walk_km = self._footpath_seconds_km(q, sb)
            legs_rev.append(
                Leg(
                    kind="walk",
                    start=int(arr_veh[q]),
                    end=int(arr_veh[q]) + walk_s,
                    distance_km=walk_km,
                    from_point=self._positions[q],
                    to_point=self._positions[sb],
                    from_stop=self._stop_ids[q],
                    to_stop=self._stop_ids[sb],
                )
            )
            stop = q

        legs = self._merge_same_trip(list(reversed(legs_rev)))
        walk_km_total = sum(l.distance_km for l in legs if l.kind == "walk")
        durations = sum(l.duration_s for l in legs)
        return Itinerary(
            legs=tuple(legs),
            depart=dep,
            arrive=best,
            total_walk_km=walk_km_total,
            total_wait_s=best - dep - durations,
        )

    @staticmethod
    def _merge_same_trip(legs: list[Leg]) -> list[Leg]:
        out: list[Leg] = []
        for leg in legs:
            prev = out[-1] if out else None
            if (
                prev is not None
                and leg.trip_id is not None
                and prev.trip_id == leg.trip_id
            ):
                out[-1] = Leg(
                    kind=prev.kind,
                    start=prev.start,
                    end=leg.end,
                    distance_km=prev.distance_km + leg.distance_km,
                    from_point=prev.from_point,
                    to_point=leg.to_point,
                    trip_id=prev.trip_id,
                    from_stop=prev.from_stop,
                    to_stop=leg.to_stop,
                )
            else:
                out.append(leg)
        return out

    # ---- public API -------------------------------------------------

    def earliest_arrival(self, req: PlanRequest) -> Itinerary:
        """The fastest itinerary for the request.

        A direct walk is always available, so this never fails on a
        connected plane.
        """
        return self._solve(req, frozenset())

    def iter_itineraries(self, req: PlanRequest):
        """Yield alternatives lazily, best first.

        Each round bans the first ride trip of the previous result and
        re-solves; a walk-only itinerary closes the list as the final
        fallback.  At most ``req.num_itineraries`` results.
        """
        banned: set[int] = set()
        seen: set[tuple] = set()
        count = 0
        while count < req.num_itineraries:
            it = self._solve(req, frozenset(banned))
            rides = it.ride_legs
            if not rides:
                break
            sig = _signature(it)
            if sig in seen:
                break
            seen.add(sig)
            yield it
            count += 1
            banned.add(self._trip_index[rides[0].trip_id])
        if count < req.num_itineraries:
            walk = self._walk_only(req)
            if _signature(walk) not in seen:
                yield walk

    def plan(self, req: PlanRequest) -> list[Itinerary]:
        """Alternative itineraries, earliest arrival first, deduplicated."""
        return list(self.iter_itineraries(req))


def _signature(it: Itinerary) -> tuple:
    return tuple((l.kind, l.trip_id, l.from_stop, l.to_stop, l.start, l.end) for l in it.legs)


# ---- flat query serialisation (planner-service style) ----------------

_TIME_RE = re.compile(r"^(\d{1,2}):(\d{2})(?::(\d{2}))?(am|pm)$")


def _format_query_time(seconds: int) -> str:
    if not 0 <= seconds < 24 * 3600:
        raise ValueError("query times must fall within one day")
    h, rest = divmod(seconds, 3600)
    m, s = divmod(rest, 60)
    suffix = "am" if h < 12 else "pm"
    h12 = h % 12
    if h12 == 0:
        h12 = 12
    if s:
        return f"{h12}:{m:02d}:{s:02d}{suffix}"
    return f"{h12}:{m:02d}{suffix}"


def _parse_query_time(text: str) -> int:
    m = _TIME_RE.match(text.strip().lower())
    if not m:
        raise ValueError(f"bad query time: {text!r}")
    h12 = int(m.group(1))
    minutes = int(m.group(2))
    seconds = int(m.group(3) or 0)
    if not 1 <= h12 <= 12 or minutes > 59 or seconds > 59:
        raise ValueError(f"bad query time: {text!r}")
    h = h12 % 12
    if m.group(4) == "pm":
        h += 12
    return h * 3600 + minutes * 60 + seconds


def request_to_query(req: PlanRequest) -> dict[str, str]:
    """Flatten a request into planner-service query fields."""
    query = {
        "fromPlace": f"{format_coordinate(req.origin.lat)},{format_coordinate(req.origin.lon)}",
        "toPlace": f"{format_coordinate(req.destination.lat)},{format_coordinate(req.destination.lon)}",
        "time": _format_query_time(req.departure),
        "numItineraries": str(req.num_itineraries),
        "mode": req.mode.value,
    }
    if req.date is not None:
        year, month, day = req.date.split("-")
        query["date"] = f"{month}-{day}-{year}"
    return query


def request_from_query(query: dict[str, str]) -> PlanRequest:
    """Inverse of :func:`request_to_query`."""
    def _point(text: str) -> GeoPoint:
        lat, lon = text.split(",")
        return GeoPoint(float(lat), float(lon))

    date = None
    if "date" in query:
        month, day, year = query["date"].split("-")
        date = f"{year}-{month}-{day}"
    return PlanRequest(
        origin=_point(query["fromPlace"]),
        destination=_point(query["toPlace"]),
        departure=_parse_query_time(query["time"]),
        mode=PlanMode(query.get("mode", "TRANSIT")),
        num_itineraries=int(query.get("numItineraries", DEFAULT_NUM_ITINERARIES)),
        date=date,
    )


def itinerary_to_records(it: Itinerary) -> list[dict[str, object]]:
    """One flat record per leg, ready for CSV or JSON serialisation."""
    records = []
    for i, leg in enumerate(it.legs):
        records.append(
            {
                "leg": i,
                "kind": leg.kind,
                "trip_id": leg.trip_id or "",
                "from_stop": leg.from_stop or "",
                "to_stop": leg.to_stop or "",
                "start": leg.start,
                "end": leg.end,
                "distance_km": leg.distance_km,
                "from_lat": leg.from_point.lat,
                "from_lon": leg.from_point.lon,
                "to_lat": leg.to_point.lat,
                "to_lon": leg.to_point.lon,
            }
        )
    return records
