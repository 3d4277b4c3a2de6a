import pytest

from poollines.drivers import select_meeting_points
from poollines.geo import haversine_km
from poollines.gtfs import (
    ROUTE_TYPE_BUS,
    ROUTE_TYPE_SUBWAY,
    parse_gtfs,
    service_active,
    with_service_date,
    write_gtfs,
)
from poollines.synthetic import (
    CITY_SERVICE_DATE,
    build_synthetic_city,
    city_point,
    city_rectangles,
)


def test_city_inventory():
    t = build_synthetic_city()
    assert len(t.stops) == 70  # 2 x 13 subway + 4 x 11 bus
    assert len(t.routes) == 6
    assert len(t.trips) == 180
    subway = [r for r in t.routes.values() if r.route_type == ROUTE_TYPE_SUBWAY]
    buses = [r for r in t.routes.values() if r.route_type == ROUTE_TYPE_BUS]
    assert len(subway) == 2 and len(buses) == 4


def test_meeting_points_are_the_subway_stops():
    t = build_synthetic_city()
    points = select_meeting_points(t)
    assert len(points.stops) == 26
    assert all(s.stop_id.startswith("SUB_") for s in points.stops)


def test_subway_stop_spacing():
    t = build_synthetic_city()
    ids = [f"SUB_NS_{k:02d}" for k in range(13)]
    for a, b in zip(ids, ids[1:]):
        gap = haversine_km(t.stops[a].position, t.stops[b].position)
        assert gap == pytest.approx(1.5, abs=0.01)


def test_lines_cross_at_the_centre():
    t = build_synthetic_city()
    ns_mid = t.stops["SUB_NS_06"].position  # 1.0 + 1.5*6 = 10 km, centre
    ew_mid = t.stops["SUB_EW_06"].position
    assert haversine_km(ns_mid, ew_mid) < 0.01
    assert haversine_km(ns_mid, city_point(10.0, 10.0)) < 0.01


def test_service_span_and_headways():
    t = build_synthetic_city()
    outbound = sorted(
        trip_id for trip_id in t.trips if trip_id.startswith("SUB_NS_O_")
    )
    firsts = [t.stoptimes[trip_id][0] for trip_id in outbound]
    departures = sorted(st.departure for st in firsts)
    assert departures[0] == 9 * 3600 + 1800
    assert departures[-1] == 12 * 3600 + 1800
    assert all(b - a == 600 for a, b in zip(departures, departures[1:]))
    bus = sorted(trip_id for trip_id in t.trips if trip_id.startswith("BUS_W_O_"))
    bus_deps = sorted(t.stoptimes[trip_id][0].departure for trip_id in bus)
    assert all(b - a == 900 for a, b in zip(bus_deps, bus_deps[1:]))


def test_both_directions_run():
    t = build_synthetic_city()
    out = t.stoptimes["SUB_NS_O_00"]
    back = t.stoptimes["SUB_NS_I_00"]
    assert [st.stop_id for st in back] == [st.stop_id for st in reversed(out)]


def test_stoptimes_dwell_at_middle_stops():
    t = build_synthetic_city()
    for trip_id in ("SUB_NS_O_00", "BUS_N_I_03"):
        sts = t.stoptimes[trip_id]
        assert sts[0].arrival == sts[0].departure
        assert sts[-1].arrival == sts[-1].departure
        for st in sts[1:-1]:
            assert st.departure - st.arrival == 20


def test_city_runs_every_day_of_2022():
    t = build_synthetic_city()
    assert service_active(t, "EVERYDAY", CITY_SERVICE_DATE)
    assert service_active(t, "EVERYDAY", "2022-12-31")
    assert not service_active(t, "EVERYDAY", "2023-01-01")
    assert len(with_service_date(t, CITY_SERVICE_DATE).trips) == 180


def test_city_round_trips_through_gtfs(tmp_path):
    t = build_synthetic_city()
    write_gtfs(t, tmp_path / "city")
    back = parse_gtfs(tmp_path / "city")
    assert back.stops == t.stops
    assert back.routes == t.routes
    assert back.trips == t.trips
    assert back.stoptimes == t.stoptimes
    assert back.calendar == t.calendar


def test_build_is_deterministic():
    assert build_synthetic_city() == build_synthetic_city()


def test_demand_rectangles_tile_the_city():
    rects = city_rectangles()
    assert len(rects) == 5
    assert rects[0].weight == 3.0
    # The five pieces cover the full square without overlap.
    total = sum(r.area_km2 for r in rects)
    assert total == pytest.approx(400.0, rel=0.01)
    centre = city_point(10.0, 10.0)
    inside = [
        r
        for r in rects
        if r.lat_min <= centre.lat <= r.lat_max and r.lon_min <= centre.lon <= r.lon_max
    ]
    assert len(inside) == 1 and inside[0].weight == 3.0
