"""
A synthetic city and its transit feed
=====================================

Twenty by twenty kilometres: two subway lines crossing at the centre
whose stops double as carpool meeting points, four bus lines along the
edges, service on a single day.  Build the timetable, look around, and
write it out as a plain GTFS directory.
"""
from pathlib import Path

from poollines.gtfs import format_gtfs_time, write_gtfs
from poollines.synthetic import CITY_SERVICE_DATE, build_synthetic_city, city_rectangles

city = build_synthetic_city()

print(f"stops:  {len(city.stops)}")
print(f"routes: {len(city.routes)}")
print(f"trips:  {len(city.trips)}")

# Subway stops (route_type 1) are the meeting points drivers may serve.
subway = [s for s in sorted(city.stops) if s.startswith("SUB_")]
print(f"\n{len(subway)} subway stops, e.g. {subway[0]} .. {subway[-1]}")

# One run of the north-south subway, outbound.
calls = city.stoptimes["SUB_NS_O_00"]
print("\nfirst outbound north-south subway run:")
for st in calls[:3]:
    stop = city.stops[st.stop_id]
    print(f"  {st.stop_id:<10} arr {format_gtfs_time(st.arrival)}  "
          f"dep {format_gtfs_time(st.departure)}  ({stop.position.lat:.4f}, {stop.position.lon:.4f})")
print(f"  ... {len(calls) - 3} more calls")

# Demand is drawn from weighted rectangles; the centre weighs triple.
print("\ndemand rectangles (weight):")
for r in city_rectangles():
    print(f"  lat [{r.lat_min:.4f}, {r.lat_max:.4f}] "
          f"lon [{r.lon_min:.4f}, {r.lon_max:.4f}]  w={r.weight:.0f}  {r.area_km2:.0f} km^2")

outdir = Path(__file__).parent / "out" / "city_feed"
write_gtfs(city, outdir)
print(f"\nwrote the feed for service date {CITY_SERVICE_DATE} to {outdir}")
