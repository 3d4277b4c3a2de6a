"""
From declared trips to driver journeys
======================================

Each driver declares an origin, a destination, and a departure time.
The journey computation tries to route them through their nearest
meeting points, keeps an insertion only while the cumulative detour
stays within the 15% budget, and times every calling point.
"""
import numpy as np

from poollines.drivers import compute_driver_journeys, select_meeting_points
from poollines.geo import TravelModel
from poollines.gtfs import format_gtfs_time, with_service_date
from poollines.scenario import ScenarioConfig, generate_scenario
from poollines.synthetic import CITY_SERVICE_DATE, build_synthetic_city, city_rectangles

model = TravelModel()
city = with_service_date(build_synthetic_city(), CITY_SERVICE_DATE)
points = select_meeting_points(city)
print(f"{len(points.stops)} meeting points (all subway stops)")

cfg = ScenarioConfig(
    rectangles=city_rectangles(),
    driver_density=0.0, rider_density=0.0,
    driver_count=2000, rider_count=0,
    seed=7, area_km2=400.0,
)
drivers = list(generate_scenario(cfg).drivers)
journeys = compute_driver_journeys(drivers, points, model, seed=cfg.seed)

# How many meeting points made it into each journey.
inserted = np.array([len(j.stoptimes) - 2 for j in journeys])
print(f"\n{len(journeys)} journeys: "
      f"{(inserted == 0).sum()} kept the direct trip, "
      f"{(inserted == 1).sum()} serve one meeting point, "
      f"{(inserted == 2).sum()} serve two")

ratios = np.array([j.detour_ratio for j in journeys])
print(f"detour ratio: mean {ratios.mean():.3f}, "
      f"95th pct {np.percentile(ratios, 95):.3f}, worst {ratios.max():.4f}")
assert ratios.max() <= 0.15 + 1e-9

# One journey in full.
j = next(j for j in journeys if len(j.stoptimes) == 4)
print(f"\ndriver {j.driver_id}: direct {j.baseline_km:.2f} km, "
      f"with pickups {j.length_km:.2f} km (+{100 * j.detour_ratio:.1f}%)")
for st in j.stoptimes:
    where = st.stop_ref or "own endpoint"
    print(f"  arr {format_gtfs_time(st.arrival)}  dep {format_gtfs_time(st.departure)}  {where}")
