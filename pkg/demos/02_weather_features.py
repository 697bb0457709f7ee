"""Exposure features from a weather series, step by step."""

from datetime import date, datetime, time, timedelta, timezone

import numpy as np

from taphos.weather import (
    WeatherObservation,
    WeatherSeries,
    compute_add,
    daily_average,
)

rng = np.random.default_rng(7)
start = date(2021, 7, 10)

observations = []
for offset in range(6):
    day = start + timedelta(days=offset)
    for hour in range(0, 24, 3):  # readings every three hours
        observations.append(WeatherObservation(
            observed_at=datetime.combine(day, time(hour), timezone.utc),
            temperature_c=float(18 + 8 * np.sin(hour / 24 * 2 * np.pi) + rng.normal(0, 1)),
            relative_humidity_pct=float(rng.uniform(35, 85)),
            wind_speed_mps=float(rng.uniform(0, 9)),
        ))
series = WeatherSeries(observations=tuple(observations))

for offset in range(3):
    day = start + timedelta(days=offset)
    t = daily_average(series, day, "temperature")
    h = daily_average(series, day, "humidity")
    print(f"{day}: mean temp {t:6.2f} C, mean humidity {h:5.1f} %")

# the exposure vector for a photo taken on day 4 of decomposition
photo_day = start + timedelta(days=3)
add = compute_add(series, start, photo_day)
print()
print(f"photo on {photo_day}, {add.n_days} days into decomposition")
print(f"  mean-of-daily-means: temp {add.add_temperature:.2f}, "
      f"humidity {add.add_humidity:.2f}, wind {add.add_wind:.2f}")

# cumulative variant sums the daily means instead of averaging them
cumulative = compute_add(series, start, photo_day, cumulative=True)
print(f"  cumulative:          temp {cumulative.add_temperature:.2f}, "
      f"humidity {cumulative.add_humidity:.2f}, wind {cumulative.add_wind:.2f}")

# later photo, same start: the average keeps moving with the weather
later = compute_add(series, start, start + timedelta(days=5))
print(f"  two days later:      temp {later.add_temperature:.2f}, "
      f"humidity {later.add_humidity:.2f}, wind {later.add_wind:.2f}")
