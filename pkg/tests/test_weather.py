"""Weather features: daily averaging, ADD computation, augmentation."""

import math
from datetime import date, datetime, timedelta, timezone

import numpy as np
import pytest

from taphos.embeddings import EmbeddingMatrix
from taphos.manifest import ImageRecord, Manifest
from taphos.weather import (
    AddVector,
    WeatherError,
    WeatherObservation,
    WeatherSeries,
    augment_features,
    build_weather_block,
    compute_add,
    daily_average,
    load_donor_starts,
    load_weather,
)

UTC = timezone.utc


def hourly_series(day_values, start=date(2021, 5, 1), zone=UTC, hours=24):
    """One observation per hour; day_values[i] = (temp, hum, wind) for day i,
    used for every hour of that day."""
    obs = []
    for d, (t, h, w) in enumerate(day_values):
        for hour in range(hours):
            obs.append(
                WeatherObservation(
                    observed_at=datetime.combine(
                        start + timedelta(days=d), datetime.min.time(), zone
                    )
                    + timedelta(hours=hour),
                    temperature_c=t,
                    relative_humidity_pct=h,
                    wind_speed_mps=w,
                )
            )
    return WeatherSeries(observations=tuple(obs), zone=zone)


def random_series(rng, n_days=5, start=date(2021, 5, 1), zone=UTC):
    obs = []
    for d in range(n_days):
        for hour in range(24):
            obs.append(
                WeatherObservation(
                    observed_at=datetime.combine(
                        start + timedelta(days=d), datetime.min.time(), zone
                    )
                    + timedelta(hours=hour),
                    temperature_c=float(rng.uniform(-10, 35)),
                    relative_humidity_pct=float(rng.uniform(0, 100)),
                    wind_speed_mps=float(rng.uniform(0, 20)),
                )
            )
    return WeatherSeries(observations=tuple(obs), zone=zone)


# ---- daily_average ----------------------------------------------------


def test_daily_average_constant_day():
    s = hourly_series([(15.0, 50.0, 3.0)])
    assert daily_average(s, date(2021, 5, 1), "temperature") == 15.0
    assert daily_average(s, date(2021, 5, 1), "humidity") == 50.0
    assert daily_average(s, date(2021, 5, 1), "wind") == 3.0


def test_daily_average_alternating():
    obs = []
    for hour in range(24):
        obs.append(
            WeatherObservation(
                observed_at=datetime(2021, 5, 1, hour, tzinfo=UTC),
                temperature_c=10.0 if hour % 2 == 0 else 20.0,
                relative_humidity_pct=50.0,
                wind_speed_mps=1.0,
            )
        )
    s = WeatherSeries(observations=tuple(obs))
    assert daily_average(s, date(2021, 5, 1), "temperature") == 15.0


def test_daily_average_three_observations():
    obs = tuple(
        WeatherObservation(
            observed_at=datetime(2021, 5, 1, h, tzinfo=UTC),
            temperature_c=t,
            relative_humidity_pct=40.0,
            wind_speed_mps=0.0,
        )
        for h, t in [(1, 3.0), (2, 4.0), (3, 8.0)]
    )
    s = WeatherSeries(observations=obs)
    # Oracle: direct summation.
    assert daily_average(s, date(2021, 5, 1), "temperature") == pytest.approx(
        (3.0 + 4.0 + 8.0) / 3, rel=1e-15
    )


def test_daily_average_missing_day_names_date():
    s = hourly_series([(15.0, 50.0, 3.0)])
    with pytest.raises(WeatherError) as exc:
        daily_average(s, date(2021, 5, 9), "temperature")
    assert "2021-05-09" in str(exc.value)


def test_daily_average_unknown_field():
    s = hourly_series([(15.0, 50.0, 3.0)])
    with pytest.raises(WeatherError):
        daily_average(s, date(2021, 5, 1), "pressure")


def test_daily_average_matches_summation_oracle_large():
    rng = np.random.default_rng(7)
    s = random_series(rng, n_days=20)
    for day_idx in range(20):
        day = date(2021, 5, 1) + timedelta(days=day_idx)
        expected = {
            "temperature": [],
            "humidity": [],
            "wind": [],
        }
        for obs in s.observations:
            if obs.observed_at.date() == day:
                expected["temperature"].append(obs.temperature_c)
                expected["humidity"].append(obs.relative_humidity_pct)
                expected["wind"].append(obs.wind_speed_mps)
        for name in expected:
            oracle = sum(expected[name]) / len(expected[name])
            got = daily_average(s, day, name)
            assert abs(got - oracle) <= 1e-12 * max(1.0, abs(oracle))


def test_day_boundary_uses_series_zone():
    # 23:30 UTC on May 1 is 01:30 on May 2 in UTC+2.
    zone = timezone(timedelta(hours=2))
    obs = (
        WeatherObservation(
            observed_at=datetime(2021, 5, 1, 23, 30, tzinfo=UTC),
            temperature_c=5.0,
            relative_humidity_pct=50.0,
            wind_speed_mps=1.0,
        ),
    )
    s = WeatherSeries(observations=obs, zone=zone)
    assert daily_average(s, date(2021, 5, 2), "temperature") == 5.0
    with pytest.raises(WeatherError):
        daily_average(s, date(2021, 5, 1), "temperature")


# ---- compute_add ------------------------------------------------------


def test_single_day_add():
    s = hourly_series([(22.0, 60.0, 4.0)])
    v = compute_add(s, date(2021, 5, 1), date(2021, 5, 1))
    assert v.add_temperature == 22.0
    assert v.n_days == 1


def test_three_day_mean():
    s = hourly_series([(10.0, 30.0, 1.0), (20.0, 40.0, 2.0), (30.0, 50.0, 3.0)])
    v = compute_add(s, date(2021, 5, 1), date(2021, 5, 3))
    assert v.add_temperature == 20.0
    assert v.add_humidity == 40.0
    assert v.add_wind == 2.0
    assert v.n_days == 3


def test_add_matches_two_level_oracle():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n_days = int(rng.integers(1, 8))
        s = random_series(rng, n_days=n_days)
        v = compute_add(s, date(2021, 5, 1), date(2021, 5, 1) + timedelta(days=n_days - 1))
        # Independent oracle: hours -> day means -> range mean, plain division.
        by_day = {}
        for obs in s.observations:
            by_day.setdefault(obs.observed_at.date(), []).append(obs)
        day_means = []
        for day in sorted(by_day):
            rows = by_day[day]
            day_means.append(
                (
                    sum(o.temperature_c for o in rows) / len(rows),
                    sum(o.relative_humidity_pct for o in rows) / len(rows),
                    sum(o.wind_speed_mps for o in rows) / len(rows),
                )
            )
        for got, vals in zip(
            (v.add_temperature, v.add_humidity, v.add_wind),
            zip(*day_means),
        ):
            oracle = sum(vals) / len(vals)
            assert abs(got - oracle) <= 1e-12 * max(1.0, abs(oracle))


def test_constant_weather_exact():
    # Awkward constants whose naive mean rounds; the contract is equality.
    for c in (0.1, 16.3, 7.7, 1.0 / 3.0):
        s = hourly_series([(c, 55.5, c)] * 7)
        v = compute_add(s, date(2021, 5, 1), date(2021, 5, 7))
        assert v.add_temperature == c
        assert v.add_humidity == 55.5
        assert v.add_wind == c


def test_photo_before_start_rejected():
    s = hourly_series([(10.0, 50.0, 1.0)])
    with pytest.raises(WeatherError) as exc:
        compute_add(s, date(2021, 5, 2), date(2021, 5, 1))
    assert "precede" in str(exc.value)


def test_missing_days_listed():
    # Data for May 1 and May 4 only.
    obs = []
    for d in (1, 4):
        obs.append(
            WeatherObservation(
                observed_at=datetime(2021, 5, d, 12, tzinfo=UTC),
                temperature_c=10.0,
                relative_humidity_pct=50.0,
                wind_speed_mps=1.0,
            )
        )
    s = WeatherSeries(observations=tuple(obs))
    with pytest.raises(WeatherError) as exc:
        compute_add(s, date(2021, 5, 1), date(2021, 5, 4))
    msg = str(exc.value)
    assert "2021-05-02" in msg and "2021-05-03" in msg


def test_skip_missing_reduces_n():
    obs = []
    for d, t in ((1, 10.0), (4, 30.0)):
        obs.append(
            WeatherObservation(
                observed_at=datetime(2021, 5, d, 12, tzinfo=UTC),
                temperature_c=t,
                relative_humidity_pct=50.0,
                wind_speed_mps=1.0,
            )
        )
    s = WeatherSeries(observations=tuple(obs))
    v = compute_add(s, date(2021, 5, 1), date(2021, 5, 4), skip_missing=True)
    assert v.n_days == 2
    assert v.add_temperature == 20.0


def test_skip_missing_with_no_data_at_all():
    s = hourly_series([(10.0, 50.0, 1.0)])  # May 1 only
    with pytest.raises(WeatherError):
        compute_add(s, date(2021, 6, 1), date(2021, 6, 3), skip_missing=True)


def test_cumulative_is_sum_of_daily_averages():
    s = hourly_series([(10.0, 30.0, 1.0), (20.0, 40.0, 2.0), (30.0, 50.0, 3.0)])
    v = compute_add(s, date(2021, 5, 1), date(2021, 5, 3), cumulative=True)
    assert v.add_temperature == 60.0
    assert v.add_humidity == 120.0
    assert v.add_wind == 6.0
    assert v.n_days == 3


def test_translation_invariance():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n_days = int(rng.integers(1, 6))
        shift = int(rng.integers(-300, 300))
        day_vals = [
            (float(rng.uniform(-5, 30)), float(rng.uniform(10, 90)), float(rng.uniform(0, 15)))
            for _ in range(n_days)
        ]
        a = hourly_series(day_vals, start=date(2021, 5, 1))
        b = hourly_series(day_vals, start=date(2021, 5, 1) + timedelta(days=shift))
        va = compute_add(a, date(2021, 5, 1), date(2021, 5, 1) + timedelta(days=n_days - 1))
        vb = compute_add(
            b,
            date(2021, 5, 1) + timedelta(days=shift),
            date(2021, 5, 1) + timedelta(days=shift + n_days - 1),
        )
        assert va == vb


def test_add_vector_validation():
    with pytest.raises(WeatherError):
        AddVector(add_temperature=1.0, add_humidity=1.0, add_wind=1.0, n_days=0)
    with pytest.raises(WeatherError):
        AddVector(add_temperature=math.nan, add_humidity=1.0, add_wind=1.0, n_days=1)


# ---- series construction / loading ------------------------------------


def test_series_rejects_duplicate_timestamps():
    obs = (
        WeatherObservation(
            observed_at=datetime(2021, 5, 1, 0, tzinfo=UTC),
            temperature_c=1.0, relative_humidity_pct=50.0, wind_speed_mps=1.0,
        ),
        WeatherObservation(
            observed_at=datetime(2021, 5, 1, 0, tzinfo=UTC),
            temperature_c=2.0, relative_humidity_pct=50.0, wind_speed_mps=1.0,
        ),
    )
    with pytest.raises(WeatherError) as exc:
        WeatherSeries(observations=obs)
    assert "duplicate" in str(exc.value)


def test_observation_validation():
    ts = datetime(2021, 5, 1, 0, tzinfo=UTC)
    with pytest.raises(WeatherError):
        WeatherObservation(ts, 1.0, 140.0, 1.0)
    with pytest.raises(WeatherError):
        WeatherObservation(ts, 1.0, 50.0, -1.0)
    with pytest.raises(WeatherError):
        WeatherObservation(ts, math.inf, 50.0, 1.0)
    with pytest.raises(WeatherError):
        WeatherObservation(datetime(2021, 5, 1, 0), 1.0, 50.0, 1.0)


def write_weather_csv(tmp_path, rows):
    path = tmp_path / "weather.csv"
    header = "observed_at,temperature_c,relative_humidity_pct,wind_speed_mps"
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    return path


def test_load_weather_sorts_rows(tmp_path):
    rows = [
        "2021-05-01T02:00:00+00:00,12.0,50.0,1.0",
        "2021-05-01T00:00:00+00:00,10.0,50.0,1.0",
        "2021-05-01T01:00:00+00:00,11.0,50.0,1.0",
    ]
    s = load_weather(write_weather_csv(tmp_path, rows))
    times = [o.observed_at for o in s.observations]
    assert times == sorted(times)
    assert len(s) == 3


def test_load_weather_humidity_error_names_row(tmp_path):
    rows = [
        "2021-05-01T00:00:00+00:00,10.0,50.0,1.0",
        "2021-05-01T01:00:00+00:00,10.0,140.0,1.0",
    ]
    with pytest.raises(WeatherError) as exc:
        load_weather(write_weather_csv(tmp_path, rows))
    assert "row 3" in str(exc.value)


def test_load_weather_duplicate_timestamp(tmp_path):
    rows = [
        "2021-05-01T00:00:00+00:00,10.0,50.0,1.0",
        "2021-05-01T00:00:00Z,12.0,50.0,1.0",
    ]
    with pytest.raises(WeatherError) as exc:
        load_weather(write_weather_csv(tmp_path, rows))
    assert "duplicate" in str(exc.value)


def test_load_weather_24_rows(tmp_path):
    rows = [
        f"2021-05-01T{h:02d}:00:00+00:00,15.0,50.0,3.0" for h in range(24)
    ]
    s = load_weather(write_weather_csv(tmp_path, rows))
    assert len(s) == 24
    assert daily_average(s, date(2021, 5, 1), "temperature") == 15.0


def test_load_weather_zone_argument(tmp_path):
    rows = ["2021-05-01T23:30:00+00:00,5.0,50.0,1.0"]
    s = load_weather(write_weather_csv(tmp_path, rows), zone="UTC")
    assert s.day_of(s.observations[0].observed_at) == date(2021, 5, 1)
    s2 = load_weather(write_weather_csv(tmp_path, rows), zone=timezone(timedelta(hours=2)))
    assert s2.day_of(s2.observations[0].observed_at) == date(2021, 5, 2)


def test_load_weather_default_zone_from_data(tmp_path):
    rows = ["2021-05-01T23:30:00+02:00,5.0,50.0,1.0"]
    s = load_weather(write_weather_csv(tmp_path, rows))
    assert s.day_of(s.observations[0].observed_at) == date(2021, 5, 1)


# ---- build_weather_block ----------------------------------------------


def make_manifest(specs):
    """specs: list of (image_id, donor_id, iso timestamp)."""
    records = tuple(
        ImageRecord(
            image_id=i, file_path=f"p/{i}.jpg", donor_id=d,
            taken_at=datetime.fromisoformat(ts),
        )
        for i, d, ts in specs
    )
    return Manifest(records=records, source_path="<test>")


def test_block_uses_per_donor_starts():
    s = hourly_series([(10.0, 50.0, 1.0), (20.0, 50.0, 1.0), (30.0, 50.0, 1.0)])
    m = make_manifest(
        [
            ("a", "d1", "2021-05-03T10:00:00+00:00"),
            ("b", "d2", "2021-05-03T10:00:00+00:00"),
        ]
    )
    starts = {"d1": date(2021, 5, 1), "d2": date(2021, 5, 3)}
    block = build_weather_block(m, s, starts)
    assert block[0, 0] == 20.0  # mean(10, 20, 30)
    assert block[1, 0] == 30.0  # just day 3


def test_block_earliest_photo_policy():
    s = hourly_series([(10.0, 50.0, 1.0), (20.0, 50.0, 1.0), (30.0, 50.0, 1.0)])
    m = make_manifest(
        [
            ("a", "d1", "2021-05-02T08:00:00+00:00"),
            ("b", "d1", "2021-05-03T08:00:00+00:00"),
        ]
    )
    block = build_weather_block(m, s, "earliest-photo")
    # Start is May 2 (d1's earliest photo): a covers day 2 only, b days 2..3.
    assert block[0, 0] == 20.0
    assert block[1, 0] == 25.0


def test_block_same_donor_same_date_identical_rows():
    rng = np.random.default_rng(5)
    s = random_series(rng, n_days=4)
    m = make_manifest(
        [
            ("a", "d1", "2021-05-03T08:00:00+00:00"),
            ("b", "d1", "2021-05-03T17:45:00+00:00"),
        ]
    )
    block = build_weather_block(m, s, {"d1": date(2021, 5, 1)})
    assert np.array_equal(block[0], block[1])


def test_block_missing_donor_start():
    s = hourly_series([(10.0, 50.0, 1.0)])
    m = make_manifest([("a", "d1", "2021-05-01T08:00:00+00:00")])
    with pytest.raises(WeatherError) as exc:
        build_weather_block(m, s, {"other": date(2021, 5, 1)})
    assert "d1" in str(exc.value)


def test_load_donor_starts(tmp_path):
    path = tmp_path / "starts.csv"
    path.write_text("donor_id,start_date\nd1,2021-05-01\nd2,2021-06-15\n", encoding="utf-8")
    starts = load_donor_starts(path)
    assert starts == {"d1": date(2021, 5, 1), "d2": date(2021, 6, 15)}


def test_load_donor_starts_duplicate(tmp_path):
    path = tmp_path / "starts.csv"
    path.write_text("donor_id,start_date\nd1,2021-05-01\nd1,2021-06-15\n", encoding="utf-8")
    with pytest.raises(WeatherError):
        load_donor_starts(path)


# ---- augment_features -------------------------------------------------


def base_matrix(n, dim=4, seed=0):
    rng = np.random.default_rng(seed)
    return EmbeddingMatrix(
        image_ids=tuple(f"i{k}" for k in range(n)),
        values=rng.standard_normal((n, dim)),
    )


def test_augment_width_and_passthrough():
    base = base_matrix(6, dim=256)
    weather = np.random.default_rng(1).uniform(0, 30, size=(6, 3))
    aug = augment_features(base, weather)
    assert aug.values.shape == (6, 259)
    assert aug.width == 259
    assert np.array_equal(aug.values[:, :256], base.values)


def test_augment_normalize_off_alpha_one_bit_exact():
    base = base_matrix(5)
    weather = np.random.default_rng(2).uniform(0, 30, size=(5, 3))
    aug = augment_features(base, weather, alpha=1.0, normalize=False)
    assert np.array_equal(aug.weather_cols, weather)
    assert np.array_equal(aug.values[:, -3:], weather)


def test_augment_alpha_zero_blanks_weather():
    base = base_matrix(5)
    weather = np.random.default_rng(2).uniform(0, 30, size=(5, 3))
    aug = augment_features(base, weather, alpha=0.0, normalize=True)
    assert np.all(aug.values[:, -3:] == 0.0)


def test_augment_zscore_three_values():
    base = base_matrix(3)
    weather = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [3.0, 3.0, 3.0]])
    aug = augment_features(base, weather, alpha=1.0, normalize=True)
    expected = 1.224744871391589  # 1 / sqrt(2/3), direct-summation oracle
    assert np.allclose(aug.weather_cols[0], -expected, atol=1e-9)
    assert np.allclose(aug.weather_cols[1], 0.0, atol=1e-12)
    assert np.allclose(aug.weather_cols[2], expected, atol=1e-9)


def test_augment_zero_variance_column_zeroed():
    base = base_matrix(4)
    weather = np.column_stack(
        [np.full(4, 7.5), np.arange(4, dtype=float), np.full(4, -2.0)]
    )
    aug = augment_features(base, weather, normalize=True)
    assert np.all(aug.weather_cols[:, 0] == 0.0)
    assert np.all(aug.weather_cols[:, 2] == 0.0)
    assert not np.all(aug.weather_cols[:, 1] == 0.0)
    assert aug.scaling.stds[0] == 0.0


def test_augment_constant_column_with_awkward_value_still_zeroed():
    # Odd multiples of this value round under naive accumulation, so a
    # plain std() comes back ~1e-15 instead of 0; the constant column
    # must still be treated as zero-variance.
    base = base_matrix(8)
    weather = np.tile([52.89129167, 11.776125, 10.07208333], (8, 1))
    aug = augment_features(base, weather, normalize=True)
    assert np.all(aug.weather_cols == 0.0)
    assert aug.scaling.stds == (0.0, 0.0, 0.0)
    assert aug.scaling.means == (52.89129167, 11.776125, 10.07208333)


def test_augment_normalized_columns_standardized():
    rng = np.random.default_rng(9)
    base = base_matrix(200)
    weather = rng.uniform(5, 400, size=(200, 3))
    aug = augment_features(base, weather, alpha=2.5, normalize=True)
    cols = aug.weather_cols
    assert np.allclose(cols.mean(axis=0), 0.0, atol=1e-10)
    assert np.allclose(cols.std(axis=0), 2.5, atol=1e-10)
    assert aug.scaling.alpha == 2.5
    assert aug.scaling.normalized


def test_augment_row_mismatch():
    base = base_matrix(5)
    with pytest.raises(WeatherError) as exc:
        augment_features(base, np.zeros((4, 3)))
    assert "5" in str(exc.value) and "4" in str(exc.value)


def test_augment_bad_block_shape():
    base = base_matrix(5)
    with pytest.raises(WeatherError):
        augment_features(base, np.zeros((5, 2)))
