"""Weather exposure features.

Turns an hourly observation series into one 3-component vector per photo:
accumulated degree-day style averages of temperature, humidity, and wind
speed over the calendar days from a donor's decomposition start to the
photo's capture date, inclusive. The resulting N x 3 block is appended to
the reduced image features.

Day boundaries live in the series' timezone; photo timestamps are
converted into that zone before their calendar date is taken.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone, tzinfo
from functools import cached_property
from pathlib import Path
from zoneinfo import ZoneInfo

import numpy as np

from .embeddings import EmbeddingMatrix
from .manifest import Manifest, ManifestError, parse_timestamp

WEATHER_HEADER = ["observed_at", "temperature_c", "relative_humidity_pct", "wind_speed_mps"]
DONOR_START_HEADER = ["donor_id", "start_date"]

FIELDS = ("temperature", "humidity", "wind")


class WeatherError(ValueError):
    """Raised on malformed weather data or unsatisfiable date ranges."""


def _mean(values: list[float]) -> float:
    # Shifted mean: constant input must come back exactly (a plain
    # sum/n rounds, e.g. mean of three 0.1s), and fsum keeps the
    # residual sum exact.
    base = values[0]
    return base + math.fsum(v - base for v in values) / len(values)


@dataclass(frozen=True)
class WeatherObservation:
    """One hourly reading with an offset-aware timestamp."""

    observed_at: datetime
    temperature_c: float
    relative_humidity_pct: float
    wind_speed_mps: float

    def __post_init__(self) -> None:
        if self.observed_at.tzinfo is None:
            raise WeatherError(f"observation at {self.observed_at} has no UTC offset")
        for name in ("temperature_c", "relative_humidity_pct", "wind_speed_mps"):
            if not math.isfinite(getattr(self, name)):
                raise WeatherError(f"non-finite {name} at {self.observed_at.isoformat()}")
        if not 0.0 <= self.relative_humidity_pct <= 100.0:
            raise WeatherError(
                f"humidity {self.relative_humidity_pct} out of [0, 100] at "
                f"{self.observed_at.isoformat()}"
            )
        if self.wind_speed_mps < 0.0:
            raise WeatherError(
                f"negative wind speed {self.wind_speed_mps} at {self.observed_at.isoformat()}"
            )


@dataclass(frozen=True)
class WeatherSeries:
    """Time-sorted observations plus the zone that bounds calendar days."""

    observations: tuple[WeatherObservation, ...]
    zone: tzinfo = timezone.utc

    def __post_init__(self) -> None:
        if not self.observations:
            raise WeatherError("weather series has no observations")
        prev = None
        for obs in self.observations:
            if prev is not None:
                if obs.observed_at == prev:
                    raise WeatherError(f"duplicate observation timestamp {obs.observed_at.isoformat()}")
                if obs.observed_at < prev:
                    raise WeatherError("observations not sorted ascending")
            prev = obs.observed_at

    def __len__(self) -> int:
        return len(self.observations)

    def day_of(self, instant: datetime) -> date:
        return instant.astimezone(self.zone).date()

    @cached_property
    def daily_means(self) -> dict[date, tuple[float, float, float]]:
        """Per-calendar-day mean of each field, built once and reused."""
        buckets: dict[date, tuple[list[float], list[float], list[float]]] = {}
        for obs in self.observations:
            day = self.day_of(obs.observed_at)
            temps, hums, winds = buckets.setdefault(day, ([], [], []))
            temps.append(obs.temperature_c)
            hums.append(obs.relative_humidity_pct)
            winds.append(obs.wind_speed_mps)
        return {
            day: (_mean(t), _mean(h), _mean(w)) for day, (t, h, w) in buckets.items()
        }


@dataclass(frozen=True)
class AddVector:
    """Accumulated exposure for one photo: per-field mean of daily averages."""

    add_temperature: float
    add_humidity: float
    add_wind: float
    n_days: int

    def __post_init__(self) -> None:
        if self.n_days < 1:
            raise WeatherError(f"n_days must be >= 1, got {self.n_days}")
        for name in ("add_temperature", "add_humidity", "add_wind"):
            if not math.isfinite(getattr(self, name)):
                raise WeatherError(f"non-finite {name}")

    def as_array(self) -> np.ndarray:
        return np.array([self.add_temperature, self.add_humidity, self.add_wind])


def _resolve_zone(zone: str | tzinfo | None, observations: list[WeatherObservation]) -> tzinfo:
    if zone is None:
        # Default to the fixed offset the data itself carries.
        offset = observations[0].observed_at.utcoffset()
        return timezone(offset if offset is not None else timedelta(0))
    if isinstance(zone, tzinfo):
        return zone
    if zone.upper() == "UTC":
        return timezone.utc
    try:
        return ZoneInfo(zone)
    except Exception as exc:
        raise WeatherError(f"unknown timezone {zone!r}: {exc}") from exc


def load_weather(path: str | Path, zone: str | tzinfo | None = None) -> WeatherSeries:
    """Load hourly observations from CSV.

    Rows may arrive out of order; the returned series is sorted. Errors
    carry the file row number (header is row 1).
    """
    path = Path(path)
    observations: list[WeatherObservation] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise WeatherError(f"{path}: empty weather file") from None
        if header != WEATHER_HEADER:
            raise WeatherError(
                f"{path}: expected header {','.join(WEATHER_HEADER)}, got {','.join(header)}"
            )
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 4:
                raise WeatherError(f"{path}: row {row_no}: expected 4 fields, got {len(row)}")
            try:
                observed_at = parse_timestamp(row[0])
                obs = WeatherObservation(
                    observed_at=observed_at,
                    temperature_c=float(row[1]),
                    relative_humidity_pct=float(row[2]),
                    wind_speed_mps=float(row[3]),
                )
            except (WeatherError, ManifestError, ValueError) as exc:
                raise WeatherError(f"{path}: row {row_no}: {exc}") from None
            observations.append(obs)
    if not observations:
        raise WeatherError(f"{path}: empty weather file")
    observations.sort(key=lambda o: o.observed_at)
    resolved = _resolve_zone(zone, observations)
    try:
        return WeatherSeries(observations=tuple(observations), zone=resolved)
    except WeatherError as exc:
        raise WeatherError(f"{path}: {exc}") from None


def daily_average(series: WeatherSeries, day: date, field_name: str) -> float:
    """Mean of one field's observations within [day 00:00, next day 00:00)
    in the series timezone."""
    if field_name not in FIELDS:
        raise WeatherError(f"unknown field {field_name!r}, expected one of {FIELDS}")
    try:
        means = series.daily_means[day]
    except KeyError:
        raise WeatherError(f"no observations on {day.isoformat()}") from None
    return means[FIELDS.index(field_name)]


def compute_add(
    series: WeatherSeries,
    decomposition_start: date,
    photo_date: date,
    *,
    cumulative: bool = False,
    skip_missing: bool = False,
) -> AddVector:
    """Average (or, with ``cumulative``, sum) of daily averages over the
    inclusive day range from decomposition start to the photo date.

    n_days counts the days that actually contribute: the full inclusive
    range by default, the non-missing subset under ``skip_missing``.
    Missing days are otherwise a hard error listing every absent date.
    """
    if photo_date < decomposition_start:
        raise WeatherError(
            f"photo date {photo_date.isoformat()} precedes decomposition start "
            f"{decomposition_start.isoformat()}"
        )
    span = (photo_date - decomposition_start).days + 1
    days = [decomposition_start + timedelta(days=i) for i in range(span)]
    table = series.daily_means
    missing = [d for d in days if d not in table]
    if missing:
        if not skip_missing:
            listed = ", ".join(d.isoformat() for d in missing)
            raise WeatherError(f"missing weather days: {listed}")
        days = [d for d in days if d in table]
        if not days:
            raise WeatherError(
                f"no weather data in range {decomposition_start.isoformat()}.."
                f"{photo_date.isoformat()}"
            )
    per_field: list[float] = []
    for idx in range(3):
        daily = [table[d][idx] for d in days]
        per_field.append(math.fsum(daily) if cumulative else _mean(daily))
    return AddVector(
        add_temperature=per_field[0],
        add_humidity=per_field[1],
        add_wind=per_field[2],
        n_days=len(days),
    )


def load_donor_starts(path: str | Path) -> dict[str, date]:
    """Per-donor decomposition start dates from CSV."""
    path = Path(path)
    starts: dict[str, date] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise WeatherError(f"{path}: empty donor-start file") from None
        if header != DONOR_START_HEADER:
            raise WeatherError(
                f"{path}: expected header {','.join(DONOR_START_HEADER)}, got {','.join(header)}"
            )
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise WeatherError(f"{path}: row {row_no}: expected 2 fields, got {len(row)}")
            donor_id, raw = row
            if donor_id in starts:
                raise WeatherError(f"{path}: row {row_no}: duplicate donor_id {donor_id!r}")
            try:
                starts[donor_id] = date.fromisoformat(raw.strip())
            except ValueError as exc:
                raise WeatherError(f"{path}: row {row_no}: {exc}") from None
    if not starts:
        raise WeatherError(f"{path}: empty donor-start file")
    return starts


def build_weather_block(
    manifest: Manifest,
    series: WeatherSeries,
    start_policy: dict[str, date] | str = "earliest-photo",
    *,
    cumulative: bool = False,
    skip_missing: bool = False,
) -> np.ndarray:
    """N x 3 matrix whose row i is the AddVector of manifest record i.

    ``start_policy`` is either an explicit donor -> start-date map or the
    string "earliest-photo" (start = each donor's earliest capture date).
    """
    photo_days = [series.day_of(rec.taken_at) for rec in manifest.records]
    if isinstance(start_policy, str):
        if start_policy != "earliest-photo":
            raise WeatherError(f"unknown start policy {start_policy!r}")
        starts: dict[str, date] = {}
        for rec, day in zip(manifest.records, photo_days):
            cur = starts.get(rec.donor_id)
            if cur is None or day < cur:
                starts[rec.donor_id] = day
    else:
        starts = dict(start_policy)
        absent = sorted({r.donor_id for r in manifest.records} - starts.keys())
        if absent:
            raise WeatherError(f"no start date for donor(s): {', '.join(absent)}")

    block = np.empty((len(manifest), 3), dtype=np.float64)
    cache: dict[tuple[str, date], AddVector] = {}
    for i, (rec, day) in enumerate(zip(manifest.records, photo_days)):
        key = (rec.donor_id, day)
        vec = cache.get(key)
        if vec is None:
            vec = compute_add(
                series, starts[rec.donor_id], day,
                cumulative=cumulative, skip_missing=skip_missing,
            )
            cache[key] = vec
        block[i] = vec.as_array()
    return block


@dataclass(frozen=True)
class ScalingRecord:
    """What augment_features did to the weather columns, for reproducibility."""

    normalized: bool
    alpha: float
    means: tuple[float, float, float] | None = None
    stds: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class AugmentedMatrix:
    """Reduced image features with the (possibly scaled) weather block appended."""

    base: EmbeddingMatrix
    weather_cols: np.ndarray
    scaling: ScalingRecord

    def __post_init__(self) -> None:
        if self.weather_cols.shape != (self.base.n, 3):
            raise WeatherError(
                f"weather block shape {self.weather_cols.shape} does not match "
                f"{self.base.n} rows x 3"
            )

    @property
    def values(self) -> np.ndarray:
        out = np.hstack([self.base.values, self.weather_cols])
        assert out.shape[1] == self.base.dim + 3
        return out

    @property
    def width(self) -> int:
        return self.base.dim + 3


def augment_features(
    reduced: EmbeddingMatrix,
    weather: np.ndarray,
    *,
    alpha: float = 1.0,
    normalize: bool = True,
) -> AugmentedMatrix:
    """Append the weather block to the reduced features.

    With ``normalize`` set, each weather column is z-scored over the
    dataset (population std-dev) then multiplied by ``alpha``. A
    zero-variance column cannot be z-scored and passes through as all
    zeros. With ``normalize`` off the raw columns are scaled by alpha
    only, so alpha 1 appends them bit-exactly.
    """
    weather = np.asarray(weather, dtype=np.float64)
    if weather.ndim != 2 or weather.shape[1] != 3:
        raise WeatherError(f"weather block must be N x 3, got {weather.shape}")
    if weather.shape[0] != reduced.n:
        raise WeatherError(
            f"row count mismatch: {reduced.n} feature rows vs {weather.shape[0]} weather rows"
        )
    if alpha < 0:
        raise WeatherError(f"alpha must be >= 0, got {alpha}")
    if normalize:
        means = weather.mean(axis=0)
        stds = weather.std(axis=0)
        # A bitwise-constant column is zero-variance even when the
        # accumulated mean drifts an ulp off the constant; z-scoring
        # that drift would blow it up into O(1) noise.
        constant = np.all(weather == weather[:1], axis=0)
        means = np.where(constant, weather[:1].sum(axis=0), means)
        stds = np.where(constant, 0.0, stds)
        cols = np.zeros_like(weather)
        nonzero = stds > 0
        cols[:, nonzero] = (weather[:, nonzero] - means[nonzero]) / stds[nonzero]
        cols *= alpha
        scaling = ScalingRecord(
            normalized=True, alpha=alpha,
            means=tuple(float(m) for m in means),
            stds=tuple(float(s) for s in stds),
        )
    else:
        cols = weather * alpha
        scaling = ScalingRecord(normalized=False, alpha=alpha)
    return AugmentedMatrix(base=reduced, weather_cols=cols, scaling=scaling)
