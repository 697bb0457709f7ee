"""Shared builders for synthetic photo corpora."""

from datetime import date, datetime, time, timedelta, timezone

import numpy as np
import pytest

from taphos.embeddings import EmbeddingMatrix, save_embeddings

UTC = timezone.utc


def write_manifest_csv(path, image_ids, donors, taken_ats):
    lines = ["image_id,file_path,donor_id,taken_at"]
    for i, d, t in zip(image_ids, donors, taken_ats):
        lines.append(f"{i},photos/{i}.jpg,{d},{t.isoformat()}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_weather_csv(path, first_day, last_day, rng, zone=UTC):
    """Hourly rows covering [first_day, last_day] inclusive."""
    lines = ["observed_at,temperature_c,relative_humidity_pct,wind_speed_mps"]
    day = first_day
    while day <= last_day:
        for hour in range(24):
            ts = datetime.combine(day, time(hour), zone)
            t = rng.uniform(-5, 35)
            h = rng.uniform(5, 95)
            w = rng.uniform(0, 18)
            lines.append(f"{ts.isoformat()},{t:.3f},{h:.3f},{w:.3f}")
        day += timedelta(days=1)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def corpus_factory(tmp_path):
    """Build a complete on-disk corpus: manifest, embeddings, weather.

    values: (N, dim) feature matrix. donors/dates default to one donor
    spread over a few days.
    """

    def build(values, donors=None, dates=None, seed=0, subdir="corpus"):
        root = tmp_path / subdir
        root.mkdir(parents=True, exist_ok=True)
        rng = np.random.default_rng(seed)
        n = values.shape[0]
        image_ids = [f"img_{i:04d}" for i in range(n)]
        if donors is None:
            donors = ["donor_a"] * n
        if dates is None:
            base = date(2021, 5, 1)
            dates = [base + timedelta(days=i % 4) for i in range(n)]
        taken_ats = [
            datetime.combine(d, time(10, 30), UTC) + timedelta(minutes=i)
            for i, d in enumerate(dates)
        ]
        manifest_path = write_manifest_csv(
            root / "manifest.csv", image_ids, donors, taken_ats
        )
        embeddings_path = root / "embeddings.bin"
        save_embeddings(
            EmbeddingMatrix(image_ids=tuple(image_ids), values=np.asarray(values, dtype=np.float64)),
            embeddings_path,
        )
        weather_path = write_weather_csv(
            root / "weather.csv", min(dates), max(dates), rng
        )
        return {
            "root": root,
            "manifest": manifest_path,
            "embeddings": embeddings_path,
            "weather": weather_path,
            "image_ids": image_ids,
            "dates": dates,
            "donors": donors,
        }

    return build


def blob_matrix(rng, n_blobs, per_blob, dim, separation, spread=1.0):
    """Gaussian blobs at mutually orthogonal centers a fixed distance apart."""
    centers = np.zeros((n_blobs, dim))
    for b in range(n_blobs):
        centers[b, b] = separation / np.sqrt(2.0)
    labels = np.repeat(np.arange(n_blobs), per_blob)
    X = centers[labels] + spread * rng.standard_normal((n_blobs * per_blob, dim))
    return X, labels
