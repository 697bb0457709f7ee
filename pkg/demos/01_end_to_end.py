"""Full run on a synthetic corpus: manifest + features + weather in,
clustered artifacts out. Everything lands in a temp directory that is
printed at the end so you can poke at the files."""

import tempfile
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path

import numpy as np

from taphos.embeddings import EmbeddingMatrix, save_embeddings, load_embeddings
from taphos.evaluation import load_assignments
from taphos.pipeline import PipelineConfig, run_pipeline
from taphos.tsne import TsneConfig

root = Path(tempfile.mkdtemp(prefix="taphos-demo-"))
rng = np.random.default_rng(1)

# 60 photos from two donors over five days
n = 60
ids = [f"photo_{i:03d}" for i in range(n)]
donors = ["donor_a" if i < 35 else "donor_b" for i in range(n)]
days = [date(2021, 6, 1) + timedelta(days=i % 5) for i in range(n)]
rows = ["image_id,file_path,donor_id,taken_at"]
for i, (pid, donor, day) in enumerate(zip(ids, donors, days)):
    taken = datetime.combine(day, time(9, 0), timezone.utc) + timedelta(minutes=i)
    rows.append(f"{pid},photos/{pid}.jpg,{donor},{taken.isoformat()}")
(root / "manifest.csv").write_text("\n".join(rows) + "\n")

# fake backbone output: three loose groups in 128-d
centers = rng.standard_normal((3, 128)) * 6
features = centers[np.arange(n) % 3] + rng.standard_normal((n, 128))
save_embeddings(EmbeddingMatrix(tuple(ids), features), root / "embeddings.bin")

# hourly weather covering the whole photo span
wrows = ["observed_at,temperature_c,relative_humidity_pct,wind_speed_mps"]
day = min(days)
while day <= max(days):
    for hour in range(24):
        ts = datetime.combine(day, time(hour), timezone.utc)
        wrows.append(f"{ts.isoformat()},{rng.uniform(8, 30):.2f},"
                     f"{rng.uniform(20, 90):.2f},{rng.uniform(0, 12):.2f}")
    day += timedelta(days=1)
(root / "weather.csv").write_text("\n".join(wrows) + "\n")

config = PipelineConfig(
    manifest_path=root / "manifest.csv",
    embeddings_path=root / "embeddings.bin",
    weather_path=root / "weather.csv",
    out_dir=root / "out",
    pca_dim=16,
    k=3,
    tsne=TsneConfig(perplexity=8.0, iterations=300,
                    early_exaggeration_iters=80, momentum_switch_iter=80),
    seed=0,
)
artifacts = run_pipeline(config, log=print)

reduced = load_embeddings(artifacts.reduced_path)
augmented = load_embeddings(artifacts.augmented_path)
assignments = load_assignments(artifacts.assignments_path)
print()
print(f"reduced   {reduced.values.shape}")
print(f"augmented {augmented.values.shape}")
sizes = {}
for c in assignments.values():
    sizes[c] = sizes.get(c, 0) + 1
print(f"cluster sizes: {dict(sorted(sizes.items()))}")
print(f"artifacts under {root / 'out'}")
