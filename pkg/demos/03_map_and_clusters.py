"""Project high-dimensional features to a 2-d map, then cluster.

PCA keeps the directions that matter, the map is for eyeballing how
many groups there are, KMeans makes the grouping official.
"""

import numpy as np

from taphos.kmeans import kmeans_fit
from taphos.pca import fit_pca, pca_transform
from taphos.tsne import TsneConfig, run_tsne

rng = np.random.default_rng(3)

# four planted groups in 64-d
centers = rng.standard_normal((4, 64)) * 7
planted = np.repeat(np.arange(4), 30)
X = centers[planted] + rng.standard_normal((120, 64))

model = fit_pca(X, 10)
reduced = pca_transform(model, X)
explained = model.explained_variance
share = explained[:4].sum() / explained.sum()
print(f"top 4 of 10 kept components carry {share:.0%} of kept variance")

embedding = run_tsne(reduced, TsneConfig(
    perplexity=15.0, iterations=400,
    early_exaggeration_iters=100, momentum_switch_iter=100, seed=0))
print(f"KL after exaggeration {embedding.kl_trace[100]:.3f}, "
      f"final {embedding.kl_trace[-1]:.3f}")

# crude terminal scatter, one glyph per planted group
ys = embedding.y
gx = ((ys[:, 0] - ys[:, 0].min()) / np.ptp(ys[:, 0]) * 58).astype(int)
gy = ((ys[:, 1] - ys[:, 1].min()) / np.ptp(ys[:, 1]) * 18).astype(int)
grid = [[" "] * 60 for _ in range(19)]
for x, y, g in zip(gx, gy, planted):
    grid[18 - y][x] = "abcd"[g]
print()
for line in grid:
    print("".join(line).rstrip())
print()

clustered = kmeans_fit(reduced, 4, seed=0, restarts=10)
agree = 0
for c in range(4):
    members = planted[clustered.assignments == c]
    if len(members):
        agree += np.bincount(members).max()
print(f"kmeans inertia {clustered.inertia:.1f}, "
      f"purity vs planted groups {agree / len(planted):.2%}")
