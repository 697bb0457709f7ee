"""KMeans with k-means++ seeding and best-of-restarts selection.

Every run is deterministic: restart r draws from a generator seeded with
seed + r, assignment ties break to the lowest centroid index, and empty
clusters are repaired by reseeding to the point farthest from the dead
centroid. Within one Lloyd run the inertia sequence is asserted
non-increasing at every step; a violation means a bug, not bad data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import read_matrix_stream, write_matrix_stream


class KMeansError(ValueError):
    """Raised on invalid k, shape mismatches, or malformed model files."""


@dataclass(frozen=True)
class ClusterModel:
    """Fitted clustering: centroids plus the training assignment."""

    k: int
    centroids: np.ndarray  # (k, d)
    assignments: np.ndarray  # (n,) int64 in [0, k)
    inertia: float
    iterations_run: int
    seed: int
    restarts: int

    def __post_init__(self) -> None:
        if self.centroids.shape[0] != self.k:
            raise KMeansError(
                f"{self.centroids.shape[0]} centroids for k={self.k}"
            )
        if self.assignments.size and (
            self.assignments.min() < 0 or self.assignments.max() >= self.k
        ):
            raise KMeansError("assignment index out of [0, k)")
        if self.inertia < 0:
            raise KMeansError(f"negative inertia {self.inertia}")

    @property
    def d(self) -> int:
        return self.centroids.shape[1]


def _pairwise_sq(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, (n, k)."""
    d2 = (
        np.sum(X * X, axis=1)[:, None]
        - 2.0 * X @ C.T
        + np.sum(C * C, axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def inertia(X: np.ndarray, centroids: np.ndarray, assignments: np.ndarray) -> float:
    """Sum of squared distances from each point to its assigned centroid."""
    X = np.asarray(X, dtype=np.float64)
    diff = X - centroids[assignments]
    return float(np.einsum("ij,ij->", diff, diff))


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first centroid uniform, the rest D^2-weighted."""
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = X[first]
    d2 = _pairwise_sq(X, centroids[:1]).ravel()
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # Every point already coincides with a chosen centroid.
            idx = int(rng.integers(n))
        centroids[j] = X[idx]
        d2 = np.minimum(d2, _pairwise_sq(X, centroids[j : j + 1]).ravel())
    return centroids


def _assign_with_repair(
    X: np.ndarray, centroids: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-centroid assignment; dead centroids get reseeded to their
    farthest point (ties to lowest index) until none are empty."""
    k = centroids.shape[0]
    centroids = centroids.copy()
    for _ in range(k + 1):
        d2 = _pairwise_sq(X, centroids)
        assign = np.argmin(d2, axis=1)
        counts = np.bincount(assign, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return assign, centroids
        for j in empty:
            centroids[j] = X[int(np.argmax(d2[:, j]))]
    # Degenerate duplicates can leave a cluster unfillable; accept as-is.
    return assign, centroids


def _lloyd_run(
    X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int, tol: float
) -> tuple[np.ndarray, np.ndarray, float, int]:
    centroids = _kmeans_pp(X, k, rng)
    prev_inertia = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        assign, centroids = _assign_with_repair(X, centroids)
        cur = inertia(X, centroids, assign)
        assert cur <= prev_inertia * (1.0 + 1e-9) + 1e-12, (
            f"inertia increased: {prev_inertia} -> {cur}"
        )
        prev_inertia = cur

        new_centroids = centroids.copy()
        for j in range(k):
            members = X[assign == j]
            if members.shape[0]:
                new_centroids[j] = members.mean(axis=0)
        movement = np.sqrt(np.max(np.sum((new_centroids - centroids) ** 2, axis=1)))
        centroids = new_centroids
        if movement < tol:
            break
    assign, centroids = _assign_with_repair(X, centroids)
    final = inertia(X, centroids, assign)
    assert final <= prev_inertia * (1.0 + 1e-9) + 1e-12
    return assign, centroids, final, iterations


def kmeans_fit(
    X: np.ndarray,
    k: int,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> ClusterModel:
    """Best-inertia model over ``restarts`` independent seeded runs."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise KMeansError(f"expected a 2-d matrix, got shape {X.shape}")
    n = X.shape[0]
    if k <= 0:
        raise KMeansError(f"k must be positive, got {k}")
    if k > n:
        raise KMeansError(f"k={k} exceeds the {n} available points")
    if not np.all(np.isfinite(X)):
        raise KMeansError("input matrix contains non-finite values")
    if restarts < 1:
        raise KMeansError(f"restarts must be >= 1, got {restarts}")

    best: tuple[np.ndarray, np.ndarray, float, int] | None = None
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        run = _lloyd_run(X, k, rng, max_iter, tol)
        if best is None or run[2] < best[2]:
            best = run
    assign, centroids, best_inertia, iterations = best
    return ClusterModel(
        k=k,
        centroids=centroids,
        assignments=assign.astype(np.int64),
        inertia=best_inertia,
        iterations_run=iterations,
        seed=seed,
        restarts=restarts,
    )


def kmeans_assign(model: ClusterModel, X: np.ndarray) -> np.ndarray:
    """Nearest-centroid index per row of X, ties to the lowest index."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise KMeansError(f"expected a 2-d matrix, got shape {X.shape}")
    if X.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    if X.shape[1] != model.d:
        raise KMeansError(
            f"width mismatch: matrix has {X.shape[1]} columns, centroids have {model.d}"
        )
    return np.argmin(_pairwise_sq(X, model.centroids), axis=1).astype(np.int64)


def save_cluster_model(model: ClusterModel, path: str | Path) -> None:
    """Model file: one JSON line (k, d, inertia, seed) + the centroid
    block in the shared matrix format."""
    path = Path(path)
    header = {"k": model.k, "d": model.d, "inertia": model.inertia, "seed": model.seed}
    with path.open("wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        write_matrix_stream(fh, model.centroids)


def load_cluster_model(path: str | Path) -> ClusterModel:
    """Load centroids and metadata. Training assignments do not travel
    with the file; assign with kmeans_assign as needed."""
    path = Path(path)
    with path.open("rb") as fh:
        try:
            header = json.loads(fh.readline().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise KMeansError(f"{path}: bad model header: {exc}") from exc
        for key in ("k", "d", "inertia", "seed"):
            if key not in header:
                raise KMeansError(f"{path}: model header missing {key!r}")
        centroids = read_matrix_stream(fh, source=str(path))
    if centroids.shape != (int(header["k"]), int(header["d"])):
        raise KMeansError(
            f"{path}: centroid block {centroids.shape} does not match header "
            f"k={header['k']} d={header['d']}"
        )
    return ClusterModel(
        k=int(header["k"]),
        centroids=centroids,
        assignments=np.empty(0, dtype=np.int64),
        inertia=float(header["inertia"]),
        iterations_run=0,
        seed=int(header["seed"]),
        restarts=0,
    )
