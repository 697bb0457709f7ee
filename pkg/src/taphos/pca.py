"""Principal component analysis via SVD of the row-centered matrix.

SVD rather than an explicit covariance matrix keeps things stable at
d = 2048. The sign of each component is pinned by forcing its
largest-magnitude entry positive, so fitted models are reproducible and
tests can compare exactly.

target_dim may exceed the data rank (a 100-photo batch still reduces to
256 columns); the extra components come from the SVD's orthonormal
completion and carry zero explained variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PcaError(ValueError):
    """Raised on dimension mismatches or invalid inputs."""


@dataclass(frozen=True)
class PcaModel:
    """Centered orthonormal projection, components ordered by variance."""

    mean: np.ndarray  # (d,)
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance: np.ndarray  # (k,), non-increasing, >= 0
    fitted_dim: int
    target_dim: int

    def __post_init__(self) -> None:
        k, d = self.components.shape
        if k != self.target_dim or d != self.fitted_dim:
            raise PcaError(
                f"components shape {self.components.shape} inconsistent with "
                f"target_dim {self.target_dim}, fitted_dim {self.fitted_dim}"
            )
        if self.mean.shape != (d,):
            raise PcaError(f"mean shape {self.mean.shape}, expected ({d},)")
        if self.explained_variance.shape != (k,):
            raise PcaError(
                f"explained_variance shape {self.explained_variance.shape}, expected ({k},)"
            )
        gram = self.components @ self.components.T
        if not np.allclose(gram, np.eye(k), atol=1e-8):
            raise PcaError("component rows are not orthonormal within 1e-8")
        ev = self.explained_variance
        if np.any(ev < 0) or np.any(np.diff(ev) > 1e-12):
            raise PcaError("explained_variance must be non-negative and non-increasing")


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Force the largest-magnitude entry of each row positive."""
    out = components.copy()
    for row in out:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    return out


def fit_pca(X: np.ndarray, target_dim: int) -> PcaModel:
    """Fit the top ``target_dim`` principal directions of X.

    explained_variance[i] = sigma_i^2 / (N - 1). Directions beyond the
    centered data's rank (at most N - 1) are a deterministic orthonormal
    completion with zero variance.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise PcaError(f"expected a 2-d matrix, got shape {X.shape}")
    n, d = X.shape
    if n < 2:
        raise PcaError(f"need at least 2 rows to fit, got {n}")
    if not np.all(np.isfinite(X)):
        raise PcaError("input matrix contains non-finite values")
    if not 1 <= target_dim <= d:
        raise PcaError(
            f"target_dim {target_dim} out of range: must be within [1, {d}] "
            f"(data supports at most {min(n - 1, d)} informative directions)"
        )

    mean = X.mean(axis=0)
    centered = X - mean
    # Full matrices only when the completion rows are actually needed.
    full = target_dim > min(n, d)
    _, singular, vt = np.linalg.svd(centered, full_matrices=full)

    variance = np.zeros(target_dim)
    r = min(target_dim, singular.shape[0])
    variance[:r] = singular[:r] ** 2 / (n - 1)
    components = _fix_signs(vt[:target_dim])
    return PcaModel(
        mean=mean,
        components=components,
        explained_variance=variance,
        fitted_dim=d,
        target_dim=target_dim,
    )


def pca_transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """Project rows of X: (X - mean) @ components^T."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise PcaError(f"expected a 2-d matrix, got shape {X.shape}")
    if X.shape[1] != model.fitted_dim:
        raise PcaError(
            f"width mismatch: matrix has {X.shape[1]} columns, model fitted on "
            f"{model.fitted_dim}"
        )
    return (X - model.mean) @ model.components.T
