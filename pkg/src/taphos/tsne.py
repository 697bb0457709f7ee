"""Exact t-SNE for 2D projection of the augmented features.

Everything is the O(N^2) formulation: full pairwise affinities, full
Student-t kernel, no tree approximation. At the target scale (10^4
points and below) this stays tractable and keeps every quantity open to
direct oracle checks: per-row perplexity calibration, hand-derived
symmetrization values, and finite-difference validation of the gradient.

The descent records KL(P || Q) each iteration, always against the plain
(un-exaggerated) P, so the trace is comparable across the exaggeration
boundary.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .manifest import Manifest

P_FLOOR = 1e-12
Q_FLOOR = 1e-12
CALIBRATION_RTOL = 1e-4
MAX_BISECTION_STEPS = 200


class TsneError(ValueError):
    """Raised on invalid configuration or a diverged optimization."""


@dataclass(frozen=True)
class TsneConfig:
    """Knobs for the descent. Defaults are the standard settings."""

    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    early_exaggeration_factor: float = 12.0
    early_exaggeration_iters: int = 250
    momentum_initial: float = 0.5
    momentum_final: float = 0.8
    momentum_switch_iter: int = 250
    seed: int = 0

    def __post_init__(self) -> None:
        if self.perplexity <= 0:
            raise TsneError(f"perplexity must be > 0, got {self.perplexity}")
        if self.learning_rate <= 0:
            raise TsneError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.early_exaggeration_factor < 1:
            raise TsneError(
                f"early_exaggeration_factor must be >= 1, got {self.early_exaggeration_factor}"
            )
        if self.iterations < self.early_exaggeration_iters:
            raise TsneError(
                f"iterations ({self.iterations}) must cover the exaggeration phase "
                f"({self.early_exaggeration_iters})"
            )
        for name in ("momentum_initial", "momentum_final"):
            m = getattr(self, name)
            if not 0.0 <= m < 1.0:
                raise TsneError(f"{name} must be in [0, 1), got {m}")
        if self.early_exaggeration_iters < 0 or self.momentum_switch_iter < 0:
            raise TsneError("iteration counts must be non-negative")


@dataclass(frozen=True)
class Embedding2D:
    """Final layout plus the per-iteration KL trace."""

    y: np.ndarray  # (n, 2)
    kl_trace: np.ndarray  # (iterations,)

    def __post_init__(self) -> None:
        if self.y.ndim != 2 or self.y.shape[1] != 2:
            raise TsneError(f"embedding must be N x 2, got {self.y.shape}")
        if not np.all(np.isfinite(self.y)) or not np.all(np.isfinite(self.kl_trace)):
            raise TsneError("embedding contains non-finite values")


def _sq_distances(X: np.ndarray) -> np.ndarray:
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] - 2.0 * X @ X.T + sq[None, :]
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def conditional_affinities(X: np.ndarray, perplexity: float) -> np.ndarray:
    """Row-stochastic P(j|i) with per-row Gaussian bandwidths calibrated
    by bisection so each row's perplexity (2^entropy) hits the target
    within 1e-4 relative.

    Rows whose perplexity is structurally pinned (all neighbors
    equidistant, so no bandwidth changes the entropy) come back as the
    limiting distribution instead of erroring; a row that cannot form a
    distribution at all is reported by index.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 4:
        raise TsneError(f"need at least 4 points, got {n}")
    if not perplexity < (n - 1) / 3:
        raise TsneError(
            f"perplexity {perplexity} too large for {n} points; must be < {(n - 1) / 3}"
        )
    if not np.all(np.isfinite(X)):
        raise TsneError("input matrix contains non-finite values")

    d2 = _sq_distances(X)
    P = np.zeros((n, n))
    log_target = math.log(perplexity)
    for i in range(n):
        row = np.delete(d2[i], i)
        # Shift by the nearest neighbor: keeps exp() in range and
        # guarantees the weight sum is >= 1 for any beta.
        row = row - row.min()
        beta, beta_lo, beta_hi = 1.0, 0.0, np.inf
        p = None
        for _ in range(MAX_BISECTION_STEPS):
            w = np.exp(-row * beta)
            total = w.sum()
            p = w / total
            # Shannon entropy in nats; perplexity = exp(H).
            h = math.log(total) + beta * float(np.dot(row, w)) / total
            if abs(math.exp(h) - perplexity) <= CALIBRATION_RTOL * perplexity:
                break
            if h > log_target:
                # Entropy too high: narrow the kernel.
                beta_lo = beta
                beta = beta * 2.0 if beta_hi == np.inf else (beta_lo + beta_hi) / 2.0
            else:
                beta_hi = beta
                beta = (beta_lo + beta_hi) / 2.0
        if p is None or not np.all(np.isfinite(p)):
            raise TsneError(f"bandwidth search failed for row {i}")
        P[i, :i] = p[:i]
        P[i, i + 1 :] = p[i:]
    return P


def symmetrize_affinities(conditional: np.ndarray) -> np.ndarray:
    """Joint affinities p_ij = (p(j|i) + p(i|j)) / 2N, off-diagonals
    floored at 1e-12, then rescaled so the matrix sums to exactly 1."""
    n = conditional.shape[0]
    P = (conditional + conditional.T) / (2.0 * n)
    off = ~np.eye(n, dtype=bool)
    P[off] = np.maximum(P[off], P_FLOOR)
    np.fill_diagonal(P, 0.0)
    P /= P.sum()
    return P


def _student_t_weights(y: np.ndarray) -> np.ndarray:
    w = 1.0 / (1.0 + _sq_distances(y))
    np.fill_diagonal(w, 0.0)
    return w


def kl_divergence_and_grad(P: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """KL(P || Q) under the Student-t kernel, and its exact gradient
    d/dy of 4 * sum (p - q) w (y_i - y_j). Shared by the descent loop
    and the finite-difference oracle."""
    w = _student_t_weights(y)
    Z = w.sum()
    Q = w / Z
    M = (P - Q) * w
    grad = 4.0 * (M.sum(axis=1)[:, None] * y - M @ y)
    off = ~np.eye(P.shape[0], dtype=bool)
    p = P[off]
    q = np.maximum(Q[off], Q_FLOOR)
    mask = p > 0
    kl = float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))
    return kl, grad


def run_tsne(X: np.ndarray, config: TsneConfig) -> Embedding2D:
    """Gradient descent on KL(P || Q) with momentum and early exaggeration.

    Deterministic for a fixed config: the initial layout is drawn from a
    generator seeded with config.seed (Gaussian, scale 1e-4).
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    P = symmetrize_affinities(conditional_affinities(X, config.perplexity))

    rng = np.random.default_rng(config.seed)
    y = rng.standard_normal((n, 2)) * 1e-4
    velocity = np.zeros_like(y)

    off = ~np.eye(n, dtype=bool)
    p_off = P[off]
    p_mask = p_off > 0
    plogp = float(np.sum(p_off[p_mask] * np.log(p_off[p_mask])))

    kl_trace = np.empty(config.iterations)
    w = _student_t_weights(y)
    for t in range(config.iterations):
        P_t = P * config.early_exaggeration_factor if t < config.early_exaggeration_iters else P
        Z = w.sum()
        M = (P_t - w / Z) * w
        grad = 4.0 * (M.sum(axis=1)[:, None] * y - M @ y)
        if not np.all(np.isfinite(grad)):
            raise TsneError(f"non-finite gradient at iteration {t}")
        momentum = (
            config.momentum_initial if t < config.momentum_switch_iter else config.momentum_final
        )
        velocity = momentum * velocity - config.learning_rate * grad
        y = y + velocity
        y = y - y.mean(axis=0)

        w = _student_t_weights(y)
        q = np.maximum(w[off] / w.sum(), Q_FLOOR)
        kl_trace[t] = plogp - float(np.sum(p_off[p_mask] * np.log(q[p_mask])))

    return Embedding2D(y=y, kl_trace=kl_trace)


def export_scatter(
    embedding: Embedding2D,
    manifest: Manifest,
    assignments: np.ndarray | None = None,
    path: str | Path | None = None,
) -> str:
    """CSV `image_id,x,y[,cluster]`, one row per manifest record.

    Returns the CSV text; writes it to ``path`` when given.
    """
    n = embedding.y.shape[0]
    if len(manifest) != n:
        raise TsneError(
            f"length mismatch: {len(manifest)} manifest records vs {n} embedded points"
        )
    if assignments is not None and len(assignments) != n:
        raise TsneError(
            f"length mismatch: {len(assignments)} assignments vs {n} embedded points"
        )
    lines = ["image_id,x,y" + (",cluster" if assignments is not None else "")]
    for i, image_id in enumerate(manifest.image_ids):
        x, yv = embedding.y[i]
        row = f"{image_id},{float(x)!r},{float(yv)!r}"
        if assignments is not None:
            row += f",{int(assignments[i])}"
        lines.append(row)
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def export_kl_trace(embedding: Embedding2D, path: str | Path) -> None:
    """CSV `iter,kl`, one row per descent iteration."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "kl"])
        for t, kl in enumerate(embedding.kl_trace):
            writer.writerow([t, repr(float(kl))])
