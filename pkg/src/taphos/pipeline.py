"""End-to-end orchestration: ingest -> weather -> PCA -> augment ->
t-SNE -> KMeans, persisting every intermediate under one output
directory.

A run is reproducible: for a fixed config and seed the artifact bytes
are identical, including the fresh review session (its id derives from
the seed and its timestamps from the newest photo in the manifest, not
from the wall clock). Stage failures surface as PipelineError with the
failing stage's name prefixed, e.g. "weather-add: ...".
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

from .embeddings import EmbeddingMatrix, load_embeddings, save_embeddings
from .evaluation import new_session, save_assignments, save_session
from .kmeans import kmeans_fit, save_cluster_model
from .manifest import load_manifest
from .pca import fit_pca, pca_transform
from .tsne import TsneConfig, export_kl_trace, export_scatter, run_tsne
from .weather import augment_features, build_weather_block, load_donor_starts, load_weather


class PipelineError(RuntimeError):
    """A stage failure, message prefixed with the stage name."""


@dataclass(frozen=True)
class PipelineConfig:
    """Inputs, outputs, and knobs for one full run. Defaults follow the
    reference workflow: 2048 -> 256 -> 259 features, k = 50."""

    manifest_path: Path
    embeddings_path: Path
    weather_path: Path
    out_dir: Path
    donor_starts_path: Path | None = None
    zone: str | None = None
    pca_dim: int = 256
    k: int = 50
    tsne: TsneConfig = field(default_factory=TsneConfig)
    alpha: float = 1.0
    normalize: bool = True
    cumulative: bool = False
    skip_missing: bool = False
    restarts: int = 10
    seed: int = 0


@dataclass(frozen=True)
class RunArtifacts:
    """Where a successful run left its outputs."""

    reduced_path: Path
    augmented_path: Path
    assignments_path: Path
    scatter_path: Path
    model_path: Path
    session_path: Path


@contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(f"{name}: {exc}") from exc


def run_pipeline(config: PipelineConfig, log=None) -> RunArtifacts:
    """Execute the whole workflow and persist every intermediate.

    ``log``, when given, receives one human-readable summary line per
    stage plus the final totals.
    """
    say = log or (lambda _msg: None)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with _stage("ingest"):
        manifest = load_manifest(config.manifest_path)
        emb = load_embeddings(config.embeddings_path, manifest.image_ids)
    say(f"ingest: {emb.n} images, {emb.dim}-d features, {len(manifest.donor_ids)} donor(s)")

    with _stage("weather-add"):
        series = load_weather(config.weather_path, zone=config.zone)
        if config.donor_starts_path is not None:
            starts = load_donor_starts(config.donor_starts_path)
        else:
            starts = "earliest-photo"
        weather = build_weather_block(
            manifest, series, starts,
            cumulative=config.cumulative, skip_missing=config.skip_missing,
        )
        weather_path = out / "weather.bin"
        save_embeddings(
            EmbeddingMatrix(image_ids=tuple(manifest.image_ids), values=weather),
            weather_path,
        )
    say(f"weather-add: {weather.shape[0]}x{weather.shape[1]} exposure block")

    with _stage("pca"):
        model = fit_pca(emb.values, config.pca_dim)
        reduced_values = pca_transform(model, emb.values)
        reduced = EmbeddingMatrix(
            image_ids=tuple(manifest.image_ids), values=reduced_values
        )
        reduced_path = out / "reduced.bin"
        save_embeddings(reduced, reduced_path)
    say(f"pca: {emb.dim} -> {config.pca_dim} dimensions")

    with _stage("augment"):
        augmented = augment_features(
            reduced, weather, alpha=config.alpha, normalize=config.normalize
        )
        augmented_matrix = EmbeddingMatrix(
            image_ids=tuple(manifest.image_ids), values=augmented.values
        )
        augmented_path = out / "augmented.bin"
        save_embeddings(augmented_matrix, augmented_path)
    say(f"augment: width {augmented.width} (alpha {config.alpha})")

    with _stage("tsne"):
        tsne_cfg = replace(config.tsne, seed=config.seed)
        embedding = run_tsne(augmented_matrix.values, tsne_cfg)
        export_kl_trace(embedding, out / "kl_trace.csv")
    say(f"tsne: final KL {embedding.kl_trace[-1]:.4f}")

    with _stage("kmeans"):
        cluster_model = kmeans_fit(
            augmented_matrix.values, config.k,
            seed=config.seed, restarts=config.restarts,
        )
        model_path = out / "kmeans_model.bin"
        save_cluster_model(cluster_model, model_path)
        assignments_path = out / "assignments.csv"
        save_assignments(manifest.image_ids, cluster_model.assignments, assignments_path)
        scatter_path = out / "scatter.csv"
        export_scatter(
            embedding, manifest, assignments=cluster_model.assignments, path=scatter_path
        )
        session_path = out / "session.json"
        newest = max(r.taken_at for r in manifest.records)
        # Ref is relative to the session file so the output directory
        # can be moved (and reruns into different directories stay
        # byte-identical).
        session = new_session(
            assignments_path.name,
            session_id=f"run-{config.seed}",
            now=newest,
        )
        save_session(session, session_path)
    say(
        f"kmeans: N={emb.n} dims {emb.dim}->{config.pca_dim}->{augmented.width} "
        f"k={config.k} inertia={cluster_model.inertia:.6f}"
    )

    return RunArtifacts(
        reduced_path=reduced_path,
        augmented_path=augmented_path,
        assignments_path=assignments_path,
        scatter_path=scatter_path,
        model_path=model_path,
        session_path=session_path,
    )
