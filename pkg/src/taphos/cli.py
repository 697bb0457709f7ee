"""Command-line entry points.

Every subcommand reads defaults from an optional JSON config file
(`--config`), with explicit command-line options winning over the file
and `--seed` winning over any configured seed. The config file is a
flat object whose keys match the option names, e.g.

    {"manifest": "data/manifest.csv", "k": 50, "perplexity": 30.0}
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from .embeddings import EmbeddingMatrix, load_embeddings, save_embeddings
from .evaluation import (
    apply_merge,
    compute_precision,
    load_assignments,
    load_session,
    save_assignments,
)
from .kmeans import kmeans_fit, save_cluster_model
from .manifest import load_manifest
from .pca import fit_pca, pca_transform
from .pipeline import PipelineConfig, PipelineError, run_pipeline
from .tsne import TsneConfig, export_kl_trace, export_scatter, run_tsne
from .weather import (
    augment_features,
    build_weather_block,
    load_donor_starts,
    load_weather,
)


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read config {path}: {exc}")
    if not isinstance(payload, dict):
        raise click.ClickException(f"config {path} must hold a JSON object")
    return payload


class Settings:
    """Resolved option values: CLI flag > config file > default."""

    def __init__(self, config: dict, seed: int | None):
        self.config = config
        self.seed_override = seed

    def get(self, key: str, cli_value, default=None):
        if cli_value is not None:
            return cli_value
        if key in self.config:
            return self.config[key]
        return default

    def require(self, key: str, cli_value):
        value = self.get(key, cli_value)
        if value is None:
            raise click.ClickException(
                f"missing required option --{key.replace('_', '-')} "
                f"(or {key!r} in the config file)"
            )
        return value

    def seed(self, cli_value=None) -> int:
        if self.seed_override is not None:
            return self.seed_override
        return int(self.get("seed", cli_value, 0))


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON file of option defaults.")
@click.option("--seed", type=click.IntRange(min=0), default=None,
              help="Seed for every stochastic stage; overrides the config file.")
@click.pass_context
def main(ctx, config_path, seed):
    """Cluster time-stamped field photos and review the result."""
    ctx.obj = Settings(_load_config_file(config_path), seed)


def _tsne_config(s: Settings, perplexity, iterations, learning_rate) -> TsneConfig:
    iters = int(s.get("iterations", iterations, 1000))
    # Default exaggeration window shrinks to fit short runs; an explicit
    # early_exaggeration_iters in the config is still validated strictly.
    ee_default = min(250, iters // 2)
    return TsneConfig(
        perplexity=float(s.get("perplexity", perplexity, 30.0)),
        iterations=iters,
        learning_rate=float(s.get("learning_rate", learning_rate, 200.0)),
        early_exaggeration_factor=float(s.get("early_exaggeration_factor", None, 12.0)),
        early_exaggeration_iters=int(s.get("early_exaggeration_iters", None, ee_default)),
        momentum_initial=float(s.get("momentum_initial", None, 0.5)),
        momentum_final=float(s.get("momentum_final", None, 0.8)),
        momentum_switch_iter=int(s.get("momentum_switch_iter", None, min(250, iters // 2))),
        seed=s.seed(),
    )


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@click.option("--embeddings", "embeddings_path", type=click.Path(), default=None)
@click.pass_obj
def ingest(s: Settings, manifest_path, embeddings_path):
    """Validate the manifest and its feature matrix."""
    manifest = load_manifest(s.require("manifest", manifest_path))
    emb = load_embeddings(s.require("embeddings", embeddings_path), manifest.image_ids)
    click.echo(
        f"{emb.n} images, {emb.dim}-d features, donors: {', '.join(manifest.donor_ids)}"
    )


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@click.option("--weather", "weather_path", type=click.Path(), default=None)
@click.option("--donor-starts", "donor_starts_path", type=click.Path(), default=None)
@click.option("--zone", default=None, help="Timezone bounding calendar days.")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--cumulative", is_flag=True, default=False,
              help="Sum daily averages instead of averaging them.")
@click.option("--skip-missing", is_flag=True, default=False,
              help="Drop missing weather days instead of failing.")
@click.pass_obj
def weather(s, manifest_path, weather_path, donor_starts_path, zone, out_path,
            cumulative, skip_missing):
    """Compute the per-photo exposure block and save it."""
    manifest = load_manifest(s.require("manifest", manifest_path))
    series = load_weather(s.require("weather", weather_path), zone=s.get("zone", zone))
    starts_file = s.get("donor_starts", donor_starts_path)
    starts = load_donor_starts(starts_file) if starts_file else "earliest-photo"
    block = build_weather_block(
        manifest, series, starts,
        cumulative=cumulative or bool(s.get("cumulative", None, False)),
        skip_missing=skip_missing or bool(s.get("skip_missing", None, False)),
    )
    out = Path(s.require("out", out_path))
    save_embeddings(EmbeddingMatrix(tuple(manifest.image_ids), block), out)
    click.echo(f"wrote {block.shape[0]}x{block.shape[1]} exposure block to {out}")


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@click.option("--embeddings", "embeddings_path", type=click.Path(), default=None)
@click.option("--dim", "pca_dim", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_obj
def reduce(s, manifest_path, embeddings_path, pca_dim, out_path):
    """PCA: project the raw features down (default 256 dimensions)."""
    manifest = load_manifest(s.require("manifest", manifest_path))
    emb = load_embeddings(s.require("embeddings", embeddings_path), manifest.image_ids)
    dim = int(s.get("pca_dim", pca_dim, 256))
    model = fit_pca(emb.values, dim)
    reduced = pca_transform(model, emb.values)
    out = Path(s.require("out", out_path))
    save_embeddings(EmbeddingMatrix(tuple(manifest.image_ids), reduced), out)
    top = model.explained_variance[: min(5, dim)]
    click.echo(
        f"wrote {reduced.shape[0]}x{reduced.shape[1]} to {out} "
        f"(top variances: {', '.join(f'{v:.4g}' for v in top)})"
    )


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@click.option("--reduced", "reduced_path", type=click.Path(), default=None)
@click.option("--weather-block", "weather_block_path", type=click.Path(), default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--normalize/--no-normalize", "normalize", default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_obj
def augment(s, manifest_path, reduced_path, weather_block_path, alpha, normalize, out_path):
    """Append the exposure block to the reduced features."""
    manifest = load_manifest(s.require("manifest", manifest_path))
    reduced = load_embeddings(s.require("reduced", reduced_path), manifest.image_ids)
    weather_block = load_embeddings(
        s.require("weather_block", weather_block_path), manifest.image_ids
    )
    aug = augment_features(
        reduced,
        weather_block.values,
        alpha=float(s.get("alpha", alpha, 1.0)),
        normalize=bool(s.get("normalize", normalize, True)),
    )
    out = Path(s.require("out", out_path))
    save_embeddings(EmbeddingMatrix(tuple(manifest.image_ids), aug.values), out)
    click.echo(f"wrote {aug.values.shape[0]}x{aug.width} to {out}")


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@click.option("--features", "features_path", type=click.Path(), default=None)
@click.option("--perplexity", type=float, default=None)
@click.option("--iterations", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--scatter-out", "scatter_out", type=click.Path(), default=None)
@click.option("--trace-out", "trace_out", type=click.Path(), default=None)
@click.pass_obj
def tsne(s, manifest_path, features_path, perplexity, iterations, learning_rate,
         scatter_out, trace_out):
    """Project features to 2D for eyeballing the cluster count."""
    manifest = load_manifest(s.require("manifest", manifest_path))
    features = load_embeddings(s.require("features", features_path), manifest.image_ids)
    cfg = _tsne_config(s, perplexity, iterations, learning_rate)
    embedding = run_tsne(features.values, cfg)
    out = Path(s.require("scatter_out", scatter_out))
    export_scatter(embedding, manifest, path=out)
    trace = s.get("trace_out", trace_out)
    if trace:
        export_kl_trace(embedding, trace)
    click.echo(f"wrote scatter for {features.n} points to {out} "
               f"(final KL {embedding.kl_trace[-1]:.4f})")


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@click.option("--features", "features_path", type=click.Path(), default=None)
@click.option("--k", type=int, default=None)
@click.option("--restarts", type=int, default=None)
@click.option("--assignments-out", "assignments_out", type=click.Path(), default=None)
@click.option("--model-out", "model_out", type=click.Path(), default=None)
@click.pass_obj
def cluster(s, manifest_path, features_path, k, restarts, assignments_out, model_out):
    """KMeans over the augmented features."""
    manifest = load_manifest(s.require("manifest", manifest_path))
    features = load_embeddings(s.require("features", features_path), manifest.image_ids)
    model = kmeans_fit(
        features.values,
        int(s.get("k", k, 50)),
        seed=s.seed(),
        restarts=int(s.get("restarts", restarts, 10)),
    )
    out = Path(s.require("assignments_out", assignments_out))
    save_assignments(manifest.image_ids, model.assignments, out)
    model_path = s.get("model_out", model_out)
    if model_path:
        save_cluster_model(model, model_path)
    click.echo(f"k={model.k} inertia={model.inertia:.6f} assignments -> {out}")


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@click.option("--embeddings", "embeddings_path", type=click.Path(), default=None)
@click.option("--weather", "weather_path", type=click.Path(), default=None)
@click.option("--donor-starts", "donor_starts_path", type=click.Path(), default=None)
@click.option("--zone", default=None)
@click.option("--out-dir", "out_dir", type=click.Path(), default=None)
@click.option("--dim", "pca_dim", type=int, default=None)
@click.option("--k", type=int, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--normalize/--no-normalize", "normalize", default=None)
@click.option("--restarts", type=int, default=None)
@click.option("--perplexity", type=float, default=None)
@click.option("--iterations", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.pass_obj
def run(s, manifest_path, embeddings_path, weather_path, donor_starts_path, zone,
        out_dir, pca_dim, k, alpha, normalize, restarts, perplexity, iterations,
        learning_rate):
    """Full pipeline: ingest, weather, PCA, augment, t-SNE, KMeans."""
    starts = s.get("donor_starts", donor_starts_path)
    config = PipelineConfig(
        manifest_path=Path(s.require("manifest", manifest_path)),
        embeddings_path=Path(s.require("embeddings", embeddings_path)),
        weather_path=Path(s.require("weather", weather_path)),
        out_dir=Path(s.require("out_dir", out_dir)),
        donor_starts_path=Path(starts) if starts else None,
        zone=s.get("zone", zone),
        pca_dim=int(s.get("pca_dim", pca_dim, 256)),
        k=int(s.get("k", k, 50)),
        tsne=_tsne_config(s, perplexity, iterations, learning_rate),
        alpha=float(s.get("alpha", alpha, 1.0)),
        normalize=bool(s.get("normalize", normalize, True)),
        restarts=int(s.get("restarts", restarts, 10)),
        seed=s.seed(),
    )
    try:
        artifacts = run_pipeline(config, log=click.echo)
    except PipelineError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"artifacts in {config.out_dir}")
    click.echo(f"session: {artifacts.session_path}")


@main.command()
@click.option("--assignments", "assignments_path", type=click.Path(), default=None)
@click.option("--session", "session_path", type=click.Path(), default=None)
@click.pass_obj
def evaluate(s, assignments_path, session_path):
    """Print per-cluster precision plus macro and micro summaries."""
    assignments = load_assignments(s.require("assignments", assignments_path))
    session_file = s.get("session", session_path)
    marks: list[str] = []
    merge_map: dict[int, int] = {}
    if session_file:
        session = load_session(session_file)
        marks = list(session.marks)
        merge_map = dict(session.merge_map)
    try:
        groups = assignments
        if merge_map:
            merged = apply_merge(list(assignments.values()), merge_map)
            groups = {i: int(g) for i, g in zip(assignments, merged)}
        report = compute_precision(groups, marks)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    for c, cp in report.per_cluster.items():
        click.echo(
            f"cluster {c}: total {cp.total} missed {cp.missed} "
            f"precision {cp.precision:.3f}"
        )
    click.echo(f"macro {report.macro_precision:.3f}")
    click.echo(f"micro {report.micro_precision:.3f}")


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@click.option("--assignments", "assignments_path", type=click.Path(), default=None)
@click.option("--scatter", "scatter_path", type=click.Path(), default=None)
@click.option("--session", "session_path", type=click.Path(), default=None)
@click.option("--image-root", "image_root", type=click.Path(), default=None)
@click.option("--static-dir", "static_dir", type=click.Path(), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_obj
def serve(s, manifest_path, assignments_path, scatter_path, session_path,
          image_root, static_dir, host, port):
    """Serve the review API (and the UI, if built) over HTTP."""
    import uvicorn

    from .server import build_app

    try:
        app = build_app(
            manifest_path=s.require("manifest", manifest_path),
            assignments_path=s.require("assignments", assignments_path),
            session_path=s.require("session", session_path),
            scatter_path=s.get("scatter", scatter_path),
            image_root=s.get("image_root", image_root),
            static_dir=s.get("static_dir", static_dir),
        )
    except ValueError as exc:
        raise click.ClickException(str(exc))
    uvicorn.run(
        app,
        host=str(s.get("host", host, "127.0.0.1")),
        port=int(s.get("port", port, 8600)),
        log_level="warning",
    )


if __name__ == "__main__":
    main()
