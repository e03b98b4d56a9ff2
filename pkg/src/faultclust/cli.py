"""Command-line interface for the clustering workflow.

Exit codes: 0 success, 1 internal error, 2 usage/config error.
"""

from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

import click

from .cluster import LloydKMeans
from .dimred import load_embedding_csv, reduce_for_clustering, save_embedding_csv, save_kl_trace_csv
from .evalmetrics import contingency, save_contingency_csv
from .labels import load_labels_csv, save_labels_csv
from .pipeline import (
    ClusterOptions,
    ConfigError,
    FeatureOptions,
    MetricOptions,
    PipelineConfig,
    PipelineError,
    ReductionOptions,
    evaluate_run,
    load_assignments_csv,
    render_report_json,
    run_pipeline,
    sample_worksheet,
    save_assignments_csv,
    save_cluster_sizes_csv,
    save_worksheet_csv,
)
from .spectral import build_features, load_features_csv, save_features_csv
from .synthgen import EVENT_TYPES, generate_dataset
from .waveform_store import load_dataset, save_dataset


@click.group()
def cli() -> None:
    """Unsupervised clustering toolkit for 3-phase fault recordings."""


def _internal_error(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


def _parse_class_counts(spec: str) -> dict[str, int]:
    counts: dict[str, int] = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise click.UsageError(f"expected NAME=COUNT, got {part!r}")
        name, _, num = part.partition("=")
        name = name.strip()
        if name not in EVENT_TYPES:
            raise click.UsageError(f"unknown event type {name!r}; choose from {', '.join(EVENT_TYPES)}")
        counts[name] = int(num)
    if not counts:
        raise click.UsageError("no classes given")
    return counts


@cli.command("gen")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--classes", default=",".join(f"{t}=50" for t in EVENT_TYPES[:8]),
              show_default=True, help="Comma-separated NAME=COUNT pairs.")
@click.option("--timesteps", default=2048, show_default=True, type=int)
@click.option("--noise", "noise_std", default=0.02, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
def gen_command(out_dir: str, classes: str, timesteps: int, noise_std: float, seed: int) -> None:
    """Generate a labeled synthetic dataset (dataset.json/.f32 + labels.csv)."""
    counts = _parse_class_counts(classes)
    try:
        ds, labels = generate_dataset(counts, timesteps=timesteps, seed=seed, noise_std=noise_std)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_dataset(ds, out / "dataset.json")
        save_labels_csv(labels, out / "labels.csv")
    except Exception as exc:  # noqa: BLE001
        _internal_error(exc)
    click.echo(f"wrote {len(ds)} records to {out_dir}/dataset.json (+ labels.csv)")


@cli.command("features")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--raw", is_flag=True, help="Transform raw samples instead of [-1,1]-normalized ones.")
@click.option("--truncate", type=int, default=None, help="Use only the first N samples per channel.")
@click.option("--no-pad", is_flag=True, help="Do not zero-pad to the next power of two.")
def features_command(dataset_path: str, out_path: str, raw: bool, truncate: int | None, no_pad: bool) -> None:
    """Extract spectral features into a CSV."""
    try:
        ds = load_dataset(dataset_path)
        fm = build_features(ds, normalize_input=not raw, truncate=truncate, pad_to_pow2=not no_pad)
        save_features_csv(fm, out_path)
    except Exception as exc:  # noqa: BLE001
        _internal_error(exc)
    click.echo(f"wrote {fm.shape[0]}x{fm.shape[1]} feature matrix to {out_path}")


@cli.command("reduce")
@click.option("--features", "features_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["pca", "pca_then_tsne"]), default="pca_then_tsne",
              show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--kl-trace", "trace_path", type=click.Path(dir_okay=False), default=None)
@click.option("--variance-target", default=0.95, show_default=True, type=float)
@click.option("--pca-components", default=50, show_default=True, type=int)
@click.option("--out-dims", default=2, show_default=True, type=int)
@click.option("--perplexity", default=30.0, show_default=True, type=float)
@click.option("--iterations", default=1000, show_default=True, type=int)
@click.option("--learning-rate", default=200.0, show_default=True, type=float)
@click.option("--early-exaggeration", default=12.0, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
def reduce_command(features_path, mode, out_path, trace_path, variance_target, pca_components,
                   out_dims, perplexity, iterations, learning_rate, early_exaggeration, seed):
    """Reduce a feature CSV to clustering coordinates."""
    try:
        fm = load_features_csv(features_path)
        emb, trace = reduce_for_clustering(
            fm.features, mode, record_ids=fm.record_ids,
            variance_target=variance_target, pca_components=pca_components,
            out_dims=out_dims, perplexity=perplexity, iterations=iterations,
            learning_rate=learning_rate, early_exaggeration=early_exaggeration, seed=seed,
        )
        save_embedding_csv(emb, out_path)
        if trace is not None and trace_path:
            save_kl_trace_csv(trace, trace_path)
    except Exception as exc:  # noqa: BLE001
        _internal_error(exc)
    kl = "n/a" if emb.final_kl is None else f"{emb.final_kl:.4f}"
    click.echo(f"wrote {emb.coords.shape[0]}x{emb.coords.shape[1]} embedding ({mode}, final KL {kl})")


@cli.command("cluster")
@click.option("--embedding", "embedding_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--k", default=15, show_default=True, type=int)
@click.option("--init", type=click.Choice(["k-means++", "random"]), default="k-means++", show_default=True)
@click.option("--n-init", default=10, show_default=True, type=int)
@click.option("--max-iter", default=300, show_default=True, type=int)
@click.option("--tol", default=1e-4, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
def cluster_command(embedding_path, out_dir, k, init, n_init, max_iter, tol, seed):
    """K-Means over an embedding CSV; writes assignments, model, sizes."""
    try:
        emb = load_embedding_csv(embedding_path)
        model = LloydKMeans(n_clusters=k, init=init, n_init=n_init, max_iter=max_iter,
                            tol=tol, random_state=seed).fit(emb.coords)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_assignments_csv(emb.record_ids, model.labels_, out / "assignments.csv")
        model.save_json(out / "model.json")
        amap = {int(r): int(c) for r, c in zip(emb.record_ids, model.labels_)}
        save_cluster_sizes_csv(amap, out / "cluster_sizes.csv")
    except Exception as exc:  # noqa: BLE001
        _internal_error(exc)
    click.echo(f"k={k} inertia={model.inertia_:.6g} sizes={sorted(model.sizes_.tolist(), reverse=True)}")


@cli.command("evaluate")
@click.option("--assignments", "assignments_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--labels", "labels_path", default=None, type=click.Path(dir_okay=False))
@click.option("--embedding", "embedding_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Coordinates for silhouette computation.")
@click.option("--level", type=click.Choice(["event_type", "fault_class"]), default="event_type",
              show_default=True)
@click.option("--silhouette-space", type=click.Choice(["embedding", "features"]),
              default="embedding", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--contingency-out", default=None, type=click.Path(dir_okay=False))
def evaluate_command(assignments_path, labels_path, embedding_path, level, silhouette_space,
                     out_path, contingency_out):
    """Purity/entropy/silhouette report against an expert labels CSV."""
    if not labels_path:
        raise click.UsageError("--labels is required: evaluation needs an expert labels CSV")
    if not Path(labels_path).exists():
        raise click.UsageError(f"labels file not found: {labels_path}")
    try:
        assignments = load_assignments_csv(assignments_path)
        labels = load_labels_csv(labels_path)
        coords = coord_ids = None
        if embedding_path:
            emb = load_embedding_csv(embedding_path)
            coords, coord_ids = emb.coords, emb.record_ids
        report = evaluate_run(assignments, labels, level=level, coords=coords,
                              coord_ids=coord_ids, silhouette_space=silhouette_space)
        Path(out_path).write_text(render_report_json(report), encoding="utf-8")
        if contingency_out:
            table = contingency(assignments, labels, level=level)
            save_contingency_csv(table, contingency_out, percentages=True)
    except Exception as exc:  # noqa: BLE001
        _internal_error(exc)
    g = report.global_metrics
    sil = "n/a" if g["silhouette"] is None else f"{g['silhouette']:.3f}"
    click.echo(f"purity={g['purity']:.3f} entropy={g['entropy']:.3f} silhouette={sil}")


@cli.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--output-dir", default=None, help="Override the config's output directory.")
@click.option("--seed", default=None, type=int, help="Override the config's seed.")
@click.option("--k", default=None, type=int, help="Override the cluster count.")
@click.option("--mode", default=None, type=click.Choice(["pca", "pca_then_tsne"]),
              help="Override the reduction mode.")
def run_command(config_path, output_dir, seed, k, mode):
    """Run all stages per a JSON config file; flags override file values."""
    try:
        cfg = PipelineConfig.from_file(config_path)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    if output_dir is not None:
        cfg = replace(cfg, output_dir=output_dir)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if k is not None:
        cfg = replace(cfg, cluster=replace(cfg.cluster, k=k))
    if mode is not None:
        cfg = replace(cfg, reduction=replace(cfg.reduction, mode=mode))

    try:
        cfg.validate_paths()
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc

    try:
        summary = run_pipeline(cfg)
    except PipelineError as exc:
        _internal_error(exc)
    for stage in summary.stages:
        click.echo(f"  {stage['name']:<12} {stage['seconds']:.3f}s")
    click.echo(f"artifacts in {summary.output_dir}")
    if summary.report is not None:
        g = summary.report.global_metrics
        click.echo(f"purity={g['purity']:.3f} entropy={g['entropy']:.3f}")


@cli.command("sample")
@click.option("--assignments", "assignments_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--per-cluster", default=7, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def sample_command(assignments_path, per_cluster, seed, out_path):
    """Emit the expert-labeling worksheet (N random sample ids per cluster)."""
    try:
        assignments = load_assignments_csv(assignments_path)
        rows = sample_worksheet(assignments, per_cluster=per_cluster, seed=seed)
        save_worksheet_csv(rows, out_path)
    except Exception as exc:  # noqa: BLE001
        _internal_error(exc)
    click.echo(f"worksheet with {len(rows)} samples written to {out_path}")


@cli.command("serve")
@click.option("--run-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True, type=int)
@click.option("--worksheet-per-cluster", default=7, show_default=True, type=int)
def serve_command(run_dir, host, port, worksheet_per_cluster):
    """Serve the labeling API over a finished run directory."""
    try:
        import uvicorn

        from .label_api import create_app

        app = create_app(run_dir, worksheet_per_cluster=worksheet_per_cluster)
    except Exception as exc:  # noqa: BLE001
        _internal_error(exc)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
