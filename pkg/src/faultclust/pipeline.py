"""Pipeline orchestration: config, staged execution, artifacts, manifest.

A run consumes a dataset (and optionally a labels CSV) and writes
features.csv, embedding.csv, assignments.csv, model.json,
cluster_sizes.csv, metrics.json (when labels are supplied), and
run_manifest.json recording the effective config, seeds, and content
hashes of the inputs. Identical config + seed + inputs produce
byte-identical artifacts; wall-clock timestamps live only in the
manifest.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from . import __version__
from .cluster import LloydKMeans, silhouette_samples
from .dimred import load_embedding_csv, reduce_for_clustering, save_embedding_csv, save_kl_trace_csv
from .evalmetrics import (
    MetricReport,
    build_metric_report,
    cluster_size_table,
    contingency,
    save_contingency_csv,
)
from .labels import LabelRecord, load_labels_csv
from .spectral import build_features, load_features_csv, save_features_csv
from .waveform_store import load_dataset


class PipelineError(RuntimeError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class ConfigError(ValueError):
    """Invalid or incomplete pipeline configuration."""


@dataclass(frozen=True)
class FeatureOptions:
    normalize_input: bool = True
    truncate: int | None = None
    pad_to_pow2: bool = True


@dataclass(frozen=True)
class ReductionOptions:
    mode: str = "pca_then_tsne"
    variance_target: float = 0.95
    pca_components: int = 50
    out_dims: int = 2
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0


@dataclass(frozen=True)
class ClusterOptions:
    k: int = 15
    init: str = "k-means++"
    n_init: int = 10
    max_iter: int = 300
    tol: float = 1e-4


@dataclass(frozen=True)
class MetricOptions:
    level: str = "event_type"
    silhouette_space: str = "embedding"  # or "features"


@dataclass(frozen=True)
class PipelineConfig:
    input: str
    output_dir: str
    labels: str | None = None
    seed: int = 0
    features: FeatureOptions = field(default_factory=FeatureOptions)
    reduction: ReductionOptions = field(default_factory=ReductionOptions)
    cluster: ClusterOptions = field(default_factory=ClusterOptions)
    metrics: MetricOptions = field(default_factory=MetricOptions)

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["schema_version"] = 1
        return payload

    @classmethod
    def from_dict(cls, payload: Mapping) -> "PipelineConfig":
        data = dict(payload)
        data.pop("schema_version", None)
        try:
            return cls(
                input=data["input"],
                output_dir=data["output_dir"],
                labels=data.get("labels"),
                seed=int(data.get("seed", 0)),
                features=FeatureOptions(**data.get("features", {})),
                reduction=ReductionOptions(**data.get("reduction", {})),
                cluster=ClusterOptions(**data.get("cluster", {})),
                metrics=MetricOptions(**data.get("metrics", {})),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"invalid pipeline config: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        cfg = cls.from_dict(payload)
        # paths in the file are relative to the file's directory
        base = path.parent
        resolved_input = str((base / cfg.input).resolve()) if not Path(cfg.input).is_absolute() else cfg.input
        resolved_out = str((base / cfg.output_dir).resolve()) if not Path(cfg.output_dir).is_absolute() else cfg.output_dir
        resolved_labels = cfg.labels
        if resolved_labels and not Path(resolved_labels).is_absolute():
            resolved_labels = str((base / resolved_labels).resolve())
        return replace(cfg, input=resolved_input, output_dir=resolved_out, labels=resolved_labels)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    def validate_paths(self) -> None:
        if not Path(self.input).exists():
            raise ConfigError(f"input dataset not found: {self.input}")
        if self.labels and not Path(self.labels).exists():
            raise ConfigError(f"labels file not found: {self.labels}")
        if self.reduction.mode not in ("pca", "pca_then_tsne"):
            raise ConfigError(f"unknown reduction mode {self.reduction.mode!r}")
        if self.metrics.silhouette_space not in ("embedding", "features"):
            raise ConfigError(f"unknown silhouette space {self.metrics.silhouette_space!r}")


@dataclass
class RunSummary:
    output_dir: Path
    artifacts: dict[str, str]
    stages: list[dict]
    report: MetricReport | None = None


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def save_assignments_csv(record_ids, assignments, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("record_id,cluster\n")
        for rid, c in zip(record_ids, assignments):
            f.write(f"{int(rid)},{int(c)}\n")


def load_assignments_csv(path) -> dict[int, int]:
    out: dict[int, int] = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            out[int(row["record_id"])] = int(row["cluster"])
    return out


def save_cluster_sizes_csv(assignments, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("cluster,count,percent\n")
        for cluster, count, percent in cluster_size_table(assignments):
            f.write(f"{cluster},{count},{percent!r}\n")


def sample_worksheet(assignments: Mapping[int, int], per_cluster: int = 7, seed: int = 0) -> list[tuple[int, int]]:
    """Random labeling worksheet: up to per_cluster sample ids per cluster.

    Sampling per cluster uses a seed derived from (seed, cluster), so the
    worksheet is reproducible and independent of cluster visit order.
    """
    by_cluster: dict[int, list[int]] = {}
    for sid, c in assignments.items():
        by_cluster.setdefault(int(c), []).append(int(sid))
    rows: list[tuple[int, int]] = []
    for cluster in sorted(by_cluster):
        ids = sorted(by_cluster[cluster])
        rng = np.random.default_rng([seed, cluster])
        take = min(per_cluster, len(ids))
        chosen = rng.choice(len(ids), size=take, replace=False)
        for idx in sorted(chosen):
            rows.append((cluster, ids[idx]))
    return rows


def save_worksheet_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("cluster,sample_id\n")
        for cluster, sid in rows:
            f.write(f"{cluster},{sid}\n")


def load_worksheet_csv(path) -> list[tuple[int, int]]:
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            out.append((int(row["cluster"]), int(row["sample_id"])))
    return out


def evaluate_run(
    assignments: Mapping[int, int],
    labels: list[LabelRecord],
    *,
    level: str = "event_type",
    coords: np.ndarray | None = None,
    coord_ids: np.ndarray | None = None,
    silhouette_space: str = "embedding",
) -> MetricReport:
    """Metric report over the labeled subset, optionally with silhouettes.

    Silhouettes are computed over the labeled samples only, in the space
    given by ``coords`` (the clustering embedding or the raw features).
    """
    table = contingency(assignments, labels, level=level)

    silhouette_by_cluster = None
    if coords is not None and coord_ids is not None:
        pos = {int(rid): i for i, rid in enumerate(coord_ids)}
        labeled_ids = [rec.sample_id for rec in labels]
        if all(sid in pos for sid in labeled_ids):
            sub = coords[[pos[sid] for sid in labeled_ids]]
            sub_clusters = np.array([assignments[sid] for sid in labeled_ids])
            if len(np.unique(sub_clusters)) >= 2 and len(labeled_ids) >= 3:
                s = silhouette_samples(sub, sub_clusters)
                silhouette_by_cluster = {
                    int(c): float(s[sub_clusters == c].mean()) for c in np.unique(sub_clusters)
                }

    return build_metric_report(
        table,
        silhouette_by_cluster=silhouette_by_cluster,
        silhouette_space=silhouette_space if silhouette_by_cluster is not None else None,
    )


def render_report_json(report: MetricReport) -> str:
    """Canonical serialization shared by the CLI and the HTTP API."""
    return report.to_json()


def run_pipeline(cfg: PipelineConfig) -> RunSummary:
    """Execute all stages; on failure, remove partial outputs and raise
    :class:`PipelineError` naming the stage."""
    cfg.validate_paths()
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    written: list[Path] = []
    stages: list[dict] = []
    artifacts: dict[str, str] = {}

    def emit(name: str, path: Path) -> Path:
        written.append(path)
        artifacts[name] = path.name
        return path

    def run_stage(name: str, fn):
        start = time.monotonic()
        try:
            result = fn()
        except Exception as exc:
            for p in written:
                p.unlink(missing_ok=True)
            raise PipelineError(name, exc) from exc
        stages.append({"name": name, "seconds": round(time.monotonic() - start, 3)})
        return result

    ds = run_stage("load", lambda: load_dataset(cfg.input))
    labels = run_stage("load_labels", lambda: load_labels_csv(cfg.labels)) if cfg.labels else None

    def stage_features():
        fm = build_features(
            ds,
            normalize_input=cfg.features.normalize_input,
            truncate=cfg.features.truncate,
            pad_to_pow2=cfg.features.pad_to_pow2,
        )
        save_features_csv(fm, emit("features", out_dir / "features.csv"))
        return fm

    fm = run_stage("features", stage_features)

    def stage_reduce():
        emb, trace = reduce_for_clustering(
            fm.features,
            cfg.reduction.mode,
            record_ids=fm.record_ids,
            variance_target=cfg.reduction.variance_target,
            pca_components=cfg.reduction.pca_components,
            out_dims=cfg.reduction.out_dims,
            perplexity=cfg.reduction.perplexity,
            iterations=cfg.reduction.iterations,
            learning_rate=cfg.reduction.learning_rate,
            early_exaggeration=cfg.reduction.early_exaggeration,
            seed=cfg.seed,
        )
        save_embedding_csv(emb, emit("embedding", out_dir / "embedding.csv"))
        if trace is not None:
            save_kl_trace_csv(trace, emit("kl_trace", out_dir / "kl_trace.csv"))
        return emb

    emb = run_stage("reduce", stage_reduce)

    def stage_cluster():
        model = LloydKMeans(
            n_clusters=cfg.cluster.k,
            init=cfg.cluster.init,
            n_init=cfg.cluster.n_init,
            max_iter=cfg.cluster.max_iter,
            tol=cfg.cluster.tol,
            random_state=cfg.seed,
        ).fit(emb.coords)
        save_assignments_csv(emb.record_ids, model.labels_, emit("assignments", out_dir / "assignments.csv"))
        model.save_json(emit("model", out_dir / "model.json"))
        amap = {int(rid): int(c) for rid, c in zip(emb.record_ids, model.labels_)}
        save_cluster_sizes_csv(amap, emit("cluster_sizes", out_dir / "cluster_sizes.csv"))
        return model, amap

    model, amap = run_stage("cluster", stage_cluster)

    report = None
    if labels is not None:

        def stage_evaluate():
            if cfg.metrics.silhouette_space == "features":
                coords, coord_ids = fm.features, fm.record_ids
            else:
                coords, coord_ids = emb.coords, emb.record_ids
            rep = evaluate_run(
                amap,
                labels,
                level=cfg.metrics.level,
                coords=coords,
                coord_ids=coord_ids,
                silhouette_space=cfg.metrics.silhouette_space,
            )
            path = emit("metrics", out_dir / "metrics.json")
            path.write_text(render_report_json(rep), encoding="utf-8")
            table = contingency(amap, labels, level=cfg.metrics.level)
            save_contingency_csv(table, emit("contingency", out_dir / "contingency.csv"),
                                 percentages=True)
            return rep

        report = run_stage("evaluate", stage_evaluate)

    def stage_manifest():
        input_path = Path(cfg.input)
        manifest = {
            "schema_version": 1,
            "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "config": cfg.to_dict(),
            "seed": cfg.seed,
            "input_hashes": {
                "dataset_manifest": sha256_file(input_path),
                "dataset_blob": sha256_file(input_path.with_suffix(".f32")),
                "labels": sha256_file(cfg.labels) if cfg.labels else None,
            },
            "artifacts": artifacts,
            "stages": stages,
            "versions": {"faultclust": __version__},
        }
        path = out_dir / "run_manifest.json"
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")
        return path

    run_stage("manifest", stage_manifest)

    return RunSummary(output_dir=out_dir, artifacts=artifacts, stages=stages, report=report)


def load_run_artifacts(run_dir: str | Path) -> dict:
    """Load everything `serve` and `evaluate` need from a finished run."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / "run_manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no run_manifest.json in {run_dir}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    cfg = PipelineConfig.from_dict(manifest["config"])

    out: dict = {"manifest": manifest, "config": cfg, "run_dir": run_dir}
    out["dataset"] = load_dataset(cfg.input)
    model_path = run_dir / "model.json"
    out["model"] = LloydKMeans.load_json(model_path) if model_path.exists() else None
    assign_path = run_dir / "assignments.csv"
    out["assignments"] = load_assignments_csv(assign_path) if assign_path.exists() else None
    emb_path = run_dir / "embedding.csv"
    out["embedding"] = load_embedding_csv(emb_path, space=cfg.reduction.mode) if emb_path.exists() else None
    features_path = run_dir / "features.csv"
    out["features"] = load_features_csv(features_path) if features_path.exists() else None
    return out
