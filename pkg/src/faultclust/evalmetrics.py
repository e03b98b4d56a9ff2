"""Cluster-quality evaluation against expert labels.

Contingency tables, purity, per-cluster entropy, silhouette aggregation,
and raw/size-weighted summary statistics. Metrics are computed over the
labeled subset only. Conventions: raw std is the population std over
clusters; weighted std is the weighted second central moment with weights
N_k / sum(N_k). Both are stated in the report output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .labels import LabelRecord

METRIC_NAMES = ("purity", "entropy", "silhouette")


@dataclass(frozen=True)
class ContingencyTable:
    """Cluster x label-class counts over the labeled subset.

    Rows cover only clusters containing at least one labeled sample.
    """

    cluster_ids: tuple[int, ...]
    label_names: tuple[str, ...]
    counts: np.ndarray  # (k, L) int
    level: str = "event_type"

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def n_samples(self) -> int:
        return int(self.counts.sum())

    def row_percentages(self) -> np.ndarray:
        """Each row normalized to sum to 100 (the heatmap view)."""
        totals = self.row_totals.astype(float)
        return 100.0 * self.counts / totals[:, None]


def _as_assignment_map(assignments) -> dict[int, int]:
    if isinstance(assignments, Mapping):
        return {int(k): int(v) for k, v in assignments.items()}
    arr = np.asarray(assignments, dtype=int)
    return {i: int(c) for i, c in enumerate(arr)}


def contingency(assignments, labels: Sequence[LabelRecord], level: str = "event_type") -> ContingencyTable:
    """Tally labeled samples into a cluster x label matrix.

    ``assignments`` maps sample_id -> cluster (a plain sequence is treated
    as positional ids). ``level`` selects the label granularity:
    "event_type" uses fault_type, "fault_class" the broad class.
    """
    if level not in ("event_type", "fault_class"):
        raise ValueError(f"unknown level {level!r}")
    if not labels:
        raise ValueError("no labels given")
    amap = _as_assignment_map(assignments)

    def label_of(rec: LabelRecord) -> str:
        return rec.fault_type if level == "event_type" else rec.fault_class

    missing = [rec.sample_id for rec in labels if rec.sample_id not in amap]
    if missing:
        raise KeyError(f"labels reference sample_ids without assignments: {sorted(missing)[:10]}")

    cluster_ids = sorted({amap[rec.sample_id] for rec in labels})
    label_names = sorted({label_of(rec) for rec in labels})
    cindex = {c: i for i, c in enumerate(cluster_ids)}
    lindex = {name: j for j, name in enumerate(label_names)}

    counts = np.zeros((len(cluster_ids), len(label_names)), dtype=int)
    for rec in labels:
        counts[cindex[amap[rec.sample_id]], lindex[label_of(rec)]] += 1

    return ContingencyTable(
        cluster_ids=tuple(cluster_ids), label_names=tuple(label_names), counts=counts, level=level
    )


def purity(t: ContingencyTable) -> float:
    """Fraction of samples matching their cluster's majority label."""
    if t.n_samples < 1:
        raise ValueError("empty contingency table")
    return float(t.counts.max(axis=1).sum() / t.n_samples)


def cluster_purity(t: ContingencyTable, cluster: int) -> float:
    row = t.counts[t.cluster_ids.index(cluster)]
    total = row.sum()
    if total == 0:
        raise ValueError(f"cluster {cluster} has no labeled samples")
    return float(row.max() / total)


def cluster_entropy(t: ContingencyTable, cluster: int) -> float:
    """Shannon entropy (bits) of the label distribution inside one cluster."""
    row = t.counts[t.cluster_ids.index(cluster)]
    total = row.sum()
    if total == 0:
        raise ValueError(f"cluster {cluster} has no labeled samples")
    p = row[row > 0] / total
    return float(-(p * np.log2(p)).sum())


def _raw_stats(values: np.ndarray) -> dict[str, float]:
    return {"mean": float(values.mean()), "std": float(values.std())}


def _weighted_stats(values: np.ndarray, sizes: np.ndarray) -> dict[str, float]:
    w = sizes / sizes.sum()
    mean = float((w * values).sum())
    return {"mean": mean, "std": float(np.sqrt((w * (values - mean) ** 2).sum()))}


@dataclass(frozen=True)
class MetricReport:
    """Per-cluster metrics plus raw and size-weighted aggregate rows."""

    per_cluster: tuple[dict, ...]
    raw: dict[str, dict[str, float]]
    weighted: dict[str, dict[str, float]]
    global_metrics: dict[str, float | None]
    level: str = "event_type"
    silhouette_space: str | None = None
    n_labeled: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "level": self.level,
            "n_labeled": self.n_labeled,
            "silhouette_space": self.silhouette_space,
            "per_cluster": list(self.per_cluster),
            "raw": self.raw,
            "weighted": self.weighted,
            "global": self.global_metrics,
            "conventions": {
                "raw_std": "population std over clusters",
                "weighted_std": "weighted second central moment, weights N_k / sum(N_k)",
                "global_purity": "sum of per-cluster majority counts / N",
                "global_entropy": "size-weighted mean of per-cluster entropies",
                "global_silhouette": "mean silhouette over labeled samples",
            },
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_markdown(self) -> str:
        lines = [
            "| Cluster | Count | Purity | Entropy | Silhouette |",
            "|---|---|---|---|---|",
        ]
        for row in self.per_cluster:
            sil = "n/a" if row.get("silhouette") is None else f"{row['silhouette']:.3f}"
            lines.append(
                f"| {row['cluster']} | {row['count']} | {row['purity']:.3f} "
                f"| {row['entropy']:.3f} | {sil} |"
            )
        lines.append("")
        lines.append("| Statistic | Purity | Entropy | Silhouette |")
        lines.append("|---|---|---|---|")
        for name, stats in (("Raw", self.raw), ("Weighted", self.weighted)):
            cells = []
            for m in METRIC_NAMES:
                if m in stats:
                    cells.append(f"{stats[m]['mean']:.3f} ± {stats[m]['std']:.3f}")
                else:
                    cells.append("n/a")
            lines.append(f"| {name} | " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"


def aggregate_report(
    per_cluster_metrics: Sequence[Mapping],
    sizes: Sequence[int],
    *,
    level: str = "event_type",
    silhouette_space: str | None = None,
) -> MetricReport:
    """Aggregate per-cluster metric rows into raw and weighted statistics.

    Each row must carry "cluster", "purity" and "entropy"; "silhouette" and
    "count" are optional. ``sizes`` are the cluster sizes N_k used as
    weights, aligned with the rows.
    """
    if len(per_cluster_metrics) != len(sizes):
        raise ValueError(
            f"{len(per_cluster_metrics)} metric rows but {len(sizes)} sizes"
        )
    if not per_cluster_metrics:
        raise ValueError("no per-cluster metrics")
    sizes_arr = np.asarray(sizes, dtype=float)

    raw: dict[str, dict[str, float]] = {}
    weighted: dict[str, dict[str, float]] = {}
    for metric in METRIC_NAMES:
        if any(row.get(metric) is None for row in per_cluster_metrics):
            continue
        if any(metric not in row for row in per_cluster_metrics):
            continue
        values = np.array([float(row[metric]) for row in per_cluster_metrics])
        raw[metric] = _raw_stats(values)
        weighted[metric] = _weighted_stats(values, sizes_arr)

    global_metrics: dict[str, float | None] = {
        "purity": weighted["purity"]["mean"] if "purity" in weighted else None,
        "entropy": weighted["entropy"]["mean"] if "entropy" in weighted else None,
        "silhouette": weighted["silhouette"]["mean"] if "silhouette" in weighted else None,
    }

    rows = []
    for row, size in zip(per_cluster_metrics, sizes):
        out = {"cluster": int(row["cluster"]), "count": int(row.get("count", size))}
        for metric in METRIC_NAMES:
            if metric in row and row[metric] is not None:
                out[metric] = float(row[metric])
        rows.append(out)

    return MetricReport(
        per_cluster=tuple(rows),
        raw=raw,
        weighted=weighted,
        global_metrics=global_metrics,
        level=level,
        silhouette_space=silhouette_space,
        n_labeled=int(sizes_arr.sum()),
    )


def build_metric_report(
    table: ContingencyTable,
    *,
    silhouette_by_cluster: Mapping[int, float] | None = None,
    silhouette_space: str | None = None,
) -> MetricReport:
    """Assemble the full report from a contingency table.

    Cluster sizes are the labeled counts per cluster; metrics only ever
    see the labeled subset.
    """
    rows = []
    for cluster in table.cluster_ids:
        row = {
            "cluster": cluster,
            "count": int(table.row_totals[table.cluster_ids.index(cluster)]),
            "purity": cluster_purity(table, cluster),
            "entropy": cluster_entropy(table, cluster),
        }
        if silhouette_by_cluster is not None:
            row["silhouette"] = silhouette_by_cluster.get(cluster)
        rows.append(row)
    report = aggregate_report(
        rows,
        [row["count"] for row in rows],
        level=table.level,
        silhouette_space=silhouette_space,
    )
    # exact global purity (equals the weighted mean analytically; stated directly)
    report.global_metrics["purity"] = purity(table)
    return report


def cluster_size_table(assignments) -> list[tuple[int, int, float]]:
    """(cluster, count, percent) sorted by count descending."""
    amap = _as_assignment_map(assignments)
    if not amap:
        return []
    values = np.array(list(amap.values()))
    clusters, counts = np.unique(values, return_counts=True)
    total = counts.sum()
    rows = sorted(zip(clusters, counts), key=lambda t: (-t[1], t[0]))
    return [(int(c), int(n), float(100.0 * n / total)) for c, n in rows]


def size_dispersion(sizes) -> dict[str, float]:
    """Population std of cluster sizes, absolute and as percent of the total."""
    arr = np.asarray(list(sizes), dtype=float)
    if arr.size == 0:
        raise ValueError("sizes is empty")
    std = float(arr.std())
    return {"std": std, "std_percent_of_total": float(100.0 * std / arr.sum())}


def save_contingency_csv(t: ContingencyTable, path, *, percentages: bool = False) -> None:
    data = t.row_percentages() if percentages else t.counts
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("cluster," + ",".join(t.label_names) + "\n")
        for cid, row in zip(t.cluster_ids, data):
            cells = (repr(float(v)) if percentages else str(int(v)) for v in row)
            f.write(f"{cid}," + ",".join(cells) + "\n")
