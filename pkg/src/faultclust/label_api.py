"""HTTP API backing the expert-labeling UI.

Serves min/max-decimated waveform windows with decomposition overlays and
zero-sequence traces, the cluster browser data, the labeling worksheet,
an append-only label log, and on-demand metric recomputation. State is a
finished pipeline run directory; labels append to labels.jsonl inside it.

Decimation is min/max per bucket rather than subsampling so single-sample
transients stay visible at any zoom level; the buckets partition the
requested range, so the global per-channel extrema are preserved exactly.
"""

from __future__ import annotations

import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .evalmetrics import cluster_size_table
from .labels import LabelLog, LabelRecord, VocabularyError, VOCABULARY
from .pipeline import evaluate_run, load_run_artifacts, render_report_json, sample_worksheet
from .preprocess import decompose, detect_anomalies
from .waveform_store import CHANNEL_NAMES

MIN_MAX_POINTS = 100
OVERLAY_NAMES = ("trend", "residual", "zero", "anomaly")


class LabelIn(BaseModel):
    sample_id: int
    fault_class: str
    fault_type: str
    phase: str
    comment: str = ""


def _bucket_edges(start: int, end: int, max_points: int) -> np.ndarray:
    n_buckets = min(max_points, end - start)
    return np.linspace(start, end, n_buckets + 1).astype(int)


def _decimate_minmax(values: np.ndarray, edges: np.ndarray) -> dict:
    mins, maxs = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        chunk = values[lo:hi]
        mins.append(float(chunk.min()))
        maxs.append(float(chunk.max()))
    return {"min": mins, "max": maxs}


def _decimate_bool(mask: np.ndarray, edges: np.ndarray) -> list[bool]:
    return [bool(mask[lo:hi].any()) for lo, hi in zip(edges[:-1], edges[1:])]


class RunState:
    """Artifacts and caches for one served run directory."""

    def __init__(self, run_dir: str | Path, worksheet_per_cluster: int = 7):
        art = load_run_artifacts(run_dir)
        self.run_dir = Path(run_dir)
        self.config = art["config"]
        self.dataset = art["dataset"]
        self.model = art["model"]
        self.assignments = art["assignments"]
        self.embedding = art["embedding"]
        self.features = art["features"]
        self.label_log = LabelLog(self.run_dir / "labels.jsonl")
        self.write_lock = threading.Lock()
        self._decomp_cache: dict[int, list] = {}

        self.worksheet = None
        if self.assignments is not None:
            self.worksheet = sample_worksheet(
                self.assignments, per_cluster=worksheet_per_cluster, seed=self.config.seed
            )

    def record(self, sample_id: int):
        try:
            return self.dataset.record_by_id(sample_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown sample id {sample_id}")

    def decompositions(self, sample_id: int) -> list:
        """Per-channel decompositions with anomaly masks, cached per sample."""
        if sample_id not in self._decomp_cache:
            record = self.record(sample_id)
            period = self.dataset.meta.period
            decomps = []
            for channel in record.samples:
                d = decompose(channel, period)
                detect_anomalies(d)
                decomps.append(d)
            self._decomp_cache[sample_id] = decomps
        return self._decomp_cache[sample_id]


def create_app(run_dir: str | Path, worksheet_per_cluster: int = 7) -> FastAPI:
    state = RunState(run_dir, worksheet_per_cluster=worksheet_per_cluster)
    app = FastAPI(title="faultclust labeling API")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.run = state

    def require_model():
        if state.model is None or state.assignments is None:
            raise HTTPException(status_code=409, detail="no fitted model in this run directory")

    @app.get("/samples/{sample_id}/window")
    def get_window(
        sample_id: int,
        start: int = 0,
        end: int | None = None,
        max_points: int = Query(default=1000, ge=MIN_MAX_POINTS),
        overlays: str = "",
    ):
        record = state.record(sample_id)
        timesteps = state.dataset.meta.timesteps
        if end is None:
            end = timesteps
        if not (0 <= start < end <= timesteps):
            raise HTTPException(status_code=400, detail=f"invalid range [{start}, {end})")

        requested = [o for o in overlays.split(",") if o]
        unknown = set(requested) - set(OVERLAY_NAMES)
        if unknown:
            raise HTTPException(status_code=400, detail=f"unknown overlays: {sorted(unknown)}")

        window = record.samples[:, start:end]
        length = end - start
        decimated = max_points < length

        payload: dict = {
            "sample_id": sample_id,
            "start": start,
            "end": end,
            "decimated": decimated,
            "sampling_rate_hz": state.dataset.meta.sampling_rate_hz,
        }

        zero_seq_v = window[:3].sum(axis=0) / 3.0
        zero_seq_i = window[3:].sum(axis=0) / 3.0

        if decimated:
            edges = _bucket_edges(start, end, max_points)
            rel = edges - start
            payload["bucket_starts"] = [int(e) for e in edges[:-1]]
            payload["bucket_ends"] = [int(e) for e in edges[1:]]
            payload["channels"] = {
                name: _decimate_minmax(window[i], rel) for i, name in enumerate(CHANNEL_NAMES)
            }
            payload["zero_sequence"] = {
                "voltage": _decimate_minmax(zero_seq_v, rel),
                "current": _decimate_minmax(zero_seq_i, rel),
            }
        else:
            payload["indices"] = list(range(start, end))
            payload["channels"] = {
                name: {"values": [float(v) for v in window[i]]}
                for i, name in enumerate(CHANNEL_NAMES)
            }
            payload["zero_sequence"] = {
                "voltage": {"values": [float(v) for v in zero_seq_v]},
                "current": {"values": [float(v) for v in zero_seq_i]},
            }

        if requested:
            decomps = state.decompositions(sample_id)
            out_overlays: dict = {}
            for name in requested:
                per_channel = {}
                for ci, ch_name in enumerate(CHANNEL_NAMES):
                    d = decomps[ci]
                    if name == "trend":
                        series = d.trend[start:end]
                    elif name == "residual":
                        series = d.residual[start:end]
                    elif name == "zero":
                        series = d.zero_indicator[start:end]
                    else:
                        series = d.anomaly_mask[start:end]
                    if name in ("zero", "anomaly"):
                        if decimated:
                            per_channel[ch_name] = _decimate_bool(series, rel)
                        else:
                            per_channel[ch_name] = [bool(v) for v in series]
                    else:
                        if decimated:
                            per_channel[ch_name] = _decimate_minmax(series, rel)
                        else:
                            per_channel[ch_name] = {"values": [float(v) for v in series]}
                out_overlays[name] = per_channel
            payload["overlays"] = out_overlays

        return payload

    @app.get("/clusters")
    def get_clusters():
        require_model()
        labeled = {e["sample_id"] for e in state.label_log.current_view().values()}
        sampled: dict[int, list[int]] = {}
        for cluster, sid in state.worksheet:
            sampled.setdefault(cluster, []).append(sid)
        rows = []
        for cluster, count, percent in cluster_size_table(state.assignments):
            ids = sampled.get(cluster, [])
            rows.append({
                "cluster": cluster,
                "count": count,
                "percent": percent,
                "sampled_ids": ids,
                "labeled": sum(1 for sid in ids if sid in labeled),
            })
        return {"k": state.model.n_clusters, "clusters": rows}

    @app.get("/worksheet")
    def get_worksheet():
        require_model()
        labeled = {e["sample_id"] for e in state.label_log.current_view().values()}
        items = [
            {"cluster": cluster, "sample_id": sid, "labeled": sid in labeled}
            for cluster, sid in state.worksheet
        ]
        return {"items": items, "pending": sum(1 for it in items if not it["labeled"])}

    @app.get("/labels")
    def get_labels():
        view = state.label_log.current_view()
        return {"labels": [view[k] for k in sorted(view)]}

    @app.get("/vocabulary")
    def get_vocabulary():
        return VOCABULARY

    @app.post("/labels", status_code=201)
    def post_label(label: LabelIn):
        ids = {r.id for r in state.dataset.records}
        if label.sample_id not in ids:
            raise HTTPException(status_code=404, detail=f"unknown sample id {label.sample_id}")
        try:
            record = LabelRecord(
                sample_id=label.sample_id,
                fault_class=label.fault_class,
                fault_type=label.fault_type,
                phase=label.phase,
                comment=label.comment,
            )
        except VocabularyError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        with state.write_lock:
            entry = state.label_log.append(record)
        return entry

    @app.post("/metrics/recompute")
    def recompute_metrics():
        require_model()
        labels = state.label_log.current_labels()
        if not labels:
            raise HTTPException(status_code=409, detail="no labels recorded yet")
        if state.config.metrics.silhouette_space == "features" and state.features is not None:
            coords, coord_ids = state.features.features, state.features.record_ids
        elif state.embedding is not None:
            coords, coord_ids = state.embedding.coords, state.embedding.record_ids
        else:
            coords = coord_ids = None
        report = evaluate_run(
            state.assignments,
            labels,
            level=state.config.metrics.level,
            coords=coords,
            coord_ids=coord_ids,
            silhouette_space=state.config.metrics.silhouette_space,
        )
        return Response(content=render_report_json(report), media_type="application/json")

    return app
