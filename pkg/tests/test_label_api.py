import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from faultclust.label_api import create_app
from faultclust.labels import save_labels_csv
from faultclust.pipeline import (
    ClusterOptions,
    PipelineConfig,
    ReductionOptions,
    run_pipeline,
    sample_worksheet,
)
from faultclust.synthgen import FaultSpec, generate, generate_dataset
from faultclust.waveform_store import Dataset, DatasetMeta, WaveformRecord, save_dataset


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("api")
    classes = {"Normal": 6, "SC-1P-A": 6, "OpenCircuit": 6, "SwitchOff": 6}
    # noiseless so the zero-run indicator can fire on the open-circuit gap
    ds, labels = generate_dataset(classes, timesteps=512, seed=21, noise_std=0.0)
    save_dataset(ds, root / "dataset.json")
    save_labels_csv(labels, root / "labels.csv")
    cfg = PipelineConfig(
        input=str(root / "dataset.json"),
        labels=str(root / "labels.csv"),
        output_dir=str(root / "run"),
        seed=5,
        reduction=ReductionOptions(mode="pca", variance_target=0.95),
        cluster=ClusterOptions(k=4, n_init=5),
    )
    run_pipeline(cfg)
    return root / "run"


@pytest.fixture()
def client(run_dir):
    app = create_app(run_dir)
    return TestClient(app)


@pytest.fixture()
def fresh_client(run_dir, tmp_path):
    """Client with an isolated (empty) label log."""
    app = create_app(run_dir)
    state = app.state.run
    from faultclust.labels import LabelLog

    state.label_log = LabelLog(tmp_path / "labels.jsonl")
    return TestClient(app)


def labeled_record_ids(client):
    return [e["sample_id"] for e in client.get("/labels").json()["labels"]]


class TestWindow:
    def test_decimated_buckets_match_brute_force(self, client):
        r = client.get("/samples/0/window", params={"start": 0, "end": 512, "max_points": 100})
        assert r.status_code == 200
        payload = r.json()
        assert payload["decimated"] is True
        starts, ends = payload["bucket_starts"], payload["bucket_ends"]
        assert len(starts) <= 100

        state = client.app.state.run
        record = state.dataset.record_by_id(0)
        for name, idx in [("V1", 0), ("I2", 4)]:
            series = payload["channels"][name]
            for b, (lo, hi) in enumerate(zip(starts, ends)):
                chunk = record.samples[idx, lo:hi]
                assert series["min"][b] == pytest.approx(chunk.min())
                assert series["max"][b] == pytest.approx(chunk.max())

    def test_global_extrema_preserved(self, client):
        r = client.get("/samples/1/window", params={"max_points": 100})
        payload = r.json()
        state = client.app.state.run
        record = state.dataset.record_by_id(1)
        for idx, name in enumerate(["V1", "V2", "V3", "I1", "I2", "I3"]):
            assert min(payload["channels"][name]["min"]) == pytest.approx(record.samples[idx].min())
            assert max(payload["channels"][name]["max"]) == pytest.approx(record.samples[idx].max())

    def test_raw_when_max_points_covers_range(self, client):
        r = client.get("/samples/0/window", params={"start": 0, "end": 512, "max_points": 512})
        payload = r.json()
        assert payload["decimated"] is False
        state = client.app.state.run
        record = state.dataset.record_by_id(0)
        assert payload["channels"]["V1"]["values"] == [float(v) for v in record.samples[0]]

    def test_zero_sequence_present(self, client):
        r = client.get("/samples/0/window", params={"max_points": 512})
        payload = r.json()
        state = client.app.state.run
        record = state.dataset.record_by_id(0)
        expected_v = record.samples[:3].sum(axis=0) / 3.0
        got = np.array(payload["zero_sequence"]["voltage"]["values"])
        assert np.allclose(got, expected_v)

    def test_zero_overlay_on_open_circuit(self, client):
        state = client.app.state.run
        from faultclust.pipeline import load_run_artifacts

        # find an OpenCircuit record through the labels csv next to the run
        labels_path = state.config.labels
        from faultclust.labels import load_labels_csv

        oc = [l for l in load_labels_csv(labels_path) if l.fault_type == "Open Circuit"][0]
        r = client.get(
            f"/samples/{oc.sample_id}/window",
            params={"max_points": 200, "overlays": "zero,anomaly"},
        )
        assert r.status_code == 200
        payload = r.json()
        assert "zero" in payload["overlays"]
        assert any(payload["overlays"]["zero"]["I2"])
        assert not any(payload["overlays"]["zero"]["V1"])

    def test_trend_residual_overlays(self, client):
        r = client.get("/samples/2/window", params={"max_points": 512, "overlays": "trend,residual"})
        payload = r.json()
        assert "values" in payload["overlays"]["trend"]["V1"]
        assert len(payload["overlays"]["residual"]["I1"]["values"]) == 512

    def test_unknown_sample_404(self, client):
        assert client.get("/samples/999/window").status_code == 404

    def test_invalid_range_400(self, client):
        assert client.get("/samples/0/window", params={"start": 100, "end": 50}).status_code == 400
        assert client.get("/samples/0/window", params={"start": 0, "end": 9999}).status_code == 400

    def test_unknown_overlay_400(self, client):
        r = client.get("/samples/0/window", params={"overlays": "sparkles"})
        assert r.status_code == 400

    def test_spike_survives_decimation(self, tmp_path):
        # a 1-sample spike must appear in some bucket's max
        meta = DatasetMeta(record_count=1, timesteps=2048)
        rec, _ = generate(FaultSpec("Normal", 0, 0, noise_std=0.0), meta)
        samples = rec.samples.copy()
        samples[0, 777] = 50.0
        ds = Dataset(meta=meta, records=[WaveformRecord(id=0, samples=samples)])
        save_dataset(ds, tmp_path / "dataset.json")
        cfg = PipelineConfig(input=str(tmp_path / "dataset.json"), output_dir=str(tmp_path / "run"))
        manifest = {
            "schema_version": 1,
            "config": cfg.to_dict(),
            "artifacts": {},
        }
        run = tmp_path / "run"
        run.mkdir()
        (run / "run_manifest.json").write_text(json.dumps(manifest))
        app = create_app(run)
        c = TestClient(app)
        payload = c.get("/samples/0/window", params={"max_points": 100}).json()
        assert max(payload["channels"]["V1"]["max"]) == pytest.approx(50.0)


class TestClusters:
    def test_sizes_match_size_table(self, client):
        from faultclust.evalmetrics import cluster_size_table

        r = client.get("/clusters")
        assert r.status_code == 200
        body = r.json()
        state = client.app.state.run
        expected = cluster_size_table(state.assignments)
        got = [(row["cluster"], row["count"]) for row in body["clusters"]]
        assert got == [(c, n) for c, n, _ in expected]

    def test_no_model_409(self, tmp_path):
        ds, _ = generate_dataset({"Normal": 2}, timesteps=512, seed=0)
        save_dataset(ds, tmp_path / "dataset.json")
        cfg = PipelineConfig(input=str(tmp_path / "dataset.json"), output_dir=str(tmp_path / "run"))
        run = tmp_path / "run"
        run.mkdir()
        (run / "run_manifest.json").write_text(
            json.dumps({"schema_version": 1, "config": cfg.to_dict(), "artifacts": {}})
        )
        c = TestClient(create_app(run))
        assert c.get("/clusters").status_code == 409
        assert c.get("/worksheet").status_code == 409
        assert c.post("/metrics/recompute").status_code == 409


class TestWorksheet:
    def test_matches_sample_function_for_same_seed(self, client):
        state = client.app.state.run
        expected = sample_worksheet(state.assignments, per_cluster=7, seed=state.config.seed)
        r = client.get("/worksheet")
        items = [(it["cluster"], it["sample_id"]) for it in r.json()["items"]]
        assert items == expected

    def test_pending_decreases_after_label(self, fresh_client):
        before = fresh_client.get("/worksheet").json()
        item = before["items"][0]
        fresh_client.post("/labels", json={
            "sample_id": item["sample_id"],
            "fault_class": "Normal",
            "fault_type": "Normal",
            "phase": "N/A",
        })
        after = fresh_client.get("/worksheet").json()
        assert after["pending"] == before["pending"] - 1


class TestLabels:
    def test_post_then_get_round_trip(self, fresh_client):
        payload = {
            "sample_id": 0,
            "fault_class": "Short-circuit",
            "fault_type": "1-P-SC",
            "phase": "C",
            "comment": "dip on phase C",
        }
        r = fresh_client.post("/labels", json=payload)
        assert r.status_code == 201
        entry = r.json()
        assert entry["revision"] == 1
        got = fresh_client.get("/labels").json()["labels"]
        assert len(got) == 1
        for key, value in payload.items():
            assert got[0][key] == value

    def test_second_post_supersedes(self, fresh_client):
        base = {"sample_id": 1, "fault_class": "Normal", "fault_type": "Normal", "phase": "N/A"}
        fresh_client.post("/labels", json=base)
        r = fresh_client.post("/labels", json={**base, "fault_class": "Transients",
                                               "fault_type": "Transients"})
        assert r.json()["revision"] == 2
        labels = fresh_client.get("/labels").json()["labels"]
        entry = [e for e in labels if e["sample_id"] == 1][0]
        assert entry["fault_type"] == "Transients"
        assert entry["revision"] == 2

    def test_vocabulary_violation_400(self, fresh_client):
        r = fresh_client.post("/labels", json={
            "sample_id": 0, "fault_class": "Normal", "fault_type": "1-P-SC", "phase": "A",
        })
        assert r.status_code == 400

    def test_unknown_sample_404(self, fresh_client):
        r = fresh_client.post("/labels", json={
            "sample_id": 12345, "fault_class": "Normal", "fault_type": "Normal", "phase": "N/A",
        })
        assert r.status_code == 404

    def test_log_replay_reconstructs_view(self, fresh_client):
        for sid, ftype in [(0, "Normal"), (1, "Normal"), (0, "Transients")]:
            cls = "Normal" if ftype == "Normal" else "Transients"
            fresh_client.post("/labels", json={
                "sample_id": sid, "fault_class": cls, "fault_type": ftype, "phase": "N/A",
            })
        state = fresh_client.app.state.run
        assert len(state.label_log.entries()) == 3
        view = state.label_log.current_view()
        assert view[0]["fault_type"] == "Transients"
        assert view[1]["fault_type"] == "Normal"

    def test_vocabulary_endpoint(self, client):
        vocab = client.get("/vocabulary").json()
        assert "1-P-SC" in vocab["Short-circuit"]


class TestRecompute:
    def test_no_labels_409(self, fresh_client):
        assert fresh_client.post("/metrics/recompute").status_code == 409

    def test_homogeneous_cluster_purity_one(self, fresh_client):
        state = fresh_client.app.state.run
        cluster0_ids = [sid for sid, c in state.assignments.items() if c == 0][:3]
        for sid in cluster0_ids:
            fresh_client.post("/labels", json={
                "sample_id": sid, "fault_class": "Normal", "fault_type": "Normal", "phase": "N/A",
            })
        r = fresh_client.post("/metrics/recompute")
        assert r.status_code == 200
        report = r.json()
        row = [row for row in report["per_cluster"] if row["cluster"] == 0][0]
        assert row["purity"] == 1.0

    def test_matches_cli_evaluate_byte_for_byte(self, fresh_client, tmp_path):
        from click.testing import CliRunner

        from faultclust.cli import cli as cli_group

        state = fresh_client.app.state.run
        some_ids = sorted(state.assignments)[:6]
        for sid in some_ids:
            fresh_client.post("/labels", json={
                "sample_id": sid, "fault_class": "Switching", "fault_type": "Switch Off",
                "phase": "N/A",
            })
        api_bytes = fresh_client.post("/metrics/recompute").content

        labels_csv = tmp_path / "labels.csv"
        from faultclust.labels import save_labels_csv

        save_labels_csv(state.label_log.current_labels(), labels_csv)
        out_json = tmp_path / "metrics.json"
        runner = CliRunner()
        r = runner.invoke(cli_group, [
            "evaluate",
            "--assignments", str(state.run_dir / "assignments.csv"),
            "--labels", str(labels_csv),
            "--embedding", str(state.run_dir / "embedding.csv"),
            "--out", str(out_json),
        ])
        assert r.exit_code == 0, r.output
        assert api_bytes == out_json.read_bytes()
