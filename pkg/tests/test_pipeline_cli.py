import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from faultclust.cli import cli
from faultclust.pipeline import (
    ConfigError,
    PipelineConfig,
    PipelineError,
    ReductionOptions,
    ClusterOptions,
    load_assignments_csv,
    load_worksheet_csv,
    run_pipeline,
    sample_worksheet,
)
from faultclust.labels import save_labels_csv
from faultclust.synthgen import generate_dataset
from faultclust.waveform_store import save_dataset


@pytest.fixture(scope="module")
def small_run_inputs(tmp_path_factory):
    """A small labeled dataset: 4 classes x 8 records, 512 samples."""
    root = tmp_path_factory.mktemp("inputs")
    classes = {"Normal": 8, "SC-1P-A": 8, "SwitchOn": 8, "Transient": 8}
    ds, labels = generate_dataset(classes, timesteps=512, seed=13, noise_std=0.01)
    save_dataset(ds, root / "dataset.json")
    save_labels_csv(labels, root / "labels.csv")
    return root


def small_config(inputs: Path, out_dir: Path, **overrides) -> PipelineConfig:
    return PipelineConfig(
        input=str(inputs / "dataset.json"),
        labels=str(inputs / "labels.csv"),
        output_dir=str(out_dir),
        seed=7,
        reduction=ReductionOptions(
            mode=overrides.pop("mode", "pca_then_tsne"),
            perplexity=8.0,
            iterations=300,
        ),
        cluster=ClusterOptions(k=4, n_init=5),
    )


class TestRunPipeline:
    def test_all_artifacts_present(self, small_run_inputs, tmp_path):
        out = tmp_path / "run"
        summary = run_pipeline(small_config(small_run_inputs, out))
        expected = {
            "features.csv", "embedding.csv", "kl_trace.csv", "assignments.csv",
            "model.json", "cluster_sizes.csv", "metrics.json", "contingency.csv",
            "run_manifest.json",
        }
        assert expected <= {p.name for p in out.iterdir()}
        assert summary.report is not None

    def test_manifest_hash_consistency(self, small_run_inputs, tmp_path):
        from faultclust.pipeline import sha256_file

        out = tmp_path / "run"
        run_pipeline(small_config(small_run_inputs, out))
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["schema_version"] == 1
        assert manifest["input_hashes"]["dataset_manifest"] == sha256_file(
            small_run_inputs / "dataset.json"
        )
        assert manifest["input_hashes"]["dataset_blob"] == sha256_file(
            small_run_inputs / "dataset.f32"
        )
        assert manifest["config"]["seed"] == 7

    def test_determinism_byte_identical(self, small_run_inputs, tmp_path):
        cfg_a = small_config(small_run_inputs, tmp_path / "a")
        cfg_b = small_config(small_run_inputs, tmp_path / "b")
        run_pipeline(cfg_a)
        run_pipeline(cfg_b)
        for name in ("assignments.csv", "embedding.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_metrics_json_has_table_rows(self, small_run_inputs, tmp_path):
        out = tmp_path / "run"
        run_pipeline(small_config(small_run_inputs, out))
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["schema_version"] == 1
        assert {"purity", "entropy"} <= set(metrics["raw"])
        assert {"purity", "entropy"} <= set(metrics["weighted"])
        assert all("purity" in row for row in metrics["per_cluster"])

    def test_pca_mode_runs(self, small_run_inputs, tmp_path):
        out = tmp_path / "run"
        summary = run_pipeline(small_config(small_run_inputs, out, mode="pca"))
        assert summary.report is not None
        assert not (out / "kl_trace.csv").exists()

    def test_failure_names_stage_and_removes_outputs(self, small_run_inputs, tmp_path):
        out = tmp_path / "run"
        cfg = small_config(small_run_inputs, out)
        # k larger than N makes the cluster stage fail after reduce wrote files
        cfg = PipelineConfig.from_dict({**cfg.to_dict(), "cluster": {"k": 10_000}})
        with pytest.raises(PipelineError, match="cluster"):
            run_pipeline(cfg)
        assert not (out / "features.csv").exists()
        assert not (out / "embedding.csv").exists()

    def test_missing_input_is_config_error(self, tmp_path):
        cfg = PipelineConfig(input=str(tmp_path / "nope.json"), output_dir=str(tmp_path / "o"))
        with pytest.raises(ConfigError, match="not found"):
            run_pipeline(cfg)


class TestConfigRoundTrip:
    def test_file_round_trip(self, small_run_inputs, tmp_path):
        cfg = small_config(small_run_inputs, tmp_path / "out")
        path = tmp_path / "config.json"
        cfg.save(path)
        loaded = PipelineConfig.from_file(path)
        assert loaded == cfg

    def test_relative_paths_resolved(self, small_run_inputs, tmp_path):
        payload = {
            "input": "dataset.json",
            "labels": "labels.csv",
            "output_dir": "out",
            "seed": 1,
        }
        path = small_run_inputs / "config.json"
        path.write_text(json.dumps(payload))
        cfg = PipelineConfig.from_file(path)
        assert Path(cfg.input).is_absolute()
        assert Path(cfg.input).exists()


class TestWorksheet:
    def test_per_cluster_counts(self):
        assignments = {i: i % 15 for i in range(300)}
        rows = sample_worksheet(assignments, per_cluster=7, seed=0)
        assert len(rows) == 105
        ids = [sid for _, sid in rows]
        assert len(set(ids)) == 105
        per_cluster = {}
        for cluster, _ in rows:
            per_cluster[cluster] = per_cluster.get(cluster, 0) + 1
        assert all(v == 7 for v in per_cluster.values())

    def test_small_cluster_takes_all(self):
        assignments = {0: 0, 1: 0, 2: 1}
        rows = sample_worksheet(assignments, per_cluster=7, seed=0)
        assert len(rows) == 3

    def test_deterministic(self):
        assignments = {i: i % 4 for i in range(100)}
        a = sample_worksheet(assignments, per_cluster=5, seed=3)
        b = sample_worksheet(assignments, per_cluster=5, seed=3)
        assert a == b
        c = sample_worksheet(assignments, per_cluster=5, seed=4)
        assert a != c


class TestCli:
    def test_gen_features_reduce_cluster_chain(self, tmp_path):
        runner = CliRunner()
        data_dir = tmp_path / "data"
        r = runner.invoke(cli, [
            "gen", "--out", str(data_dir), "--classes", "Normal=6,SC-1P-A=6",
            "--timesteps", "512", "--noise", "0.01", "--seed", "3",
        ])
        assert r.exit_code == 0, r.output
        r = runner.invoke(cli, [
            "features", "--dataset", str(data_dir / "dataset.json"),
            "--out", str(tmp_path / "features.csv"),
        ])
        assert r.exit_code == 0, r.output
        r = runner.invoke(cli, [
            "reduce", "--features", str(tmp_path / "features.csv"), "--mode", "pca",
            "--out", str(tmp_path / "embedding.csv"),
        ])
        assert r.exit_code == 0, r.output
        r = runner.invoke(cli, [
            "cluster", "--embedding", str(tmp_path / "embedding.csv"), "--k", "2",
            "--out-dir", str(tmp_path / "clustered"), "--seed", "0",
        ])
        assert r.exit_code == 0, r.output
        assignments = load_assignments_csv(tmp_path / "clustered" / "assignments.csv")
        assert len(assignments) == 12

        r = runner.invoke(cli, [
            "evaluate", "--assignments", str(tmp_path / "clustered" / "assignments.csv"),
            "--labels", str(data_dir / "labels.csv"),
            "--embedding", str(tmp_path / "embedding.csv"),
            "--out", str(tmp_path / "metrics.json"),
        ])
        assert r.exit_code == 0, r.output
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert 0.0 <= metrics["global"]["purity"] <= 1.0

    def test_evaluate_without_labels_exits_2(self, tmp_path):
        (tmp_path / "assignments.csv").write_text("record_id,cluster\n0,0\n")
        runner = CliRunner()
        r = runner.invoke(cli, [
            "evaluate", "--assignments", str(tmp_path / "assignments.csv"),
            "--out", str(tmp_path / "m.json"),
        ])
        assert r.exit_code == 2
        assert "labels" in r.output

    def test_run_exit_code_zero(self, small_run_inputs, tmp_path):
        cfg = small_config(small_run_inputs, tmp_path / "out")
        cfg_path = tmp_path / "config.json"
        cfg.save(cfg_path)
        runner = CliRunner()
        r = runner.invoke(cli, ["run", "--config", str(cfg_path)])
        assert r.exit_code == 0, r.output

    def test_run_with_bad_config_exits_2(self, tmp_path):
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps({"input": "missing.json", "output_dir": "out"}))
        runner = CliRunner()
        r = runner.invoke(cli, ["run", "--config", str(cfg_path)])
        assert r.exit_code == 2

    def test_sample_subcommand(self, tmp_path):
        lines = ["record_id,cluster"] + [f"{i},{i % 15}" for i in range(300)]
        (tmp_path / "assignments.csv").write_text("\n".join(lines) + "\n")
        runner = CliRunner()
        r = runner.invoke(cli, [
            "sample", "--assignments", str(tmp_path / "assignments.csv"),
            "--per-cluster", "7", "--seed", "5", "--out", str(tmp_path / "worksheet.csv"),
        ])
        assert r.exit_code == 0, r.output
        rows = load_worksheet_csv(tmp_path / "worksheet.csv")
        assert len(rows) == 105
        assert len({sid for _, sid in rows}) <= 105
        per_cluster = {}
        for cluster, _ in rows:
            per_cluster[cluster] = per_cluster.get(cluster, 0) + 1
        assert all(v >= min(7, 20) for v in per_cluster.values())

    def test_gen_unknown_class_exits_2(self, tmp_path):
        runner = CliRunner()
        r = runner.invoke(cli, ["gen", "--out", str(tmp_path), "--classes", "Meteor=3"])
        assert r.exit_code == 2
