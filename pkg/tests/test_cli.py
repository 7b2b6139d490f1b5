import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from conftest import FIELD_CORRELATIONS
from vibsense import cli, selection, telemetry
from vibsense.features import FEATURE_COLUMNS


def _tree(path):
    return {p.name: p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    """Small simulated corpus with features extracted, shared read-only."""
    out = tmp_path_factory.mktemp("corpus")
    assert cli.main(["simulate", "--seed", "3", "--count", "100", "--out", str(out)]) == 0
    assert cli.main(["extract", "--windows", str(out / "windows"), "--out", str(out)]) == 0
    return out


# ----------------------------------------------------------------- simulate


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main(["simulate", "--seed", "7", "--count", "25", "--out", str(out)]) == 0
    assert _tree(a) == _tree(b)
    names = sorted(p.name for p in (a / "windows").iterdir())
    assert len(names) == 25
    assert names[0].startswith("win_00000_")


def test_simulate_class_filter(tmp_path):
    out = tmp_path / "out"
    assert cli.main(
        ["simulate", "--seed", "1", "--count", "10", "--classes", "railline", "--out", str(out)]
    ) == 0
    names = [p.name for p in (out / "windows").iterdir()]
    assert len(names) == 10
    assert all("railline" in n for n in names)


# ------------------------------------------------------------------ extract


def test_extract_row_count_and_idempotence(corpus_dir, tmp_path):
    features = (corpus_dir / "features.csv").read_text()
    assert len(features.strip().splitlines()) == 101  # header + one row per window
    out = tmp_path / "again"
    assert cli.main(
        ["extract", "--windows", str(corpus_dir / "windows"), "--out", str(out)]
    ) == 0
    assert (out / "features.csv").read_text() == features


def test_extract_without_windows_exits_2(tmp_path, capsys):
    code = cli.main(["extract", "--windows", str(tmp_path / "nowhere"), "--out", str(tmp_path)])
    assert code == 2
    assert capsys.readouterr().err.startswith("extract:")


# ------------------------------------------------------------------- select


def test_select_from_external_correlation_table(tmp_path):
    r = np.array([FIELD_CORRELATIONS[name][0] for name in FEATURE_COLUMNS])
    p = np.array([FIELD_CORRELATIONS[name][1] for name in FEATURE_COLUMNS])
    report = selection.CorrelationReport(list(FEATURE_COLUMNS), r, p, n=0)
    table = tmp_path / "field_correlations.csv"
    table.write_text(selection.correlation_csv(report))

    out = tmp_path / "out"
    assert cli.main(["select", "--correlations", str(table), "--out", str(out)]) == 0
    chosen = json.loads((out / "selected_features.json").read_text())
    assert chosen == ["mean", "std_dev", "max", "rms", "avg_peak_value"]
    assert (out / "correlation.csv").read_text() == table.read_text()


def test_select_on_computed_corpus(corpus_dir, tmp_path):
    out = tmp_path / "out"
    assert cli.main(
        ["select", "--features", str(corpus_dir / "features.csv"), "--out", str(out)]
    ) == 0
    chosen = json.loads((out / "selected_features.json").read_text())
    assert set(chosen) <= set(FEATURE_COLUMNS)
    lines = (out / "correlation.csv").read_text().strip().splitlines()
    assert lines[0] == "Features,Correlation value,Prediction value"
    assert len(lines) == 13


def test_select_missing_input_exits_2(tmp_path, capsys):
    code = cli.main(["select", "--features", str(tmp_path / "nope.csv"), "--out", str(tmp_path)])
    assert code == 2
    assert capsys.readouterr().err.startswith("select:")


# ----------------------------------------------------------- model commands


def test_full_pipeline_smoke(corpus_dir, capsys):
    out = str(corpus_dir)
    features = str(corpus_dir / "features.csv")
    assert cli.main(["select", "--features", features, "--out", out]) == 0
    assert cli.main(["train-knn", "--seed", "0", "--features", features, "--out", out]) == 0
    assert cli.main(
        [
            "train-cnn", "--seed", "0", "--features", features, "--out", out,
            "--reduced-grid", "--epochs", "3", "--folds", "2",
        ]
    ) == 0
    captured = capsys.readouterr().out
    assert "train-knn:" in captured and "train-cnn:" in captured
    for name in (
        "correlation.csv",
        "selected_features.json",
        "knn_metrics.csv",
        "knn_confusion.svg",
        "knn_k_curve.svg",
        "cnn_checkpoint.json",
        "cnn_history.csv",
        "cnn_metrics.csv",
    ):
        assert (corpus_dir / name).exists(), name
    # each metrics file ends with a parsable accuracy row
    for name in ("knn_metrics.csv", "cnn_metrics.csv"):
        last = (corpus_dir / name).read_text().strip().splitlines()[-1]
        accuracy = float(last.split(",")[1])
        assert 0.0 <= accuracy <= 1.0
    history = (corpus_dir / "cnn_history.csv").read_text().strip().splitlines()
    assert len(history) == 4  # header + 3 epochs


def test_sweep_k_artifacts(corpus_dir, tmp_path):
    out = tmp_path / "out"
    assert cli.main(
        ["sweep-k", "--seed", "0", "--features", str(corpus_dir / "features.csv"), "--out", str(out)]
    ) == 0
    lines = (out / "k_curve.csv").read_text().strip().splitlines()
    assert lines[0] == "k,cv_accuracy"
    assert len(lines) == 31
    assert all(0.0 <= float(ln.split(",")[1]) <= 1.0 for ln in lines[1:])
    ET.fromstring((out / "k_curve.svg").read_text())


def test_grid_search_artifacts(corpus_dir, tmp_path):
    out = tmp_path / "out"
    assert cli.main(
        [
            "grid-search", "--seed", "0", "--features", str(corpus_dir / "features.csv"),
            "--out", str(out), "--reduced-grid", "--folds", "2", "--epochs", "2",
        ]
    ) == 0
    ranking = (out / "grid_ranking.csv").read_text().strip().splitlines()
    assert len(ranking) == 5  # header + 4 reduced-grid combos
    winner = json.loads((out / "grid_winner.json").read_text())
    assert winner["batch_size"] == 100 and winner["kernel_length"] == 3
    assert winner["base_filters"] in (4, 8)
    assert winner["activation"] in ("relu", "elu")
    for key in ("batch_size", "kernel_length", "base_filters", "activation"):
        assert (out / f"grid_marginal_{key}.csv").exists()


def test_train_cnn_rejects_bad_activation(corpus_dir, tmp_path, capsys):
    code = cli.main(
        [
            "train-cnn", "--features", str(corpus_dir / "features.csv"),
            "--out", str(tmp_path), "--activation", "gelu", "--epochs", "1",
        ]
    )
    assert code == 2
    assert capsys.readouterr().err.startswith("train-cnn:")


def test_unknown_flag_is_a_usage_error(corpus_dir):
    with pytest.raises(SystemExit) as exc_info:
        cli.main(["simulate", "--bogus"])
    assert exc_info.value.code != 0


# ------------------------------------------------------------ spectral/fits


def test_spectral_check_reports_every_window(corpus_dir, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(
        ["spectral-check", "--windows", str(corpus_dir / "windows"), "--out", str(out)]
    ) == 0
    lines = (out / "spectral_report.csv").read_text().strip().splitlines()
    assert lines[0] == "file,dominant_bin,dominance_ratio,flat"
    assert len(lines) == 101
    assert "spectral-check:" in capsys.readouterr().out


def test_fit_height_writes_fits_and_charts(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["fit-height", "--seed", "0", "--floors", "5", "--out", str(out)]) == 0
    lines = (out / "height_fits.txt").read_text().strip().splitlines()
    assert len(lines) == 4
    by_name = dict(line.split(":", 1) for line in lines)
    assert "verdict=positive" in by_name["building1_vertical"]
    assert "verdict=positive" in by_name["building2_vertical"]
    assert "verdict=negative" in by_name["building1_horizontal"]
    assert "verdict=negative" in by_name["building2_horizontal"]
    for name in by_name:
        ET.fromstring((out / f"height_{name}.svg").read_text())


# ---------------------------------------------------------------- telemetry


def test_emulate_node_dry_run_and_report(tmp_path, capsys):
    sinks = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
    for sink in sinks:
        assert cli.main(
            [
                "emulate-node", "--store", str(sink), "--count", "4", "--seed", "5",
                "--structure", "flyover", "--base-time-ms", "1000",
            ]
        ) == 0
    assert sinks[0].read_bytes() == sinks[1].read_bytes()
    records = telemetry.scan_store(sinks[0])
    assert [r.seq for r in records] == [0, 1, 2, 3]
    assert [r.timestamp_ms for r in records] == [1000, 1001, 1002, 1003]

    capsys.readouterr()
    assert cli.main(["report", "--store", str(sinks[0])]) == 0
    report = capsys.readouterr().out
    assert "report: 4 records, 1 nodes" in report
    assert "node flyover-node: count=4" in report
    assert "label flyover: count=4" in report


def test_emulate_node_against_live_service(tmp_path):
    store = tmp_path / "store.jsonl"
    with telemetry.TelemetryServer(store) as srv:
        assert cli.main(
            [
                "emulate-node", "--endpoint", srv.url, "--count", "3", "--seed", "2",
                "--structure", "railline", "--node-id", "cli-node",
            ]
        ) == 0
    records = telemetry.scan_store(store)
    assert [r.seq for r in records] == [0, 1, 2]
    assert all(r.node_id == "cli-node" for r in records)


def test_emulate_node_needs_a_destination(capsys):
    assert cli.main(["emulate-node", "--count", "1"]) == 2
    assert "emulate-node:" in capsys.readouterr().err


def test_report_totals_match_scan(tmp_path, capsys):
    sink = tmp_path / "sink.jsonl"
    for structure, count in (("building", 3), ("concrete_overbridge", 2)):
        assert cli.main(
            ["emulate-node", "--store", str(sink), "--count", str(count),
             "--structure", structure, "--node-id", f"{structure}-n"]
        ) == 0
    capsys.readouterr()
    assert cli.main(["report", "--store", str(sink)]) == 0
    out = capsys.readouterr().out
    records = telemetry.scan_store(sink)
    assert f"report: {len(records)} records, 2 nodes" in out
    assert "label building: count=3" in out
    assert "label concrete_overbridge: count=2" in out


# ------------------------------------------------------------------- config


def test_config_supplies_defaults(tmp_path):
    cfg = tmp_path / "run.json"
    via_cfg, via_flag = tmp_path / "via_cfg", tmp_path / "via_flag"
    cfg.write_text(json.dumps({"seed": 7, "out": str(via_cfg)}))
    assert cli.main(["--config", str(cfg), "simulate", "--count", "8"]) == 0
    assert cli.main(["simulate", "--seed", "7", "--count", "8", "--out", str(via_flag)]) == 0
    assert _tree(via_cfg) == _tree(via_flag)


def test_config_flag_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"seed": 7}))
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["--config", str(cfg), "simulate", "--seed", "9", "--count", "8",
                     "--out", str(a)]) == 0
    assert cli.main(["simulate", "--seed", "9", "--count", "8", "--out", str(b)]) == 0
    assert _tree(a) == _tree(b)


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert cli.main(["--config", str(cfg), "report", "--store", "x.jsonl"]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_out_flag_alone_threads_through_the_pipeline(tmp_path, monkeypatch):
    # downstream stages must find their inputs under --out, not under a
    # literal ./out relative to wherever the process happens to run
    elsewhere = tmp_path / "elsewhere"
    elsewhere.mkdir()
    monkeypatch.chdir(elsewhere)
    run = tmp_path / "run"
    assert cli.main(["simulate", "--seed", "3", "--count", "100", "--out", str(run)]) == 0
    assert cli.main(["extract", "--out", str(run)]) == 0
    assert cli.main(["select", "--out", str(run)]) == 0
    assert cli.main(["sweep-k", "--seed", "3", "--out", str(run)]) == 0
    assert (run / "features.csv").exists()
    assert (run / "correlation.csv").exists()
    assert (run / "k_curve.csv").exists()
    assert not (elsewhere / "out").exists()

    assert cli.main(["emulate-node", "--structure", "building", "--count", "2",
                     "--interval", "0", "--store", str(run / "telemetry.jsonl")]) == 0
    assert cli.main(["report", "--out", str(run)]) == 0
    assert not (elsewhere / "out").exists()
