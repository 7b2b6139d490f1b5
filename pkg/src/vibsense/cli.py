"""Command-line front end: one subcommand per pipeline stage.

Precedence for settings: explicit flag > --config JSON > built-in default.
Every subcommand writes byte-identical artifacts for identical inputs and
seed; failures exit nonzero with a message naming the stage.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import baselines, cnn, heightfit, selection, svgplots, telemetry
from .errors import VibsenseError
from .features import (
    CSV_HEADERS,
    FEATURE_COLUMNS,
    FLATNESS_THRESHOLD,
    extract_features,
    read_feature_csv,
    spectral_profile,
    write_feature_csv,
)
from .signalsim import (
    DEFAULT_PROFILES,
    REFERENCE_LAWS,
    ClassProfile,
    FrontEndConfig,
    StructureClass,
    building_series,
    read_window_csv,
    simulate_corpus,
    write_window_csv,
)


@dataclasses.dataclass
class RunConfig:
    """Defaults loadable from a --config JSON file."""

    seed: int = 0
    out: str = "out"
    windows: str | None = None
    features: str | None = None
    store: str | None = None
    endpoint: str | None = None
    classes: list[str] | None = None
    profiles: dict | None = None  # class name -> field overrides
    grids: dict | None = None

    @classmethod
    def load(cls, path) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def _resolve(args, name, default=None):
    """flag > config > default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if args.run_config is not None:
        from_config = getattr(args.run_config, name, None)
        if from_config is not None:
            return from_config
    return default


def _profiles_for(args) -> dict[StructureClass, ClassProfile]:
    profiles = dict(DEFAULT_PROFILES)
    overrides = (args.run_config.profiles if args.run_config else None) or {}
    for name, fields in overrides.items():
        cls = StructureClass.from_name(name)
        profiles[cls] = dataclasses.replace(profiles[cls], **fields)
    classes = _resolve(args, "classes")
    if classes:
        wanted = [StructureClass.from_name(c) for c in classes]
        profiles = {c: profiles[c] for c in wanted}
    return profiles


def _out_dir(args) -> Path:
    out = Path(_resolve(args, "out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _in_path(args, name, relative) -> Path:
    """Input path: explicit flag/config first, else <out>/<relative>."""
    value = _resolve(args, name)
    if value is not None:
        return Path(value)
    return Path(_resolve(args, "out", "out")) / relative


def _load_dataset(path) -> baselines.LabeledDataset:
    vectors, labels = read_feature_csv(path)
    if any(lbl is None for lbl in labels):
        raise ValueError(f"{path}: every row needs a class label")
    return baselines.LabeledDataset.from_vectors(
        vectors, [StructureClass.from_name(lbl) for lbl in labels]
    )


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    seed = _resolve(args, "seed", 0)
    profiles = _profiles_for(args)
    windows = simulate_corpus(args.count, profiles, FrontEndConfig(), seed=seed)
    win_dir = out / "windows"
    win_dir.mkdir(exist_ok=True)
    for i, window in enumerate(windows):
        write_window_csv(window, win_dir / f"win_{i:05d}_{window.source.value}.csv")
    print(f"simulate: wrote {len(windows)} windows to {win_dir}")
    return 0


def _window_files(args):
    win_dir = _in_path(args, "windows", "windows")
    files = sorted(win_dir.glob("win_*.csv"))
    if not files:
        raise FileNotFoundError(f"no window CSVs under {win_dir}")
    return files


def cmd_extract(args) -> int:
    out = _out_dir(args)
    vectors, labels = [], []
    for path in _window_files(args):
        window = read_window_csv(path)
        vectors.append(extract_features(window))
        labels.append(window.source.value if window.source else None)
    target = out / "features.csv"
    write_feature_csv(target, vectors, labels)
    print(f"extract: wrote {len(vectors)} rows to {target}")
    return 0


def cmd_spectral_check(args) -> int:
    out = _out_dir(args)
    lines = ["file,dominant_bin,dominance_ratio,flat"]
    n_flat = 0
    total = 0
    for path in _window_files(args):
        report = spectral_profile(read_window_csv(path))
        flat = report.dominance_ratio < FLATNESS_THRESHOLD
        n_flat += flat
        total += 1
        lines.append(
            f"{path.name},{report.dominant_bin},{report.dominance_ratio!r},{int(flat)}"
        )
    target = out / "spectral_report.csv"
    target.write_text("\n".join(lines) + "\n")
    print(
        f"spectral-check: {n_flat}/{total} windows below dominance ratio "
        f"{FLATNESS_THRESHOLD:g}; report at {target}"
    )
    return 0


def cmd_select(args) -> int:
    out = _out_dir(args)
    if args.correlations:
        report = selection.read_correlation_csv(Path(args.correlations).read_text())
    else:
        ds = _load_dataset(_in_path(args, "features", "features.csv"))
        report = selection.correlation_table(ds)
    mask = selection.select_features(report)
    (out / "correlation.csv").write_text(selection.correlation_csv(report))
    chosen = [name for name, keep in zip(report.features, mask) if keep]
    (out / "selected_features.json").write_text(json.dumps(chosen, indent=2) + "\n")
    print(f"select: kept {chosen}")
    return 0


def _selected_columns(out: Path, ds) -> tuple[np.ndarray, list[str]]:
    """Column mask from a previous `select` run, else all columns."""
    chosen_path = out / "selected_features.json"
    if chosen_path.exists():
        names = json.loads(chosen_path.read_text())
        mask = np.array([name in names for name in FEATURE_COLUMNS])
        if mask.any():
            return mask, names
    return np.ones(ds.rows.shape[1], dtype=bool), list(FEATURE_COLUMNS)


def cmd_train_knn(args) -> int:
    out = _out_dir(args)
    seed = _resolve(args, "seed", 0)
    ds = _load_dataset(_in_path(args, "features", "features.csv"))
    mask, names = _selected_columns(out, ds)
    ds_sel = ds.select_columns(mask)
    train_ds, _, test_ds = baselines.split(ds_sel, (0.7, 0.1, 0.2), seed=seed, stratified=True)

    best_k, curve = baselines.sweep_k(train_ds, seed=seed)
    model = baselines.knn_fit(train_ds)
    preds = baselines.knn_predict_batch(model, test_ds.rows, best_k)
    metrics = baselines.evaluate(preds, test_ds.labels, len(ds.classes))

    _write_metrics(out / "knn_metrics.csv", metrics, ds.classes)
    class_names = [c.value for c in ds.classes]
    svgplots.save_svg(
        svgplots.heatmap(
            metrics.confusion, class_names, class_names, title=f"k-NN confusion (k={best_k})"
        ),
        out / "knn_confusion.svg",
    )
    ks = sorted(curve)
    svgplots.save_svg(
        svgplots.line_chart(
            [("CV accuracy", ks, [curve[k] for k in ks])],
            title="k sweep",
            x_label="k",
            y_label="accuracy",
        ),
        out / "knn_k_curve.svg",
    )
    print(
        f"train-knn: features={names} k={best_k} "
        f"test_accuracy={metrics.accuracy:.4f}"
    )
    return 0


def cmd_sweep_k(args) -> int:
    out = _out_dir(args)
    seed = _resolve(args, "seed", 0)
    ds = _load_dataset(_in_path(args, "features", "features.csv"))
    mask, _ = _selected_columns(out, ds)
    best_k, curve = baselines.sweep_k(ds.select_columns(mask), seed=seed)
    ks = sorted(curve)
    lines = ["k,cv_accuracy"] + [f"{k},{curve[k]!r}" for k in ks]
    (out / "k_curve.csv").write_text("\n".join(lines) + "\n")
    svgplots.save_svg(
        svgplots.line_chart(
            [("CV accuracy", ks, [curve[k] for k in ks])],
            title="k sweep",
            x_label="k",
            y_label="accuracy",
        ),
        out / "k_curve.svg",
    )
    print(f"sweep-k: best_k={best_k}")
    return 0


def _write_metrics(path, metrics: baselines.Metrics, classes) -> None:
    lines = ["class,precision,recall,f1"]
    for i, cls in enumerate(classes):
        lines.append(
            f"{cls.value},{float(metrics.precision[i])!r},"
            f"{float(metrics.recall[i])!r},{float(metrics.f1[i])!r}"
        )
    lines.append(f"macro,{metrics.macro_precision!r},{metrics.macro_recall!r},{metrics.macro_f1!r}")
    lines.append(f"accuracy,{metrics.accuracy!r},,")
    Path(path).write_text("\n".join(lines) + "\n")


def _write_history_csv(path, history: cnn.TrainingHistory) -> None:
    lines = ["epoch,lr,train_loss,train_acc,val_acc"]
    for i in range(len(history.lr)):
        lines.append(
            f"{i + 1},{history.lr[i]!r},{history.train_loss[i]!r},"
            f"{history.train_acc[i]!r},{history.val_acc[i]!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _grids_for(args) -> dict | None:
    if args.reduced_grid:
        return {
            "batch_size": [100],
            "kernel_length": [3],
            "base_filters": [4, 8],
            "activation": ["relu", "elu"],
        }
    if args.run_config and args.run_config.grids:
        return args.run_config.grids
    return None


def cmd_train_cnn(args) -> int:
    out = _out_dir(args)
    seed = _resolve(args, "seed", 0)
    ds = _load_dataset(_in_path(args, "features", "features.csv"))
    epochs = args.epochs

    if args.reduced_grid:
        result = cnn.grid_search(
            ds, grids=_grids_for(args), folds=args.folds, seed=seed, epochs=epochs
        )
        hp = result.winner
        print(f"train-cnn: reduced grid winner {_hp_str(hp)}")
    else:
        hp = cnn.CnnHyperparams(
            batch_size=args.batch_size,
            kernel_length=args.kernel_length,
            base_filters=args.base_filters,
            activation=args.activation,
        )

    train_ds, val_ds, test_ds = baselines.split(ds, (0.7, 0.1, 0.2), seed=seed, stratified=True)
    model = cnn.train(train_ds, hp, seed=seed, val=val_ds, epochs=epochs)
    cnn.save_checkpoint(model, out / "cnn_checkpoint.json")
    _write_history_csv(out / "cnn_history.csv", model.history)

    test_x = (test_ds.rows - model.input_mean) / model.input_std
    preds = cnn.forward(model, test_x).argmax(axis=1)
    metrics = baselines.evaluate(preds, test_ds.labels, len(ds.classes))
    _write_metrics(out / "cnn_metrics.csv", metrics, ds.classes)
    print(f"train-cnn: {_hp_str(hp)} test_accuracy={metrics.accuracy:.4f}")
    return 0


def _hp_str(hp: cnn.CnnHyperparams) -> str:
    return (
        f"batch={hp.batch_size} K={hp.kernel_length} q={hp.base_filters} "
        f"act={hp.activation}"
    )


def cmd_grid_search(args) -> int:
    out = _out_dir(args)
    seed = _resolve(args, "seed", 0)
    ds = _load_dataset(_in_path(args, "features", "features.csv"))
    result = cnn.grid_search(
        ds, grids=_grids_for(args), folds=args.folds, seed=seed, epochs=args.epochs
    )
    lines = ["rank,batch_size,kernel_length,base_filters,activation,mean_cv_accuracy"]
    for rank, (hp, score) in enumerate(result.ranked, start=1):
        lines.append(
            f"{rank},{hp.batch_size},{hp.kernel_length},{hp.base_filters},"
            f"{hp.activation},{score!r}"
        )
    (out / "grid_ranking.csv").write_text("\n".join(lines) + "\n")
    for key, pairs in result.marginals.items():
        lines = [f"{key},mean_cv_accuracy"]
        lines.extend(f"{value},{score!r}" for value, score in pairs)
        (out / f"grid_marginal_{key}.csv").write_text("\n".join(lines) + "\n")
    (out / "grid_winner.json").write_text(
        json.dumps(dataclasses.asdict(result.winner), indent=2) + "\n"
    )
    print(f"grid-search: winner {_hp_str(result.winner)}")
    return 0


def cmd_fit_height(args) -> int:
    out = _out_dir(args)
    seed = _resolve(args, "seed", 0)
    n_floors = args.floors
    lines = []
    for idx, (name, law) in enumerate(sorted(REFERENCE_LAWS.items())):
        windows = [
            building_series(law, floor, noise_sd=2.0, seed=seed * 7919 + idx * 101 + floor)
            for floor in range(1, n_floors + 1)
        ]
        observations = heightfit.floor_profile(windows, law.orientation)
        expected = "positive" if law.slope > 0 else ("negative" if law.slope < 0 else "flat")
        analysis = heightfit.height_analysis(observations, expected_sign=expected)
        lines.append(f"{name}: {analysis.fit.equation()}  verdict={analysis.verdict}")
        svgplots.save_svg(
            svgplots.scatter_chart(
                [o.floor_index for o in observations],
                [o.mean_amplitude for o in observations],
                line=(analysis.fit.slope, analysis.fit.intercept),
                title=f"{name} ({law.orientation})",
                x_label="floor",
                y_label="mean amplitude (ADC)",
            ),
            out / f"height_{name}.svg",
        )
    (out / "height_fits.txt").write_text("\n".join(lines) + "\n")
    print("fit-height: " + "; ".join(lines))
    return 0


def cmd_serve(args) -> int:
    store = _in_path(args, "store", "telemetry.jsonl")
    Path(store).parent.mkdir(parents=True, exist_ok=True)
    server = telemetry.TelemetryServer(store, host=args.host, port=args.port)
    print(f"serve: listening on {server.url} store={store}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_emulate_node(args) -> int:
    endpoint = _resolve(args, "endpoint")
    if endpoint is None:
        endpoint = _resolve(args, "store")
    if endpoint is None:
        raise ValueError("emulate-node needs --endpoint (URL) or --store (dry-run file)")
    seed = _resolve(args, "seed", 0)
    profiles = _profiles_for(args)
    cls = StructureClass.from_name(args.structure)
    if cls not in profiles:
        raise ValueError(f"no profile for {args.structure}")
    time_fn = None
    if args.base_time_ms is not None:
        ticks = iter(range(10**9))
        time_fn = lambda: args.base_time_ms + next(ticks) * max(int(args.interval * 1000), 1)
    sent = telemetry.node_emulator(
        profiles[cls],
        endpoint,
        interval_s=args.interval,
        count=args.count,
        seed=seed,
        node_id=args.node_id,
        site=args.site,
        start_seq=args.start_seq,
        time_fn=time_fn,
    )
    print(f"emulate-node: delivered {len(sent)} records to {endpoint}")
    return 0


def cmd_report(args) -> int:
    store = _in_path(args, "store", "telemetry.jsonl")
    records = telemetry.scan_store(store)
    per_node: dict[str, int] = {}
    per_label: dict[str, int] = {}
    last_seen: dict[str, int] = {}
    for record in records:
        per_node[record.node_id] = per_node.get(record.node_id, 0) + 1
        label = record.label.value if record.label else "-"
        per_label[label] = per_label.get(label, 0) + 1
        last_seen[record.node_id] = max(last_seen.get(record.node_id, 0), record.timestamp_ms)
    print(f"report: {len(records)} records, {len(per_node)} nodes")
    for node_id in sorted(per_node):
        print(f"  node {node_id}: count={per_node[node_id]} last_seen_ms={last_seen[node_id]}")
    for label in sorted(per_label):
        print(f"  label {label}: count={per_label[label]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vibsense",
        description="Vibration-sensing pipeline: simulate, featurize, select, "
        "classify, fit, and ship telemetry.",
    )
    parser.add_argument("--config", help="JSON run-config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, seed=True, out=True):
        if seed:
            p.add_argument("--seed", type=int, default=None)
        if out:
            p.add_argument("--out", default=None)

    p = sub.add_parser("simulate", help="generate a labeled window corpus")
    common(p)
    p.add_argument("--count", type=int, default=1159)
    p.add_argument("--classes", nargs="+", default=None)

    p = sub.add_parser("extract", help="window CSVs -> feature table")
    common(p, seed=False)
    p.add_argument("--windows", default=None)

    p = sub.add_parser("spectral-check", help="dominant-bin flatness report")
    common(p, seed=False)
    p.add_argument("--windows", default=None)

    p = sub.add_parser("select", help="correlation table + feature mask")
    common(p, seed=False)
    p.add_argument("--features", default=None)
    p.add_argument("--correlations", default=None,
                   help="apply the rule to an existing correlation CSV instead")

    p = sub.add_parser("train-knn", help="sweep k, fit, evaluate on held-out split")
    common(p)
    p.add_argument("--features", default=None)

    p = sub.add_parser("sweep-k", help="cross-validated accuracy per k")
    common(p)
    p.add_argument("--features", default=None)

    p = sub.add_parser("train-cnn", help="train the 1D CNN")
    common(p)
    p.add_argument("--features", default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--folds", type=int, default=2)
    p.add_argument("--reduced-grid", action="store_true")
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--kernel-length", type=int, default=3)
    p.add_argument("--base-filters", type=int, default=32)
    p.add_argument("--activation", default="elu")

    p = sub.add_parser("grid-search", help="hyperparameter grid with CV")
    common(p)
    p.add_argument("--features", default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--reduced-grid", action="store_true")

    p = sub.add_parser("fit-height", help="mean amplitude vs floor fits")
    common(p)
    p.add_argument("--floors", type=int, default=6)

    p = sub.add_parser("serve", help="run the telemetry ingestion service")
    common(p, seed=False)
    p.add_argument("--store", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)

    p = sub.add_parser("emulate-node", help="post synthetic records to a service")
    common(p, out=False)
    p.add_argument("--structure", default="building")
    p.add_argument("--endpoint", default=None)
    p.add_argument("--store", default=None, help="dry-run sink when no endpoint")
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--interval", type=float, default=0.0)
    p.add_argument("--node-id", default=None)
    p.add_argument("--site", default=None)
    p.add_argument("--start-seq", type=int, default=0)
    p.add_argument("--base-time-ms", type=int, default=None)

    p = sub.add_parser("report", help="summarize a telemetry store")
    common(p, seed=False)
    p.add_argument("--store", default=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    handlers = {
        "simulate": cmd_simulate,
        "extract": cmd_extract,
        "spectral-check": cmd_spectral_check,
        "select": cmd_select,
        "train-knn": cmd_train_knn,
        "sweep-k": cmd_sweep_k,
        "train-cnn": cmd_train_cnn,
        "grid-search": cmd_grid_search,
        "fit-height": cmd_fit_height,
        "serve": cmd_serve,
        "emulate-node": cmd_emulate_node,
        "report": cmd_report,
    }
    try:
        args.run_config = RunConfig.load(args.config) if args.config else None
        return handlers[args.command](args)
    except (VibsenseError, OSError, ValueError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
