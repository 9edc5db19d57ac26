"""Command-line entry point.

Subcommands: ``explore``, ``train``, ``tune``, ``predict`` and ``replay``
(re-run a recorded manifest), plus ``synth`` to write a synthetic
``prices.csv`` for offline use.

Exit codes: 0 success, 1 usage error, 2 data or model-file error,
3 training divergence.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import charts, synthetic
from .errors import DataError, Diverged, ModelFileError, StockcastError
from .marketdata import PriceTable, parse_prices, pick_random_symbol, select_symbol
from .modelstore import atomic_write_text, canonical_json, load_model, save_model
from .neuralcore import ADDITIONAL_LAYERS, ModelSpec
from .preprocess import FEATURE_SETS, WindowSpec, build_windows, prepare, transform
from .rng import derive_seed
from .trainer import TrainConfig, evaluate, history_csv, predict_series, prediction_csv, train
from .tuner import GridSpec, grid_search, improvement_line


EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3
MANIFEST_VERSION = "stockcast-manifest/1"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ----------------------------------------------------------------- helpers


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _load_prices(path: str) -> tuple[PriceTable, str]:
    if path == "-":
        data = sys.stdin.buffer.read()
    else:
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise DataError(f"cannot read prices file {path}: {exc}") from exc
    return parse_prices(data), _sha256(data)


def _resolve_symbol(table: PriceTable, args) -> str:
    if getattr(args, "symbol", None):
        return args.symbol
    return pick_random_symbol(table, args.seed)


class _Outputs:
    """Writes files atomically under one directory and records checksums."""

    def __init__(self, out_dir: str):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.checksums: dict[str, str] = {}

    def write(self, name: str, text: str) -> Path:
        path = self.dir / name
        atomic_write_text(path, text)
        self.checksums[name] = _sha256(text.encode("utf-8"))
        return path

    def record(self, name: str) -> None:
        self.checksums[name] = _sha256((self.dir / name).read_bytes())

    def manifest(self, command: str, config: dict, symbol: str, seeds: dict, digest: str) -> None:
        doc = {
            "format": MANIFEST_VERSION,
            "command": command,
            "config": config,
            "symbol": symbol,
            "seeds": seeds,
            "input_sha256": digest,
            "outputs": dict(sorted(self.checksums.items())),
        }
        atomic_write_text(self.dir / "manifest.json", canonical_json(doc))


def _write_price_figures(out: _Outputs, series) -> None:
    for k, col in enumerate(("open", "close", "low", "high"), start=1):
        out.write(f"figure_{k}_{col}.svg", charts.render_price_chart(series, col))


def _check(cond: bool, flag: str, message: str) -> None:
    if not cond:
        raise UsageError(f"{flag}: {message}")


def _validate_training_flags(args) -> None:
    _check(args.window >= 1, "--window", "must be >= 1")
    _check(0.0 < args.test_frac < 1.0, "--test-frac", "must be in (0, 1)")
    _check(0.0 <= args.val_frac < 1.0, "--val-frac", "must be in [0, 1)")
    _check(args.max_epochs >= 1, "--max-epochs", "must be >= 1")
    _check(args.patience >= 0, "--patience", "must be >= 0")
    if hasattr(args, "neurons"):
        _check(args.neurons >= 1, "--neurons", "must be >= 1")
        _check(args.batch >= 1, "--batch", "must be >= 1")
        _check(0.0 <= args.dropout < 1.0, "--dropout", "must be in [0, 1)")


# ------------------------------------------------------------- subcommands


def cmd_explore(args) -> int:
    table, digest = _load_prices(args.prices)
    symbol = _resolve_symbol(table, args)
    series = select_symbol(table, symbol)
    out = _Outputs(args.out)
    _write_price_figures(out, series)
    summary = {
        "symbol": symbol,
        "census": table.census,
        "rows": len(series),
        "first_date": series.bars[0].date.isoformat(),
        "last_date": series.bars[-1].date.isoformat(),
        "features": {
            f: {"min": float(series.column(f).min()), "max": float(series.column(f).max())}
            for f in ("open", "close", "low", "high", "volume")
        },
    }
    out.write("summary.json", canonical_json(summary))
    out.manifest("explore", {"random_symbol": not args.symbol}, symbol, {"seed": args.seed}, digest)
    print(f"{symbol}: {len(series)} rows, {summary['first_date']} .. {summary['last_date']}")
    return EXIT_OK


def _train_config(args) -> dict:
    return {
        "window": args.window,
        "features": args.features,
        "test_frac": args.test_frac,
        "val_frac": args.val_frac,
        "neurons": args.neurons,
        "extra_layer": args.extra_layer,
        "batch": args.batch,
        "dropout": args.dropout,
        "max_epochs": args.max_epochs,
        "patience": args.patience,
        "seed": args.seed,
    }


def run_train(config: dict, table: PriceTable, digest: str, symbol: str, out_dir: str) -> int:
    series = select_symbol(table, symbol)
    wspec = WindowSpec(config["window"], FEATURE_SETS[config["features"]])
    prep = prepare(series, wspec, config["test_frac"], config["val_frac"])
    spec = ModelSpec(
        input_dim=wspec.input_dim,
        time_steps=wspec.time_steps,
        neurons=config["neurons"],
        additional_layer=config["extra_layer"],
        dropout=config["dropout"],
    )
    seeds = {
        "master": config["seed"],
        "init": derive_seed(config["seed"], "init"),
        "train": derive_seed(config["seed"], "train"),
    }
    cfg = TrainConfig(
        max_epochs=config["max_epochs"],
        batch_size=config["batch"],
        patience=config["patience"],
        seed=seeds["train"],
    )
    out = _Outputs(out_dir)
    provenance = {"symbol": symbol, "seeds": seeds, "config": config, "input_sha256": digest}

    def checkpoint(state, epoch):
        save_model(state, spec, prep.scaler, {**provenance, "checkpoint": True, "epoch": epoch},
                   out.dir / "checkpoint.json")

    try:
        report, best = train(spec, prep.split, cfg, seeds["init"], on_checkpoint=checkpoint)
    except Diverged as exc:
        if exc.report is not None and exc.report.history:
            out.write("history.csv", history_csv(exc.report))
        raise

    save_model(best, spec, prep.scaler, {**provenance, "checkpoint": False}, out.dir / "model.json")
    out.record("model.json")
    out.write("history.csv", history_csv(report))

    split = prep.split
    metrics = {
        "symbol": symbol,
        "input_sha256": digest,
        "rows": len(series),
        "samples": {"train": len(split.train), "validation": len(split.validation), "test": len(split.test)},
        "scaler": prep.scaler.to_dict(),
        "scaler_fit": "training rows only",
        "best_epoch": report.best_epoch,
        "stopped_epoch": report.stopped_epoch,
        "stop_reason": report.stop_reason,
        "train": evaluate(best, split.train).to_dict(),
        "validation": evaluate(best, split.validation).to_dict(),
        "test": report.test.to_dict(),
        "run": report.config,
    }
    out.write("metrics.json", canonical_json(metrics))

    pairs = predict_series(best, split.test, prep.scaler)
    out.write("predictions.csv", prediction_csv(pairs))
    _write_price_figures(out, series)
    out.write("figure_5_rmse.svg", charts.render_history(report, "rmse"))
    out.write("figure_6_loss.svg", charts.render_history(report, "loss"))
    out.write("figure_7_prediction.svg", charts.render_prediction_overlay(pairs, "price"))
    out.manifest("train", config, symbol, seeds, digest)
    print(
        f"{symbol}: best epoch {report.best_epoch}, stopped {report.stopped_epoch} ({report.stop_reason}); "
        f"test loss {report.test.loss:.6g}, test RMSE {report.test.rmse:.6g}"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    _validate_training_flags(args)
    table, digest = _load_prices(args.prices)
    symbol = _resolve_symbol(table, args)
    return run_train(_train_config(args), table, digest, symbol, args.out)


def run_tune(config: dict, grid: GridSpec, table, digest, symbol, out_dir, workers: int = 1) -> int:
    series = select_symbol(table, symbol)
    wspec = WindowSpec(config["window"], FEATURE_SETS[config["features"]])
    prep = prepare(series, wspec, config["test_frac"], config["val_frac"])
    base_spec = ModelSpec(input_dim=wspec.input_dim, time_steps=wspec.time_steps)
    base_cfg = TrainConfig(max_epochs=config["max_epochs"], patience=config["patience"])
    report = grid_search(grid, prep.split, base_cfg, config["seed"], base_spec=base_spec, workers=workers)

    out = _Outputs(out_dir)
    doc = report.to_dict()
    doc["symbol"] = symbol
    doc["input_sha256"] = digest
    out.write("tune_report.json", canonical_json(doc))

    w = report.winner
    spec = replace(base_spec, additional_layer=w.config["additional_layer"], neurons=w.config["neurons"],
                   dropout=w.config["dropout"])
    cfg = replace(base_cfg, batch_size=w.config["batch_size"], seed=w.seed)
    _, best = train(spec, prep.split, cfg, w.seed)
    save_model(best, spec, prep.scaler,
               {"symbol": symbol, "seeds": {"master": config["seed"], "config": w.seed}, "config": config,
                "grid_index": w.index, "input_sha256": digest, "checkpoint": False},
               out.dir / "model.json")
    out.record("model.json")
    out.manifest("tune", {**config, "grid": grid.to_dict()}, symbol, {"master": config["seed"]}, digest)
    print(f"winner: {w.config} (validation RMSE {w.best_val_rmse:.6g}, test RMSE {w.test_rmse:.6g})")
    print(improvement_line(report))
    return EXIT_OK


def cmd_tune(args) -> int:
    _validate_training_flags(args)
    _check(args.workers >= 1, "--workers", "must be >= 1")
    try:
        grid = GridSpec.from_json(Path(args.grid).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"--grid: cannot read {args.grid}: {exc}") from exc
    except (ValueError, TypeError) as exc:
        raise UsageError(f"--grid: {exc}") from exc
    table, digest = _load_prices(args.prices)
    symbol = _resolve_symbol(table, args)
    config = {
        "window": args.window,
        "features": args.features,
        "test_frac": args.test_frac,
        "val_frac": args.val_frac,
        "max_epochs": args.max_epochs,
        "patience": args.patience,
        "seed": args.seed,
    }
    return run_tune(config, grid, table, digest, symbol, args.out, args.workers)


def cmd_predict(args) -> int:
    state, spec, scaler, prov = load_model(args.model)
    table, digest = _load_prices(args.prices)
    symbol = args.symbol or prov.get("symbol")
    if not symbol:
        raise UsageError("--symbol: model file records no symbol; pass one explicitly")
    series = select_symbol(table, symbol)
    wspec = WindowSpec(spec.time_steps, scaler.features)
    windows = build_windows(transform(scaler, series), wspec)
    pairs = predict_series(state, windows, scaler)
    out = _Outputs(args.out)
    out.write("predictions.csv", prediction_csv(pairs))
    out.write("figure_7_prediction.svg", charts.render_prediction_overlay(pairs, "price"))
    out.manifest("predict", {"model_sha256": _sha256(Path(args.model).read_bytes())}, symbol, {}, digest)
    print(f"{symbol}: {len(pairs)} predictions written")
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"--manifest: {exc}") from exc
    if manifest.get("format") != MANIFEST_VERSION or manifest.get("command") not in ("train", "tune"):
        raise UsageError("--manifest: only train and tune manifests can be replayed")
    table, digest = _load_prices(args.prices)
    if digest != manifest["input_sha256"]:
        raise DataError(f"input digest {digest} differs from recorded {manifest['input_sha256']}")
    config = dict(manifest["config"])
    if manifest["command"] == "train":
        return run_train(config, table, digest, manifest["symbol"], args.out)
    grid = GridSpec.from_json(json.dumps(config.pop("grid")))
    return run_tune(config, grid, table, digest, manifest["symbol"], args.out)


def cmd_synth(args) -> int:
    if args.kind == "sine":
        close = synthetic.sine_close(args.rows, seed=args.seed)
    else:
        close = synthetic.random_walk_close(args.rows, seed=args.seed)
    text = synthetic.to_csv({args.symbol: synthetic.bars_from_close(close, args.seed + 1)})
    atomic_write_text(args.out, text)
    print(f"wrote {args.rows} rows for {args.symbol} to {args.out}")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _symbol_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--symbol", help="ticker to model")
    g.add_argument("--random-symbol", action="store_true", help="pick a symbol with the seeded PRNG")


def _data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=int, default=25, help="lookback window in days (default 25)")
    p.add_argument("--features", choices=sorted(FEATURE_SETS), default="ohlcv")
    p.add_argument("--test-frac", type=float, default=0.2)
    p.add_argument("--val-frac", type=float, default=0.30)
    p.add_argument("--max-epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=50)
    p.add_argument("--seed", type=int, default=42)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stockcast", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("explore", help="price charts and summary for one symbol")
    p.add_argument("--prices", required=True)
    _symbol_flags(p)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("train", help="train one model")
    p.add_argument("--prices", required=True)
    _symbol_flags(p)
    p.add_argument("--out", required=True)
    _data_flags(p)
    p.add_argument("--neurons", type=int, default=16)
    p.add_argument("--extra-layer", choices=ADDITIONAL_LAYERS, default="none")
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--dropout", type=float, default=0.2)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tune", help="grid search")
    p.add_argument("--prices", required=True)
    _symbol_flags(p)
    p.add_argument("--grid", required=True, help="JSON grid file")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    _data_flags(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("predict", help="apply a saved model to a price file")
    p.add_argument("--model", required=True)
    p.add_argument("--prices", required=True)
    p.add_argument("--symbol")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("replay", help="re-run a recorded train/tune manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--prices", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("synth", help="write a synthetic prices.csv")
    p.add_argument("--kind", choices=("sine", "walk"), default="walk")
    p.add_argument("--rows", type=int, default=1200)
    p.add_argument("--symbol", default="SYNTH")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Diverged as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DataError, ModelFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except StockcastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())
