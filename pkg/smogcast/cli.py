"""
smogcast command line.

    smogcast synth     --grid 16x16 --frames 200 --seed 42 --out data/
    smogcast train     --data data/predictors.smgd --target data/target.smgd --out runs/r1
    smogcast train     ... --resume runs/r1/checkpoint.smgc --epochs 10 --out runs/r1b
    smogcast evaluate  --checkpoint runs/r1/checkpoint.smgc --data ... --target ... --out runs/r1/eval
    smogcast predict   --checkpoint runs/r1/checkpoint.smgc --data ... --out runs/r1/forecast.smgd
    smogcast report    --history runs/r1/history.csv --ssim r1=runs/r1/eval/ssim.csv --out runs/r1/report
    smogcast summary   --grid 291x512
    smogcast serve

Every command writes the fully-defaulted config it ran with to
``config.json`` beside its outputs. Errors, including unreadable or unwritable
paths, print one ``error:`` line on stderr and exit with status 2.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ValidationError

from smogcast import __version__
from smogcast.config import settings
from smogcast.core.exceptions import ConfigError, DataError, FingerprintMismatchError, FormatError, SmogcastError, TrainingDivergedError
from smogcast.core.logging import configure_logging
from smogcast.datapipe.cube import TARGET_FEATURE, TARGET_UNIT, DatasetCube, ingest, write_cube
from smogcast.datapipe.pipeline import forecast_inputs, holdout_windows, prepare_windows
from smogcast.datapipe.synth import synth_advection
from smogcast.datapipe.transforms import inverse_transform
from smogcast.datapipe.windows import split
from smogcast.evaluation import evaluate_model, persistence_baseline, write_metrics_csv, write_ssim_csv
from smogcast.models.api import ArchitectureSummary
from smogcast.models.config import ReportConfig, RunConfig, SynthConfig
from smogcast.models.history import HistoryRow
from smogcast.nn.network import NetworkParams, build_network, layer_summary
from smogcast.reporting import ssim_over_time, write_report
from smogcast.training.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from smogcast.training.history import read_history_csv, write_history_csv
from smogcast.training.optim import AdamState
from smogcast.training.trainer import predict_samples, train

logger = logging.getLogger("smogcast.cli")

CONFIG_ECHO = "config.json"
NORMALIZED_UNIT = "normalized"


# Argument types

def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def grid_arg(text: str) -> Tuple[int, int]:
    """'HxW' -> (H, W)"""
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}")
    return positive_int(parts[0]), positive_int(parts[1])


def point_arg(text: str) -> Tuple[int, int]:
    """'lat_idx,lon_idx' -> (lat_idx, lon_idx)"""
    parts = text.split(",")
    try:
        lat, lon = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lat_idx,lon_idx, got {text!r}")
    return lat, lon


def labelled_path(text: str) -> Tuple[str, str]:
    """'label=path' or a bare path, labelled by its file stem"""
    label, sep, path = text.partition("=")
    if not sep:
        return Path(text).stem, text
    if not label or not path:
        raise argparse.ArgumentTypeError(f"expected label=path, got {text!r}")
    return label, path


# Config files

def load_model(model: type, path: Optional[str]) -> BaseModel:
    if path is None:
        return model()
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"Config file {path} does not exist")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})")
    return validate_model(model, raw, path)


def validate_model(model: type, raw: dict, source: str = "config") -> BaseModel:
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "<root>"
        raise ConfigError(f"{source}: {where}: {first['msg']}")


def with_overrides(model: BaseModel, **overrides) -> BaseModel:
    """Re-validate ``model`` with the given nested keys replaced; None values are skipped"""
    data = model.model_dump(mode="json")
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = data
        *parents, leaf = dotted.split("__")
        for key in parents:
            node = node[key]
        node[leaf] = value
    return validate_model(type(model), data, "command line")


def echo_config(out_dir: Path, model: BaseModel) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / CONFIG_ECHO
    path.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def checkpoint_run(ckpt: Checkpoint, config_path: Optional[str]) -> RunConfig:
    """The run config stored in the checkpoint, or a compatible one from --config"""
    if config_path is None:
        return ckpt.run
    run = load_model(RunConfig, config_path)
    if run.fingerprint() != ckpt.config_fingerprint:
        raise FingerprintMismatchError(
            f"{config_path} declares a different architecture or training config than the checkpoint "
            f"({run.fingerprint()[:12]} vs {ckpt.config_fingerprint[:12]})"
        )
    return run


# Commands

def cmd_synth(args: argparse.Namespace) -> None:
    cfg = load_model(SynthConfig, args.config)
    height, width = args.grid if args.grid else (None, None)
    cfg = with_overrides(
        cfg,
        grid_h=height,
        grid_w=width,
        frames=args.frames,
        seed=args.seed,
        missing_fraction=args.missing_fraction,
        noise_sigma=args.noise_sigma,
    )
    out = Path(args.out)
    echo_config(out, cfg)
    predictors, target = synth_advection(**cfg.model_dump())
    paths = [write_cube(out / "predictors.smgd", predictors), write_cube(out / "target.smgd", target)]
    for path, cube in zip(paths, (predictors, target)):
        if ingest(path).shape != cube.shape:
            raise FormatError(f"{path} did not read back with dims {cube.shape}")
    logger.info("[SYNTH] wrote %s", ", ".join(str(p) for p in paths))


def resume_state(path: str, run: RunConfig, override_lr: bool) -> Tuple[NetworkParams, Optional[AdamState], int]:
    """
    Weights, Adam moments and epoch count of an earlier run. The architecture
    must match; the training config may differ (more epochs, a new rate).
    """
    ckpt = load_checkpoint(path)
    if ckpt.run.architecture != run.architecture:
        raise FingerprintMismatchError(f"{path} was trained with a different architecture; cannot resume from it")
    params = ckpt.params.astype(np.dtype(run.precision))
    optimizer = ckpt.optimizer
    if optimizer is None:
        logger.warning("[EPOCH] %s holds no optimizer state; Adam restarts from zero moments", path)
    elif override_lr:
        optimizer.lr = run.train.learning_rate
    logger.info("[EPOCH] resuming from %s after %d epoch(s)", path, ckpt.epochs_trained)
    return params, optimizer, ckpt.epochs_trained


def cmd_train(args: argparse.Namespace) -> None:
    run = with_overrides(
        load_model(RunConfig, args.config),
        seed=args.seed,
        train__seed=args.seed,
        train__epochs=args.epochs,
        train__learning_rate=args.lr,
    )
    out = Path(args.out)
    echo_config(out, run)
    history_path = out / "history.csv"

    predictors = ingest(args.data, run.data.cadence_days)
    target = ingest(args.target, run.data.cadence_days)
    train_set, val_set = split(prepare_windows(predictors, target, run), run.split)
    params = build_network(run.architecture, seed=run.seed, dtype=np.dtype(run.precision))
    optimizer, epochs_before = None, 0
    if args.resume:
        params, optimizer, epochs_before = resume_state(args.resume, run, args.lr is not None)

    history: List[HistoryRow] = []

    def flush(row: HistoryRow) -> None:
        history.append(row)
        write_history_csv(history_path, history)

    write_history_csv(history_path, history)
    try:
        result = train(params, train_set, val_set, run.train, optimizer=optimizer, on_epoch=flush)
    except TrainingDivergedError:
        logger.error("[EPOCH] training diverged; %d completed epoch(s) kept in %s", len(history), history_path)
        raise

    ckpt_path = save_checkpoint(
        out / "checkpoint.smgc",
        result.params,
        run,
        optimizer=result.optimizer,
        norm_stats=train_set.stats,
        epochs_trained=epochs_before + len(result.history),
    )
    load_checkpoint(ckpt_path, run.fingerprint())
    if len(read_history_csv(history_path)) != len(result.history):
        raise FormatError(f"{history_path} does not hold {len(result.history)} rows")


def cmd_evaluate(args: argparse.Namespace) -> None:
    ckpt = load_checkpoint(args.checkpoint)
    run = checkpoint_run(ckpt, args.config)
    if ckpt.norm_stats is None:
        raise DataError(f"{args.checkpoint} carries no normalization statistics")
    out = Path(args.out)
    echo_config(out, run)

    predictors = ingest(args.data, run.data.cadence_days)
    target = ingest(args.target, run.data.cadence_days)
    test = holdout_windows(predictors, target, run, ckpt.norm_stats)
    params = ckpt.params.astype(np.dtype(run.precision))

    model = evaluate_model(params, test, ckpt.epochs_trained, run.ssim)
    baseline = persistence_baseline(test, run.ssim)
    write_metrics_csv(out / "metrics.csv", model.metrics)
    write_metrics_csv(out / "baseline.csv", baseline.metrics)
    write_ssim_csv(out / "ssim.csv", model.ssim_rows)

    forecast = DatasetCube(
        values=inverse_transform(model.predictions[:, -1], ckpt.norm_stats.target),
        time_axis=test.sample_dates,
        feature_names=[TARGET_FEATURE],
        units=[TARGET_UNIT],
        bbox=target.bbox,
    )
    write_cube(out / "predictions.smgd", forecast)

    if len(ssim_over_time(out / "ssim.csv")) != len(test):
        raise FormatError(f"{out / 'ssim.csv'} does not hold one row per test window")


def cmd_predict(args: argparse.Namespace) -> None:
    ckpt = load_checkpoint(args.checkpoint)
    run = checkpoint_run(ckpt, args.config)
    if ckpt.norm_stats is None:
        raise DataError(f"{args.checkpoint} carries no normalization statistics; cannot normalize inputs or denormalize forecasts")
    out = Path(args.out)
    echo_config(out.parent, run)

    predictors = ingest(args.data, run.data.cadence_days)
    samples, dates = forecast_inputs(predictors, run, ckpt.norm_stats)
    params = ckpt.params.astype(np.dtype(run.precision))
    outputs = predict_samples(params, samples)[:, -1]

    normalized = DatasetCube(outputs, dates, [TARGET_FEATURE], [NORMALIZED_UNIT], predictors.bbox)
    physical = DatasetCube(inverse_transform(outputs, ckpt.norm_stats.target), dates, [TARGET_FEATURE], [TARGET_UNIT], predictors.bbox)
    twin = out.with_name(f"{out.stem}_denorm{out.suffix or '.smgd'}")
    for path, cube in ((out, normalized), (twin, physical)):
        write_cube(path, cube)
        if ingest(path).shape != cube.shape:
            raise FormatError(f"{path} did not read back with dims {cube.shape}")
    logger.info("[PREDICT] %d forecast frames %s..%s -> %s", len(dates), normalized.dates()[0], normalized.dates()[-1], out)


def cmd_report(args: argparse.Namespace) -> None:
    labels: Dict[str, str] = {}
    for label, path in args.ssim or []:
        if label in labels:
            raise ConfigError(f"SSIM label {label!r} given twice")
        labels[label] = path
    cfg = ReportConfig(
        history=args.history,
        ssim=labels,
        predictions=args.predictions,
        target=args.target,
        point=args.point,
        frames=args.frames or 0,
    )
    out = Path(args.out)
    echo_config(out, cfg)
    written = write_report(
        out,
        history=cfg.history,
        ssim=cfg.ssim,
        predictions=ingest(cfg.predictions) if cfg.predictions else None,
        target=ingest(cfg.target) if cfg.target else None,
        point=cfg.point,
        frames=cfg.frames,
    )
    if not written:
        raise DataError("Nothing to report: give --history, --ssim, --point or --frames")


def format_summary(summary: ArchitectureSummary) -> str:
    header = f"{'Layer':<12}{'Type':<20}{'Output shape':<32}{'Params':>10}"
    lines = [header, "-" * len(header)]
    for row in summary.layers:
        shape = "(" + ", ".join("None" if d is None else str(d) for d in row.output_shape) + ")"
        lines.append(f"{row.name:<12}{row.layer_type:<20}{shape:<32}{row.params:>10}")
    lines.append("-" * len(header))
    lines.append(f"Total params: {summary.total_params}")
    lines.append(f"Trainable params: {summary.trainable_params}")
    lines.append(f"Non-trainable params: {summary.non_trainable_params}")
    return "\n".join(lines)


def cmd_summary(args: argparse.Namespace) -> None:
    run = load_model(RunConfig, args.config)
    height, width = args.grid if args.grid else (run.grid.height, run.grid.width)
    print(format_summary(layer_summary(run.architecture, height, width, run.window.t_in)))


def cmd_serve(args: argparse.Namespace) -> None:
    import uvicorn

    uvicorn.run(
        "smogcast.main:app",
        host=args.host,
        port=args.port,
        reload=settings.DEBUG,
        log_level=settings.LOG_LEVEL.lower(),
    )


# Parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smogcast", description="ConvLSTM aerosol index forecasting")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("synth", help="generate a synthetic advection dataset")
    p.add_argument("--grid", type=grid_arg, help="HxW")
    p.add_argument("--frames", type=positive_int)
    p.add_argument("--seed", type=int)
    p.add_argument("--missing-fraction", type=float)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--config", help="SynthConfig JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("train", help="train a network and write checkpoint.smgc and history.csv")
    p.add_argument("--data", required=True, help="predictor cube (.smgd)")
    p.add_argument("--target", required=True, help="AER_AI cube (.smgd)")
    p.add_argument("--config", help="RunConfig JSON")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--resume", help="checkpoint whose weights and Adam state to continue from")
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on the test range")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--config", help="RunConfig JSON; must match the checkpoint's fingerprint")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("predict", help="forecast every window of a predictor cube")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="RunConfig JSON; must match the checkpoint's fingerprint")
    p.add_argument("--out", required=True, help="output cube; a _denorm twin is written beside it")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("report", help="write figure data as CSV")
    p.add_argument("--history")
    p.add_argument("--ssim", type=labelled_path, action="append", help="label=path, repeatable")
    p.add_argument("--predictions", help="forecast cube in physical units, e.g. evaluate's predictions.smgd")
    p.add_argument("--target")
    p.add_argument("--point", type=point_arg, help="lat_idx,lon_idx")
    p.add_argument("--frames", type=positive_int)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("summary", help="print the layer table")
    p.add_argument("--grid", type=grid_arg, help="HxW")
    p.add_argument("--config")
    p.set_defaults(handler=cmd_summary)

    p = sub.add_parser("serve", help="serve run directories over HTTP")
    p.add_argument("--host", default="0.0.0.0")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    configure_logging("DEBUG" if args.verbose else settings.LOG_LEVEL)
    try:
        args.handler(args)
    except SmogcastError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
