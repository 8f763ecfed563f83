"""Command line: ``tsfp {train,eval,predict,gradcheck,selftest} --config c.json``.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .config import ConfigError, ModelConfig, TrainConfig, _build
from .data import load_index
from .io import write_saliency
from .metrics import format_report
from .model import TSFPNet

COMMANDS = ("train", "eval", "predict", "gradcheck", "selftest")


@dataclass(frozen=True)
class DataConfig:
    train_root: str | None = None
    val_root: str | None = None
    test_root: str | None = None


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "runs"
    checkpoint: str | None = None


@dataclass(frozen=True)
class CliConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0
    max_eval_frames: int | None = None


def parse_config(data: dict) -> CliConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(data) - {"model", "train", "data", "output", "seed", "max_eval_frames"})
    if unknown:
        raise ConfigError(f"config: unknown key(s) {', '.join(unknown)}")
    return CliConfig(
        model=ModelConfig.from_dict(data.get("model")),
        train=TrainConfig.from_dict(data.get("train")),
        data=_build(DataConfig, data.get("data"), "data"),
        output=_build(OutputConfig, data.get("output"), "output"),
        seed=int(data.get("seed", 0)),
        max_eval_frames=data.get("max_eval_frames"),
    )


def load_config(path) -> CliConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return parse_config(data)


def _require_dir(value: str | None, key: str) -> Path:
    if not value:
        raise ConfigError(f"data.{key} is required for this command")
    p = Path(value)
    if not p.is_dir():
        raise ConfigError(f"data.{key}: directory {p} does not exist")
    return p


def _checkpoint_path(cfg: CliConfig) -> Path | None:
    if cfg.output.checkpoint is None:
        default = Path(cfg.output.dir) / "best.tsfpw"
        return default if default.exists() else None
    p = Path(cfg.output.checkpoint)
    if not p.exists():
        raise ConfigError(f"output.checkpoint: {p} does not exist")
    return p


def _model(cfg: CliConfig) -> TSFPNet:
    ckpt = _checkpoint_path(cfg)
    if ckpt is None:
        return TSFPNet.init(cfg.model, seed=cfg.seed)
    model = TSFPNet.load(ckpt)
    if model.config != cfg.model:
        raise ConfigError(f"checkpoint {ckpt} was trained with a different model config")
    return model


def _size(cfg: CliConfig) -> tuple[int, int]:
    return (cfg.model.height, cfg.model.width)


def cmd_train(cfg: CliConfig, args) -> int:
    from .train import train

    train_root = _require_dir(cfg.data.train_root, "train_root")
    val_root = _require_dir(cfg.data.val_root, "val_root")
    if cfg.train.clip_len != cfg.model.clip_len:
        raise ConfigError("train.clip_len must equal model.clip_len")
    model = TSFPNet.init(cfg.model, seed=cfg.seed)
    result = train(model, load_index(train_root, _size(cfg)), load_index(val_root, _size(cfg)), cfg.train,
                   out_dir=cfg.output.dir)
    print(f"updates={result.updates} best_epoch={result.best_epoch} best_val_nss={result.best_val_nss:.6f}")
    return 0


def cmd_eval(cfg: CliConfig, args) -> int:
    from .inference import evaluate

    root = _require_dir(cfg.data.test_root, "test_root")
    model = _model(cfg)
    records, notes = evaluate(model, load_index(root, _size(cfg)), cfg.max_eval_frames)
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    report = format_report(records)
    (out / "eval_report.csv").write_text(report + "".join(f"# note: {n}\n" for n in notes))
    print(report.splitlines()[-2])
    return 0


def cmd_predict(cfg: CliConfig, args) -> int:
    from .inference import predict_dataset_video

    root = _require_dir(cfg.data.test_root, "test_root")
    index = load_index(root, _size(cfg))
    if args.video is None:
        raise ConfigError("predict needs --video <id>")
    if args.video not in index.ids:
        raise ConfigError(f"video {args.video!r} not found under {root}")
    model = _model(cfg)
    maps = predict_dataset_video(model, index[args.video], index.size)
    out = Path(cfg.output.dir) / "predictions" / args.video
    out.mkdir(parents=True, exist_ok=True)
    for k, S in enumerate(maps, start=1):
        write_saliency(out / f"{k:06d}.pgm", S)
    print(f"wrote {len(maps)} maps to {out}")
    return 0


def cmd_gradcheck(cfg, args) -> int:
    from .selftest import format_rows, gradient_suite

    rows = gradient_suite(seed=args.seed)
    print(format_rows(rows, "op"))
    return 0 if all(ok for *_, ok in rows) else 1


def cmd_selftest(cfg, args) -> int:
    from .selftest import format_rows, gradient_suite, oracle_suite

    rows = oracle_suite(trials=args.trials, seed=args.seed)
    print(format_rows(rows, "oracle"))
    grad = gradient_suite(seed=args.seed)
    print(format_rows(grad, "gradient"))
    return 0 if all(ok for *_, ok in rows + grad) else 1


HANDLERS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "gradcheck": cmd_gradcheck,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsfp", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--video", help="video id for predict")
    parser.add_argument("--seed", type=int, default=0, help="seed for gradcheck/selftest")
    parser.add_argument("--trials", type=int, default=200, help="random trials per selftest oracle")
    return parser


def _thread_limit():
    value = os.environ.get("TSFP_THREADS")
    if not value:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(value))


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = None
        if args.config is not None:
            cfg = load_config(args.config)
        elif args.command not in ("selftest", "gradcheck"):
            raise ConfigError(f"{args.command} requires --config <path>")
        with _thread_limit():
            return HANDLERS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
