# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Command line interface: ``python -m renet <command>``.

Commands: train, eval, gradcheck, plot, dry-run. Errors raised by the
library exit with status 2; a failed gradient check exits with status 1.
"""

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from pathlib import Path
from typing import Optional, Sequence

from renet.chart import plot_metrics
from renet.checkpoint import load_checkpoint, restore
from renet.config import ModelConfig, load_config
from renet.errors import GradcheckFailure, RenetError
from renet.gradcheck import DEFAULT_EPSILON, DEFAULT_THRESHOLD, gradcheck, tiny_config
from renet.model import build_model, describe
from renet.trainer import TrainOptions, evaluate, prepare_splits, read_metrics, train_loop

logger = logging.getLogger("renet")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")


def _add_model_flags(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    parser.add_argument("--config", type=Path, required=config_required, help="YAML config file")
    parser.add_argument("--seed", type=int, default=None, help="Override the config seed")
    parser.add_argument("--dtype", choices=("f32", "f64"), default=None, help="Override the dtype")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="renet", description="ReNet image classifier")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="Train a model with early stopping")
    _add_model_flags(train)
    train.add_argument("--data-dir", type=Path, default=None, help="Dataset directory")
    train.add_argument("--checkpoint", type=Path, default=None, help="Checkpoint file")
    train.add_argument("--resume", action="store_true", help="Resume from --checkpoint")
    train.add_argument("--threads", type=int, default=1, help="Worker threads (and batch shards)")
    train.add_argument("--metrics", type=Path, default=None, help="JSON-lines metrics log")
    train.add_argument("--no-progress", action="store_true", help="Disable progress bars")
    _add_common(train)

    evaluate_cmd = commands.add_parser("eval", help="Evaluate a checkpoint")
    _add_model_flags(evaluate_cmd, config_required=False)
    evaluate_cmd.add_argument("--checkpoint", type=Path, required=True, help="Checkpoint file")
    evaluate_cmd.add_argument("--data-dir", type=Path, default=None, help="Dataset directory")
    evaluate_cmd.add_argument("--split", choices=("train", "valid", "test"), default="test")
    evaluate_cmd.add_argument("--threads", type=int, default=1, help="Worker threads")
    _add_common(evaluate_cmd)

    check = commands.add_parser("gradcheck", help="Finite-difference gradient check")
    _add_model_flags(check, config_required=False)
    check.add_argument("--cell", choices=("tanh", "gru", "lstm"), default=None)
    check.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    check.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    _add_common(check)

    plot = commands.add_parser("plot", help="Render a metrics log to PNG")
    plot.add_argument("--metrics", type=Path, required=True, help="JSON-lines metrics log")
    plot.add_argument("--output", type=Path, required=True, help="PNG file to write")
    plot.add_argument("--title", default="Training curves")
    plot.add_argument("--theme", default="DEFAULT", help="DEFAULT, GREYWOOF, BLUEMOUNTAIN, ORANGEPEEL")
    _add_common(plot)

    dry_run = commands.add_parser("dry-run", help="Print the feature-map chain of a config")
    _add_model_flags(dry_run)
    _add_common(dry_run)
    return parser


def _load(args: argparse.Namespace) -> ModelConfig:
    return load_config(args.config, seed=args.seed, dtype=args.dtype)


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _load(args)
    splits, _ = prepare_splits(cfg, args.data_dir)
    model = build_model(cfg)
    options = TrainOptions(
        threads=max(1, args.threads),
        checkpoint=args.checkpoint,
        resume=args.resume,
        metrics=args.metrics,
        progress=not args.no_progress,
    )
    result = train_loop(model, splits, options)
    test = evaluate(model, splits.test)
    summary = {
        "best_epoch": result.best_epoch,
        "best_valid_error": result.best_valid_error,
        "epochs_run": result.epochs_run,
        "test_error": test.error_rate,
        "test_nll": test.mean_nll,
    }
    print(json.dumps(summary))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    cfg = _load(args) if args.config else ModelConfig.from_dict(ckpt.config)
    splits, _ = prepare_splits(cfg, args.data_dir)
    model = build_model(cfg)
    restore(ckpt, model)
    threads = max(1, args.threads)
    with ThreadPoolExecutor(threads) if threads > 1 else nullcontext() as executor:
        result = evaluate(model, getattr(splits, args.split), executor=executor)
    print(
        json.dumps(
            {"split": args.split, "error_rate": result.error_rate, "mean_nll": result.mean_nll}
        )
    )
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    cfg = _load(args) if args.config else tiny_config(seed=args.seed or 0)
    report = gradcheck(cfg, args.cell, args.epsilon, args.threshold)
    for line in report.lines():
        print(line)
    print(f"max relative error {report.max_error:.3e} ({'pass' if report.passed else 'FAIL'})")
    report.raise_for_failure()
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    records = read_metrics(args.metrics)
    plot_metrics(records, args.output, args.title, str(args.metrics), args.theme)
    return 0


def cmd_dry_run(args: argparse.Namespace) -> int:
    cfg = _load(args)
    for line in describe(cfg):
        print(line)
    return 0


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "plot": cmd_plot,
    "dry-run": cmd_dry_run,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except GradcheckFailure as exc:
        logger.error("%s", exc)
        return 1
    except (RenetError, FileNotFoundError) as exc:
        logger.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
