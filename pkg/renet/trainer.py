# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Minibatch training with Adam, dropout, input masking and early stopping.

One persistent generator (stream (seed, 1)) shuffles the training set and
draws every mask; its state is stored in each checkpoint so a resumed run
continues with exactly the draws the uninterrupted run would have made.
Augmentation uses per-sample streams (seed, epoch, index).

Results are identical for identical config, seed and thread count.
"""

import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from tqdm import tqdm

from renet.augment import augment_batch
from renet.checkpoint import capture, load_checkpoint, restore, save_checkpoint
from renet.classifier import softmax_nll
from renet.config import ModelConfig
from renet.data import Dataset, DatasetSplits, load_dataset, subsample
from renet.errors import EmptyDatasetError, NonFiniteError, TrainingDivergedError
from renet.model import ReNetModel
from renet.numerics import as_dtype, cast, child_rng, restore_rng, rng_state
from renet.optimizer import Adam, AdamConfig
from renet.preprocessing import Preprocessor

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def prepare_splits(
    cfg: ModelConfig, data_dir: Optional[PathLike] = None
) -> tuple[DatasetSplits, Preprocessor]:
    """Load, subsample (train_limit), preprocess and cast the three splits"""
    splits = load_dataset(cfg.dataset, data_dir, seed=cfg.seed)
    splits = splits._replace(train=subsample(splits.train, cfg.train_limit, cfg.seed))
    preprocessor = Preprocessor.from_config(cfg)
    splits = preprocessor.fit_apply(splits)
    dtype = as_dtype(cfg.dtype)
    splits = DatasetSplits(*(split.with_images(cast(split.images, dtype)) for split in splits))
    return splits, preprocessor


@dataclass
class EvalResult:
    error_rate: float
    mean_nll: float
    predictions: np.ndarray


def evaluate(
    model: ReNetModel,
    dataset: Dataset,
    batch_size: int = 256,
    executor: Optional[ThreadPoolExecutor] = None,
) -> EvalResult:
    """Dropout-free error rate and mean NLL over a dataset"""
    if len(dataset) == 0:
        raise EmptyDatasetError(f"cannot evaluate the empty {dataset.split} split")
    logits = model.logits(dataset.images, batch_size, executor)
    losses, _ = softmax_nll(logits, dataset.labels)
    predictions = np.argmax(logits, axis=-1)
    errors = int(np.count_nonzero(predictions != dataset.labels))
    return EvalResult(
        error_rate=errors / len(dataset),
        mean_nll=float(np.mean(losses)),
        predictions=predictions,
    )


class EarlyStopping:
    """Track the best validation error; stop after ``patience`` epochs
    without a strict improvement (ties keep the earlier epoch)

    Args:
        patience (int): Epochs without improvement before stopping;
            0 stops after the first epoch
    """

    def __init__(self, patience: int = 10):
        self.patience = patience
        self.best_error: Optional[float] = None
        self.best_epoch: Optional[int] = None
        self.epochs_since_best = 0

    def update(self, epoch: int, valid_error: float) -> bool:
        """Record an epoch; returns True when it is the new best"""
        if self.best_error is None or valid_error < self.best_error:
            self.best_error = valid_error
            self.best_epoch = epoch
            self.epochs_since_best = 0
            return True
        self.epochs_since_best += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.best_epoch is not None and self.epochs_since_best >= self.patience


class MetricsWriter:
    """One JSON object per line and epoch"""

    def __init__(self, path: Optional[PathLike], resume_after: Optional[int] = None):
        self.path = Path(path) if path else None
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        kept = []
        if resume_after is not None and self.path.exists():
            kept = [
                line
                for line in self.path.read_text(encoding="utf-8").splitlines()
                if line.strip() and json.loads(line)["epoch"] <= resume_after
            ]
        self.path.write_text("".join(f"{line}\n" for line in kept), encoding="utf-8")

    def write(self, record: dict) -> None:
        if self.path is None:
            return
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(record) + "\n")


def read_metrics(path: PathLike) -> list[dict]:
    with Path(path).open("r", encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]


@dataclass
class TrainOptions:
    threads: int = 1
    checkpoint: Optional[PathLike] = None
    resume: bool = False
    metrics: Optional[PathLike] = None
    progress: bool = True


@dataclass
class TrainingResult:
    history: list[dict] = field(default_factory=list)
    best_epoch: Optional[int] = None
    best_valid_error: Optional[float] = None
    epochs_run: int = 0
    stopped_early: bool = False


def adam_config(cfg: ModelConfig) -> AdamConfig:
    return AdamConfig(
        learning_rate=cfg.learning_rate,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        epsilon=cfg.epsilon,
        clip_norm=cfg.clip_norm,
    )


def _sibling(path: PathLike, suffix: str) -> Path:
    path = Path(path)
    return path.with_name(f"{path.name}.{suffix}")


def _train_epoch(
    model: ReNetModel,
    optimizer: Adam,
    train: Dataset,
    rng: np.random.Generator,
    epoch: int,
    options: TrainOptions,
    executor: Optional[ThreadPoolExecutor],
) -> tuple[float, float]:
    cfg = model.cfg
    order = rng.permutation(len(train))
    batches = range(0, len(train), cfg.batch_size)
    total_nll, total_errors = 0.0, 0
    progress = tqdm(
        batches,
        desc=f"epoch {epoch}",
        leave=False,
        disable=not options.progress or not sys.stderr.isatty(),
    )
    for start in progress:
        indices = order[start : start + cfg.batch_size]
        x = train.images[indices]
        if cfg.flip or cfg.shift:
            x = augment_batch(x, cfg.seed, epoch, indices, cfg.flip, cfg.shift)
        noise = model.sample_noise(rng, len(indices))
        losses, logits, grads = model.loss_and_grads(
            x, train.labels[indices], noise, executor, shards=options.threads
        )
        if not np.all(np.isfinite(losses)):
            raise TrainingDivergedError(
                f"Non-finite training loss in epoch {epoch} (batch at {start})"
            )
        try:
            optimizer.step(grads)
        except NonFiniteError as exc:
            raise TrainingDivergedError(f"Non-finite gradient in epoch {epoch}: {exc}") from exc
        total_nll += float(np.sum(losses))
        total_errors += int(np.count_nonzero(np.argmax(logits, axis=-1) != train.labels[indices]))
        progress.set_postfix(nll=f"{np.mean(losses):.4f}")
    return total_nll / len(train), total_errors / len(train)


def train_loop(
    model: ReNetModel, splits: DatasetSplits, options: Optional[TrainOptions] = None
) -> TrainingResult:
    """Train until early stopping or ``max_epochs``; the model ends up holding
    the parameters of the best validation epoch

    Args:
        model (ReNetModel): Model to train in place
        splits (DatasetSplits): Preprocessed data in the model's dtype
        options (TrainOptions, optional): Threads, checkpoint and metrics paths

    Returns:
        TrainingResult: Per-epoch history and the selected epoch
    """
    options = options or TrainOptions()
    cfg = model.cfg
    optimizer = Adam(model.params, adam_config(cfg))
    rng = child_rng(cfg.seed, 1)
    stopper = EarlyStopping(cfg.patience)
    start_epoch = 1
    best_params = {name: value.copy() for name, value in model.params.items()}
    checkpoint = Path(options.checkpoint) if options.checkpoint else None

    resumed_from = None
    if options.resume and checkpoint is not None and checkpoint.exists():
        ckpt = load_checkpoint(checkpoint)
        restore(ckpt, model, optimizer)
        rng = restore_rng(ckpt.rng)
        stopper.best_error = ckpt.best_valid_error
        stopper.best_epoch = ckpt.best_epoch
        stopper.epochs_since_best = ckpt.epochs_since_best
        start_epoch = ckpt.epoch + 1
        resumed_from = ckpt.epoch
        best_file = _sibling(checkpoint, "best")
        best_params = (
            load_checkpoint(best_file).params if best_file.exists() else
            {name: value.copy() for name, value in model.params.items()}
        )
        logger.info("Resumed from %s at epoch %d", checkpoint, ckpt.epoch)
    elif options.resume:
        logger.warning("No checkpoint to resume from; starting a fresh run")

    metrics = MetricsWriter(options.metrics, resume_after=resumed_from)
    result = TrainingResult()
    executor = ThreadPoolExecutor(options.threads) if options.threads > 1 else None
    try:
        epoch = start_epoch
        while epoch <= cfg.max_epochs and not stopper.should_stop:
            started = time.perf_counter()
            try:
                train_nll, train_error = _train_epoch(
                    model, optimizer, splits.train, rng, epoch, options, executor
                )
            except TrainingDivergedError:
                if checkpoint is not None:
                    path = save_checkpoint(
                        _sibling(checkpoint, "diverged"),
                        capture(model, optimizer, epoch, rng_state(rng)),
                    )
                    logger.error("Training diverged; diagnostic checkpoint written to %s", path)
                raise
            valid = evaluate(model, splits.valid, executor=executor)
            improved = stopper.update(epoch, valid.error_rate)
            record = {
                "epoch": epoch,
                "train_nll": train_nll,
                "train_error": train_error,
                "valid_error": valid.error_rate,
                "valid_nll": valid.mean_nll,
                "wall_time": time.perf_counter() - started,
            }
            metrics.write(record)
            result.history.append(record)
            logger.info(
                "epoch %d: train nll %.4f, train error %.4f, valid error %.4f%s",
                epoch, train_nll, train_error, valid.error_rate, " (best)" if improved else "",
            )
            progress = {
                "best_valid_error": stopper.best_error,
                "best_epoch": stopper.best_epoch,
                "epochs_since_best": stopper.epochs_since_best,
            }
            if improved:
                best_params = {name: value.copy() for name, value in model.params.items()}
                if checkpoint is not None:
                    save_checkpoint(
                        _sibling(checkpoint, "best"),
                        capture(model, optimizer, epoch, rng_state(rng), **progress),
                    )
            if checkpoint is not None:
                save_checkpoint(checkpoint, capture(model, optimizer, epoch, rng_state(rng), **progress))
            result.epochs_run += 1
            epoch += 1
    finally:
        if executor is not None:
            executor.shutdown()

    result.best_epoch = stopper.best_epoch
    result.best_valid_error = stopper.best_error
    result.stopped_early = stopper.should_stop and epoch <= cfg.max_epochs
    model.load_parameters(best_params)
    if stopper.best_epoch is not None:
        logger.info(
            "Selected epoch %d with validation error %.4f", stopper.best_epoch, stopper.best_error
        )
    return result
