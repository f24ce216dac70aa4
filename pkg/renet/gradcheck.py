# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Central finite-difference check of the analytic gradients.

The loss is the summed NLL of a small random batch, evaluated in float64
with dropout and input masking disabled. For each parameter tensor the
relative error is |a - n| / max(|a| + |n|, 1e-12) with Euclidean norms of
the analytic (a) and numerical (n) gradients.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from renet.cells import CellKind
from renet.classifier import softmax_nll
from renet.config import ModelConfig
from renet.errors import GradcheckFailure
from renet.model import ReNetModel, build_model
from renet.numerics import child_rng

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-5
DEFAULT_THRESHOLD = 1e-4


def tiny_config(cell_kind: str = "gru", seed: int = 0) -> ModelConfig:
    """6x6x2 input, one 2x2 ReNet layer with d=3, one FC of 8, three classes"""
    return ModelConfig.from_dict(
        {
            "dataset": "tiny",
            "input_shape": [6, 6, 2],
            "num_classes": 3,
            "n_renet": 1,
            "patch_sizes": ["2x2"],
            "renet_hidden": [3],
            "renet_cells": [cell_kind],
            "n_fc": 1,
            "fc_hidden": [8],
            "fc_activation": ["relu"],
            "dropout_renet": 0.0,
            "dropout_fc": 0.0,
            "input_mask": 0.0,
            "seed": seed,
            "dtype": "f64",
        }
    )


@dataclass
class GradcheckReport:
    errors: dict[str, float] = field(default_factory=dict)
    threshold: float = DEFAULT_THRESHOLD

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error <= self.threshold

    def worst(self, n: Optional[int] = None) -> list[tuple[str, float]]:
        ranked = sorted(self.errors.items(), key=lambda item: (-item[1], item[0]))
        return ranked if n is None else ranked[:n]

    def lines(self, n: Optional[int] = None) -> list[str]:
        return [f"{name:<28} {error:.3e}" for name, error in self.worst(n)]

    def raise_for_failure(self) -> None:
        if not self.passed:
            listing = "; ".join(f"{name} {error:.3e}" for name, error in self.worst(5))
            raise GradcheckFailure(
                f"Max relative error {self.max_error:.3e} exceeds {self.threshold:.0e}: {listing}"
            )


def _loss(model: ReNetModel, x: np.ndarray, y: np.ndarray) -> float:
    logits, _ = model.forward(x)
    losses, _ = softmax_nll(logits, y)
    return float(np.sum(losses))


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    diff = float(np.linalg.norm(analytic - numeric))
    scale = float(np.linalg.norm(analytic) + np.linalg.norm(numeric))
    return diff / max(scale, 1e-12)


def check_gradients(
    model: ReNetModel,
    x: np.ndarray,
    y: np.ndarray,
    epsilon: float = DEFAULT_EPSILON,
    threshold: float = DEFAULT_THRESHOLD,
) -> GradcheckReport:
    """Compare ``model.loss_and_grads`` with central differences for every parameter"""
    _, _, analytic = model.loss_and_grads(x, y, reduction="sum")
    report = GradcheckReport(threshold=threshold)
    for name, value in model.params.items():
        numeric = np.zeros_like(value)
        flat, grad = value.reshape(-1), numeric.reshape(-1)
        for index in range(flat.size):
            saved = flat[index]
            flat[index] = saved + epsilon
            plus = _loss(model, x, y)
            flat[index] = saved - epsilon
            minus = _loss(model, x, y)
            flat[index] = saved
            grad[index] = (plus - minus) / (2 * epsilon)
        report.errors[name] = relative_error(analytic[name], numeric)
        logger.debug("%s: relative error %.3e", name, report.errors[name])
    return report


def gradcheck(
    cfg: Optional[ModelConfig] = None,
    cell_kind: Optional[str] = None,
    epsilon: float = DEFAULT_EPSILON,
    threshold: float = DEFAULT_THRESHOLD,
    batch_size: int = 2,
) -> GradcheckReport:
    """Gradient check of a small model

    Args:
        cfg (ModelConfig, optional): Model to check; defaults to ``tiny_config``.
            Forced to f64 with dropout and input masking off.
        cell_kind (str, optional): Override the cell kind of every ReNet layer
        epsilon (float): Finite-difference step
        threshold (float): Largest acceptable relative error
        batch_size (int): Number of random samples in the loss

    Returns:
        GradcheckReport: Per-tensor relative errors
    """
    values = (cfg or tiny_config()).to_dict()
    if cell_kind is not None:
        values["renet_cells"] = [CellKind.parse(cell_kind).value] * values["n_renet"]
    values.update(dtype="f64", dropout_renet=0.0, dropout_fc=0.0, input_mask=0.0)
    cfg = ModelConfig.from_dict(values)
    model = build_model(cfg)
    rng = child_rng(cfg.seed, 2)
    x = rng.standard_normal((batch_size,) + cfg.first_layer_shape)
    y = rng.integers(0, cfg.num_classes, size=batch_size)
    report = check_gradients(model, x, y, epsilon, threshold)
    logger.info(
        "Gradient check (%s): max relative error %.3e over %d tensors",
        ",".join(cfg.renet_cells), report.max_error, len(report.errors),
    )
    return report
