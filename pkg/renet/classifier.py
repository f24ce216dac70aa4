# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Fully-connected head and the softmax log-likelihood loss."""

from dataclasses import dataclass

import numpy as np

from renet.errors import LabelError, ShapeError
from renet.numerics import check_same_dtype, matmul, pointwise, pointwise_grad

FC_ACTIVATIONS = ("relu", "identity")


@dataclass
class FcParams:
    """One fully-connected layer: activation(W x + b)"""

    weight: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in FC_ACTIVATIONS:
            raise ValueError(
                f"Unsupported FC activation '{self.activation}'. Options are relu, identity"
            )
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(
                f"FC weight {self.weight.shape} and bias {self.bias.shape} are inconsistent"
            )

    @property
    def in_features(self) -> int:
        return self.weight.shape[1]

    @property
    def out_features(self) -> int:
        return self.weight.shape[0]

    @classmethod
    def initialize(
        cls,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        activation: str = "relu",
        dtype=np.float64,
    ) -> "FcParams":
        limit = np.sqrt(6.0 / (in_features + out_features))
        weight = rng.uniform(-limit, limit, size=(out_features, in_features))
        return cls(weight.astype(dtype), np.zeros(out_features, dtype=dtype), activation)


def flatten(H: np.ndarray, batched: bool = False) -> np.ndarray:
    """Row-major (i, j, feature) flatten; keeps axis 0 when ``batched``"""
    if batched:
        return H.reshape(H.shape[0], -1)
    return H.reshape(-1)


def unflatten(x: np.ndarray, shape: tuple[int, int, int]) -> np.ndarray:
    return x.reshape(x.shape[:-1] + tuple(shape))


@dataclass
class FcCache:
    x: np.ndarray
    y: np.ndarray


def fc_forward(x: np.ndarray, params: FcParams) -> tuple[np.ndarray, FcCache]:
    """activation(x @ W.T + b) over the last axis"""
    if x.shape[-1] != params.in_features:
        raise ShapeError(
            f"FC layer expects {params.in_features} inputs, got shape {x.shape}"
        )
    check_same_dtype(x, params.weight)
    y = pointwise(matmul(x, params.weight.T) + params.bias, params.activation)
    return y, FcCache(x=x, y=y)


def fc_backward(
    params: FcParams, cache: FcCache, grad_y: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dL/dx, dL/dW, dL/db); batch rows are reduced in order"""
    pre = grad_y * pointwise_grad(cache.y, params.activation)
    rows_pre = pre.reshape(-1, params.out_features)
    rows_x = cache.x.reshape(-1, params.in_features)
    grad_weight = matmul(rows_pre.T, rows_x)
    grad_bias = rows_pre.sum(axis=0)
    grad_x = matmul(pre, params.weight)
    return grad_x, grad_weight, grad_bias


def softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax over the last axis, evaluated in float64"""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_nll(
    logits: np.ndarray, labels
) -> tuple[np.ndarray, np.ndarray]:
    """Negative log-likelihood of the labels under softmax(logits)

    Args:
        logits (np.ndarray): (K,) or (N, K)
        labels (int | np.ndarray): Label or (N,) labels in [0, K)

    Returns:
        tuple: loss (scalar float or (N,) float64) and dL/dlogits with the
        logits dtype (softmax minus one-hot)
    """
    single = np.ndim(logits) == 1
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    y = np.atleast_1d(np.asarray(labels))
    K = z.shape[-1]
    if y.shape != (z.shape[0],):
        raise ShapeError(f"{y.shape[0]} labels for {z.shape[0]} logit rows")
    if not np.issubdtype(y.dtype, np.integer) or y.min() < 0 or y.max() >= K:
        raise LabelError(f"Labels must be integers in [0, {K}), got {labels}")
    shifted = z - z.max(axis=-1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=-1))
    rows = np.arange(z.shape[0])
    loss = log_norm - shifted[rows, y]
    grad = np.exp(shifted - log_norm[:, None])
    grad[rows, y] -= 1.0
    grad = grad.astype(np.asarray(logits).dtype, copy=False)
    if single:
        return float(loss[0]), grad[0]
    return loss, grad


def predict(logits: np.ndarray) -> np.ndarray:
    """Arg-max class per row; ties resolve to the lowest index"""
    return np.argmax(logits, axis=-1)
