# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""The full classifier: stacked ReNet layers, FC layers, softmax output.

Parameters live in one ordered registry (``ReNetModel.params``) whose
arrays are shared with the layer objects:

    renet{L}.{vfwd|vrev|hfwd|hrev}.{tensor}
    fc{K}.{weight|bias}

The last FC entry (K = n_fc) is the output layer with one row per class.
"""

import logging
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from renet.cells import CellInit
from renet.classifier import (
    FcCache,
    FcParams,
    fc_backward,
    fc_forward,
    flatten,
    predict,
    softmax_nll,
    unflatten,
)
from renet.config import ModelConfig
from renet.errors import CheckpointMismatchError, DTypeError, ShapeError
from renet.layer import (
    LayerNoise,
    ReNetLayerConfig,
    ReNetLayerParams,
    ReNetLayerState,
    layer_backward,
    layer_forward,
    layer_parameter_count,
)
from renet.numerics import as_dtype, child_rng, run_ordered

logger = logging.getLogger(__name__)


def parameter_count(cfg: ModelConfig) -> int:
    """Closed-form number of trainable scalars"""
    layers = cfg.layer_configs()
    total = sum(layer_parameter_count(layer) for layer in layers)
    width = int(np.prod(layers[-1].output_shape))
    for out in cfg.fc_hidden + [cfg.num_classes]:
        total += width * out + out
        width = out
    return total


def describe(cfg: ModelConfig) -> list[str]:
    """Feature-map chain and parameter counts, one line per layer

    Computed from the config alone, so it never allocates the weights.
    """
    w, h, c = cfg.first_layer_shape
    lines = [f"input        {w}x{h}x{c}"]
    layers = cfg.layer_configs()
    for index, layer in enumerate(layers):
        i, j, features = layer.output_shape
        lines.append(
            f"renet{index}       {layer.patch_w}x{layer.patch_h} {layer.cell_kind.value} "
            f"d={layer.hidden_dim} -> {i}x{j}x{features} "
            f"({layer_parameter_count(layer)} params)"
        )
    width = int(np.prod(layers[-1].output_shape))
    widths = cfg.fc_hidden + [cfg.num_classes]
    labels = cfg.fc_activation + ["output"]
    for index, (out, label) in enumerate(zip(widths, labels)):
        lines.append(
            f"fc{index}          {label} {width} -> {out} ({width * out + out} params)"
        )
        width = out
    lines.append(f"total        {parameter_count(cfg)} params")
    return lines


def feature_chain(cfg: ModelConfig) -> list[tuple[int, int, int]]:
    """Input shape followed by each ReNet layer's output shape"""
    return [cfg.first_layer_shape] + [layer.output_shape for layer in cfg.layer_configs()]


def _dropout_mask(rng: np.random.Generator, shape, rate: float, dtype) -> Optional[np.ndarray]:
    if rate <= 0.0:
        return None
    keep = 1.0 - rate
    return ((rng.random(shape) < keep) / keep).astype(dtype)


@dataclass
class ModelNoise:
    """Every random mask one training batch needs"""

    input_mask: Optional[np.ndarray] = None
    layers: list[LayerNoise] = field(default_factory=list)
    fc_masks: list[Optional[np.ndarray]] = field(default_factory=list)

    def shard(self, rows: slice) -> "ModelNoise":
        def cut(mask):
            return None if mask is None else mask[rows]

        return ModelNoise(
            input_mask=cut(self.input_mask),
            layers=[LayerNoise(cut(n.v_mask), cut(n.h_mask)) for n in self.layers],
            fc_masks=[cut(mask) for mask in self.fc_masks],
        )


@dataclass
class ForwardCache:
    layer_states: list[ReNetLayerState]
    fc_caches: list[FcCache]
    noise: ModelNoise
    feature_shape: tuple[int, ...]


class ReNetModel:
    """ReNet classifier with a named parameter registry

    Args:
        cfg (ModelConfig): Validated configuration
        layers (list[ReNetLayerParams]): One entry per ReNet layer
        fcs (list[FcParams]): Hidden FC layers followed by the output layer
    """

    def __init__(self, cfg: ModelConfig, layers: list[ReNetLayerParams], fcs: list[FcParams]):
        self.cfg = cfg
        self.layer_cfgs: list[ReNetLayerConfig] = cfg.layer_configs()
        if len(layers) != len(self.layer_cfgs) or len(fcs) != cfg.n_fc + 1:
            raise ShapeError(
                f"Model needs {len(self.layer_cfgs)} ReNet and {cfg.n_fc + 1} FC layers, "
                f"got {len(layers)} and {len(fcs)}"
            )
        self.layers = layers
        self.fcs = fcs
        self.dtype = as_dtype(cfg.dtype)
        self.params: dict[str, np.ndarray] = {}
        for index, layer in enumerate(layers):
            for name, value in layer.named_tensors():
                self.params[f"renet{index}.{name}"] = value
        for index, fc in enumerate(fcs):
            self.params[f"fc{index}.weight"] = fc.weight
            self.params[f"fc{index}.bias"] = fc.bias

    @property
    def feature_shape(self) -> tuple[int, int, int]:
        return self.layer_cfgs[-1].output_shape

    def parameter_count(self) -> int:
        return sum(value.size for value in self.params.values())

    def describe(self) -> list[str]:
        return describe(self.cfg)

    def load_parameters(self, tensors: dict[str, np.ndarray]) -> None:
        """Copy values into the registry in place, keeping shared arrays"""
        missing = sorted(set(self.params) - set(tensors))
        extra = sorted(set(tensors) - set(self.params))
        if missing or extra:
            raise CheckpointMismatchError(
                f"Parameter names differ (missing {missing[:3]}, unexpected {extra[:3]})"
            )
        for name, value in tensors.items():
            target = self.params[name]
            if value.shape != target.shape or value.dtype != target.dtype:
                raise CheckpointMismatchError(
                    f"Parameter '{name}' is {value.dtype}{list(value.shape)}, "
                    f"model expects {target.dtype}{list(target.shape)}"
                )
            np.copyto(target, value)

    def sample_noise(self, rng: np.random.Generator, batch_size: int) -> ModelNoise:
        """Draw the input mask and all dropout masks for one batch

        Draw order is fixed (input, then per ReNet layer V and H, then the
        hidden FC layers) so a generator state reproduces a batch exactly.
        Rates of zero draw nothing.
        """
        cfg = self.cfg
        noise = ModelNoise()
        if cfg.input_mask > 0.0:
            shape = (batch_size,) + self.cfg.first_layer_shape
            noise.input_mask = (rng.random(shape) >= cfg.input_mask).astype(self.dtype)
        for layer in self.layer_cfgs:
            grid = (batch_size,) + layer.grid + (2 * layer.hidden_dim,)
            noise.layers.append(
                LayerNoise(
                    v_mask=_dropout_mask(rng, grid, cfg.dropout_renet, self.dtype),
                    h_mask=_dropout_mask(rng, grid, cfg.dropout_renet, self.dtype),
                )
            )
        for fc in self.fcs[:-1]:
            noise.fc_masks.append(
                _dropout_mask(rng, (batch_size, fc.out_features), cfg.dropout_fc, self.dtype)
            )
        return noise

    def forward(
        self,
        x: np.ndarray,
        noise: Optional[ModelNoise] = None,
        executor: Optional[Executor] = None,
    ) -> tuple[np.ndarray, ForwardCache]:
        """Logits for a batch x (B, w, h, c); noise None means inference"""
        if x.ndim != 4 or x.shape[1:] != self.cfg.first_layer_shape:
            raise ShapeError(
                f"Model expects (B,) + {self.cfg.first_layer_shape} inputs, got {x.shape}"
            )
        if x.dtype != self.dtype:
            raise DTypeError(f"Model runs in {np.dtype(self.dtype)}, input is {x.dtype}")
        noise = noise or ModelNoise()
        if noise.input_mask is not None:
            x = x * noise.input_mask
        states = []
        for index, (layer_cfg, layer) in enumerate(zip(self.layer_cfgs, self.layers)):
            layer_noise = noise.layers[index] if noise.layers else None
            x, state = layer_forward(x, layer_cfg, layer, layer_noise, executor)
            states.append(state)
        feature_shape = x.shape[1:]
        a = flatten(x, batched=True)
        caches = []
        for index, fc in enumerate(self.fcs):
            a, cache = fc_forward(a, fc)
            caches.append(cache)
            mask = noise.fc_masks[index] if index < len(noise.fc_masks) else None
            if mask is not None:
                a = a * mask
        return a, ForwardCache(states, caches, noise, feature_shape)

    def backward(
        self,
        cache: ForwardCache,
        grad_logits: np.ndarray,
        executor: Optional[Executor] = None,
    ) -> dict[str, np.ndarray]:
        """Parameter gradients keyed like ``params``"""
        grads: dict[str, np.ndarray] = {}
        grad = grad_logits
        for index in reversed(range(len(self.fcs))):
            mask = cache.noise.fc_masks[index] if index < len(cache.noise.fc_masks) else None
            if mask is not None:
                grad = grad * mask
            grad, grad_weight, grad_bias = fc_backward(self.fcs[index], cache.fc_caches[index], grad)
            grads[f"fc{index}.weight"] = grad_weight
            grads[f"fc{index}.bias"] = grad_bias
        grad = unflatten(grad, cache.feature_shape)
        for index in reversed(range(len(self.layers))):
            grad, layer_grads = layer_backward(cache.layer_states[index], grad, executor)
            for name, value in layer_grads.items():
                grads[f"renet{index}.{name}"] = value
        return {name: grads[name] for name in self.params}

    def loss_and_grads(
        self,
        x: np.ndarray,
        y: np.ndarray,
        noise: Optional[ModelNoise] = None,
        executor: Optional[Executor] = None,
        shards: int = 1,
        reduction: str = "mean",
    ) -> tuple[np.ndarray, np.ndarray, dict[str, np.ndarray]]:
        """Per-sample NLL, logits and the gradient of the reduced loss

        With ``shards`` > 1 the batch is cut into contiguous shards that run
        on the executor; their gradients are summed in shard order.

        Args:
            x (np.ndarray): Inputs (B, w, h, c)
            y (np.ndarray): Labels (B,)
            noise (ModelNoise, optional): Training masks for the whole batch
            executor (Executor, optional): Thread pool
            shards (int): Number of batch shards
            reduction (str): "mean" or "sum" over the batch

        Returns:
            tuple: losses (B,) float64, logits (B, K), gradients
        """
        if reduction not in ("mean", "sum"):
            raise ValueError(f"Unsupported reduction '{reduction}'. Options are mean, sum")
        batch = x.shape[0]
        scale = 1.0 / batch if reduction == "mean" else 1.0
        noise = noise or ModelNoise()
        shards = max(1, min(shards, batch))
        bounds = np.linspace(0, batch, shards + 1).astype(int)
        inner = executor if shards == 1 else None

        def run(rows: slice):
            logits, cache = self.forward(x[rows], noise.shard(rows), inner)
            losses, grad_logits = softmax_nll(logits, y[rows])
            grad_logits = (grad_logits * scale).astype(logits.dtype, copy=False)
            return losses, logits, self.backward(cache, grad_logits, inner)

        results = run_ordered(
            [
                (lambda rows=slice(start, stop): run(rows))
                for start, stop in zip(bounds[:-1], bounds[1:])
            ],
            executor if shards > 1 else None,
        )
        losses = np.concatenate([r[0] for r in results])
        logits = np.concatenate([r[1] for r in results])
        grads = results[0][2]
        for _, _, shard_grads in results[1:]:
            for name in grads:
                grads[name] = grads[name] + shard_grads[name]
        return losses, logits, grads

    def logits(
        self, x: np.ndarray, batch_size: int = 256, executor: Optional[Executor] = None
    ) -> np.ndarray:
        """Inference logits, evaluated in batches"""
        chunks = [
            self.forward(x[start : start + batch_size], None, executor)[0]
            for start in range(0, x.shape[0], batch_size)
        ]
        return np.concatenate(chunks) if chunks else np.zeros((0, self.cfg.num_classes), self.dtype)

    def predict(
        self, x: np.ndarray, batch_size: int = 256, executor: Optional[Executor] = None
    ) -> np.ndarray:
        return predict(self.logits(x, batch_size, executor))


def build_model(cfg: ModelConfig, seed: Optional[int] = None) -> ReNetModel:
    """Initialize a model from a validated config

    Initialization draws from the stream (seed, 0); training streams use
    other keys, so changing the data pipeline never changes the weights.
    """
    cfg.validate()
    dtype = as_dtype(cfg.dtype)
    rng = child_rng(cfg.seed if seed is None else seed, 0)
    init = CellInit(recurrent=cfg.recurrent_init, forget_bias=cfg.forget_bias)
    layer_cfgs = cfg.layer_configs()
    layers = [ReNetLayerParams.initialize(layer, rng, dtype, init) for layer in layer_cfgs]
    width = int(np.prod(layer_cfgs[-1].output_shape))
    fcs = []
    for out, activation in zip(cfg.fc_hidden, cfg.fc_activation):
        fcs.append(FcParams.initialize(width, out, rng, activation, dtype))
        width = out
    fcs.append(FcParams.initialize(width, cfg.num_classes, rng, "identity", dtype))
    model = ReNetModel(cfg, layers, fcs)
    logger.info("Built model with %d parameters", model.parameter_count())
    for line in model.describe():
        logger.debug(line)
    return model
