# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Model and training configuration.

Configs are YAML mappings whose keys mirror ``ModelConfig`` fields, e.g.::

    dataset: mnist
    n_renet: 2
    patch_sizes: [2x2, 2x2]
    renet_hidden: [256, 256]
    renet_cells: gru, gru

List values may be YAML lists or comma-separated strings; patch sizes are
written ``"<w>x<h>"``.
"""

import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional, Union

import yaml

from renet.cells import CellKind
from renet.errors import ConfigError, ShapeError
from renet.layer import ReNetLayerConfig
from renet.numerics import DTYPES

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DATASETS = {
    "mnist": ((28, 28, 1), 10),
    "cifar10": ((32, 32, 3), 10),
    "svhn": ((32, 32, 3), 10),
    "bars": ((8, 8, 1), 2),
}


def parse_patch(value: Any) -> tuple[int, int]:
    """"2x2" or [2, 2] -> (2, 2)"""
    if isinstance(value, str):
        parts = value.lower().replace(" ", "").split("x")
    elif isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        parts = [value, value]
    try:
        patch_w, patch_h = (int(part) for part in parts)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Bad patch size '{value}'; expected '<w>x<h>'") from exc
    if patch_w < 1 or patch_h < 1:
        raise ConfigError(f"Patch size '{value}' must be positive")
    return patch_w, patch_h


def _as_list(value: Any) -> list:
    if value is None:
        return []
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


_FLOAT_FIELDS = (
    "zca_regularizer", "dropout_renet", "dropout_fc", "input_mask", "learning_rate",
    "beta1", "beta2", "epsilon", "forget_bias",
)
_INT_FIELDS = ("num_classes", "n_renet", "n_fc", "batch_size", "max_epochs", "patience", "seed")


def _coerce(cfg: Any, names: tuple[str, ...], kind: type, optional: bool = False) -> None:
    # PyYAML reads "1e-3" as a string
    for name in names:
        value = getattr(cfg, name)
        if value is None and optional:
            continue
        try:
            setattr(cfg, name, kind(value))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name} must be {kind.__name__}, got '{value}'") from exc


@dataclass
class ModelConfig:
    """Network architecture plus data, regularization and training settings"""

    # data
    dataset: str = "mnist"
    input_shape: tuple[int, int, int] = (28, 28, 1)
    num_classes: int = 10
    train_limit: Optional[int] = None
    pad_input: bool = False
    zca: bool = False
    zca_regularizer: float = 1e-2
    standardize: bool = True
    flip: bool = False
    shift: bool = True

    # architecture
    n_renet: int = 2
    patch_sizes: list[tuple[int, int]] = field(default_factory=lambda: [(2, 2), (2, 2)])
    renet_hidden: list[int] = field(default_factory=lambda: [256, 256])
    renet_cells: list[str] = field(default_factory=lambda: ["gru", "gru"])
    n_fc: int = 2
    fc_hidden: list[int] = field(default_factory=lambda: [4096, 4096])
    fc_activation: list[str] = field(default_factory=lambda: ["relu", "relu"])

    # regularization
    dropout_renet: float = 0.2
    dropout_fc: float = 0.5
    input_mask: float = 0.2

    # optimization
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: Optional[float] = None
    batch_size: int = 64
    max_epochs: int = 100
    patience: int = 10

    # initialization
    recurrent_init: str = "orthogonal"
    forget_bias: float = 1.0

    seed: int = 0
    dtype: str = "f32"

    def __post_init__(self):
        _coerce(self, _FLOAT_FIELDS, float)
        _coerce(self, _INT_FIELDS, int)
        _coerce(self, ("clip_norm",), float, optional=True)
        _coerce(self, ("train_limit",), int, optional=True)
        self.dtype = str(self.dtype)
        self.input_shape = tuple(int(v) for v in _as_list(self.input_shape))
        self.patch_sizes = [parse_patch(p) for p in _as_list(self.patch_sizes)]
        self.renet_hidden = [int(v) for v in _as_list(self.renet_hidden)]
        self.renet_cells = [CellKind.parse(v).value for v in _as_list(self.renet_cells)]
        self.fc_hidden = [int(v) for v in _as_list(self.fc_hidden)]
        self.fc_activation = [str(v).lower() for v in _as_list(self.fc_activation)]

    @classmethod
    def from_dict(cls, values: dict[str, Any]) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")
        values = dict(values)
        dataset = str(values.get("dataset", cls.dataset)).lower()
        if dataset in DATASETS:
            shape, classes = DATASETS[dataset]
            values.setdefault("input_shape", shape)
            values.setdefault("num_classes", classes)
        # a single activation applies to every FC layer
        activation = values.get("fc_activation")
        if isinstance(activation, str) and "," not in activation and "n_fc" in values:
            values["fc_activation"] = [activation] * int(values["n_fc"])
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict[str, Any]:
        """Plain YAML/JSON-compatible mapping; patch sizes as "wxh" strings"""
        values = asdict(self)
        values["input_shape"] = list(self.input_shape)
        values["patch_sizes"] = [f"{w}x{h}" for w, h in self.patch_sizes]
        return values

    def layer_configs(self) -> list[ReNetLayerConfig]:
        """Geometry of every ReNet layer; raises ConfigError naming the layer
        whose input does not divide by its patch size"""
        shape = self.first_layer_shape
        layers = []
        for index in range(self.n_renet):
            patch_w, patch_h = self.patch_sizes[index]
            try:
                layer = ReNetLayerConfig(
                    patch_w, patch_h, self.renet_hidden[index], self.renet_cells[index], shape
                )
            except ShapeError as exc:
                raise ConfigError(f"ReNet layer {index}: {exc}") from exc
            layers.append(layer)
            shape = layer.output_shape
        return layers

    @property
    def first_layer_shape(self) -> tuple[int, int, int]:
        w, h, c = self.input_shape
        if self.pad_input and self.patch_sizes:
            patch_w, patch_h = self.patch_sizes[0]
            w, h = w + (-w % patch_w), h + (-h % patch_h)
        return (w, h, c)

    def architecture(self) -> dict[str, Any]:
        """The fields a checkpoint must agree on to be resumed"""
        keys = (
            "input_shape", "num_classes", "pad_input", "n_renet", "patch_sizes",
            "renet_hidden", "renet_cells", "n_fc", "fc_hidden", "fc_activation", "dtype",
        )
        values = self.to_dict()
        return {key: values[key] for key in keys}

    def validate(self) -> None:
        for name, length, expected in (
            ("patch_sizes", len(self.patch_sizes), self.n_renet),
            ("renet_hidden", len(self.renet_hidden), self.n_renet),
            ("renet_cells", len(self.renet_cells), self.n_renet),
            ("fc_hidden", len(self.fc_hidden), self.n_fc),
            ("fc_activation", len(self.fc_activation), self.n_fc),
        ):
            if length != expected:
                raise ConfigError(f"{name} has {length} entries, expected {expected}")
        if self.n_renet < 1:
            raise ConfigError("n_renet must be at least 1")
        if self.n_fc < 0:
            raise ConfigError("n_fc must be >= 0")
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise ConfigError(f"input_shape must be (w, h, c), got {self.input_shape}")
        if self.num_classes < 2:
            raise ConfigError("num_classes must be at least 2")
        for value in self.renet_hidden + self.fc_hidden:
            if value < 1:
                raise ConfigError(f"Layer widths must be positive, got {value}")
        for activation in self.fc_activation:
            if activation not in ("relu", "identity"):
                raise ConfigError(
                    f"Unsupported FC activation '{activation}'. Options are relu, identity"
                )
        for name in ("dropout_renet", "dropout_fc", "input_mask"):
            rate = getattr(self, name)
            if not 0.0 <= rate < 1.0:
                raise ConfigError(f"{name} must be in [0, 1), got {rate}")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.patience < 0 or self.max_epochs < 1:
            raise ConfigError("patience must be >= 0 and max_epochs >= 1")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ConfigError("beta1 and beta2 must be in [0, 1)")
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise ConfigError("learning_rate and epsilon must be positive")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError("clip_norm must be positive when set")
        if self.recurrent_init not in ("orthogonal", "glorot"):
            raise ConfigError(
                f"Unsupported recurrent_init '{self.recurrent_init}'. Options are orthogonal, glorot"
            )
        if self.dtype not in DTYPES:
            raise ConfigError(f"Unsupported dtype '{self.dtype}'. Options are f32, f64")
        if self.train_limit is not None and self.train_limit < 1:
            raise ConfigError("train_limit must be positive when set")
        self.layer_configs()


def load_config(path: PathLike, **overrides: Any) -> ModelConfig:
    """Read a YAML config; keyword overrides (e.g. seed, dtype) win over the file"""
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        try:
            values = yaml.safe_load(handle) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"Cannot parse config '{path}': {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"Config '{path}' must be a mapping of keys to values")
    values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        cfg = ModelConfig.from_dict(values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Config '{path}': {exc}") from exc
    logger.debug("Loaded config %s: %s", path, cfg)
    return cfg


def save_config(cfg: ModelConfig, path: PathLike) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        yaml.safe_dump(cfg.to_dict(), handle, sort_keys=False)
