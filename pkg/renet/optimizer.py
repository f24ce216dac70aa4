# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Adam with bias correction over a registry of named parameters."""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from renet.errors import NonFiniteError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class AdamConfig:
    """Adam hyperparameters; clip_norm enables global-norm clipping"""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: Optional[float] = None


@dataclass
class AdamState:
    """Step counter and per-parameter moments (m, v zero-initialized)"""

    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            t=0,
            m={name: np.zeros_like(value) for name, value in params.items()},
            v={name: np.zeros_like(value) for name, value in params.items()},
        )


def global_norm(grads: dict[str, np.ndarray]) -> float:
    """Euclidean norm over all gradients, summed in registry order"""
    total = 0.0
    for value in grads.values():
        total += float(np.sum(np.square(value, dtype=np.float64)))
    return float(np.sqrt(total))


def update_bound(cfg: AdamConfig, t: int) -> float:
    """Largest possible |delta| of a single parameter at step t (ignoring epsilon)"""
    b1, b2 = cfg.beta1, cfg.beta2
    gamma = b1 * b1 / b2
    bias_ratio = np.sqrt(1 - b2**t) / (1 - b1**t)
    series = np.sqrt((1 - gamma**t) / (1 - gamma)) if gamma != 1 else np.sqrt(t)
    return float(cfg.learning_rate * (1 - b1) / np.sqrt(1 - b2) * bias_ratio * series)


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    cfg: AdamConfig,
) -> None:
    """One Adam update, applied in place to ``params`` and ``state``

    m <- b1 m + (1 - b1) g
    v <- b2 v + (1 - b2) g^2
    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)

    Args:
        params (dict[str, np.ndarray]): Parameter registry, updated in place
        grads (dict[str, np.ndarray]): Gradients with the same names and shapes
        state (AdamState): Moments and step counter, updated in place
        cfg (AdamConfig): Hyperparameters
    """
    for name, value in params.items():
        if name not in grads:
            raise ShapeError(f"Missing gradient for parameter '{name}'")
        if grads[name].shape != value.shape:
            raise ShapeError(
                f"Gradient for '{name}' has shape {grads[name].shape}, expected {value.shape}"
            )
        if not np.all(np.isfinite(grads[name])):
            raise NonFiniteError(f"Non-finite gradient for parameter '{name}'")

    scale = 1.0
    if cfg.clip_norm is not None:
        norm = global_norm(grads)
        if norm > cfg.clip_norm:
            scale = cfg.clip_norm / norm
            logger.debug("Clipping gradient norm %.4g to %.4g", norm, cfg.clip_norm)

    state.t += 1
    bc1 = 1.0 - cfg.beta1**state.t
    bc2 = 1.0 - cfg.beta2**state.t
    for name, value in params.items():
        g = grads[name] * scale if scale != 1.0 else grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        m, v = state.m[name], state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        value -= (cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)).astype(
            value.dtype, copy=False
        )


class Adam:
    """Adam optimizer bound to one parameter registry"""

    def __init__(self, params: dict[str, np.ndarray], cfg: Optional[AdamConfig] = None):
        self.params = params
        self.cfg = cfg or AdamConfig()
        self.state = AdamState.for_params(params)

    def step(self, grads: dict[str, np.ndarray]) -> None:
        adam_step(self.params, grads, self.state, self.cfg)

    def state_dict(self) -> dict:
        """Step counter plus copies of the moments"""
        return {
            "t": self.state.t,
            "m": {name: value.copy() for name, value in self.state.m.items()},
            "v": {name: value.copy() for name, value in self.state.v.items()},
        }

    def load_state_dict(self, state: dict) -> None:
        for moments in ("m", "v"):
            missing = set(self.params) - set(state[moments])
            if missing:
                raise ShapeError(f"Optimizer state lacks {moments} for {sorted(missing)}")
            for name, value in state[moments].items():
                if name in self.params and value.shape != self.params[name].shape:
                    raise ShapeError(
                        f"Optimizer {moments} for '{name}' has shape {value.shape}, "
                        f"expected {self.params[name].shape}"
                    )
        self.state = AdamState(
            t=int(state["t"]),
            m={name: np.array(value) for name, value in state["m"].items()},
            v={name: np.array(value) for name, value in state["v"].items()},
        )
