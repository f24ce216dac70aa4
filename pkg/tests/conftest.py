# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Shared fixtures: scalar re-implementations of the cell equations and of
the ReNet layer, and a central finite-difference helper."""

import math
import os
from pathlib import Path

import numpy as np
import pytest

from renet.cells import CellKind, CellParams
from renet.config import ModelConfig
from renet.numerics import make_rng

REPO_ROOT = Path(__file__).resolve().parents[1]


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _affine(W, x, U, h, b) -> list[float]:
    rows = []
    for r in range(len(b)):
        total = float(b[r])
        for k in range(len(x)):
            total += float(W[r][k]) * float(x[k])
        for k in range(len(h)):
            total += float(U[r][k]) * float(h[k])
        rows.append(total)
    return rows


def scalar_step(params: CellParams, x, h, c=None):
    """One cell step written out element by element; returns (h, c)"""
    t = params.tensors
    d = params.hidden_dim
    h = [float(v) for v in h]
    if params.kind == CellKind.TANH:
        return [math.tanh(z) for z in _affine(t["W"], x, t["U"], h, t["b"])], None
    if params.kind == CellKind.GRU:
        gates = [_sigmoid(z) for z in _affine(t["W_g"], x, t["U_g"], h, t["b_g"])]
        update, reset = gates[:d], gates[d:]
        reset_h = [reset[k] * h[k] for k in range(d)]
        candidate = [math.tanh(z) for z in _affine(t["W"], x, t["U"], reset_h, t["b"])]
        return [(1 - update[k]) * h[k] + update[k] * candidate[k] for k in range(d)], None
    c = [0.0] * d if c is None else [float(v) for v in c]
    gate = {}
    for name in ("input", "forget", "output"):
        pre = _affine(t[f"W_{name}"], x, t[f"U_{name}"], h, t[f"b_{name}"])
        gate[name] = [_sigmoid(z) for z in pre]
    g = [math.tanh(z) for z in _affine(t["W_candidate"], x, t["U_candidate"], h, t["b_candidate"])]
    c_new = [gate["forget"][k] * c[k] + gate["input"][k] * g[k] for k in range(d)]
    h_new = [gate["output"][k] * math.tanh(c_new[k]) for k in range(d)]
    return h_new, c_new


def scalar_layer(X: np.ndarray, cfg, params) -> np.ndarray:
    """The layer map evaluated literally: tile, sweep each column, sweep each row"""
    I, J = cfg.grid
    pw, ph, c = cfg.patch_w, cfg.patch_h, cfg.input_shape[2]
    d = cfg.hidden_dim
    patches = [
        [
            [X[i * pw + a, j * ph + b, ch] for b in range(ph) for a in range(pw) for ch in range(c)]
            for j in range(J)
        ]
        for i in range(I)
    ]

    def sweep(cell, inputs):
        h, state_c, out = [0.0] * d, None, []
        for x in inputs:
            h, state_c = scalar_step(cell, x, h, state_c)
            out.append(h)
        return out

    V = [[None] * J for _ in range(I)]
    for i in range(I):
        fwd = sweep(params.vfwd, patches[i])
        rev = sweep(params.vrev, patches[i][::-1])[::-1]
        for j in range(J):
            V[i][j] = fwd[j] + rev[j]
    H = np.zeros((I, J, 2 * d))
    for j in range(J):
        row = [V[i][j] for i in range(I)]
        fwd = sweep(params.hfwd, row)
        rev = sweep(params.hrev, row[::-1])[::-1]
        for i in range(I):
            H[i, j] = fwd[i] + rev[i]
    return H


def numeric_gradient(f, array: np.ndarray, epsilon: float = 1e-5) -> np.ndarray:
    """Central differences of the scalar f() with respect to ``array`` (perturbed in place)"""
    grad = np.zeros_like(array, dtype=np.float64)
    flat, out = array.reshape(-1), grad.reshape(-1)
    for index in range(flat.size):
        saved = flat[index]
        flat[index] = saved + epsilon
        plus = f()
        flat[index] = saved - epsilon
        minus = f()
        flat[index] = saved
        out[index] = (plus - minus) / (2 * epsilon)
    return grad


def random_cell(kind, input_dim: int, hidden_dim: int, seed: int, scale: float = 0.5) -> CellParams:
    """Cell with every tensor (biases included) drawn from N(0, scale^2), f64"""
    rng = make_rng(seed)
    params = CellParams.zeros(kind, input_dim, hidden_dim)
    params.tensors = {
        name: rng.normal(0.0, scale, value.shape) for name, value in params.tensors.items()
    }
    return params


@pytest.fixture
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture
def configs_dir() -> Path:
    return REPO_ROOT / "configs"


@pytest.fixture
def bars_values() -> dict:
    """Small bars model used by the training tests"""
    return {
        "dataset": "bars",
        "n_renet": 1,
        "patch_sizes": "2x2",
        "renet_hidden": 4,
        "renet_cells": "gru",
        "n_fc": 1,
        "fc_hidden": 8,
        "fc_activation": "relu",
        "flip": False,
        "shift": False,
        "standardize": False,
        "dropout_renet": 0.0,
        "dropout_fc": 0.0,
        "input_mask": 0.0,
        "learning_rate": 1e-2,
        "batch_size": 10,
        "max_epochs": 3,
        "patience": 10,
        "seed": 3,
        "dtype": "f64",
    }


@pytest.fixture
def bars_config(bars_values) -> ModelConfig:
    return ModelConfig.from_dict(bars_values)


@pytest.fixture
def data_dir():
    """Directory with real datasets (RENET_DATA_DIR); tests needing it skip otherwise"""
    path = os.environ.get("RENET_DATA_DIR")
    if not path or not Path(path).is_dir():
        pytest.skip("RENET_DATA_DIR not set")
    return Path(path)
