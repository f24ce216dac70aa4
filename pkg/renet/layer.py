# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""The ReNet layer: patch split, vertical sweep, horizontal sweep.

Feature maps are indexed (i, j, feature) with i horizontal and j
vertical; an optional leading batch axis is carried through untouched.
A patch is flattened row-major over (h_p, w_p, c).

The vertical sweep runs one recurrence per column i along j (forward
j = 0..J-1, reverse j = J-1..0) and concatenates both directions into V.
The horizontal sweep does the same along i for every row j of V and
produces H. Both outputs have 2d features, forward direction first.
"""

from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from renet.cells import (
    CellInit,
    CellKind,
    CellParams,
    SequenceCache,
    parameter_count,
    run_sequence,
    run_sequence_backward,
    zero_grads,
)
from renet.errors import CacheMismatchError, ShapeError, StaleStateError
from renet.numerics import concat_last, run_ordered, split_last

DIRECTIONS = ("vfwd", "vrev", "hfwd", "hrev")


@dataclass(frozen=True)
class ReNetLayerConfig:
    """Geometry of one ReNet layer

    Args:
        patch_w (int): Patch width w_p
        patch_h (int): Patch height h_p
        hidden_dim (int): Recurrent units d per direction
        cell_kind (CellKind): Cell variant used by all four sweeps
        input_shape (tuple[int, int, int]): Input (w, h, c)
    """

    patch_w: int
    patch_h: int
    hidden_dim: int
    cell_kind: CellKind
    input_shape: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "cell_kind", CellKind.parse(self.cell_kind))
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))
        w, h, c = self.input_shape
        if min(self.patch_w, self.patch_h, self.hidden_dim, w, h, c) < 1:
            raise ShapeError(f"All extents must be >= 1, got {self}")
        if w % self.patch_w:
            raise ShapeError(f"Input width {w} is not divisible by patch width {self.patch_w}")
        if h % self.patch_h:
            raise ShapeError(
                f"Input height {h} is not divisible by patch height {self.patch_h}"
            )

    @property
    def grid(self) -> tuple[int, int]:
        """(I, J): patches along the horizontal and vertical axis"""
        w, h, _ = self.input_shape
        return w // self.patch_w, h // self.patch_h

    @property
    def patch_dim(self) -> int:
        return self.patch_w * self.patch_h * self.input_shape[2]

    @property
    def output_shape(self) -> tuple[int, int, int]:
        return self.grid + (2 * self.hidden_dim,)


@dataclass
class ReNetLayerParams:
    """Four independent cells: vertical forward/reverse, horizontal forward/reverse"""

    vfwd: CellParams
    vrev: CellParams
    hfwd: CellParams
    hrev: CellParams

    @classmethod
    def initialize(
        cls,
        cfg: ReNetLayerConfig,
        rng: np.random.Generator,
        dtype=np.float64,
        init: Optional[CellInit] = None,
    ) -> "ReNetLayerParams":
        d = cfg.hidden_dim
        sizes = {"vfwd": cfg.patch_dim, "vrev": cfg.patch_dim, "hfwd": 2 * d, "hrev": 2 * d}
        return cls(
            **{
                name: CellParams.initialize(cfg.cell_kind, sizes[name], d, rng, dtype, init)
                for name in DIRECTIONS
            }
        )

    @classmethod
    def zeros(cls, cfg: ReNetLayerConfig, dtype=np.float64) -> "ReNetLayerParams":
        d = cfg.hidden_dim
        sizes = {"vfwd": cfg.patch_dim, "vrev": cfg.patch_dim, "hfwd": 2 * d, "hrev": 2 * d}
        return cls(
            **{name: CellParams.zeros(cfg.cell_kind, sizes[name], d, dtype) for name in DIRECTIONS}
        )

    def cells(self) -> Iterator[tuple[str, CellParams]]:
        for name in DIRECTIONS:
            yield name, getattr(self, name)

    def named_tensors(self) -> Iterator[tuple[str, np.ndarray]]:
        """("vfwd.W", array), ... in a fixed order; arrays are shared, not copied"""
        for direction, cell in self.cells():
            for name, value in cell.tensors.items():
                yield f"{direction}.{name}", value


def layer_parameter_count(cfg: ReNetLayerConfig) -> int:
    d = cfg.hidden_dim
    return 2 * parameter_count(cfg.cell_kind, cfg.patch_dim, d) + 2 * parameter_count(
        cfg.cell_kind, 2 * d, d
    )


def split_patches(X: np.ndarray, cfg: ReNetLayerConfig) -> np.ndarray:
    """Tile (..., w, h, c) into non-overlapping patches (..., I, J, h_p * w_p * c)"""
    if X.ndim < 3:
        raise ShapeError(f"Layer expects (..., w, h, c) inputs, got {X.shape}")
    w, h, _ = X.shape[-3:]
    if w % cfg.patch_w:
        raise ShapeError(f"Input width {w} is not divisible by patch width {cfg.patch_w}")
    if h % cfg.patch_h:
        raise ShapeError(f"Input height {h} is not divisible by patch height {cfg.patch_h}")
    if X.shape[-3:] != cfg.input_shape:
        raise ShapeError(f"Layer expects inputs {cfg.input_shape}, got {X.shape[-3:]}")
    lead = X.shape[:-3]
    n = len(lead)
    I, J = cfg.grid
    c = cfg.input_shape[2]
    tiles = X.reshape(lead + (I, cfg.patch_w, J, cfg.patch_h, c))
    axes = tuple(range(n)) + (n, n + 2, n + 3, n + 1, n + 4)
    return tiles.transpose(axes).reshape(lead + (I, J, cfg.patch_dim))


def merge_patches(P: np.ndarray, cfg: ReNetLayerConfig) -> np.ndarray:
    """Inverse of ``split_patches``"""
    I, J = cfg.grid
    if P.shape[-3:] != (I, J, cfg.patch_dim):
        raise ShapeError(f"Patch map {P.shape} does not fit layer grid {(I, J, cfg.patch_dim)}")
    lead = P.shape[:-3]
    n = len(lead)
    c = cfg.input_shape[2]
    tiles = P.reshape(lead + (I, J, cfg.patch_h, cfg.patch_w, c))
    axes = tuple(range(n)) + (n, n + 3, n + 1, n + 2, n + 4)
    return tiles.transpose(axes).reshape(lead + cfg.input_shape)


# Sequence layouts. Vertical recurrences run along j for every (batch, i);
# horizontal ones along i for every (batch, j).


def _to_columns(M: np.ndarray) -> np.ndarray:
    moved = np.moveaxis(M, -2, 0)
    return moved.reshape(moved.shape[0], -1, moved.shape[-1])


def _from_columns(seq: np.ndarray, like: tuple[int, ...]) -> np.ndarray:
    lead, I = like[:-3], like[-3]
    return np.moveaxis(seq.reshape((seq.shape[0],) + lead + (I, seq.shape[-1])), 0, -2)


def _to_rows(M: np.ndarray) -> np.ndarray:
    moved = np.moveaxis(M, -3, 0)
    return moved.reshape(moved.shape[0], -1, moved.shape[-1])


def _from_rows(seq: np.ndarray, like: tuple[int, ...]) -> np.ndarray:
    lead, J = like[:-3], like[-2]
    return np.moveaxis(seq.reshape((seq.shape[0],) + lead + (J, seq.shape[-1])), 0, -3)


def _bidirectional(
    xs: np.ndarray,
    fwd: CellParams,
    rev: CellParams,
    executor: Optional[Executor],
) -> tuple[np.ndarray, np.ndarray, SequenceCache, SequenceCache]:
    (hs_f, cache_f), (hs_r, cache_r) = run_ordered(
        [lambda: run_sequence(fwd, xs), lambda: run_sequence(rev, xs, reverse=True)],
        executor,
    )
    return hs_f, hs_r, cache_f, cache_r


def _check_cells(M: np.ndarray, fwd: CellParams, rev: CellParams, what: str) -> None:
    if fwd.hidden_dim != rev.hidden_dim:
        raise ShapeError(
            f"{what}: forward and reverse cells differ in d ({fwd.hidden_dim} vs {rev.hidden_dim})"
        )
    for cell in (fwd, rev):
        if cell.input_dim != M.shape[-1]:
            raise ShapeError(
                f"{what}: cell input_dim {cell.input_dim} does not match feature size {M.shape[-1]}"
            )


def vertical_sweep(
    P: np.ndarray, fwd: CellParams, rev: CellParams, executor: Optional[Executor] = None
) -> np.ndarray:
    """Bidirectional sweep along j for every column i

    Args:
        P (np.ndarray): Patch map (..., I, J, D)
        fwd (CellParams): Top-down cell
        rev (CellParams): Bottom-up cell
        executor (Executor, optional): Runs both directions concurrently

    Returns:
        np.ndarray: V, shape (..., I, J, 2d)
    """
    _check_cells(P, fwd, rev, "vertical_sweep")
    hs_f, hs_r, _, _ = _bidirectional(_to_columns(P), fwd, rev, executor)
    return concat_last(_from_columns(hs_f, P.shape), _from_columns(hs_r, P.shape))


def horizontal_sweep(
    V: np.ndarray, fwd: CellParams, rev: CellParams, executor: Optional[Executor] = None
) -> np.ndarray:
    """Bidirectional sweep along i for every row j; returns H (..., I, J, 2d)"""
    _check_cells(V, fwd, rev, "horizontal_sweep")
    hs_f, hs_r, _, _ = _bidirectional(_to_rows(V), fwd, rev, executor)
    return concat_last(_from_rows(hs_f, V.shape), _from_rows(hs_r, V.shape))


@dataclass
class LayerNoise:
    """Inverted dropout masks for the two dropout sites of a layer

    ``v_mask`` multiplies V before the horizontal sweep, ``h_mask``
    multiplies the layer output. Either may be None.
    """

    v_mask: Optional[np.ndarray] = None
    h_mask: Optional[np.ndarray] = None


@dataclass
class ReNetLayerState:
    """Everything ``layer_backward`` needs from the forward pass"""

    cfg: ReNetLayerConfig
    params: ReNetLayerParams
    P: np.ndarray
    V: np.ndarray
    H: np.ndarray
    noise: LayerNoise
    caches: dict[str, SequenceCache] = field(default_factory=dict)
    consumed: bool = False


def layer_forward(
    X: np.ndarray,
    cfg: ReNetLayerConfig,
    params: ReNetLayerParams,
    noise: Optional[LayerNoise] = None,
    executor: Optional[Executor] = None,
) -> tuple[np.ndarray, ReNetLayerState]:
    """The layer map: split, vertical sweep, dropout on V, horizontal sweep, dropout on H

    Args:
        X (np.ndarray): Input (..., w, h, c)
        cfg (ReNetLayerConfig): Layer geometry
        params (ReNetLayerParams): The four cells
        noise (LayerNoise, optional): Dropout masks; None at inference
        executor (Executor, optional): Runs the two directions of each sweep concurrently

    Returns:
        tuple: H (..., I, J, 2d) and the state for ``layer_backward``
    """
    noise = noise or LayerNoise()
    P = split_patches(X, cfg)
    _check_cells(P, params.vfwd, params.vrev, "vertical sweep")
    vf, vr, cache_vf, cache_vr = _bidirectional(
        _to_columns(P), params.vfwd, params.vrev, executor
    )
    V = concat_last(_from_columns(vf, P.shape), _from_columns(vr, P.shape))
    V_in = V * noise.v_mask if noise.v_mask is not None else V

    _check_cells(V_in, params.hfwd, params.hrev, "horizontal sweep")
    hf, hr, cache_hf, cache_hr = _bidirectional(
        _to_rows(V_in), params.hfwd, params.hrev, executor
    )
    H = concat_last(_from_rows(hf, V.shape), _from_rows(hr, V.shape))
    if noise.h_mask is not None:
        H = H * noise.h_mask

    state = ReNetLayerState(
        cfg=cfg,
        params=params,
        P=P,
        V=V,
        H=H,
        noise=noise,
        caches={"vfwd": cache_vf, "vrev": cache_vr, "hfwd": cache_hf, "hrev": cache_hr},
    )
    return H, state


def layer_backward(
    state: ReNetLayerState,
    grad_H: np.ndarray,
    executor: Optional[Executor] = None,
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Exact adjoint of ``layer_forward``

    Args:
        state (ReNetLayerState): State returned by the matching forward call
        grad_H (np.ndarray): dL/dH
        executor (Executor, optional): Runs the two directions of each sweep concurrently

    Returns:
        tuple: dL/dX and parameter gradients keyed "vfwd.W", "hrev.U_g", ...
    """
    if state.consumed:
        raise StaleStateError("Layer state was already used by a backward pass")
    if grad_H.shape != state.H.shape:
        raise CacheMismatchError(f"grad_H shape {grad_H.shape} != H shape {state.H.shape}")
    state.consumed = True
    params, d = state.params, state.cfg.hidden_dim
    grads = {name: zero_grads(cell) for name, cell in params.cells()}

    if state.noise.h_mask is not None:
        grad_H = grad_H * state.noise.h_mask
    grad_hf, grad_hr = split_last(grad_H, d)
    grad_rows = run_ordered(
        [
            lambda: run_sequence_backward(
                params.hfwd, state.caches["hfwd"], _to_rows(grad_hf), grads["hfwd"]
            ),
            lambda: run_sequence_backward(
                params.hrev, state.caches["hrev"], _to_rows(grad_hr), grads["hrev"]
            ),
        ],
        executor,
    )
    grad_V = _from_rows(grad_rows[0] + grad_rows[1], state.V.shape)
    if state.noise.v_mask is not None:
        grad_V = grad_V * state.noise.v_mask

    grad_vf, grad_vr = split_last(grad_V, d)
    grad_columns = run_ordered(
        [
            lambda: run_sequence_backward(
                params.vfwd, state.caches["vfwd"], _to_columns(grad_vf), grads["vfwd"]
            ),
            lambda: run_sequence_backward(
                params.vrev, state.caches["vrev"], _to_columns(grad_vr), grads["vrev"]
            ),
        ],
        executor,
    )
    grad_P = _from_columns(grad_columns[0] + grad_columns[1], state.P.shape)
    grad_X = merge_patches(grad_P, state.cfg)

    flat = {
        f"{direction}.{name}": value
        for direction, cell_grads in grads.items()
        for name, value in cell_grads.items()
    }
    return grad_X, flat
