# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Recurrent cells (tanh, GRU, LSTM) and their exact adjoints.

Weight matrices are stored output-major: ``W`` is (rows x input_dim) and is
applied to row-vector batches as ``x @ W.T``.

GRU::

    [u; r] = sigmoid(W_g x + U_g h_prev + b_g)      update gate first
    h~     = tanh(W x + U (r * h_prev) + b)
    h      = (1 - u) * h_prev + u * h~

LSTM (forget gate, no peepholes)::

    i, f, o = sigmoid(W_* x + U_* h_prev + b_*)
    g       = tanh(W_candidate x + U_candidate h_prev + b_candidate)
    c       = f * c_prev + i * g
    h       = o * tanh(c)
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from renet.errors import CacheMismatchError, ConfigError, ShapeError
from renet.numerics import check_same_dtype, matmul, pointwise


class CellKind(str, Enum):
    """Recurrent cell variants"""

    TANH = "tanh"
    GRU = "gru"
    LSTM = "lstm"

    @classmethod
    def parse(cls, value: "str | CellKind") -> "CellKind":
        try:
            return cls(str(value.value if isinstance(value, CellKind) else value).lower())
        except ValueError as exc:
            raise ConfigError(
                f"Unsupported cell kind '{value}'. Options are tanh, gru, lstm"
            ) from exc


# gate name -> (input matrix, recurrent matrix, bias, rows in units of d, activation)
_GATES: dict[CellKind, tuple[tuple[str, str, str, str, int, str], ...]] = {
    CellKind.TANH: (("candidate", "W", "U", "b", 1, "tanh"),),
    CellKind.GRU: (
        ("gates", "W_g", "U_g", "b_g", 2, "sigmoid"),
        ("candidate", "W", "U", "b", 1, "tanh"),
    ),
    CellKind.LSTM: tuple(
        (gate, f"W_{gate}", f"U_{gate}", f"b_{gate}", 1, act)
        for gate, act in (
            ("input", "sigmoid"),
            ("forget", "sigmoid"),
            ("output", "sigmoid"),
            ("candidate", "tanh"),
        )
    ),
}


def tensor_names(kind: CellKind) -> list[str]:
    """Parameter tensor names of a cell kind, in registry order"""
    names = []
    for _, w_name, u_name, b_name, _, _ in _GATES[CellKind.parse(kind)]:
        names += [w_name, u_name, b_name]
    return names


def parameter_count(kind: CellKind, input_dim: int, hidden_dim: int) -> int:
    """Closed-form number of scalars in one cell"""
    rows = sum(spec[4] for spec in _GATES[CellKind.parse(kind)]) * hidden_dim
    return rows * (input_dim + hidden_dim + 1)


@dataclass
class CellInit:
    """Initialization policy

    Non-recurrent matrices are Glorot uniform in [-s, s] with
    s = sqrt(6 / (fan_in + fan_out)). Recurrent matrices are orthogonal per
    d x d block ("orthogonal") or Glorot uniform ("glorot"). Biases are zero
    except the LSTM forget gate.
    """

    recurrent: str = "orthogonal"
    forget_bias: float = 1.0


def _glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def _orthogonal(rng: np.random.Generator, size: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((size, size)))
    return q * np.sign(np.diag(r))


@dataclass
class CellParams:
    """Parameters of one recurrent cell (one sweep direction)"""

    kind: CellKind
    input_dim: int
    hidden_dim: int
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.kind = CellKind.parse(self.kind)
        if self.input_dim < 1 or self.hidden_dim < 1:
            raise ShapeError(
                f"Cell dimensions must be positive, got input_dim={self.input_dim}, "
                f"hidden_dim={self.hidden_dim}"
            )

    @property
    def dtype(self) -> np.dtype:
        return next(iter(self.tensors.values())).dtype

    def expected_shapes(self) -> dict[str, tuple[int, ...]]:
        d = self.hidden_dim
        shapes = {}
        for _, w_name, u_name, b_name, rows, _ in _GATES[self.kind]:
            shapes[w_name] = (rows * d, self.input_dim)
            shapes[u_name] = (rows * d, d)
            shapes[b_name] = (rows * d,)
        return shapes

    def validate(self) -> None:
        """Raise ShapeError unless every tensor matches (input_dim, hidden_dim)"""
        expected = self.expected_shapes()
        if set(expected) != set(self.tensors):
            raise ShapeError(
                f"{self.kind.value} cell expects tensors {sorted(expected)}, "
                f"got {sorted(self.tensors)}"
            )
        for name, shape in expected.items():
            if self.tensors[name].shape != shape:
                raise ShapeError(
                    f"{self.kind.value} cell tensor '{name}' has shape "
                    f"{self.tensors[name].shape}, expected {shape}"
                )
        check_same_dtype(*self.tensors.values())

    @classmethod
    def zeros(cls, kind, input_dim: int, hidden_dim: int, dtype=np.float64) -> "CellParams":
        params = cls(kind, input_dim, hidden_dim)
        params.tensors = {
            name: np.zeros(shape, dtype=dtype)
            for name, shape in params.expected_shapes().items()
        }
        return params

    @classmethod
    def initialize(
        cls,
        kind,
        input_dim: int,
        hidden_dim: int,
        rng: np.random.Generator,
        dtype=np.float64,
        init: Optional[CellInit] = None,
    ) -> "CellParams":
        """Randomly initialized cell

        Args:
            kind (CellKind): Cell variant
            input_dim (int): Size of one input vector
            hidden_dim (int): Number of recurrent units d
            rng (np.random.Generator): Source of randomness
            dtype (optional): np.float32 or np.float64. Defaults to np.float64.
            init (CellInit, optional): Initialization policy. Defaults to CellInit().
        """
        init = init or CellInit()
        if init.recurrent not in ("orthogonal", "glorot"):
            raise ConfigError(
                f"Unsupported recurrent init '{init.recurrent}'. Options are orthogonal, glorot"
            )
        params = cls(kind, input_dim, hidden_dim)
        d = hidden_dim
        tensors = {}
        for gate, w_name, u_name, b_name, rows, _ in _GATES[params.kind]:
            tensors[w_name] = _glorot(rng, rows * d, input_dim)
            if init.recurrent == "orthogonal":
                tensors[u_name] = np.concatenate([_orthogonal(rng, d) for _ in range(rows)])
            else:
                tensors[u_name] = _glorot(rng, rows * d, d)
            tensors[b_name] = np.zeros(rows * d)
            if gate == "forget":
                tensors[b_name][:] = init.forget_bias
        params.tensors = {name: value.astype(dtype) for name, value in tensors.items()}
        return params


@dataclass
class CellState:
    """Hidden state h (and memory c for LSTM)"""

    h: np.ndarray
    c: Optional[np.ndarray] = None


def zero_state(params: CellParams, batch_shape: tuple[int, ...] = ()) -> CellState:
    """Boundary state of a sweep: all zeros"""
    shape = tuple(batch_shape) + (params.hidden_dim,)
    h = np.zeros(shape, dtype=params.dtype)
    c = np.zeros(shape, dtype=params.dtype) if params.kind == CellKind.LSTM else None
    return CellState(h=h, c=c)


def zero_grads(params: CellParams) -> dict[str, np.ndarray]:
    """Gradient buffers shaped like the parameters"""
    return {name: np.zeros_like(value) for name, value in params.tensors.items()}


@dataclass
class StepCache:
    """Forward intermediates of one step, consumed by the backward pass"""

    kind: CellKind
    input_dim: int
    hidden_dim: int
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: Optional[np.ndarray]
    activations: dict[str, np.ndarray]
    recurrent_inputs: dict[str, np.ndarray]
    h: np.ndarray
    c: Optional[np.ndarray] = None
    tanh_c: Optional[np.ndarray] = None


def _check_inputs(params: CellParams, x: np.ndarray, h_prev: np.ndarray) -> None:
    if x.shape[-1] != params.input_dim:
        raise ShapeError(
            f"{params.kind.value} cell expects inputs of size {params.input_dim}, got {x.shape}"
        )
    if h_prev.shape[-1] != params.hidden_dim or h_prev.shape[:-1] != x.shape[:-1]:
        raise ShapeError(
            f"{params.kind.value} cell state {h_prev.shape} does not fit input {x.shape} "
            f"with d={params.hidden_dim}"
        )
    check_same_dtype(x, h_prev, *params.tensors.values())


def project_inputs(params: CellParams, x: np.ndarray) -> dict[str, np.ndarray]:
    """Input part of every gate pre-activation: x @ W.T + b"""
    return {
        gate: matmul(x, params.tensors[w_name].T) + params.tensors[b_name]
        for gate, w_name, _, b_name, _, _ in _GATES[params.kind]
    }


def _recur(
    params: CellParams,
    x: np.ndarray,
    projected: dict[str, np.ndarray],
    state: CellState,
) -> StepCache:
    """One step given the precomputed input projections"""
    t = params.tensors
    d = params.hidden_dim
    h_prev = state.h
    if params.kind == CellKind.TANH:
        h = pointwise(projected["candidate"] + matmul(h_prev, t["U"].T), "tanh")
        return StepCache(
            params.kind, params.input_dim, d, x, h_prev, None,
            activations={"candidate": h},
            recurrent_inputs={"candidate": h_prev},
            h=h,
        )

    if params.kind == CellKind.GRU:
        gates = pointwise(projected["gates"] + matmul(h_prev, t["U_g"].T), "sigmoid")
        update, reset = gates[..., :d], gates[..., d:]
        reset_h = reset * h_prev
        candidate = pointwise(projected["candidate"] + matmul(reset_h, t["U"].T), "tanh")
        h = (1 - update) * h_prev + update * candidate
        return StepCache(
            params.kind, params.input_dim, d, x, h_prev, None,
            activations={"gates": gates, "candidate": candidate},
            recurrent_inputs={"gates": h_prev, "candidate": reset_h},
            h=h,
        )

    c_prev = state.c if state.c is not None else np.zeros_like(h_prev)
    activations = {}
    for gate, _, u_name, _, _, act in _GATES[CellKind.LSTM]:
        activations[gate] = pointwise(projected[gate] + matmul(h_prev, t[u_name].T), act)
    c = activations["forget"] * c_prev + activations["input"] * activations["candidate"]
    tanh_c = np.tanh(c)
    h = activations["output"] * tanh_c
    return StepCache(
        params.kind, params.input_dim, d, x, h_prev, c_prev,
        activations=activations,
        recurrent_inputs={gate: h_prev for gate in activations},
        h=h,
        c=c,
        tanh_c=tanh_c,
    )


def cell_forward(
    params: CellParams, x: np.ndarray, state: CellState
) -> tuple[CellState, StepCache]:
    """Generic step: new state plus the cache for ``cell_step_backward``"""
    _check_inputs(params, x, state.h)
    cache = _recur(params, x, project_inputs(params, x), state)
    return CellState(h=cache.h, c=cache.c), cache


def tanh_step(params: CellParams, x_t: np.ndarray, h_prev: np.ndarray) -> np.ndarray:
    """h_t = tanh(W x_t + U h_prev + b)"""
    if params.kind != CellKind.TANH:
        raise ShapeError(f"tanh_step called with a {params.kind.value} cell")
    return cell_forward(params, x_t, CellState(h_prev))[0].h


def gru_step(params: CellParams, x_t: np.ndarray, h_prev: np.ndarray) -> np.ndarray:
    """GRU hidden state: gates, then candidate, then interpolation"""
    if params.kind != CellKind.GRU:
        raise ShapeError(f"gru_step called with a {params.kind.value} cell")
    return cell_forward(params, x_t, CellState(h_prev))[0].h


def lstm_step(params: CellParams, x_t: np.ndarray, state: CellState) -> CellState:
    """LSTM step returning (h_t, c_t)"""
    if params.kind != CellKind.LSTM:
        raise ShapeError(f"lstm_step called with a {params.kind.value} cell")
    return cell_forward(params, x_t, state)[0]


def _recur_backward(
    params: CellParams,
    cache: StepCache,
    grad_h: np.ndarray,
    grad_c: Optional[np.ndarray],
) -> tuple[dict[str, np.ndarray], np.ndarray, Optional[np.ndarray]]:
    """Adjoint of ``_recur``

    Returns the gradients of the gate pre-activations, dL/dh_prev and
    dL/dc_prev. Parameter and input gradients follow from the
    pre-activation gradients in ``_accumulate``.
    """
    t = params.tensors
    d = params.hidden_dim
    act = cache.activations

    if params.kind == CellKind.TANH:
        pre = {"candidate": grad_h * (1 - act["candidate"] ** 2)}
        return pre, matmul(pre["candidate"], t["U"]), None

    if params.kind == CellKind.GRU:
        gates, candidate = act["gates"], act["candidate"]
        update, reset = gates[..., :d], gates[..., d:]
        h_prev = cache.h_prev
        grad_h_prev = grad_h * (1 - update)
        grad_update = grad_h * (candidate - h_prev)
        pre_candidate = grad_h * update * (1 - candidate**2)
        grad_reset_h = matmul(pre_candidate, t["U"])
        grad_reset = grad_reset_h * h_prev
        grad_h_prev = grad_h_prev + grad_reset_h * reset
        grad_gates = np.concatenate([grad_update, grad_reset], axis=-1)
        pre_gates = grad_gates * gates * (1 - gates)
        grad_h_prev = grad_h_prev + matmul(pre_gates, t["U_g"])
        return {"gates": pre_gates, "candidate": pre_candidate}, grad_h_prev, None

    if grad_c is None:
        grad_c = np.zeros_like(grad_h)
    i, f, o, g = act["input"], act["forget"], act["output"], act["candidate"]
    grad_o = grad_h * cache.tanh_c
    grad_c_total = grad_c + grad_h * o * (1 - cache.tanh_c**2)
    pre = {
        "input": grad_c_total * g * i * (1 - i),
        "forget": grad_c_total * cache.c_prev * f * (1 - f),
        "output": grad_o * o * (1 - o),
        "candidate": grad_c_total * i * (1 - g**2),
    }
    grad_h_prev = np.zeros_like(grad_h)
    for gate, _, u_name, _, _, _ in _GATES[CellKind.LSTM]:
        grad_h_prev = grad_h_prev + matmul(pre[gate], t[u_name])
    return pre, grad_h_prev, grad_c_total * f


def _accumulate(
    params: CellParams,
    grads: dict[str, np.ndarray],
    x: np.ndarray,
    recurrent_inputs: dict[str, np.ndarray],
    pre: dict[str, np.ndarray],
) -> np.ndarray:
    """Add parameter gradients into ``grads`` and return dL/dx

    All arrays are flattened to rows, so the reductions run over every
    batch row (and time step) in a single ordered matmul.
    """
    rows_x = x.reshape(-1, params.input_dim)
    grad_x = np.zeros_like(rows_x)
    for gate, w_name, u_name, b_name, _, _ in _GATES[params.kind]:
        rows_pre = pre[gate].reshape(rows_x.shape[0], -1)
        rows_rec = recurrent_inputs[gate].reshape(rows_x.shape[0], -1)
        grads[w_name] += matmul(rows_pre.T, rows_x)
        grads[u_name] += matmul(rows_pre.T, rows_rec)
        grads[b_name] += rows_pre.sum(axis=0)
        grad_x += matmul(rows_pre, params.tensors[w_name])
    return grad_x.reshape(x.shape)


def _check_cache(params: CellParams, cache: StepCache) -> None:
    if (
        cache.kind != params.kind
        or cache.input_dim != params.input_dim
        or cache.hidden_dim != params.hidden_dim
    ):
        raise CacheMismatchError(
            f"cache from a {cache.kind.value} cell ({cache.input_dim}->{cache.hidden_dim}) "
            f"cannot be used with a {params.kind.value} cell "
            f"({params.input_dim}->{params.hidden_dim})"
        )


def cell_step_backward(
    params: CellParams,
    cache: StepCache,
    grad_h: np.ndarray,
    grads: dict[str, np.ndarray],
    grad_c: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Exact adjoint of one step

    Args:
        params (CellParams): Parameters used in the forward call
        cache (StepCache): Cache returned by ``cell_forward``
        grad_h (np.ndarray): dL/dh_t
        grads (dict[str, np.ndarray]): Parameter gradient buffers, updated in place (+=)
        grad_c (np.ndarray, optional): dL/dc_t for LSTM cells

    Returns:
        tuple: (dL/dx_t, dL/dh_prev, dL/dc_prev or None)
    """
    _check_cache(params, cache)
    if grad_h.shape != cache.h.shape:
        raise CacheMismatchError(f"grad_h shape {grad_h.shape} != h shape {cache.h.shape}")
    pre, grad_h_prev, grad_c_prev = _recur_backward(params, cache, grad_h, grad_c)
    grad_x = _accumulate(params, grads, cache.x, cache.recurrent_inputs, pre)
    return grad_x, grad_h_prev, grad_c_prev


@dataclass
class SequenceCache:
    """Per-step caches of one recurrence, in processing order"""

    kind: CellKind
    reverse: bool
    xs: np.ndarray
    steps: list[StepCache]


def run_sequence(
    params: CellParams, xs: np.ndarray, reverse: bool = False
) -> tuple[np.ndarray, SequenceCache]:
    """Run a recurrence over axis 0 from the zero state

    Args:
        params (CellParams): Cell parameters
        xs (np.ndarray): Inputs, shape (T, N, input_dim); N independent sequences
        reverse (bool, optional): Process t = T-1 down to 0. Defaults to False.

    Returns:
        tuple: hidden states (T, N, d) indexed by position (not processing
        order) and the cache for ``run_sequence_backward``
    """
    if xs.ndim != 3:
        raise ShapeError(f"run_sequence expects (T, N, input_dim) inputs, got {xs.shape}")
    state = zero_state(params, xs.shape[1:2])
    _check_inputs(params, xs[0], state.h)
    projected = project_inputs(params, xs)
    order = range(xs.shape[0] - 1, -1, -1) if reverse else range(xs.shape[0])
    hs = np.empty(xs.shape[:2] + (params.hidden_dim,), dtype=xs.dtype)
    steps = []
    for t in order:
        step = _recur(params, xs[t], {gate: value[t] for gate, value in projected.items()}, state)
        state = CellState(h=step.h, c=step.c)
        hs[t] = step.h
        steps.append(step)
    return hs, SequenceCache(params.kind, reverse, xs, steps)


def run_sequence_backward(
    params: CellParams,
    cache: SequenceCache,
    grad_hs: np.ndarray,
    grads: dict[str, np.ndarray],
) -> np.ndarray:
    """Backpropagation through time for ``run_sequence``

    Steps are revisited in the reverse of their processing order. Parameter
    gradients are accumulated into ``grads``; returns dL/dxs.
    """
    if cache.kind != params.kind:
        raise CacheMismatchError(
            f"sequence cache from a {cache.kind.value} cell used with a {params.kind.value} cell"
        )
    _check_cache(params, cache.steps[0])
    if grad_hs.shape != cache.xs.shape[:2] + (params.hidden_dim,):
        raise CacheMismatchError(
            f"grad_hs shape {grad_hs.shape} does not match the forward sequence"
        )
    T = cache.xs.shape[0]
    order = list(range(T - 1, -1, -1) if cache.reverse else range(T))
    gates = [spec[0] for spec in _GATES[params.kind]]
    pre_all = {gate: [None] * T for gate in gates}
    rec_all = {gate: [None] * T for gate in gates}
    carry_h = np.zeros_like(grad_hs[0])
    carry_c = np.zeros_like(grad_hs[0]) if params.kind == CellKind.LSTM else None
    for position, step in zip(reversed(order), reversed(cache.steps)):
        pre, carry_h, carry_c = _recur_backward(
            params, step, grad_hs[position] + carry_h, carry_c
        )
        for gate in gates:
            pre_all[gate][position] = pre[gate]
            rec_all[gate][position] = step.recurrent_inputs[gate]
    return _accumulate(
        params,
        grads,
        cache.xs,
        {gate: np.stack(rec_all[gate]) for gate in gates},
        {gate: np.stack(pre_all[gate]) for gate in gates},
    )
