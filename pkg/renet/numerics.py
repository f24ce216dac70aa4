# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Dense tensor kernels.

Tensors are numpy arrays in row-major order with dtype float32 ("f32",
training) or float64 ("f64", gradient checking). Kernels never convert
between the two; use ``cast`` explicitly.

Random numbers come from numpy's PCG64 bit generator, which produces the
same stream for the same seed on every platform.
"""

from concurrent.futures import Executor
from typing import Any, Callable, Iterable, Optional

import numpy as np

from renet.errors import DTypeError, NonFiniteError, ShapeError

DTYPES = {"f32": np.float32, "f64": np.float64}
ACTIVATIONS = ("tanh", "sigmoid", "relu", "identity")

_BLOCK_ELEMENTS = 1 << 20
# fewer k per block than this and the in-place k loop is faster
_MIN_BLOCK = 32


def as_dtype(name: str) -> type:
    """Map a dtype name to the numpy scalar type

    Args:
        name (str): "f32" or "f64"

    Returns:
        type: np.float32 or np.float64
    """
    try:
        return DTYPES[name]
    except KeyError as exc:
        raise DTypeError(f"Unsupported dtype '{name}'. Options are f32, f64") from exc


def dtype_name(dtype: Any) -> str:
    """Inverse of ``as_dtype``"""
    dtype = np.dtype(dtype)
    for name, scalar in DTYPES.items():
        if dtype == np.dtype(scalar):
            return name
    raise DTypeError(f"Unsupported dtype '{dtype}'")


def cast(x: np.ndarray, dtype: Any) -> np.ndarray:
    """Explicit dtype conversion (returns a new array)"""
    return np.array(x, dtype=as_dtype(dtype) if isinstance(dtype, str) else dtype)


def check_same_dtype(*arrays: np.ndarray) -> None:
    dtypes = {np.dtype(a.dtype) for a in arrays}
    if len(dtypes) > 1:
        names = ", ".join(sorted(str(d) for d in dtypes))
        raise DTypeError(f"Mixed dtypes {names}; convert explicitly with cast()")


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with a fixed summation order

    The result is accumulated as ``sum_k a[..., k] * b[k, :]`` for
    k = 0, 1, ..., K-1, each product and each addition rounded separately,
    so a scalar triple loop over the same order reproduces it bit for bit.
    Leading axes of ``a`` are treated as rows.

    Args:
        a (np.ndarray): Left operand, shape (..., K)
        b (np.ndarray): Right operand, shape (K, N)

    Returns:
        np.ndarray: Shape (..., N)
    """
    if b.ndim != 2 or a.ndim < 1 or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    check_same_dtype(a, b)
    rows = a.reshape(-1, a.shape[-1])
    m, (depth, n) = rows.shape[0], b.shape
    out = np.zeros((m, n), dtype=a.dtype)
    block = _BLOCK_ELEMENTS // max(1, m * n)
    if block < _MIN_BLOCK:
        term = np.empty_like(out)
        for k in range(depth):
            np.multiply(rows[:, k : k + 1], b[k], out=term)
            out += term
    else:
        # small outputs: materialise a block of products, add.accumulate is strictly sequential
        for start in range(0, depth, block):
            stop = min(start + block, depth)
            products = rows[:, start:stop, None] * b[None, start:stop, :]
            products[:, 0, :] += out
            out = np.add.accumulate(products, axis=1)[:, -1, :]
    return np.ascontiguousarray(out).reshape(a.shape[:-1] + (n,))


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Logistic function without overflow for any finite input"""
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(z.dtype, copy=False)


def pointwise(x: np.ndarray, f: str) -> np.ndarray:
    """Apply an activation elementwise

    Args:
        x (np.ndarray): Input tensor
        f (str): Activation name. Options are "tanh", "sigmoid", "relu", "identity"

    Returns:
        np.ndarray: Same shape and dtype as x
    """
    if f == "tanh":
        return np.tanh(x)
    if f == "sigmoid":
        return sigmoid(x)
    if f == "relu":
        return np.maximum(x, 0).astype(x.dtype, copy=False)
    if f == "identity":
        return x.copy()
    raise ValueError(f"Unsupported activation '{f}'. Options are {', '.join(ACTIVATIONS)}")


def pointwise_grad(y: np.ndarray, f: str) -> np.ndarray:
    """Derivative of an activation expressed through its output y = f(x)"""
    if f == "tanh":
        return 1.0 - y * y
    if f == "sigmoid":
        return y * (1.0 - y)
    if f == "relu":
        return (y > 0).astype(y.dtype)
    if f == "identity":
        return np.ones_like(y)
    raise ValueError(f"Unsupported activation '{f}'. Options are {', '.join(ACTIVATIONS)}")


def concat_last(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Concatenate along the last axis, a's features first"""
    if a.shape[:-1] != b.shape[:-1]:
        raise ShapeError(f"concat_last leading shape mismatch: {a.shape} vs {b.shape}")
    check_same_dtype(a, b)
    return np.concatenate([a, b], axis=-1)


def split_last(x: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of ``concat_last``: first p features, then the rest"""
    if not 0 <= p <= x.shape[-1]:
        raise ShapeError(f"cannot split {x.shape} at {p}")
    return x[..., :p], x[..., p:]


def require_finite(x: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"Non-finite values in {what}")


# Random numbers


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed"""
    return np.random.Generator(np.random.PCG64(seed))


def child_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent stream identified by (seed, key...)

    Streams for different keys never overlap, so per-sample or per-epoch
    generators can be created in any order (or in parallel) and still give
    the same draws.
    """
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(sequence))


def rng_state(rng: np.random.Generator) -> dict:
    """JSON-compatible snapshot of a generator"""
    state = rng.bit_generator.state
    return {
        "bit_generator": state["bit_generator"],
        "state": {k: int(v) for k, v in state["state"].items()},
        "has_uint32": int(state["has_uint32"]),
        "uinteger": int(state["uinteger"]),
    }


def restore_rng(state: dict) -> np.random.Generator:
    """Rebuild a generator from ``rng_state`` output"""
    if state.get("bit_generator") != "PCG64":
        raise ValueError(f"Unsupported bit generator '{state.get('bit_generator')}'")
    bit_generator = np.random.PCG64()
    bit_generator.state = state
    return np.random.Generator(bit_generator)


# Parallel helpers


def run_ordered(
    tasks: Iterable[Callable[[], Any]], executor: Optional[Executor] = None
) -> list[Any]:
    """Run callables, optionally on an executor, returning results in task order"""
    tasks = list(tasks)
    if executor is None or len(tasks) < 2:
        return [task() for task in tasks]
    futures = [executor.submit(task) for task in tasks]
    return [future.result() for future in futures]
