# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from conftest import numeric_gradient, random_cell, scalar_step
from renet.cells import (
    CellInit,
    CellKind,
    CellParams,
    CellState,
    cell_forward,
    cell_step_backward,
    gru_step,
    lstm_step,
    parameter_count,
    run_sequence,
    tanh_step,
    tensor_names,
    zero_grads,
)
from renet.errors import CacheMismatchError, ConfigError, ShapeError
from renet.gradcheck import relative_error
from renet.numerics import make_rng

KINDS = ["tanh", "gru", "lstm"]


def test_tensor_names():
    assert tensor_names("tanh") == ["W", "U", "b"]
    assert set(tensor_names("gru")) == {"W", "U", "b", "W_g", "U_g", "b_g"}
    assert len(tensor_names("lstm")) == 12


@pytest.mark.parametrize("kind", KINDS)
def test_parameter_count_matches_tensors(kind):
    params = CellParams.initialize(kind, 5, 3, make_rng(0))
    assert sum(v.size for v in params.tensors.values()) == parameter_count(kind, 5, 3)
    params.validate()


def test_cell_kind_parse():
    assert CellKind.parse("GRU") is CellKind.GRU
    with pytest.raises(ConfigError):
        CellKind.parse("rnn")


def test_orthogonal_recurrent_blocks():
    params = CellParams.initialize("gru", 4, 3, make_rng(1))
    for block in (params.tensors["U_g"][:3], params.tensors["U_g"][3:], params.tensors["U"]):
        assert_allclose(block @ block.T, np.eye(3), atol=1e-12)


def test_lstm_forget_bias_and_glorot_option():
    params = CellParams.initialize("lstm", 4, 3, make_rng(2), init=CellInit("glorot", 2.0))
    assert_array_equal(params.tensors["b_forget"], 2.0)
    assert_array_equal(params.tensors["b_input"], 0.0)
    with pytest.raises(ConfigError):
        CellParams.initialize("lstm", 4, 3, make_rng(2), init=CellInit("identity"))


def test_gru_zero_params_is_a_fixed_point():
    params = CellParams.zeros("gru", 3, 2)
    assert_array_equal(gru_step(params, np.array([0.3, -1.0, 2.0]), np.zeros(2)), 0.0)


def test_gru_closed_update_gate_freezes_state():
    params = CellParams.zeros("gru", 2, 3)
    params.tensors["b_g"][:3] = -30.0
    v = np.array([0.4, -0.7, 0.1])
    assert_allclose(gru_step(params, np.array([1.0, -2.0]), v), v, atol=1e-9)


def test_gru_all_ones_hand_evaluation():
    params = CellParams.zeros("gru", 1, 2)
    params.tensors = {name: np.ones_like(value) for name, value in params.tensors.items()}
    h = gru_step(params, np.array([1.0]), np.zeros(2))
    # gates: sigma(1 + 0 + 1); candidate: tanh(1 + 0 + 1); h = u * candidate
    sigma2 = 1.0 / (1.0 + math.exp(-2.0))
    assert_allclose(h, [sigma2 * math.tanh(2.0)] * 2, atol=1e-12)


def test_tanh_examples():
    zero = CellParams.zeros("tanh", 1, 1)
    assert_array_equal(tanh_step(zero, np.array([0.5]), np.zeros(1)), 0.0)
    identity = CellParams.zeros("tanh", 1, 1)
    identity.tensors["W"][:] = 1.0
    assert_allclose(tanh_step(identity, np.array([0.5]), np.zeros(1)), [math.tanh(0.5)], atol=1e-15)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("seed", range(5))
def test_step_matches_scalar_oracle(kind, seed):
    params = random_cell(kind, 3, 2, seed)
    rng = make_rng(100 + seed)
    x, h = rng.standard_normal(3), rng.uniform(-1, 1, 2)
    c = rng.standard_normal(2) if kind == "lstm" else None
    state, _ = cell_forward(params, x, CellState(h, c))
    expected_h, expected_c = scalar_step(params, x, h, c)
    assert_allclose(state.h, expected_h, atol=1e-12)
    if kind == "lstm":
        assert_allclose(state.c, expected_c, atol=1e-12)


def test_lstm_zero_params_zero_state():
    params = CellParams.zeros("lstm", 2, 3)
    state = lstm_step(params, np.array([1.0, -1.0]), CellState(np.zeros(3), np.zeros(3)))
    assert_array_equal(state.h, 0.0)
    assert_array_equal(state.c, 0.0)


def test_lstm_saturated_gates_preserve_memory():
    params = random_cell("lstm", 2, 3, seed=4, scale=0.1)
    params.tensors["b_forget"][:] = 30.0
    params.tensors["b_input"][:] = -30.0
    c_prev = np.array([0.5, -1.2, 2.0])
    state = lstm_step(params, np.array([0.3, 0.1]), CellState(np.array([0.1, 0.2, -0.3]), c_prev))
    assert_allclose(state.c, c_prev, atol=1e-9)


def test_step_functions_check_kind_and_shape():
    with pytest.raises(ShapeError):
        gru_step(CellParams.zeros("tanh", 2, 2), np.zeros(2), np.zeros(2))
    with pytest.raises(ShapeError):
        tanh_step(CellParams.zeros("tanh", 2, 2), np.zeros(3), np.zeros(2))


def test_gru_bounds_and_gate_ranges():
    params = random_cell("gru", 4, 5, seed=9, scale=1.0)
    rng = make_rng(9)
    x, h = rng.standard_normal((50, 4)), rng.uniform(-1, 1, (50, 5))
    state, cache = cell_forward(params, x, CellState(h))
    assert np.all(np.abs(state.h) <= 1.0)
    gates = cache.activations["gates"]
    assert np.all((gates > 0) & (gates < 1))


def test_step_is_deterministic():
    params = random_cell("lstm", 3, 4, seed=1)
    x, h = np.full(3, 0.2), np.full(4, -0.1)
    first = lstm_step(params, x, CellState(h))
    second = lstm_step(params, x, CellState(h))
    assert_array_equal(first.h, second.h)
    assert_array_equal(first.c, second.c)


@pytest.mark.parametrize("kind", KINDS)
def test_zero_output_gradient_gives_zero_gradients(kind):
    params = random_cell(kind, 3, 2, seed=0)
    _, cache = cell_forward(params, np.ones(3), CellState(np.zeros(2)))
    grads = zero_grads(params)
    grad_x, grad_h, _ = cell_step_backward(params, cache, np.zeros(2), grads)
    assert_array_equal(grad_x, 0.0)
    assert_array_equal(grad_h, 0.0)
    for value in grads.values():
        assert_array_equal(value, 0.0)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("seed", range(20))
def test_step_backward_matches_finite_differences(kind, seed):
    d, input_dim = 3, 2
    params = random_cell(kind, input_dim, d, seed)
    rng = make_rng(1000 + seed)
    x, h_prev = rng.standard_normal(input_dim), rng.uniform(-1, 1, d)
    c_prev = rng.standard_normal(d) if kind == "lstm" else None
    r_h, r_c = rng.standard_normal(d), rng.standard_normal(d)

    def loss():
        state, _ = cell_forward(params, x, CellState(h_prev, c_prev))
        total = float(np.sum(r_h * state.h))
        if kind == "lstm":
            total += float(np.sum(r_c * state.c))
        return total

    _, cache = cell_forward(params, x, CellState(h_prev, c_prev))
    grads = zero_grads(params)
    grad_x, grad_h, grad_c = cell_step_backward(
        params, cache, r_h, grads, r_c if kind == "lstm" else None
    )
    for name, value in params.tensors.items():
        assert relative_error(grads[name], numeric_gradient(loss, value)) < 1e-6, name
    assert relative_error(grad_x, numeric_gradient(loss, x)) < 1e-6
    assert relative_error(grad_h, numeric_gradient(loss, h_prev)) < 1e-6
    if kind == "lstm":
        assert relative_error(grad_c, numeric_gradient(loss, c_prev)) < 1e-6


def test_tanh_without_recurrence_is_a_perceptron():
    params = random_cell("tanh", 4, 3, seed=5)
    params.tensors["U"][:] = 0.0
    rng = make_rng(5)
    x, grad_h = rng.standard_normal(4), rng.standard_normal(3)
    state, cache = cell_forward(params, x, CellState(rng.standard_normal(3)))
    grads = zero_grads(params)
    cell_step_backward(params, cache, grad_h, grads)
    expected = np.outer(grad_h * (1 - state.h**2), x)
    assert_allclose(grads["W"], expected, atol=1e-12)


def test_gradients_accumulate():
    params = random_cell("gru", 2, 2, seed=6)
    _, cache = cell_forward(params, np.ones(2), CellState(np.zeros(2)))
    once, twice = zero_grads(params), zero_grads(params)
    cell_step_backward(params, cache, np.ones(2), once)
    cell_step_backward(params, cache, np.ones(2), twice)
    cell_step_backward(params, cache, np.ones(2), twice)
    for name in once:
        assert_allclose(twice[name], 2 * once[name], rtol=1e-15)


def test_cache_from_another_cell_is_rejected():
    gru = random_cell("gru", 2, 2, seed=0)
    _, cache = cell_forward(gru, np.ones(2), CellState(np.zeros(2)))
    tanh = random_cell("tanh", 2, 2, seed=0)
    with pytest.raises(CacheMismatchError):
        cell_step_backward(tanh, cache, np.ones(2), zero_grads(tanh))
    wider = random_cell("gru", 3, 2, seed=0)
    with pytest.raises(CacheMismatchError):
        cell_step_backward(wider, cache, np.ones(2), zero_grads(wider))


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("reverse", [False, True])
def test_run_sequence_matches_stepping(kind, reverse):
    params = random_cell(kind, 3, 2, seed=8)
    xs = make_rng(8).standard_normal((4, 5, 3))
    hs, _ = run_sequence(params, xs, reverse)
    state = CellState(np.zeros((5, 2)), np.zeros((5, 2)) if kind == "lstm" else None)
    for t in (range(3, -1, -1) if reverse else range(4)):
        state, _ = cell_forward(params, xs[t], state)
        assert_allclose(hs[t], state.h, atol=1e-12)
