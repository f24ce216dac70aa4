# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from conftest import numeric_gradient
from renet.classifier import (
    FcParams,
    fc_backward,
    fc_forward,
    flatten,
    predict,
    softmax,
    softmax_nll,
    unflatten,
)
from renet.errors import LabelError, ShapeError
from renet.gradcheck import relative_error
from renet.numerics import make_rng


def random_fc(n_in, n_out, seed, activation="relu"):
    rng = make_rng(seed)
    return FcParams(rng.standard_normal((n_out, n_in)), rng.standard_normal(n_out), activation)


def test_flatten_shapes():
    H = np.arange(4.0).reshape(1, 1, 4)
    assert_array_equal(flatten(H), [0.0, 1.0, 2.0, 3.0])
    assert flatten(np.zeros((7, 7, 512))).shape == (25088,)
    assert flatten(np.zeros((3, 7, 7, 2)), batched=True).shape == (3, 98)


def test_flatten_is_row_major_and_invertible():
    H = make_rng(0).standard_normal((2, 3, 4))
    flat = flatten(H)
    assert flat[1 * 3 * 4 + 2 * 4 + 3] == H[1, 2, 3]
    assert_array_equal(unflatten(flat, (2, 3, 4)), H)


def test_fc_forward_examples():
    zero = FcParams(np.zeros((3, 4)), np.zeros(3))
    assert_array_equal(fc_forward(np.ones(4), zero)[0], 0.0)
    identity = FcParams(np.eye(4), np.zeros(4), "identity")
    x = np.array([-1.0, 0.5, 2.0, -3.0])
    assert_array_equal(fc_forward(x, identity)[0], x)


def test_fc_forward_matches_scalar_oracle():
    params = random_fc(8, 5, seed=1)
    x = make_rng(2).standard_normal(8)
    expected = [
        max(0.0, sum(params.weight[r, k] * x[k] for k in range(8)) + params.bias[r])
        for r in range(5)
    ]
    assert_allclose(fc_forward(x, params)[0], expected, atol=1e-12)


def test_fc_rejects_bad_shapes():
    with pytest.raises(ShapeError):
        fc_forward(np.ones(3), random_fc(4, 2, 0))
    with pytest.raises(ShapeError):
        FcParams(np.zeros((2, 3)), np.zeros(3))
    with pytest.raises(ValueError):
        FcParams(np.zeros((2, 3)), np.zeros(2), "tanh")


@pytest.mark.parametrize("activation", ["relu", "identity"])
def test_fc_backward_matches_finite_differences(activation):
    params = random_fc(6, 4, seed=3, activation=activation)
    rng = make_rng(4)
    x, R = rng.standard_normal((3, 6)), rng.standard_normal((3, 4))

    def loss():
        return float(np.sum(R * fc_forward(x, params)[0]))

    _, cache = fc_forward(x, params)
    grad_x, grad_w, grad_b = fc_backward(params, cache, R)
    assert relative_error(grad_x, numeric_gradient(loss, x)) < 1e-7
    assert relative_error(grad_w, numeric_gradient(loss, params.weight)) < 1e-7
    assert relative_error(grad_b, numeric_gradient(loss, params.bias)) < 1e-7


def test_uniform_logits_cost_log_k():
    loss, grad = softmax_nll(np.zeros(10), 3)
    assert loss == pytest.approx(math.log(10), abs=1e-12)
    assert_allclose(grad, np.full(10, 0.1) - np.eye(10)[3], atol=1e-15)


def test_confident_correct_logits_cost_nothing():
    logits = np.zeros(10)
    logits[7] = 1000.0
    loss, grad = softmax_nll(logits, 7)
    assert loss == pytest.approx(0.0, abs=1e-12)
    assert_allclose(grad, 0.0, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_softmax_nll_gradient_matches_finite_differences(seed):
    rng = make_rng(seed)
    logits, label = rng.standard_normal(10) * 2, int(rng.integers(0, 10))
    _, grad = softmax_nll(logits, label)
    numeric = numeric_gradient(lambda: softmax_nll(logits, label)[0], logits)
    assert_allclose(grad, numeric, atol=1e-7)


def test_softmax_properties():
    logits = make_rng(5).standard_normal((4, 6)) * 10
    p = softmax(logits)
    assert np.all(p > 0)
    assert_allclose(p.sum(axis=-1), 1.0, atol=1e-12)
    labels = np.array([0, 5, 2, 2])
    shifted, _ = softmax_nll(logits + 123.0, labels)
    assert_allclose(shifted, softmax_nll(logits, labels)[0], atol=1e-9)


def test_softmax_nll_batched_and_f32():
    logits = make_rng(6).standard_normal((3, 4)).astype(np.float32)
    losses, grad = softmax_nll(logits, np.array([0, 1, 3]))
    assert losses.dtype == np.float64 and losses.shape == (3,)
    assert grad.dtype == np.float32
    assert losses[2] == pytest.approx(softmax_nll(logits[2], 3)[0])


def test_labels_out_of_range():
    with pytest.raises(LabelError):
        softmax_nll(np.zeros(3), 3)
    with pytest.raises(LabelError):
        softmax_nll(np.zeros((2, 3)), np.array([0, -1]))
    with pytest.raises(ShapeError):
        softmax_nll(np.zeros((2, 3)), np.array([0, 1, 2]))


def test_predict_ties_take_the_lowest_class():
    assert_array_equal(predict(np.array([[1.0, 3.0, 3.0], [0.0, 0.0, 0.0]])), [1, 0])
