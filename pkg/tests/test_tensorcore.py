"""
张量核心测试：前向/反向、损失、优化器与文件格式
"""

import math

import numpy as np
import pytest

from src.tensorcore import (
    Dataset,
    Gradient,
    MomentumSGD,
    backward,
    build_network,
    cross_entropy,
    follow_network,
    forward,
    load_dataset,
    load_model,
    loss_and_grad,
    mlp,
    save_dataset,
    save_model,
    sgd_step,
    spec_loss,
)
from src.tensorcore.losses import acceptable_mask, spec_loss_batch
from src.tensorcore.serialization import dataset_from_bytes, dataset_to_bytes
from src.utils.exceptions import FileFormatError, InvalidLabelError, NonFiniteError, ShapeError

from tests.conftest import SMALL_CONV, with_random_biases


def _random_nets(count: int):
    for seed in range(count):
        if seed % 4 == 3:
            yield with_random_biases(build_network(SMALL_CONV, 12, 3, seed=seed).astype(np.float64), seed)
        else:
            hidden = 3 + seed % 5
            yield with_random_biases(mlp([12, hidden, hidden + 2, 3], seed=seed).astype(np.float64), seed)


def _perturbed(net, direction, h):
    return net.with_params([p + h * d for p, d in zip(net.params(), direction)])


class TestGradients:
    def test_param_gradient_matches_finite_difference(self):
        h = 1e-6
        for i, net in enumerate(_random_nets(20)):
            rng = np.random.default_rng(100 + i)
            x = rng.normal(size=(4, 12))
            y = rng.integers(0, 3, size=4)
            _, grad = loss_and_grad(net, x, y)
            direction = [rng.normal(size=p.shape) for p in net.params()]
            plus, _ = loss_and_grad(_perturbed(net, direction, h), x, y)
            minus, _ = loss_and_grad(_perturbed(net, direction, -h), x, y)
            numeric = (plus - minus) / (2 * h)
            analytic = sum(float((g * d).sum()) for g, d in zip(grad.params, direction))
            assert numeric == pytest.approx(analytic, rel=1e-4, abs=1e-6)

    def test_input_gradient_matches_finite_difference(self):
        h = 1e-6
        for i, net in enumerate(_random_nets(20)):
            rng = np.random.default_rng(200 + i)
            x = rng.normal(size=12)
            y = int(rng.integers(0, 3))
            _, grad = backward(net, x, y)
            v = rng.normal(size=12)
            plus, _ = backward(net, x + h * v, y)
            minus, _ = backward(net, x - h * v, y)
            numeric = (plus - minus) / (2 * h)
            assert numeric == pytest.approx(float(grad.input @ v), rel=1e-4, abs=1e-6)

    def test_gradient_is_congruent_with_parameters(self, conv_net):
        x = np.ones((2, 12), dtype=np.float32)
        _, grad = loss_and_grad(conv_net, x, [0, 2])
        assert [g.shape for g in grad.params] == [p.shape for p in conv_net.params()]
        assert grad.input.shape == (2, 12)

    def test_sum_of_gradients_drops_input(self, toy_net):
        _, g1 = loss_and_grad(toy_net, np.zeros((1, 2)), [0])
        total = g1 + g1
        assert total.input is None
        assert np.allclose(total.params[0], 2 * g1.params[0])


class TestForward:
    def test_forward_shape_and_dtype(self, toy_net):
        logits = forward(toy_net, np.array([0.5, -0.5]))
        assert logits.shape == (2,)
        assert logits.dtype == np.float32

    def test_wrong_input_length(self, toy_net):
        with pytest.raises(ShapeError):
            forward(toy_net, np.zeros(3))

    def test_follow_network_shape(self):
        net = follow_network(seed=0)
        assert net.input_dim == 541
        assert net.output_dim == 7
        assert sum(1 for layer in net.layers if layer.params()) == 9
        assert forward(net, np.full(541, 2.0, dtype=np.float32)).shape == (7,)

    def test_leading_activation_keeps_conv_input_shape(self):
        net = build_network([{"kind": "relu"}] + SMALL_CONV, 12, 3, seed=1)
        assert net.input_shape == (1, 12)
        assert net.forward_batch(np.ones((2, 12), dtype=np.float32)).shape == (2, 3)
        dense = build_network([{"kind": "relu"}, {"kind": "dense", "out_features": None}], 12, 3)
        assert dense.input_shape == (12,)

    def test_network_is_immutable_under_sgd(self, toy_net, toy_dataset):
        before = [p.copy() for p in toy_net.params()]
        _, grad = loss_and_grad(toy_net, toy_dataset.x, toy_dataset.y)
        updated = sgd_step(toy_net, grad, 0.1)
        for p, q in zip(before, toy_net.params()):
            assert np.array_equal(p, q)
        assert not np.array_equal(updated.params()[0], before[0])


class TestLosses:
    def test_cross_entropy_of_equal_logits(self):
        assert cross_entropy(np.array([0.0, 0.0]), 0) == pytest.approx(math.log(2))

    def test_cross_entropy_is_stable_for_large_logits(self):
        value = cross_entropy(np.array([1000.0, 0.0]), 1)
        assert value == pytest.approx(1000.0)

    def test_cross_entropy_label_out_of_range(self):
        with pytest.raises(InvalidLabelError):
            cross_entropy(np.array([0.0, 1.0]), 2)

    def test_cross_entropy_rejects_nan(self):
        with pytest.raises(NonFiniteError):
            cross_entropy(np.array([np.nan, 1.0]), 0)

    def test_spec_loss_with_single_label_equals_cross_entropy(self, rng):
        for _ in range(20):
            z = rng.normal(size=5) * 3
            y = int(rng.integers(0, 5))
            assert spec_loss(z, [y]) == pytest.approx(cross_entropy(z, y), abs=1e-12)

    def test_spec_loss_all_acceptable_is_zero(self):
        assert spec_loss(np.array([3.0, -1.0, 0.5]), [0, 1, 2]) == pytest.approx(0.0)

    def test_spec_loss_uses_best_acceptable_class(self):
        z = np.array([2.0, -5.0, 0.0])
        assert spec_loss(z, [0, 1]) == pytest.approx(cross_entropy(np.array([2.0, 0.0]), 0))

    def test_spec_loss_bounds_are_monotone(self, rng):
        lo = rng.normal(size=(8, 4))
        up = lo + rng.uniform(0, 1, size=(8, 4))
        mask = acceptable_mask([1], 4)
        tight, _, _ = spec_loss_batch(lo, lo, mask)
        loose, _, _ = spec_loss_batch(lo, up, mask)
        assert np.all(loose >= tight - 1e-12)

    def test_empty_acceptable_set(self):
        with pytest.raises(InvalidLabelError):
            spec_loss(np.array([0.0, 1.0]), [])


class TestOptimizer:
    def test_sgd_step_formula(self, toy_net, toy_dataset):
        _, grad = loss_and_grad(toy_net, toy_dataset.x, toy_dataset.y)
        updated = sgd_step(toy_net, grad, 0.5)
        for p, g, q in zip(toy_net.params(), grad.params, updated.params()):
            assert np.allclose(q, p - 0.5 * g, atol=1e-6)

    def test_zero_momentum_matches_sgd(self, toy_net, toy_dataset):
        _, grad = loss_and_grad(toy_net, toy_dataset.x, toy_dataset.y)
        a = sgd_step(toy_net, grad, 0.1)
        b = MomentumSGD(0.1, 0.0).step(toy_net, grad)
        for p, q in zip(a.params(), b.params()):
            assert np.array_equal(p, q)

    def test_momentum_accumulates(self, toy_net, toy_dataset):
        _, grad = loss_and_grad(toy_net, toy_dataset.x, toy_dataset.y)
        opt = MomentumSGD(0.1, 0.9)
        first = opt.step(toy_net, grad)
        second = opt.step(first, grad)
        # 第二步速度为 1.9g
        for p, q, g in zip(first.params(), second.params(), grad.params):
            assert np.allclose(q, p - 0.1 * 1.9 * g, atol=1e-5)

    def test_non_finite_gradient_is_rejected(self, toy_net):
        bad = Gradient(tuple(np.full_like(p, np.nan) for p in toy_net.params()))
        with pytest.raises(NonFiniteError):
            sgd_step(toy_net, bad, 0.1)

    def test_mismatched_gradient_is_rejected(self, toy_net, conv_net):
        _, grad = loss_and_grad(conv_net, np.zeros((1, 12)), [0])
        with pytest.raises(ShapeError):
            sgd_step(toy_net, grad, 0.1)


class TestFiles:
    def test_model_roundtrip_is_bit_exact(self, tmp_path, conv_net):
        path = tmp_path / "model.json"
        save_model(conv_net, path)
        loaded = load_model(path)
        assert loaded.input_dim == conv_net.input_dim
        for p, q in zip(conv_net.params(), loaded.params()):
            assert p.dtype == q.dtype
            assert np.array_equal(p, q)

    def test_model_file_not_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(FileFormatError):
            load_model(path)

    def test_dataset_roundtrip(self, tmp_path, toy_dataset):
        path = tmp_path / "toy.sdt"
        save_dataset(toy_dataset, path)
        loaded = load_dataset(path)
        assert np.array_equal(loaded.x, toy_dataset.x)
        assert np.array_equal(loaded.y, toy_dataset.y)
        assert loaded.num_classes == 2

    def test_dataset_bad_magic(self, toy_dataset):
        data = bytearray(dataset_to_bytes(toy_dataset))
        data[:4] = b"XXXX"
        with pytest.raises(FileFormatError):
            dataset_from_bytes(bytes(data))

    def test_dataset_truncated(self, toy_dataset):
        data = dataset_to_bytes(toy_dataset)
        with pytest.raises(FileFormatError):
            dataset_from_bytes(data[:-3])

    def test_dataset_label_out_of_range(self):
        with pytest.raises(InvalidLabelError):
            Dataset(np.zeros((2, 3)), [0, 4], 3)

    def test_dataset_rejects_nan(self):
        with pytest.raises(NonFiniteError):
            Dataset(np.array([[np.nan, 0.0]]), [0], 2)
