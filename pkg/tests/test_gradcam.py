"""Grad-CAM attribution properties."""

import csv

import numpy as np
import pytest

from freqlens.gradcam import grad_cam, write_attribution_csv
from freqlens.net import GatePlan, Network, fcn_spec, resnet_spec


def make_net(depth=2, classes=2, seed=6, filters=(4, 6)):
    spec = resnet_spec(depth=depth, in_channels=1, classes=classes, seed=seed, filters=filters)
    return Network(spec)


class TestGradCam:
    def test_attribution_is_nonnegative(self):
        net = make_net()
        rng = np.random.default_rng(0)
        for i in range(5):
            result = grad_cam(net, rng.normal(size=(1, 24)), class_index=i % 2)
            assert result.activation.shape == (24,)
            assert np.all(result.activation >= 0.0)

    def test_zero_gradient_gives_zero_map(self):
        net = make_net()
        net.head.w[:, 0] = 0.0  # class score no longer depends on the last unit
        result = grad_cam(net, np.random.default_rng(1).normal(size=(1, 16)), class_index=0)
        assert np.array_equal(result.activation, np.zeros(16))

    def test_single_channel_positive_head_is_proportional(self):
        spec = fcn_spec(depth=1, in_channels=1, classes=2, seed=2, filters=(1,))
        net = Network(spec)
        net.head.w[...] = np.array([[2.0, -1.0]])
        x = np.random.default_rng(3).normal(size=(1, 20))
        result = grad_cam(net, x, class_index=0)
        _, caps = net.forward(x[None], training=False, capture=True)
        activation = caps[0][0, 0]
        expected = np.maximum((2.0 / 20) * activation, 0.0)
        assert np.allclose(result.activation, expected, rtol=1e-12, atol=1e-12)

    def test_score_is_pre_softmax_logit(self):
        net = make_net()
        x = np.random.default_rng(4).normal(size=(1, 16))
        logits = net.forward(x[None])
        result = grad_cam(net, x, class_index=1)
        assert result.score == logits[0, 1]

    def test_gradients_match_finite_differences(self):
        net = make_net(seed=15)
        x = np.random.default_rng(5).normal(size=(1, 16))
        y = 1
        net.forward(x[None], training=False)
        activations = net.head_input.copy()
        dlogits = np.zeros((1, net.spec.classes))
        dlogits[0, y] = 1.0
        net.zero_grads()
        grad = net.head_input_gradient(dlogits)
        net.zero_grads()

        w, b = net.head.w, net.head.b

        def score(act):
            return float((act.mean(axis=2) @ w + b)[0, y])

        step = 1e-5
        flat_grad = grad.reshape(-1)
        pert = activations.copy()
        flat = pert.reshape(-1)
        for idx in np.linspace(0, flat.size - 1, num=40).astype(int):
            orig = flat[idx]
            flat[idx] = orig + step
            plus = score(pert)
            flat[idx] = orig - step
            minus = score(pert)
            flat[idx] = orig
            fd = (plus - minus) / (2 * step)
            assert flat_grad[idx] == pytest.approx(fd, rel=1e-4, abs=1e-8)

    def test_scaling_class_weights_scales_attribution(self):
        net = make_net(seed=16)
        x = np.random.default_rng(6).normal(size=(1, 16))
        base = grad_cam(net, x, class_index=0)
        net.head.w[:, 0] *= 2.0  # power of two: unit outputs unchanged, map scales exactly
        scaled = grad_cam(net, x, class_index=0)
        assert np.array_equal(scaled.activation, base.activation * 2.0)

    def test_gated_plan_uses_last_preserved_unit(self):
        spec = resnet_spec(depth=3, in_channels=1, classes=2, seed=7, filters=(4, 4))
        plan = GatePlan.for_gates(spec, (1, 1, 0))
        net = Network(spec, plan)
        x = np.random.default_rng(7).normal(size=(1, 12))
        result = grad_cam(net, x, class_index=0)
        _, caps = net.forward(x[None], training=False, capture=True)
        assert np.array_equal(caps[2], caps[1])  # trailing unit is identity
        assert result.activation.shape == (12,)

    def test_class_out_of_range_rejected(self):
        net = make_net()
        with pytest.raises(ValueError, match="out of range"):
            grad_cam(net, np.zeros((1, 16)), class_index=5)

    def test_csv_emission(self, tmp_path):
        net = make_net()
        result = grad_cam(net, np.random.default_rng(8).normal(size=(1, 10)), 0)
        path = tmp_path / "attribution.csv"
        write_attribution_csv(result, path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "activation"]
        assert len(rows) == 11
        values = np.array([float(r[1]) for r in rows[1:]])
        assert np.array_equal(values, result.activation)
