"""Network engine: conv semantics, gating, gradients, Adam, counting."""

import math

import numpy as np
import pytest

from freqlens import kernels
from freqlens.net import (
    Adam,
    GatePlan,
    Network,
    TrainConfig,
    TrainingDivergedError,
    count_params_flops,
    evaluate,
    fcn_spec,
    resnet_spec,
    softmax_cross_entropy,
    train_network,
)
from freqlens.net.network import ConvUnitSpec, NetworkSpec

from oracles import direct_conv1d, finite_difference_gradients


def tiny_data(n=6, channels=1, length=16, classes=2, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, channels, length))
    y = np.arange(n) % classes
    return x, y.astype(np.int64)


class TestConvSemantics:
    def test_hand_convolution_without_padding(self):
        # same-padding output of k=2 pads one zero on the right; the first
        # three entries are the valid (unpadded) window sums
        x = np.array([[[1.0, 2.0, 3.0, 4.0]]])
        w = np.array([[[1.0, 1.0]]])
        out = kernels.conv1d_forward(x, w, np.zeros(1))
        assert np.array_equal(out[0, 0, :3], [3.0, 5.0, 7.0])

    def test_zero_kernel_gives_bias(self):
        x = np.random.default_rng(0).normal(size=(2, 3, 8))
        w = np.zeros((3, 4, 5))
        b = np.array([1.0, -2.0, 0.5, 3.0])
        out = kernels.conv1d_forward(x, w, b)
        assert np.array_equal(out, np.broadcast_to(b[None, :, None], (2, 4, 8)))

    def test_matches_direct_summation_oracle(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(2, 2, 12))
        w = rng.normal(size=(2, 3, 5))
        b = rng.normal(size=3)
        assert np.allclose(
            kernels.conv1d_forward(x, w, b), direct_conv1d(x, w, b), rtol=1e-10, atol=1e-10
        )


class TestGating:
    def test_closed_gate_is_exact_identity(self):
        spec = fcn_spec(depth=3, in_channels=1, classes=2, seed=1, filters=(4, 4, 4))
        plan = GatePlan.for_gates(spec, (1, 0, 1))
        net = Network(spec, plan)
        x, _ = tiny_data()
        _, caps = net.forward(x, training=False, capture=True)
        assert np.array_equal(caps[1], caps[0])  # unit 2 output is its input, bitwise

    def test_all_ones_plan_equals_default_network(self):
        spec = resnet_spec(depth=2, in_channels=1, classes=3, seed=7, filters=(4, 6))
        x, _ = tiny_data(classes=3)
        default = Network(spec)
        explicit = Network(spec, GatePlan.all_on(2))
        for (n1, v1, _), (n2, v2, _) in zip(default.param_items(), explicit.param_items()):
            assert n1 == n2 and np.array_equal(v1, v2)
        assert np.array_equal(default.forward(x), explicit.forward(x))

    def test_all_zero_plan_is_head_only(self):
        spec = fcn_spec(depth=2, in_channels=2, classes=2, seed=3, filters=(4, 4))
        net = Network(spec, GatePlan(gates=(0, 0)))
        x, _ = tiny_data(channels=2)
        logits = net.forward(x)
        manual = x.mean(axis=2) @ net.head.w + net.head.b
        assert np.allclose(logits, manual, rtol=0, atol=0)
        assert net.head_channels == 2

    def test_open_gate_equals_relu_of_core(self):
        spec = fcn_spec(depth=1, in_channels=1, classes=2, seed=5, filters=(3,))
        net = Network(spec)
        x, _ = tiny_data()
        _, caps = net.forward(x, training=False, capture=True)
        unit = net.units[0]
        manual = kernels.conv1d_forward(x, unit.core.conv.w, unit.core.conv.b)
        bn = unit.core.bn
        manual = bn.gamma[None, :, None] * (
            (manual - bn.running_mean[None, :, None])
            / np.sqrt(bn.running_var + bn.eps)[None, :, None]
        ) + bn.beta[None, :, None]
        assert np.allclose(caps[0], np.maximum(manual, 0.0), rtol=1e-12, atol=1e-12)

    def test_adapter_restores_width_after_skip(self):
        spec = fcn_spec(depth=2, in_channels=1, classes=2, seed=2, filters=(3, 5))
        plan = GatePlan.for_gates(spec, (0, 1))
        assert plan.adapters[1] is not None
        assert plan.adapters[1].in_channels == 1 and plan.adapters[1].out_channels == 3
        net = Network(spec, plan)
        x, _ = tiny_data()
        _, caps = net.forward(x, training=False, capture=True)

        unit = net.units[1]
        adapted = np.maximum(
            kernels.conv1d_forward(x, unit.adapter_conv.w, unit.adapter_conv.b), 0.0
        )
        manual = kernels.conv1d_forward(adapted, unit.core.conv.w, unit.core.conv.b)
        bn = unit.core.bn
        manual = bn.gamma[None, :, None] * (
            (manual - bn.running_mean[None, :, None])
            / np.sqrt(bn.running_var + bn.eps)[None, :, None]
        ) + bn.beta[None, :, None]
        assert np.allclose(caps[1], np.maximum(manual, 0.0), rtol=1e-12, atol=1e-12)

    def test_mismatch_without_adapter_rejected(self):
        spec = fcn_spec(depth=2, in_channels=1, classes=2, seed=2, filters=(3, 5))
        with pytest.raises(ValueError, match="adapter"):
            Network(spec, GatePlan(gates=(0, 1)))

    def test_forward_replay_is_bit_identical(self):
        spec = resnet_spec(depth=3, in_channels=1, classes=2, seed=11, filters=(4, 5))
        x, _ = tiny_data()
        a = Network(spec).forward(x)
        b = Network(spec).forward(x)
        assert np.array_equal(a, b)


class TestLossAndOptimizer:
    def test_uniform_logits_loss_is_ln_classes(self):
        # power-of-two batch so the batch mean of identical terms is exact
        for classes in (2, 3, 7):
            logits = np.zeros((4, classes))
            labels = np.arange(4) % classes
            loss, _ = softmax_cross_entropy(logits, labels)
            assert loss == math.log(classes)
        loss, _ = softmax_cross_entropy(np.zeros((5, 3)), np.arange(5) % 3)
        assert loss == pytest.approx(math.log(3), rel=1e-15)

    def test_gradient_zero_at_symmetric_minimum(self):
        # zero head on identical inputs with balanced labels: a stationary
        # point where the head gradients cancel exactly
        spec = fcn_spec(depth=1, in_channels=1, classes=2, seed=0, filters=(3,))
        net = Network(spec, GatePlan(gates=(0,)))
        net.head.w[...] = 0.0
        x = np.ones((2, 1, 8))
        y = np.array([0, 1])
        logits = net.forward(x, training=True)
        _, dlogits = softmax_cross_entropy(logits, y)
        net.zero_grads()
        net.backward(dlogits)
        grads = {name: grad.copy() for name, _, grad in net.param_items()}
        assert all(np.allclose(g, 0.0, atol=1e-15) for g in grads.values())

        before = {name: value.copy() for name, value, _ in net.param_items()}
        Adam().step(net, lr=1e-3)
        for name, value, _ in net.param_items():
            assert np.array_equal(value, before[name])

    def test_first_adam_step_closed_form(self):
        class OneParam:
            def __init__(self):
                self.value = np.array([1.0])
                self.grad = np.array([1.0])

            def param_items(self):
                yield "p", self.value, self.grad

        stub = OneParam()
        Adam().step(stub, lr=1e-3)
        # m-hat = 1, v-hat = 1 after bias correction
        assert stub.value[0] == pytest.approx(1.0 - 1e-3 / (1.0 + 1e-8), abs=1e-15)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_aborts_with_diagnostic(self):
        spec = fcn_spec(depth=1, in_channels=1, classes=2, seed=0, filters=(3,))
        net = Network(spec)
        values = net.get_values()
        values["head.linear.b"] = np.array([np.inf, -np.inf])
        net.set_values(values)
        x, y = tiny_data()
        with pytest.raises(TrainingDivergedError, match="epoch 1"):
            train_network(net, x, y, TrainConfig(epochs=1, batch_size=4, seed=0))


class TestGradients:
    @pytest.mark.parametrize(
        "spec_builder",
        [
            lambda: resnet_spec(depth=2, in_channels=1, classes=2, seed=13, filters=(4, 6)),
            lambda: fcn_spec(depth=2, in_channels=2, classes=3, seed=14, filters=(4, 5)),
        ],
    )
    def test_backward_matches_central_differences(self, spec_builder):
        spec = spec_builder()
        net = Network(spec)
        x, y = tiny_data(n=3, channels=spec.in_channels, length=16, classes=spec.classes, seed=5)

        logits = net.forward(x, training=True, update_running=False)
        _, dlogits = softmax_cross_entropy(logits, y)
        net.zero_grads()
        net.backward(dlogits)
        analytic = {name: grad.copy() for name, _, grad in net.param_items()}

        numeric = finite_difference_gradients(net, x, y, step=1e-5)
        worst = 0.0
        for name, fd in numeric.items():
            err = np.abs(analytic[name] - fd)
            denom = np.maximum(1e-8 + 1e-4 * np.maximum(np.abs(analytic[name]), np.abs(fd)), 1e-8)
            rel = float((err / np.maximum(np.abs(fd), 1.0)).max())
            assert np.all(err <= 1e-8 + 1e-4 * np.maximum(np.abs(analytic[name]), np.abs(fd))), (
                f"{name}: max abs err {err.max()}"
            )
            worst = max(worst, rel)
        assert worst < 1e-4

    def test_training_is_deterministic(self):
        spec = resnet_spec(depth=2, in_channels=1, classes=2, seed=21, filters=(4, 4))
        x, y = tiny_data(n=10, seed=9)
        cfg = TrainConfig(epochs=3, batch_size=4, seed=21)

        runs = []
        for _ in range(2):
            net = Network(spec)
            train_network(net, x, y, cfg)
            runs.append(net.get_values())
        assert runs[0].keys() == runs[1].keys()
        for name in runs[0]:
            assert np.array_equal(runs[0][name], runs[1][name]), name


class TestCounting:
    def test_single_conv_hand_count(self):
        unit = ConvUnitSpec("conv_layer", 2, 3, (5,), has_batchnorm=False)
        spec = NetworkSpec("fcn", 1, (unit,), in_channels=2, classes=2)
        params, flops = count_params_flops(spec, length=10)
        head_params = 3 * 2 + 2
        assert params == 2 * 3 * 5 + 3 + head_params
        assert flops == 2 * 2 * 3 * 5 * 10 + 2 * 3 * 2

    def test_skipping_reduces_counts(self):
        spec = resnet_spec(depth=3, in_channels=1, classes=2, filters=(4, 4))
        full_params, full_flops = count_params_flops(spec, length=32)
        plan = GatePlan.for_gates(spec, (1, 0, 1))  # channel-matched skip
        assert plan.adapters == (None, None, None)
        params, flops = count_params_flops(spec, plan, length=32)
        assert params < full_params
        assert flops < full_flops

    def test_depth2_resnet_hand_tally(self):
        spec = resnet_spec(depth=2, in_channels=1, classes=2)
        params, flops = count_params_flops(spec, length=64)

        def conv(cin, cout, k):
            return cin * cout * k + cout

        expect_params = (
            conv(1, 64, 8) + conv(64, 64, 5) + conv(64, 64, 3) + conv(1, 64, 1) + 4 * 2 * 64
            + conv(64, 128, 8) + conv(128, 128, 5) + conv(128, 128, 3) + conv(64, 128, 1)
            + 4 * 2 * 128
            + 128 * 2 + 2
        )
        expect_flops = 2 * 64 * (
            1 * 64 * 8 + 64 * 64 * 5 + 64 * 64 * 3 + 1 * 64 * 1
            + 64 * 128 * 8 + 128 * 128 * 5 + 128 * 128 * 3 + 64 * 128 * 1
        ) + 2 * 128 * 2
        assert params == expect_params
        assert flops == expect_flops

    def test_monotone_under_gate_closing(self):
        spec = fcn_spec(depth=4, in_channels=1, classes=2, filters=(8, 8, 8, 8))
        prev_params = None
        gates = [1, 1, 1, 1]
        for i in (3, 2, 1):
            gates[i] = 0
            params, _ = count_params_flops(spec, GatePlan.for_gates(spec, tuple(gates)), length=16)
            if prev_params is not None:
                assert params < prev_params
            prev_params = params


class TestEvaluate:
    def test_accuracy_on_trivial_separation(self):
        spec = fcn_spec(depth=1, in_channels=1, classes=2, seed=1, filters=(4,))
        net = Network(spec, GatePlan(gates=(0,)))
        net.head.w[...] = np.array([[1.0, -1.0]])
        net.head.b[...] = 0.0
        x = np.concatenate([np.ones((4, 1, 8)), -np.ones((4, 1, 8))])
        y = np.array([0] * 4 + [1] * 4)
        assert evaluate(net, x, y) == 1.0
