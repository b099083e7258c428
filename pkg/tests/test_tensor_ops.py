"""Unit and gradient-check tests for the tensor engine."""

import numpy as np
import numpy.testing as npt
import pytest

from sincmi import ops
from sincmi import tensor as tn
from sincmi.tensor import ShapeError, Tape, Tensor

from helpers import numerical_grad, rel_err


def grad_of(build_loss, x0, h=1e-6):
    """Autodiff and finite-difference gradients of a scalar loss w.r.t. x0."""
    x = Tensor(x0, requires_grad=True)
    loss = build_loss(x)
    loss.backward()
    num = numerical_grad(lambda v: float(build_loss(Tensor(v)).data), x0, h=h)
    return x.grad, num


class TestConvTemporal:
    def test_zero_input_gives_zero_output(self):
        x = Tensor(np.zeros((2, 1, 3, 16)))
        k = Tensor(np.random.default_rng(0).standard_normal((4, 5)))
        out = ops.conv_temporal(x, k, mode="same")
        assert out.shape == (2, 4, 3, 16)
        npt.assert_array_equal(out.data, 0.0)

    def test_impulse_response_is_reversed_kernel(self):
        # cross-correlation convention: the impulse reads the kernel backwards
        T, K = 17, 5
        x = np.zeros((1, 1, 1, T))
        x[0, 0, 0, T // 2] = 1.0
        k = np.arange(1.0, K + 1.0)
        out = ops.conv_temporal(Tensor(x), Tensor(k.reshape(1, K)), mode="same").data[0, 0, 0]
        center = T // 2
        left = (K - 1) // 2
        expected = np.zeros(T)
        expected[center - (K - 1 - left):center + left + 1] = k[::-1]
        npt.assert_array_equal(out, expected)

    def test_length_one_unit_kernel_is_identity(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((2, 1, 3, 10))
        out = ops.conv_temporal(Tensor(x), Tensor(np.ones((1, 1))), mode="same")
        npt.assert_array_equal(out.data, x)

    def test_valid_mode_length(self):
        x = Tensor(np.zeros((1, 1, 1, 16)))
        k = Tensor(np.zeros((1, 5)))
        assert ops.conv_temporal(x, k, mode="valid").shape == (1, 1, 1, 12)

    def test_shape_mismatch_names_axis(self):
        x = Tensor(np.zeros((1, 3, 2, 16)))
        k = Tensor(np.zeros((4, 5)))
        with pytest.raises(ShapeError, match="map axis"):
            ops.conv_temporal(x, k)

    @pytest.mark.parametrize("mode", ["same", "valid"])
    def test_gradient_matches_finite_differences(self, mode):
        rng = np.random.default_rng(2)
        x0 = rng.standard_normal((2, 1, 2, 16))
        k0 = rng.standard_normal((3, 5))
        kt = Tensor(k0)
        a, n = grad_of(lambda x: tn.tsum(ops.conv_temporal(x, kt, mode=mode)), x0)
        assert rel_err(a, n) < 1e-6
        xt = Tensor(x0)
        a, n = grad_of(lambda k: tn.tsum(ops.conv_temporal(xt, k, mode=mode)), k0)
        assert rel_err(a, n) < 1e-6


class TestDepthwiseConv:
    def test_spatial_one_hot_selects_channel(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((1, 2, 4, 8))
        w = np.zeros((2, 1, 4))
        w[0, 0, 2] = 1.0  # map 0 reads channel 2
        w[1, 0, 1] = 1.0  # map 1 reads channel 1
        out = ops.depthwise_conv(Tensor(x), Tensor(w), spatial=True).data
        npt.assert_array_equal(out[0, 0, 0], x[0, 0, 2])
        npt.assert_array_equal(out[0, 1, 0], x[0, 1, 1])

    def test_spatial_weight_count(self):
        # C=22, D=2, F1=32 -> 1408 entries
        w = np.zeros((32, 2, 22))
        assert w.size == 1408

    def test_channel_mismatch_raises(self):
        x = Tensor(np.zeros((1, 2, 4, 8)))
        w = Tensor(np.zeros((2, 1, 5)))
        with pytest.raises(ShapeError, match="channel axis"):
            ops.depthwise_conv(x, w, spatial=True)

    def test_spatial_gradients(self):
        rng = np.random.default_rng(4)
        x0 = rng.standard_normal((2, 2, 3, 6))
        w0 = rng.standard_normal((2, 2, 3))
        wt = Tensor(w0)
        a, n = grad_of(lambda x: tn.tsum(ops.depthwise_conv(x, wt, spatial=True)), x0)
        assert rel_err(a, n) < 1e-6
        xt = Tensor(x0)
        a, n = grad_of(lambda w: tn.tsum(ops.depthwise_conv(xt, w, spatial=True)), w0)
        assert rel_err(a, n) < 1e-6

    def test_temporal_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        x0 = rng.standard_normal((4, 3, 1, 32))
        w0 = rng.standard_normal((3, 16))
        wt = Tensor(w0)
        a, n = grad_of(lambda x: tn.tsum(ops.depthwise_conv(x, wt, spatial=False)), x0)
        assert rel_err(a, n) < 1e-6
        xt = Tensor(x0)
        a, n = grad_of(lambda w: tn.tsum(ops.depthwise_conv(xt, w, spatial=False)), w0)
        assert rel_err(a, n) < 1e-6

    def test_temporal_is_per_map(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((1, 2, 1, 12))
        w = rng.standard_normal((2, 3))
        out = ops.depthwise_conv(Tensor(x), Tensor(w), spatial=False).data
        # zeroing map 1's input leaves map 0's output untouched
        x2 = x.copy()
        x2[0, 1] = 0.0
        out2 = ops.depthwise_conv(Tensor(x2), Tensor(w), spatial=False).data
        npt.assert_array_equal(out[0, 0], out2[0, 0])
        npt.assert_array_equal(out2[0, 1], 0.0)


class TestPointwiseConv:
    def test_identity_weights(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((2, 3, 1, 5))
        out = ops.pointwise_conv(Tensor(x), Tensor(np.eye(3)))
        npt.assert_array_equal(out.data, x)

    def test_parameter_count(self):
        assert np.zeros((64, 64)).size == 4096

    def test_extent_mismatch(self):
        with pytest.raises(ShapeError, match="map axis"):
            ops.pointwise_conv(Tensor(np.zeros((1, 3, 1, 5))), Tensor(np.zeros((2, 4))))

    def test_gradients(self):
        rng = np.random.default_rng(8)
        x0 = rng.standard_normal((2, 3, 1, 5))
        w0 = rng.standard_normal((4, 3))
        wt = Tensor(w0)
        a, n = grad_of(lambda x: tn.tsum(ops.pointwise_conv(x, wt)), x0)
        assert rel_err(a, n) < 1e-6
        xt = Tensor(x0)
        a, n = grad_of(lambda w: tn.tsum(ops.pointwise_conv(xt, w)), w0)
        assert rel_err(a, n) < 1e-6


class TestAvgPool:
    def test_window_mean(self):
        out = ops.avg_pool_time(Tensor(np.array([[1.0, 2.0, 3.0, 4.0]])), 4)
        npt.assert_array_equal(out.data, [[2.5]])

    def test_constant_preserved(self):
        out = ops.avg_pool_time(Tensor(np.full((2, 8), 3.25)), 4)
        npt.assert_array_equal(out.data, np.full((2, 2), 3.25))

    def test_indivisible_length_raises(self):
        with pytest.raises(ShapeError, match="divisible"):
            ops.avg_pool_time(Tensor(np.zeros((1, 7))), 4)

    def test_gradient_of_sum_is_quarter(self):
        x = Tensor(np.arange(8.0), requires_grad=True)
        tn.tsum(ops.avg_pool_time(x, 4)).backward()
        npt.assert_array_equal(x.grad, np.full(8, 0.25))


class TestLayerNorm:
    def test_standard_input_is_fixed_point(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((2, 3, 4, 5))
        x = (x - x.mean(axis=(1, 2, 3), keepdims=True)) / x.std(axis=(1, 2, 3), keepdims=True)
        out = ops.layer_norm(Tensor(x), Tensor(np.ones(3)), Tensor(np.zeros(3)))
        # eps=1e-5 shrinks the output by ~eps/2
        assert np.max(np.abs(out.data - x)) < 1e-4

    def test_normalization_identity(self):
        rng = np.random.default_rng(10)
        x = 3.0 * rng.standard_normal((4, 2, 6)) + 1.5
        out = ops.layer_norm(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2))).data
        npt.assert_allclose(out.mean(axis=(1, 2)), 0.0, atol=1e-9)
        npt.assert_allclose(out.var(axis=(1, 2)), 1.0, atol=1e-4)

    def test_gradients(self):
        rng = np.random.default_rng(11)
        x0 = rng.standard_normal((2, 3, 4))
        g0 = rng.standard_normal(3)
        b0 = rng.standard_normal(3)
        # weight the output so the gradient is not constant
        w = Tensor(rng.standard_normal((2, 3, 4)))
        gt, bt = Tensor(g0), Tensor(b0)
        a, n = grad_of(lambda x: tn.tsum(ops.layer_norm(x, gt, bt) * w), x0)
        assert rel_err(a, n) < 1e-5
        xt = Tensor(x0)
        a, n = grad_of(lambda g: tn.tsum(ops.layer_norm(xt, g, bt) * w), g0)
        assert rel_err(a, n) < 1e-5
        a, n = grad_of(lambda b: tn.tsum(ops.layer_norm(xt, gt, b) * w), b0)
        assert rel_err(a, n) < 1e-5


class TestCelu:
    def test_linear_branch(self):
        out = ops.celu(Tensor(np.array([0.0, 5.0])), 1.0)
        npt.assert_array_equal(out.data, [0.0, 5.0])

    def test_negative_branch_closed_form(self):
        out = ops.celu(Tensor(np.array([-1.0])), 1.0)
        npt.assert_allclose(out.data, np.expm1(-1.0), rtol=1e-12)

    def test_alpha_must_be_positive(self):
        with pytest.raises(ValueError, match="alpha"):
            ops.celu(Tensor(np.zeros(1)), 0.0)

    def test_derivative_matches_finite_differences(self):
        a, n = grad_of(lambda x: tn.tsum(ops.celu(x, 1.0)), np.array([-0.5]), h=1e-7)
        assert rel_err(a, n) < 1e-7


class TestDropout:
    def test_p_zero_is_identity(self):
        x = np.random.default_rng(12).standard_normal((3, 4))
        out = ops.dropout(Tensor(x), 0.0, training=True, rng=np.random.default_rng(0))
        npt.assert_array_equal(out.data, x)

    def test_inference_is_identity(self):
        x = np.random.default_rng(13).standard_normal((3, 4))
        out = ops.dropout(Tensor(x), 0.5, training=False)
        npt.assert_array_equal(out.data, x)

    def test_invalid_p_raises(self):
        with pytest.raises(ValueError, match="probability"):
            ops.dropout(Tensor(np.zeros(1)), 1.0, training=True, rng=np.random.default_rng(0))

    def test_survivor_scaling_preserves_mean(self):
        out = ops.dropout(Tensor(np.ones(10 ** 6)), 0.5, training=True,
                          rng=np.random.default_rng(14))
        assert 0.99 < out.data.mean() < 1.01

    def test_deterministic_given_seed(self):
        x = np.ones((100,))
        a = ops.dropout(Tensor(x), 0.5, True, np.random.default_rng(7)).data
        b = ops.dropout(Tensor(x), 0.5, True, np.random.default_rng(7)).data
        npt.assert_array_equal(a, b)

    def test_gradient_uses_same_mask(self):
        x = Tensor(np.ones(50), requires_grad=True)
        out = ops.dropout(x, 0.5, True, np.random.default_rng(15))
        tn.tsum(out).backward()
        npt.assert_array_equal(x.grad, np.where(out.data > 0, 2.0, 0.0))


class TestSoftmaxCrossEntropy:
    def test_uniform_logits(self):
        loss = ops.softmax_cross_entropy(Tensor(np.zeros((3, 4))), np.array([0, 1, 3]))
        npt.assert_allclose(float(loss.data), np.log(4.0), rtol=1e-12)

    def test_loss_decreases_as_true_logit_grows(self):
        values = []
        for z in range(1, 11):
            logits = np.zeros((1, 4))
            logits[0, 2] = z
            values.append(float(ops.softmax_cross_entropy(Tensor(logits), np.array([2])).data))
        assert all(b < a for a, b in zip(values, values[1:]))
        assert values[-1] < 1e-3

    def test_out_of_range_label(self):
        with pytest.raises(ValueError, match="label"):
            ops.softmax_cross_entropy(Tensor(np.zeros((1, 4))), np.array([4]))

    def test_gradient(self):
        rng = np.random.default_rng(16)
        x0 = rng.standard_normal((3, 4))
        labels = np.array([1, 0, 3])
        a, n = grad_of(lambda x: ops.softmax_cross_entropy(x, labels), x0)
        assert rel_err(a, n) < 1e-6


class TestEngineInvariants:
    def test_elementwise_gradients_on_random_shapes(self):
        rng = np.random.default_rng(17)
        cases = [
            ("abs", lambda x: tn.tsum(tn.absolute(x))),
            ("clamp", lambda x: tn.tsum(tn.clamp(x, -0.5, 0.5))),
            ("sinc", lambda x: tn.tsum(tn.sinc(x))),
            ("mirror", lambda x: tn.tsum(ops.concat_mirror(x * x))),
        ]
        for _, build in cases:
            x0 = rng.standard_normal((3, 7)) * 2.0
            # keep clear of the |.| and clamp kinks where subgradients live
            x0[np.abs(np.abs(x0) - 0.5) < 1e-3] += 0.01
            x0[np.abs(x0) < 1e-3] += 0.01
            a, n = grad_of(build, x0)
            assert rel_err(a, n) < 1e-5

    def test_forward_deterministic(self):
        rng = np.random.default_rng(18)
        x = rng.standard_normal((2, 1, 3, 16))
        k = rng.standard_normal((4, 5))
        a = ops.conv_temporal(Tensor(x), Tensor(k)).data
        b = ops.conv_temporal(Tensor(x), Tensor(k)).data
        npt.assert_array_equal(a, b)

    def test_separable_equals_explicit_full_convolution(self):
        # depthwise (1,16) then pointwise == conv with kernels W[f,m]*k_m
        rng = np.random.default_rng(19)
        x = rng.standard_normal((2, 2, 1, 32))
        k = rng.standard_normal((2, 16))
        w = rng.standard_normal((3, 2))
        sep = ops.pointwise_conv(
            ops.depthwise_conv(Tensor(x), Tensor(k), spatial=False), Tensor(w)).data
        full = np.zeros((2, 3, 1, 32))
        for f in range(3):
            for m in range(2):
                km = (w[f, m] * k[m]).reshape(1, 16)
                full[:, f] += ops.conv_temporal(
                    Tensor(x[:, m:m + 1]), Tensor(km)).data[:, 0]
        assert np.max(np.abs(sep - full)) < 1e-10

    def test_tape_replay_matches_fresh_backward(self):
        rng = np.random.default_rng(20)
        x0 = rng.standard_normal((2, 1, 2, 16))
        k0 = rng.standard_normal((2, 5))
        x, k = Tensor(x0, requires_grad=True), Tensor(k0, requires_grad=True)
        with Tape() as tape:
            y = ops.conv_temporal(x, k)
            y = ops.celu(ops.avg_pool_time(y, 4), 1.0)
            loss = tn.tsum(y * y)
        loss.backward()
        fresh = (x.grad.copy(), k.grad.copy())
        tape.backward(loss)
        npt.assert_array_equal(x.grad, fresh[0])
        npt.assert_array_equal(k.grad, fresh[1])

    def test_tape_records_in_topological_order(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with Tape() as tape:
            y = x * 2.0
            z = y + 1.0
            tn.tsum(z * y)
        seqs = [t._seq for t in tape.records]
        assert seqs == sorted(seqs)
        for out in tape.records:
            for parent in out._parents:
                assert parent._seq < out._seq
