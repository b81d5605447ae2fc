"""Unit tests for the differentiable kernels."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent.parent / "src"))

import numpy as np
import pytest

from gazemodal.errors import ArgumentError, DimensionError, EmptyInputError
from gazemodal.numeric import ops
from gazemodal.numeric.gradcheck import finite_diff_check
from gazemodal.numeric.tensor import parameter, reverse_sweep


class TestConv2d:
    """Test cross-correlation."""

    def test_identity_kernel(self):
        """A 1x1 unit kernel returns the input."""
        x = np.arange(12, dtype=float).reshape(1, 3, 4)
        out = ops.conv2d(x, np.ones((1, 1, 1, 1)))
        np.testing.assert_array_equal(out.value, x)

    def test_sliding_window_sum(self):
        """Diagonal kernel over a 2x2 grid sums the diagonal."""
        x = np.array([[[1.0, 2.0], [3.0, 4.0]]])
        kernel = np.array([[[[1.0, 0.0], [0.0, 1.0]]]])
        out = ops.conv2d(x, kernel)
        assert out.shape == (1, 1, 1)
        assert out.value[0, 0, 0] == 5.0

    def test_no_kernel_flip(self):
        """Off-diagonal kernel picks the top-right and bottom-left cells."""
        x = np.array([[[1.0, 2.0], [3.0, 4.0]]])
        kernel = np.array([[[[0.0, 1.0], [0.0, 0.0]]]])
        assert ops.conv2d(x, kernel).value[0, 0, 0] == 2.0

    def test_zero_kernel(self):
        """All-zero kernel yields zeros."""
        x = np.random.default_rng(0).normal(size=(2, 5, 5))
        out = ops.conv2d(x, np.zeros((3, 2, 3, 3)), padding=1)
        assert out.shape == (3, 5, 5)
        assert not out.value.any()

    @pytest.mark.parametrize(
        "size,k,stride,padding,expected",
        [(8, 3, 1, 1, 8), (8, 3, 2, 1, 4), (7, 3, 2, 0, 3), (5, 5, 1, 0, 1)],
    )
    def test_output_shape(self, size, k, stride, padding, expected):
        """Output side is floor((H + 2p - k) / s) + 1."""
        x = np.zeros((1, size, size))
        out = ops.conv2d(x, np.zeros((2, 1, k, k)), stride=stride, padding=padding)
        assert out.shape == (2, expected, expected)

    def test_batched_matches_unbatched(self):
        """A leading batch axis processes each sample independently."""
        rng = np.random.default_rng(1)
        x = rng.normal(size=(3, 2, 6, 6))
        k = rng.normal(size=(4, 2, 3, 3))
        batched = ops.conv2d(x, k, padding=1).value
        for i in range(3):
            np.testing.assert_allclose(batched[i], ops.conv2d(x[i], k, padding=1).value, atol=1e-12)

    def test_bias_added_per_channel(self):
        """Bias shifts every cell of its output channel."""
        x = np.zeros((1, 3, 3))
        out = ops.conv2d(x, np.zeros((2, 1, 3, 3)), padding=1, bias=np.array([1.5, -2.0]))
        assert np.all(out.value[0] == 1.5)
        assert np.all(out.value[1] == -2.0)

    def test_channel_mismatch(self):
        """Mismatched input channels name the channel axis."""
        with pytest.raises(DimensionError) as info:
            ops.conv2d(np.zeros((2, 4, 4)), np.zeros((1, 3, 3, 3)))
        assert info.value.axis == "channels"

    def test_kernel_too_large(self):
        """Kernel wider than the padded input is rejected."""
        with pytest.raises(DimensionError) as info:
            ops.conv2d(np.zeros((1, 2, 5)), np.zeros((1, 1, 3, 3)))
        assert info.value.axis == "height"

    def test_bad_stride(self):
        """Stride below one is an argument error."""
        with pytest.raises(ArgumentError):
            ops.conv2d(np.zeros((1, 4, 4)), np.zeros((1, 1, 3, 3)), stride=0)

    def test_gradient(self):
        """Strided, padded convolution matches finite differences."""
        rng = np.random.default_rng(2)
        x = parameter(rng.normal(size=(2, 5, 5)))
        k = parameter(rng.normal(size=(3, 2, 3, 3)))
        b = parameter(rng.normal(size=3))
        err = finite_diff_check(lambda: ops.total(ops.tanh(ops.conv2d(x, k, 2, 1, b))), [x, k, b])
        assert err < 1e-4


class TestMaxPool:
    """Test max pooling."""

    def test_window_max(self):
        """A 2x2 window keeps its maximum."""
        out = ops.max_pool2d(np.array([[[1.0, 2.0], [3.0, 4.0]]]), 2)
        np.testing.assert_array_equal(out.value, [[[4.0]]])

    def test_constant_grid(self):
        """Constant input stays constant."""
        out = ops.max_pool2d(np.full((2, 4, 4), 3.5), 2)
        assert out.shape == (2, 2, 2)
        assert np.all(out.value == 3.5)

    def test_gradient_routes_to_argmax(self):
        """Gradient of the pooled sum is one at each window maximum."""
        grid = np.array([[[1.0, 5.0, 0.0, 2.0], [3.0, 4.0, 9.0, 1.0]]])
        x = parameter(grid)
        reverse_sweep(ops.total(ops.max_pool2d(x, 2)))
        expected = np.array([[[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]])
        np.testing.assert_array_equal(x.grad, expected)

    def test_ties_go_to_first_cell(self):
        """Equal values route the gradient to the first cell in row-major order."""
        x = parameter(np.ones((1, 2, 2)))
        reverse_sweep(ops.total(ops.max_pool2d(x, 2)))
        np.testing.assert_array_equal(x.grad, [[[1.0, 0.0], [0.0, 0.0]]])

    def test_indivisible(self):
        """Sides not divisible by k are rejected."""
        with pytest.raises(DimensionError):
            ops.max_pool2d(np.zeros((1, 5, 4)), 2)


class TestUpsample:
    """Test nearest-neighbour upsampling."""

    def test_single_cell(self):
        """One cell becomes a 2x2 block."""
        np.testing.assert_array_equal(ops.upsample_nearest(np.array([[1.0]]), 2).value, np.ones((2, 2)))

    def test_block_pattern(self):
        """Each cell is replicated into its own block."""
        out = ops.upsample_nearest(np.array([[1.0, 2.0], [3.0, 4.0]]), 2).value
        expected = np.array(
            [[1, 1, 2, 2], [1, 1, 2, 2], [3, 3, 4, 4], [3, 3, 4, 4]], dtype=float
        )
        np.testing.assert_array_equal(out, expected)

    def test_gradient_sums_block(self):
        """Each input cell receives the sum of its block's gradient."""
        x = parameter(np.zeros((1, 2, 2)))
        weights = np.arange(16, dtype=float).reshape(1, 4, 4)
        reverse_sweep(ops.total(ops.mul(ops.upsample_nearest(x, 2), weights)))
        np.testing.assert_array_equal(x.grad, [[[0 + 1 + 4 + 5, 2 + 3 + 6 + 7], [8 + 9 + 12 + 13, 10 + 11 + 14 + 15]]])

    def test_factor_below_one(self):
        """Factor zero is an argument error."""
        with pytest.raises(ArgumentError):
            ops.upsample_nearest(np.ones((1, 2, 2)), 0)


class TestAffine:
    """Test dense layers."""

    def test_matrix_vector(self):
        """W x + b for a worked example."""
        out = ops.affine(np.array([1.0, 1.0]), np.array([[1.0, 2.0], [3.0, 4.0]]), np.zeros(2))
        np.testing.assert_array_equal(out.value, [3.0, 7.0])

    def test_identity(self):
        """Identity weights and zero bias return x."""
        x = np.array([0.5, -1.0, 2.0])
        np.testing.assert_array_equal(ops.affine(x, np.eye(3), np.zeros(3)).value, x)

    def test_zero_input(self):
        """Zero input returns the bias."""
        b = np.array([0.25, -0.75])
        np.testing.assert_array_equal(ops.affine(np.zeros(3), np.ones((2, 3)), b).value, b)

    def test_batched(self):
        """Rows of a batch are transformed independently."""
        w = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = ops.affine(np.array([[1.0, 1.0], [1.0, 0.0]]), w)
        np.testing.assert_array_equal(out.value, [[3.0, 7.0], [1.0, 3.0]])

    def test_shape_mismatch(self):
        """Input width must match the weight columns."""
        with pytest.raises(DimensionError):
            ops.affine(np.zeros(3), np.zeros((2, 2)))

    def test_gradient(self):
        """Batched affine matches finite differences."""
        rng = np.random.default_rng(3)
        x = parameter(rng.normal(size=(4, 3)))
        w = parameter(rng.normal(size=(2, 3)))
        b = parameter(rng.normal(size=2))
        err = finite_diff_check(lambda: ops.total(ops.sigmoid(ops.affine(x, w, b))), [x, w, b])
        assert err < 1e-4


class TestActivations:
    """Test elementwise nonlinearities."""

    def test_relu(self):
        """ReLU clips negatives."""
        np.testing.assert_array_equal(ops.activation("relu", np.array([-1.0, 2.0])).value, [0.0, 2.0])

    def test_sigmoid_at_zero(self):
        """sigmoid(0) is one half."""
        assert ops.activation("sigmoid", np.array(0.0)).item() == 0.5

    def test_tanh_at_zero(self):
        """tanh(0) is zero."""
        assert ops.activation("tanh", np.array(0.0)).item() == 0.0

    def test_shape_preserved(self):
        """Activations keep the input shape."""
        x = np.zeros((2, 3, 4))
        for kind in ("relu", "sigmoid", "tanh"):
            assert ops.activation(kind, x).shape == x.shape

    def test_unknown_kind(self):
        """Unknown activation names are rejected."""
        with pytest.raises(ArgumentError):
            ops.activation("gelu", np.zeros(2))

    def test_relu_gradient(self):
        """ReLU passes gradient only where the input is positive."""
        x = parameter(np.array([-0.5, 0.3, 2.0, -1.2]))
        err = finite_diff_check(lambda: ops.total(ops.mul(ops.relu(x), x)), [x])
        assert err < 1e-4


class TestSoftmax:
    """Test softmax."""

    def test_uniform(self):
        """Equal logits give equal probabilities."""
        np.testing.assert_allclose(ops.softmax(np.zeros(3)).value, np.full(3, 1 / 3), atol=1e-15)

    def test_closed_form(self):
        """[0, ln 3] gives [0.25, 0.75]."""
        np.testing.assert_allclose(ops.softmax(np.array([0.0, np.log(3.0)])).value, [0.25, 0.75], atol=1e-12)

    def test_large_logits(self):
        """Max-subtraction keeps huge logits finite."""
        out = ops.softmax(np.array([1000.0, 1000.0, -1000.0])).value
        assert np.all(np.isfinite(out))
        np.testing.assert_allclose(out, [0.5, 0.5, 0.0], atol=1e-12)

    def test_rows_of_batch(self):
        """Batched softmax normalizes each row."""
        out = ops.softmax(np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]])).value
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)

    def test_empty(self):
        """A zero-length vector is rejected."""
        with pytest.raises(EmptyInputError):
            ops.softmax(np.zeros(0))


class TestLosses:
    """Test cross-entropy and MSE."""

    def test_certain_prediction(self):
        """Probability one on the target costs nothing."""
        assert ops.cross_entropy_loss(np.array([0.0, 1.0, 0.0]), 1).item() == 0.0

    def test_uniform_three_classes(self):
        """Uniform over three classes costs ln 3."""
        loss = ops.cross_entropy_loss(np.full(3, 1 / 3), 2).item()
        assert loss == pytest.approx(np.log(3.0), abs=1e-12)

    def test_worked_example(self):
        """-ln 0.7 for the first class."""
        loss = ops.cross_entropy_loss(np.array([0.7, 0.2, 0.1]), 0).item()
        assert loss == pytest.approx(0.356674943938732, abs=1e-12)

    def test_floor(self):
        """A zero probability is clamped at 1e-12."""
        loss = ops.cross_entropy_loss(np.array([1.0, 0.0, 0.0]), 1).item()
        assert loss == pytest.approx(-np.log(1e-12))

    def test_batch_mean(self):
        """Batches average the per-row losses."""
        probs = np.array([[0.7, 0.2, 0.1], [0.5, 0.25, 0.25]])
        loss = ops.cross_entropy_loss(probs, [0, 1]).item()
        assert loss == pytest.approx((-np.log(0.7) - np.log(0.25)) / 2)

    def test_target_out_of_range(self):
        """Targets outside the class range are rejected."""
        with pytest.raises(ArgumentError):
            ops.cross_entropy_loss(np.full(3, 1 / 3), 3)

    def test_mse_equal(self):
        """Equal inputs give zero."""
        assert ops.mse_loss(np.ones(4), np.ones(4)).item() == 0.0

    def test_mse_worked_example(self):
        """[0, 1] against [1, 1] gives 0.5."""
        assert ops.mse_loss(np.array([0.0, 1.0]), np.array([1.0, 1.0])).item() == 0.5

    def test_mse_homogeneity(self):
        """Scaling both inputs by k scales the loss by k squared."""
        rng = np.random.default_rng(4)
        a, b = rng.normal(size=5), rng.normal(size=5)
        base = ops.mse_loss(a, b).item()
        assert ops.mse_loss(3 * a, 3 * b).item() == pytest.approx(9 * base)

    def test_mse_shape_mismatch(self):
        """The mismatched axis is reported."""
        with pytest.raises(DimensionError) as info:
            ops.mse_loss(np.zeros((2, 3)), np.zeros((2, 4)))
        assert info.value.axis == 1

    def test_mse_unit_weights(self):
        """Unit weights give the plain mean."""
        rng = np.random.default_rng(6)
        a, b = rng.normal(size=(2, 5)), rng.normal(size=(2, 5))
        assert ops.mse_loss(a, b, weights=np.ones((2, 5))).item() == pytest.approx(ops.mse_loss(a, b).item())

    def test_mse_weighted_example(self):
        """Weights 1 and 3 on squared errors 1 and 4 give 13 / 4."""
        loss = ops.mse_loss(np.array([1.0, 2.0]), np.zeros(2), weights=np.array([1.0, 3.0]))
        assert loss.item() == pytest.approx(13 / 4)

    def test_mse_weighted_gradient(self):
        """The weighted loss matches finite differences."""
        rng = np.random.default_rng(7)
        pred = parameter(rng.uniform(size=(2, 1, 4, 4)))
        target = rng.uniform(size=(2, 1, 4, 4))
        weights = 1.0 + 20.0 * target
        assert finite_diff_check(lambda: ops.mse_loss(pred, target, weights=weights), [pred]) < 1e-4

    def test_mse_bad_weights(self):
        """Negative, all-zero or misshapen weights are rejected."""
        with pytest.raises(ArgumentError):
            ops.mse_loss(np.zeros(2), np.ones(2), weights=np.array([1.0, -1.0]))
        with pytest.raises(ArgumentError):
            ops.mse_loss(np.zeros(2), np.ones(2), weights=np.zeros(2))
        with pytest.raises(DimensionError):
            ops.mse_loss(np.zeros(2), np.ones(2), weights=np.ones(3))

    def test_composite_gradient(self):
        """conv, pool, affine, softmax and cross-entropy together match finite differences."""
        rng = np.random.default_rng(5)
        image = rng.normal(size=(1, 6, 6))
        k = parameter(rng.normal(size=(2, 1, 3, 3)) * 0.3)
        w = parameter(rng.normal(size=(3, 18)) * 0.1)
        b = parameter(rng.normal(size=3) * 0.1)

        def loss():
            pooled = ops.max_pool2d(ops.conv2d(image, k, padding=1), 2)
            return ops.cross_entropy_loss(ops.softmax(ops.affine(ops.reshape(pooled, (18,)), w, b)), 2)

        assert finite_diff_check(loss, [k, w, b], h=1e-5) < 1e-4


class TestStructuralOps:
    """Test the wiring kernels."""

    def test_concat_gradient_split(self):
        """Concatenation routes each slice back to its source."""
        a, b = parameter(np.ones(2)), parameter(np.ones(3))
        reverse_sweep(ops.total(ops.mul(ops.concat([a, b]), np.arange(5.0))))
        np.testing.assert_array_equal(a.grad, [0.0, 1.0])
        np.testing.assert_array_equal(b.grad, [2.0, 3.0, 4.0])

    def test_stack_and_mean(self):
        """Stacking then averaging over the new axis gives the elementwise mean."""
        out = ops.mean(ops.stack([np.zeros(2), np.full(2, 4.0)]), axis=0)
        np.testing.assert_array_equal(out.value, [2.0, 2.0])

    def test_global_avg_pool(self):
        """Spatial mean per channel."""
        x = np.stack([np.full((3, 3), 1.0), np.full((3, 3), 5.0)])
        np.testing.assert_array_equal(ops.global_avg_pool(x).value, [1.0, 5.0])

    def test_broadcast_add_gradient(self):
        """A broadcast operand accumulates gradient over the broadcast axes."""
        bias = parameter(np.zeros(3))
        reverse_sweep(ops.total(ops.add(np.ones((4, 3)), bias)))
        np.testing.assert_array_equal(bias.grad, [4.0, 4.0, 4.0])

    def test_concat_empty(self):
        """Concatenating nothing is rejected."""
        with pytest.raises(EmptyInputError):
            ops.concat([])
