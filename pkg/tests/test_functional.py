import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsfp import oracles
from tsfp.functional import (
    ConvSpec,
    conv3d,
    conv3d_spec,
    linear_sample_indices,
    maxpool3d,
    upsample_bilinear,
    upsample_trilinear,
)
from tsfp.gradcheck import gradient_check
from tsfp.tensor import ShapeError, Tensor, mul, precision, tsum


def _f64(a):
    return Tensor(np.asarray(a, dtype=np.float64), dtype=np.float64)


class TestConvSpec:
    def test_output_dims(self):
        spec = ConvSpec(2, 4, (3, 3, 3), (1, 2, 2), (1, 1, 1))
        assert spec.output_dims((4, 6, 6)) == (4, 3, 3)

    def test_kernel_too_large_names_axis(self):
        spec = ConvSpec(1, 1, (1, 5, 1))
        with pytest.raises(ShapeError) as info:
            spec.output_dims((2, 3, 3))
        assert info.value.axis == "height"

    def test_separable_factorization(self):
        spatial, temporal = ConvSpec(3, 8, (3, 3, 3), (2, 2, 2), (1, 1, 1), separable=True).factor()
        assert (spatial.kernel, spatial.stride, spatial.padding) == ((1, 3, 3), (1, 2, 2), (0, 1, 1))
        assert (temporal.kernel, temporal.stride, temporal.padding) == ((3, 1, 1), (2, 1, 1), (1, 0, 0))
        assert temporal.in_channels == temporal.out_channels == 8


class TestConv3d:
    def test_identity_kernel(self, rng):
        x = Tensor(rng.standard_normal((1, 1, 3, 3)))
        out = conv3d(x, Tensor(np.ones((1, 1, 1, 1, 1))), Tensor(np.zeros(1)))
        np.testing.assert_array_equal(out.data, x.data)

    def test_counting_case(self):
        out = conv3d(Tensor(np.ones((1, 2, 2, 2))), Tensor(np.ones((1, 1, 2, 2, 2))), Tensor(np.zeros(1)))
        assert out.shape == (1, 1, 1, 1)
        assert out.data.item() == 8.0

    def test_strided_padded_matches_naive(self, rng, f64):
        x = rng.standard_normal((2, 4, 6, 6))
        w = rng.standard_normal((4, 2, 3, 3, 3))
        b = rng.standard_normal(4)
        out = conv3d(_f64(x), _f64(w), _f64(b), (1, 2, 2), (1, 1, 1))
        assert out.shape == (4, 4, 3, 3)
        np.testing.assert_allclose(out.data, oracles.conv3d_naive(x, w, b, (1, 2, 2), (1, 1, 1)), atol=1e-6)

    def test_float32_matches_naive(self, rng):
        x = rng.standard_normal((3, 4, 8, 8)).astype(np.float32)
        w = rng.standard_normal((2, 3, 3, 3, 3)).astype(np.float32)
        b = rng.standard_normal(2).astype(np.float32)
        out = conv3d(Tensor(x), Tensor(w), Tensor(b), 1, 1)
        np.testing.assert_allclose(out.data, oracles.conv3d_naive(x, w, b, (1, 1, 1), (1, 1, 1)), atol=1e-5)

    def test_batched_equals_per_sample(self, rng, f64):
        x = rng.standard_normal((3, 2, 4, 5, 5))
        w = _f64(rng.standard_normal((3, 2, 3, 3, 3)))
        b = _f64(rng.standard_normal(3))
        batched = conv3d(_f64(x), w, b, (2, 1, 2), 1).data
        for n in range(3):
            np.testing.assert_allclose(batched[n], conv3d(_f64(x[n]), w, b, (2, 1, 2), 1).data, atol=1e-12)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError) as info:
            conv3d(Tensor(np.ones((2, 3, 3, 3))), Tensor(np.ones((1, 3, 1, 1, 1))))
        assert info.value.axis == "channel"

    def test_gradcheck(self, rng, f64):
        x, w, b = _f64(rng.standard_normal((2, 3, 4, 3))), _f64(rng.standard_normal((2, 2, 2, 2, 2))), _f64(rng.standard_normal(2))
        R = _f64(rng.uniform(0.5, 1.5, size=(2, 4, 3, 4)))
        err = gradient_check(lambda x, w, b: tsum(mul(conv3d(x, w, b, (1, 2, 1), (1, 1, 1)), R)), [x, w, b])
        assert err < 1e-4

    def test_separable_spec_runs_spatial_then_temporal(self, rng, f64):
        spec = ConvSpec(2, 3, (3, 3, 3), (2, 1, 1), (1, 1, 1), separable=True)
        weights = {k: _f64(rng.standard_normal(s)) for k, s in spec.weight_shapes().items()}
        x = _f64(rng.standard_normal((2, 4, 5, 5)))
        out = conv3d_spec(x, spec, weights)
        manual = conv3d(conv3d(x, weights["spatial.w"], weights["spatial.b"], (1, 1, 1), (0, 1, 1)),
                        weights["temporal.w"], weights["temporal.b"], (2, 1, 1), (1, 0, 0))
        np.testing.assert_array_equal(out.data, manual.data)


class TestMaxPool:
    def test_window_max(self):
        out = maxpool3d(Tensor(np.array([[[[1.0, 2.0], [3.0, 4.0]]]])), (1, 2, 2))
        assert out.data.item() == 4.0

    def test_constant_tie_goes_to_first_index(self, f64):
        x = Tensor(np.full((1, 2, 2, 2), 5.0), requires_grad=True)
        out = maxpool3d(x, (2, 2, 2))
        assert out.data.item() == 5.0
        tsum(out).backward()
        expected = np.zeros((1, 2, 2, 2))
        expected[0, 0, 0, 0] = 1.0
        np.testing.assert_array_equal(x.grad, expected)

    def test_matches_window_scan(self, rng):
        x = rng.standard_normal((1, 4, 4, 4))
        out = maxpool3d(Tensor(x, dtype=np.float64), (2, 2, 2), (2, 2, 2))
        np.testing.assert_array_equal(out.data, oracles.maxpool3d_naive(x, (2, 2, 2), (2, 2, 2)))

    def test_kernel_larger_than_input(self):
        with pytest.raises(ShapeError) as info:
            maxpool3d(Tensor(np.ones((1, 1, 2, 2))), (2, 1, 1))
        assert info.value.axis == "time"

    def test_overlapping_windows_accumulate(self, f64):
        x = Tensor(np.array([[[[0.0, 9.0, 0.0]]]]), requires_grad=True)
        tsum(maxpool3d(x, (1, 1, 2), (1, 1, 1))).backward()
        np.testing.assert_array_equal(x.grad, [[[[0.0, 2.0, 0.0]]]])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_output_within_input_range(self, seed):
        r = np.random.default_rng(seed)
        x = r.standard_normal((2, 4, 5, 6))
        out = maxpool3d(Tensor(x, dtype=np.float64), (2, 2, 3), (1, 2, 1)).data
        assert out.max() <= x.max() and out.min() >= x.min()


class TestUpsample:
    def test_constant_preserved(self):
        x = Tensor(np.full((2, 2, 3, 4), 5.0))
        assert np.all(upsample_trilinear(x, (4, 6, 8)).data == 5.0)

    def test_half_pixel_1d(self, f64):
        out = upsample_trilinear(_f64([[[[0.0, 1.0]]]]), (1, 1, 4)).data.ravel()
        # half-pixel centres with border clamping; cross-checked by the scalar oracle
        ref = oracles.resize_naive(np.array([[[[0.0, 1.0]]]]), (1, 1, 4)).ravel()
        np.testing.assert_allclose(out, ref, atol=1e-15)
        np.testing.assert_allclose(out, [0.0, 0.25, 0.75, 1.0], atol=1e-15)

    def test_trilinear_matches_scalar_oracle(self, rng, f64):
        x = rng.standard_normal((1, 2, 2, 2))
        out = upsample_trilinear(_f64(x), (4, 4, 4)).data
        np.testing.assert_allclose(out, oracles.resize_naive(x, (4, 4, 4)), atol=1e-6)

    def test_bilinear_checkerboard(self, f64):
        x = np.array([[[[0.0, 1.0], [1.0, 0.0]]]])
        out = upsample_bilinear(_f64(x), (4, 4)).data
        np.testing.assert_allclose(out, oracles.resize_naive(x, (4, 4)), atol=1e-9)

    def test_bilinear_constant(self):
        out = upsample_bilinear(Tensor(np.full((1, 1, 3, 3), 0.3)), (12, 12)).data
        assert np.all(out == np.float32(0.3))

    def test_bilinear_identity_is_bit_identical(self, rng):
        x = Tensor(rng.standard_normal((2, 1, 5, 7)))
        np.testing.assert_array_equal(upsample_bilinear(x, (5, 7)).data, x.data)

    def test_bilinear_requires_collapsed_time(self):
        with pytest.raises(ShapeError):
            upsample_bilinear(Tensor(np.ones((1, 2, 3, 3))), (6, 6))

    def test_up_then_average_down_constant(self):
        x = Tensor(np.full((1, 2, 3, 3), 0.7))
        up = upsample_trilinear(x, (4, 6, 6)).data
        down = up.reshape(1, 2, 2, 3, 2, 3, 2).mean(axis=(2, 4, 6))
        np.testing.assert_array_equal(down, x.data)

    def test_sample_indices_identity(self):
        i0, i1, lam = linear_sample_indices(5, 5)
        assert i0.tolist() == list(range(5)) and np.all(lam == 0)

    @pytest.mark.parametrize("target", [(3, 5, 7), (1, 2, 9), (4, 4, 4)])
    def test_gradcheck(self, rng, target):
        with precision("float64"):
            x = _f64(rng.standard_normal((2, 2, 2, 3)))
            R = _f64(rng.uniform(0.5, 1.5, size=(2, *target)))
            assert gradient_check(lambda t: tsum(mul(upsample_trilinear(t, target), R)), [x]) < 1e-4
