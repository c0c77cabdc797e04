import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from percnoise.errors import InvalidImageError, InvalidQualityError
from percnoise.imagecodec import (BASE_CHROMA_TABLE, BASE_LUMA_TABLE,
                                  dequantize_block, forward_dct, inverse_dct,
                                  psnr, quantize_block, rgb_to_yuv420,
                                  scale_quant_table, transcode_image,
                                  yuv420_to_rgb)


class TestBaseTables:
    def test_luma_checksum(self):
        assert int(BASE_LUMA_TABLE.sum()) == 3688

    def test_chroma_checksum(self):
        assert int(BASE_CHROMA_TABLE.sum()) == 5505

    def test_entries_at_least_one(self):
        assert BASE_LUMA_TABLE.min() >= 1
        assert BASE_CHROMA_TABLE.min() >= 1


class TestColorTransform:
    def test_white_is_achromatic_fixed_point(self):
        img = np.full((8, 8, 3), 255, dtype=np.uint8)
        yuv = rgb_to_yuv420(img)
        assert (yuv.y == 255).all() and (yuv.u == 128).all() and (yuv.v == 128).all()

    def test_black(self):
        img = np.zeros((8, 8, 3), dtype=np.uint8)
        yuv = rgb_to_yuv420(img)
        assert (yuv.y == 0).all() and (yuv.u == 128).all() and (yuv.v == 128).all()

    def test_pure_red(self):
        img = np.zeros((2, 2, 3), dtype=np.uint8)
        img[:, :, 0] = 255
        yuv = rgb_to_yuv420(img)
        assert (yuv.y == 76).all() and (yuv.u == 85).all() and (yuv.v == 255).all()

    def test_round_trip_on_smooth_image(self, smooth_image):
        out = yuv420_to_rgb(rgb_to_yuv420(smooth_image))
        err = np.abs(out.astype(int) - smooth_image.astype(int)).max()
        assert err <= 3

    def test_chroma_plane_dims_round_up(self):
        yuv = rgb_to_yuv420(np.zeros((5, 7, 3), dtype=np.uint8))
        assert yuv.u.shape == (3, 4) and yuv.v.shape == (3, 4)

    def test_zero_dimension_rejected(self):
        with pytest.raises(InvalidImageError):
            rgb_to_yuv420(np.zeros((0, 4, 3), dtype=np.uint8))


class TestDct:
    def test_constant_128_gives_all_zero(self):
        coeffs = forward_dct(np.full((8, 8), 128.0))
        assert np.abs(coeffs).max() < 1e-12

    def test_constant_255_dc(self):
        coeffs = forward_dct(np.full((8, 8), 255.0))
        assert coeffs[0, 0] == pytest.approx(1016.0, abs=1e-9)
        assert np.abs(coeffs.ravel()[1:]).max() < 1e-9

    def test_inverse_of_zero_is_128(self):
        assert np.allclose(inverse_dct(np.zeros((8, 8))), 128.0)

    def test_inverse_of_dc_1016(self):
        coeffs = np.zeros((8, 8))
        coeffs[0, 0] = 1016.0
        assert np.allclose(inverse_dct(coeffs), 255.0, atol=1e-9)

    def test_round_trip_1000_random_blocks(self):
        rng = np.random.default_rng(0)
        blocks = rng.uniform(0, 255, (1000, 8, 8))
        worst = max(np.abs(inverse_dct(forward_dct(b)) - b).max() for b in blocks)
        assert worst <= 1e-9

    def test_parseval(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            block = rng.uniform(0, 255, (8, 8))
            coeffs = forward_dct(block)
            spatial = ((block - 128.0) ** 2).sum()
            rel = abs((coeffs ** 2).sum() - spatial) / spatial
            assert rel <= 1e-9


class TestQuantTableScaling:
    def test_q50_is_identity(self):
        assert (scale_quant_table(BASE_LUMA_TABLE, 50, "integer")
                == BASE_LUMA_TABLE).all()
        assert np.allclose(scale_quant_table(BASE_LUMA_TABLE, 50, "continuous"),
                           BASE_LUMA_TABLE)

    def test_q100_integer_all_ones(self):
        assert (scale_quant_table(BASE_LUMA_TABLE, 100, "integer") == 1).all()

    def test_q25_continuous_doubles(self):
        scaled = scale_quant_table(BASE_LUMA_TABLE, 25, "continuous")
        assert np.allclose(scaled, 2.0 * BASE_LUMA_TABLE)

    def test_integer_mode_clamps(self):
        scaled = scale_quant_table(BASE_LUMA_TABLE, 1, "integer")
        assert scaled.max() == 255 and scaled.min() >= 1

    @pytest.mark.parametrize("q", [0, 101, -5])
    def test_invalid_quality(self, q):
        with pytest.raises(InvalidQualityError):
            scale_quant_table(BASE_LUMA_TABLE, q)


class TestQuantizeBlocks:
    def test_single_coefficient(self):
        coeffs = np.zeros((8, 8))
        coeffs[0, 0] = 100.0
        table = np.full((8, 8), 16.0)
        q = quantize_block(coeffs, table)
        assert q[0, 0] == 6
        assert dequantize_block(q, table)[0, 0] == 96.0

    def test_identity_table(self):
        rng = np.random.default_rng(2)
        coeffs = rng.uniform(-500, 500, (8, 8))
        ones = np.ones((8, 8))
        q = quantize_block(coeffs, ones)
        assert np.array_equal(q, np.round(coeffs))
        assert np.array_equal(dequantize_block(q, ones), np.round(coeffs))

    def test_zero_coefficient_always_zero(self):
        zeros = np.zeros((8, 8))
        for q in (1, 50, 100):
            table = scale_quant_table(BASE_LUMA_TABLE, q, "integer")
            assert (quantize_block(zeros, table) == 0).all()

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_reconstruction_error_bounded_by_half_divisor(self, seed):
        rng = np.random.default_rng(seed)
        coeffs = rng.uniform(-1000, 1000, (8, 8))
        table = rng.integers(1, 256, (8, 8)).astype(float)
        recon = dequantize_block(quantize_block(coeffs, table), table)
        assert (np.abs(recon - coeffs) <= table / 2 + 1e-9).all()


class TestTranscode:
    def test_high_quality_is_near_lossless_on_smooth_image(self, smooth_image):
        _, stats = transcode_image(smooth_image, 100)
        assert stats.psnr >= 40.0

    def test_psnr_non_increasing(self, textured_image):
        psnrs = [transcode_image(textured_image, q)[1].psnr
                 for q in (95, 75, 50, 25, 5)]
        assert all(a >= b for a, b in zip(psnrs, psnrs[1:]))

    def test_entropy_non_increasing_as_quality_drops(self, textured_image, noise_image):
        for img in (textured_image, noise_image):
            entropies = [transcode_image(img, q)[1].mean_coeff_entropy
                         for q in (95, 75, 50, 25, 5)]
            assert all(a >= b for a, b in zip(entropies, entropies[1:]))

    def test_constant_gray_is_fixed_point(self):
        img = np.full((24, 24, 3), 128, dtype=np.uint8)
        for q in (100, 75, 30, 1):
            out, stats = transcode_image(img, q)
            assert np.array_equal(out, img)
            assert stats.psnr == float("inf")

    def test_edge_padding_handles_non_multiple_dims(self):
        img = np.full((13, 9, 3), 77, dtype=np.uint8)
        out, _ = transcode_image(img, 90)
        assert out.shape == img.shape

    def test_determinism(self, textured_image):
        a, sa = transcode_image(textured_image, 40)
        b, sb = transcode_image(textured_image, 40)
        assert np.array_equal(a, b) and sa == sb

    def test_invalid_quality_propagates(self, smooth_image):
        with pytest.raises(InvalidQualityError):
            transcode_image(smooth_image, 0)

    def test_stats_fields(self, textured_image):
        _, stats = transcode_image(textured_image, 50)
        assert stats.quality == 50
        assert stats.mean_coeff_entropy >= 0.0
        assert 0.0 <= stats.nonzero_fraction <= 1.0
        assert stats.psnr > 0.0


def test_psnr_identical_is_infinite():
    img = np.zeros((4, 4, 3), dtype=np.uint8)
    assert psnr(img, img) == float("inf")
