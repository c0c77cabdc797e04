import numpy as np
import pytest

from percnoise.bitbudget import (BitBudgetModel, quality_table,
                                 recomputed_component_sum)
from percnoise.errors import InvalidQualityError


@pytest.fixture
def model():
    return BitBudgetModel()


class TestBitsLost:
    def test_q50_matches_log2_component_sum(self, model):
        assert model.bits_lost(50) == pytest.approx(13.61, abs=0.01)

    def test_q80(self, model):
        assert model.bits_lost(80) == pytest.approx(12.29, abs=0.01)

    def test_q100_floors_at_zero(self, model):
        assert model.bits_lost(100) == 0.0

    def test_invalid_quality(self, model):
        for q in (0, 101, -3):
            with pytest.raises(InvalidQualityError):
                model.bits_lost(q)


class TestBitsRemaining:
    def test_q25(self, model):
        assert model.bits_remaining(25) == pytest.approx(1.39, abs=0.05)

    def test_q80_a_little_under_four(self, model):
        assert model.bits_remaining(80) == pytest.approx(3.71, abs=0.05)

    def test_q50_derived(self, model):
        assert model.bits_remaining(50) == pytest.approx(16 - np.log2(12487), abs=1e-9)
        assert model.bits_remaining(50) == pytest.approx(2.39, abs=0.05)

    def test_q100_full_baseline(self, model):
        assert model.bits_remaining(100) == 16.0

    def test_clamped_to_zero_at_very_low_quality(self, model):
        assert model.bits_remaining(1) == 0.0


class TestQualityForBits:
    def test_one_bit_per_pixel_at_q19(self, model):
        assert model.quality_for_bits(1.0) == 19

    def test_inverts_q25(self, model):
        assert model.quality_for_bits(1.39) == 25

    def test_near_lossless_target_clamps_to_100(self, model):
        assert model.quality_for_bits(15.99) == 100

    def test_unreachable_targets(self, model):
        for target in (0.0, -1.0, 16.0, 20.0):
            with pytest.raises(InvalidQualityError):
                model.quality_for_bits(target)

    def test_round_trip_on_exact_targets(self, model):
        for q in range(19, 100):
            assert model.quality_for_bits(model.bits_remaining(q)) == q


class TestProperties:
    def test_bits_lost_strictly_decreasing(self, model):
        losses = [model.bits_lost(q) for q in range(1, 101)]
        assert all(a > b for a, b in zip(losses, losses[1:]))

    def test_remaining_strictly_increasing_where_unclamped(self, model):
        # The [0, baseline] clamp flattens q <= 9 at zero for the 16-bit
        # baseline; strictness holds everywhere the clamp is inactive.
        values = [model.bits_remaining(q) for q in range(10, 100)]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_remaining_strictly_increasing_for_24_bit_baseline(self):
        model = BitBudgetModel(baseline=24.0)
        values = [model.bits_remaining(q) for q in range(1, 100)]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_recomputed_mode_is_constant_offset(self, model):
        recomputed = BitBudgetModel(component_sum=recomputed_component_sum())
        offset = np.log2(14698 / 12487)
        for q in range(1, 100):
            delta = recomputed.bits_lost(q) - model.bits_lost(q)
            assert delta == pytest.approx(offset, abs=1e-12)

    def test_recomputed_sum_value(self):
        assert recomputed_component_sum() == 14698.0


def test_quality_table_covers_full_range(model):
    rows = quality_table(model)
    assert len(rows) == 100
    assert rows[0][0] == 1 and rows[-1][0] == 100
    assert rows[49] == (50, pytest.approx(np.log2(12487)), pytest.approx(16 - np.log2(12487)))


def test_model_validation():
    with pytest.raises(ValueError):
        BitBudgetModel(component_sum=0.0)
    with pytest.raises(ValueError):
        BitBudgetModel(baseline=20.0)
    with pytest.raises(ValueError):
        BitBudgetModel(tolerance=0.05)
