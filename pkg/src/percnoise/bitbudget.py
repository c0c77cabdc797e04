"""Bits-per-pixel arithmetic over the quality-scaled quantization budget.

The loss at quality q is log2(S * sf(q) / 100) where S is the summed
divisor mass of both base tables (chrominance counted twice) and sf is the
continuous quality scaling law. The default S = 12487 reproduces the widely
quoted figures (13.6-bit loss at q=50, 1.4 bits remaining at q=25, 1 bit at
q=19); summing the actual base tables gives 14698 instead, available as the
recomputed mode. Only continuous, unrounded scaling reproduces those
figures, so this module never uses the codec's integer rounding.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidQualityError
from .imagecodec import BASE_CHROMA_TABLE, BASE_LUMA_TABLE, quality_scale_factor

REFERENCE_COMPONENT_SUM = 12487.0


def recomputed_component_sum() -> float:
    """Sum of the base tables with chrominance counted twice (= 14698)."""
    return float(BASE_LUMA_TABLE.sum() + 2 * BASE_CHROMA_TABLE.sum())


@dataclass(frozen=True)
class BitBudgetModel:
    """Per-pixel bit budget.

    ``baseline`` is bits per pixel after chroma subsampling (16) or before
    it (24). ``tolerance`` absorbs the two-decimal rounding used when
    quoting bit figures, so quality inversion accepts a remaining budget
    within that margin; it must stay below the smallest step between
    consecutive qualities (~0.029 bits) for the inversion to round-trip.
    """

    component_sum: float = REFERENCE_COMPONENT_SUM
    baseline: float = 16.0
    tolerance: float = 0.005

    def __post_init__(self):
        if self.component_sum <= 0:
            raise ValueError("component_sum must be positive")
        if self.baseline not in (16.0, 24.0):
            raise ValueError("baseline must be 16 or 24 bits per pixel")
        if not 0 <= self.tolerance < 0.029:
            raise ValueError("tolerance must lie in [0, 0.029)")

    def bits_lost(self, q) -> float:
        """Bits per pixel removed by quantization at quality ``q``.

        sf(100) = 0 would send the log to -inf; the loss is floored at 0
        there since the codec is near-lossless at q=100.
        """
        sf = quality_scale_factor(q)
        if sf <= 0:
            return 0.0
        return float(np.log2(self.component_sum * sf / 100.0))

    def bits_remaining(self, q) -> float:
        """Bits per pixel left after quantization, clamped to [0, baseline].

        The clamp makes the value flat at 0 below q=10 for the 16-bit
        baseline; above that it is strictly increasing in q.
        """
        return float(np.clip(self.baseline - self.bits_lost(q), 0.0, self.baseline))

    def quality_for_bits(self, target: float) -> int:
        """Smallest integer quality whose remaining budget reaches ``target``.

        The comparison allows the configured tolerance below the target.
        """
        if not 0 < target < self.baseline:
            raise InvalidQualityError(
                f"target must lie in (0, {self.baseline}), got {target!r}")
        for q in range(1, 101):
            if self.bits_remaining(q) >= target - self.tolerance:
                return q
        raise InvalidQualityError(f"no quality reaches {target} bits")  # pragma: no cover


DEFAULT_MODEL = BitBudgetModel()


def bits_lost(q, model: BitBudgetModel = DEFAULT_MODEL) -> float:
    return model.bits_lost(q)


def bits_remaining(q, model: BitBudgetModel = DEFAULT_MODEL) -> float:
    return model.bits_remaining(q)


def quality_for_bits(target: float, model: BitBudgetModel = DEFAULT_MODEL) -> int:
    return model.quality_for_bits(target)


def quality_table(model: BitBudgetModel = DEFAULT_MODEL) -> list[tuple[int, float, float]]:
    """Rows of (quality, bits_lost, bits_remaining) for q = 1..100."""
    return [(q, model.bits_lost(q), model.bits_remaining(q)) for q in range(1, 101)]
