"""Synthetic image datasets with controllable spectral content.

Class signal is placed in chosen 8x8 DCT cells so that quality-scaled
quantization destroys it at a predictable quality level: a coefficient C
survives quality q exactly when the scaled divisor d(q) satisfies
d(q) <= 2C (round-to-nearest keeps the level nonzero). Backgrounds are
per-block constants plus pixel noise, so they carry no class information
and leak nothing into the signal cells.
"""

import numpy as np
from scipy.fft import idctn

from .errors import ConfigError
from .imagecodec import BASE_LUMA_TABLE, scale_quant_table

SIDE = 32
BLOCKS = SIDE // 8

# One mid/high-frequency luma cell per texture class, with spread-out base
# divisors so classes die at staggered qualities.
TEXTURE_CELLS = [
    (0, 3), (3, 0), (2, 2), (1, 4), (4, 1),
    (3, 3), (0, 6), (6, 0), (5, 2), (2, 5),
]


def dct_cell_pattern(cell: tuple, coefficient: float) -> np.ndarray:
    """8x8 pixel pattern whose orthonormal DCT is ``coefficient`` at one cell."""
    coeffs = np.zeros((8, 8))
    coeffs[cell] = coefficient
    return idctn(coeffs, norm="ortho")


def _tiled_pattern(cell: tuple, coefficient: float) -> np.ndarray:
    return np.tile(dct_cell_pattern(cell, coefficient), (BLOCKS, BLOCKS))


def _block_background(rng, amplitude: float) -> np.ndarray:
    """Per-8x8-block constant offsets (pure DC, no AC leakage)."""
    return np.kron(rng.uniform(-amplitude, amplitude, (BLOCKS, BLOCKS)),
                   np.ones((8, 8)))


def _to_rgb(gray: np.ndarray) -> np.ndarray:
    gray = np.clip(np.round(gray), 0, 255).astype(np.uint8)
    return np.stack([gray, gray, gray], axis=2)


def make_texture_images(n_per_class: int, seed: int = 0,
                        num_classes: int = 10,
                        amplitude: float = 90.0,
                        background: float = 25.0,
                        noise_sigma: float = 6.0):
    """Gray 32x32 images in up to 10 classes keyed by DCT-cell textures.

    Returns (N, 32, 32, 3) uint8 images and int labels, interleaved by
    class so any prefix stays balanced.
    """
    if not 2 <= num_classes <= len(TEXTURE_CELLS):
        raise ConfigError(f"num_classes must lie in [2, {len(TEXTURE_CELLS)}]")
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for _ in range(n_per_class):
        for cls in range(num_classes):
            scale = amplitude * rng.uniform(0.85, 1.15)
            gray = (128.0 + _tiled_pattern(TEXTURE_CELLS[cls], scale)
                    + _block_background(rng, background)
                    + rng.normal(0.0, noise_sigma, (SIDE, SIDE)))
            images.append(_to_rgb(gray))
            labels.append(cls)
    return np.stack(images), np.array(labels, dtype=np.int64)


def make_highfreq_pair_images(n_per_class: int, coefficient: float,
                              seed: int = 0, cell: tuple = (7, 7),
                              background: float = 25.0,
                              noise_sigma: float = 4.0):
    """Two classes separable only by a high-frequency DCT-cell pattern.

    Class 0 is background-only; class 1 adds the pattern at the requested
    coefficient magnitude. Once quantization zeroes that cell, the classes
    are statistically identical.
    """
    rng = np.random.default_rng(seed)
    pattern = _tiled_pattern(cell, coefficient)
    images, labels = [], []
    for _ in range(n_per_class):
        for cls in (0, 1):
            gray = (128.0 + _block_background(rng, background)
                    + rng.normal(0.0, noise_sigma, (SIDE, SIDE)))
            if cls == 1:
                gray = gray + pattern
            images.append(_to_rgb(gray))
            labels.append(cls)
    return np.stack(images), np.array(labels, dtype=np.int64)


def cell_divisor(q, cell: tuple = (7, 7)) -> int:
    """Integer-mode scaled luma divisor for one cell at quality ``q``."""
    return int(scale_quant_table(BASE_LUMA_TABLE, q, mode="integer")[cell])


def surviving_coefficient(q_survive, q_destroy, cell: tuple = (7, 7),
                          margin: float = 0.05) -> float:
    """Coefficient that survives quality ``q_survive`` but not ``q_destroy``.

    Survival needs C >= d/2; the margin keeps both sides away from the
    rounding boundary so pixel noise cannot flip them.
    """
    d_survive = cell_divisor(q_survive, cell)
    d_destroy = cell_divisor(q_destroy, cell)
    low = (0.5 + margin) * d_survive
    high = (0.5 - margin) * d_destroy
    if low >= high:
        raise ConfigError(
            f"no coefficient survives q={q_survive} (divisor {d_survive}) while "
            f"dying at q={q_destroy} (divisor {d_destroy}) with margin {margin}")
    return 0.5 * (low + high)


def knee_boundary_quality(coefficient: float, cell: tuple = (7, 7)) -> int:
    """Smallest integer quality at which the coefficient still survives."""
    for q in range(1, 101):
        if cell_divisor(q, cell) <= 2.0 * coefficient:
            return q
    raise ConfigError(f"coefficient {coefficient} never survives")  # pragma: no cover
