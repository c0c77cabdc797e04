"""JPEG-style perceptual image transcoder.

Forward path: full-range BT.601 color transform, 4:2:0 chroma subsampling,
blockwise orthonormal 8x8 DCT, quality-scaled quantization with the standard
luminance/chrominance divisor tables. Inverse path mirrors it. No entropy
coding is performed; instead the per-image statistics report the Shannon
entropy of the quantized coefficients.
"""

from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn

from .errors import InvalidImageError, InvalidQualityError
from .helmholtz import shannon_entropy

BLOCK = 8

# Standard base quantization divisors (luminance / chrominance).
BASE_LUMA_TABLE = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.int64)

BASE_CHROMA_TABLE = np.array([
    [17, 18, 24, 47, 99, 99, 99, 99],
    [18, 21, 26, 66, 99, 99, 99, 99],
    [24, 26, 56, 99, 99, 99, 99, 99],
    [47, 66, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
], dtype=np.int64)


@dataclass(frozen=True)
class ImageYUV420:
    """Luma plane at full resolution, chroma planes at half resolution.

    Chroma plane dimensions are the rounded-up halves of the luma plane.
    """

    y: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        h, w = self.y.shape
        ch, cw = (h + 1) // 2, (w + 1) // 2
        if self.u.shape != (ch, cw) or self.v.shape != (ch, cw):
            raise InvalidImageError(
                f"chroma planes must be {(ch, cw)}, got {self.u.shape}/{self.v.shape}")


@dataclass(frozen=True)
class CodecStats:
    """Instrumentation of one transcode run."""

    quality: int
    mean_coeff_entropy: float   # bits per quantized coefficient
    nonzero_fraction: float
    psnr: float                 # dB vs source; inf when identical


def _require_rgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise InvalidImageError(f"expected (H, W, 3) array, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise InvalidImageError("image has a zero dimension")
    if img.dtype != np.uint8:
        if np.issubdtype(img.dtype, np.integer) and img.min() >= 0 and img.max() <= 255:
            img = img.astype(np.uint8)
        else:
            raise InvalidImageError(f"expected uint8 samples, got dtype {img.dtype}")
    return img


def _require_quality(q) -> int:
    if not float(q).is_integer() or not 1 <= int(q) <= 100:
        raise InvalidQualityError(f"quality must be an integer in [1, 100], got {q!r}")
    return int(q)


def rgb_to_yuv420(img: np.ndarray) -> ImageYUV420:
    """Convert 8-bit RGB to full-range BT.601 YUV with 4:2:0 chroma.

    Chroma planes are produced by a 2x2 box average (edge-replicated for odd
    dimensions) and rounded back to 8 bits.
    """
    img = _require_rgb(img)
    r = img[:, :, 0].astype(np.float64)
    g = img[:, :, 1].astype(np.float64)
    b = img[:, :, 2].astype(np.float64)

    y = 0.299 * r + 0.587 * g + 0.114 * b
    u = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    v = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b

    def _to_u8(plane):
        return np.clip(np.round(plane), 0, 255).astype(np.uint8)

    return ImageYUV420(y=_to_u8(y), u=_to_u8(_box_halve(u)), v=_to_u8(_box_halve(v)))


def yuv420_to_rgb(yuv: ImageYUV420) -> np.ndarray:
    """Inverse of :func:`rgb_to_yuv420` with nearest-neighbor chroma upsampling."""
    h, w = yuv.y.shape
    y = yuv.y.astype(np.float64)
    u = _nearest_double(yuv.u.astype(np.float64))[:h, :w] - 128.0
    v = _nearest_double(yuv.v.astype(np.float64))[:h, :w] - 128.0

    r = y + 1.402 * v
    g = y - 0.344136 * u - 0.714136 * v
    b = y + 1.772 * u
    rgb = np.stack([r, g, b], axis=2)
    return np.clip(np.round(rgb), 0, 255).astype(np.uint8)


def _box_halve(plane: np.ndarray) -> np.ndarray:
    """2x2 box average; odd trailing rows/columns are edge-replicated first."""
    h, w = plane.shape
    if h % 2:
        plane = np.vstack([plane, plane[-1:, :]])
    if w % 2:
        plane = np.hstack([plane, plane[:, -1:]])
    return 0.25 * (plane[0::2, 0::2] + plane[0::2, 1::2]
                   + plane[1::2, 0::2] + plane[1::2, 1::2])


def _nearest_double(plane: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(plane, 2, axis=0), 2, axis=1)


def forward_dct(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D DCT-II of one 8x8 block of [0, 255] samples.

    The -128 level shift is applied internally; Parseval's identity holds
    for the shifted samples.
    """
    block = np.asarray(block, dtype=np.float64).reshape(BLOCK, BLOCK)
    return dctn(block - 128.0, norm="ortho")


def inverse_dct(coeffs: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`forward_dct` before any rounding or clamping."""
    coeffs = np.asarray(coeffs, dtype=np.float64).reshape(BLOCK, BLOCK)
    return idctn(coeffs, norm="ortho") + 128.0


def quality_scale_factor(q) -> float:
    """Map quality in [1, 100] to the multiplicative divisor scale (percent)."""
    q = float(q)
    if not 1 <= q <= 100:
        raise InvalidQualityError(f"quality must be in [1, 100], got {q!r}")
    return 5000.0 / q if q < 50 else 200.0 - 2.0 * q


def scale_quant_table(base: np.ndarray, q, mode: str = "integer") -> np.ndarray:
    """Scale a base divisor table to quality ``q``.

    ``continuous`` mode returns real-valued divisors entry*sf/100 with no
    rounding or clamping. ``integer`` mode reproduces the reference encoder:
    floor((entry*sf + 50) / 100) clamped to [1, 255].
    """
    sf = quality_scale_factor(q)
    base = np.asarray(base, dtype=np.float64)
    if mode == "continuous":
        return base * sf / 100.0
    if mode == "integer":
        scaled = np.floor((base * sf + 50.0) / 100.0)
        return np.clip(scaled, 1, 255).astype(np.int64)
    raise ValueError(f"mode must be 'continuous' or 'integer', got {mode!r}")


def quantize_block(coeffs: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Divide coefficients by the table and round to nearest integers."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    table = np.asarray(table, dtype=np.float64)
    if coeffs.shape[-2:] != (BLOCK, BLOCK) or table.shape != (BLOCK, BLOCK):
        raise InvalidImageError("quantization expects 8x8 blocks and an 8x8 table")
    return np.round(coeffs / table).astype(np.int64)


def dequantize_block(quantized: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Multiply quantized levels back by the table."""
    return np.asarray(quantized, dtype=np.float64) * np.asarray(table, dtype=np.float64)


def _pad_to_block_multiple(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    ph = (-h) % BLOCK
    pw = (-w) % BLOCK
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    return plane


def _as_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return plane.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK).transpose(0, 2, 1, 3)


def _from_blocks(blocks: np.ndarray) -> np.ndarray:
    bh, bw = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(bh * BLOCK, bw * BLOCK)


def _transcode_plane(plane: np.ndarray, table: np.ndarray):
    """DCT -> quantize -> dequantize -> IDCT for one plane.

    Returns the reconstructed plane and the flat quantized levels (for stats).
    """
    h, w = plane.shape
    padded = _pad_to_block_multiple(plane.astype(np.float64)) - 128.0
    blocks = _as_blocks(padded)
    coeffs = dctn(blocks, axes=(-2, -1), norm="ortho")
    levels = np.round(coeffs / table).astype(np.int64)
    recon = idctn(levels * table.astype(np.float64), axes=(-2, -1), norm="ortho")
    out = _from_blocks(recon)[:h, :w] + 128.0
    return np.clip(np.round(out), 0, 255).astype(np.uint8), levels.ravel()


def psnr(reference: np.ndarray, test: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for 8-bit images; inf when identical."""
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    mse = np.mean((reference - test) ** 2)
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(255.0 ** 2 / mse)


def transcode_image(img: np.ndarray, q) -> tuple[np.ndarray, CodecStats]:
    """Run the full forward+inverse pipeline at quality ``q``.

    Luma blocks are quantized with the integer-scaled luminance table, chroma
    blocks with the chrominance table. Edge blocks are replicate-padded to
    8x8. Deterministic in all inputs.
    """
    img = _require_rgb(img)
    q = _require_quality(q)
    luma = scale_quant_table(BASE_LUMA_TABLE, q, mode="integer")
    chroma = scale_quant_table(BASE_CHROMA_TABLE, q, mode="integer")

    yuv = rgb_to_yuv420(img)
    y2, ly = _transcode_plane(yuv.y, luma)
    u2, lu = _transcode_plane(yuv.u, chroma)
    v2, lv = _transcode_plane(yuv.v, chroma)
    out = yuv420_to_rgb(ImageYUV420(y=y2, u=u2, v=v2))

    levels = np.concatenate([ly, lu, lv])
    _, counts = np.unique(levels, return_counts=True)
    stats = CodecStats(
        quality=q,
        mean_coeff_entropy=shannon_entropy(counts),
        nonzero_fraction=float(np.count_nonzero(levels)) / levels.size,
        psnr=psnr(img, out),
    )
    return out, stats
