"""percnoise: measure the noise content of images and audio in bits.

Combines a JPEG-style image transcoder and an MDCT audio quantizer with
small trainable classifiers. Sweeping perceptual quality against test
accuracy locates the knee where quantization starts destroying content;
the quality-to-bits arithmetic then splits the per-pixel budget into
content bits and noise bits.
"""

__version__ = "0.1.0"

from .audiocodec import (AudioQuality, MelSpectrogram, PcmSignal,
                         mel_spectrogram, mdct_forward, mdct_inverse,
                         perceptual_quantize_audio, read_wav, snr_db, write_wav)
from .bitbudget import (DEFAULT_MODEL, REFERENCE_COMPONENT_SUM, BitBudgetModel,
                        bits_lost, bits_remaining, quality_for_bits,
                        recomputed_component_sum)
from .helmholtz import (AccuracyCurve, ContentSource, SensorModel,
                        approx_content, curve_value, detect_knee,
                        estimate_noise_scalar, fit_curve, noise_bits_estimate,
                        shannon_entropy, synthesize_readings, theoretical_curve)
from .imagecodec import (BASE_CHROMA_TABLE, BASE_LUMA_TABLE, CodecStats,
                         ImageYUV420, forward_dct, inverse_dct, psnr,
                         quantize_block, dequantize_block, rgb_to_yuv420,
                         scale_quant_table, transcode_image, yuv420_to_rgb)

__all__ = [
    "__version__",
    # image codec
    "BASE_LUMA_TABLE", "BASE_CHROMA_TABLE", "ImageYUV420", "CodecStats",
    "rgb_to_yuv420", "yuv420_to_rgb", "forward_dct", "inverse_dct",
    "scale_quant_table", "quantize_block", "dequantize_block",
    "transcode_image", "psnr",
    # bit budget
    "BitBudgetModel", "DEFAULT_MODEL", "REFERENCE_COMPONENT_SUM",
    "recomputed_component_sum", "bits_lost", "bits_remaining", "quality_for_bits",
    # audio codec
    "PcmSignal", "AudioQuality", "MelSpectrogram", "read_wav", "write_wav",
    "mdct_forward", "mdct_inverse", "perceptual_quantize_audio",
    "mel_spectrogram", "snr_db",
    # helmholtz core
    "ContentSource", "SensorModel", "AccuracyCurve", "shannon_entropy",
    "synthesize_readings", "estimate_noise_scalar", "approx_content",
    "curve_value", "theoretical_curve", "fit_curve", "detect_knee",
    "noise_bits_estimate",
]
