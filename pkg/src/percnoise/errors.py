"""Exception types shared across the toolkit."""


class PercnoiseError(Exception):
    """Base class for all toolkit errors."""


class InvalidImageError(PercnoiseError):
    """Image buffer is malformed (zero dimension, wrong length, bad dtype)."""


class InvalidQualityError(PercnoiseError):
    """Quality value lies outside the supported range."""


class UnsupportedWavError(PercnoiseError):
    """WAV file is not 16-bit mono PCM."""


class TooShortSignalError(PercnoiseError):
    """Signal is shorter than one analysis frame."""


class FeatureUnavailableError(PercnoiseError):
    """Optional feature needs an external tool that is not configured."""


class UndefinedNoiseError(PercnoiseError):
    """Noise estimation is undefined (zero-entropy source)."""


class DegenerateFitError(PercnoiseError):
    """Curve fit has no solution (too few distinct abscissae)."""


class ShapeError(PercnoiseError):
    """Layer shapes do not chain, or an input does not match the model."""


class DivergenceError(PercnoiseError):
    """Training produced a non-finite loss.

    Carries the 1-based epoch index at which the blow-up was detected.
    """

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")


class DatasetError(PercnoiseError):
    """Dataset files are missing, truncated, or inconsistent."""


class ConfigError(PercnoiseError):
    """A configuration document failed to parse or validate."""


class PlotError(PercnoiseError):
    """Plot input is missing required columns or values."""
