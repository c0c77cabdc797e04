"""Free-energy sensor model and the accuracy-vs-quantization curve machinery.

The model treats a sensor reading as the maximum reading minus a noise
scalar times the information content of the sample:

    reading = r_max - n * h

where h is the Shannon surprisal of the captured symbol. Inverting the
relation in expectation yields a moment estimator for the noise scalar,
and dividing an energy deficit by that estimate approximates per-sample
content. Classifier accuracy against quantization strength Q is modeled
as c * log(100 - 100*Q); the quantization fraction where measured
accuracy departs its plateau (the knee) identifies the noise level.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFitError, UndefinedNoiseError


def shannon_entropy(histogram) -> float:
    """Shannon entropy in bits of a histogram of non-negative counts."""
    counts = np.asarray(histogram, dtype=np.float64).ravel()
    if counts.size == 0 or np.any(counts < 0):
        raise ValueError("histogram must contain non-negative counts")
    total = counts.sum()
    if total <= 0:
        raise ValueError("histogram has no mass")
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log2(p)))


@dataclass(frozen=True)
class ContentSource:
    """Finite-alphabet symbol distribution with per-symbol surprisal."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64).ravel()
        if p.size == 0 or np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities must sum to 1, got {p.sum()}")
        object.__setattr__(self, "probabilities", p)

    @property
    def surprisals(self) -> np.ndarray:
        """Per-symbol -log2 p; zero-probability symbols get +inf."""
        p = self.probabilities
        with np.errstate(divide="ignore"):
            return -np.log2(p)

    @property
    def entropy(self) -> float:
        return shannon_entropy(self.probabilities)


@dataclass(frozen=True)
class SensorModel:
    """Sensor with maximum reading ``r_max``, noise scalar ``n`` and optional
    zero-mean Gaussian jitter expressed as a fraction of ``r_max``."""

    r_max: float
    n: float
    jitter: float = 0.0

    def __post_init__(self):
        if self.r_max <= 0:
            raise ValueError("r_max must be positive")
        if self.n < 0 or self.jitter < 0:
            raise ValueError("n and jitter must be non-negative")


def synthesize_readings(model: SensorModel, source: ContentSource,
                        count: int, seed: int) -> np.ndarray:
    """Draw ``count`` seeded readings r = r_max - n*h + jitter."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    symbols = rng.choice(source.probabilities.size, size=count,
                         p=source.probabilities)
    readings = model.r_max - model.n * source.surprisals[symbols]
    if model.jitter > 0:
        readings = readings + rng.normal(0.0, model.jitter * model.r_max, count)
    return readings


def estimate_noise_scalar(readings, r_max: float, entropy_bits: float) -> float:
    """Moment estimate of the noise scalar: mean(r_max - r) / H.

    Inverts the reading model in expectation; unbiased under zero-mean
    jitter and robust to zero-surprisal samples.
    """
    readings = np.asarray(readings, dtype=np.float64).ravel()
    if readings.size == 0:
        raise ValueError("readings must be non-empty")
    if entropy_bits <= 0:
        raise UndefinedNoiseError("noise scalar is undefined for zero entropy")
    return float(np.mean(r_max - readings) / entropy_bits)


def approx_content(reading, r_max: float, n_approx: float):
    """Approximate per-sample content in bits: (r_max - reading) / n_approx."""
    if n_approx <= 0:
        raise UndefinedNoiseError("content approximation needs n_approx > 0")
    return (r_max - np.asarray(reading, dtype=np.float64)) / n_approx


@dataclass
class AccuracyCurve:
    """Accuracy samples over strictly increasing quantization fractions."""

    qs: np.ndarray
    accuracies: np.ndarray
    c: float | None = field(default=None)

    def __post_init__(self):
        self.qs = np.asarray(self.qs, dtype=np.float64).ravel()
        self.accuracies = np.asarray(self.accuracies, dtype=np.float64).ravel()
        if self.qs.shape != self.accuracies.shape:
            raise ValueError("qs and accuracies must have equal length")
        if np.any(np.diff(self.qs) <= 0):
            raise ValueError("Q values must be strictly increasing")
        if not np.all(np.isfinite(self.accuracies)):
            raise ValueError("accuracies must be finite")

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.qs.tolist(), self.accuracies.tolist()))


def curve_value(c: float, q) -> np.ndarray:
    """Evaluate c * log(100 - 100*Q) at quantization fraction Q in [0, 1).

    Natural log; the base is unidentifiable from data since c absorbs any
    base change, so generation and fitting only need to agree.
    """
    q = np.asarray(q, dtype=np.float64)
    if np.any(q < 0) or np.any(q >= 1):
        raise ValueError("quantization fraction must lie in [0, 1)")
    return c * np.log(100.0 - 100.0 * q)


def theoretical_curve(c: float, q_grid) -> AccuracyCurve:
    """Generate the hypothesized accuracy curve on a Q grid."""
    q_grid = np.asarray(q_grid, dtype=np.float64).ravel()
    return AccuracyCurve(qs=q_grid, accuracies=curve_value(c, q_grid), c=c)


def fit_curve(points) -> float:
    """Closed-form least squares for the curve scale constant.

    With x_i = log(100 - 100*Q_i), minimizes sum (a_i - c*x_i)^2, giving
    c = sum(a_i x_i) / sum(x_i^2). Needs at least two distinct Q values.
    """
    pts = _as_points(points)
    if pts.shape[0] < 2:
        raise DegenerateFitError("curve fit needs at least 2 points")
    qs, accs = pts[:, 0], pts[:, 1]
    if np.any(qs >= 1) or np.any(qs < 0):
        raise ValueError("quantization fraction must lie in [0, 1)")
    if np.unique(qs).size < 2:
        raise DegenerateFitError("curve fit needs at least 2 distinct Q values")
    x = np.log(100.0 - 100.0 * qs)
    denom = float(np.sum(x * x))
    if denom == 0.0:
        raise DegenerateFitError("all abscissae are zero; scale is unidentifiable")
    return float(np.sum(accs * x) / denom)


def detect_knee(points, tau: float = 0.05) -> float:
    """Find the quantization fraction where accuracy departs its plateau.

    Smooths with a trailing 3-point moving average, takes the plateau as
    the smoothed maximum, and returns the largest Q whose smoothed accuracy
    is still >= (1 - tau) * plateau. Ties break toward larger Q.
    """
    if not 0 <= tau < 1:
        raise ValueError("tau must lie in [0, 1)")
    pts = _as_points(points)
    if pts.shape[0] < 4:
        raise ValueError("knee detection needs at least 4 points")
    qs, accs = pts[:, 0], pts[:, 1]
    if np.any(np.diff(qs) < 0):
        raise ValueError("points must be sorted by Q")
    smoothed = np.array([accs[max(0, i - 2):i + 1].mean() for i in range(accs.size)])
    threshold = (1.0 - tau) * smoothed.max()
    above = np.nonzero(smoothed >= threshold)[0]
    return float(qs[above[-1]])


def noise_bits_estimate(q_knee, budget) -> tuple[float, float]:
    """Split the per-pixel bit budget at the knee quality.

    Content bits are what remains at the knee; noise bits are the rest of
    the post-subsampling baseline.
    """
    content = budget.bits_remaining(q_knee)
    return content, budget.baseline - content


def _as_points(points) -> np.ndarray:
    if isinstance(points, AccuracyCurve):
        return np.column_stack([points.qs, points.accuracies])
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be a sequence of (Q, accuracy) pairs")
    return pts
