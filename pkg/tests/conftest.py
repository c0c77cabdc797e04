import numpy as np
import pytest

from percnoise.audiocodec import PcmSignal, write_wav

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def smooth_image():
    """64x48 smooth RGB gradient."""
    h, w = 48, 64
    yy, xx = np.mgrid[0:h, 0:w]
    r = 40 + 140 * xx / (w - 1)
    g = 60 + 120 * yy / (h - 1)
    b = 80 + 60 * (xx + yy) / (w + h - 2)
    return np.clip(np.round(np.stack([r, g, b], axis=2)), 0, 255).astype(np.uint8)


@pytest.fixture
def textured_image():
    """32x32 image with smooth base plus mild mid-frequency texture."""
    rng = np.random.default_rng(42)
    yy, xx = np.mgrid[0:32, 0:32]
    base = 100 + 60 * xx / 31 + 20 * np.sin(2 * np.pi * yy / 16)
    texture = 12 * np.sin(2 * np.pi * (xx + yy) / 8)
    noise = rng.normal(0, 3, (32, 32))
    gray = np.clip(np.round(base + texture + noise), 0, 255).astype(np.uint8)
    return np.stack([gray, gray, gray], axis=2)


@pytest.fixture
def noise_image():
    rng = np.random.default_rng(7)
    return rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)


def synth_tone(freq: float, seconds: float = 1.0, rate: int = 44100,
               amplitude: float = 0.8) -> PcmSignal:
    t = np.arange(int(seconds * rate)) / rate
    samples = np.round(amplitude * 32767 * np.sin(2 * np.pi * freq * t))
    return PcmSignal(samples=samples.astype(np.int16), rate=rate)


def synth_pluck(seconds: float = 1.0, rate: int = 44100) -> PcmSignal:
    """Guitar-like decaying harmonic stack."""
    t = np.arange(int(seconds * rate)) / rate
    x = np.zeros_like(t)
    for k, (amp, decay) in enumerate([(1.0, 2.0), (0.5, 3.0), (0.25, 4.0),
                                      (0.15, 5.0), (0.1, 6.0)], start=1):
        x += amp * np.sin(2 * np.pi * 196.0 * k * t) * np.exp(-decay * t)
    x *= 0.6 * 32767 / np.abs(x).max()
    return PcmSignal(samples=np.round(x).astype(np.int16), rate=rate)


@pytest.fixture
def tone_wav(tmp_path):
    path = tmp_path / "tone.wav"
    write_wav(path, synth_tone(440.0))
    return path


@pytest.fixture
def pluck_signal():
    return synth_pluck()
