"""Shared signal builders for the test suite."""

import numpy as np
import pytest

from cascade_kit import AudioBuffer


def make_tone(freq_hz, seconds, sample_rate=16000, amplitude=0.5, phase=0.0):
    t = np.arange(int(round(seconds * sample_rate))) / sample_rate
    return AudioBuffer(
        (amplitude * np.sin(2 * np.pi * freq_hz * t + phase)).astype(np.float32), sample_rate
    )


def make_noise(seconds, sample_rate=16000, rms=0.1, seed=0):
    rng = np.random.default_rng(seed)
    n = int(round(seconds * sample_rate))
    return AudioBuffer(rng.normal(0.0, rms, n).astype(np.float32), sample_rate)


def measured_snr_db(clean, resid):
    clean = np.asarray(clean, dtype=np.float64)
    resid = np.asarray(resid, dtype=np.float64)
    return 10.0 * np.log10(np.mean(clean**2) / np.mean(resid**2))


def dominant_frequency(samples, sample_rate):
    """Peak of the magnitude spectrum, DC excluded."""
    x = np.asarray(samples, dtype=np.float64)
    spec = np.abs(np.fft.rfft(x))
    spec[0] = 0.0
    return np.argmax(spec) * sample_rate / len(x)


@pytest.fixture
def tone440():
    return make_tone(440.0, 1.0)


@pytest.fixture
def white_noise():
    return make_noise(1.0, seed=1234)
