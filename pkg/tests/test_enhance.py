"""Stationary-noise suppression via spectral gain filtering."""

import numpy as np
import pytest

from cascade_kit import (
    ArgumentError,
    AudioBuffer,
    ConfigurationError,
    FrameParams,
    WienerConfig,
    wiener_enhance,
)

from .conftest import make_noise, make_tone, measured_snr_db


def concat(*arrays):
    return np.concatenate(arrays)


class TestWienerConfig:
    def test_defaults(self):
        cfg = WienerConfig()
        assert cfg.noise_estimation == "initial_frames"
        assert 0 < cfg.gain_floor < 1

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            WienerConfig(gain_floor=0.0)
        with pytest.raises(ConfigurationError):
            WienerConfig(gain_floor=1.5)
        with pytest.raises(ConfigurationError):
            WienerConfig(noise_estimation="psychic")

    def test_non_cola_frames_rejected_at_enhance(self):
        buf = make_noise(1.0, seed=0)
        cfg = WienerConfig(frame_params=FrameParams(0.025, 0.010))
        with pytest.raises(ConfigurationError):
            wiener_enhance(buf, cfg)


class TestWienerEnhance:
    def test_length_preserved(self):
        for n in (800, 801, 12345, 16000):
            buf = make_noise(n / 16000, seed=n)
            out = wiener_enhance(buf)
            assert len(out) == n

    def test_all_zero_passthrough(self):
        buf = AudioBuffer(np.zeros(16000, dtype=np.float32), 16000)
        out = wiener_enhance(buf)
        assert np.all(out.samples == 0)

    def test_no_nan_inf_on_random_inputs(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(900, 20000))
            buf = AudioBuffer(rng.uniform(-1, 1, n).astype(np.float32), 16000)
            out = wiener_enhance(buf)
            assert np.all(np.isfinite(out.samples))

    def test_high_snr_tone_nearly_untouched(self):
        # noise-only lead-in lets the filter learn the floor; the loud tone then
        # passes at gain close to 1
        sr = 16000
        lead = make_noise(0.2, rms=0.001, seed=1).samples
        tone = make_tone(1000.0, 1.0, amplitude=0.5).samples + make_noise(
            1.0, rms=0.001, seed=2
        ).samples
        buf = AudioBuffer(concat(lead, tone), sr)
        out = wiener_enhance(buf)
        region = slice(len(lead) + 1600, len(buf) - 1600)
        ref = buf.samples[region].astype(np.float64)
        got = out.samples[region].astype(np.float64)
        rel = np.linalg.norm(got - ref) / np.linalg.norm(ref)
        assert rel < 0.1

    def test_snr_gain_at_zero_db(self):
        sr = 16000
        tone = make_tone(1000.0, 1.8, amplitude=0.2).samples.astype(np.float64)
        sigma = 0.2 / np.sqrt(2)  # equal power: 0 dB SNR
        noise = np.random.default_rng(3).normal(0.0, sigma, len(tone))
        lead = np.random.default_rng(4).normal(0.0, sigma, int(0.2 * sr))
        mixed = AudioBuffer(concat(lead, tone + noise).astype(np.float32), sr)
        out = wiener_enhance(mixed)
        region = slice(len(lead) + 1600, len(mixed) - 1600)
        clean = tone[1600 : len(tone) - 1600]
        got = out.samples[region].astype(np.float64)
        in_snr = measured_snr_db(clean, noise[1600 : len(tone) - 1600])
        out_snr = measured_snr_db(clean, got - clean)
        assert in_snr == pytest.approx(0.0, abs=0.5)
        assert out_snr >= in_snr + 5.0

    def test_gain_floor_bounds_suppression(self):
        # even pure noise is attenuated by at most gain_floor in each band
        buf = make_noise(1.0, rms=0.1, seed=5)
        cfg = WienerConfig(gain_floor=0.5)
        out = wiener_enhance(buf, cfg)
        in_power = np.mean(buf.samples.astype(np.float64) ** 2)
        out_power = np.mean(out.samples.astype(np.float64) ** 2)
        # energy can drop to gain_floor^2 but not much below (edges tolerated)
        assert out_power >= 0.8 * (0.5**2) * in_power
        assert out_power <= 1.1 * in_power

    def test_homogeneity(self):
        buf = make_noise(1.0, rms=0.05, seed=6)
        base = wiener_enhance(buf).samples.astype(np.float64)
        for alpha in (0.25, 4.0):
            scaled = AudioBuffer(buf.samples * np.float32(alpha), 16000)
            got = wiener_enhance(scaled).samples.astype(np.float64)
            denom = np.linalg.norm(alpha * base)
            assert np.linalg.norm(got - alpha * base) / denom < 1e-6

    def test_too_short_rejected(self):
        buf = AudioBuffer(np.zeros(100, dtype=np.float32), 16000)
        with pytest.raises(ArgumentError):
            wiener_enhance(buf)

    def test_vad_guided_mode_runs(self):
        sr = 16000
        lead = make_noise(0.5, rms=0.05, seed=7).samples
        tone = make_tone(900.0, 1.0, amplitude=0.5).samples + make_noise(
            1.0, rms=0.05, seed=8
        ).samples
        buf = AudioBuffer(concat(lead, tone), sr)
        out = wiener_enhance(buf, WienerConfig(noise_estimation="vad_guided"))
        assert len(out) == len(buf)
        assert np.all(np.isfinite(out.samples))
