"""Single-channel noise suppression with a decision-directed Wiener gain.

Meant for cleaning recordings before voice cloning or synthesis; do not
run it in front of recognition, where suppression artifacts typically
cost more accuracy than the noise did.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .audio import AudioBuffer, FrameParams, Spectrogram, istft, stft
from .errors import ArgumentError, ConfigurationError
from .vad import VadConfig, detect

_INIT_NOISE_FRAMES = 6
_PSD_FLOOR = 1e-300


def _default_frame_params():
    # 50 ms / 12.5 ms hann satisfies constant overlap-add, so the
    # analysis/synthesis loop is exactly invertible
    return FrameParams(frame_length=0.050, frame_shift=0.0125, window="hann")


@dataclass(frozen=True)
class WienerConfig:
    frame_params: FrameParams = field(default_factory=_default_frame_params)
    noise_estimation: str = "initial_frames"
    gain_floor: float = 0.1
    prior_snr_smoothing: float = 0.98

    def __post_init__(self):
        if self.noise_estimation not in ("initial_frames", "vad_guided"):
            raise ConfigurationError(
                f"noise_estimation must be initial_frames or vad_guided, got {self.noise_estimation!r}"
            )
        if not 0.0 < self.gain_floor < 1.0:
            raise ConfigurationError(f"gain_floor must be in (0, 1), got {self.gain_floor}")
        if not 0.0 < self.prior_snr_smoothing < 1.0:
            raise ConfigurationError("prior_snr_smoothing must be in (0, 1)")


def _noise_psd(buffer, config, power, shift, first_real):
    """Average power of the frames believed to be noise-only.

    ``first_real`` is the index of the first frame that starts inside the
    actual signal (earlier frames cover lead-in padding only).
    """
    n_frames = power.shape[0]
    if config.noise_estimation == "vad_guided":
        vad_cfg = VadConfig(
            init_noise_frames=min(10, n_frames),
            frame_params=config.frame_params,
        )
        try:
            segments = detect(buffer, vad_cfg)
        except ArgumentError:
            segments = []
        quiet = [s for s in segments if s.label == "non_vocal"]
        if quiet:
            sr = buffer.sample_rate
            picks = []
            for t in range(first_real, n_frames):
                start = (t - first_real) * shift / sr
                if any(s.start <= start < s.end for s in quiet):
                    picks.append(t)
            if picks:
                return power[picks].mean(axis=0)
    stop = min(first_real + _INIT_NOISE_FRAMES, n_frames)
    return power[first_real:stop].mean(axis=0)


def wiener_enhance(buffer: AudioBuffer, config: WienerConfig | None = None) -> AudioBuffer:
    """Suppress stationary noise; output has exactly the input's length.

    The a-priori SNR is tracked per bin with decision-directed smoothing;
    the resulting gain xi/(1+xi) is clipped to [gain_floor, 1], so no bin
    is ever attenuated below the floor or amplified.
    """
    if config is None:
        config = WienerConfig()
    sr = buffer.sample_rate
    frame_len = config.frame_params.frame_samples(sr)
    shift = config.frame_params.shift_samples(sr)
    if len(buffer) < frame_len:
        raise ArgumentError(f"need at least one {frame_len}-sample frame, got {len(buffer)}")
    window = config.frame_params.window_array(sr)
    if not sps.check_COLA(window, frame_len, frame_len - shift):
        raise ConfigurationError(
            f"frame params {config.frame_params} do not satisfy constant overlap-add"
        )

    # Pad both ends so every real sample gets the full overlap-add window
    # sum. Under spectral modification the partially-covered edge samples
    # would otherwise be divided by a near-zero window sum and blow up.
    n = len(buffer)
    lead = -(-frame_len // shift) * shift  # aligned to the frame grid
    n_frames = (lead + n - 1) // shift + 1
    padded_len = (n_frames - 1) * shift + frame_len
    x = np.zeros(padded_len)
    x[lead : lead + n] = buffer.samples.astype(np.float64)

    spec = stft(AudioBuffer(x, sr), config.frame_params)
    frames = spec.frames
    power = np.abs(frames) ** 2
    noise_psd = _noise_psd(buffer, config, power, shift, lead // shift)

    a = config.prior_snr_smoothing
    out_frames = np.empty_like(frames)
    gain_prev = None
    gamma_prev = None
    for t in range(frames.shape[0]):
        gamma = power[t] / np.maximum(noise_psd, _PSD_FLOOR)
        if gain_prev is None:
            xi = a + (1.0 - a) * np.maximum(gamma - 1.0, 0.0)
        else:
            xi = a * gain_prev**2 * gamma_prev + (1.0 - a) * np.maximum(gamma - 1.0, 0.0)
        gain = np.clip(xi / (1.0 + xi), config.gain_floor, 1.0)
        out_frames[t] = gain * frames[t]
        gain_prev = gain
        gamma_prev = gamma

    cleaned = istft(Spectrogram(out_frames, config.frame_params, sr, spec.fft_size))
    return AudioBuffer(cleaned.samples[lead : lead + n], sr)
