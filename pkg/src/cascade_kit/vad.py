"""Statistical voice activity detection.

Per frame, a Gaussian likelihood-ratio test compares observed spectral
power against a running noise estimate; decisions are hangover-smoothed
and merged into segments that tile the input. A narrowband-peak override
keeps steady tones classified as vocal even when the noise tracker has
absorbed them (a self-normalized ratio test alone cannot flag a signal
it has learned as its own noise floor).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer, FrameParams, rms_db, stft
from .errors import ArgumentError

_NOISE_UPDATE = 0.98  # exponential smoothing of the noise PSD on non-speech frames
_TONE_PEAK_SHARE = 0.5  # fraction of frame power inside a 3-bin peak that marks a tone
_PSD_FLOOR = 1e-300


@dataclass(frozen=True)
class VadConfig:
    init_noise_frames: int = 10
    lrt_threshold: float = 0.15
    hangover_frames: int = 8
    prior_snr_smoothing: float = 0.98
    frame_params: FrameParams = field(default_factory=FrameParams)

    def __post_init__(self):
        if self.init_noise_frames < 1:
            raise ArgumentError("init_noise_frames must be at least 1")
        if self.hangover_frames < 0:
            raise ArgumentError("hangover_frames must be non-negative")
        if not 0.0 < self.prior_snr_smoothing < 1.0:
            raise ArgumentError("prior_snr_smoothing must be in (0, 1)")


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    label: str

    def __post_init__(self):
        if not 0.0 <= self.start < self.end:
            raise ArgumentError(f"bad segment bounds [{self.start}, {self.end}]")
        if self.label not in ("vocal", "non_vocal"):
            raise ArgumentError(f"segment label must be vocal or non_vocal, got {self.label!r}")

    @property
    def duration(self) -> float:
        return self.end - self.start


def frame_decisions(buffer: AudioBuffer, config: VadConfig) -> np.ndarray:
    """Raw per-frame speech flags after the likelihood-ratio test and
    hangover smoothing, before merging into segments."""
    spec = stft(buffer, config.frame_params)
    power = np.abs(spec.frames) ** 2
    n_frames = power.shape[0]
    if n_frames < config.init_noise_frames:
        raise ArgumentError(
            f"buffer yields {n_frames} frames but init_noise_frames={config.init_noise_frames}"
        )

    a = config.prior_snr_smoothing
    noise_psd = power[: config.init_noise_frames].mean(axis=0)
    raw = np.zeros(n_frames, dtype=bool)
    gain_prev = None
    gamma_prev = None
    for t in range(n_frames):
        p = power[t]
        gamma = p / np.maximum(noise_psd, _PSD_FLOOR)
        if gain_prev is None:
            xi = a + (1.0 - a) * np.maximum(gamma - 1.0, 0.0)
        else:
            xi = a * gain_prev**2 * gamma_prev + (1.0 - a) * np.maximum(gamma - 1.0, 0.0)
        ratio = xi / (1.0 + xi)
        llr = float(np.mean(gamma * ratio - np.log1p(xi)))

        total = float(p.sum())
        tonal = False
        if total > 0.0 and p.shape[0] > 1:
            k = int(np.argmax(p[1:])) + 1  # DC excluded from the peak search
            share = float(p[max(k - 1, 0) : k + 2].sum())
            tonal = share > _TONE_PEAK_SHARE * total

        raw[t] = llr > config.lrt_threshold or tonal
        if not raw[t]:
            noise_psd = _NOISE_UPDATE * noise_psd + (1.0 - _NOISE_UPDATE) * p
        gain_prev = ratio
        gamma_prev = gamma

    # hangover: stretch each detection by a fixed number of frames
    smoothed = np.zeros(n_frames, dtype=bool)
    run = 0
    for t in range(n_frames):
        if raw[t]:
            run = config.hangover_frames
            smoothed[t] = True
        elif run > 0:
            smoothed[t] = True
            run -= 1
    return smoothed


def detect(buffer: AudioBuffer, config: VadConfig | None = None):
    """Split a buffer into alternating vocal / non_vocal segments.

    Frame t owns the time span of one frame shift starting at its own
    offset; the last frame owns everything to the end of the buffer, so
    the returned segments always tile [0, duration] exactly.
    """
    if config is None:
        config = VadConfig()
    flags = frame_decisions(buffer, config)
    sr = buffer.sample_rate
    shift = config.frame_params.shift_samples(sr)
    duration = len(buffer) / sr

    segments = []
    start_frame = 0
    for t in range(1, len(flags) + 1):
        if t == len(flags) or flags[t] != flags[start_frame]:
            start = start_frame * shift / sr
            end = duration if t == len(flags) else t * shift / sr
            label = "vocal" if flags[start_frame] else "non_vocal"
            segments.append(Segment(start, end, label))
            start_frame = t
    return segments


def extract_noise_set(
    buffer: AudioBuffer,
    config: VadConfig | None = None,
    energy_threshold_db: float = -50.0,
    min_len: float = 0.5,
):
    """Harvest non-vocal stretches loud enough to be usable noise.

    Returns the sample-exact cuts of every non_vocal segment whose RMS
    level exceeds the threshold and whose duration reaches min_len. A
    threshold of -inf disables the energy gate entirely.
    """
    if config is None:
        config = VadConfig()
    sr = buffer.sample_rate
    out = []
    for seg in detect(buffer, config):
        if seg.label != "non_vocal" or seg.duration < min_len:
            continue
        lo = int(round(seg.start * sr))
        hi = int(round(seg.end * sr))
        cut = AudioBuffer(buffer.samples[lo:hi], sr)
        if energy_threshold_db == float("-inf") or rms_db(cut) > energy_threshold_db:
            out.append(cut)
    return out
