"""Audio containers, WAV I/O, resampling, and spectral transforms.

Everything downstream (VAD, enhancement, augmentation, the pipeline) works
on :class:`AudioBuffer` values: immutable mono float32 sample arrays plus a
sample rate. PCM16 exists only at the file boundary.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import signal as sps

from .errors import ArgumentError, ConfigurationError, FormatError, UnsupportedEncodingError

_WINDOWS = {"hann": "hann", "hamming": "hamming", "rect": "boxcar"}

# resampler quality knobs: windowed-sinc polyphase, 64 taps per phase
_KAISER_BETA = 8.6
_TAPS_PER_PHASE = 64


@dataclass(frozen=True)
class AudioBuffer:
    """Mono PCM audio: float32 samples in [-1, 1] plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float32).reshape(-1).copy()
        if not np.all(np.isfinite(arr)):
            raise ArgumentError("audio samples must all be finite")
        if int(self.sample_rate) <= 0:
            raise ArgumentError(f"sample rate must be positive, got {self.sample_rate}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FrameParams:
    """STFT framing: lengths in seconds, window by name."""

    frame_length: float = 0.025
    frame_shift: float = 0.010
    window: str = "hann"

    def __post_init__(self):
        if not 0 < self.frame_shift <= self.frame_length:
            raise ConfigurationError(
                f"need 0 < frame_shift <= frame_length, got shift={self.frame_shift} "
                f"length={self.frame_length}"
            )
        if self.window not in _WINDOWS:
            raise ConfigurationError(f"unknown window {self.window!r}; choose from {sorted(_WINDOWS)}")

    def frame_samples(self, sample_rate: int) -> int:
        return int(round(self.frame_length * sample_rate))

    def shift_samples(self, sample_rate: int) -> int:
        return max(1, int(round(self.frame_shift * sample_rate)))

    def window_array(self, sample_rate: int) -> np.ndarray:
        # periodic windows: the overlap-add identity needs fftbins=True
        return sps.get_window(_WINDOWS[self.window], self.frame_samples(sample_rate), fftbins=True)


@dataclass(frozen=True)
class Spectrogram:
    """Complex STFT frames, shape (T, fft_size//2 + 1)."""

    frames: np.ndarray
    params: FrameParams
    sample_rate: int
    fft_size: int

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.complex128)
        if frames.ndim != 2 or frames.shape[1] != self.fft_size // 2 + 1:
            raise ArgumentError(
                f"spectrogram must be (T, {self.fft_size // 2 + 1}) for fft_size={self.fft_size}"
            )
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_bins(self) -> int:
        return self.frames.shape[1]

    def bin_frequencies(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.sample_rate / self.fft_size


@dataclass(frozen=True)
class MelSpectrogram:
    """Mel filterbank energies, shape (T, n_mels); power domain unless flagged."""

    frames: np.ndarray
    n_mels: int
    params: FrameParams
    log_domain: bool = field(default=False)

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[1] != self.n_mels:
            raise ArgumentError(f"mel frames must be (T, {self.n_mels})")
        if not np.all(np.isfinite(frames)):
            raise ArgumentError("mel values must be finite")
        if not self.log_domain and np.any(frames < 0):
            raise ArgumentError("power-domain mel values must be non-negative")
        object.__setattr__(self, "frames", frames)


# ---------------------------------------------------------------------------
# WAV I/O (RIFF, PCM16 + IEEE float32)
# ---------------------------------------------------------------------------

_FMT_PCM = 1
_FMT_IEEE_FLOAT = 3
_FMT_EXTENSIBLE = 0xFFFE


def read_wav(path) -> AudioBuffer:
    """Read a RIFF/WAVE file as a mono AudioBuffer.

    PCM16 is scaled by 1/32768; IEEE float32 is taken verbatim. Multichannel
    input is downmixed by channel averaging.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise FormatError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise FormatError(f"{path}: data chunk shorter than declared")
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise FormatError(f"{path}: missing fmt or data chunk")

    tag, channels, rate, _byte_rate, _block_align, bits = fmt
    if tag == _FMT_EXTENSIBLE:
        raise UnsupportedEncodingError(f"{path}: WAVE_FORMAT_EXTENSIBLE is not supported")
    if channels < 1:
        raise FormatError(f"{path}: channel count {channels}")
    if tag == _FMT_PCM and bits == 16:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % (2 * channels)], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif tag == _FMT_IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % (4 * channels)], dtype="<f4")
        samples = raw.astype(np.float64)
    else:
        raise UnsupportedEncodingError(f"{path}: format tag {tag} with {bits}-bit samples")

    if channels > 1:
        samples = samples[: len(samples) - len(samples) % channels]
        samples = samples.reshape(-1, channels).mean(axis=1)
    return AudioBuffer(samples, rate)


def write_wav(buffer: AudioBuffer, path, encoding: str = "pcm16") -> None:
    """Write an AudioBuffer as PCM16 or IEEE float32 WAV."""
    if encoding == "pcm16":
        scaled = np.round(buffer.samples.astype(np.float64) * 32768.0)
        frames = np.clip(scaled, -32768, 32767).astype("<i2").tobytes()
        bits, tag = 16, _FMT_PCM
    elif encoding == "float32":
        frames = buffer.samples.astype("<f4").tobytes()
        bits, tag = 32, _FMT_IEEE_FLOAT
    else:
        raise ArgumentError(f"encoding must be pcm16 or float32, got {encoding!r}")

    block_align = bits // 8
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(frames),
        b"WAVE",
        b"fmt ",
        16,
        tag,
        1,
        buffer.sample_rate,
        buffer.sample_rate * block_align,
        block_align,
        bits,
        b"data",
        len(frames),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(frames)


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------


def _sinc_kaiser_filter(up: int, down: int) -> np.ndarray:
    """Anti-aliasing prototype for a polyphase up/down stage (unit DC gain
    before resample_poly's internal scaling by `up`)."""
    max_rate = max(up, down)
    half = (_TAPS_PER_PHASE // 2) * max_rate
    n = np.arange(-half, half + 1)
    taps = np.sinc(n / max_rate) / max_rate
    return taps * np.kaiser(2 * half + 1, _KAISER_BETA)


def _resample_by_ratio(x: np.ndarray, up: int, down: int) -> np.ndarray:
    if up == down:
        return np.asarray(x, dtype=np.float64).copy()
    if len(x) == 0:
        return np.zeros(0)
    return sps.resample_poly(np.asarray(x, dtype=np.float64), up, down, window=_sinc_kaiser_filter(up, down))


def resample(buffer: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Band-limited sample rate conversion (windowed-sinc polyphase)."""
    if int(target_rate) <= 0:
        raise ArgumentError(f"target rate must be positive, got {target_rate}")
    target_rate = int(target_rate)
    if target_rate == buffer.sample_rate:
        return AudioBuffer(buffer.samples, target_rate)
    ratio = Fraction(target_rate, buffer.sample_rate)
    out = _resample_by_ratio(buffer.samples, ratio.numerator, ratio.denominator)
    return AudioBuffer(out, target_rate)


# ---------------------------------------------------------------------------
# STFT / ISTFT / mel
# ---------------------------------------------------------------------------


def _next_pow2(n: int) -> int:
    return 1 << max(0, n - 1).bit_length()


def stft(buffer: AudioBuffer, params: FrameParams) -> Spectrogram:
    """Short-time Fourier transform without padding.

    Frames start at multiples of the shift and must lie fully inside the
    signal, so T = 1 + floor((len - frame_len) / shift). Each frame is
    windowed and zero-padded to the next power of two before the FFT.
    """
    frame_len = params.frame_samples(buffer.sample_rate)
    shift = params.shift_samples(buffer.sample_rate)
    if len(buffer) < frame_len:
        raise ArgumentError(
            f"buffer of {len(buffer)} samples is shorter than one {frame_len}-sample frame"
        )
    n_frames = 1 + (len(buffer) - frame_len) // shift
    fft_size = _next_pow2(frame_len)
    window = params.window_array(buffer.sample_rate)

    x = buffer.samples.astype(np.float64)
    idx = np.arange(frame_len)[None, :] + shift * np.arange(n_frames)[:, None]
    frames = np.fft.rfft(x[idx] * window[None, :], n=fft_size, axis=1)
    return Spectrogram(frames, params, buffer.sample_rate, fft_size)


def istft(spec: Spectrogram) -> AudioBuffer:
    """Overlap-add inverse STFT, normalized by the summed analysis window.

    Requires a constant-overlap-add window/shift combination; samples with
    zero window coverage (only the very edges) come back as zeros.
    """
    frame_len = spec.params.frame_samples(spec.sample_rate)
    shift = spec.params.shift_samples(spec.sample_rate)
    window = spec.params.window_array(spec.sample_rate)
    if not sps.check_COLA(window, frame_len, frame_len - shift):
        raise ConfigurationError(
            f"window {spec.params.window!r} with length {frame_len} and shift {shift} "
            "samples does not satisfy constant overlap-add"
        )

    n_frames = spec.n_frames
    out_len = frame_len + shift * max(0, n_frames - 1) if n_frames else 0
    acc = np.zeros(out_len)
    wsum = np.zeros(out_len)
    time_frames = np.fft.irfft(spec.frames, n=spec.fft_size, axis=1)[:, :frame_len]
    for t in range(n_frames):
        start = t * shift
        acc[start : start + frame_len] += time_frames[t]
        wsum[start : start + frame_len] += window
    covered = wsum > 1e-10
    acc[covered] /= wsum[covered]
    acc[~covered] = 0.0
    return AudioBuffer(acc, spec.sample_rate)


def _hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def _mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, fft_size: int, sample_rate: int, fmin: float, fmax: float) -> np.ndarray:
    """Triangular mel filterbank, each row normalized to unit sum."""
    n_bins = fft_size // 2 + 1
    if not 0 <= fmin < fmax <= sample_rate / 2:
        raise ArgumentError(f"need 0 <= fmin < fmax <= nyquist, got fmin={fmin} fmax={fmax}")
    if n_mels < 1 or n_mels > n_bins:
        raise ConfigurationError(f"n_mels={n_mels} must be in [1, {n_bins}] for fft_size={fft_size}")

    edges_hz = _mel_to_hz(np.linspace(_hz_to_mel(fmin), _hz_to_mel(fmax), n_mels + 2))
    bin_hz = np.arange(n_bins) * sample_rate / fft_size
    weights = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, center, hi = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        rising = (bin_hz - lo) / max(center - lo, 1e-12)
        falling = (hi - bin_hz) / max(hi - center, 1e-12)
        weights[m] = np.clip(np.minimum(rising, falling), 0.0, None)
        if weights[m].sum() <= 0.0:
            # filter narrower than one bin: keep it usable by pinning the nearest bin
            weights[m, np.argmin(np.abs(bin_hz - center))] = 1.0
        weights[m] /= weights[m].sum()
    return weights


def mel_spectrogram(spec: Spectrogram, n_mels: int, fmin: float = 0.0, fmax: float | None = None) -> MelSpectrogram:
    """Project an STFT power spectrogram onto a mel filterbank."""
    if fmax is None:
        fmax = spec.sample_rate / 2
    fb = mel_filterbank(n_mels, spec.fft_size, spec.sample_rate, fmin, fmax)
    power = np.abs(spec.frames) ** 2
    return MelSpectrogram(power @ fb.T, n_mels, spec.params)


def rms_db(buffer: AudioBuffer) -> float:
    """Mean-square level in dBFS; -inf for digital silence."""
    if len(buffer) == 0:
        raise ArgumentError("rms_db of an empty buffer is undefined")
    mean_sq = float(np.mean(buffer.samples.astype(np.float64) ** 2))
    if mean_sq == 0.0:
        return float("-inf")
    return 10.0 * np.log10(mean_sq)
