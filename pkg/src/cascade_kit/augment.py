"""Waveform and spectrogram augmentation: speed, pitch, noise, codec, masking.

Everything randomized takes an explicit numpy Generator or a recipe seed,
so a manifest-level run is reproducible byte for byte no matter how the
work is scheduled.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .audio import (
    AudioBuffer,
    FrameParams,
    MelSpectrogram,
    Spectrogram,
    _resample_by_ratio,
    istft,
    read_wav,
    resample,
    stft,
    write_wav,
)
from .errors import ArgumentError, CascadeKitError, CodecError

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Time-scale modification (phase vocoder, identity phase locking)
# ---------------------------------------------------------------------------


def _princarg(x):
    return (x + np.pi) % (2.0 * np.pi) - np.pi


def _tsm(x: np.ndarray, target_len: int) -> np.ndarray:
    """Stretch or compress x to target_len samples at constant pitch.

    Phase-vocoder resynthesis at 75% overlap; phases of the bins around
    each spectral peak stay locked to the peak, which keeps tones clean
    instead of smearing ("phasiness"). Degenerate inputs fall back to
    plain resampling.
    """
    x = np.asarray(x, dtype=np.float64)
    if target_len <= 0:
        return np.zeros(max(target_len, 0))
    if len(x) == 0:
        return np.zeros(target_len)
    if len(x) == target_len:
        return x.copy()
    if len(x) < 64:
        frac = Fraction(target_len, len(x))
        out = _resample_by_ratio(x, frac.numerator, frac.denominator)
        return _fit_length(out, target_len)

    nfft = 1024
    while nfft > len(x):
        nfft //= 2
    hop = nfft // 4
    win = sps.get_window("hann", nfft, fftbins=True)
    rate = len(x) / target_len

    n_frames = max(1, -(-(target_len - nfft) // hop) + 1) + 1
    xp = np.concatenate([x, np.zeros(nfft + int(hop * rate) + 2)])
    max_start = len(xp) - nfft

    bin_freq = 2.0 * np.pi * np.arange(nfft // 2 + 1) / nfft  # radians per sample
    out = np.zeros((n_frames - 1) * hop + nfft)
    wsum = np.zeros_like(out)

    phase_syn = None
    phase_prev = None
    pos_prev = 0
    for k in range(n_frames):
        pos = min(int(round(k * hop * rate)), max_start)
        frame = np.fft.rfft(xp[pos : pos + nfft] * win)
        mag = np.abs(frame)
        phase = np.angle(frame)

        if phase_syn is None:
            phase_syn = phase.copy()
        else:
            d = pos - pos_prev
            if d > 0:
                deviation = _princarg(phase - phase_prev - bin_freq * d)
                inst_freq = bin_freq + deviation / d
            else:
                inst_freq = bin_freq
            propagated = phase_syn + hop * inst_freq
            peaks = _spectral_peaks(mag)
            if len(peaks):
                borders = (peaks[:-1] + peaks[1:] + 1) // 2
                owner = peaks[np.searchsorted(borders, np.arange(len(mag)), side="right")]
                phase_syn = propagated[owner] + (phase - phase[owner])
                phase_syn[peaks] = propagated[peaks]
            else:
                phase_syn = propagated

        y = np.fft.irfft(mag * np.exp(1j * phase_syn), n=nfft) * win
        start = k * hop
        out[start : start + nfft] += y
        wsum[start : start + nfft] += win**2
        phase_prev = phase
        pos_prev = pos

    covered = wsum > 1e-9
    out[covered] /= wsum[covered]
    out[~covered] = 0.0
    return _fit_length(out, target_len)


def _spectral_peaks(mag):
    if len(mag) < 3:
        return np.array([], dtype=int)
    interior = (mag[1:-1] >= mag[:-2]) & (mag[1:-1] > mag[2:]) & (mag[1:-1] > 0)
    return np.flatnonzero(interior) + 1


def _fit_length(x, n):
    if len(x) >= n:
        return x[:n].copy()
    return np.concatenate([x, np.zeros(n - len(x))])


# ---------------------------------------------------------------------------
# Waveform strategies
# ---------------------------------------------------------------------------


def speed_perturb(buffer: AudioBuffer, factor: float, preserve_pitch: bool = True) -> AudioBuffer:
    """Change playback speed by `factor` (duration scales by 1/factor).

    preserve_pitch=True runs time-scale modification so voices keep their
    pitch; False resamples instead, shifting pitch with speed the way
    recognition-style speed perturbation does.
    """
    if not (math.isfinite(factor) and factor > 0):
        raise ArgumentError(f"speed factor must be positive and finite, got {factor}")
    if factor == 1.0:
        return AudioBuffer(buffer.samples, buffer.sample_rate)
    if preserve_pitch:
        target = int(round(len(buffer) / factor))
        return AudioBuffer(_tsm(buffer.samples, target), buffer.sample_rate)
    frac = Fraction(factor).limit_denominator(10000)
    out = _resample_by_ratio(buffer.samples, frac.denominator, frac.numerator)
    return AudioBuffer(out, buffer.sample_rate)


def pitch_shift(buffer: AudioBuffer, cents: float) -> AudioBuffer:
    """Shift spectral content by 2^(cents/1200) at unchanged duration.

    Time-stretch first, then resample back to the original length; the
    resample ratio is approximated to better than a hundredth of a cent.
    """
    if not math.isfinite(cents):
        raise ArgumentError(f"cents must be finite, got {cents}")
    n = len(buffer)
    if cents == 0.0 or n == 0:
        return AudioBuffer(buffer.samples, buffer.sample_rate)
    factor = 2.0 ** (cents / 1200.0)
    stretched = _tsm(buffer.samples, max(1, int(round(n * factor))))
    frac = Fraction(n, len(stretched)).limit_denominator(1000)
    out = _resample_by_ratio(stretched, frac.numerator, frac.denominator)
    return AudioBuffer(_fit_length(out, n), buffer.sample_rate)


def mix_noise(speech: AudioBuffer, noise: AudioBuffer, snr_db: float, rng) -> AudioBuffer:
    """Add looped noise at an exact signal-to-noise ratio.

    The noise is tiled from a random offset to the speech length and
    scaled so the measured SNR equals snr_db; if the sum clips, the whole
    mixture is peak-normalized (the gain is logged).
    """
    if speech.sample_rate != noise.sample_rate:
        raise ArgumentError(
            f"sample rates differ: speech {speech.sample_rate}, noise {noise.sample_rate}"
        )
    if len(noise) == 0 or not np.any(noise.samples):
        raise ArgumentError("noise buffer is silent")
    if not math.isfinite(snr_db):
        raise ArgumentError(f"snr_db must be finite, got {snr_db}")

    s = speech.samples.astype(np.float64)
    nz = noise.samples.astype(np.float64)
    offset = int(rng.integers(0, len(nz)))
    idx = (offset + np.arange(len(s))) % len(nz)
    seg = nz[idx]
    if not np.any(seg):
        # the sampled window happened to be a silent stretch; restart at
        # the first audible sample so the SNR is still well defined
        offset = int(np.flatnonzero(nz)[0])
        seg = nz[(offset + np.arange(len(s))) % len(nz)]

    p_speech = float(np.mean(s**2))
    p_noise = float(np.mean(seg**2))
    gain = math.sqrt(p_speech / (p_noise * 10.0 ** (snr_db / 10.0))) if p_speech > 0 else 0.0
    mixed = s + gain * seg
    peak = float(np.max(np.abs(mixed))) if len(mixed) else 0.0
    if peak > 1.0:
        mixed /= peak
        log.info("mix_noise: peak-normalized by %.4f to avoid clipping", 1.0 / peak)
    return AudioBuffer(mixed, speech.sample_rate)


# ---------------------------------------------------------------------------
# Codec simulation
# ---------------------------------------------------------------------------


class IdentityCodec:
    """Pass-through adapter; round-trips are bit-identical."""

    def roundtrip(self, audio: AudioBuffer, bitrate_kbps: float) -> AudioBuffer:
        return AudioBuffer(audio.samples, audio.sample_rate)


class SubbandQuantizerCodec:
    """Built-in stand-in for a lossy codec.

    Low-pass at a bitrate-proportional cutoff, then quantize magnitudes
    in four sub-bands with a level count that grows with bitrate. Crude,
    but it degrades audio monotonically with bitrate and needs no
    external encoder.
    """

    def __init__(self, n_bands: int = 4):
        self.n_bands = n_bands
        self.frame_params = FrameParams(frame_length=0.050, frame_shift=0.0125, window="hann")

    def roundtrip(self, audio: AudioBuffer, bitrate_kbps: float) -> AudioBuffer:
        sr = audio.sample_rate
        frame_len = self.frame_params.frame_samples(sr)
        shift = self.frame_params.shift_samples(sr)
        n = len(audio)
        if n == 0:
            return AudioBuffer(audio.samples, sr)
        n_frames = 1 + max(0, -(-(n - frame_len) // shift))
        padded = np.zeros((n_frames - 1) * shift + frame_len)
        padded[:n] = audio.samples.astype(np.float64)

        spec = stft(AudioBuffer(padded, sr), self.frame_params)
        mags = np.abs(spec.frames)
        phases = np.angle(spec.frames)
        freqs = np.arange(mags.shape[1]) * sr / spec.fft_size

        cutoff = min(8000.0 * bitrate_kbps / 256.0, sr / 2.0)
        mags[:, freqs > cutoff] = 0.0

        levels = max(2, int(round(bitrate_kbps / 2.0)))
        edges = np.linspace(0.0, cutoff, self.n_bands + 1)
        for b in range(self.n_bands):
            band = (freqs >= edges[b]) & (freqs <= edges[b + 1])
            if not band.any():
                continue
            block = mags[:, band]
            ceil_ = block.max(axis=1, keepdims=True)
            step = ceil_ / levels
            nonzero = step[:, 0] > 0
            block[nonzero] = np.round(block[nonzero] / step[nonzero]) * step[nonzero]
            mags[:, band] = block

        out = istft(Spectrogram(mags * np.exp(1j * phases), self.frame_params, sr, spec.fft_size))
        return AudioBuffer(out.samples[:n], sr)


def codec_simulate(buffer: AudioBuffer, bitrate_kbps: float, codec=None) -> AudioBuffer:
    """Round-trip audio through a lossy codec adapter at the given bitrate.

    With no adapter supplied the built-in sub-band quantizer is used. The
    result is trimmed or zero-padded back to the input length, absorbing
    any codec delay.
    """
    if not (math.isfinite(bitrate_kbps) and bitrate_kbps > 0):
        raise ArgumentError(f"bitrate must be positive, got {bitrate_kbps}")
    if codec is None:
        codec = SubbandQuantizerCodec()
    try:
        out = codec.roundtrip(buffer, bitrate_kbps)
    except CascadeKitError:
        raise
    except Exception as exc:
        raise CodecError(f"codec adapter failed: {exc}") from exc
    if out.sample_rate != buffer.sample_rate:
        out = resample(out, buffer.sample_rate)
    return AudioBuffer(_fit_length(out.samples.astype(np.float64), len(buffer)), buffer.sample_rate)


# ---------------------------------------------------------------------------
# Spectrogram masking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpecAugmentPolicy:
    time_warp_w: int = 5
    n_freq_masks: int = 2
    freq_mask_f: int = 27
    n_time_masks: int = 2
    time_mask_t: int = 40
    mask_value: str = "mean"

    def __post_init__(self):
        for name in ("time_warp_w", "n_freq_masks", "freq_mask_f", "n_time_masks", "time_mask_t"):
            if getattr(self, name) < 0:
                raise ArgumentError(f"{name} must be non-negative")
        if self.mask_value not in ("zero", "mean"):
            raise ArgumentError(f"mask_value must be zero or mean, got {self.mask_value!r}")

    def is_noop(self) -> bool:
        return (
            self.time_warp_w == 0
            and (self.n_freq_masks == 0 or self.freq_mask_f == 0)
            and (self.n_time_masks == 0 or self.time_mask_t == 0)
        )

    def to_dict(self):
        return {
            "time_warp_w": self.time_warp_w,
            "n_freq_masks": self.n_freq_masks,
            "freq_mask_f": self.freq_mask_f,
            "n_time_masks": self.n_time_masks,
            "time_mask_t": self.time_mask_t,
            "mask_value": self.mask_value,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def spec_augment(mel: MelSpectrogram, policy: SpecAugmentPolicy, rng) -> MelSpectrogram:
    """Time-warp then mask frequency bands and time stretches.

    Mask widths draw uniformly from [0, param]; start positions keep each
    mask inside the matrix, and widths larger than the axis are clipped.
    An all-zero policy returns the input bit for bit. A fixed Generator
    seed fixes the output exactly.
    """
    m = np.array(mel.frames, dtype=np.float64)
    if m.size == 0:
        raise ArgumentError("mel spectrogram is empty")
    if policy.is_noop():
        return MelSpectrogram(m, mel.n_mels, mel.params, mel.log_domain)

    n_t, n_f = m.shape
    w = policy.time_warp_w
    if w > 0 and n_t > 2 * w + 1:
        center = int(rng.integers(w, n_t - w))
        shift = int(rng.integers(-w, w + 1))
        if shift != 0:
            anchor = min(max(center + shift, 1), n_t - 2)
            src = np.interp(np.arange(n_t), [0, anchor, n_t - 1], [0, center, n_t - 1])
            lo = np.floor(src).astype(int)
            hi = np.minimum(lo + 1, n_t - 1)
            frac = (src - lo)[:, None]
            m = (1.0 - frac) * m[lo] + frac * m[hi]

    fill = 0.0 if policy.mask_value == "zero" else float(m.mean())

    for _ in range(policy.n_freq_masks):
        f = int(rng.integers(0, policy.freq_mask_f + 1))
        f = min(f, n_f)
        f0 = int(rng.integers(0, n_f - f + 1))
        m[:, f0 : f0 + f] = fill

    for _ in range(policy.n_time_masks):
        t = int(rng.integers(0, policy.time_mask_t + 1))
        t = min(t, n_t)
        t0 = int(rng.integers(0, n_t - t + 1))
        m[t0 : t0 + t, :] = fill

    return MelSpectrogram(m, mel.n_mels, mel.params, mel.log_domain)


# ---------------------------------------------------------------------------
# Manifest-wide recipes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AugmentRecipe:
    """Declarative description of which strategies to run over a manifest.

    Speed, pitch, and codec variants are rendered to disk; noise mixing
    and spectrogram masking are marked in the output entries' extras for
    on-the-fly application at training time.
    """

    speed_factors: tuple = ()
    pitch_range_cents: tuple | None = None
    snr_range_db: tuple | None = None
    codec_bitrates_kbps: tuple = ()
    specaugment: SpecAugmentPolicy | None = None
    rng_seed: int = 0
    noise_paths: tuple = ()
    preserve_pitch: bool = True

    def __post_init__(self):
        object.__setattr__(self, "speed_factors", tuple(float(f) for f in self.speed_factors))
        object.__setattr__(
            self, "codec_bitrates_kbps", tuple(float(b) for b in self.codec_bitrates_kbps)
        )
        object.__setattr__(self, "noise_paths", tuple(str(p) for p in self.noise_paths))
        if any(f <= 0 for f in self.speed_factors):
            raise ArgumentError("speed factors must be positive")
        if any(b <= 0 for b in self.codec_bitrates_kbps):
            raise ArgumentError("codec bitrates must be positive")
        for name in ("pitch_range_cents", "snr_range_db"):
            rng_pair = getattr(self, name)
            if rng_pair is not None:
                lo, hi = float(rng_pair[0]), float(rng_pair[1])
                if lo > hi:
                    raise ArgumentError(f"{name} low bound exceeds high bound")
                object.__setattr__(self, name, (lo, hi))
        if self.rng_seed < 0:
            raise ArgumentError("rng_seed must be non-negative")

    def to_dict(self):
        d = {
            "speed_factors": list(self.speed_factors),
            "codec_bitrates_kbps": list(self.codec_bitrates_kbps),
            "rng_seed": self.rng_seed,
            "preserve_pitch": self.preserve_pitch,
        }
        if self.pitch_range_cents is not None:
            d["pitch_range_cents"] = list(self.pitch_range_cents)
        if self.snr_range_db is not None:
            d["snr_range_db"] = list(self.snr_range_db)
        if self.noise_paths:
            d["noise_paths"] = list(self.noise_paths)
        if self.specaugment is not None:
            d["specaugment"] = self.specaugment.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "specaugment" in d and d["specaugment"] is not None:
            d["specaugment"] = SpecAugmentPolicy.from_dict(d["specaugment"])
        for key in ("pitch_range_cents", "snr_range_db"):
            if key in d and d[key] is not None:
                d[key] = tuple(d[key])
        return cls(**d)


def _entry_rng(seed: int, utt_id: str, tag: str = ""):
    digest = hashlib.sha256(f"{utt_id}\x00{tag}".encode()).digest()
    return np.random.default_rng(np.random.SeedSequence([seed, int.from_bytes(digest[:8], "big")]))


def _onthefly_extras(recipe: AugmentRecipe) -> dict:
    extras = {}
    if recipe.snr_range_db is not None:
        extras["mix_noise_snr_db"] = list(recipe.snr_range_db)
        if recipe.noise_paths:
            extras["noise_paths"] = list(recipe.noise_paths)
    if recipe.specaugment is not None:
        extras["specaugment"] = recipe.specaugment.to_dict()
    return extras


def apply_recipe(manifest, recipe: AugmentRecipe, out_dir, failures: list | None = None):
    """Materialize a recipe over a manifest.

    Every offline strategy derives its own sibling of each input entry
    (tags like -sp0.9, -pt+12.5, -cd48k), so three speed factors on N
    entries produce 3N outputs. Entries whose audio cannot be processed
    are logged, appended to ``failures`` when a list is given, and
    skipped; the rest of the run continues. With no offline strategies
    the entries pass through unchanged apart from on-the-fly markers.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    markers = _onthefly_extras(recipe)
    has_offline = bool(
        recipe.speed_factors or recipe.pitch_range_cents is not None or recipe.codec_bitrates_kbps
    )

    results = []
    for entry in manifest:
        if not has_offline:
            extras = {**entry.extras, **markers}
            results.append(replace(entry, extras=extras))
            continue
        try:
            audio = read_wav(entry.audio_path)
        except (CascadeKitError, OSError, TypeError) as exc:
            log.warning("skipping %s: %s", entry.utt_id, exc)
            if failures is not None:
                failures.append((entry.utt_id, str(exc)))
            continue

        jobs = [("sp", f"sp{f:g}", f) for f in recipe.speed_factors]
        if recipe.pitch_range_cents is not None:
            lo, hi = recipe.pitch_range_cents
            cents = float(_entry_rng(recipe.rng_seed, entry.utt_id, "pt").uniform(lo, hi))
            jobs.append(("pt", f"pt{cents:+.1f}", cents))
        jobs.extend(("cd", f"cd{b:g}k", b) for b in recipe.codec_bitrates_kbps)

        for kind, tag, value in jobs:
            try:
                if kind == "sp":
                    derived = speed_perturb(audio, value, recipe.preserve_pitch)
                elif kind == "pt":
                    derived = pitch_shift(audio, value)
                else:
                    derived = codec_simulate(audio, value)
                new_id = f"{entry.utt_id}-{tag}"
                path = out_dir / f"{new_id}.wav"
                write_wav(derived, path)
            except (CascadeKitError, OSError) as exc:
                log.warning("augmentation %s failed for %s: %s", tag, entry.utt_id, exc)
                if failures is not None:
                    failures.append((entry.utt_id, f"{tag}: {exc}"))
                continue
            extras = {**entry.extras, **markers, "origin_utt": entry.utt_id, "augment": tag}
            results.append(replace(entry, utt_id=new_id, audio_path=str(path), extras=extras))
    return results
