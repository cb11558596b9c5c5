"""Voice activity detection and noise harvesting."""

import numpy as np
import pytest

from cascade_kit import (
    ArgumentError,
    AudioBuffer,
    Segment,
    VadConfig,
    detect,
    extract_noise_set,
    frame_decisions,
)

from .conftest import make_noise, make_tone


def concat(*buffers):
    return AudioBuffer(
        np.concatenate([b.samples for b in buffers]), buffers[0].sample_rate
    )


class TestSegment:
    def test_validation(self):
        Segment(0.0, 1.0, "vocal")
        with pytest.raises(Exception):
            Segment(1.0, 1.0, "vocal")
        with pytest.raises(Exception):
            Segment(0.0, 1.0, "music")


class TestFrameDecisions:
    def test_all_zero_is_non_speech(self):
        buf = AudioBuffer(np.zeros(32000, dtype=np.float32), 16000)
        decisions = frame_decisions(buf, VadConfig())
        assert not any(decisions)

    def test_tone_after_noise_is_speech(self):
        buf = concat(make_noise(1.0, rms=0.01, seed=0), make_tone(800.0, 1.0, amplitude=0.5))
        decisions = frame_decisions(buf, VadConfig())
        # second-half frames overwhelmingly flagged
        half = len(decisions) // 2
        assert np.mean(decisions[half + 2 :]) > 0.9

    def test_too_short_raises(self):
        buf = AudioBuffer(np.zeros(500, dtype=np.float32), 16000)
        with pytest.raises(ArgumentError):
            frame_decisions(buf, VadConfig())

    def test_threshold_monotonicity(self):
        buf = concat(make_noise(1.0, rms=0.02, seed=1), make_tone(600.0, 1.0, amplitude=0.2))
        prev_total = None
        for thr in (-0.5, 0.0, 0.15, 0.5, 2.0):
            cfg = VadConfig(lrt_threshold=thr, hangover_frames=0)
            total = sum(frame_decisions(buf, cfg))
            if prev_total is not None:
                assert total <= prev_total
            prev_total = total

    def test_scale_covariance(self):
        buf = concat(make_noise(1.0, rms=0.01, seed=2), make_tone(700.0, 1.0, amplitude=0.3))
        base = frame_decisions(buf, VadConfig())
        for alpha in (0.25, 4.0):
            scaled = AudioBuffer(buf.samples * np.float32(alpha), 16000)
            assert np.array_equal(frame_decisions(scaled, VadConfig()), base)


class TestDetect:
    def test_all_zero_single_non_vocal(self):
        buf = AudioBuffer(np.zeros(32000, dtype=np.float32), 16000)
        segs = detect(buf, VadConfig())
        assert len(segs) == 1
        assert segs[0].label == "non_vocal"
        assert segs[0].start == 0.0
        assert segs[0].end == pytest.approx(2.0)

    def test_constant_tone_single_vocal(self):
        buf = make_tone(440.0, 2.0, amplitude=0.8)
        segs = detect(buf, VadConfig())
        assert len(segs) == 1
        assert segs[0].label == "vocal"

    def test_boundary_at_onset(self):
        cfg = VadConfig()
        shift = cfg.frame_params.frame_shift
        buf = concat(make_noise(1.0, rms=0.01, seed=3), make_tone(1000.0, 1.0, amplitude=0.5))
        segs = detect(buf, cfg)
        onsets = [s.start for s in segs if s.label == "vocal"]
        assert onsets, "no vocal segment found"
        assert abs(onsets[0] - 1.0) <= 2 * shift + 1e-9

    def test_segments_tile_input(self):
        buf = concat(
            make_noise(0.7, rms=0.02, seed=4),
            make_tone(900.0, 0.8, amplitude=0.4),
            make_noise(0.6, rms=0.02, seed=5),
        )
        segs = detect(buf, VadConfig(hangover_frames=0))
        assert segs[0].start == 0.0
        assert segs[-1].end == pytest.approx(buf.duration_seconds)
        for a, b in zip(segs, segs[1:]):
            assert a.end == pytest.approx(b.start)
            assert a.label != b.label  # merged runs alternate

    def test_hangover_extends_trailing_edge(self):
        buf = concat(
            make_noise(1.0, rms=0.01, seed=6),
            make_tone(800.0, 1.0, amplitude=0.5),
            make_noise(1.0, rms=0.01, seed=7),
        )
        cfg0 = VadConfig(hangover_frames=0)
        cfg8 = VadConfig(hangover_frames=8)
        end0 = max(s.end for s in detect(buf, cfg0) if s.label == "vocal")
        end8 = max(s.end for s in detect(buf, cfg8) if s.label == "vocal")
        assert end8 >= end0


class TestExtractNoiseSet:
    def test_all_silence_empty(self):
        buf = AudioBuffer(np.zeros(32000, dtype=np.float32), 16000)
        assert extract_noise_set(buf, VadConfig(), -40.0, 0.5) == []

    def test_constructed_gap_harvested(self):
        # constant -20 dB ambient noise with tones on top; the gap is ambient only
        sr = 16000
        ambient = make_noise(4.5, rms=0.1, seed=8).samples.copy()
        tone1 = make_tone(700.0, 1.0, amplitude=0.7).samples
        tone2 = make_tone(900.0, 1.0, amplitude=0.7).samples
        ambient[int(0.5 * sr) : int(1.5 * sr)] += tone1
        ambient[int(3.5 * sr) :] += tone2
        buf = AudioBuffer(ambient, sr)
        cfg = VadConfig(hangover_frames=0)
        cuts = extract_noise_set(buf, cfg, -30.0, 0.5)
        # the 2 s gap at 1.5..3.5 s qualifies; the 0.5 s lead-in does not (too short)
        assert len(cuts) == 1
        # the harvested cut is a sample-exact slice of the input near the gap
        cut = cuts[0]
        found = False
        n = len(cut)
        gap_start = int(1.5 * sr)
        for offset in range(max(0, gap_start - 4 * 160), gap_start + 4 * 160):
            if offset + n <= len(buf) and np.array_equal(
                cut.samples, buf.samples[offset : offset + n]
            ):
                found = True
                break
        assert found

    def test_quiet_gap_below_threshold_skipped(self):
        buf = concat(
            make_noise(0.5, rms=0.002, seed=10),
            make_tone(700.0, 1.0, amplitude=0.5),
            make_noise(1.0, rms=0.0005, seed=11),  # about -66 dB
            make_tone(900.0, 1.0, amplitude=0.5),
        )
        cfg = VadConfig(hangover_frames=0)
        loud_only = extract_noise_set(buf, cfg, -50.0, 0.5)
        assert loud_only == []

    def test_min_len_filter(self):
        # ambient noise throughout; one 0.3 s gap between tones
        sr = 16000
        ambient = make_noise(2.7, rms=0.05, seed=12).samples.copy()
        ambient[int(0.4 * sr) : int(1.4 * sr)] += make_tone(700.0, 1.0, amplitude=0.7).samples
        ambient[int(1.7 * sr) :] += make_tone(900.0, 1.0, amplitude=0.7).samples
        buf = AudioBuffer(ambient, sr)
        cfg = VadConfig(hangover_frames=0)
        long_only = extract_noise_set(buf, cfg, -40.0, 0.5)
        assert long_only == []  # the gap is shorter than min_len, lead-in too
        shorter_ok = extract_noise_set(buf, cfg, -40.0, 0.1)
        assert len(shorter_ok) >= 1

    def test_neg_inf_threshold_keeps_all(self):
        buf = concat(
            make_noise(1.0, rms=0.01, seed=14),
            make_tone(700.0, 1.0, amplitude=0.5),
        )
        cfg = VadConfig(hangover_frames=0)
        cuts = extract_noise_set(buf, cfg, float("-inf"), 0.5)
        segs = [s for s in detect(buf, cfg) if s.label == "non_vocal" and s.duration >= 0.5]
        assert len(cuts) == len(segs)
