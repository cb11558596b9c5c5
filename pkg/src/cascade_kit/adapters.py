"""Model adapters: the seam where neural systems would plug in.

In-process mocks cover testing and offline work; ExternalCommandAdapter
speaks JSON-lines over a child process' standard streams for anything
real. Audio always crosses the process boundary as a WAV file path.
"""

from __future__ import annotations

import json
import subprocess
import tempfile
import threading
from pathlib import Path
from typing import Mapping, Protocol, Sequence, runtime_checkable

import numpy as np

from .audio import AudioBuffer, read_wav, resample, write_wav
from .errors import AdapterError, ConfigurationError

END_TOKEN = "</s>"


@runtime_checkable
class AsrAdapter(Protocol):
    def transcribe(self, audio: AudioBuffer, utt_id: str = "") -> str: ...


@runtime_checkable
class MtAdapter(Protocol):
    def translate(self, text: str, utt_id: str = "") -> str: ...


@runtime_checkable
class TtsAdapter(Protocol):
    def synthesize(
        self, text: str, utt_id: str = "", speaker_ref: AudioBuffer | None = None
    ) -> AudioBuffer: ...


@runtime_checkable
class DistributionMt(Protocol):
    """Exposes next-token distributions so several models can be averaged."""

    def next_distribution(self, source: str, prefix: Sequence[str]) -> Mapping[str, float]: ...


# ---------------------------------------------------------------------------
# In-process mocks
# ---------------------------------------------------------------------------


class TableAsr:
    """Transcription by utterance-id lookup."""

    def __init__(self, table: Mapping[str, str], default: str | None = None):
        self.table = dict(table)
        self.default = default

    def transcribe(self, audio, utt_id=""):
        if utt_id in self.table:
            return self.table[utt_id]
        if self.default is not None:
            return self.default
        raise AdapterError(f"no transcript for utterance {utt_id!r}")


class IdentityMt:
    def translate(self, text, utt_id=""):
        return text


class TableMt:
    def __init__(self, table: Mapping[str, str], default: str | None = None):
        self.table = dict(table)
        self.default = default

    def translate(self, text, utt_id=""):
        if text in self.table:
            return self.table[text]
        if self.default is not None:
            return self.default
        raise AdapterError(f"no translation for {text!r}")


class TableDistributionMt:
    """Next-token tables keyed by (source, prefix); absent keys end the sentence."""

    def __init__(self, table: Mapping):
        self.table = {(src, tuple(pre)): dict(dist) for (src, pre), dist in table.items()}

    def next_distribution(self, source, prefix):
        return self.table.get((source, tuple(prefix)), {END_TOKEN: 1.0})


_TONE_SECONDS = 0.05
_TONE_BASE_HZ = 500.0
_TONE_STEP_HZ = 25.0
_TONE_RATE = 16000
_DECODE_NFFT = 2048


class ByteToneTts:
    """Audio codec posing as TTS: each UTF-8 byte becomes one 50 ms tone.

    Byte b maps to 500 + 25*b Hz, far enough apart that an FFT peak
    recovers it exactly, which makes lossless text round-trips through
    actual audio possible without any model. Pairs with ByteToneAsr.
    """

    def __init__(self, amplitude: float = 0.3):
        self.amplitude = amplitude

    def synthesize(self, text, utt_id="", speaker_ref=None):
        n = int(_TONE_SECONDS * _TONE_RATE)
        data = text.encode("utf-8")
        if not data:
            return AudioBuffer(np.zeros(n), _TONE_RATE)
        t = np.arange(n) / _TONE_RATE
        chunks = [
            self.amplitude * np.sin(2.0 * np.pi * (_TONE_BASE_HZ + _TONE_STEP_HZ * b) * t)
            for b in data
        ]
        return AudioBuffer(np.concatenate(chunks), _TONE_RATE)


class ByteToneAsr:
    """Inverse of ByteToneTts: reads the tone sequence back into text."""

    def transcribe(self, audio, utt_id=""):
        if audio.sample_rate != _TONE_RATE:
            audio = resample(audio, _TONE_RATE)
        n = int(_TONE_SECONDS * _TONE_RATE)
        x = audio.samples.astype(np.float64)
        data = bytearray()
        for start in range(0, len(x) - n + 1, n):
            chunk = x[start : start + n]
            if float(np.mean(chunk**2)) < 1e-10:
                continue
            spectrum = np.abs(np.fft.rfft(chunk, n=_DECODE_NFFT))
            peak = int(np.argmax(spectrum[1:])) + 1
            freq = peak * _TONE_RATE / _DECODE_NFFT
            b = round((freq - _TONE_BASE_HZ) / _TONE_STEP_HZ)
            if 0 <= b <= 255:
                data.append(b)
        return data.decode("utf-8", errors="replace")


# ---------------------------------------------------------------------------
# External process adapter
# ---------------------------------------------------------------------------


class ExternalCommandAdapter:
    """One child process serving asr/mt/tts requests as JSON lines.

    Request:  {"op": "asr"|"mt"|"tts", "utt": id, "payload": ...}
    Response: {"utt": id, "result": ...} or {"utt": id, "error": msg}

    ASR payloads and TTS results are WAV file paths. Calls are serialized
    with a lock by default; pass serial=False only for children that
    really multiplex on stdin.
    """

    def __init__(self, argv, serial: bool = True, workdir: str | None = None):
        if not argv:
            raise ConfigurationError("external adapter needs a non-empty argv")
        self.argv = list(argv)
        self.workdir = workdir
        self._lock = threading.Lock() if serial else None
        self._proc = None
        self._tmp = None

    def _ensure_process(self):
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                cwd=self.workdir,
                text=True,
                bufsize=1,
            )
            self._tmp = tempfile.TemporaryDirectory(prefix="adapter-")
        return self._proc

    def _reap(self):
        # forget a dead child so the next call spawns a fresh one
        if self._proc is not None:
            try:
                self._proc.kill()
            except OSError:
                pass
            self._proc.wait()
            self._proc = None

    def _call(self, op, utt_id, payload):
        def roundtrip():
            proc = self._ensure_process()
            line = json.dumps({"op": op, "utt": utt_id, "payload": payload}, ensure_ascii=False)
            try:
                proc.stdin.write(line + "\n")
                proc.stdin.flush()
                reply = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                self._reap()
                raise AdapterError(f"adapter process died: {exc}") from exc
            if not reply:
                self._reap()
                raise AdapterError(f"adapter closed its output during {op} for {utt_id!r}")
            try:
                msg = json.loads(reply)
            except json.JSONDecodeError as exc:
                raise AdapterError(f"adapter sent malformed JSON: {reply!r}") from exc
            if msg.get("error") is not None:
                raise AdapterError(f"{op} failed for {utt_id!r}: {msg['error']}")
            if msg.get("utt") != utt_id:
                raise AdapterError(f"adapter answered {msg.get('utt')!r} to request {utt_id!r}")
            return msg.get("result")

        if self._lock is not None:
            with self._lock:
                return roundtrip()
        return roundtrip()

    def transcribe(self, audio, utt_id=""):
        self._ensure_process()
        path = Path(self._tmp.name) / f"{abs(hash((utt_id, id(audio))))}.wav"
        write_wav(audio, path)
        result = self._call("asr", utt_id, str(path))
        return str(result)

    def translate(self, text, utt_id=""):
        return str(self._call("mt", utt_id, text))

    def synthesize(self, text, utt_id="", speaker_ref=None):
        self._ensure_process()
        payload = {"text": text, "speaker_ref": None}
        if speaker_ref is not None:
            ref_path = Path(self._tmp.name) / f"ref-{abs(hash(utt_id))}.wav"
            write_wav(speaker_ref, ref_path)
            payload["speaker_ref"] = str(ref_path)
        result = self._call("tts", utt_id, payload)
        try:
            return read_wav(result)
        except (OSError, TypeError) as exc:
            raise AdapterError(f"tts result path unreadable: {exc}") from exc

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
        if self._tmp is not None:
            self._tmp.cleanup()
            self._tmp = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


# ---------------------------------------------------------------------------
# Spec resolution (for JSON configs)
# ---------------------------------------------------------------------------


def _load_table(spec):
    if "table" in spec:
        return dict(spec["table"])
    if "path" in spec:
        with open(spec["path"], encoding="utf-8") as fh:
            return json.load(fh)
    raise ConfigurationError(f"adapter spec {spec.get('type')!r} needs a 'table' or 'path' key")


def resolve_adapter(spec):
    """Turn a JSON adapter spec into an adapter object.

    Anything that is not a mapping is assumed to already be an adapter
    instance and passes through, so Python callers can hand in objects
    directly.
    """
    if not isinstance(spec, Mapping):
        return spec
    kind = spec.get("type")
    if kind == "table_asr":
        return TableAsr(_load_table(spec), default=spec.get("default"))
    if kind == "table_mt":
        return TableMt(_load_table(spec), default=spec.get("default"))
    if kind == "identity_mt":
        return IdentityMt()
    if kind == "byte_tone_tts":
        return ByteToneTts()
    if kind == "byte_tone_asr":
        return ByteToneAsr()
    if kind == "identity_codec":
        from .augment import IdentityCodec

        return IdentityCodec()
    if kind == "subband_codec":
        from .augment import SubbandQuantizerCodec

        return SubbandQuantizerCodec()
    if kind == "command":
        return ExternalCommandAdapter(spec.get("argv", ()), serial=spec.get("serial", True))
    raise ConfigurationError(f"unknown adapter type {kind!r}")
