"""The cascaded speech-to-speech run: recognize, fuse, clean, translate, synthesize.

Utterances are independent units of work; a bounded thread pool fans them
out and results always come back in manifest order, so worker count never
changes the output.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adapters import END_TOKEN, resolve_adapter
from .audio import read_wav, resample, write_wav
from .enhance import WienerConfig, wiener_enhance
from .errors import AdapterError, ArgumentError, CascadeKitError, ConfigurationError
from .fusion import Hypothesis, VoteConfig, rover
from .manifest import ManifestEntry
from .textnorm import FillerLexicon, default_lexicon, remove_fillers, to_asr_format

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TokenDistribution:
    """Next-token probabilities; non-negative, summing to one."""

    probabilities: dict

    def __post_init__(self):
        probs = {str(k): float(v) for k, v in dict(self.probabilities).items()}
        if not probs:
            raise ArgumentError("distribution has no tokens")
        if any(v < 0.0 or not np.isfinite(v) for v in probs.values()):
            raise ArgumentError("probabilities must be finite and non-negative")
        total = sum(probs.values())
        if abs(total - 1.0) > 1e-9:
            raise ArgumentError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "probabilities", probs)

    def argmax(self) -> str:
        # highest probability wins; lexicographically first token on ties
        return min(self.probabilities.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def ensemble_distributions(dists, log_space: bool = False) -> TokenDistribution:
    """Combine next-token distributions from several models.

    Default is the arithmetic mean over the union of supports (absent
    tokens count as probability zero), which stays on the simplex by
    construction. log_space=True takes the geometric mean instead and
    renormalizes.
    """
    dists = [d if isinstance(d, TokenDistribution) else TokenDistribution(d) for d in dists]
    if not dists:
        raise ArgumentError("need at least one distribution")
    vocab = sorted({tok for d in dists for tok in d.probabilities})
    k = len(dists)
    if not log_space:
        merged = {tok: sum(d.probabilities.get(tok, 0.0) for d in dists) / k for tok in vocab}
        return TokenDistribution(merged)
    geo = {}
    for tok in vocab:
        vals = [d.probabilities.get(tok, 0.0) for d in dists]
        geo[tok] = 0.0 if any(v == 0.0 for v in vals) else float(np.exp(np.mean(np.log(vals))))
    total = sum(geo.values())
    if total <= 0.0:
        raise ArgumentError("geometric mean vanished on every token; supports are disjoint")
    return TokenDistribution({tok: v / total for tok, v in geo.items()})


def kfold_split(items, k: int, seed: int):
    """Seeded shuffle then round-robin deal into k disjoint folds.

    Fold sizes differ by at most one; the same (items, k, seed) always
    yields the same folds.
    """
    items = list(items)
    if k < 2:
        raise ArgumentError(f"k must be at least 2, got {k}")
    if k > len(items):
        raise ArgumentError(f"cannot split {len(items)} items into {k} folds")
    order = np.random.default_rng(seed).permutation(len(items))
    folds = [[] for _ in range(k)]
    for pos, idx in enumerate(order):
        folds[pos % k].append(items[int(idx)])
    return folds


def back_translation_pair(mono_target, reverse_mt, failures: list | None = None):
    """Synthesize sources for target-language sentences via a reverse model.

    Output entries carry synthetic=true in extras so real and synthetic
    pairs stay distinguishable downstream. Sentences whose translation
    fails are skipped and counted.
    """
    reverse_mt = resolve_adapter(reverse_mt)
    out = []
    n_failed = 0
    for i, target in enumerate(mono_target):
        utt_id = f"bt-{i:06d}"
        try:
            source = reverse_mt.translate(target, utt_id)
        except AdapterError as exc:
            log.warning("back-translation failed for %s: %s", utt_id, exc)
            if failures is not None:
                failures.append((utt_id, str(exc)))
            n_failed += 1
            continue
        out.append(
            ManifestEntry(
                utt_id=utt_id,
                source_text=source,
                target_text=target,
                extras={"synthetic": True},
            )
        )
    if n_failed:
        log.warning("back-translation skipped %d of %d sentences", n_failed, len(list(mono_target)))
    return out


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a cascade run needs; adapter fields accept either JSON
    specs (dicts) or live adapter objects."""

    asr_systems: tuple
    fusion: VoteConfig = field(default_factory=VoteConfig)
    filler_lexicon: object = None
    mt: object = None
    mt_ensemble: tuple | None = None
    tts: object = None
    enhance_tts_refs: bool = False
    output_sample_rate: int = 16000
    normalize_asr: bool = True
    ensemble_log_space: bool = False
    max_decode_len: int = 128

    def __post_init__(self):
        object.__setattr__(self, "asr_systems", tuple(self.asr_systems))
        if not self.asr_systems:
            raise ConfigurationError("need at least one ASR system")
        if self.mt_ensemble is not None:
            object.__setattr__(self, "mt_ensemble", tuple(self.mt_ensemble))
        if self.output_sample_rate <= 0:
            raise ConfigurationError("output_sample_rate must be positive")
        if self.max_decode_len < 1:
            raise ConfigurationError("max_decode_len must be at least 1")

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        if "fusion" in d and isinstance(d["fusion"], dict):
            d["fusion"] = VoteConfig(**d["fusion"])
        return cls(**d)


@dataclass(frozen=True)
class PipelineResult:
    """Every intermediate of one utterance's trip through the cascade."""

    utt_id: str
    nbest: tuple = ()
    fused_text: str = ""
    post_text: str = ""
    translation: str | None = None
    audio_path: str | None = None
    failed_stage: str | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.failed_stage is None

    def to_dict(self) -> dict:
        d = {
            "utt_id": self.utt_id,
            "nbest": list(self.nbest),
            "fused_text": self.fused_text,
            "post_text": self.post_text,
        }
        if self.translation is not None:
            d["translation"] = self.translation
        if self.audio_path is not None:
            d["audio_path"] = self.audio_path
        if self.failed_stage is not None:
            d["failed_stage"] = self.failed_stage
            d["error"] = self.error
        return d


def _greedy_decode(models, source: str, config: PipelineConfig) -> str:
    tokens = []
    for _ in range(config.max_decode_len):
        dists = [TokenDistribution(dict(m.next_distribution(source, tuple(tokens)))) for m in models]
        merged = ensemble_distributions(dists, log_space=config.ensemble_log_space)
        tok = merged.argmax()
        if tok == END_TOKEN:
            break
        tokens.append(tok)
    return " ".join(tokens)


def _resolve_lexicon(spec) -> FillerLexicon:
    if spec is None:
        return default_lexicon()
    if isinstance(spec, FillerLexicon):
        return spec
    return FillerLexicon.from_file(spec)


def run_pipeline(manifest, config: PipelineConfig, workers: int = 1, out_dir=None):
    """Run the full cascade over a manifest.

    Per entry: every recognizer transcribes, the transcripts are fused by
    slot voting, fillers are removed, the translator (single model or an
    averaged ensemble under greedy decoding) produces target text, and
    the optional synthesizer renders audio, cloning the voice of the
    entry's own recording (enhanced first when configured). A stage
    failure marks just that entry and the run continues.
    """
    if workers < 1:
        raise ArgumentError("workers must be at least 1")
    asr_adapters = [resolve_adapter(s) for s in config.asr_systems]
    mt_adapter = resolve_adapter(config.mt) if config.mt is not None else None
    ensemble = [resolve_adapter(s) for s in config.mt_ensemble] if config.mt_ensemble else None
    tts_adapter = resolve_adapter(config.tts) if config.tts is not None else None
    lexicon = _resolve_lexicon(config.filler_lexicon)
    if tts_adapter is not None and out_dir is None:
        raise ConfigurationError("an output directory is required when synthesis is enabled")
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

    def process(entry: ManifestEntry) -> PipelineResult:
        stage = "input"
        nbest = ()
        fused = post = ""
        translation = None
        audio_path = None
        try:
            if entry.audio_path is None:
                raise ArgumentError("entry has no audio to recognize")
            audio = read_wav(entry.audio_path)

            stage = "asr"
            raw = [a.transcribe(audio, entry.utt_id) for a in asr_adapters]
            nbest = tuple(to_asr_format(t).text for t in raw) if config.normalize_asr else tuple(raw)

            stage = "fusion"
            hyps = [Hypothesis.from_text(t, system_id=i) for i, t in enumerate(nbest)]
            fused = rover(hyps, config.fusion).text

            stage = "postprocess"
            post = remove_fillers(fused, lexicon)

            if ensemble:
                stage = "mt"
                translation = _greedy_decode(ensemble, post, config)
            elif mt_adapter is not None:
                stage = "mt"
                translation = mt_adapter.translate(post, entry.utt_id)

            if tts_adapter is not None:
                stage = "tts"
                ref = audio
                if config.enhance_tts_refs:
                    ref = wiener_enhance(ref, WienerConfig())
                synth = tts_adapter.synthesize(translation or "", entry.utt_id, speaker_ref=ref)
                if synth.sample_rate != config.output_sample_rate:
                    synth = resample(synth, config.output_sample_rate)
                path = out_dir / f"{entry.utt_id}.wav"
                write_wav(synth, path)
                audio_path = str(path)
        except (CascadeKitError, OSError) as exc:
            log.warning("%s failed at %s: %s", entry.utt_id, stage, exc)
            return PipelineResult(
                entry.utt_id, nbest, fused, post, translation, audio_path, stage, str(exc)
            )
        return PipelineResult(entry.utt_id, nbest, fused, post, translation, audio_path)

    entries = list(manifest)
    if workers == 1:
        return [process(e) for e in entries]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(process, entries))
