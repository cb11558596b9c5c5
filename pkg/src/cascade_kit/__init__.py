"""Deterministic building blocks for cascaded speech-to-speech translation.

The package covers the offline legs of a cascade: audio I/O and
spectral analysis, voice activity detection, stationary-noise
suppression, data augmentation, transcript normalization, multi-system
hypothesis fusion, translation/transcription metrics, and a pipeline
orchestrator that wires pluggable ASR/MT/TTS adapters together.
"""

from . import adapters
from .audio import (
    AudioBuffer,
    FrameParams,
    MelSpectrogram,
    Spectrogram,
    istft,
    mel_filterbank,
    mel_spectrogram,
    read_wav,
    resample,
    rms_db,
    stft,
    write_wav,
)
from .augment import (
    AugmentRecipe,
    IdentityCodec,
    SpecAugmentPolicy,
    SubbandQuantizerCodec,
    apply_recipe,
    codec_simulate,
    mix_noise,
    pitch_shift,
    spec_augment,
    speed_perturb,
)
from .enhance import WienerConfig, wiener_enhance
from .errors import (
    AdapterError,
    ArgumentError,
    CascadeKitError,
    CodecError,
    ConfigurationError,
    FormatError,
    UnsupportedEncodingError,
)
from .fusion import (
    NULL,
    Arc,
    Hypothesis,
    VoteConfig,
    WordTransitionNetwork,
    align_into_wtn,
    rover,
    vote,
)
from .manifest import ManifestEntry, read_manifest, write_manifest
from .metrics import AlignmentStats, BleuScore, align_tokens, asr_bleu, cer, corpus_bleu, wer
from .pipeline import (
    PipelineConfig,
    PipelineResult,
    TokenDistribution,
    back_translation_pair,
    ensemble_distributions,
    kfold_split,
    run_pipeline,
)
from .textnorm import (
    FillerLexicon,
    NormalizedText,
    default_lexicon,
    remove_fillers,
    strip_punctuation,
    to_asr_format,
    tokenize,
)
from .vad import Segment, VadConfig, detect, extract_noise_set, frame_decisions

__version__ = "0.1.0"

__all__ = [
    "AdapterError",
    "AlignmentStats",
    "Arc",
    "ArgumentError",
    "AudioBuffer",
    "AugmentRecipe",
    "BleuScore",
    "CascadeKitError",
    "CodecError",
    "ConfigurationError",
    "FillerLexicon",
    "FormatError",
    "FrameParams",
    "Hypothesis",
    "IdentityCodec",
    "ManifestEntry",
    "MelSpectrogram",
    "NULL",
    "NormalizedText",
    "PipelineConfig",
    "PipelineResult",
    "Segment",
    "SpecAugmentPolicy",
    "Spectrogram",
    "SubbandQuantizerCodec",
    "TokenDistribution",
    "UnsupportedEncodingError",
    "VadConfig",
    "VoteConfig",
    "WienerConfig",
    "WordTransitionNetwork",
    "adapters",
    "align_into_wtn",
    "align_tokens",
    "apply_recipe",
    "asr_bleu",
    "back_translation_pair",
    "cer",
    "codec_simulate",
    "corpus_bleu",
    "default_lexicon",
    "detect",
    "ensemble_distributions",
    "extract_noise_set",
    "frame_decisions",
    "istft",
    "kfold_split",
    "mel_filterbank",
    "mel_spectrogram",
    "mix_noise",
    "pitch_shift",
    "read_manifest",
    "read_wav",
    "remove_fillers",
    "resample",
    "rms_db",
    "rover",
    "run_pipeline",
    "spec_augment",
    "speed_perturb",
    "stft",
    "strip_punctuation",
    "to_asr_format",
    "tokenize",
    "vote",
    "wer",
    "wiener_enhance",
    "write_manifest",
    "write_wav",
    "__version__",
]
