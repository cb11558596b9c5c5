"""Recognition and translation scoring: WER, CER, corpus BLEU, ASR-BLEU."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass

from .errors import AdapterError, ArgumentError
from .textnorm import strip_punctuation, to_asr_format, tokenize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlignmentStats:
    """Edit-distance alignment counts against a reference."""

    substitutions: int
    deletions: int
    insertions: int
    correct: int
    ref_len: int

    def __post_init__(self):
        if self.correct + self.substitutions + self.deletions != self.ref_len:
            raise ArgumentError("alignment counts do not cover the reference")

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def align_tokens(ref, hyp) -> AlignmentStats:
    """Minimum-edit alignment with unit costs.

    On equal-cost paths the backtrace prefers correct, then substitution,
    then deletion, then insertion.
    """
    ref = list(ref)
    hyp = list(hyp)
    nr, nh = len(ref), len(hyp)
    d = [list(range(nh + 1))]
    for i in range(1, nr + 1):
        row = [i] + [0] * nh
        prev = d[i - 1]
        ri = ref[i - 1]
        for j in range(1, nh + 1):
            diag = prev[j - 1] + (ri != hyp[j - 1])
            up = prev[j] + 1
            left = row[j - 1] + 1
            row[j] = diag if diag <= up and diag <= left else (up if up <= left else left)
        d.append(row)

    subs = dels = ins = corr = 0
    i, j = nr, nh
    while i > 0 or j > 0:
        cost = d[i][j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and d[i - 1][j - 1] == cost:
            corr += 1
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and d[i - 1][j - 1] + 1 == cost:
            subs += 1
            i -= 1
            j -= 1
        elif i > 0 and d[i - 1][j] + 1 == cost:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return AlignmentStats(subs, dels, ins, corr, nr)


def wer(ref: str, hyp: str, normalize: bool = True) -> float:
    """Word error rate (S+D+I)/ref_len; can exceed 1.0 on insertion-heavy output.

    Both sides run through :func:`to_asr_format` unless ``normalize`` is off.
    """
    if normalize:
        ref = to_asr_format(ref).text
        hyp = to_asr_format(hyp).text
    ref_tokens = tokenize(ref, "words")
    hyp_tokens = tokenize(hyp, "words")
    if not ref_tokens:
        raise ArgumentError("reference is empty after tokenization")
    stats = align_tokens(ref_tokens, hyp_tokens)
    return stats.errors / stats.ref_len


def cer(ref: str, hyp: str, normalize: bool = True) -> float:
    """Character error rate over non-whitespace characters.

    Normalization strips punctuation only; case is never folded, so CJK
    and cased text both score on their actual characters.
    """
    if normalize:
        ref = strip_punctuation(ref)
        hyp = strip_punctuation(hyp)
    ref_tokens = tokenize(ref, "chars")
    hyp_tokens = tokenize(hyp, "chars")
    if not ref_tokens:
        raise ArgumentError("reference is empty after tokenization")
    stats = align_tokens(ref_tokens, hyp_tokens)
    return stats.errors / stats.ref_len


@dataclass(frozen=True)
class BleuScore:
    score: float
    precisions: tuple
    brevity_penalty: float
    hyp_len: int
    ref_len: int

    def __post_init__(self):
        if not 0.0 <= self.score <= 100.0:
            raise ArgumentError(f"BLEU score out of range: {self.score}")
        if not 0.0 <= self.brevity_penalty <= 1.0:
            raise ArgumentError(f"brevity penalty out of range: {self.brevity_penalty}")


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(refs, hyps, max_n: int = 4, smoothing_k: float = 0.0) -> BleuScore:
    """Corpus-level BLEU with clipped n-gram precision and brevity penalty.

    One reference per hypothesis; counts are pooled over the corpus before
    any ratio is taken. Orders whose hypothesis n-gram count is zero over
    the whole corpus (sentences shorter than n) are excluded from the
    geometric mean, which keeps identity corpora at exactly 100. Without
    smoothing, any included order with zero matches sends the score to 0;
    ``smoothing_k`` adds k to numerator and denominator instead.
    """
    refs = [list(r) for r in refs]
    hyps = [list(h) for h in hyps]
    if len(refs) != len(hyps):
        raise ArgumentError(f"got {len(refs)} references but {len(hyps)} hypotheses")
    if not refs:
        raise ArgumentError("empty corpus")
    if max_n < 1:
        raise ArgumentError("max_n must be at least 1")
    if smoothing_k < 0:
        raise ArgumentError("smoothing_k must be non-negative")

    ref_len = sum(len(r) for r in refs)
    hyp_len = sum(len(h) for h in hyps)

    matches = [0] * max_n
    totals = [0] * max_n
    for r, h in zip(refs, hyps):
        for n in range(1, max_n + 1):
            hgrams = _ngrams(h, n)
            if not hgrams:
                continue
            rgrams = _ngrams(r, n)
            totals[n - 1] += sum(hgrams.values())
            matches[n - 1] += sum(min(c, rgrams[g]) for g, c in hgrams.items())

    precisions = []
    log_sum = 0.0
    included = 0
    zero_hit = False
    for n in range(max_n):
        if totals[n] == 0:
            precisions.append(0.0)
            continue
        p = (matches[n] + smoothing_k) / (totals[n] + smoothing_k)
        precisions.append(p)
        included += 1
        if p == 0.0:
            zero_hit = True
        else:
            log_sum += math.log(p)

    if hyp_len == 0:
        bp = 0.0
    elif hyp_len >= ref_len:
        bp = 1.0
    else:
        bp = math.exp(1.0 - ref_len / hyp_len)

    if included == 0 or zero_hit:
        score = 0.0
    else:
        score = bp * math.exp(log_sum / included) * 100.0
    return BleuScore(score, tuple(precisions), bp, hyp_len, ref_len)


def asr_bleu(asr, audio_outputs, refs, failures: list | None = None) -> BleuScore:
    """Transcribe synthesized audio and score it against text references.

    Hypotheses are character-tokenized (the convention for Chinese
    targets); pass references pre-tokenized the same way. A failing
    transcription becomes an empty hypothesis and the run continues;
    failures are logged and appended to ``failures`` when a list is given.
    """
    audio_outputs = list(audio_outputs)
    refs = [list(r) for r in refs]
    if len(audio_outputs) != len(refs):
        raise ArgumentError(f"got {len(audio_outputs)} audio outputs but {len(refs)} references")
    hyps = []
    n_failed = 0
    for i, audio in enumerate(audio_outputs):
        utt = f"utt-{i:06d}"
        try:
            text = asr.transcribe(audio, utt)
        except AdapterError as exc:
            log.warning("transcription failed for %s: %s", utt, exc)
            if failures is not None:
                failures.append((utt, str(exc)))
            n_failed += 1
            text = ""
        hyps.append(tokenize(text, "chars"))
    if n_failed:
        log.warning("%d of %d transcriptions failed; scored as empty", n_failed, len(refs))
    return corpus_bleu(refs, hyps)
