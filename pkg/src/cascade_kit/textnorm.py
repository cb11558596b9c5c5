"""Text normalization: filler removal, ASR-transcript formatting, tokenizers.

These are deliberately dumb rule systems. Filler removal operates on
whole whitespace tokens only, so it is meant to run on unpunctuated ASR
output (or after :func:`to_asr_format`).
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field

from .errors import ArgumentError

_ONES = (
    "zero one two three four five six seven eight nine ten eleven twelve "
    "thirteen fourteen fifteen sixteen seventeen eighteen nineteen"
).split()
_TENS = ("", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety")

# keep apostrophes only when both neighbours are word characters
_PUNCT_RE = re.compile(r"[^\w\s']|_")
_APOS_EDGE_RE = re.compile(r"(?<!\w)'|'(?!\w)")


def _int_to_words(n: int) -> str:
    if n < 20:
        return _ONES[n]
    if n < 100:
        tens, rem = divmod(n, 10)
        return _TENS[tens] + (" " + _ONES[rem] if rem else "")
    if n < 1000:
        hundreds, rem = divmod(n, 100)
        head = _ONES[hundreds] + " hundred"
        return head + (" " + _int_to_words(rem) if rem else "")
    thousands, rem = divmod(n, 1000)
    head = _ONES[thousands] + " thousand"
    return head + (" " + _int_to_words(rem) if rem else "")


@dataclass(frozen=True)
class FillerLexicon:
    """Case-insensitive filler phrases, each a tuple of whole tokens.

    Longest match wins when entries overlap. Entries in ``initial_only``
    are removed only when they start the token stream.
    """

    entries: tuple = ()
    initial_only: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        norm = []
        for entry in self.entries:
            toks = tuple(t.lower() for t in entry)
            if not toks or any(not t for t in toks):
                raise ArgumentError(f"filler entries must be non-empty token sequences, got {entry!r}")
            norm.append(toks)
        object.__setattr__(self, "entries", tuple(norm))
        object.__setattr__(
            self, "initial_only", frozenset(tuple(t.lower() for t in e) for e in self.initial_only)
        )

    @classmethod
    def from_strings(cls, phrases, initial_only=()):
        return cls(
            tuple(tuple(p.split()) for p in phrases),
            frozenset(tuple(p.split()) for p in initial_only),
        )

    @classmethod
    def from_file(cls, path):
        """One phrase per line; a leading ``^`` restricts it to utterance-initial position."""
        phrases, initial = [], []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if line.startswith("^"):
                    phrase = line[1:].strip()
                    initial.append(phrase)
                    phrases.append(phrase)
                else:
                    phrases.append(line)
        return cls.from_strings(phrases, initial)


def default_lexicon() -> FillerLexicon:
    """Built-in hesitation lexicon; "like" only in utterance-initial position."""
    return FillerLexicon.from_strings(
        ["uh", "um", "you know", "i mean", "like"], initial_only=["like"]
    )


def remove_fillers(text: str, lexicon: FillerLexicon | None = None) -> str:
    """Delete filler phrases from a transcript.

    Matching is whole-token, case-insensitive, longest-match-first, and
    repeated to a fixpoint so stuttered fillers ("you you know know")
    disappear completely. Surviving tokens keep their original spelling;
    whitespace is re-collapsed to single spaces.
    """
    if lexicon is None:
        lexicon = default_lexicon()
    by_len = sorted(lexicon.entries, key=len, reverse=True)
    tokens = text.split()
    changed = True
    while changed:
        changed = False
        out = []
        lowered = [t.lower() for t in tokens]
        i = 0
        while i < len(tokens):
            hit = None
            for entry in by_len:
                if entry in lexicon.initial_only and i != 0:
                    continue
                if tuple(lowered[i : i + len(entry)]) == entry:
                    hit = entry
                    break
            if hit:
                i += len(hit)
                changed = True
            else:
                out.append(tokens[i])
                i += 1
        tokens = out
    return " ".join(tokens)


@dataclass(frozen=True)
class NormalizedText:
    """A normalized token string plus a coarse script profile."""

    text: str
    script_profile: str

    def __post_init__(self):
        if self.script_profile not in ("latin_words", "cjk_chars", "mixed"):
            raise ArgumentError(f"unknown script profile {self.script_profile!r}")
        if self.script_profile == "latin_words":
            if self.text != " ".join(self.text.split()) or self.text != self.text.lower():
                raise ArgumentError("latin_words text must be lowercase and single-spaced")


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return (
        0x4E00 <= cp <= 0x9FFF
        or 0x3400 <= cp <= 0x4DBF
        or 0x3040 <= cp <= 0x30FF
        or 0xF900 <= cp <= 0xFAFF
    )


def _script_profile(text: str) -> str:
    has_cjk = any(_is_cjk(c) for c in text)
    has_other = any(not _is_cjk(c) and not c.isspace() for c in text)
    if has_cjk and has_other:
        return "mixed"
    if has_cjk:
        return "cjk_chars"
    return "latin_words"


def to_asr_format(text: str, numbers: str = "spell") -> NormalizedText:
    """Rewrite written text the way an ASR system would transcribe it.

    Lowercases, strips punctuation except intra-word apostrophes, expands
    standalone integers 0..9999 into English number words, and collapses
    whitespace. ``numbers`` selects what happens to standalone digit
    tokens: "spell" (default), "keep", or "drop". Idempotent for every
    mode. Integers above 9999 always pass through unchanged.
    """
    if numbers not in ("spell", "keep", "drop"):
        raise ArgumentError(f"numbers mode must be spell, keep, or drop; got {numbers!r}")
    s = _PUNCT_RE.sub(" ", text.lower())
    s = _APOS_EDGE_RE.sub(" ", s)
    out = []
    for tok in s.split():
        if tok.isascii() and tok.isdigit() and int(tok) <= 9999:
            if numbers == "spell":
                out.append(_int_to_words(int(tok)))
            elif numbers == "keep":
                out.append(tok)
            # drop: skip the token
        else:
            out.append(tok)
    joined = " ".join(out)
    return NormalizedText(joined, _script_profile(joined))


def tokenize(text: str, mode: str = "words"):
    """Split text for scoring: "words" by whitespace, "chars" one token per
    non-whitespace character (what character error rates want for CJK)."""
    if mode == "words":
        return text.split()
    if mode == "chars":
        return [c for c in text if not c.isspace()]
    raise ArgumentError(f"tokenize mode must be words or chars, got {mode!r}")


def strip_punctuation(text: str) -> str:
    """Remove Unicode punctuation (ASCII and CJK alike). Never case-folds,
    so it is safe on Chinese references before character scoring."""
    return "".join(c for c in text if not unicodedata.category(c).startswith("P"))
