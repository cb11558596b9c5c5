"""JSON-lines manifests: one utterance per line, UTF-8, stable key order."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ArgumentError, FormatError

_FIELDS = ("utt_id", "audio_path", "source_text", "target_text", "speaker_id")


@dataclass(frozen=True)
class ManifestEntry:
    """One utterance: where its audio lives and/or what it says."""

    utt_id: str
    audio_path: str | None = None
    source_text: str | None = None
    target_text: str | None = None
    speaker_id: str | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.utt_id or not isinstance(self.utt_id, str):
            raise ArgumentError("utt_id must be a non-empty string")
        if self.audio_path is None and self.source_text is None:
            raise ArgumentError(f"{self.utt_id}: need at least one of audio_path or source_text")
        object.__setattr__(self, "extras", dict(self.extras))

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in _FIELDS if getattr(self, k) is not None}
        if self.extras:
            d["extras"] = self.extras
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestEntry":
        d = dict(d)
        extras = dict(d.pop("extras", {}))
        kwargs = {}
        for k in _FIELDS:
            if k in d:
                kwargs[k] = d.pop(k)
        extras.update(d)  # unknown keys survive the round trip as extras
        return cls(extras=extras, **kwargs)


def read_manifest(path) -> list:
    """Parse a JSON-lines manifest; blank lines are ignored, ids must be unique."""
    entries = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                entry = ManifestEntry.from_dict(json.loads(line))
            except (json.JSONDecodeError, ArgumentError, TypeError) as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            if entry.utt_id in seen:
                raise FormatError(f"{path}:{lineno}: duplicate utt_id {entry.utt_id!r}")
            seen.add(entry.utt_id)
            entries.append(entry)
    return entries


def write_manifest(entries, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry.to_dict(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
