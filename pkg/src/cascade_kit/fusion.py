"""Multi-system hypothesis combination.

Transcripts from several recognizers are folded one at a time into a word
transition network (WTN) by minimum-edit alignment, then each slot votes
on its winning word. NULL arcs stand for "this system had no word here";
a slot whose winner is NULL emits nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ArgumentError

NULL = None  # arc word for an absence

_TIE_BREAKS = ("prefer_word", "prefer_null", "lowest_system")

# DP move ranks; lower wins on equal cost
_MATCH, _SUB, _DEL, _INS = 0, 1, 2, 3


@dataclass(frozen=True)
class Hypothesis:
    """One system's transcript with per-token confidences in [0, 1]."""

    tokens: tuple
    confidences: tuple = ()
    system_id: int = 0

    def __post_init__(self):
        tokens = tuple(str(t) for t in self.tokens)
        confs = tuple(float(c) for c in self.confidences)
        if not confs:
            confs = (1.0,) * len(tokens)
        if len(confs) != len(tokens):
            raise ArgumentError(
                f"{len(tokens)} tokens but {len(confs)} confidences for system {self.system_id}"
            )
        if any(not 0.0 <= c <= 1.0 for c in confs):
            raise ArgumentError("confidences must lie in [0, 1]")
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "confidences", confs)

    @classmethod
    def from_text(cls, text: str, system_id: int = 0, confidences=None):
        return cls(tuple(text.split()), tuple(confidences or ()), system_id)

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


class Arc:
    """One competing word (or NULL) inside a slot."""

    __slots__ = ("word", "confidence_sum", "count", "systems")

    def __init__(self, word, confidence_sum=0.0, count=0, systems=()):
        self.word = word
        self.confidence_sum = confidence_sum
        self.count = count
        self.systems = set(systems)

    def copy(self):
        return Arc(self.word, self.confidence_sum, self.count, self.systems)

    def __repr__(self):
        w = "<NULL>" if self.word is None else self.word
        return f"Arc({w}, n={self.count})"


class WordTransitionNetwork:
    """Ordered slots of word/NULL arcs accumulated from aligned hypotheses."""

    def __init__(self):
        self.slots = []  # list of dicts: word-or-None -> Arc
        self.n_systems = 0
        self.system_ids = []

    def copy(self):
        dup = WordTransitionNetwork()
        dup.slots = [{k: a.copy() for k, a in slot.items()} for slot in self.slots]
        dup.n_systems = self.n_systems
        dup.system_ids = list(self.system_ids)
        return dup

    def slot_words(self, i):
        return {w for w in self.slots[i] if w is not None}

    def check_counts(self):
        """Every slot's arc counts must sum to n_systems."""
        return all(sum(a.count for a in slot.values()) == self.n_systems for slot in self.slots)

    def __len__(self):
        return len(self.slots)


def _bump(slot, word, confidence, system_id):
    arc = slot.get(word)
    if arc is None:
        arc = slot[word] = Arc(word)
    arc.confidence_sum += confidence
    arc.count += 1
    arc.systems.add(system_id)


def align_into_wtn(wtn: WordTransitionNetwork, hyp: Hypothesis) -> WordTransitionNetwork:
    """Fold one hypothesis into the network along a minimum-cost edit path.

    Costs: match 0 (token already an arc of the slot), substitution 1,
    deletion 1 (hyp contributes a NULL arc), insertion 1 (a fresh slot is
    created, back-filled with NULL arcs for every earlier system). Equal
    costs resolve match, then substitution, then deletion, then insertion.
    The input network is not modified.
    """
    ns = len(wtn.slots)
    nt = len(hyp.tokens)
    words = [wtn.slot_words(i) for i in range(ns)]

    # cost[i][j]: first i slots aligned with first j tokens; move[i][j] is the op taken
    cost = [[0] * (nt + 1) for _ in range(ns + 1)]
    move = [[_MATCH] * (nt + 1) for _ in range(ns + 1)]
    for i in range(1, ns + 1):
        cost[i][0] = i
        move[i][0] = _DEL
    for j in range(1, nt + 1):
        cost[0][j] = j
        move[0][j] = _INS
    for i in range(1, ns + 1):
        for j in range(1, nt + 1):
            tok = hyp.tokens[j - 1]
            if tok in words[i - 1]:
                diag = (cost[i - 1][j - 1], _MATCH)
            else:
                diag = (cost[i - 1][j - 1] + 1, _SUB)
            best = min(diag, (cost[i - 1][j] + 1, _DEL), (cost[i][j - 1] + 1, _INS))
            cost[i][j], move[i][j] = best

    ops = []
    i, j = ns, nt
    while i > 0 or j > 0:
        op = move[i][j]
        ops.append(op)
        if op in (_MATCH, _SUB):
            i -= 1
            j -= 1
        elif op == _DEL:
            i -= 1
        else:
            j -= 1
    ops.reverse()

    out = wtn.copy()
    prior_systems = list(out.system_ids)
    n_prior = out.n_systems
    new_slots = []
    i = j = 0
    for op in ops:
        if op in (_MATCH, _SUB):
            slot = out.slots[i]
            _bump(slot, hyp.tokens[j], hyp.confidences[j], hyp.system_id)
            new_slots.append(slot)
            i += 1
            j += 1
        elif op == _DEL:
            slot = out.slots[i]
            _bump(slot, NULL, 0.0, hyp.system_id)
            new_slots.append(slot)
            i += 1
        else:  # insertion: new slot, absent for all earlier systems
            slot = {}
            if n_prior:
                slot[NULL] = Arc(NULL, 0.0, n_prior, prior_systems)
            _bump(slot, hyp.tokens[j], hyp.confidences[j], hyp.system_id)
            new_slots.append(slot)
            j += 1
    out.slots = new_slots
    out.n_systems = n_prior + 1
    out.system_ids.append(hyp.system_id)
    return out


@dataclass(frozen=True)
class VoteConfig:
    """alpha weighs occurrence frequency against mean confidence; alpha=1 is
    pure frequency voting (every system counts the same)."""

    alpha: float = 1.0
    null_confidence: float = 0.5
    tie_break: str = "prefer_word"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ArgumentError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.null_confidence <= 1.0:
            raise ArgumentError(f"null_confidence must be in [0, 1], got {self.null_confidence}")
        if self.tie_break not in _TIE_BREAKS:
            raise ArgumentError(f"tie_break must be one of {_TIE_BREAKS}, got {self.tie_break!r}")


def _tie_key(arc, config):
    if config.tie_break == "prefer_word":
        return (arc.word is None, arc.word or "")
    if config.tie_break == "prefer_null":
        return (arc.word is not None, arc.word or "")
    low = min(arc.systems) if arc.systems else math.inf
    return (low, arc.word is None, arc.word or "")


def vote(wtn: WordTransitionNetwork, config: VoteConfig | None = None) -> Hypothesis:
    """Pick each slot's winner and concatenate the non-NULL ones.

    score(w) = alpha * count(w)/n_systems + (1-alpha) * mean_confidence(w),
    where NULL's mean confidence is the configured null_confidence. The
    winning scores come back as the fused hypothesis' confidences, under
    system id -1.
    """
    if config is None:
        config = VoteConfig()
    if wtn.n_systems < 1:
        raise ArgumentError("cannot vote on an empty network")
    tokens = []
    confs = []
    for slot in wtn.slots:
        best = None
        best_key = None
        for arc in slot.values():
            mean_conf = config.null_confidence if arc.word is None else arc.confidence_sum / arc.count
            score = config.alpha * arc.count / wtn.n_systems + (1.0 - config.alpha) * mean_conf
            key = (-score,) + _tie_key(arc, config)
            if best_key is None or key < best_key:
                best, best_key = (arc, score), key
        arc, score = best
        if arc.word is not None:
            tokens.append(arc.word)
            confs.append(min(1.0, max(0.0, score)))
    return Hypothesis(tuple(tokens), tuple(confs), system_id=-1)


def rover(hypotheses, config: VoteConfig | None = None) -> Hypothesis:
    """Align-and-vote combination of several transcripts.

    Hypotheses fold into the network in the given order (order only
    matters where edit-distance ties exist), then the network votes.
    """
    hypotheses = list(hypotheses)
    if not hypotheses:
        raise ArgumentError("need at least one hypothesis")
    wtn = WordTransitionNetwork()
    for hyp in hypotheses:
        wtn = align_into_wtn(wtn, hyp)
    return vote(wtn, config)
