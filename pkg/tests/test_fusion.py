"""Hypothesis combination: alignment into a word transition network and voting."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascade_kit import (
    NULL,
    ArgumentError,
    Hypothesis,
    VoteConfig,
    WordTransitionNetwork,
    align_into_wtn,
    rover,
    vote,
)


def fold(texts):
    wtn = WordTransitionNetwork()
    for i, t in enumerate(texts):
        wtn = align_into_wtn(wtn, Hypothesis.from_text(t, system_id=i))
    return wtn


def slot_counts(wtn, i):
    return {("<NULL>" if w is None else w): a.count for w, a in wtn.slots[i].items()}


class TestHypothesis:
    def test_from_text(self):
        h = Hypothesis.from_text("a b c", system_id=2)
        assert h.tokens == ("a", "b", "c")
        assert h.confidences == (1.0, 1.0, 1.0)
        assert h.text == "a b c"

    def test_confidence_validation(self):
        with pytest.raises(ArgumentError):
            Hypothesis(("a",), (1.5,))
        with pytest.raises(ArgumentError):
            Hypothesis(("a", "b"), (0.5,))


class TestAlignIntoWtn:
    def test_base_case_single_hypothesis(self):
        wtn = fold(["a b c"])
        assert len(wtn) == 3
        for i, word in enumerate("abc"):
            assert slot_counts(wtn, i) == {word: 1}
        assert wtn.n_systems == 1

    def test_substitution_shares_slot(self):
        wtn = fold(["a b c", "a x c"])
        assert len(wtn) == 3
        assert slot_counts(wtn, 1) == {"b": 1, "x": 1}

    def test_insertion_creates_null_backfill(self):
        wtn = fold(["a b", "a b c"])
        assert len(wtn) == 3
        assert slot_counts(wtn, 2) == {"<NULL>": 1, "c": 1}
        # the NULL arc belongs to the earlier system
        null_arc = wtn.slots[2][NULL]
        assert null_arc.systems == {0}

    def test_deletion_adds_null_arc(self):
        wtn = fold(["a b c", "a c"])
        assert len(wtn) == 3
        assert slot_counts(wtn, 1) == {"b": 1, "<NULL>": 1}

    def test_input_not_modified(self):
        base = fold(["a b c"])
        align_into_wtn(base, Hypothesis.from_text("x y", system_id=1))
        assert len(base) == 3
        assert base.n_systems == 1
        assert slot_counts(base, 0) == {"a": 1}

    def test_count_conservation_invariant(self):
        wtn = WordTransitionNetwork()
        for i, t in enumerate(["a b c", "a c", "x a b c d", "", "b"]):
            wtn = align_into_wtn(wtn, Hypothesis.from_text(t, system_id=i))
            assert wtn.check_counts(), f"counts broken after folding {t!r}"

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.lists(st.sampled_from("abcd"), max_size=5), min_size=1, max_size=4))
    def test_count_conservation_property(self, token_lists):
        wtn = WordTransitionNetwork()
        for i, toks in enumerate(token_lists):
            wtn = align_into_wtn(wtn, Hypothesis(tuple(toks), system_id=i))
            assert wtn.check_counts()
        assert wtn.n_systems == len(token_lists)


class TestVote:
    def test_majority(self):
        wtn = fold(["the cat sat", "the cat sit", "a cat sat"])
        assert vote(wtn, VoteConfig()).text == "the cat sat"

    def test_null_winner_emits_nothing(self):
        # two of three systems have nothing in the inserted slot
        wtn = fold(["a b", "a b", "a b c"])
        assert vote(wtn, VoteConfig()).text == "a b"

    def test_tie_prefer_word(self):
        wtn = fold(["a b", "a b c"])
        out = vote(wtn, VoteConfig(tie_break="prefer_word"))
        assert out.text == "a b c"

    def test_tie_prefer_null(self):
        wtn = fold(["a b", "a b c"])
        out = vote(wtn, VoteConfig(tie_break="prefer_null"))
        assert out.text == "a b"

    def test_tie_lowest_system(self):
        wtn = fold(["a x", "a y"])
        out = vote(wtn, VoteConfig(tie_break="lowest_system"))
        assert out.text == "a x"

    def test_alpha_zero_uses_confidence(self):
        wtn = WordTransitionNetwork()
        wtn = align_into_wtn(wtn, Hypothesis(("a",), (0.3,), system_id=0))
        wtn = align_into_wtn(wtn, Hypothesis(("b",), (0.9,), system_id=1))
        out = vote(wtn, VoteConfig(alpha=0.0))
        assert out.text == "b"

    def test_alpha_one_ignores_confidence(self):
        wtn = WordTransitionNetwork()
        wtn = align_into_wtn(wtn, Hypothesis(("a",), (0.1,), system_id=0))
        wtn = align_into_wtn(wtn, Hypothesis(("a",), (0.2,), system_id=1))
        wtn = align_into_wtn(wtn, Hypothesis(("b",), (1.0,), system_id=2))
        out = vote(wtn, VoteConfig(alpha=1.0))
        assert out.text == "a"

    def test_winner_is_fused_system(self):
        wtn = fold(["a b"])
        out = vote(wtn, VoteConfig())
        assert out.system_id == -1

    def test_confidences_are_winning_scores(self):
        wtn = fold(["the cat sat", "the cat sit", "a cat sat"])
        out = vote(wtn, VoteConfig(alpha=1.0))
        assert out.confidences == (pytest.approx(2 / 3), pytest.approx(1.0), pytest.approx(2 / 3))

    def test_empty_wtn_rejected(self):
        with pytest.raises(ArgumentError):
            vote(WordTransitionNetwork(), VoteConfig())


class TestVoteConfig:
    def test_validation(self):
        with pytest.raises(Exception):
            VoteConfig(alpha=1.5)
        with pytest.raises(Exception):
            VoteConfig(tie_break="coin_flip")
        with pytest.raises(Exception):
            VoteConfig(null_confidence=-0.1)


class TestRover:
    def test_single_hypothesis_identity(self):
        h = Hypothesis.from_text("the quick fox")
        assert rover([h]).text == "the quick fox"

    def test_idempotence_k_copies(self):
        h = Hypothesis.from_text("a b c d")
        for k in (1, 2, 3, 7):
            hyps = [Hypothesis.from_text("a b c d", system_id=i) for i in range(k)]
            assert rover(hyps).text == "a b c d", k

    def test_stated_majority_example(self):
        hyps = [
            Hypothesis.from_text(t, system_id=i)
            for i, t in enumerate(["the cat sat", "the cat sit", "a cat sat"])
        ]
        assert rover(hyps).text == "the cat sat"

    def test_empty_input_rejected(self):
        with pytest.raises(ArgumentError):
            rover([])

    def test_permutation_invariant_when_unambiguous(self):
        # all hypotheses are equal length, per-slot variants: no DP ties
        import itertools

        texts = ["a b c", "a x c", "a b c"]
        hyps = [Hypothesis.from_text(t, system_id=i) for i, t in enumerate(texts)]
        outs = set()
        for perm in itertools.permutations(hyps):
            outs.add(rover(list(perm)).text)
        assert outs == {"a b c"}

    def test_fused_output_scaling_invariance(self):
        # with alpha=1 the winner is a count mode; scaling confidences never changes it
        hyps1 = [
            Hypothesis(("a", "b"), (0.2, 0.2), system_id=0),
            Hypothesis(("a", "c"), (0.9, 0.9), system_id=1),
            Hypothesis(("a", "b"), (0.1, 0.1), system_id=2),
        ]
        hyps2 = [
            Hypothesis(tuple(h.tokens), tuple(c * 0.5 for c in h.confidences), system_id=h.system_id)
            for h in hyps1
        ]
        cfg = VoteConfig(alpha=1.0)
        assert rover(hyps1, cfg).tokens == rover(hyps2, cfg).tokens
