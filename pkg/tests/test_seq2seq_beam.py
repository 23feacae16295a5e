"""Seq2seq beam search: length penalty, mock scorers, enumeration equivalence."""

import io
import itertools
import math

import numpy as np
import pytest

from streamctc import (
    EOS,
    ParseError,
    S2SConfig,
    TableScorer,
    UniformLm,
    ValidationError,
    length_penalty,
    load_table_scorer,
    s2s_decode,
    save_table_scorer,
    train_ngram,
)


def enumerate_best(scorer, lm, config):
    """Exhaustive argmax over all sequences up to max_length, every candidate
    terminated (its EOS term is always included)."""
    best = None
    for length in range(config.max_length + 1):
        for chars in itertools.product(scorer.symbols, repeat=length):
            text = "".join(chars)
            sc_state = scorer.initial_state()
            lm_state = lm.initial_state()
            lp_sc = lp_lm = 0.0
            for ch in text:
                lp_sc += float(scorer.next_log_probs(sc_state)[scorer.index_of(ch)])
                lp_lm += float(lm.next_log_probs(lm_state)[lm.index_of(ch)])
                sc_state = scorer.advance(sc_state, ch)
                lm_state = lm.advance(lm_state, ch)
            lp_sc += float(scorer.next_log_probs(sc_state)[scorer.index_of(EOS)])
            lp_lm += float(lm.next_log_probs(lm_state)[lm.index_of(EOS)])
            fused = lp_sc + (config.alpha * lp_lm if config.alpha else 0.0)
            score = fused / length_penalty(length, config.beta)
            key = (-score, text)
            if best is None or key < best:
                best = key
    return best[1], -best[0]


def random_scorer(rng, symbols="abc", depth=2):
    table = {}
    prefixes = [""]
    for _ in range(depth + 1):
        next_prefixes = []
        for prefix in prefixes:
            probs = rng.dirichlet(np.ones(len(symbols) + 1))
            table[prefix] = {
                ch: float(p) for ch, p in zip(list(symbols) + [EOS], probs)
            }
            next_prefixes.extend(prefix + c for c in symbols)
        prefixes = next_prefixes
    return TableScorer(symbols, table)


class TestLengthPenalty:
    @pytest.mark.parametrize("beta", [0.0, 0.6, 0.7])
    def test_length_one_is_unity(self, beta):
        assert length_penalty(1, beta) == 1.0

    def test_length_seven(self):
        assert length_penalty(7, 0.7) == pytest.approx(2**0.7, abs=1e-15)

    def test_beta_zero(self):
        for length in (0, 1, 5, 100):
            assert length_penalty(length, 0.0) == 1.0

    def test_rejects_negative_length(self):
        with pytest.raises(ValidationError):
            length_penalty(-1, 0.5)


class TestTableScorer:
    def test_listed_prefix(self):
        scorer = TableScorer("ab", {"": {"a": 0.5, "b": 0.25, EOS: 0.25}})
        vec = scorer.next_log_probs("")
        assert math.exp(vec[0]) == pytest.approx(0.5)
        assert math.exp(vec[2]) == pytest.approx(0.25)

    def test_unlisted_prefix_is_uniform(self):
        scorer = TableScorer("ab", {})
        vec = scorer.next_log_probs("zzz")
        assert np.allclose(np.exp(vec), 1 / 3)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValidationError):
            TableScorer("ab", {"": {"a": 0.5, "b": 0.6}})

    def test_normalization_invariant(self):
        rng = np.random.default_rng(0)
        scorer = random_scorer(rng)
        for prefix in ["", "a", "ab", "zz"]:
            total = np.exp(scorer.next_log_probs(prefix)).sum()
            assert total == pytest.approx(1.0, abs=1e-9)


class TestS2SDecode:
    def test_deterministic_spelling(self):
        table = {
            "": {"h": 1.0},
            "h": {"i": 1.0},
            "hi": {EOS: 1.0},
        }
        scorer = TableScorer("hi", table)
        text, score = s2s_decode(scorer, S2SConfig(width=4, alpha=0.0, beta=0.0, max_length=5))
        assert text == "hi"
        assert score == pytest.approx(0.0)

    def test_full_width_equals_enumeration(self):
        rng = np.random.default_rng(77)
        config = S2SConfig(width=200, alpha=0.0, beta=0.0, max_length=3)
        lm = UniformLm("abc")
        for _ in range(30):
            scorer = random_scorer(rng)
            expected_text, expected_score = enumerate_best(scorer, lm, config)
            text, score = s2s_decode(scorer, config, lm)
            assert text == expected_text
            assert score == pytest.approx(expected_score, abs=1e-9)

    def test_longer_candidate_wins_under_length_penalty(self):
        # equal sequence log-probability, lengths 1 and 7, beta=0.7:
        # dividing a negative score by LP > 1 raises it, so the longer wins
        lp = -2.0
        short = lp / length_penalty(1, 0.7)
        long = lp / length_penalty(7, 0.7)
        assert long > short
        assert long == pytest.approx(-2.0 / 2**0.7)

    def test_fusion_with_ngram_lm(self):
        # scorer is indifferent between "ab" and "aa"; the LM prefers "ab"
        table = {
            "": {"a": 1.0},
            "a": {"a": 0.5, "b": 0.5},
            "aa": {EOS: 1.0},
            "ab": {EOS: 1.0},
        }
        scorer = TableScorer("ab", table)
        lm = train_ngram(["abab", "ab"], "ab", order=2)
        no_lm_text, _ = s2s_decode(scorer, S2SConfig(width=8, alpha=0.0, beta=0.0, max_length=4))
        assert no_lm_text == "aa"  # lexicographic tie-break
        fused_text, _ = s2s_decode(scorer, S2SConfig(width=8, alpha=1.0, beta=0.0, max_length=4), lm)
        assert fused_text == "ab"

    def test_alpha_weighting_is_monotone_for_fixed_candidate(self):
        # log p_LM is negative, so raising alpha strictly lowers the fused
        # score of any fixed candidate with finite LM probability
        lm = train_ngram(["abab", "bb"], "ab", order=2)
        lp_sc = -1.5
        text = "ab"
        lp_lm = lm.sequence_log_prob(text, include_eos=True)
        assert lp_lm < 0
        scores = [(lp_sc + alpha * lp_lm) / length_penalty(len(text), 0.7)
                  for alpha in (0.0, 0.1, 0.5, 1.0)]
        assert all(a > b for a, b in zip(scores, scores[1:]))

    def test_uniform_lm_cannot_flip_equal_length_ranking(self):
        rng = np.random.default_rng(5)
        lm = UniformLm("abc")
        for _ in range(10):
            scorer = random_scorer(rng)
            # max_length 1 keeps all candidates the same length
            cfg0 = S2SConfig(width=50, alpha=0.0, beta=0.4, max_length=1)
            cfg1 = S2SConfig(width=50, alpha=0.9, beta=0.4, max_length=1)
            assert s2s_decode(scorer, cfg0, lm)[0] == s2s_decode(scorer, cfg1, lm)[0]

    def test_alphabet_mismatch(self):
        scorer = TableScorer("ab", {})
        with pytest.raises(ValidationError):
            s2s_decode(scorer, S2SConfig(), train_ngram(["xy"], "xy", order=1))

    def test_determinism(self):
        rng = np.random.default_rng(13)
        scorer = random_scorer(rng)
        cfg = S2SConfig(width=3, alpha=0.1, beta=0.7, max_length=4)
        lm = train_ngram(["abc", "cab"], "abc", order=2)
        assert s2s_decode(scorer, cfg, lm) == s2s_decode(scorer, cfg, lm)


class TestSerialization:
    def _roundtrip_text(self, scorer):
        buf = io.StringIO()
        save_table_scorer(scorer, buf)
        return buf.getvalue()

    def test_save_load_save_byte_identical(self):
        rng = np.random.default_rng(3)
        scorer = random_scorer(rng)
        first = self._roundtrip_text(scorer)
        again = self._roundtrip_text(load_table_scorer(io.StringIO(first)))
        assert again == first

    def test_path_roundtrip(self, tmp_path):
        scorer = TableScorer("ab", {"": {"a": 0.25, "b": 0.25, EOS: 0.5}})
        path = tmp_path / "scorer.s2sm"
        save_table_scorer(scorer, path)
        reloaded = TableScorer.load(path)
        assert np.array_equal(reloaded.next_log_probs(""), scorer.next_log_probs(""))

    def test_bad_header(self):
        with pytest.raises(ParseError):
            load_table_scorer(io.StringIO("S2SM v9 ab\n"))

    def test_bad_probability(self):
        with pytest.raises(ParseError) as err:
            load_table_scorer(io.StringIO("S2SM v1 ab\na\tb\tlots\n"))
        assert err.value.line == 2

    def test_unnormalized_rejected(self):
        with pytest.raises(ParseError):
            load_table_scorer(io.StringIO("S2SM v1 ab\n\ta\t0.9\n\tb\t0.9\n"))
