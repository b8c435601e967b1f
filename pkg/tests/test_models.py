"""Lexical tagger and n-gram infiller: counting, smoothing, mixtures."""

import numpy as np
import pytest

from icptext import (
    fit_lexical_tagger,
    fit_ngram_infiller,
    forced_label,
    parse_tagged_corpus,
    score_mask,
    score_word,
)

from corpusgen import make_corpus_text


def _sentences(text):
    return parse_tagged_corpus(text).sentences


# ---------------------------------------------------------------------------
# forced_label


def test_forced_label_argmax():
    assert forced_label(np.array([0.1, 0.7, 0.2])) == 1


def test_forced_label_tie_breaks_low():
    assert forced_label(np.array([0.4, 0.4, 0.2])) == 0
    assert forced_label(np.array([0.25, 0.25, 0.25, 0.25])) == 0


# ---------------------------------------------------------------------------
# fit_lexical_tagger


def test_fit_single_observation():
    tagger = fit_lexical_tagger(_sentences("dog/NN"), ["NN"], k=0.1)
    assert tagger.counts == {"dog": {0: 1}}
    assert tagger.tag_totals.tolist() == [1]


def test_fit_ambiguous_word():
    tagger = fit_lexical_tagger(
        _sentences("run/VB run/NN"), ["VB", "NN"], k=0.1, case_fold=False
    )
    assert tagger.counts == {"run": {0: 1, 1: 1}}


def test_fit_case_folding():
    tagger = fit_lexical_tagger(_sentences("Dog/NN dog/NN"), ["NN"], case_fold=True)
    assert tagger.counts == {"dog": {0: 2}}
    no_fold = fit_lexical_tagger(_sentences("Dog/NN dog/NN"), ["NN"], case_fold=False)
    assert set(no_fold.counts) == {"Dog", "dog"}


def test_fit_rejects_empty_train():
    with pytest.raises(ValueError):
        fit_lexical_tagger([], ["NN"])


def test_fit_rejects_negative_k():
    with pytest.raises(ValueError):
        fit_lexical_tagger(_sentences("a/NN"), ["NN"], k=-0.1)


# ---------------------------------------------------------------------------
# score_word


def test_score_seen_word_smoothing_oracle():
    # counts {NN: 5}, k = 0.1, q = 3 -> P(NN) = 5.1 / 5.3
    text = " ".join(["dog/NN"] * 5) + " other/VB filler/JJ"
    tagger = fit_lexical_tagger(_sentences(text), ["NN", "VB", "JJ"], k=0.1)
    row = score_word(tagger, "dog")
    assert row[0] == pytest.approx(5.1 / 5.3, abs=1e-12)
    assert row[1] == pytest.approx(0.1 / 5.3, abs=1e-12)
    assert row.sum() == pytest.approx(1.0, abs=1e-9)


def test_score_seen_word_k_zero():
    text = "run/NN run/NN run/NN run/VB"
    tagger = fit_lexical_tagger(_sentences(text), ["NN", "VB"], k=0.0)
    assert score_word(tagger, "run").tolist() == [0.75, 0.25]


def test_score_unseen_word_global_fallback():
    # tag_totals [9, 1], k = 0 -> [0.9, 0.1]
    text = " ".join(["a/NN"] * 9 + ["b/VB"])
    tagger = fit_lexical_tagger(_sentences(text), ["NN", "VB"], k=0.0)
    assert score_word(tagger, "never_seen").tolist() == [0.9, 0.1]


def test_score_unseen_word_smoothed_fallback():
    text = " ".join(["a/NN"] * 9 + ["b/VB"])
    tagger = fit_lexical_tagger(_sentences(text), ["NN", "VB"], k=0.5)
    row = score_word(tagger, "zzz")
    assert row.tolist() == [9.5 / 11.0, 1.5 / 11.0]


def test_score_word_case_folds_at_scoring_time():
    tagger = fit_lexical_tagger(_sentences("dog/NN cat/VB"), ["NN", "VB"], k=0.0)
    assert score_word(tagger, "DOG").tolist() == score_word(tagger, "dog").tolist()


def test_forced_prediction_is_modal_tag_with_k_zero():
    # argmax property: k = 0 on a seen word recovers the modal training tag
    corpus = parse_tagged_corpus(make_corpus_text(n_sentences=60, seed=9))
    tagger = fit_lexical_tagger(corpus.sentences, corpus.label_set, k=0.0)
    for word, tag_counts in tagger.counts.items():
        modal = min(
            (ti for ti in tag_counts),
            key=lambda ti: (-tag_counts[ti], ti),
        )
        assert forced_label(score_word(tagger, word)) == modal


def test_score_rows_are_probability_vectors(toy_corpus):
    tagger = fit_lexical_tagger(toy_corpus.sentences, toy_corpus.label_set)
    for word in ["w0", "w7", "not_in_corpus", "W3"]:
        row = score_word(tagger, word)
        assert np.all(row >= 0) and np.all(row <= 1)
        assert abs(row.sum() - 1.0) <= 1e-9


# ---------------------------------------------------------------------------
# fit_ngram_infiller


def test_vocab_cap_keeps_most_frequent():
    text = " ".join(["a/X"] * 5 + ["b/X"] * 3 + ["c/X"])
    inf = fit_ngram_infiller(_sentences(text), vocab_cap=2)
    assert inf.vocab.labels == ("a", "b")


def test_vocab_cap_ties_break_lexicographically():
    text = "b/X a/X c/X\nb/X a/X"
    inf = fit_ngram_infiller(_sentences(text), vocab_cap=2)
    # a and b both occur twice; lexicographic order keeps both before c
    assert inf.vocab.labels == ("a", "b")


def test_oov_targets_not_counted():
    text = " ".join(["a/X"] * 5 + ["b/X"] * 3 + ["c/X"])
    inf = fit_ngram_infiller(_sentences(text), vocab_cap=2)
    assert inf.uni.tolist() == [5, 3]
    assert inf.target_index("c") is None
    assert inf.context_index("c") == inf.oov_context == 2


def test_fit_infiller_validates_arguments():
    sents = _sentences("a/X b/X")
    with pytest.raises(ValueError):
        fit_ngram_infiller(sents, vocab_cap=0)
    with pytest.raises(ValueError):
        fit_ngram_infiller(sents, k=-1.0)
    with pytest.raises(ValueError):
        fit_ngram_infiller(sents, lambdas=(0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        fit_ngram_infiller([])


def test_refit_is_deterministic():
    text = make_corpus_text(n_sentences=40, seed=3)
    a = fit_ngram_infiller(_sentences(text))
    b = fit_ngram_infiller(_sentences(text))
    assert a.vocab == b.vocab
    np.testing.assert_array_equal(a.uni, b.uni)
    np.testing.assert_allclose(
        score_mask(a, "w1", "w2"), score_mask(b, "w1", "w2"), atol=0
    )


# ---------------------------------------------------------------------------
# score_mask

# Shared tiny training set with hand-derived count tables:
#   sentences: "a b a c", "b a"
#   unigrams: a3 b2 c1 -> vocab (a, b, c)
#   left  (prev -> target): a->{b:1, c:1}, b->{a:2}
#   right (next -> target): a->{b:2}, b->{a:1}, c->{a:1}
MIX_TEXT = "a/X b/X a/X c/X\nb/X a/X"


def _mix_infiller(lambdas=(0.25, 0.375, 0.375), k=0.1):
    return fit_ngram_infiller(_sentences(MIX_TEXT), lambdas=lambdas, k=k)


def _hand_factor(counts: dict, V: int, k: float) -> np.ndarray:
    vec = np.full(V, k, dtype=np.float64)
    for i, c in counts.items():
        vec[i] += c
    return vec / (sum(counts.values()) + k * V)


def test_score_mask_unigram_reduction():
    # lambda = (1, 0, 0), k = 0, counts {a: 3, b: 1} -> [0.75, 0.25]
    inf = fit_ngram_infiller(
        _sentences("a/X a/X a/X b/X"), lambdas=(1.0, 0.0, 0.0), k=0.0
    )
    row = score_mask(inf, "a", "b")
    np.testing.assert_allclose(row, [0.75, 0.25], atol=1e-15)


def test_score_mask_full_mixture_oracle():
    inf = _mix_infiller()
    k, V = 0.1, 3
    p_uni = _hand_factor({0: 3, 1: 2, 2: 1}, V, k)
    p_left_a = _hand_factor({1: 1, 2: 1}, V, k)
    p_right_c = _hand_factor({0: 1}, V, k)
    expected = 0.25 * p_uni + 0.375 * p_left_a + 0.375 * p_right_c
    np.testing.assert_allclose(score_mask(inf, "a", "c"), expected, atol=1e-12)


def test_score_mask_both_contexts_absent_is_pure_unigram():
    for lambdas in [(0.25, 0.375, 0.375), (0.0, 0.5, 0.5)]:
        inf = _mix_infiller(lambdas=lambdas)
        p_uni = _hand_factor({0: 3, 1: 2, 2: 1}, 3, 0.1)
        np.testing.assert_allclose(score_mask(inf, None, None), p_uni, atol=1e-12)


def test_score_mask_edge_reassigns_weight_proportionally():
    # right edge: weights (0.25, 0.375) renormalize over (uni, left)
    inf = _mix_infiller()
    k, V = 0.1, 3
    p_uni = _hand_factor({0: 3, 1: 2, 2: 1}, V, k)
    p_left_b = _hand_factor({0: 2}, V, k)
    w = 0.25 + 0.375
    expected = (0.25 / w) * p_uni + (0.375 / w) * p_left_b
    np.testing.assert_allclose(score_mask(inf, "b", None), expected, atol=1e-12)


def test_score_mask_oov_context_uses_shared_bucket():
    inf = _mix_infiller()
    a = score_mask(inf, "unseen_x", "a")
    b = score_mask(inf, "unseen_y", "a")
    np.testing.assert_array_equal(a, b)


def test_score_mask_k_zero_unseen_context_drops_term():
    # Under k = 0 an unobserved context row is unusable: its weight is
    # reassigned, so an OOV left context scores like a left-edge mask.
    inf = _mix_infiller(k=0.0)
    np.testing.assert_allclose(
        score_mask(inf, "zzz_oov", "a"), score_mask(inf, None, "a"), atol=0
    )


def test_score_mask_rows_are_probability_vectors(toy_corpus):
    inf = fit_ngram_infiller(toy_corpus.sentences)
    cases = [
        ("w0", "w1"),
        (None, "w1"),
        ("w0", None),
        (None, None),
        ("oov_word", "w2"),
    ]
    for left, right in cases:
        row = score_mask(inf, left, right)
        assert np.all(row >= 0) and np.all(row <= 1)
        assert abs(row.sum() - 1.0) <= 1e-9
