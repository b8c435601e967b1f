"""Built-in lightweight scorers: a lexical tagger and an n-gram infiller.

These are declared stand-ins for heavyweight neural scorers: their only
job is to emit valid probability rows for the conformal engine, whose
coverage guarantee holds for any scorer.  The tagger generalizes the
most-common-class baseline with add-k smoothing; the infiller mixes
smoothed unigram and left/right bigram factors around a masked slot.

Both models are immutable after fitting and score deterministically.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import TaggedSentence
from .scorefile import LabelVocabulary

DEFAULT_TAGGER_K = 0.1
DEFAULT_CASE_FOLD = True
DEFAULT_LAMBDAS = (0.25, 0.375, 0.375)
DEFAULT_INFILLER_K = 0.1
DEFAULT_VOCAB_CAP = 10_000


def forced_label(row: np.ndarray) -> int:
    """Argmax point prediction; ties break to the lowest label index."""
    return int(np.argmax(row))


@dataclass(frozen=True, eq=False)
class LexicalTagger:
    """Per-word tag counts with add-k smoothing over a fixed label set.

    Seen words score (c(word, s) + k) / (c(word) + k q); unseen words
    fall back to the smoothed global tag distribution, mirroring the
    strength of the most-common-class baseline.
    """

    labels: tuple[str, ...]
    counts: dict  # word -> {tag_index: count}
    tag_totals: np.ndarray  # int64, length q
    k: float
    case_fold: bool

    @property
    def q(self) -> int:
        return len(self.labels)


def fit_lexical_tagger(
    sentences: Iterable[TaggedSentence],
    labels: Sequence[str],
    k: float = DEFAULT_TAGGER_K,
    case_fold: bool = DEFAULT_CASE_FOLD,
) -> LexicalTagger:
    """Count (word, tag) pairs from training sentences.

    ``labels`` fixes the score-row ordering (normally the corpus label
    set, which may be wider than the tags seen in training).
    """
    if k < 0:
        raise ValueError(f"smoothing constant k must be >= 0, got {k}")
    label_index = {lab: i for i, lab in enumerate(labels)}
    counts: dict[str, dict[int, int]] = {}
    tag_totals = np.zeros(len(labels), dtype=np.int64)
    n_sentences = 0
    for sent in sentences:
        n_sentences += 1
        for tok in sent.tokens:
            word = tok.word.lower() if case_fold else tok.word
            ti = label_index[tok.tag]
            counts.setdefault(word, {})
            counts[word][ti] = counts[word].get(ti, 0) + 1
            tag_totals[ti] += 1
    if n_sentences == 0:
        raise ValueError("cannot fit a tagger on zero sentences")
    return LexicalTagger(
        labels=tuple(labels),
        counts=counts,
        tag_totals=tag_totals,
        k=float(k),
        case_fold=case_fold,
    )


def score_word(model: LexicalTagger, word: str) -> np.ndarray:
    """Smoothed tag distribution for one word; sums to 1 within 1e-9."""
    if model.case_fold:
        word = word.lower()
    q, k = model.q, model.k
    tag_counts = model.counts.get(word)
    if tag_counts is None:
        total = int(model.tag_totals.sum())
        return (model.tag_totals + k) / (total + k * q)
    vec = np.full(q, k, dtype=np.float64)
    c_word = 0
    for ti, c in tag_counts.items():
        vec[ti] += c
        c_word += c
    return vec / (c_word + k * q)


@dataclass(frozen=True, eq=False)
class NGramInfiller:
    """Mixture of smoothed unigram and left/right bigram factors.

    The prediction vocabulary is the ``vocab_cap`` most frequent
    training words; context words outside it share one out-of-vocabulary
    bucket (index ``len(vocab)``).  Target occurrences outside the
    vocabulary are not counted, so every factor normalizes over the
    vocabulary exactly.
    """

    vocab: LabelVocabulary
    uni: np.ndarray  # int64 target counts, length V
    left: dict  # left-context index -> {target_index: count}
    right: dict  # right-context index -> {target_index: count}
    lambdas: tuple[float, float, float]  # (uni, left, right)
    k: float

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {w: i for i, w in enumerate(self.vocab.labels)}
        )

    @property
    def oov_context(self) -> int:
        return len(self.vocab)

    def context_index(self, word: str) -> int:
        """Vocabulary index of a context word, or the shared OOV bucket."""
        return self._index.get(word, len(self.vocab))

    def target_index(self, word: str) -> int | None:
        """Vocabulary index of a target word, or None if out of vocabulary."""
        return self._index.get(word)


def fit_ngram_infiller(
    sentences: Iterable[TaggedSentence],
    lambdas: tuple[float, float, float] = DEFAULT_LAMBDAS,
    k: float = DEFAULT_INFILLER_K,
    vocab_cap: int = DEFAULT_VOCAB_CAP,
) -> NGramInfiller:
    """Count unigrams and adjacent bigrams over the training split.

    The vocabulary keeps the ``vocab_cap`` most frequent words, ties
    broken lexicographically; refitting identical inputs yields an
    identical model.
    """
    if vocab_cap < 1:
        raise ValueError(f"vocab_cap must be >= 1, got {vocab_cap}")
    if k < 0:
        raise ValueError(f"smoothing constant k must be >= 0, got {k}")
    if any(lam < 0 for lam in lambdas) or abs(sum(lambdas) - 1.0) > 1e-9:
        raise ValueError(f"mixture weights {lambdas} must be >= 0 and sum to 1")

    sentences = list(sentences)
    if not sentences:
        raise ValueError("cannot fit an infiller on zero sentences")
    freq = Counter(tok.word for sent in sentences for tok in sent.tokens)
    chosen = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[:vocab_cap]
    vocab = LabelVocabulary(labels=tuple(word for word, _ in chosen))
    index = {word: i for i, word in enumerate(vocab.labels)}
    oov = len(vocab)

    uni = np.zeros(len(vocab), dtype=np.int64)
    left: dict[int, dict[int, int]] = defaultdict(dict)
    right: dict[int, dict[int, int]] = defaultdict(dict)
    for sent in sentences:
        words = [tok.word for tok in sent.tokens]
        for t, word in enumerate(words):
            tgt = index.get(word)
            if tgt is None:
                continue
            uni[tgt] += 1
            if t > 0:
                ctx = index.get(words[t - 1], oov)
                left[ctx][tgt] = left[ctx].get(tgt, 0) + 1
            if t < len(words) - 1:
                ctx = index.get(words[t + 1], oov)
                right[ctx][tgt] = right[ctx].get(tgt, 0) + 1
    return NGramInfiller(
        vocab=vocab,
        uni=uni,
        left=dict(left),
        right=dict(right),
        lambdas=tuple(float(lam) for lam in lambdas),
        k=float(k),
    )


def _smoothed_factor(model: NGramInfiller, table: dict, context_index: int) -> np.ndarray | None:
    """Add-k conditional over the vocabulary, or None if unusable (k = 0
    and the context row was never observed)."""
    V, k = len(model.vocab), model.k
    row = table.get(context_index)
    total = sum(row.values()) if row else 0
    if total == 0 and k == 0.0:
        return None
    vec = np.full(V, k, dtype=np.float64)
    if row:
        for tgt, c in row.items():
            vec[tgt] += c
    return vec / (total + k * V)


def score_mask(
    model: NGramInfiller, left_word: str | None, right_word: str | None
) -> np.ndarray:
    """Mixture distribution for a masked slot; sums to 1 within 1e-9.

    An absent context (sentence edge, or an unobservable row under
    k = 0) drops its term and reassigns its weight proportionally to
    the remaining terms; with no usable term left, the unigram factor
    is used alone regardless of the mixture weights.
    """
    V, k = len(model.vocab), model.k
    uni_total = int(model.uni.sum())
    p_uni = (model.uni + k) / (uni_total + k * V)

    terms: list[tuple[float, np.ndarray]] = [(model.lambdas[0], p_uni)]
    if left_word is not None:
        factor = _smoothed_factor(model, model.left, model.context_index(left_word))
        if factor is not None:
            terms.append((model.lambdas[1], factor))
    if right_word is not None:
        factor = _smoothed_factor(model, model.right, model.context_index(right_word))
        if factor is not None:
            terms.append((model.lambdas[2], factor))

    total_weight = sum(w for w, _ in terms)
    if total_weight == 0.0:
        return p_uni
    out = np.zeros(V, dtype=np.float64)
    for w, factor in terms:
        if w > 0.0:
            out += (w / total_weight) * factor
    return out
