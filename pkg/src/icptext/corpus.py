"""Tagged-corpus ingestion, label normalization, splits, and masking.

Input format: UTF-8 text, one sentence per line, tokens separated by
whitespace, each token of the form ``word/TAG``.  Words may themselves
contain ``/`` (fractions like ``1/2``), so the split is on the *last*
slash; tags never contain one.

Tag normalization removes hyphenated markup (trailing ``-HL``, ``-TL``,
``-NC`` and the leading foreign-word marker ``FW-``) until a fixpoint,
while keeping ``+``-combined tags as single labels.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .rng import SplitMix64, substream


class MalformedTagError(ValueError):
    """A POS tag is empty, or normalizes to the empty string."""


class CorpusParseError(ValueError):
    """Input text violates the ``word/TAG`` line format."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class DegenerateSplitError(ValueError):
    """A requested split leaves at least one partition empty."""


_STRIP_SUFFIXES = ("-HL", "-TL", "-NC")
_STRIP_PREFIX = "FW-"


def normalize_tag(raw: str) -> str:
    """Normalize a raw POS tag.

    Trailing ``-HL``/``-TL``/``-NC`` markers and the leading ``FW-``
    marker are stripped repeatedly until none remains (markers can
    stack, e.g. ``NN-TL-HL``).  ``+``-combined tags are preserved
    verbatim as single labels.  Raises :class:`MalformedTagError` if the
    input is empty or nothing remains after stripping.
    """
    if not raw:
        raise MalformedTagError("empty tag")
    tag = raw
    while tag:
        if tag.startswith(_STRIP_PREFIX):
            tag = tag[len(_STRIP_PREFIX):]
            continue
        for suffix in _STRIP_SUFFIXES:
            if tag.endswith(suffix):
                tag = tag[: -len(suffix)]
                break
        else:
            break
    if not tag:
        raise MalformedTagError(f"tag {raw!r} is empty after normalization")
    return tag


@dataclass(frozen=True)
class TaggedToken:
    word: str
    tag: str


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple[TaggedToken, ...]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class TaggedCorpus:
    """Sentences of (word, tag) pairs plus the induced label set and vocab.

    ``label_set`` and ``vocab`` are ordered by first appearance and free
    of duplicates; every token's tag has an index in ``label_set``.
    """

    sentences: tuple[TaggedSentence, ...]
    label_set: tuple[str, ...]
    vocab: tuple[str, ...]
    _tag_index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    @staticmethod
    def from_sentences(sentences: list[TaggedSentence] | tuple[TaggedSentence, ...]) -> "TaggedCorpus":
        labels: dict[str, int] = {}
        words: dict[str, int] = {}
        for sent in sentences:
            for tok in sent.tokens:
                labels.setdefault(tok.tag, len(labels))
                words.setdefault(tok.word, len(words))
        return TaggedCorpus(
            sentences=tuple(sentences),
            label_set=tuple(labels),
            vocab=tuple(words),
        )

    def __post_init__(self):
        object.__setattr__(
            self, "_tag_index", {tag: i for i, tag in enumerate(self.label_set)}
        )

    def tag_index(self, tag: str) -> int:
        return self._tag_index[tag]

    @property
    def n_sentences(self) -> int:
        return len(self.sentences)

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)


_TOKEN_RE = re.compile(r"\S+")


def parse_tagged_corpus(text: str) -> TaggedCorpus:
    """Parse ``word/TAG`` lines into a :class:`TaggedCorpus`.

    One sentence per line; blank lines are skipped.  Tokens split on the
    last ``/``; tags are normalized via :func:`normalize_tag`.  A token
    without a slash, with an empty word, or with a tag that normalizes
    to nothing raises :class:`CorpusParseError` carrying the 1-based
    line and column of the offending token.
    """
    sentences: list[TaggedSentence] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        tokens: list[TaggedToken] = []
        for m in _TOKEN_RE.finditer(line):
            token, col = m.group(), m.start() + 1
            slash = token.rfind("/")
            if slash < 0:
                raise CorpusParseError(f"token {token!r} has no '/'", line_no, col)
            word, raw_tag = token[:slash], token[slash + 1:]
            if not word:
                raise CorpusParseError(f"token {token!r} has an empty word", line_no, col)
            if not raw_tag:
                raise CorpusParseError(f"token {token!r} has an empty tag", line_no, col)
            try:
                tag = normalize_tag(raw_tag)
            except MalformedTagError as exc:
                raise CorpusParseError(str(exc), line_no, col) from exc
            tokens.append(TaggedToken(word=word, tag=tag))
        sentences.append(TaggedSentence(tokens=tuple(tokens)))
    return TaggedCorpus.from_sentences(sentences)


def serialize_tagged_corpus(corpus: TaggedCorpus) -> str:
    """Inverse of :func:`parse_tagged_corpus` (tags stay normalized)."""
    lines = (
        " ".join(f"{tok.word}/{tok.tag}" for tok in sent.tokens)
        for sent in corpus.sentences
    )
    return "".join(line + "\n" for line in lines)


@dataclass(frozen=True)
class SplitSpec:
    """Sentence-split proportions and the seed of the shuffling RNG."""

    train_frac: float
    cal_frac: float
    test_frac: float
    seed: int

    def __post_init__(self):
        fracs = (self.train_frac, self.cal_frac, self.test_frac)
        if any(f < 0 for f in fracs):
            raise ValueError(f"negative split fraction in {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"split fractions {fracs} do not sum to 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed {self.seed} outside unsigned 64-bit range")


@dataclass(frozen=True)
class CorpusSplit:
    """Disjoint train/cal/test sentence indices covering the corpus."""

    train: tuple[int, ...]
    cal: tuple[int, ...]
    test: tuple[int, ...]


def split_corpus(corpus: TaggedCorpus, spec: SplitSpec) -> CorpusSplit:
    """Partition sentence indices by a seeded uniform permutation.

    Sizes are ``floor(n * train_frac)`` and ``floor(n * cal_frac)``, with
    the remainder going to test.  Identical (corpus, spec) pairs produce
    identical splits.  Raises :class:`DegenerateSplitError` if any
    partition comes out empty.
    """
    n = corpus.n_sentences
    if n < 3:
        raise DegenerateSplitError(f"need at least 3 sentences, got {n}")
    n_train = math.floor(n * spec.train_frac)
    n_cal = math.floor(n * spec.cal_frac)
    n_test = n - n_train - n_cal
    if min(n_train, n_cal, n_test) == 0:
        raise DegenerateSplitError(
            f"split of {n} sentences gives sizes {n_train}/{n_cal}/{n_test}"
        )
    perm = list(range(n))
    SplitMix64(spec.seed).shuffle(perm)
    return CorpusSplit(
        train=tuple(perm[:n_train]),
        cal=tuple(perm[n_train:n_train + n_cal]),
        test=tuple(perm[n_train + n_cal:]),
    )


@dataclass(frozen=True)
class MaskedInstance:
    """A single-word masking of one sentence."""

    sentence_index: int
    mask_position: int
    true_word: str


def mask_one_word(corpus: TaggedCorpus, sentence_index: int, seed: int) -> MaskedInstance:
    """Mask a uniformly chosen token of one sentence, deterministically.

    The position is drawn from the SplitMix64 substream keyed by
    (seed, sentence_index), so repeat calls agree and different
    sentences draw independently under one base seed.
    """
    sent = corpus.sentences[sentence_index]
    if len(sent) == 0:
        raise ValueError(f"sentence {sentence_index} is empty")
    pos = substream(seed, sentence_index).next_below(len(sent))
    return MaskedInstance(
        sentence_index=sentence_index,
        mask_position=pos,
        true_word=sent.tokens[pos].word,
    )


def write_split_file(path, seed: int, split: CorpusSplit) -> None:
    """Write a split as four lines: seed, then train/cal/test index lists."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{seed}\n")
        for part in (split.train, split.cal, split.test):
            fh.write(" ".join(str(i) for i in part) + "\n")


def read_split_file(path) -> tuple[int, CorpusSplit]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) < 4:
        raise ValueError(f"split file {path} has {len(lines)} lines, expected 4")
    seed = int(lines[0])
    train, cal, test = (
        tuple(int(tok) for tok in line.split()) for line in lines[1:4]
    )
    return seed, CorpusSplit(train=train, cal=cal, test=test)
