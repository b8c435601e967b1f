"""Score-export jobs: run a model over text and emit a CPSF file.

Two exports are supported.  ``export_mlm_scores`` runs a local
pretrained masked language model over sentences with one designated
mask position each and writes the full softmax row over the model's
token vocabulary.  ``export_pos_scores`` writes per-word label
distributions from a caller-supplied tagging model; no such model ships
with this package, so calling it without one is an unsupported
operation by design.

The conformal engine consumes the output purely through the CPSF file
format; nothing here computes p-values or metrics.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .format import write_score_file

log = logging.getLogger(__name__)

POS_CHUNK_WORDS = 100  # a tagging model never sees more words at once


@dataclass(frozen=True)
class ExportJob:
    """What to score and where to put it."""

    input_path: str
    model: str | None
    out_path: str
    max_len: int = 128
    batch_size: int = 8

    def __post_init__(self):
        if self.max_len < 8:
            raise ValueError(f"max_len must be >= 8, got {self.max_len}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class ExportSummary:
    rows_written: int
    skipped: int
    n_labels: int


class ModelLoadError(RuntimeError):
    """The model identifier could not be resolved to a usable model."""


class UnsupportedOperationError(RuntimeError):
    """The requested export needs a capability this job does not have."""


# ---------------------------------------------------------------------------
# input files


def read_masked_sentences(path) -> list[tuple[int, list[str]]]:
    """Parse ``mask_position<TAB>sentence`` lines; blank lines are skipped.

    The mask position indexes the sentence's whitespace tokens.
    """
    instances = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            pos_text, sep, sentence = line.partition("\t")
            if not sep:
                raise ValueError(
                    f"line {line_no}: expected 'mask_position<TAB>sentence'"
                )
            try:
                pos = int(pos_text)
            except ValueError:
                raise ValueError(
                    f"line {line_no}: mask position {pos_text!r} is not an integer"
                ) from None
            words = sentence.split()
            if not 0 <= pos < len(words):
                raise ValueError(
                    f"line {line_no}: mask position {pos} outside sentence"
                    f" of {len(words)} words"
                )
            instances.append((pos, words))
    return instances


def read_token_lines(path) -> list[list[tuple[str, str | None]]]:
    """One sentence per line; tokens are ``word`` or ``word/TAG`` (last slash).

    Tokens without a parseable word/TAG shape are kept as untagged words.
    """
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            tokens = raw.split()
            if not tokens:
                continue
            sentence = []
            for token in tokens:
                word, sep, tag = token.rpartition("/")
                if sep and word and tag:
                    sentence.append((word, tag))
                else:
                    sentence.append((token, None))
            sentences.append(sentence)
    return sentences


# ---------------------------------------------------------------------------
# masked-LM export


def _load_masked_lm(model_id: str):
    from transformers import AutoModelForMaskedLM, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModelForMaskedLM.from_pretrained(model_id)
    except Exception as exc:
        raise ModelLoadError(f"could not load masked LM {model_id!r}: {exc}") from exc
    model.eval()
    return tokenizer, model


def _vocab_in_id_order(tokenizer) -> list[str]:
    vocab = tokenizer.get_vocab()
    labels: list[str | None] = [None] * len(vocab)
    for token, idx in vocab.items():
        if not 0 <= idx < len(vocab):
            raise ModelLoadError("tokenizer vocabulary ids are not contiguous")
        labels[idx] = token
    if any(label is None for label in labels):
        raise ModelLoadError("tokenizer vocabulary has gaps in its id range")
    return labels


def _truth_index(tokenizer, word: str) -> int | None:
    """A word's identity is its final subtoken; unknown words map to None."""
    ids = tokenizer.encode(word, add_special_tokens=False)
    if not ids or ids[-1] == tokenizer.unk_token_id:
        return None
    return int(ids[-1])


def _encode_masked(tokenizer, words, mask_position, max_len):
    """Token ids for the masked sentence; mask index is None if truncated away."""
    ids = [tokenizer.cls_token_id]
    mask_index = None
    for i, word in enumerate(words):
        if i == mask_position:
            mask_index = len(ids)
            ids.append(tokenizer.mask_token_id)
        else:
            ids.extend(
                tokenizer.encode(word, add_special_tokens=False)
                or [tokenizer.unk_token_id]
            )
    ids.append(tokenizer.sep_token_id)
    if len(ids) > max_len:
        ids = ids[: max_len - 1] + [tokenizer.sep_token_id]
        if mask_index is not None and mask_index >= max_len - 1:
            mask_index = None
    return ids, mask_index


def export_mlm_scores(job: ExportJob) -> ExportSummary:
    """Write one softmax row per masked sentence to ``job.out_path``.

    The true label is the final subtoken of the masked word, or NONE
    when the word is out of the model vocabulary.  Instances whose mask
    position does not survive truncation to ``job.max_len`` are skipped
    with a logged warning and counted in the summary.  Padding every
    sequence to ``max_len`` keeps the output bytes identical at any
    batch size.
    """
    import torch

    if job.model is None:
        raise ModelLoadError("masked-LM export needs a model identifier")
    tokenizer, model = _load_masked_lm(job.model)
    labels = _vocab_in_id_order(tokenizer)
    instances = read_masked_sentences(job.input_path)

    # never pad or truncate past the model's positional capacity
    capacity = getattr(model.config, "max_position_embeddings", None)
    max_len = job.max_len if capacity is None else min(job.max_len, int(capacity))

    encoded = []
    skipped = 0
    for ordinal, (pos, words) in enumerate(instances):
        ids, mask_index = _encode_masked(tokenizer, words, pos, max_len)
        if mask_index is None:
            skipped += 1
            log.warning(
                "instance %d: mask position %d truncated away at max_len=%d",
                ordinal, pos, max_len,
            )
            continue
        encoded.append((ordinal, ids, mask_index, _truth_index(tokenizer, words[pos])))

    rows = []
    for start in range(0, len(encoded), job.batch_size):
        batch = encoded[start : start + job.batch_size]
        input_ids = torch.full(
            (len(batch), max_len), tokenizer.pad_token_id, dtype=torch.long
        )
        attention = torch.zeros((len(batch), max_len), dtype=torch.long)
        for b, (_, ids, _, _) in enumerate(batch):
            input_ids[b, : len(ids)] = torch.tensor(ids, dtype=torch.long)
            attention[b, : len(ids)] = 1
        with torch.no_grad():
            logits = model(input_ids=input_ids, attention_mask=attention).logits
        for b, (ordinal, _, mask_index, truth) in enumerate(batch):
            scores = torch.softmax(logits[b, mask_index], dim=-1).numpy()
            rows.append((ordinal, truth, scores))

    written = write_score_file(job.out_path, labels, rows)
    return ExportSummary(rows_written=written, skipped=skipped, n_labels=len(labels))


# ---------------------------------------------------------------------------
# POS export (caller-supplied tagging model only)


class TaggingModel(Protocol):
    """Anything that maps a word sequence to per-word label distributions."""

    labels: Sequence[str]

    def score_sentence(self, words: Sequence[str]) -> np.ndarray: ...


def export_pos_scores(job: ExportJob, model: TaggingModel | None = None) -> ExportSummary:
    """One CPSF row per word, scored by a supplied tagging model.

    Sentences longer than ``POS_CHUNK_WORDS`` are scored in chunks of
    that size.  Tags present in the input that the model knows become
    true labels; unknown or absent tags are stored as NONE.
    """
    if model is None:
        raise UnsupportedOperationError(
            "no tagging model supplied; POS score export only runs an already"
            " fine-tuned tagger — use the engine's builtin lexical scorer instead"
        )
    labels = tuple(str(label) for label in model.labels)
    index = {label: i for i, label in enumerate(labels)}
    rows = []
    ordinal = 0
    for sentence in read_token_lines(job.input_path):
        words = [word for word, _ in sentence]
        parts = [
            np.asarray(
                model.score_sentence(words[i : i + POS_CHUNK_WORDS]), dtype=np.float32
            )
            for i in range(0, len(words), POS_CHUNK_WORDS)
        ]
        scores = np.concatenate(parts, axis=0)
        if scores.shape != (len(words), len(labels)):
            raise ValueError(
                f"tagging model returned shape {scores.shape} for"
                f" {len(words)} words x {len(labels)} labels"
            )
        for (word, tag), row in zip(sentence, scores):
            rows.append((ordinal, index.get(tag), row))
            ordinal += 1
    written = write_score_file(job.out_path, labels, rows)
    return ExportSummary(rows_written=written, skipped=0, n_labels=len(labels))
