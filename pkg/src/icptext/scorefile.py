"""The CPSF binary score-file format and its vocabulary sidecar.

CPSF decouples the conformal engine from whatever produced the scores: a
file is a label vocabulary plus dense rows of per-label probabilities,
one row per scored example.  Layout (little-endian throughout)::

    header:  magic b"CPSF" | u32 version=1 | u32 n_labels | u64 n_rows
    row:     u64 example_id | u32 true_label_index | n_labels * f32

``true_label_index`` 0xFFFFFFFF is the NONE sentinel (example has no
usable true label).  The vocabulary lives in a sibling UTF-8 text file
``<path>.vocab``, one label per line, index = 0-based line number, so it
stays human-inspectable.

Files are written atomically (temp file + rename).  Reads validate the
header and every row invariant, and bound all allocations by the actual
file size, so a corrupted header cannot trigger a huge allocation.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

MAGIC = b"CPSF"
VERSION = 1
NONE_LABEL = 0xFFFFFFFF
HEADER = struct.Struct("<4sIIQ")  # magic, version, n_labels, n_rows
SCORE_SUM_TOL = 1e-3  # accommodates 32-bit rounding of softmax rows


class ScoreFileError(ValueError):
    """Base class for CPSF format violations."""


class ScoreFileMagicError(ScoreFileError):
    """The file does not start with the CPSF magic bytes."""


class ScoreFileVersionError(ScoreFileError):
    """The file declares an unsupported format version."""


class ScoreFileTruncatedError(ScoreFileError):
    """The file is shorter than its header claims."""


class ScoreRowError(ScoreFileError):
    """A row violates the score-vector invariants."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class LabelVocabulary:
    """Ordered, duplicate-free label strings; index is file-stable."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("empty label vocabulary")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate labels in vocabulary")
        for lab in self.labels:
            if not lab or "\n" in lab or "\r" in lab:
                raise ValueError(f"label {lab!r} is empty or contains a newline")

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class ScoredExample:
    """One scored example: id, optional true-label index, probability row."""

    example_id: int
    true_label_index: int | None
    scores: np.ndarray  # float32, shape (n_labels,)

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=np.float32)
        if arr is self.scores and arr.flags.writeable:
            arr = arr.copy()  # never freeze a caller-owned buffer in place
        arr.flags.writeable = False
        object.__setattr__(self, "scores", arr)

    def validate(self, n_labels: int, row: int) -> None:
        """Check all invariants against a vocabulary size; raise ScoreRowError."""
        if not 0 <= self.example_id < 2**64:
            raise ScoreRowError(row, f"example_id {self.example_id} outside u64 range")
        if self.true_label_index is not None and not (
            0 <= self.true_label_index < n_labels
        ):
            raise ScoreRowError(
                row, f"true_label_index {self.true_label_index} not in [0, {n_labels})"
            )
        if self.scores.shape != (n_labels,):
            raise ScoreRowError(
                row, f"score vector has shape {self.scores.shape}, expected ({n_labels},)"
            )
        if not np.all((self.scores >= 0.0) & (self.scores <= 1.0)):
            bad = int(np.argmax((self.scores < 0.0) | (self.scores > 1.0)))
            raise ScoreRowError(
                row, f"score {self.scores[bad]} at label {bad} outside [0, 1]"
            )
        total = float(self.scores.astype(np.float64).sum())
        if abs(total - 1.0) > SCORE_SUM_TOL:
            raise ScoreRowError(row, f"scores sum to {total}, not 1 ± {SCORE_SUM_TOL}")

    def __eq__(self, other):
        if not isinstance(other, ScoredExample):
            return NotImplemented
        return (
            self.example_id == other.example_id
            and self.true_label_index == other.true_label_index
            and self.scores.shape == other.scores.shape
            and bool(np.all(self.scores.view(np.uint32) == other.scores.view(np.uint32)))
        )


def _row_dtype(n_labels: int) -> np.dtype:
    return np.dtype(
        [("id", "<u8"), ("true", "<u4"), ("scores", "<f4", (n_labels,))]
    )


def _atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".cpsf.tmp.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def vocab_sidecar_path(path) -> str:
    return f"{path}.vocab"


def write_score_file(path, vocab: LabelVocabulary, rows: list[ScoredExample]) -> None:
    """Write a CPSF file and its ``.vocab`` sidecar atomically.

    All rows are validated against the vocabulary first; output bytes are
    a pure function of the input.
    """
    n_labels = len(vocab)
    for i, row in enumerate(rows):
        row.validate(n_labels, i)

    arr = np.empty(len(rows), dtype=_row_dtype(n_labels))
    for i, row in enumerate(rows):
        arr[i]["id"] = row.example_id
        arr[i]["true"] = NONE_LABEL if row.true_label_index is None else row.true_label_index
        arr[i]["scores"] = row.scores

    sidecar = "".join(lab + "\n" for lab in vocab.labels)
    _atomic_write(vocab_sidecar_path(path), sidecar.encode("utf-8"))
    header = HEADER.pack(MAGIC, VERSION, n_labels, len(rows))
    _atomic_write(os.fspath(path), header + arr.tobytes())


def read_vocabulary(path) -> LabelVocabulary:
    with open(path, encoding="utf-8") as fh:
        labels = fh.read().splitlines()
    return LabelVocabulary(labels=tuple(labels))


def read_score_file(path) -> tuple[LabelVocabulary, list[ScoredExample]]:
    """Read and fully validate a CPSF file; returns exactly what was written."""
    with open(path, "rb") as fh:
        buf = fh.read()

    if len(buf) < HEADER.size:
        raise ScoreFileTruncatedError(
            f"{len(buf)} bytes is too short for the {HEADER.size}-byte header"
        )
    magic, version, n_labels, n_rows = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise ScoreFileMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise ScoreFileVersionError(f"unsupported version {version}")
    if n_labels == 0:
        raise ScoreFileError("header declares zero labels")

    row_size = 8 + 4 + 4 * n_labels
    expected = HEADER.size + n_rows * row_size
    if len(buf) < expected:
        raise ScoreFileTruncatedError(
            f"header claims {n_rows} rows of {n_labels} labels "
            f"({expected} bytes), file has {len(buf)}"
        )
    if len(buf) > expected:
        raise ScoreFileError(f"{len(buf) - expected} trailing bytes after last row")

    vocab = read_vocabulary(vocab_sidecar_path(path))
    if len(vocab) != n_labels:
        raise ScoreFileError(
            f"header declares {n_labels} labels, sidecar has {len(vocab)}"
        )

    arr = np.frombuffer(buf, dtype=_row_dtype(n_labels), count=n_rows, offset=HEADER.size)
    rows = []
    for i in range(n_rows):
        true = int(arr[i]["true"])
        row = ScoredExample(
            example_id=int(arr[i]["id"]),
            true_label_index=None if true == NONE_LABEL else true,
            scores=arr[i]["scores"],
        )
        row.validate(n_labels, i)
        rows.append(row)
    return vocab, rows
