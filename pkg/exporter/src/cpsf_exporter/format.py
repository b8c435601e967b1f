"""Writer for the CPSF binary score-file format.

Layout, all little-endian:

    header: b"CPSF" | u32 version = 1 | u32 n_labels | u64 n_rows
    row:    u64 example_id | u32 true_label_index | n_labels x f32

A missing true label is stored as the sentinel ``0xFFFFFFFF``.  The
label vocabulary travels in a text sidecar at ``<path>.vocab``, one
label per line in column order.  Every row is validated before anything
touches the disk, and both files are written atomically (temp file +
rename), so a crashed export never leaves a half-written score file.
"""

from __future__ import annotations

import os
import struct
import tempfile
from typing import Iterable, Sequence

import numpy as np

MAGIC = b"CPSF"
VERSION = 1
NONE_TRUTH = 0xFFFFFFFF
SUM_TOL = 1e-3  # absorbs 32-bit rounding of softmax rows
HEADER = struct.Struct("<4sIIQ")
ROW_PREFIX = struct.Struct("<QI")


class RowValidationError(ValueError):
    """A score row breaks a CPSF invariant."""


def validate_labels(labels: Sequence[str]) -> None:
    if not labels:
        raise ValueError("label vocabulary is empty")
    seen = set()
    for label in labels:
        if not label:
            raise ValueError("label vocabulary contains an empty label")
        if "\n" in label or "\r" in label:
            raise ValueError(f"label {label!r} contains a line break")
        if label in seen:
            raise ValueError(f"duplicate label {label!r}")
        seen.add(label)


def validate_row(
    row_no: int, example_id: int, truth: int | None, scores, n_labels: int
) -> np.ndarray:
    """Check one row against the format invariants; returns float32 scores."""
    if not 0 <= int(example_id) < 1 << 64:
        raise RowValidationError(f"row {row_no}: example id {example_id} is not a u64")
    if truth is not None and not 0 <= int(truth) < n_labels:
        raise RowValidationError(
            f"row {row_no}: true label {truth} outside 0..{n_labels - 1}"
        )
    scores = np.asarray(scores, dtype=np.float32)
    if scores.shape != (n_labels,):
        raise RowValidationError(
            f"row {row_no}: expected {n_labels} scores, got shape {scores.shape}"
        )
    if not np.all((scores >= 0.0) & (scores <= 1.0)):
        raise RowValidationError(f"row {row_no}: scores outside [0, 1]")
    total = float(scores.sum(dtype=np.float64))
    if abs(total - 1.0) > SUM_TOL:
        raise RowValidationError(f"row {row_no}: scores sum to {total}, not 1")
    return scores


def write_score_file(
    path, labels: Sequence[str], rows: Iterable[tuple[int, int | None, np.ndarray]]
) -> int:
    """Write ``(example_id, true_label_index, scores)`` rows; returns the count."""
    labels = tuple(str(label) for label in labels)
    validate_labels(labels)
    payload = bytearray()
    n_rows = 0
    for row_no, (example_id, truth, scores) in enumerate(rows):
        scores = validate_row(row_no, example_id, truth, scores, len(labels))
        stored = NONE_TRUTH if truth is None else int(truth)
        payload += ROW_PREFIX.pack(int(example_id), stored)
        payload += scores.tobytes()
        n_rows += 1
    _atomic_write(f"{path}.vocab", ("\n".join(labels) + "\n").encode("utf-8"))
    _atomic_write(
        path, HEADER.pack(MAGIC, VERSION, len(labels), n_rows) + bytes(payload)
    )
    return n_rows


def _atomic_write(path, data: bytes) -> None:
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
