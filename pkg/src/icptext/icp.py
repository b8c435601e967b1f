"""Inductive conformal prediction core: calibration, p-values, sets.

The nonconformity score of a label is one minus its softmax probability.
Calibration collects the scores of the true labels of a held-out set;
the p-value of a candidate score a* against calibration scores a_1..a_n
is

    p = (#{j : a_j >= a*} + 1) / (n + 1)

with deterministic ``>=`` tie counting (no randomized smoothing), and a
label enters the prediction set iff p > epsilon, strictly.  Sets may
therefore be empty, and empirical coverage sits at or slightly above
1 - epsilon; both are accepted consequences of the deterministic rule.

P-values are carried as exact integer pairs (numerator, n + 1); floats
appear only at reporting boundaries.  Thresholding against a float
epsilon is also exact: membership numerator >= floor(epsilon*(n+1)) + 1,
evaluated in exact rational arithmetic on the binary value of epsilon.

A transductive reference implementation (refit-per-candidate over a
small bag) is included for oracle testing; it is exponential in spirit
and intended for toy instances only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .scorefile import ScoredExample

__all__ = [
    "CalibrationModel",
    "PValueVector",
    "PredictionSet",
    "nonconformity",
    "calibrate",
    "p_value",
    "p_vector",
    "p_numerator_matrix",
    "min_numerator",
    "prediction_set",
    "tcp_prediction_set",
    "format_prediction_set_line",
    "write_calibration_file",
    "read_calibration_file",
]


@dataclass(frozen=True, eq=False)
class CalibrationModel:
    """Sorted calibration nonconformity scores."""

    alphas: np.ndarray  # float64, ascending, values in [0, 1]

    def __post_init__(self):
        arr = np.sort(np.asarray(self.alphas, dtype=np.float64))
        if arr.size and (arr[0] < 0.0 or arr[-1] > 1.0):
            raise ValueError("calibration scores must lie in [0, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "alphas", arr)

    @property
    def n(self) -> int:
        return int(self.alphas.size)

    def tail_count(self, alpha_star: float) -> int:
        """#{j : alpha_j >= alpha_star}, by binary search on sorted scores."""
        return self.n - int(np.searchsorted(self.alphas, alpha_star, side="left"))


@dataclass(frozen=True, eq=False)
class PValueVector:
    """Per-label p-values as exact numerators over a common denominator.

    ``numerators[s] / denominator`` is the p-value of label s; every
    numerator lies in [1, denominator], so every p-value is a positive
    multiple of 1/(n+1).
    """

    numerators: np.ndarray  # int64
    denominator: int

    def __post_init__(self):
        arr = np.asarray(self.numerators, dtype=np.int64)
        if arr.size and (arr.min() < 1 or arr.max() > self.denominator):
            raise ValueError("p-value numerators must lie in [1, denominator]")
        arr.flags.writeable = False
        object.__setattr__(self, "numerators", arr)

    def __len__(self) -> int:
        return int(self.numerators.size)

    def to_floats(self) -> np.ndarray:
        return self.numerators / float(self.denominator)


@dataclass(frozen=True)
class PredictionSet:
    """Labels whose p-value strictly exceeds epsilon."""

    epsilon: float
    member_indices: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.member_indices)

    def __contains__(self, label_index: int) -> bool:
        return label_index in self.member_indices


def nonconformity(row: np.ndarray, label_index: int) -> float:
    """1 - row[label_index]; the score of a candidate label."""
    row = np.asarray(row)
    if not 0 <= label_index < row.shape[-1]:
        raise IndexError(
            f"label index {label_index} out of range for {row.shape[-1]} labels"
        )
    return 1.0 - float(row[label_index])


def calibrate(rows: Sequence[ScoredExample]) -> CalibrationModel:
    """Collect sorted true-label nonconformity scores from calibration rows.

    Every row must carry a true label; ties are preserved (multiset
    semantics).  Raises ValueError naming the first offending row.
    """
    alphas = np.empty(len(rows), dtype=np.float64)
    for i, row in enumerate(rows):
        if row.true_label_index is None:
            raise ValueError(
                f"calibration row {i} (example_id {row.example_id}) has no true label"
            )
        alphas[i] = 1.0 - float(row.scores[row.true_label_index])
    return CalibrationModel(alphas=alphas)


def p_value(cal: CalibrationModel, alpha_star: float) -> float:
    """(tail count + 1) / (n + 1); equals the naive linear count exactly."""
    if not 0.0 <= alpha_star <= 1.0:
        raise ValueError(f"alpha_star {alpha_star} outside [0, 1]")
    return (cal.tail_count(alpha_star) + 1) / (cal.n + 1)


def p_vector(cal: CalibrationModel, row: np.ndarray) -> PValueVector:
    """P-values for every label of one score row, in O(|labels| log n)."""
    alpha_star = 1.0 - np.asarray(row, dtype=np.float64)
    idx = np.searchsorted(cal.alphas, alpha_star, side="left")
    return PValueVector(
        numerators=(cal.n - idx) + 1,
        denominator=cal.n + 1,
    )


def p_numerator_matrix(cal: CalibrationModel, scores: np.ndarray) -> np.ndarray:
    """Row-wise p-value numerators for a 2D score matrix (shared denominator)."""
    scores = np.asarray(scores, dtype=np.float64)
    idx = np.searchsorted(cal.alphas, 1.0 - scores.ravel(), side="left")
    return ((cal.n - idx) + 1).reshape(scores.shape).astype(np.int64)


def min_numerator(epsilon: float, denominator: int) -> int:
    """Smallest numerator m with m/denominator > epsilon, exactly.

    Exactness matters at lattice points: the comparison is performed on
    the binary rational value of epsilon, so e.g. p = 0.25 is excluded
    at epsilon = 0.25.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon {epsilon} outside [0, 1)")
    return math.floor(Fraction(float(epsilon)) * denominator) + 1


def prediction_set(pv: PValueVector, epsilon: float) -> PredictionSet:
    """All labels with p-value strictly greater than epsilon (may be empty)."""
    m_min = min_numerator(epsilon, pv.denominator)
    members = np.nonzero(pv.numerators >= m_min)[0]
    return PredictionSet(
        epsilon=float(epsilon),
        member_indices=tuple(int(i) for i in members),
    )


def tcp_prediction_set(
    bag: Sequence[tuple],
    test_x,
    candidates: Sequence,
    measure: Callable[[list, tuple], float],
    epsilon: float,
) -> PredictionSet:
    """Transductive conformal set over a small bag, refit per candidate.

    For each candidate label y, the labeled test point (test_x, y) is
    appended to the bag and every element z_i of the augmented bag is
    scored as measure(bag_without_z_i, z_i).  The candidate is kept iff

        #{i : alpha_i >= alpha_test} / (n + 1) > epsilon

    (note: the test point counts itself, so no +1 in the numerator).
    ``measure`` must be a pure function.  Member indices point into
    ``candidates``.  Cost is O(|candidates| * n * cost(measure)); use on
    toy instances only.
    """
    if not bag:
        raise ValueError("bag must be non-empty")
    denom = len(bag) + 1
    m_min = min_numerator(epsilon, denom)
    members = []
    for ci, label in enumerate(candidates):
        augmented = list(bag) + [(test_x, label)]
        alphas = [
            measure(augmented[:i] + augmented[i + 1:], augmented[i])
            for i in range(denom)
        ]
        count = sum(1 for a in alphas if a >= alphas[-1])
        if count >= m_min:
            members.append(ci)
    return PredictionSet(epsilon=float(epsilon), member_indices=tuple(members))


def format_prediction_set_line(
    example_id: int, epsilon: float, labels: Sequence[str]
) -> str:
    """``example_id<TAB>epsilon<TAB>label,label,...`` (empty field = empty set)."""
    return f"{example_id}\t{epsilon!r}\t{','.join(labels)}"


def write_calibration_file(path, cal: CalibrationModel) -> None:
    """One ascending score per line; ``repr`` floats round-trip exactly."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for a in cal.alphas:
            fh.write(f"{float(a)!r}\n")


def read_calibration_file(path) -> CalibrationModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    try:
        alphas = [float(line) for line in lines if line.strip()]
    except ValueError:
        raise ValueError(f"calibration file {path} contains a non-numeric line") from None
    return CalibrationModel(alphas=np.asarray(alphas, dtype=np.float64))
