"""Evaluation criteria for forced predictions and conformal sets.

Point-prediction criteria: classification accuracy (CA), two credibility
readings, observed perceptiveness (OP, mean true-label p-value) and
observed fuzziness (OF, mean of the summed incorrect-label p-values).
Set criteria at a fixed epsilon: empirical coverage, proportion of
indecisive sets (PIS, size > 1), accuracy among singleton sets (ACDS,
undefined when no set is a singleton), and mean set size.

Credibility has two readings that coincide only in name:

* ``cred_infimum``: mean of inf{1 - eps : |set at eps| >= 1}, the least
  confidence level at which the set is still nonempty, which works out
  to the mean of (1 - max p);
* ``cred_conventional``: the mean of max p itself, the usual conformal
  credibility.

Both are computed and reported; neither is guessed as "intended".

All aggregation is exact: p-values enter as integer numerators over a
common denominator, sums are integer sums, and a single float division
happens at the end, so results cannot depend on accumulation order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .icp import PredictionSet, PValueVector, min_numerator

CSV_COLUMNS = (
    "model",
    "seed",
    "epsilon",
    "ca",
    "cred_infimum",
    "cred_conventional",
    "op",
    "of",
    "coverage",
    "pis",
    "acds",
    "n_eps",
)


@dataclass(frozen=True)
class PerEpsilonStats:
    epsilon: float
    coverage: float
    pis: float
    acds: float | None  # None when no set has size 1
    n_eps: float


@dataclass(frozen=True)
class MetricsReport:
    ca: float
    cred_infimum: float
    cred_conventional: float
    op: float
    of: float
    per_epsilon: tuple[PerEpsilonStats, ...]


def _as_numerator_matrix(p_matrix: Sequence[PValueVector]) -> tuple[np.ndarray, int]:
    if len(p_matrix) == 0:
        raise ValueError("empty p-value matrix")
    denom = p_matrix[0].denominator
    for i, pv in enumerate(p_matrix):
        if pv.denominator != denom:
            raise ValueError(
                f"row {i} has denominator {pv.denominator}, expected {denom}"
            )
    return np.stack([pv.numerators for pv in p_matrix]), denom


def _check_truths(n_rows: int, truths: Sequence[int]) -> np.ndarray:
    truths = np.asarray(truths, dtype=np.int64)
    if truths.shape != (n_rows,):
        raise ValueError(f"{n_rows} rows but {truths.size} truths")
    return truths


def classification_accuracy(preds: Sequence[int], truths: Sequence[int]) -> float:
    """Proportion of exact matches between forced predictions and truths."""
    preds = np.asarray(preds, dtype=np.int64)
    truths = np.asarray(truths, dtype=np.int64)
    if preds.shape != truths.shape or preds.ndim != 1:
        raise ValueError(f"length mismatch: {preds.shape} vs {truths.shape}")
    if preds.size == 0:
        raise ValueError("no predictions to score")
    return int(np.sum(preds == truths)) / preds.size


def credibility(p_matrix: Sequence[PValueVector]) -> tuple[float, float]:
    """(cred_infimum, cred_conventional); see the module docstring."""
    nums, denom = _as_numerator_matrix(p_matrix)
    max_sum = int(nums.max(axis=1).sum())
    total = nums.shape[0] * denom
    return (total - max_sum) / total, max_sum / total


def observed_perceptiveness(
    p_matrix: Sequence[PValueVector], truths: Sequence[int]
) -> float:
    """Mean p-value of the true label over test rows."""
    nums, denom = _as_numerator_matrix(p_matrix)
    truths = _check_truths(nums.shape[0], truths)
    true_sum = int(nums[np.arange(nums.shape[0]), truths].sum())
    return true_sum / (nums.shape[0] * denom)


def observed_fuzziness(
    p_matrix: Sequence[PValueVector], truths: Sequence[int]
) -> float:
    """Mean over test rows of the *sum* of incorrect-label p-values."""
    nums, denom = _as_numerator_matrix(p_matrix)
    truths = _check_truths(nums.shape[0], truths)
    all_sum = int(nums.sum())
    true_sum = int(nums[np.arange(nums.shape[0]), truths].sum())
    return (all_sum - true_sum) / (nums.shape[0] * denom)


def per_epsilon_stats(
    sets: Sequence[PredictionSet], truths: Sequence[int], epsilon: float
) -> PerEpsilonStats:
    """Coverage, PIS, ACDS and mean size for sets at one epsilon."""
    if len(sets) == 0:
        raise ValueError("no prediction sets to score")
    for i, s in enumerate(sets):
        if s.epsilon != epsilon:
            raise ValueError(
                f"set {i} was built at epsilon {s.epsilon}, expected {epsilon}"
            )
    truths = _check_truths(len(sets), truths)
    covered = singletons = singleton_covered = size_sum = 0
    for s, truth in zip(sets, truths):
        hit = int(truth) in s
        covered += hit
        size_sum += s.size
        if s.size == 1:
            singletons += 1
            singleton_covered += hit
    n = len(sets)
    return PerEpsilonStats(
        epsilon=float(epsilon),
        coverage=covered / n,
        pis=sum(1 for s in sets if s.size > 1) / n,
        acds=None if singletons == 0 else singleton_covered / singletons,
        n_eps=size_sum / n,
    )


def coverage_curve(
    p_matrix: Sequence[PValueVector],
    truths: Sequence[int],
    epsilon_grid: Sequence[float],
) -> list[tuple[float, float]]:
    """(nominal confidence 1 - eps, empirical coverage) along a grid.

    Coverage is evaluated directly from true-label p-values (truth is in
    the set iff p_truth > eps), without materializing any sets.
    """
    nums, denom = _as_numerator_matrix(p_matrix)
    truths = _check_truths(nums.shape[0], truths)
    true_nums = nums[np.arange(nums.shape[0]), truths]
    out = []
    for eps in epsilon_grid:
        m_min = min_numerator(float(eps), denom)
        cov = int(np.sum(true_nums >= m_min)) / nums.shape[0]
        out.append((1.0 - float(eps), cov))
    return out


def _format_value(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics_csv(path, rows: Sequence[dict]) -> None:
    """Write metric rows under the fixed column header; None prints as NA.

    Each row supplies the CSV_COLUMNS keys (model, seed, epsilon, the
    five point criteria and the four set criteria).
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_format_value(row[col]) for col in CSV_COLUMNS])


def report_rows(model: str, seed_label: str, report: MetricsReport) -> list[dict]:
    """Flatten a MetricsReport into one CSV row per epsilon."""
    rows = []
    for st in report.per_epsilon:
        rows.append(
            {
                "model": model,
                "seed": seed_label,
                "epsilon": st.epsilon,
                "ca": report.ca,
                "cred_infimum": report.cred_infimum,
                "cred_conventional": report.cred_conventional,
                "op": report.op,
                "of": report.of,
                "coverage": st.coverage,
                "pis": st.pis,
                "acds": st.acds,
                "n_eps": st.n_eps,
            }
        )
    return rows
