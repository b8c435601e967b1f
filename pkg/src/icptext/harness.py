"""Experiment orchestration: splits, scoring, evaluation, CSV outputs.

An experiment repeats the same protocol over several seeded splits:
split sentences, fit (or load) a scorer, calibrate on the calibration
split, evaluate the test split, and emit per-repetition and averaged
metrics plus histogram and coverage-curve CSVs.  Everything is a pure
function of the configuration, so outputs are byte-identical across
runs and across worker counts; repetitions may run concurrently and are
merged single-threaded in repetition order.

Also here: the synthetic exchangeable-data validity study and the
transcript gap-filling demo (``<UNK>`` tokens predicted one at a time).
"""

from __future__ import annotations

import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence

import numpy as np

from .corpus import (
    CorpusSplit,
    SplitSpec,
    TaggedCorpus,
    mask_one_word,
    parse_tagged_corpus,
    split_corpus,
)
from .icp import (
    CalibrationModel,
    PredictionSet,
    calibrate,
    min_numerator,
    p_numerator_matrix,
    p_vector,
    prediction_set,
)
from .metrics import (
    MetricsReport,
    PerEpsilonStats,
    report_rows,
    write_metrics_csv,
)
from .models import (
    DEFAULT_CASE_FOLD,
    DEFAULT_INFILLER_K,
    DEFAULT_LAMBDAS,
    DEFAULT_TAGGER_K,
    DEFAULT_VOCAB_CAP,
    NGramInfiller,
    fit_lexical_tagger,
    fit_ngram_infiller,
    forced_label,
    score_mask,
    score_word,
)
from .scorefile import ScoredExample, read_score_file

log = logging.getLogger(__name__)

GAP_TOKEN = "<UNK>"
HIST_BINS = 50
ZOOM_LIMIT = 2e-4  # zoomed histogram covers scores below this
DEFAULT_EPSILONS = {
    "pos": (0.001, 0.01, 0.05),
    "mlm": (0.05, 0.1, 0.2, 0.25),
}
DEFAULT_GRID = tuple(i / 100 for i in range(1, 100))


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment run depends on; validated on construction."""

    corpus: str
    task: str  # "pos" | "mlm"
    scorer: str  # "lexical" | "ngram" | "external"
    out_dir: str
    score_file: str | None = None
    train_frac: float = 0.8
    cal_frac: float = 0.1
    test_frac: float = 0.1
    seed: int = 0
    repetitions: int = 5
    epsilons: tuple[float, ...] = ()
    epsilon_grid: tuple[float, ...] = DEFAULT_GRID
    cal_sentence_cap: int = 1300
    test_sentence_cap: int = 1000
    tagger_k: float = DEFAULT_TAGGER_K
    case_fold: bool = DEFAULT_CASE_FOLD
    lambda_uni: float = DEFAULT_LAMBDAS[0]
    lambda_left: float = DEFAULT_LAMBDAS[1]
    lambda_right: float = DEFAULT_LAMBDAS[2]
    infiller_k: float = DEFAULT_INFILLER_K
    vocab_cap: int = DEFAULT_VOCAB_CAP
    workers: int = 1

    def __post_init__(self):
        if self.task not in ("pos", "mlm"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.scorer not in ("lexical", "ngram", "external"):
            raise ValueError(f"unknown scorer {self.scorer!r}")
        if self.scorer == "lexical" and self.task != "pos":
            raise ValueError("the lexical scorer only supports the pos task")
        if self.scorer == "ngram" and self.task != "mlm":
            raise ValueError("the ngram scorer only supports the mlm task")
        if self.scorer == "external" and not self.score_file:
            raise ValueError("scorer 'external' requires score_file")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.cal_sentence_cap < 1 or self.test_sentence_cap < 1:
            raise ValueError("sentence caps must be >= 1")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if not self.epsilons:
            object.__setattr__(self, "epsilons", DEFAULT_EPSILONS[self.task])

    @property
    def model_name(self) -> str:
        return f"{self.scorer}-{self.task}"

    @property
    def lambdas(self) -> tuple[float, float, float]:
        return (self.lambda_uni, self.lambda_left, self.lambda_right)


_CONFIG_PARSERS = {
    "corpus": str,
    "task": str,
    "scorer": str,
    "score_file": str,
    "out_dir": str,
    "train_frac": float,
    "cal_frac": float,
    "test_frac": float,
    "seed": int,
    "repetitions": int,
    "epsilons": lambda s: tuple(float(x) for x in s.split(",") if x.strip()),
    "epsilon_grid": lambda s: tuple(float(x) for x in s.split(",") if x.strip()),
    "cal_sentence_cap": int,
    "test_sentence_cap": int,
    "tagger_k": float,
    "case_fold": lambda s: {"true": True, "false": False}[s.lower()],
    "lambda_uni": float,
    "lambda_left": float,
    "lambda_right": float,
    "infiller_k": float,
    "vocab_cap": int,
    "workers": int,
}


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    values = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {line_no}: expected 'key = value'")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _CONFIG_PARSERS:
            raise ValueError(f"config line {line_no}: unknown key {key!r}")
        values[key] = _CONFIG_PARSERS[key](raw)
    return values


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Build a config from a key-value file plus CLI-style overrides."""
    with open(path, encoding="utf-8") as fh:
        values = parse_config_text(fh.read())
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


# ---------------------------------------------------------------------------
# synthetic exchangeable data


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator settings for the synthetic validity study.

    Examples are iid (hence exchangeable): the class is uniform over
    ``n_classes`` and the score row is a softmax of a one-hot signal
    plus Gaussian noise, so scores are continuous and calibration is
    almost surely tie-free.  The known generative scorer needs no
    training, so ``n_train`` is carried for bookkeeping only.
    """

    n_classes: int
    noise_scale: float
    n_train: int
    n_cal: int
    n_test: int
    seed: int
    signal: float = 3.0

    def __post_init__(self):
        for name in ("n_classes", "n_train", "n_cal", "n_test"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def generate_synthetic(
    spec: SyntheticSpec,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Draw (cal_scores, cal_truths, test_scores, test_truths)."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n_cal + spec.n_test
    truths = rng.integers(0, spec.n_classes, size=n)
    logits = rng.normal(0.0, spec.noise_scale, size=(n, spec.n_classes))
    logits[np.arange(n), truths] += spec.signal
    logits -= logits.max(axis=1, keepdims=True)
    scores = np.exp(logits)
    scores /= scores.sum(axis=1, keepdims=True)
    return (
        scores[: spec.n_cal],
        truths[: spec.n_cal],
        scores[spec.n_cal:],
        truths[spec.n_cal:],
    )


def run_synthetic_validity(
    spec: SyntheticSpec,
    epsilons: Sequence[float],
    repetitions: int = 1,
) -> list[dict]:
    """Empirical coverage per epsilon with binomial standard errors.

    Repetition r redraws everything under seed ``spec.seed + r``; the
    returned rows carry one entry per (repetition, epsilon) plus a
    ``summary`` row per epsilon averaging the repetitions.
    """
    rows = []
    by_eps: dict[float, list[float]] = {float(e): [] for e in epsilons}
    for r in range(repetitions):
        rep_spec = replace(spec, seed=spec.seed + r)
        cal_scores, cal_truths, test_scores, test_truths = generate_synthetic(rep_spec)
        cal = CalibrationModel(
            alphas=1.0 - cal_scores[np.arange(rep_spec.n_cal), cal_truths]
        )
        nums = p_numerator_matrix(cal, test_scores)
        true_nums = nums[np.arange(nums.shape[0]), test_truths]
        for eps in epsilons:
            m_min = min_numerator(float(eps), cal.n + 1)
            cov = int(np.sum(true_nums >= m_min)) / nums.shape[0]
            stderr = math.sqrt(cov * (1.0 - cov) / nums.shape[0])
            rows.append(
                {"seed": rep_spec.seed, "epsilon": float(eps), "coverage": cov, "stderr": stderr}
            )
            by_eps[float(eps)].append(cov)
    for eps, covs in by_eps.items():
        mean = math.fsum(covs) / len(covs)
        rows.append(
            {
                "seed": "summary",
                "epsilon": eps,
                "coverage": mean,
                "stderr": math.sqrt(mean * (1.0 - mean) / (spec.n_test * repetitions)),
            }
        )
    return rows


def write_synthetic_csv(path, rows: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("seed,epsilon,coverage,stderr\n")
        for row in rows:
            fh.write(
                f"{row['seed']},{row['epsilon']!r},{row['coverage']!r},{row['stderr']!r}\n"
            )


# ---------------------------------------------------------------------------
# streaming evaluation


def _chunk_rows_for(n_labels: int) -> int:
    return max(1, min(8192, 4_000_000 // max(1, n_labels)))


def _evaluate_stream(
    cal: CalibrationModel,
    chunks: Iterable[tuple[np.ndarray, np.ndarray]],
    epsilons: Sequence[float],
    grid: Sequence[float],
) -> tuple[MetricsReport, dict[float, dict[int, int]], list[tuple[float, float]], int]:
    """Fold (score-matrix, truths) chunks into a MetricsReport.

    All accumulators are integers over the common p-value denominator,
    so the result is independent of chunking and of evaluation order.
    """
    denom = cal.n + 1
    eps_min = {float(e): min_numerator(float(e), denom) for e in epsilons}
    grid_min = np.array([min_numerator(float(g), denom) for g in grid], dtype=np.int64)

    n_rows = 0
    ca_hits = 0
    sum_true = sum_max = sum_all = 0
    per_eps = {
        e: {"covered": 0, "size_sum": 0, "singletons": 0, "singleton_hits": 0, "indecisive": 0}
        for e in eps_min
    }
    size_hist: dict[float, dict[int, int]] = {e: {} for e in eps_min}
    grid_covered = np.zeros(len(grid), dtype=np.int64)

    for scores, truths in chunks:
        scores = np.asarray(scores, dtype=np.float64)
        truths = np.asarray(truths, dtype=np.int64)
        rows = scores.shape[0]
        if rows == 0:
            continue
        n_rows += rows
        ca_hits += int(np.sum(np.argmax(scores, axis=1) == truths))
        nums = p_numerator_matrix(cal, scores)
        row_idx = np.arange(rows)
        true_nums = nums[row_idx, truths]
        sum_true += int(true_nums.sum())
        sum_max += int(nums.max(axis=1).sum())
        sum_all += int(nums.sum())
        for e, m_min in eps_min.items():
            member = nums >= m_min
            sizes = member.sum(axis=1)
            hit = true_nums >= m_min
            acc = per_eps[e]
            acc["covered"] += int(hit.sum())
            acc["size_sum"] += int(sizes.sum())
            acc["indecisive"] += int(np.sum(sizes > 1))
            single = sizes == 1
            acc["singletons"] += int(single.sum())
            acc["singleton_hits"] += int(np.sum(single & hit))
            for size, count in zip(*np.unique(sizes, return_counts=True)):
                size_hist[e][int(size)] = size_hist[e].get(int(size), 0) + int(count)
        grid_covered += (true_nums[:, None] >= grid_min[None, :]).sum(axis=0)

    if n_rows == 0:
        raise ValueError("evaluation stream produced no rows")

    per_epsilon = tuple(
        PerEpsilonStats(
            epsilon=e,
            coverage=acc["covered"] / n_rows,
            pis=acc["indecisive"] / n_rows,
            acds=None
            if acc["singletons"] == 0
            else acc["singleton_hits"] / acc["singletons"],
            n_eps=acc["size_sum"] / n_rows,
        )
        for e, acc in per_eps.items()
    )
    report = MetricsReport(
        ca=ca_hits / n_rows,
        cred_infimum=(n_rows * denom - sum_max) / (n_rows * denom),
        cred_conventional=sum_max / (n_rows * denom),
        op=sum_true / (n_rows * denom),
        of=(sum_all - sum_true) / (n_rows * denom),
        per_epsilon=per_epsilon,
    )
    curve = [
        (1.0 - float(g), int(cov) / n_rows) for g, cov in zip(grid, grid_covered)
    ]
    return report, size_hist, curve, n_rows


# ---------------------------------------------------------------------------
# per-task scoring streams


def _token_offsets(corpus: TaggedCorpus) -> list[int]:
    offsets, total = [], 0
    for sent in corpus.sentences:
        offsets.append(total)
        total += len(sent)
    return offsets


def _pos_cal_alphas(corpus, tagger, indices) -> np.ndarray:
    alphas = []
    for si in indices:
        for tok in corpus.sentences[si].tokens:
            s = score_word(tagger, tok.word)[corpus.tag_index(tok.tag)]
            alphas.append(1.0 - float(s))
    return np.asarray(alphas, dtype=np.float64)


def _pos_test_chunks(corpus, tagger, indices) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    chunk_rows = _chunk_rows_for(tagger.q)
    words: list[str] = []
    truths: list[int] = []
    for si in indices:
        for tok in corpus.sentences[si].tokens:
            words.append(tok.word)
            truths.append(corpus.tag_index(tok.tag))
            if len(words) == chunk_rows:
                yield np.stack([score_word(tagger, w) for w in words]), np.array(truths)
                words, truths = [], []
    if words:
        yield np.stack([score_word(tagger, w) for w in words]), np.array(truths)


def _mlm_instances(corpus, infiller: NGramInfiller, indices, cap, mask_seed):
    """Yield (sentence_index, left, right, target_index); count drops.

    Instances whose true word is outside the infiller vocabulary are
    dropped; the filter depends only on the instance itself, so applying
    it to calibration and test alike preserves exchangeability.
    """
    kept, dropped = [], 0
    for si in indices[:cap]:
        inst = mask_one_word(corpus, si, mask_seed)
        tgt = infiller.target_index(inst.true_word)
        if tgt is None:
            dropped += 1
            continue
        toks = corpus.sentences[si].tokens
        left = toks[inst.mask_position - 1].word if inst.mask_position > 0 else None
        right = (
            toks[inst.mask_position + 1].word
            if inst.mask_position + 1 < len(toks)
            else None
        )
        kept.append((si, left, right, tgt))
    return kept, dropped


def _mlm_chunks(infiller, instances) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    chunk_rows = _chunk_rows_for(len(infiller.vocab))
    for start in range(0, len(instances), chunk_rows):
        batch = instances[start:start + chunk_rows]
        scores = np.stack([score_mask(infiller, l, r) for _, l, r, _ in batch])
        truths = np.array([tgt for _, _, _, tgt in batch], dtype=np.int64)
        yield scores, truths


def _external_rows(
    rows: Sequence[ScoredExample], wanted_ids: Sequence[int]
) -> tuple[list[ScoredExample], int]:
    """Select rows by example id, skipping ids without a usable row.

    Both missing ids and rows without a true label are dropped; the
    criterion is intrinsic to the example, symmetric across splits.
    """
    by_id = {row.example_id: row for row in rows}
    kept, dropped = [], 0
    for ex_id in wanted_ids:
        row = by_id.get(ex_id)
        if row is None or row.true_label_index is None:
            dropped += 1
            continue
        kept.append(row)
    return kept, dropped


def _scored_chunks(rows: Sequence[ScoredExample], n_labels: int):
    chunk_rows = _chunk_rows_for(n_labels)
    for start in range(0, len(rows), chunk_rows):
        batch = rows[start:start + chunk_rows]
        scores = np.stack([r.scores for r in batch]).astype(np.float64)
        truths = np.array([r.true_label_index for r in batch], dtype=np.int64)
        yield scores, truths


# ---------------------------------------------------------------------------
# the experiment protocol


@dataclass(frozen=True, eq=False)
class RepOutcome:
    rep: int
    seed: int
    report: MetricsReport
    cal_alphas: np.ndarray
    size_hist: dict
    curve: list
    n_cal: int
    n_test: int
    dropped_cal: int
    dropped_test: int


@dataclass(frozen=True)
class ExperimentResult:
    out_dir: str
    outcomes: tuple[RepOutcome, ...]
    failures: tuple[tuple[int, str], ...]  # (rep, diagnostic)


def _run_rep(corpus: TaggedCorpus, config: ExperimentConfig, rep: int) -> RepOutcome:
    seed = config.seed + rep
    split = split_corpus(
        corpus,
        SplitSpec(
            train_frac=config.train_frac,
            cal_frac=config.cal_frac,
            test_frac=config.test_frac,
            seed=seed,
        ),
    )
    dropped_cal = dropped_test = 0

    if config.scorer == "lexical":
        tagger = fit_lexical_tagger(
            (corpus.sentences[i] for i in split.train),
            corpus.label_set,
            k=config.tagger_k,
            case_fold=config.case_fold,
        )
        cal_alphas = _pos_cal_alphas(corpus, tagger, split.cal)
        chunks = _pos_test_chunks(corpus, tagger, split.test)
    elif config.scorer == "ngram":
        infiller = fit_ngram_infiller(
            (corpus.sentences[i] for i in split.train),
            lambdas=config.lambdas,
            k=config.infiller_k,
            vocab_cap=config.vocab_cap,
        )
        cal_inst, dropped_cal = _mlm_instances(
            corpus, infiller, split.cal, config.cal_sentence_cap, config.seed
        )
        test_inst, dropped_test = _mlm_instances(
            corpus, infiller, split.test, config.test_sentence_cap, config.seed
        )
        if not cal_inst or not test_inst:
            raise ValueError(f"repetition {rep}: empty calibration or test set after masking")
        cal_alphas = np.array(
            [
                1.0 - score_mask(infiller, l, r)[tgt]
                for _, l, r, tgt in cal_inst
            ],
            dtype=np.float64,
        )
        chunks = _mlm_chunks(infiller, test_inst)
    else:  # external score file
        _, rows = read_score_file(config.score_file)
        if config.task == "mlm":
            cal_ids = list(split.cal[: config.cal_sentence_cap])
            test_ids = list(split.test[: config.test_sentence_cap])
        else:
            offsets = _token_offsets(corpus)
            cal_ids = [
                offsets[si] + t
                for si in split.cal
                for t in range(len(corpus.sentences[si]))
            ]
            test_ids = [
                offsets[si] + t
                for si in split.test
                for t in range(len(corpus.sentences[si]))
            ]
        cal_rows, dropped_cal = _external_rows(rows, cal_ids)
        test_rows, dropped_test = _external_rows(rows, test_ids)
        if not cal_rows or not test_rows:
            raise ValueError(
                f"repetition {rep}: score file covers no calibration or test examples"
            )
        n_labels = cal_rows[0].scores.shape[0]
        cal_alphas = np.array(
            [1.0 - float(r.scores[r.true_label_index]) for r in cal_rows]
        )
        chunks = _scored_chunks(test_rows, n_labels)

    cal = CalibrationModel(alphas=cal_alphas)
    report, size_hist, curve, n_test = _evaluate_stream(
        cal, chunks, config.epsilons, config.epsilon_grid
    )
    return RepOutcome(
        rep=rep,
        seed=seed,
        report=report,
        cal_alphas=cal.alphas,
        size_hist=size_hist,
        curve=curve,
        n_cal=cal.n,
        n_test=n_test,
        dropped_cal=dropped_cal,
        dropped_test=dropped_test,
    )


def _write_histogram_csv(path, values: np.ndarray, lo: float, hi: float) -> None:
    counts, edges = np.histogram(values, bins=HIST_BINS, range=(lo, hi))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("bin_lo,bin_hi,count\n")
        for i in range(HIST_BINS):
            fh.write(f"{float(edges[i])!r},{float(edges[i + 1])!r},{int(counts[i])}\n")


def _write_set_size_csv(path, size_hist: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("epsilon,size,count\n")
        for eps in sorted(size_hist):
            for size in sorted(size_hist[eps]):
                fh.write(f"{eps!r},{size},{size_hist[eps][size]}\n")


def _write_curve_csv(path, curve: Sequence[tuple[float, float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("nominal_confidence,empirical_coverage\n")
        for nominal, empirical in curve:
            fh.write(f"{nominal!r},{empirical!r}\n")


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values)


def _summary_rows(config: ExperimentConfig, outcomes: Sequence[RepOutcome]) -> list[dict]:
    rows = []
    for ei, eps in enumerate(config.epsilons):
        acds_vals = [
            o.report.per_epsilon[ei].acds
            for o in outcomes
            if o.report.per_epsilon[ei].acds is not None
        ]
        rows.append(
            {
                "model": config.model_name,
                "seed": "summary",
                "epsilon": float(eps),
                "ca": _mean([o.report.ca for o in outcomes]),
                "cred_infimum": _mean([o.report.cred_infimum for o in outcomes]),
                "cred_conventional": _mean(
                    [o.report.cred_conventional for o in outcomes]
                ),
                "op": _mean([o.report.op for o in outcomes]),
                "of": _mean([o.report.of for o in outcomes]),
                "coverage": _mean(
                    [o.report.per_epsilon[ei].coverage for o in outcomes]
                ),
                "pis": _mean([o.report.per_epsilon[ei].pis for o in outcomes]),
                "acds": _mean(acds_vals) if acds_vals else None,
                "n_eps": _mean([o.report.per_epsilon[ei].n_eps for o in outcomes]),
            }
        )
    return rows


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run the full repeated-split protocol and write all output CSVs.

    A failure inside one repetition is reported (stderr + return value)
    without stopping the others; at least one repetition must succeed.
    """
    with open(config.corpus, encoding="utf-8") as fh:
        corpus = parse_tagged_corpus(fh.read())
    os.makedirs(config.out_dir, exist_ok=True)

    def attempt(rep: int):
        try:
            return _run_rep(corpus, config, rep)
        except Exception as exc:  # noqa: BLE001 - repetition isolation
            return (rep, f"{type(exc).__name__}: {exc}")

    if config.workers == 1:
        results = [attempt(r) for r in range(config.repetitions)]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(attempt, range(config.repetitions)))

    outcomes = [r for r in results if isinstance(r, RepOutcome)]
    failures = [r for r in results if not isinstance(r, RepOutcome)]
    for rep, diagnostic in failures:
        print(f"repetition {rep} failed: {diagnostic}", file=sys.stderr)
    if not outcomes:
        raise RuntimeError("all repetitions failed")

    rows = []
    for o in outcomes:
        rows.extend(report_rows(config.model_name, str(o.seed), o.report))
        rep_dir = os.path.join(config.out_dir, f"rep_{o.rep}")
        os.makedirs(rep_dir, exist_ok=True)
        _write_histogram_csv(
            os.path.join(rep_dir, "noncon_hist.csv"), o.cal_alphas, 0.0, 1.0
        )
        _write_histogram_csv(
            os.path.join(rep_dir, "noncon_hist_zoom.csv"),
            o.cal_alphas[o.cal_alphas < ZOOM_LIMIT],
            0.0,
            ZOOM_LIMIT,
        )
        _write_set_size_csv(os.path.join(rep_dir, "set_sizes.csv"), o.size_hist)
        _write_curve_csv(os.path.join(rep_dir, "coverage_curve.csv"), o.curve)
    rows.extend(_summary_rows(config, outcomes))
    write_metrics_csv(os.path.join(config.out_dir, "metrics.csv"), rows)

    mean_curve = [
        (
            nominal,
            _mean([o.curve[i][1] for o in outcomes]),
        )
        for i, (nominal, _) in enumerate(outcomes[0].curve)
    ]
    _write_curve_csv(os.path.join(config.out_dir, "coverage_curve.csv"), mean_curve)

    if any(o.dropped_cal or o.dropped_test for o in outcomes):
        log.info(
            "dropped instances per repetition: %s",
            [(o.rep, o.dropped_cal, o.dropped_test) for o in outcomes],
        )
    return ExperimentResult(
        out_dir=config.out_dir,
        outcomes=tuple(outcomes),
        failures=tuple(failures),
    )


# ---------------------------------------------------------------------------
# transcript gap filling


@dataclass(frozen=True)
class InfillPredictor:
    """An n-gram infiller paired with its calibration scores."""

    model: NGramInfiller
    cal: CalibrationModel

    def predict_set(
        self, left: str | None, right: str | None, epsilon: float
    ) -> PredictionSet:
        pv = p_vector(self.cal, score_mask(self.model, left, right))
        return prediction_set(pv, epsilon)

    def labels_for(self, pset: PredictionSet) -> list[str]:
        return [self.model.vocab.labels[i] for i in pset.member_indices]


def build_infill_predictor(
    corpus: TaggedCorpus, config: ExperimentConfig
) -> InfillPredictor:
    """Fit an infiller on the train split and calibrate on masked cal sentences."""
    split = split_corpus(
        corpus,
        SplitSpec(
            train_frac=config.train_frac,
            cal_frac=config.cal_frac,
            test_frac=config.test_frac,
            seed=config.seed,
        ),
    )
    infiller = fit_ngram_infiller(
        (corpus.sentences[i] for i in split.train),
        lambdas=config.lambdas,
        k=config.infiller_k,
        vocab_cap=config.vocab_cap,
    )
    cal_inst, dropped = _mlm_instances(
        corpus, infiller, split.cal, config.cal_sentence_cap, config.seed
    )
    if not cal_inst:
        raise ValueError("no usable calibration instances for the infiller")
    if dropped:
        log.info("calibration dropped %d out-of-vocabulary instances", dropped)
    alphas = np.array(
        [1.0 - score_mask(infiller, l, r)[tgt] for _, l, r, tgt in cal_inst]
    )
    return InfillPredictor(model=infiller, cal=CalibrationModel(alphas=alphas))


def fill_transcript(
    text: str, predictor: InfillPredictor, epsilon: float
) -> list[PredictionSet]:
    """Predict every ``<UNK>`` gap independently, in document order.

    The text is whitespace-tokenized; each gap is predicted one at a
    time with every other gap left verbatim in its context (adjacent
    gaps therefore see the literal ``<UNK>`` token as a neighbor, which
    lands in the out-of-vocabulary context bucket).  No gaps: empty list.
    """
    tokens = text.split()
    sets = []
    for i, tok in enumerate(tokens):
        if tok != GAP_TOKEN:
            continue
        left = tokens[i - 1] if i > 0 else None
        right = tokens[i + 1] if i + 1 < len(tokens) else None
        sets.append(predictor.predict_set(left, right, epsilon))
    return sets
