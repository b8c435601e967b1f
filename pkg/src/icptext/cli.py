"""Command-line interface.

Subcommands mirror the library pipeline: ``ingest`` (parse + validate a
tagged corpus), ``split`` (seeded sentence split), ``score`` (fit a
built-in scorer and write a score file), ``calibrate`` (score file ->
calibration model file), ``evaluate`` (score file + calibration ->
metrics CSVs and optional prediction-set TSV), ``experiment`` (the full
repeated-split protocol from a config file), ``synthetic`` (validity
study on generated exchangeable data), and ``fill`` (predict ``<UNK>``
gaps in a transcript).

Every command exits 0 on success; any failure prints one diagnostic
line to stderr and exits 1.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import harness
from .corpus import (
    SplitSpec,
    mask_one_word,
    parse_tagged_corpus,
    read_split_file,
    split_corpus,
    write_split_file,
)
from .harness import (
    ExperimentConfig,
    SyntheticSpec,
    build_infill_predictor,
    fill_transcript,
    load_config,
    run_experiment,
    run_synthetic_validity,
    write_synthetic_csv,
)
from .icp import (
    calibrate,
    format_prediction_set_line,
    min_numerator,
    p_numerator_matrix,
    read_calibration_file,
    write_calibration_file,
)
from .metrics import report_rows, write_metrics_csv
from .models import (
    fit_lexical_tagger,
    fit_ngram_infiller,
    score_mask,
    score_word,
)
from .scorefile import (
    LabelVocabulary,
    ScoredExample,
    read_score_file,
    write_score_file,
)


def _load_corpus(path):
    with open(path, encoding="utf-8") as fh:
        return parse_tagged_corpus(fh.read())


def _epsilon_list(raw: str) -> tuple[float, ...]:
    values = tuple(float(x) for x in raw.split(",") if x.strip())
    if not values:
        raise ValueError(f"no epsilons in {raw!r}")
    return values


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_ingest(args) -> int:
    corpus = _load_corpus(args.corpus)
    print(f"sentences: {corpus.n_sentences}")
    print(f"tokens: {corpus.n_tokens}")
    print(f"labels: {len(corpus.label_set)}")
    print(f"vocabulary: {len(corpus.vocab)}")
    return 0


def _cmd_split(args) -> int:
    corpus = _load_corpus(args.corpus)
    spec = SplitSpec(
        train_frac=args.train_frac,
        cal_frac=args.cal_frac,
        test_frac=args.test_frac,
        seed=args.seed,
    )
    split = split_corpus(corpus, spec)
    write_split_file(args.out, args.seed, split)
    print(
        f"train: {len(split.train)} cal: {len(split.cal)} test: {len(split.test)}"
    )
    return 0


def _cmd_score(args) -> int:
    corpus = _load_corpus(args.corpus)
    split_seed, split = read_split_file(args.split)
    subset = {"train": split.train, "cal": split.cal, "test": split.test}[args.subset]
    if args.cap:
        subset = subset[: args.cap]

    if args.task == "pos":
        tagger = fit_lexical_tagger(
            (corpus.sentences[i] for i in split.train),
            corpus.label_set,
            k=args.tagger_k,
            case_fold=args.case_fold,
        )
        vocab = LabelVocabulary(labels=corpus.label_set)
        offsets = harness._token_offsets(corpus)
        rows = []
        for si in subset:
            for t, tok in enumerate(corpus.sentences[si].tokens):
                rows.append(
                    ScoredExample(
                        example_id=offsets[si] + t,
                        true_label_index=corpus.tag_index(tok.tag),
                        scores=score_word(tagger, tok.word).astype(np.float32),
                    )
                )
    else:
        infiller = fit_ngram_infiller(
            (corpus.sentences[i] for i in split.train),
            lambdas=(args.lambda_uni, args.lambda_left, args.lambda_right),
            k=args.infiller_k,
            vocab_cap=args.vocab_cap,
        )
        vocab = infiller.vocab
        mask_seed = split_seed if args.mask_seed is None else args.mask_seed
        rows = []
        for si in subset:
            inst = mask_one_word(corpus, si, mask_seed)
            toks = corpus.sentences[si].tokens
            left = toks[inst.mask_position - 1].word if inst.mask_position > 0 else None
            right = (
                toks[inst.mask_position + 1].word
                if inst.mask_position + 1 < len(toks)
                else None
            )
            rows.append(
                ScoredExample(
                    example_id=si,
                    true_label_index=infiller.target_index(inst.true_word),
                    scores=score_mask(infiller, left, right).astype(np.float32),
                )
            )
    write_score_file(args.out, vocab, rows)
    print(f"wrote {len(rows)} rows x {len(vocab)} labels to {args.out}")
    return 0


def _cmd_calibrate(args) -> int:
    _, rows = read_score_file(args.scores)
    labeled = [r for r in rows if r.true_label_index is not None]
    skipped = len(rows) - len(labeled)
    if skipped:
        print(f"skipped {skipped} rows without a true label", file=sys.stderr)
    if not labeled:
        raise ValueError(f"{args.scores} contains no labeled rows to calibrate on")
    cal = calibrate(labeled)
    write_calibration_file(args.out, cal)
    print(f"calibrated on {cal.n} scores -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    vocab, rows = read_score_file(args.scores)
    cal = read_calibration_file(args.calibration)
    labeled = [r for r in rows if r.true_label_index is not None]
    skipped = len(rows) - len(labeled)
    if skipped:
        print(f"skipped {skipped} rows without a true label", file=sys.stderr)
    if not labeled:
        raise ValueError(f"{args.scores} contains no labeled rows to evaluate")

    epsilons = _epsilon_list(args.epsilons)
    report, size_hist, curve, n_rows = harness._evaluate_stream(
        cal,
        harness._scored_chunks(labeled, len(vocab)),
        epsilons,
        harness.DEFAULT_GRID,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    write_metrics_csv(
        os.path.join(args.out_dir, "metrics.csv"),
        report_rows(args.model_label, "file", report),
    )
    harness._write_set_size_csv(os.path.join(args.out_dir, "set_sizes.csv"), size_hist)
    harness._write_curve_csv(
        os.path.join(args.out_dir, "coverage_curve.csv"), curve
    )

    if args.sets:
        with open(args.sets, "w", encoding="utf-8", newline="") as fh:
            for eps in epsilons:
                m_min = min_numerator(float(eps), cal.n + 1)
                for r in labeled:
                    nums = p_numerator_matrix(cal, r.scores[np.newaxis, :])[0]
                    labels = [
                        vocab.labels[i] for i in np.nonzero(nums >= m_min)[0]
                    ]
                    fh.write(
                        format_prediction_set_line(r.example_id, float(eps), labels)
                        + "\n"
                    )
    print(f"evaluated {n_rows} rows -> {args.out_dir}")
    return 0


def _cmd_experiment(args) -> int:
    overrides = {
        key: harness._CONFIG_PARSERS[key](getattr(args, key))
        for key in harness._CONFIG_PARSERS
        if getattr(args, key, None) is not None
    }
    config = load_config(args.config, overrides)
    result = run_experiment(config)
    print(
        f"{len(result.outcomes)} repetitions ok, {len(result.failures)} failed"
        f" -> {result.out_dir}"
    )
    return 0 if not result.failures else 1


def _cmd_synthetic(args) -> int:
    spec = SyntheticSpec(
        n_classes=args.n_classes,
        noise_scale=args.noise_scale,
        n_train=args.n_train,
        n_cal=args.n_cal,
        n_test=args.n_test,
        seed=args.seed,
        signal=args.signal,
    )
    rows = run_synthetic_validity(
        spec, _epsilon_list(args.epsilons), repetitions=args.repetitions
    )
    if args.out:
        write_synthetic_csv(args.out, rows)
    for row in rows:
        if row["seed"] == "summary":
            print(
                f"epsilon={row['epsilon']!r} coverage={row['coverage']:.4f}"
                f" stderr={row['stderr']:.4f}"
            )
    return 0


def _cmd_fill(args) -> int:
    corpus = _load_corpus(args.corpus)
    config = ExperimentConfig(
        corpus=args.corpus,
        task="mlm",
        scorer="ngram",
        out_dir=".",
        train_frac=args.train_frac,
        cal_frac=args.cal_frac,
        test_frac=args.test_frac,
        seed=args.seed,
        cal_sentence_cap=args.cal_cap,
        lambda_uni=args.lambda_uni,
        lambda_left=args.lambda_left,
        lambda_right=args.lambda_right,
        infiller_k=args.infiller_k,
        vocab_cap=args.vocab_cap,
    )
    predictor = build_infill_predictor(corpus, config)
    with open(args.transcript, encoding="utf-8") as fh:
        text = fh.read()
    sets = fill_transcript(text, predictor, args.epsilon)
    if not sets:
        print("no gaps found", file=sys.stderr)
        return 0
    for gap_ordinal, pset in enumerate(sets):
        print(
            format_prediction_set_line(
                gap_ordinal, args.epsilon, predictor.labels_for(pset)
            )
        )
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _add_frac_args(sp, with_seed=True):
    sp.add_argument("--train-frac", type=float, default=0.8)
    sp.add_argument("--cal-frac", type=float, default=0.1)
    sp.add_argument("--test-frac", type=float, default=0.1)
    if with_seed:
        sp.add_argument("--seed", type=int, default=0)


def _add_scorer_args(sp):
    sp.add_argument("--tagger-k", type=float, default=0.1)
    sp.add_argument("--case-fold", action="store_true", default=True)
    sp.add_argument("--no-case-fold", dest="case_fold", action="store_false")
    sp.add_argument("--lambda-uni", type=float, default=0.25)
    sp.add_argument("--lambda-left", type=float, default=0.375)
    sp.add_argument("--lambda-right", type=float, default=0.375)
    sp.add_argument("--infiller-k", type=float, default=0.1)
    sp.add_argument("--vocab-cap", type=int, default=10_000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icptext",
        description="Conformal prediction sets for tagging and word infilling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", help="parse and validate a tagged corpus")
    sp.add_argument("--corpus", required=True)
    sp.set_defaults(func=_cmd_ingest)

    sp = sub.add_parser("split", help="write a seeded sentence split")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--out", required=True)
    _add_frac_args(sp)
    sp.set_defaults(func=_cmd_split)

    sp = sub.add_parser("score", help="fit a built-in scorer and write a score file")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--split", required=True)
    sp.add_argument("--subset", choices=("train", "cal", "test"), required=True)
    sp.add_argument("--task", choices=("pos", "mlm"), required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--cap", type=int, default=0, help="limit to first N sentences")
    sp.add_argument(
        "--mask-seed",
        type=int,
        default=None,
        help="masking seed for mlm (default: the split file's seed)",
    )
    _add_scorer_args(sp)
    sp.set_defaults(func=_cmd_score)

    sp = sub.add_parser("calibrate", help="build a calibration model from a score file")
    sp.add_argument("--scores", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_calibrate)

    sp = sub.add_parser("evaluate", help="metrics for a score file under a calibration")
    sp.add_argument("--scores", required=True)
    sp.add_argument("--calibration", required=True)
    sp.add_argument("--epsilons", default="0.05,0.1,0.25")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--sets", default=None, help="also write a prediction-set TSV")
    sp.add_argument("--model-label", default="external")
    sp.set_defaults(func=_cmd_evaluate)

    sp = sub.add_parser("experiment", help="run the repeated-split protocol")
    sp.add_argument("--config", required=True)
    for key in harness._CONFIG_PARSERS:
        sp.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
    sp.set_defaults(func=_cmd_experiment)

    sp = sub.add_parser("synthetic", help="validity study on synthetic data")
    sp.add_argument("--n-classes", type=int, default=10)
    sp.add_argument("--noise-scale", type=float, default=1.0)
    sp.add_argument("--n-train", type=int, default=1)
    sp.add_argument("--n-cal", type=int, default=1000)
    sp.add_argument("--n-test", type=int, default=5000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--signal", type=float, default=3.0)
    sp.add_argument("--repetitions", type=int, default=1)
    sp.add_argument("--epsilons", default="0.05,0.1,0.25")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_synthetic)

    sp = sub.add_parser("fill", help="predict <UNK> gaps in a transcript")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--transcript", required=True)
    sp.add_argument("--epsilon", type=float, default=0.25)
    sp.add_argument("--cal-cap", type=int, default=1300)
    _add_frac_args(sp)
    _add_scorer_args(sp)
    sp.set_defaults(func=_cmd_fill)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single diagnostic line, exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
