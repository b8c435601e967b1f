"""Experiment protocol: config plumbing, determinism, and stream equivalence."""

import filecmp
import math
import os

import numpy as np
import pytest

from icptext import (
    CalibrationModel,
    ExperimentConfig,
    SyntheticSpec,
    build_infill_predictor,
    classification_accuracy,
    credibility,
    fill_transcript,
    generate_synthetic,
    load_config,
    observed_fuzziness,
    observed_perceptiveness,
    p_vector,
    parse_config_text,
    parse_tagged_corpus,
    per_epsilon_stats,
    prediction_set,
    run_experiment,
    run_synthetic_validity,
)
from icptext import harness
from corpusgen import make_corpus_text


# ---------------------------------------------------------------------------
# configuration


def test_parse_config_basic():
    text = """
    # a comment line
    corpus = /data/c.txt
    task = pos          # trailing comment
    scorer = lexical
    out_dir = /tmp/out
    seed = 11
    repetitions = 3
    epsilons = 0.05, 0.1
    case_fold = False
    """
    values = parse_config_text(text)
    assert values["corpus"] == "/data/c.txt"
    assert values["seed"] == 11
    assert values["epsilons"] == (0.05, 0.1)
    assert values["case_fold"] is False


def test_parse_config_unknown_key():
    with pytest.raises(ValueError, match="unknown key"):
        parse_config_text("no_such_option = 1")


def test_parse_config_missing_equals():
    with pytest.raises(ValueError, match="line 1"):
        parse_config_text("just some words")


def test_load_config_overrides(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "corpus = c.txt\ntask = pos\nscorer = lexical\nout_dir = o\nseed = 1\n"
    )
    config = load_config(cfg, overrides={"seed": 99, "repetitions": None})
    assert config.seed == 99
    assert config.repetitions == 5  # None override is ignored


@pytest.mark.parametrize(
    "kwargs",
    [
        {"task": "ner"},
        {"scorer": "oracle"},
        {"task": "mlm", "scorer": "lexical"},
        {"task": "pos", "scorer": "ngram"},
        {"scorer": "external"},  # no score_file
        {"repetitions": 0},
        {"workers": 0},
        {"cal_sentence_cap": 0},
    ],
)
def test_config_validation(kwargs):
    base = dict(corpus="c", task="pos", scorer="lexical", out_dir="o")
    base.update(kwargs)
    with pytest.raises(ValueError):
        ExperimentConfig(**base)


def test_config_default_epsilons_by_task():
    pos = ExperimentConfig(corpus="c", task="pos", scorer="lexical", out_dir="o")
    mlm = ExperimentConfig(corpus="c", task="mlm", scorer="ngram", out_dir="o")
    assert pos.epsilons == (0.001, 0.01, 0.05)
    assert mlm.epsilons == (0.05, 0.1, 0.2, 0.25)
    assert pos.model_name == "lexical-pos"


# ---------------------------------------------------------------------------
# synthetic validity study


def test_generate_synthetic_shapes_and_determinism():
    spec = SyntheticSpec(
        n_classes=7, noise_scale=1.0, n_train=1, n_cal=50, n_test=80, seed=3
    )
    cal_s, cal_t, test_s, test_t = generate_synthetic(spec)
    assert cal_s.shape == (50, 7) and test_s.shape == (80, 7)
    assert cal_t.shape == (50,) and test_t.shape == (80,)
    np.testing.assert_allclose(cal_s.sum(axis=1), 1.0)
    np.testing.assert_allclose(test_s.sum(axis=1), 1.0)
    assert set(np.concatenate([cal_t, test_t])) <= set(range(7))
    again = generate_synthetic(spec)
    np.testing.assert_array_equal(cal_s, again[0])
    np.testing.assert_array_equal(test_t, again[3])


def test_generate_synthetic_scores_are_tie_free():
    spec = SyntheticSpec(
        n_classes=5, noise_scale=1.0, n_train=1, n_cal=200, n_test=10, seed=0
    )
    cal_s, cal_t, _, _ = generate_synthetic(spec)
    alphas = 1.0 - cal_s[np.arange(200), cal_t]
    assert len(np.unique(alphas)) == 200


def test_synthetic_validity_row_structure():
    spec = SyntheticSpec(
        n_classes=4, noise_scale=1.0, n_train=1, n_cal=100, n_test=200, seed=5
    )
    rows = run_synthetic_validity(spec, epsilons=[0.1, 0.25], repetitions=3)
    assert len(rows) == 3 * 2 + 2
    summaries = [r for r in rows if r["seed"] == "summary"]
    assert [r["epsilon"] for r in summaries] == [0.1, 0.25]
    for eps in (0.1, 0.25):
        reps = [r["coverage"] for r in rows if r["seed"] != "summary" and r["epsilon"] == eps]
        assert len(reps) == 3
        summary = next(r for r in summaries if r["epsilon"] == eps)
        assert summary["coverage"] == pytest.approx(math.fsum(reps) / 3)


def test_synthetic_validity_epsilon_zero_full_coverage():
    spec = SyntheticSpec(
        n_classes=3, noise_scale=2.0, n_train=1, n_cal=60, n_test=100, seed=9
    )
    (row,) = [r for r in run_synthetic_validity(spec, [0.0]) if r["seed"] != "summary"]
    assert row["coverage"] == 1.0


def test_synthetic_validity_close_to_nominal():
    spec = SyntheticSpec(
        n_classes=10, noise_scale=1.0, n_train=1, n_cal=500, n_test=2000, seed=42
    )
    rows = run_synthetic_validity(spec, epsilons=[0.1], repetitions=3)
    summary = next(r for r in rows if r["seed"] == "summary")
    assert abs(summary["coverage"] - 0.9) < 0.03


def test_write_synthetic_csv(tmp_path):
    path = tmp_path / "validity.csv"
    rows = [{"seed": 0, "epsilon": 0.1, "coverage": 0.9, "stderr": 0.01}]
    harness.write_synthetic_csv(path, rows)
    lines = path.read_text().splitlines()
    assert lines[0] == "seed,epsilon,coverage,stderr"
    assert lines[1] == "0,0.1,0.9,0.01"


# ---------------------------------------------------------------------------
# streaming evaluation


def _random_eval_case(seed, n_cal=40, n_test=90, q=6):
    rng = np.random.default_rng(seed)
    cal = CalibrationModel(alphas=rng.uniform(size=n_cal))
    scores = rng.dirichlet(np.ones(q), size=n_test)
    truths = rng.integers(0, q, size=n_test)
    return cal, scores, truths


def test_evaluate_stream_chunking_invariance():
    cal, scores, truths = _random_eval_case(0)
    eps, grid = [0.05, 0.25], [0.1, 0.5]
    whole = harness._evaluate_stream(cal, [(scores, truths)], eps, grid)
    pieces = [
        (scores[i:i + 7], truths[i:i + 7]) for i in range(0, len(truths), 7)
    ]
    chunked = harness._evaluate_stream(cal, pieces, eps, grid)
    assert whole[0] == chunked[0]
    assert whole[1] == chunked[1]
    assert whole[2] == chunked[2]
    assert whole[3] == chunked[3] == len(truths)


def test_evaluate_stream_matches_per_row_metrics():
    cal, scores, truths = _random_eval_case(1)
    eps = [0.1, 0.3]
    report, size_hist, curve, n_rows = harness._evaluate_stream(
        cal, [(scores, truths)], eps, [0.1, 0.3]
    )
    pvs = [p_vector(cal, row) for row in scores]
    truth_list = truths.tolist()
    assert report.ca == classification_accuracy(
        np.argmax(scores, axis=1).tolist(), truth_list
    )
    cred_inf, cred_conv = credibility(pvs)
    assert report.cred_infimum == cred_inf
    assert report.cred_conventional == cred_conv
    assert report.op == observed_perceptiveness(pvs, truth_list)
    assert report.of == observed_fuzziness(pvs, truth_list)
    for stats in report.per_epsilon:
        sets = [prediction_set(v, stats.epsilon) for v in pvs]
        direct = per_epsilon_stats(sets, truth_list, stats.epsilon)
        assert stats == direct
        sizes = [s.size for s in sets]
        assert size_hist[stats.epsilon] == {
            s: sizes.count(s) for s in set(sizes)
        }
    assert curve[0][0] == 0.9 and curve[1][0] == 0.7


def test_evaluate_stream_rejects_empty():
    cal, _, _ = _random_eval_case(2)
    with pytest.raises(ValueError):
        harness._evaluate_stream(cal, [], [0.1], [0.1])


def test_chunk_rows_bounds():
    assert harness._chunk_rows_for(1) == 8192
    assert harness._chunk_rows_for(500) == 8000
    assert harness._chunk_rows_for(10_000_000) == 1


# ---------------------------------------------------------------------------
# experiment runs


@pytest.fixture(scope="module")
def corpus_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "toy.txt"
    path.write_text(make_corpus_text(n_sentences=150, seed=8))
    return path


def _experiment_config(corpus_file, out_dir, **overrides):
    kwargs = dict(
        corpus=str(corpus_file),
        task="pos",
        scorer="lexical",
        out_dir=str(out_dir),
        seed=4,
        repetitions=3,
        epsilons=(0.05, 0.25),
        epsilon_grid=(0.05, 0.25, 0.5),
    )
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


def _tree_files(root):
    found = {}
    for dirpath, _, names in os.walk(root):
        for name in names:
            full = os.path.join(dirpath, name)
            found[os.path.relpath(full, root)] = full
    return found


def test_run_experiment_outputs_and_structure(tmp_path, corpus_file):
    config = _experiment_config(corpus_file, tmp_path / "out")
    result = run_experiment(config)
    assert result.failures == ()
    assert [o.rep for o in result.outcomes] == [0, 1, 2]
    assert [o.seed for o in result.outcomes] == [4, 5, 6]
    files = _tree_files(result.out_dir)
    assert "metrics.csv" in files and "coverage_curve.csv" in files
    for rep in range(3):
        for name in (
            "noncon_hist.csv",
            "noncon_hist_zoom.csv",
            "set_sizes.csv",
            "coverage_curve.csv",
        ):
            assert os.path.join(f"rep_{rep}", name) in files

    lines = open(files["metrics.csv"]).read().splitlines()
    # header + (repetitions + 1 summary) rows per epsilon
    assert len(lines) == 1 + (3 + 1) * 2
    seeds = [line.split(",")[1] for line in lines[1:]]
    assert seeds.count("summary") == 2

    # merged curve is the arithmetic mean of the per-repetition curves
    def read_curve(path):
        return [
            tuple(map(float, line.split(",")))
            for line in open(path).read().splitlines()[1:]
        ]

    merged = read_curve(files["coverage_curve.csv"])
    reps = [read_curve(files[os.path.join(f"rep_{r}", "coverage_curve.csv")]) for r in range(3)]
    for i, (nominal, cov) in enumerate(merged):
        assert nominal == reps[0][i][0]
        assert cov == pytest.approx(math.fsum(r[i][1] for r in reps) / 3)


def test_run_experiment_summary_is_mean_of_reps(tmp_path, corpus_file):
    config = _experiment_config(corpus_file, tmp_path / "out")
    result = run_experiment(config)
    for ei, eps in enumerate(config.epsilons):
        covs = [o.report.per_epsilon[ei].coverage for o in result.outcomes]
        row = harness._summary_rows(config, result.outcomes)[ei]
        assert row["epsilon"] == eps
        assert row["coverage"] == pytest.approx(math.fsum(covs) / len(covs))
        assert row["model"] == "lexical-pos"


def test_run_experiment_deterministic_across_workers(tmp_path, corpus_file):
    serial = _experiment_config(corpus_file, tmp_path / "serial", workers=1)
    threaded = _experiment_config(corpus_file, tmp_path / "threaded", workers=3)
    run_experiment(serial)
    run_experiment(threaded)
    a, b = _tree_files(serial.out_dir), _tree_files(threaded.out_dir)
    assert sorted(a) == sorted(b)
    for rel in a:
        assert filecmp.cmp(a[rel], b[rel], shallow=False), rel


def test_run_experiment_rerun_byte_identical(tmp_path, corpus_file):
    first = _experiment_config(corpus_file, tmp_path / "a")
    second = _experiment_config(corpus_file, tmp_path / "b")
    run_experiment(first)
    run_experiment(second)
    a, b = _tree_files(first.out_dir), _tree_files(second.out_dir)
    for rel in a:
        assert filecmp.cmp(a[rel], b[rel], shallow=False), rel


def test_run_experiment_isolates_failing_rep(tmp_path, corpus_file, monkeypatch, capsys):
    real = harness._run_rep

    def flaky(corpus, config, rep):
        if rep == 1:
            raise RuntimeError("synthetic failure")
        return real(corpus, config, rep)

    monkeypatch.setattr(harness, "_run_rep", flaky)
    config = _experiment_config(corpus_file, tmp_path / "out")
    result = run_experiment(config)
    assert [o.rep for o in result.outcomes] == [0, 2]
    assert result.failures == ((1, "RuntimeError: synthetic failure"),)
    assert "repetition 1 failed" in capsys.readouterr().err
    lines = open(os.path.join(result.out_dir, "metrics.csv")).read().splitlines()
    assert len(lines) == 1 + (2 + 1) * 2  # two surviving reps + summary, per epsilon


def test_run_experiment_raises_when_all_reps_fail(tmp_path, corpus_file, monkeypatch):
    monkeypatch.setattr(
        harness, "_run_rep", lambda *a: (_ for _ in ()).throw(ValueError("boom"))
    )
    config = _experiment_config(corpus_file, tmp_path / "out")
    with pytest.raises(RuntimeError, match="all repetitions failed"):
        run_experiment(config)


def test_mlm_experiment_applies_sentence_caps(tmp_path, corpus_file):
    config = _experiment_config(
        corpus_file,
        tmp_path / "out",
        task="mlm",
        scorer="ngram",
        epsilons=(0.1, 0.25),
        cal_sentence_cap=9,
        test_sentence_cap=7,
    )
    result = run_experiment(config)
    for o in result.outcomes:
        assert o.n_cal + o.dropped_cal <= 9
        assert o.n_test + o.dropped_test <= 7


def test_mlm_mask_seed_is_shared_across_reps(tmp_path, corpus_file):
    # the same sentence masked in different repetitions hides the same word
    text = open(corpus_file).read()
    corpus = parse_tagged_corpus(text)
    from icptext import mask_one_word

    base_seed = 4
    inst_a = mask_one_word(corpus, 3, base_seed)
    inst_b = mask_one_word(corpus, 3, base_seed)
    assert inst_a == inst_b


# ---------------------------------------------------------------------------
# transcript filling


@pytest.fixture(scope="module")
def predictor(corpus_file):
    corpus = parse_tagged_corpus(open(corpus_file).read())
    config = ExperimentConfig(
        corpus=str(corpus_file), task="mlm", scorer="ngram", out_dir="unused", seed=4
    )
    return build_infill_predictor(corpus, config)


def test_fill_transcript_no_gaps(predictor):
    assert fill_transcript("plain words only", predictor, 0.25) == []


def test_fill_transcript_counts_and_order(predictor):
    text = "w1 <UNK> w2 w3 <UNK> <UNK>"
    sets = fill_transcript(text, predictor, 0.25)
    assert len(sets) == 3
    for pset in sets:
        assert pset.epsilon == 0.25
        labels = predictor.labels_for(pset)
        assert len(labels) == pset.size
        assert all(isinstance(w, str) for w in labels)


def test_fill_transcript_gap_independence(predictor):
    # a gap's set depends only on its own neighbors
    lone = fill_transcript("a <UNK> b", predictor, 0.1)
    paired = fill_transcript("a <UNK> b c <UNK> d", predictor, 0.1)
    assert paired[0].member_indices == lone[0].member_indices


def test_fill_transcript_epsilon_zero_includes_everything(predictor):
    (pset,) = fill_transcript("x <UNK> y", predictor, 0.0)
    assert pset.size == len(predictor.model.vocab)
