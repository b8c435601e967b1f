"""Conformal prediction sets for POS tagging and masked-word infilling.

The pipeline: parse a ``word/TAG`` corpus, split sentences into
train/calibration/test, fit a scorer (a lexical tag-frequency model, a
bidirectional n-gram infiller, or any external model writing the binary
score-file format), calibrate nonconformity scores on the calibration
split, and turn test scores into prediction sets with finite-sample
coverage guarantees.  ``harness.run_experiment`` drives the whole
protocol; the ``icptext`` command exposes each stage.
"""

from .corpus import (
    CorpusParseError,
    CorpusSplit,
    DegenerateSplitError,
    MalformedTagError,
    MaskedInstance,
    SplitSpec,
    TaggedCorpus,
    TaggedSentence,
    TaggedToken,
    mask_one_word,
    normalize_tag,
    parse_tagged_corpus,
    read_split_file,
    serialize_tagged_corpus,
    split_corpus,
    write_split_file,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    InfillPredictor,
    SyntheticSpec,
    build_infill_predictor,
    fill_transcript,
    generate_synthetic,
    load_config,
    parse_config_text,
    run_experiment,
    run_synthetic_validity,
)
from .icp import (
    CalibrationModel,
    PredictionSet,
    PValueVector,
    calibrate,
    format_prediction_set_line,
    min_numerator,
    nonconformity,
    p_numerator_matrix,
    p_value,
    p_vector,
    prediction_set,
    read_calibration_file,
    tcp_prediction_set,
    write_calibration_file,
)
from .metrics import (
    MetricsReport,
    PerEpsilonStats,
    classification_accuracy,
    coverage_curve,
    credibility,
    observed_fuzziness,
    observed_perceptiveness,
    per_epsilon_stats,
    report_rows,
    write_metrics_csv,
)
from .models import (
    LexicalTagger,
    NGramInfiller,
    fit_lexical_tagger,
    fit_ngram_infiller,
    forced_label,
    score_mask,
    score_word,
)
from .rng import SplitMix64, mix64, substream
from .scorefile import (
    LabelVocabulary,
    ScoredExample,
    ScoreFileError,
    ScoreFileMagicError,
    ScoreFileTruncatedError,
    ScoreFileVersionError,
    ScoreRowError,
    read_score_file,
    read_vocabulary,
    write_score_file,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # corpus
    "CorpusParseError",
    "CorpusSplit",
    "DegenerateSplitError",
    "MalformedTagError",
    "MaskedInstance",
    "SplitSpec",
    "TaggedCorpus",
    "TaggedSentence",
    "TaggedToken",
    "mask_one_word",
    "normalize_tag",
    "parse_tagged_corpus",
    "read_split_file",
    "serialize_tagged_corpus",
    "split_corpus",
    "write_split_file",
    # score files
    "LabelVocabulary",
    "ScoredExample",
    "ScoreFileError",
    "ScoreFileMagicError",
    "ScoreFileTruncatedError",
    "ScoreFileVersionError",
    "ScoreRowError",
    "read_score_file",
    "read_vocabulary",
    "write_score_file",
    # models
    "LexicalTagger",
    "NGramInfiller",
    "fit_lexical_tagger",
    "fit_ngram_infiller",
    "forced_label",
    "score_mask",
    "score_word",
    # conformal core
    "CalibrationModel",
    "PValueVector",
    "PredictionSet",
    "calibrate",
    "format_prediction_set_line",
    "min_numerator",
    "nonconformity",
    "p_numerator_matrix",
    "p_value",
    "p_vector",
    "prediction_set",
    "read_calibration_file",
    "tcp_prediction_set",
    "write_calibration_file",
    # metrics
    "MetricsReport",
    "PerEpsilonStats",
    "classification_accuracy",
    "coverage_curve",
    "credibility",
    "observed_fuzziness",
    "observed_perceptiveness",
    "per_epsilon_stats",
    "report_rows",
    "write_metrics_csv",
    # harness
    "ExperimentConfig",
    "ExperimentResult",
    "InfillPredictor",
    "SyntheticSpec",
    "build_infill_predictor",
    "fill_transcript",
    "generate_synthetic",
    "load_config",
    "parse_config_text",
    "run_experiment",
    "run_synthetic_validity",
    # rng
    "SplitMix64",
    "mix64",
    "substream",
]
