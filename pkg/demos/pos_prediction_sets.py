"""Prediction sets for part-of-speech tagging, end to end.

Fits a word-frequency tagger on the train split, calibrates
nonconformity scores (one minus the probability of the true tag) on the
calibration split, then turns each test token's tag distribution into a
set of tags that contains the truth with probability at least
1 - epsilon.  Ambiguous words get bigger sets; unambiguous ones often
get singletons.

Run with:  python3 demos/pos_prediction_sets.py
"""

import numpy as np

from demo_corpus import build_corpus_text
from icptext import (
    CalibrationModel,
    SplitSpec,
    fit_lexical_tagger,
    min_numerator,
    p_numerator_matrix,
    p_vector,
    parse_tagged_corpus,
    prediction_set,
    score_word,
    split_corpus,
)


def main():
    corpus = parse_tagged_corpus(build_corpus_text(400, seed=0))
    split = split_corpus(corpus, SplitSpec(0.6, 0.2, 0.2, seed=1))
    print(
        f"corpus: {corpus.n_sentences} sentences, tags {', '.join(corpus.label_set)}"
    )
    print(
        f"split:  {len(split.train)} train / {len(split.cal)} cal / {len(split.test)} test"
    )

    tagger = fit_lexical_tagger(
        (corpus.sentences[i] for i in split.train), corpus.label_set
    )
    tag_index = {tag: i for i, tag in enumerate(corpus.label_set)}

    # one nonconformity score per calibration token
    alphas = [
        1.0 - score_word(tagger, tok.word)[tag_index[tok.tag]]
        for i in split.cal
        for tok in corpus.sentences[i].tokens
    ]
    cal = CalibrationModel(alphas=np.array(alphas))
    print(f"calibrated on {cal.n} tokens\n")

    # p-values and sets for a few words of varying ambiguity
    for word in ("the", "light", "run", "quickly"):
        pv = p_vector(cal, score_word(tagger, word))
        per_tag = ", ".join(
            f"{tag}={p:.3f}" for tag, p in zip(corpus.label_set, pv.to_floats())
        )
        print(f"{word!r:10} p-values: {per_tag}")
        for eps in (0.05, 0.25):
            members = [corpus.label_set[i] for i in prediction_set(pv, eps).member_indices]
            print(f"{'':10} set at eps={eps}: {{{', '.join(members)}}}")
    print()

    # bulk coverage and average set size over the test split
    test_tokens = [
        tok for i in split.test for tok in corpus.sentences[i].tokens
    ]
    scores = np.stack([score_word(tagger, tok.word) for tok in test_tokens])
    truths = np.array([tag_index[tok.tag] for tok in test_tokens])
    nums = p_numerator_matrix(cal, scores)
    true_nums = nums[np.arange(len(test_tokens)), truths]

    print(f"{'epsilon':>8} {'coverage':>9} {'avg set size':>13}   ({len(test_tokens)} test tokens)")
    for eps in (0.01, 0.05, 0.1, 0.25):
        m = min_numerator(eps, cal.n + 1)
        coverage = float(np.mean(true_nums >= m))
        avg_size = float(np.mean((nums >= m).sum(axis=1)))
        print(f"{eps:>8} {coverage:>9.3f} {avg_size:>13.2f}")
    print("\ncoverage should sit at or above 1 - epsilon in every row")


if __name__ == "__main__":
    main()
