"""Filling transcript gaps with calibrated word sets.

Fits a bidirectional bigram-mixture infiller on the train split,
calibrates it on sentences with one word masked out, then predicts
every ``<UNK>`` gap in a transcript as a set of candidate words.  At
confidence level 1 - epsilon, each gap's set misses the dropped word at
most an epsilon fraction of the time; lower epsilon buys that safety
with larger sets.

Run with:  python3 demos/masked_word_infilling.py
"""

import tempfile
from pathlib import Path

from demo_corpus import build_corpus_text
from icptext import (
    ExperimentConfig,
    build_infill_predictor,
    fill_transcript,
    parse_tagged_corpus,
)

TRANSCRIPT = "the <UNK> sat on the <UNK> near a big <UNK>"


def main():
    text = build_corpus_text(600, seed=2)
    corpus = parse_tagged_corpus(text)

    with tempfile.TemporaryDirectory(prefix="icptext-demo-") as tmp:
        corpus_path = Path(tmp) / "toy.txt"
        corpus_path.write_text(text, encoding="utf-8")
        config = ExperimentConfig(
            corpus=str(corpus_path),
            task="mlm",
            scorer="ngram",
            out_dir=tmp,
            seed=5,
        )
        predictor = build_infill_predictor(corpus, config)

    print(
        f"infiller vocabulary: {len(predictor.model.vocab.labels)} words, "
        f"calibrated on {predictor.cal.n} masked sentences"
    )
    print(f"\ntranscript: {TRANSCRIPT}\n")

    for eps in (0.5, 0.25, 0.1):
        sets = fill_transcript(TRANSCRIPT, predictor, eps)
        print(f"at eps={eps} (confidence {1 - eps:.0%}):")
        for gap, pset in enumerate(sets):
            words = predictor.labels_for(pset)
            shown = ", ".join(words[:8]) + (", ..." if len(words) > 8 else "")
            print(f"  gap {gap}: {pset.size:3d} candidates  {{{shown}}}")
        print()

    # sets only grow as epsilon shrinks
    strict = fill_transcript(TRANSCRIPT, predictor, 0.5)
    loose = fill_transcript(TRANSCRIPT, predictor, 0.1)
    nested = all(
        set(s.member_indices) <= set(l.member_indices)
        for s, l in zip(strict, loose)
    )
    print(f"every eps=0.5 set contained in its eps=0.1 set: {nested}")


if __name__ == "__main__":
    main()
