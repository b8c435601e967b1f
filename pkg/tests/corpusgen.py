"""Deterministic toy-corpus generator shared across test modules."""

import random


def make_corpus_text(
    n_sentences: int = 120,
    n_words: int = 40,
    tags: tuple[str, ...] = ("NN", "VB", "JJ", "RB"),
    seed: int = 5,
    min_len: int = 3,
    max_len: int = 10,
) -> str:
    """Random word/TAG lines; deterministic for a given seed."""
    rnd = random.Random(seed)
    words = [f"w{i}" for i in range(n_words)]
    lines = []
    for _ in range(n_sentences):
        n = rnd.randint(min_len, max_len)
        lines.append(
            " ".join(f"{rnd.choice(words)}/{rnd.choice(tags)}" for _ in range(n))
        )
    return "\n".join(lines) + "\n"
