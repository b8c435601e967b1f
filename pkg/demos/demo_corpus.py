"""Shared toy corpus for the demo scripts.

Expands a tiny template grammar into ``word/TAG`` lines.  A few words
("light", "run", "watch") deliberately take several tags, so the tagger
faces genuine ambiguity and prediction sets have something to hedge
about.
"""

import random

DETERMINERS = ["the", "a", "every", "some"]
ADJECTIVES = ["big", "old", "red", "shiny", "light"]
NOUNS = ["cat", "dog", "bird", "fish", "boat", "light", "run", "watch", "river"]
VERBS = ["sat", "ran", "ate", "saw", "run", "watch", "crossed"]
ADVERBS = ["quickly", "often", "rarely"]
PREPOSITIONS = ["on", "near", "under"]


def build_corpus_text(n_sentences: int = 400, seed: int = 0) -> str:
    """Sample ``DT (JJ) NN VB (RB) (IN DT NN)`` sentences, one per line."""
    rng = random.Random(seed)
    lines = []
    for _ in range(n_sentences):
        words = [(rng.choice(DETERMINERS), "DT")]
        if rng.random() < 0.5:
            words.append((rng.choice(ADJECTIVES), "JJ"))
        words.append((rng.choice(NOUNS), "NN"))
        words.append((rng.choice(VERBS), "VB"))
        if rng.random() < 0.3:
            words.append((rng.choice(ADVERBS), "RB"))
        if rng.random() < 0.6:
            words.append((rng.choice(PREPOSITIONS), "IN"))
            words.append((rng.choice(DETERMINERS), "DT"))
            words.append((rng.choice(NOUNS), "NN"))
        lines.append(" ".join(f"{w}/{t}" for w, t in words))
    return "\n".join(lines) + "\n"
