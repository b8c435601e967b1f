"""Shared fixtures: deterministic toy corpora sized for fast tests."""

import pytest

from icptext import parse_tagged_corpus
from corpusgen import make_corpus_text


@pytest.fixture(scope="session")
def toy_corpus():
    return parse_tagged_corpus(make_corpus_text())


@pytest.fixture(scope="session")
def toy_corpus_text():
    return make_corpus_text()
