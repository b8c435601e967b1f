"""Fixtures: a tiny deterministic masked LM saved to disk, for offline tests."""

import os

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A saved BertForMaskedLM small enough to run in milliseconds."""
    import torch
    from transformers import BertConfig, BertForMaskedLM, BertTokenizer

    from sentencegen import TINY_WORDS

    model_dir = tmp_path_factory.mktemp("tinybert")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + TINY_WORDS + ["##s", "##ing"]
    (model_dir / "vocab.txt").write_text("\n".join(vocab) + "\n")
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    BertForMaskedLM(config).save_pretrained(model_dir)
    BertTokenizer(str(model_dir / "vocab.txt")).save_pretrained(model_dir)
    return str(model_dir)
