import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from memechat.corpus import load_catalog, load_corpus, synth_corpus
from memechat.model import ModelConfig, init_params

DATA_DIR = Path(__file__).parent.parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def sample_catalog():
    return load_catalog(DATA_DIR / "sample_catalog.json")


@pytest.fixture(scope="session")
def sample_corpus(sample_catalog):
    return load_corpus(DATA_DIR / "sample_corpus.jsonl", sample_catalog)


@pytest.fixture(scope="session")
def toy_corpus():
    return synth_corpus(8, 8, 30, seed=5)


@pytest.fixture(scope="session")
def toy_model(toy_corpus):
    cfg = ModelConfig(
        vocab_size=len(toy_corpus.vocab),
        d_model=32,
        n_layers=2,
        n_heads=4,
        d_ff=64,
        max_positions=96,
        meme_feat_dim=toy_corpus.catalog.feature_dim,
        n_emotions=6,
        dropout_p=0.0,
    )
    return cfg, init_params(cfg, seed=11)
