import json
from pathlib import Path

import numpy as np
import pytest

from hcc.fusion import HybridModel
from hcc.schemas.config import EncoderConfig, GeneratorConfig
from hcc.vocabulary import RESERVED_TOKENS, Vocabulary


DATA_DIR = Path(__file__).parent / "data"
TOY_CORPUS = DATA_DIR / "toy_corpus.jsonl"

MINI_TOKENS = ["def", "f", "(", ")", ":", "return", "x", "+", "1", "=", "y"]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def mini_vocab():
    """16 ids: the 5 reserved tokens plus 11 code tokens."""
    return Vocabulary(RESERVED_TOKENS + MINI_TOKENS)


@pytest.fixture
def mini_encoder_config():
    return EncoderConfig(layers=1, d_model=8, heads=2, ff_width=16, max_len=16)


@pytest.fixture
def mini_generator_config():
    return GeneratorConfig(layers=1, d_model=8, heads=2, ff_width=16, max_len=16)


@pytest.fixture
def make_model(mini_vocab, mini_encoder_config, mini_generator_config):
    def factory(fusion_mode="static", seed=0, generator_config=None):
        return HybridModel(
            mini_vocab,
            mini_encoder_config,
            generator_config or mini_generator_config,
            fusion_mode,
            seed=seed,
        )
    return factory


@pytest.fixture
def mini_model(make_model):
    return make_model()


@pytest.fixture
def toy_corpus_path():
    return TOY_CORPUS


@pytest.fixture
def write_config(tmp_path):
    """Writes a small, fast run configuration over the toy corpus and returns its path."""
    def writer(**overrides):
        config = {
            "corpus": str(TOY_CORPUS),
            "output": str(tmp_path / "out"),
            "seed": 0,
            "encoder": {"layers": 1, "d_model": 16, "heads": 2, "ff_width": 32, "max_len": 32},
            "generator": {"layers": 1, "d_model": 16, "heads": 2, "ff_width": 32, "max_len": 32},
            "training": {
                "batch_size": 16,
                "context_window": 16,
                "generator_pretrain": {"rate": 0.1, "epochs": 1},
                "encoder_finetune": {"rate": 0.1, "epochs": 1},
                "fusion": {"rate": 0.05, "epochs": 1},
                "joint": {"rate": 0.01, "epochs": 1},
            },
            "metrics": {"completion_tokens": 4, "bench_prompts": 2, "bench_max_new": 4},
        }
        config.update(overrides)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config), encoding="utf-8")
        return path
    return writer
