import logging
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from hcc.layers import TransformerStack
from hcc.parameter_store import ParameterStore
from hcc.schemas.config import EncoderConfig
from hcc.vocabulary import BOS, PAD


logger = logging.getLogger(__name__)


class ContextFeatures(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    features: np.ndarray
    f_code: np.ndarray
    pool_index: int


def prepare_prefix(ids: Sequence[int], max_len: int) -> np.ndarray:
    """Empty prefixes become BOS-only; long ones keep the most recent ``max_len`` ids."""
    if len(ids) == 0:
        return np.array([BOS], dtype=np.int64)
    if len(ids) > max_len:
        logger.debug("prefix of %d ids truncated to the last %d", len(ids), max_len)
    return np.asarray(ids[-max_len:], dtype=np.int64)


def pool_index(ids: np.ndarray) -> int:
    live = np.flatnonzero(ids != PAD)
    return int(live[-1]) if live.size else int(ids.shape[0] - 1)


class ContextEncoder:
    """
    Bidirectional encoder over the code prefix; f_code is the feature at the
    last non-PAD position.
    """
    def __init__(self, store: ParameterStore, config: EncoderConfig, rng: np.random.Generator, name: str = "encoder"):
        self.config = config
        self.stack = TransformerStack(store, name, config, causal=False, rng=rng)

    def forward(self, ids: Sequence[int]) -> tuple[ContextFeatures, tuple]:
        prepared = prepare_prefix(ids, self.config.max_len)
        hidden, cache = self.stack.forward(prepared)
        index = pool_index(prepared)
        features = ContextFeatures(features=hidden, f_code=hidden[index], pool_index=index)
        return features, (cache, index, hidden.shape)

    def backward(self, df_code: np.ndarray, cache: tuple) -> None:
        stack_cache, index, shape = cache
        dhidden = np.zeros(shape)
        dhidden[index] = df_code
        self.stack.backward(dhidden, stack_cache)

    def encode_context(self, ids: Sequence[int]) -> ContextFeatures:
        features, _ = self.forward(ids)
        return features
