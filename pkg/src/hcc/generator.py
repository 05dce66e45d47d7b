import math
from typing import List, Protocol, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from hcc.encoder import prepare_prefix
from hcc.errors import ArgumentError, DimensionError
from hcc.layers import TransformerStack
from hcc.parameter_store import ParameterStore
from hcc.schemas.config import GeneratorConfig
from hcc.tensor import softmax_rows
from hcc.vocabulary import BOS, EOS, PAD, Vocabulary


class GeneratorState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    prefix: List[int]
    h_t: np.ndarray


class GeneratorFeatures(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    f_gpt: np.ndarray


class PredictionHead:
    """logits = W h + b with W of shape [V x d_model]."""

    def __init__(self, store: ParameterStore, name: str, vocab_size: int, d_model: int, rng: np.random.Generator):
        self.W = store.create(f"{name}.W", rng.normal(0.0, 1.0 / math.sqrt(d_model), size=(vocab_size, d_model)))
        self.b = store.create(f"{name}.b", np.zeros(vocab_size))

    @property
    def vocab_size(self) -> int:
        return self.W.shape[0]

    def logits(self, h: np.ndarray) -> np.ndarray:
        if h.shape != (self.W.shape[1],):
            raise DimensionError("prediction_head", self.W.shape, h.shape)
        return self.W.value @ h + self.b.value

    def backward(self, dlogits: np.ndarray, h: np.ndarray) -> np.ndarray:
        self.W.grad += np.outer(dlogits, h)
        self.b.grad += dlogits
        return self.W.value.T @ dlogits

    def copy_from(self, other: "PredictionHead") -> None:
        self.W.value[...] = other.W.value
        self.b.value[...] = other.b.value


def next_token_distribution(h_t: np.ndarray, head: PredictionHead) -> np.ndarray:
    return softmax_rows(head.logits(h_t))


class CausalGenerator:
    """Autoregressive transformer; f_gpt is h_t, the top-layer feature at the last position."""

    def __init__(self, store: ParameterStore, config: GeneratorConfig, rng: np.random.Generator, name: str = "generator"):
        self.config = config
        self.stack = TransformerStack(store, name, config, causal=True, rng=rng)

    def forward(self, ids: Sequence[int]) -> tuple[GeneratorFeatures, GeneratorState, tuple]:
        prepared = prepare_prefix(ids, self.config.max_len)
        hidden, cache = self.stack.forward(prepared)
        h_t = hidden[-1]
        state = GeneratorState(prefix=prepared.tolist(), h_t=h_t)
        return GeneratorFeatures(f_gpt=h_t), state, (cache, hidden.shape)

    def backward(self, dh_t: np.ndarray, cache: tuple) -> None:
        stack_cache, shape = cache
        dhidden = np.zeros(shape)
        dhidden[-1] = dh_t
        self.stack.backward(dhidden, stack_cache)

    def hidden_states(self, ids: Sequence[int]) -> np.ndarray:
        hidden, _ = self.stack.forward(prepare_prefix(ids, self.config.max_len))
        return hidden

    def generator_forward(self, ids: Sequence[int]) -> tuple[GeneratorFeatures, GeneratorState]:
        features, state, _ = self.forward(ids)
        return features, state


class NextTokenModel(Protocol):
    def next_token_logits(self, prefix: Sequence[int]) -> np.ndarray:
        ...


def generate(
        model: NextTokenModel,
        prefix: Sequence[int],
        max_new: int,
        temperature: float | None = None,
        seed: int = 0,
        eos_id: int = EOS,
) -> List[int]:
    """
    Greedy decoding when ``temperature`` is None, otherwise seeded sampling
    from softmax(logits / temperature). Stops after emitting ``eos_id``.
    """
    if max_new < 0:
        raise ArgumentError(f"max_new must be >= 0, got {max_new}")
    if temperature is not None and temperature <= 0:
        raise ArgumentError(f"temperature must be > 0, got {temperature}")

    rng = np.random.default_rng(seed)
    context = list(prefix)
    generated: List[int] = []

    for _ in range(max_new):
        logits = model.next_token_logits(context)
        if temperature is None:
            token = int(np.argmax(logits))
        else:
            probs = softmax_rows(logits / temperature)
            token = int(rng.choice(probs.shape[0], p=probs))

        generated.append(token)
        context.append(token)
        if token == eos_id:
            break

    return generated


def completion_text(ids: Sequence[int], vocab: Vocabulary) -> str:
    """Space-joined token texts with PAD, BOS and EOS dropped."""
    return " ".join(vocab.token_of(int(i)) for i in ids if i not in (PAD, BOS, EOS))
