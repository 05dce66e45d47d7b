"""
Transformer building blocks shared by the context encoder and the generator.

Each layer's ``forward`` returns ``(output, cache)`` and its ``backward``
takes the upstream gradient plus that cache, accumulates parameter gradients
into the owning ``ParameterStore`` and returns the gradient of its input.
"""
import math
from typing import List, Sequence

import numpy as np

from hcc.errors import DimensionError
from hcc.parameter_store import ParameterStore
from hcc.schemas.config import TransformerConfig
from hcc.tensor import (
    gelu, gelu_backward, layer_norm, layer_norm_backward, softmax_rows
)
from hcc.vocabulary import PAD


EMBED_STD = 0.5


def _swap(x: np.ndarray) -> np.ndarray:
    return np.swapaxes(x, -1, -2)


def attention_weights(q: np.ndarray, k: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    scores = (q @ _swap(k)) / math.sqrt(q.shape[-1])
    if mask is None:
        return softmax_rows(scores)

    scores = np.where(mask, scores, -np.inf)
    row_max = np.max(scores, axis=-1, keepdims=True)
    # fully masked rows keep zero weight everywhere
    shift = np.where(np.isfinite(row_max), row_max, 0.0)
    e = np.where(mask, np.exp(scores - shift), 0.0)
    total = np.sum(e, axis=-1, keepdims=True)
    return np.where(total > 0, e / np.where(total > 0, total, 1.0), 0.0)


def scaled_dot_product_attention(
        q: np.ndarray, k: np.ndarray, v: np.ndarray, mask: np.ndarray | None = None
) -> np.ndarray:
    if q.shape[-1] != k.shape[-1] or k.shape[-2] != v.shape[-2]:
        raise DimensionError("scaled_dot_product_attention", q.shape, k.shape, v.shape)
    return attention_weights(q, k, mask) @ v


def scaled_dot_product_attention_backward(
        dout: np.ndarray, q: np.ndarray, k: np.ndarray, v: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    scale = 1.0 / math.sqrt(q.shape[-1])
    dv = _swap(weights) @ dout
    dweights = dout @ _swap(v)
    dscores = weights * (dweights - np.sum(dweights * weights, axis=-1, keepdims=True))
    dq = (dscores @ k) * scale
    dk = (_swap(dscores) @ q) * scale
    return dq, dk, dv


class Linear:
    def __init__(self, store: ParameterStore, name: str, d_in: int, d_out: int, rng: np.random.Generator):
        self.weight = store.create(f"{name}.weight", rng.normal(0.0, 1.0 / math.sqrt(d_in), size=(d_in, d_out)))
        self.bias = store.create(f"{name}.bias", np.zeros(d_out))

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if x.shape[-1] != self.weight.shape[0]:
            raise DimensionError("linear", x.shape, self.weight.shape)
        return x @ self.weight.value + self.bias.value, x

    def backward(self, dy: np.ndarray, x: np.ndarray) -> np.ndarray:
        x2 = x.reshape(-1, x.shape[-1])
        dy2 = dy.reshape(-1, dy.shape[-1])
        self.weight.grad += x2.T @ dy2
        self.bias.grad += dy2.sum(axis=0)
        return dy @ self.weight.value.T


class LayerNorm:
    def __init__(self, store: ParameterStore, name: str, width: int):
        self.gain = store.create(f"{name}.gain", np.ones(width))
        self.bias = store.create(f"{name}.bias", np.zeros(width))

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return layer_norm(x, self.gain.value, self.bias.value), x

    def backward(self, dy: np.ndarray, x: np.ndarray) -> np.ndarray:
        dx, dgain, dbias = layer_norm_backward(dy, x, self.gain.value)
        self.gain.grad += dgain
        self.bias.grad += dbias
        return dx


class MultiHeadAttention:
    """Q/K/V/O projections over ``heads`` slices of width ``d_model // heads``."""

    def __init__(self, store: ParameterStore, name: str, d_model: int, heads: int, rng: np.random.Generator):
        if d_model % heads != 0:
            raise DimensionError("multi_head_attention", (d_model,), (heads,))
        self.heads = heads
        self.head_width = d_model // heads
        self.q = Linear(store, f"{name}.q", d_model, d_model, rng)
        self.k = Linear(store, f"{name}.k", d_model, d_model, rng)
        self.v = Linear(store, f"{name}.v", d_model, d_model, rng)
        self.o = Linear(store, f"{name}.o", d_model, d_model, rng)

    def _split(self, x: np.ndarray) -> np.ndarray:
        t = x.shape[0]
        return x.reshape(t, self.heads, self.head_width).transpose(1, 0, 2)

    @staticmethod
    def _merge(x: np.ndarray) -> np.ndarray:
        h, t, d = x.shape
        return x.transpose(1, 0, 2).reshape(t, h * d)

    def forward(self, x: np.ndarray, mask: np.ndarray | None = None) -> tuple[np.ndarray, tuple]:
        q_flat, cq = self.q.forward(x)
        k_flat, ck = self.k.forward(x)
        v_flat, cv = self.v.forward(x)
        q, k, v = self._split(q_flat), self._split(k_flat), self._split(v_flat)

        weights = attention_weights(q, k, mask)
        heads_out = weights @ v
        merged = self._merge(heads_out)
        y, co = self.o.forward(merged)
        return y, (cq, ck, cv, co, q, k, v, weights)

    def backward(self, dy: np.ndarray, cache: tuple) -> np.ndarray:
        cq, ck, cv, co, q, k, v, weights = cache
        dmerged = self.o.backward(dy, co)
        dheads = self._split(dmerged)
        dq, dk, dv = scaled_dot_product_attention_backward(dheads, q, k, v, weights)
        dx = self.q.backward(self._merge(dq), cq)
        dx = dx + self.k.backward(self._merge(dk), ck)
        dx = dx + self.v.backward(self._merge(dv), cv)
        return dx


class FeedForward:
    def __init__(self, store: ParameterStore, name: str, d_model: int, ff_width: int, rng: np.random.Generator):
        self.up = Linear(store, f"{name}.up", d_model, ff_width, rng)
        self.down = Linear(store, f"{name}.down", ff_width, d_model, rng)

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        pre, cu = self.up.forward(x)
        y, cd = self.down.forward(gelu(pre))
        return y, (cu, pre, cd)

    def backward(self, dy: np.ndarray, cache: tuple) -> np.ndarray:
        cu, pre, cd = cache
        dact = self.down.backward(dy, cd)
        return self.up.backward(gelu_backward(dact, pre), cu)


class TransformerBlock:
    """Post-norm block: LN(x + MHA(x)) then LN(h + FFN(h))."""

    def __init__(self, store: ParameterStore, name: str, config: TransformerConfig, rng: np.random.Generator):
        self.attention = MultiHeadAttention(store, f"{name}.attention", config.d_model, config.heads, rng)
        self.norm1 = LayerNorm(store, f"{name}.norm1", config.d_model)
        self.ffn = FeedForward(store, f"{name}.ffn", config.d_model, config.ff_width, rng)
        self.norm2 = LayerNorm(store, f"{name}.norm2", config.d_model)

    def forward(self, x: np.ndarray, mask: np.ndarray | None) -> tuple[np.ndarray, tuple]:
        a, ca = self.attention.forward(x, mask)
        z1 = x + a
        h, _ = self.norm1.forward(z1)
        f, cf = self.ffn.forward(h)
        z2 = h + f
        y, _ = self.norm2.forward(z2)
        return y, (ca, z1, cf, z2)

    def backward(self, dy: np.ndarray, cache: tuple) -> np.ndarray:
        ca, z1, cf, z2 = cache
        dz2 = self.norm2.backward(dy, z2)
        dh = dz2 + self.ffn.backward(dz2, cf)
        dz1 = self.norm1.backward(dh, z1)
        return dz1 + self.attention.backward(dz1, ca)


class TransformerStack:
    """
    Token + learned positional embeddings followed by ``config.layers`` blocks.
    ``causal`` restricts position t to keys <= t; PAD ids are never attended to.
    """

    def __init__(
            self,
            store: ParameterStore,
            name: str,
            config: TransformerConfig,
            causal: bool,
            rng: np.random.Generator,
    ):
        if config.vocab_size is None:
            raise DimensionError("transformer_stack", (config.d_model,), (0,))
        self.config = config
        self.causal = causal
        self.token_embedding = store.create(
            f"{name}.token_embedding", rng.normal(0.0, EMBED_STD, size=(config.vocab_size, config.d_model))
        )
        self.position_embedding = store.create(
            f"{name}.position_embedding", rng.normal(0.0, EMBED_STD, size=(config.max_len, config.d_model))
        )
        self.blocks: List[TransformerBlock] = [
            TransformerBlock(store, f"{name}.blocks.{i}", config, rng) for i in range(config.layers)
        ]

    def mask(self, ids: np.ndarray) -> np.ndarray | None:
        t = ids.shape[0]
        keys = ids != PAD
        if self.causal:
            allowed = np.tril(np.ones((t, t), dtype=bool))
            return allowed & keys[None, :]
        if keys.all():
            return None
        return np.broadcast_to(keys[None, :], (t, t))

    def forward(self, ids: Sequence[int]) -> tuple[np.ndarray, tuple]:
        ids = np.asarray(ids, dtype=np.int64)
        t = ids.shape[0]
        if not 1 <= t <= self.config.max_len:
            raise DimensionError("transformer_stack", (t,), (self.config.max_len,))

        x = self.token_embedding.value[ids] + self.position_embedding.value[:t]
        mask = self.mask(ids)
        caches = []
        for block in self.blocks:
            x, cache = block.forward(x, mask)
            caches.append(cache)
        return x, (ids, caches)

    def backward(self, dhidden: np.ndarray, cache: tuple) -> None:
        ids, caches = cache
        dx = dhidden
        for block, block_cache in zip(reversed(self.blocks), reversed(caches)):
            dx = block.backward(dx, block_cache)
        np.add.at(self.token_embedding.grad, ids, dx)
        self.position_embedding.grad[:ids.shape[0]] += dx
