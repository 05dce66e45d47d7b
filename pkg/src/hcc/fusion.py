"""
Feature fusion between the context encoder and the generator, and the hybrid
model that owns every parameter of the system.

fused = alpha * f_code + (1 - alpha) * f_gpt, where alpha = logistic(rho)
(static) or alpha = logistic(u . [f_code ; f_gpt] + c) (dynamic, one scalar
per prediction).
"""
from typing import Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from hcc.encoder import ContextEncoder
from hcc.errors import ArgumentError, DimensionError
from hcc.generator import CausalGenerator, PredictionHead
from hcc.layers import Linear
from hcc.parameter_store import ParameterStore
from hcc.schemas.checkpoint import Provenance
from hcc.schemas.config import EncoderConfig, GeneratorConfig
from hcc.tensor import (
    AllocationCounter, cache_nbytes, cross_entropy, cross_entropy_logits_backward, sigmoid, softmax_rows
)
from hcc.vocabulary import Vocabulary


FusionMode = Literal["static", "dynamic"]
Objective = Literal["encoder", "generator", "hybrid"]


class FusedFeatures(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    fused: np.ndarray
    alpha: float


def _check_widths(f_code: np.ndarray, f_gpt: np.ndarray) -> None:
    if f_code.shape != f_gpt.shape:
        raise DimensionError("fusion", f_code.shape, f_gpt.shape)


def _convex(f_code: np.ndarray, f_gpt: np.ndarray, alpha: float) -> np.ndarray:
    return alpha * f_code + (1.0 - alpha) * f_gpt


class FusionWeight:
    def __init__(self, store: ParameterStore, name: str = "fusion"):
        self.rho = store.create(f"{name}.rho", np.zeros(1))

    @property
    def alpha(self) -> float:
        return sigmoid(float(self.rho.value[0]))

    def fuse(self, f_code: np.ndarray, f_gpt: np.ndarray) -> FusedFeatures:
        _check_widths(f_code, f_gpt)
        alpha = self.alpha
        return FusedFeatures(fused=_convex(f_code, f_gpt, alpha), alpha=alpha)

    def backward(
            self, dfused: np.ndarray, f_code: np.ndarray, f_gpt: np.ndarray, alpha: float
    ) -> tuple[np.ndarray, np.ndarray]:
        dalpha = float(dfused @ (f_code - f_gpt))
        self.rho.grad[0] += dalpha * alpha * (1.0 - alpha)
        return alpha * dfused, (1.0 - alpha) * dfused


class GateParams:
    def __init__(self, store: ParameterStore, width: int, name: str = "fusion"):
        self.u = store.create(f"{name}.gate_u", np.zeros(2 * width))
        self.c = store.create(f"{name}.gate_c", np.zeros(1))

    def alpha(self, f_code: np.ndarray, f_gpt: np.ndarray) -> float:
        concat = np.concatenate([f_code, f_gpt])
        if concat.shape != self.u.shape:
            raise DimensionError("fusion_gate", self.u.shape, concat.shape)
        return sigmoid(float(self.u.value @ concat + self.c.value[0]))

    def fuse(self, f_code: np.ndarray, f_gpt: np.ndarray) -> FusedFeatures:
        _check_widths(f_code, f_gpt)
        alpha = self.alpha(f_code, f_gpt)
        return FusedFeatures(fused=_convex(f_code, f_gpt, alpha), alpha=alpha)

    def backward(
            self, dfused: np.ndarray, f_code: np.ndarray, f_gpt: np.ndarray, alpha: float
    ) -> tuple[np.ndarray, np.ndarray]:
        d = f_code.shape[0]
        dz = float(dfused @ (f_code - f_gpt)) * alpha * (1.0 - alpha)
        self.u.grad += dz * np.concatenate([f_code, f_gpt])
        self.c.grad[0] += dz
        df_code = alpha * dfused + dz * self.u.value[:d]
        df_gpt = (1.0 - alpha) * dfused + dz * self.u.value[d:]
        return df_code, df_gpt


def fuse_static(f_code: np.ndarray, f_gpt: np.ndarray, weight: FusionWeight) -> FusedFeatures:
    return weight.fuse(f_code, f_gpt)


def fuse_dynamic(f_code: np.ndarray, f_gpt: np.ndarray, gate: GateParams) -> FusedFeatures:
    return gate.fuse(f_code, f_gpt)


class HybridModel:
    """
    Encoder, generator, their single-path heads, the fusion layer and the
    shared prediction head over fused features. Parameter names are grouped by
    prefix: ``encoder.``, ``generator.``, ``encoder_head.``, ``generator_head.``,
    ``fusion.`` and ``head.``.
    """
    def __init__(
            self,
            vocab: Vocabulary,
            encoder_config: EncoderConfig,
            generator_config: GeneratorConfig,
            fusion_mode: FusionMode = "static",
            seed: int = 0,
    ):
        if fusion_mode not in ("static", "dynamic"):
            raise ArgumentError(f"unknown fusion mode '{fusion_mode}'")

        self.vocab = vocab
        self.fusion_mode: FusionMode = fusion_mode
        self.encoder_config = encoder_config.model_copy(update={"vocab_size": vocab.size})
        self.generator_config = generator_config.model_copy(update={"vocab_size": vocab.size})
        self.provenance = Provenance(seed=seed)
        self.allocations = AllocationCounter()
        self.store = ParameterStore(on_change=self._on_parameters_changed)

        rng = np.random.default_rng(seed)
        d_enc = self.encoder_config.d_model
        d_gen = self.generator_config.d_model
        v = vocab.size

        self.encoder = ContextEncoder(self.store, self.encoder_config, rng)
        self.generator = CausalGenerator(self.store, self.generator_config, rng)
        self.encoder_head = PredictionHead(self.store, "encoder_head", v, d_enc, rng)
        self.generator_head = PredictionHead(self.store, "generator_head", v, d_gen, rng)
        self.adapter = Linear(self.store, "fusion.adapter", d_gen, d_enc, rng) if d_gen != d_enc else None
        self.fusion = FusionWeight(self.store) if fusion_mode == "static" else GateParams(self.store, d_enc)
        self.head = PredictionHead(self.store, "head", v, d_enc, rng)

    def _on_parameters_changed(self) -> None:
        self.allocations.set_persistent(self.store.nbytes)

    @property
    def vocab_size(self) -> int:
        return self.vocab.size

    # inference

    def fuse(self, f_code: np.ndarray, f_gpt: np.ndarray) -> tuple[FusedFeatures, np.ndarray, np.ndarray | None]:
        adapter_cache = None
        if self.adapter is not None:
            f_gpt, adapter_cache = self.adapter.forward(f_gpt)
        return self.fusion.fuse(f_code, f_gpt), f_gpt, adapter_cache

    def logits(self, prefix: Sequence[int], path: Objective = "hybrid") -> np.ndarray:
        if path == "encoder":
            features, cache = self.encoder.forward(prefix)
            self.allocations.observe(cache_nbytes(cache))
            return self.encoder_head.logits(features.f_code)

        if path == "generator":
            features, _, cache = self.generator.forward(prefix)
            self.allocations.observe(cache_nbytes(cache))
            return self.generator_head.logits(features.f_gpt)

        enc, enc_cache = self.encoder.forward(prefix)
        gen, _, gen_cache = self.generator.forward(prefix)
        self.allocations.observe(cache_nbytes(enc_cache) + cache_nbytes(gen_cache))
        fused, _, _ = self.fuse(enc.f_code, gen.f_gpt)
        return self.head.logits(fused.fused)

    def next_token_logits(self, prefix: Sequence[int]) -> np.ndarray:
        return self.logits(prefix, "hybrid")

    def path(self, kind: Objective) -> "ModelPath":
        return ModelPath(self, kind)

    # training

    def backbone_features(self, prefix: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        enc, _ = self.encoder.forward(prefix)
        gen, _, _ = self.generator.forward(prefix)
        return enc.f_code, gen.f_gpt

    def fused_loss(
            self, f_code: np.ndarray, f_gpt: np.ndarray, label: int, compute_grads: bool = True, scale: float = 1.0
    ) -> tuple[float, np.ndarray, np.ndarray | None, np.ndarray | None]:
        """Loss of the fusion tail (adapter, fusion, head) for fixed backbone features."""
        fused, f_gpt_adapted, adapter_cache = self.fuse(f_code, f_gpt)
        probs = softmax_rows(self.head.logits(fused.fused))
        loss = cross_entropy(probs, label)
        if not compute_grads:
            return loss, probs, None, None

        dlogits = cross_entropy_logits_backward(probs, label) * scale
        dfused = self.head.backward(dlogits, fused.fused)
        df_code, df_gpt = self.fusion.backward(dfused, f_code, f_gpt_adapted, fused.alpha)
        if self.adapter is not None:
            df_gpt = self.adapter.backward(df_gpt, adapter_cache)
        return loss, probs, df_code, df_gpt

    def example_loss(
            self,
            prefix: Sequence[int],
            label: int,
            objective: Objective = "hybrid",
            compute_grads: bool = True,
            scale: float = 1.0,
    ) -> tuple[float, np.ndarray]:
        if objective == "encoder":
            features, cache = self.encoder.forward(prefix)
            probs = softmax_rows(self.encoder_head.logits(features.f_code))
            loss = cross_entropy(probs, label)
            if compute_grads:
                dlogits = cross_entropy_logits_backward(probs, label) * scale
                self.encoder.backward(self.encoder_head.backward(dlogits, features.f_code), cache)
            return loss, probs

        if objective == "generator":
            features, _, cache = self.generator.forward(prefix)
            probs = softmax_rows(self.generator_head.logits(features.f_gpt))
            loss = cross_entropy(probs, label)
            if compute_grads:
                dlogits = cross_entropy_logits_backward(probs, label) * scale
                self.generator.backward(self.generator_head.backward(dlogits, features.f_gpt), cache)
            return loss, probs

        enc, enc_cache = self.encoder.forward(prefix)
        gen, _, gen_cache = self.generator.forward(prefix)
        loss, probs, df_code, df_gpt = self.fused_loss(enc.f_code, gen.f_gpt, label, compute_grads, scale)
        if compute_grads:
            self.encoder.backward(df_code, enc_cache)
            self.generator.backward(df_gpt, gen_cache)
        return loss, probs


class ModelPath:
    """One prediction path of a HybridModel, usable wherever a NextTokenModel is expected."""

    def __init__(self, model: HybridModel, kind: Objective):
        self.model = model
        self.kind = kind

    def next_token_logits(self, prefix: Sequence[int]) -> np.ndarray:
        return self.model.logits(prefix, self.kind)

    def allocated_bytes(self) -> int:
        return self.model.allocations.peak

    def reset_allocations(self) -> None:
        self.model.allocations.reset_peak()


def hybrid_next_token_distribution(prefix: Sequence[int], model: HybridModel) -> np.ndarray:
    return softmax_rows(model.logits(prefix, "hybrid"))
