import math
from typing import List, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TransformerConfig(StrictModel):
    layers: int = Field(default=2, ge=1)
    d_model: int = Field(default=64, ge=1)
    heads: int = Field(default=4, ge=1)
    ff_width: int = Field(default=128, ge=1)
    max_len: int = Field(default=64, ge=1)
    vocab_size: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def validate_heads(self):
        if self.d_model % self.heads != 0:
            raise ValueError(f"d_model ({self.d_model}) must be divisible by heads ({self.heads})")
        return self

    @property
    def head_width(self) -> int:
        return self.d_model // self.heads


class EncoderConfig(TransformerConfig):
    pass


class GeneratorConfig(TransformerConfig):
    causal: Literal[True] = True


class FusionConfig(StrictModel):
    mode: Literal["static", "dynamic"] = "static"


class SplitConfig(StrictModel):
    ratios: List[float] = Field(default_factory=lambda: [0.8, 0.1, 0.1], min_length=3, max_length=3)

    @model_validator(mode="after")
    def validate_ratios(self):
        if any(r < 0 for r in self.ratios):
            raise ValueError(f"ratios must be nonnegative, got {self.ratios}")
        if not math.isclose(sum(self.ratios), 1.0, rel_tol=0.0, abs_tol=1e-9):
            raise ValueError(f"ratios must sum to 1, got {sum(self.ratios)}")
        return self


class VocabularyConfig(StrictModel):
    max_size: int = Field(default=2048, gt=5)
    min_freq: int = Field(default=1, ge=1)


class PhaseConfig(StrictModel):
    rate: float = Field(gt=0.0)
    epochs: int = Field(ge=0)


class TrainConfig(StrictModel):
    batch_size: int = Field(default=16, ge=1)
    context_window: int = Field(default=32, ge=1)
    optimizer: Literal["sgd", "momentum"] = "sgd"
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    generator_pretrain: PhaseConfig = PhaseConfig(rate=0.1, epochs=30)
    encoder_finetune: PhaseConfig = PhaseConfig(rate=0.1, epochs=30)
    fusion: PhaseConfig = PhaseConfig(rate=0.05, epochs=20)
    joint: PhaseConfig = PhaseConfig(rate=0.05, epochs=60)

    def phase(self, index: int) -> PhaseConfig:
        return [self.generator_pretrain, self.encoder_finetune, self.fusion, self.joint][index]


class MetricsConfig(StrictModel):
    bleu_max_n: int = Field(default=4, ge=1)
    completion_tokens: int = Field(default=8, ge=1)
    include_remote: bool = False
    bench_prompts: int = Field(default=8, ge=1)
    bench_max_new: int = Field(default=16, ge=1)


class RobustnessConfig(StrictModel):
    noisy: float = Field(default=0.1, ge=0.0, le=1.0)
    incomplete: float = Field(default=0.2, ge=0.0, le=1.0)
    abnormal: float = Field(default=0.1, ge=0.0, le=1.0)


class RemoteConfig(StrictModel):
    url: str | None = None
    api_key: str | None = None
    timeout_ms: int = Field(default=10000, ge=1)


class RunConfig(StrictModel):
    corpus: str
    output: str
    seed: int = Field(default=0, ge=0)
    split: SplitConfig = SplitConfig()
    vocabulary: VocabularyConfig = VocabularyConfig()
    encoder: EncoderConfig = EncoderConfig()
    generator: GeneratorConfig = GeneratorConfig()
    fusion: FusionConfig = FusionConfig()
    training: TrainConfig = TrainConfig()
    metrics: MetricsConfig = MetricsConfig()
    robustness: RobustnessConfig = RobustnessConfig()
    remote: RemoteConfig = RemoteConfig()
