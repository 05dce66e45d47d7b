from typing import List, Literal

from pydantic import BaseModel, Field

from hcc.schemas.config import EncoderConfig, GeneratorConfig


class TensorEntry(BaseModel):
    name: str
    dtype: Literal["f32"] = "f32"
    shape: List[int]
    offset: int = Field(ge=0)
    byte_length: int = Field(ge=0)


class Provenance(BaseModel):
    phases: List[int] = Field(default_factory=list)
    seed: int = 0


class CheckpointManifest(BaseModel):
    format_version: int
    encoder: EncoderConfig
    generator: GeneratorConfig
    fusion_mode: Literal["static", "dynamic"]
    vocabulary: List[str]
    tensors: List[TensorEntry]
    digest: str
    provenance: Provenance
