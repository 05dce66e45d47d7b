from typing import Dict, List, Literal

from pydantic import BaseModel, Field, model_validator


class GradientCheckEntry(BaseModel):
    name: str
    max_relative_error: float
    flagged: int
    size: int


class GradientCheckReport(BaseModel):
    eps: float
    tol: float
    entries: List[GradientCheckEntry]

    @property
    def passed(self) -> bool:
        return all(e.flagged == 0 for e in self.entries)

    @property
    def max_relative_error(self) -> float:
        return max((e.max_relative_error for e in self.entries), default=0.0)


class PhaseReport(BaseModel):
    phase: int
    name: str
    epochs: int
    losses: List[float] = Field(default_factory=list)
    trainable: List[str]
    trainable_digest: str


class ClassTally(BaseModel):
    tp: int = Field(default=0, ge=0)
    fp: int = Field(default=0, ge=0)
    fn: int = Field(default=0, ge=0)


class ClassificationCounts(BaseModel):
    total: int = Field(ge=0)
    correct: int = Field(ge=0)
    classes: Dict[str, ClassTally] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_correct(self):
        if self.correct > self.total:
            raise ValueError(f"correct ({self.correct}) exceeds total ({self.total})")
        return self


class BleuBreakdown(BaseModel):
    score: float = Field(ge=0.0, le=1.0)
    brevity_penalty: float = Field(ge=0.0, le=1.0)
    weights: List[float]
    precisions: List[float]
    matches: List[int]
    totals: List[int]
    candidate_length: int
    reference_length: int


class TimingRecord(BaseModel):
    """Start/end stamps in milliseconds from a monotonic clock."""
    t_start: float
    t_end: float


class LatencyReport(BaseModel):
    records: List[TimingRecord]
    count: int
    art_ms: float
    p50_ms: float
    p90_ms: float
    p99_ms: float


class QualityReport(BaseModel):
    bleu: float = Field(ge=0.0, le=1.0)
    executability: float = Field(ge=0.0, le=1.0)
    semantic_consistency: float = Field(ge=0.0, le=1.0)
    samples: int
    bleu_breakdown: BleuBreakdown


class AccuracyRow(BaseModel):
    model: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    counts: ClassificationCounts


class QualityRow(BaseModel):
    model: str
    report: QualityReport


class PerformanceRow(BaseModel):
    model: str
    average_response_time_ms: float
    memory_bytes: int
    memory_gb: float
    tokens_per_second: float
    generated_tokens: int
    latency: LatencyReport


Scenario = Literal["normal", "noisy", "incomplete", "abnormal"]

SCENARIO_LABELS: Dict[str, str] = {
    "normal": "Normal Input",
    "noisy": "Noisy Input",
    "incomplete": "Incomplete Input",
    "abnormal": "Abnormal Input",
}


class PerturbationSpec(BaseModel):
    scenario: Scenario
    rate: float = Field(default=0.0, ge=0.0, le=1.0)
    seed: int = 0


class RobustnessRow(BaseModel):
    scenario: Scenario
    label: str
    accuracy: float = Field(ge=0.0, le=1.0)
    recovery_ability: float = Field(ge=0.0, le=1.0)
    stability_index: float = Field(ge=0.0, le=1.0)
    perturbation: PerturbationSpec


class RobustnessReport(BaseModel):
    model: str
    examples: int
    rows: List[RobustnessRow]


DEFINITIONS: Dict[str, str] = {
    "accuracy": "token-level next-token exact match (correct / total)",
    "precision_recall_f1": "macro-averaged over token classes present in the reference labels",
    "code_executability": "artifact definition: prefix+completion lexes cleanly and brackets balance with correct nesting",
    "semantic_consistency": "artifact definition: (cosine(f_code(candidate), f_code(reference)) + 1) / 2 under the trained encoder",
    "recovery_ability": "artifact definition: fraction of prefixes whose greedy prediction is unchanged by the perturbation",
    "stability_index": "artifact definition: (accuracy + recovery ability) / 2",
    "memory_usage": "peak of the internal allocation counter over model buffers, not process RSS",
}


class MetricsDocument(BaseModel):
    definitions: Dict[str, str] = Field(default_factory=lambda: dict(DEFINITIONS))
    accuracy: List[AccuracyRow] | None = None
    quality: List[QualityRow] | None = None
    performance: List[PerformanceRow] | None = None
    robustness: RobustnessReport | None = None
