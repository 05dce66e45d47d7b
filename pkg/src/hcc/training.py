"""
Staged training.

P0 pretrains the generator as a language model, P1 fine-tunes the encoder
with its own head, P2 trains only the fusion layer and the shared head (warm
started from the P1 head) over frozen backbones, and P3 updates everything.
"""
import logging
from typing import Dict, List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from hcc.corpus import TokenizedSample
from hcc.errors import ArgumentError, ScheduleError, TrainingDivergenceError
from hcc.fusion import HybridModel, Objective
from hcc.schemas.config import TrainConfig
from hcc.schemas.reports import PhaseReport
from hcc.tensor import Parameter, cross_entropy


logger = logging.getLogger(__name__)

PHASE_NAMES = ["generator_pretrain", "encoder_finetune", "fusion", "joint"]
PHASE_OBJECTIVES: List[Objective] = ["generator", "encoder", "hybrid", "hybrid"]


class Example(BaseModel):
    prefix: List[int]
    label: int


class TrainingBatch(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    prefixes: List[List[int]]
    labels: List[int]
    predictions: np.ndarray

    @model_validator(mode="after")
    def validate_batch(self):
        if len(self.labels) != len(self.prefixes) or len(self.labels) != len(self.predictions):
            raise ValueError(
                f"batch has {len(self.prefixes)} prefixes, {len(self.labels)} labels "
                f"and {len(self.predictions)} predictions"
            )
        if len(self.predictions) and not np.allclose(self.predictions.sum(axis=-1), 1.0, rtol=0.0, atol=1e-6):
            raise ValueError("prediction rows must sum to 1")
        return self


def make_examples(
        samples: Sequence[TokenizedSample | Sequence[int]], window: int, seed: int | None = None
) -> List[Example]:
    """Teacher-forcing pairs (x[max(0, t-window):t], x[t]) for every t >= 1."""
    if window < 1:
        raise ArgumentError(f"context window must be >= 1, got {window}")

    examples = []
    for sample in samples:
        ids = sample.ids if isinstance(sample, TokenizedSample) else list(sample)
        for t in range(1, len(ids)):
            examples.append(Example(prefix=list(ids[max(0, t - window):t]), label=ids[t]))

    if seed is not None:
        order = np.random.default_rng(seed).permutation(len(examples))
        examples = [examples[i] for i in order]
    return examples


def batch_loss(batch: TrainingBatch) -> float:
    if not batch.labels:
        raise ArgumentError("cannot compute the loss of an empty batch")
    losses = [cross_entropy(row, label) for row, label in zip(batch.predictions, batch.labels)]
    return float(np.mean(losses))


class OptimizerState:
    def __init__(self, momentum: float = 0.0):
        self.momentum = momentum
        self.velocity: Dict[str, np.ndarray] = {}


def optimizer_step(params: Sequence[Parameter], rate: float, state: OptimizerState) -> None:
    """theta <- theta - rate * g (or the momentum velocity); gradients are zeroed afterwards."""
    for p in params:
        if not np.all(np.isfinite(p.grad)):
            raise TrainingDivergenceError(p.name)

    for p in params:
        step = p.grad
        if state.momentum > 0.0:
            velocity = state.velocity.get(p.name)
            velocity = p.grad.copy() if velocity is None else state.momentum * velocity + p.grad
            state.velocity[p.name] = velocity
            step = velocity
        p.value -= rate * step
        p.zero_grad()


def train_step(
        model: HybridModel,
        batch: Sequence[Example],
        objective: Objective,
        trainable: Sequence[Parameter],
        rate: float,
        state: OptimizerState,
        features: Sequence[tuple[np.ndarray, np.ndarray]] | None = None,
) -> float:
    """One optimizer step on the mean loss of ``batch``; returns that loss."""
    model.store.zero_grad()
    scale = 1.0 / len(batch)
    predictions = []
    for i, example in enumerate(batch):
        if features is not None:
            _, probs, _, _ = model.fused_loss(*features[i], example.label, True, scale)
        else:
            _, probs = model.example_loss(example.prefix, example.label, objective, True, scale)
        predictions.append(probs)

    loss = batch_loss(TrainingBatch(
        prefixes=[e.prefix for e in batch],
        labels=[e.label for e in batch],
        predictions=np.stack(predictions),
    ))
    optimizer_step(trainable, rate, state)
    return loss


class PhaseSchedule:
    def __init__(self):
        self.completed: List[int] = []

    @property
    def next_phase(self) -> int:
        return len(self.completed)

    @staticmethod
    def trainable(phase: int, model: HybridModel) -> List[Parameter]:
        if phase == 0:
            return model.store.with_prefix("generator.", "generator_head.")
        if phase == 1:
            return model.store.with_prefix("encoder.", "encoder_head.")
        if phase == 2:
            return model.store.with_prefix("fusion.", "head.")
        if phase == 3:
            return model.store.list()
        raise ScheduleError(f"unknown phase {phase}")


def run_phase(
        phase: int,
        schedule: PhaseSchedule,
        config: TrainConfig,
        model: HybridModel,
        examples: Sequence[Example],
        seed: int = 0,
) -> PhaseReport:
    if phase != schedule.next_phase:
        raise ScheduleError(f"phase P{phase} requested but P{schedule.next_phase} is next")

    phase_config = config.phase(phase)
    trainable = schedule.trainable(phase, model)
    trainable_names = [p.name for p in trainable]
    objective = PHASE_OBJECTIVES[phase]

    if phase == 2:
        model.head.copy_from(model.encoder_head)

    if phase_config.epochs > 0 and not examples:
        raise ArgumentError(f"phase P{phase} has no training examples")

    features = None
    if phase == 2 and phase_config.epochs > 0:
        # backbones are frozen for the whole phase
        features = [model.backbone_features(e.prefix) for e in examples]

    rng = np.random.default_rng([seed, phase])
    state = OptimizerState(config.momentum if config.optimizer == "momentum" else 0.0)
    losses: List[float] = []

    for epoch in range(phase_config.epochs):
        order = rng.permutation(len(examples))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            batch = [examples[i] for i in idx]
            batch_features = [features[i] for i in idx] if features is not None else None
            total += train_step(
                model, batch, objective, trainable, phase_config.rate, state, batch_features
            ) * len(idx)
        losses.append(total / len(examples))
        logger.info("P%d %s epoch %d/%d loss %.6f", phase, PHASE_NAMES[phase], epoch + 1, phase_config.epochs, losses[-1])

    schedule.completed.append(phase)
    model.provenance.phases.append(phase)

    return PhaseReport(
        phase=phase,
        name=PHASE_NAMES[phase],
        epochs=phase_config.epochs,
        losses=losses,
        trainable=trainable_names,
        trainable_digest=model.store.digest(trainable_names),
    )


def train_model(
        model: HybridModel, examples: Sequence[Example], config: TrainConfig, seed: int = 0
) -> List[PhaseReport]:
    schedule = PhaseSchedule()
    return [run_phase(phase, schedule, config, model, examples, seed) for phase in range(len(PHASE_NAMES))]
