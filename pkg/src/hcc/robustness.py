"""
Input perturbations and the robustness table.

Recovery ability is prediction consistency: the share of prefixes whose
greedy next token is unchanged by the perturbation. The stability index is
the mean of accuracy and recovery ability.
"""
import logging
import math
from typing import Dict, List, Sequence

import numpy as np

from hcc.errors import ArgumentError, EmptyEvaluationError
from hcc.generator import NextTokenModel
from hcc.metrics import accuracy, count_predictions
from hcc.schemas.config import RobustnessConfig
from hcc.schemas.reports import (
    SCENARIO_LABELS, PerturbationSpec, RobustnessReport, RobustnessRow, Scenario
)
from hcc.training import Example
from hcc.vocabulary import NUM_RESERVED, UNK


logger = logging.getLogger(__name__)

SCENARIOS: List[Scenario] = ["normal", "noisy", "incomplete", "abnormal"]


def _check_rate(rate: float) -> None:
    if not 0.0 <= rate <= 1.0:
        raise ArgumentError(f"perturbation rate must lie in [0, 1], got {rate}")


def perturb_noisy(tokens: Sequence[int], rate: float, seed: int, vocab_size: int) -> List[int]:
    """Replaces round(rate * n) distinct positions with a different non-reserved token."""
    _check_rate(rate)
    if vocab_size <= NUM_RESERVED:
        raise ArgumentError(f"vocabulary of size {vocab_size} has no non-reserved tokens")

    out = list(tokens)
    k = int(round(rate * len(out)))
    if k == 0:
        return out

    rng = np.random.default_rng(seed)
    choices = vocab_size - NUM_RESERVED
    for position in sorted(rng.choice(len(out), size=k, replace=False)):
        original = out[position]
        if original >= NUM_RESERVED and choices > 1:
            replacement = NUM_RESERVED + int(rng.integers(choices - 1))
            if replacement >= original:
                replacement += 1
        else:
            replacement = NUM_RESERVED + int(rng.integers(choices))
        out[position] = replacement
    return out


def perturb_incomplete(tokens: Sequence[int], rate: float) -> List[int]:
    _check_rate(rate)
    n = len(tokens)
    drop = max(0, math.ceil(rate * n - 1e-9))
    return list(tokens[:n - drop])


def perturb_abnormal(tokens: Sequence[int], rate: float, seed: int) -> List[int]:
    """Inserts round(rate * n) UNK tokens one at a time at seeded positions."""
    _check_rate(rate)
    out = list(tokens)
    k = int(round(rate * len(out)))
    rng = np.random.default_rng(seed)
    for _ in range(k):
        out.insert(int(rng.integers(len(out) + 1)), UNK)
    return out


def perturb(tokens: Sequence[int], spec: PerturbationSpec, vocab_size: int) -> List[int]:
    if spec.scenario == "noisy":
        return perturb_noisy(tokens, spec.rate, spec.seed, vocab_size)
    if spec.scenario == "incomplete":
        return perturb_incomplete(tokens, spec.rate)
    if spec.scenario == "abnormal":
        return perturb_abnormal(tokens, spec.rate, spec.seed)
    return list(tokens)


def greedy_predictions(model: NextTokenModel, prefixes: Sequence[Sequence[int]]) -> List[int]:
    return [int(np.argmax(model.next_token_logits(p))) for p in prefixes]


def recovery_ability(
        model: NextTokenModel, clean: Sequence[Sequence[int]], perturbed: Sequence[Sequence[int]]
) -> float:
    if len(clean) != len(perturbed):
        raise ArgumentError(f"{len(clean)} clean prefixes but {len(perturbed)} perturbed")
    if not clean:
        raise EmptyEvaluationError("recovery ability over zero prefixes")

    before = greedy_predictions(model, clean)
    after = greedy_predictions(model, perturbed)
    return sum(a == b for a, b in zip(before, after)) / len(clean)


def stability_index(accuracy_value: float, recovery: float) -> float:
    for name, value in (("accuracy", accuracy_value), ("recovery", recovery)):
        if not 0.0 <= value <= 1.0:
            raise ArgumentError(f"{name} must lie in [0, 1], got {value}")
    return (accuracy_value + recovery) / 2.0


def scenario_rates(config: RobustnessConfig) -> Dict[Scenario, float]:
    return {"normal": 0.0, "noisy": config.noisy, "incomplete": config.incomplete, "abnormal": config.abnormal}


def run_robustness_suite(
        model: NextTokenModel,
        examples: Sequence[Example],
        vocab_size: int,
        rates: RobustnessConfig | None = None,
        seed: int = 0,
        name: str = "Hybrid Model",
) -> RobustnessReport:
    if not examples:
        raise EmptyEvaluationError("robustness suite needs a non-empty test set")

    rate_of = scenario_rates(rates or RobustnessConfig())
    clean = [e.prefix for e in examples]
    labels = [e.label for e in examples]
    clean_predictions = greedy_predictions(model, clean)

    rows = []
    for scenario in SCENARIOS:
        spec = PerturbationSpec(scenario=scenario, rate=rate_of[scenario], seed=seed)
        if scenario == "normal":
            predictions = clean_predictions
        else:
            perturbed = [
                perturb(prefix, spec.model_copy(update={"seed": seed ^ index}), vocab_size)
                for index, prefix in enumerate(clean)
            ]
            predictions = greedy_predictions(model, perturbed)

        acc = accuracy(count_predictions(predictions, labels))
        recovery = sum(a == b for a, b in zip(clean_predictions, predictions)) / len(clean)
        rows.append(RobustnessRow(
            scenario=scenario,
            label=SCENARIO_LABELS[scenario],
            accuracy=acc,
            recovery_ability=recovery,
            stability_index=stability_index(acc, recovery),
            perturbation=spec,
        ))
        logger.info("%s: accuracy %.4f recovery %.4f", SCENARIO_LABELS[scenario], acc, recovery)

    return RobustnessReport(model=name, examples=len(examples), rows=rows)
