import numpy as np
import pytest

from hcc.errors import ArgumentError, EmptyEvaluationError
from hcc.report import render_value
from hcc.robustness import (
    SCENARIOS, perturb, perturb_abnormal, perturb_incomplete, perturb_noisy, recovery_ability, run_robustness_suite,
    stability_index,
)
from hcc.schemas.config import RobustnessConfig
from hcc.schemas.reports import PerturbationSpec
from hcc.training import Example
from hcc.vocabulary import NUM_RESERVED, UNK

TOKENS = list(range(5, 15))


class EchoModel:
    """Predicts the last token of the prefix."""

    def next_token_logits(self, prefix):
        logits = np.zeros(16)
        logits[prefix[-1] if prefix else 0] = 1.0
        return logits


class ConstantModel:
    def next_token_logits(self, prefix):
        logits = np.zeros(16)
        logits[7] = 1.0
        return logits


class TestPerturbations:
    @pytest.mark.parametrize("scenario", SCENARIOS)
    def test_rate_zero_is_identity(self, scenario):
        assert perturb(TOKENS, PerturbationSpec(scenario=scenario, rate=0.0, seed=3), 16) == TOKENS

    def test_noisy_replaces_exact_count(self):
        noisy = perturb_noisy(TOKENS, 0.3, seed=1, vocab_size=16)
        assert len(noisy) == len(TOKENS)
        assert sum(a != b for a, b in zip(TOKENS, noisy)) == 3
        assert all(t >= NUM_RESERVED for t in noisy)

    def test_noisy_needs_real_tokens(self):
        with pytest.raises(ArgumentError):
            perturb_noisy(TOKENS, 0.5, seed=1, vocab_size=NUM_RESERVED)

    def test_incomplete_truncates_suffix(self):
        assert perturb_incomplete(TOKENS, 0.2) == TOKENS[:8]
        assert perturb_incomplete(TOKENS, 1.0) == []

    def test_abnormal_inserts_unknowns(self):
        abnormal = perturb_abnormal(TOKENS, 0.2, seed=4)
        assert len(abnormal) == 12
        assert abnormal.count(UNK) == 2
        assert [t for t in abnormal if t != UNK] == TOKENS

    @pytest.mark.parametrize("scenario", ["noisy", "abnormal"])
    def test_seeded(self, scenario):
        spec = PerturbationSpec(scenario=scenario, rate=0.5, seed=11)
        assert perturb(TOKENS, spec, 16) == perturb(TOKENS, spec, 16)

    def test_rate_out_of_range(self):
        with pytest.raises(ArgumentError):
            perturb_incomplete(TOKENS, 1.5)


class TestStabilityIndex:
    @pytest.mark.parametrize("acc, recovery, rendered", [
        (0.93, 0.95, "0.94"),
        (0.87, 0.89, "0.88"),
        (0.85, 0.88, "0.86"),
        (0.82, 0.84, "0.83"),
    ])
    def test_robustness_table_rows(self, acc, recovery, rendered):
        assert render_value(stability_index(acc, recovery)) == rendered

    def test_out_of_range(self):
        with pytest.raises(ArgumentError):
            stability_index(1.2, 0.5)


class TestRecoveryAbility:
    def test_unperturbed_is_one(self):
        prefixes = [[5, 6], [7], [8, 9, 10]]
        assert recovery_ability(EchoModel(), prefixes, prefixes) == 1.0

    def test_constant_model_always_recovers(self):
        assert recovery_ability(ConstantModel(), [[5], [6]], [[9], [UNK]]) == 1.0

    def test_half_changed(self):
        assert recovery_ability(EchoModel(), [[5], [6]], [[5], [7]]) == 0.5

    def test_length_mismatch(self):
        with pytest.raises(ArgumentError):
            recovery_ability(EchoModel(), [[5]], [])

    def test_empty(self):
        with pytest.raises(EmptyEvaluationError):
            recovery_ability(EchoModel(), [], [])


class TestRobustnessSuite:
    EXAMPLES = [Example(prefix=[5, 6, 7], label=7), Example(prefix=[8, 9], label=9), Example(prefix=[10], label=11)]

    def test_zero_rates_match_normal(self):
        rates = RobustnessConfig(noisy=0.0, incomplete=0.0, abnormal=0.0)
        report = run_robustness_suite(EchoModel(), self.EXAMPLES, 16, rates)
        normal = report.rows[0]
        assert [r.scenario for r in report.rows] == SCENARIOS
        for row in report.rows:
            assert (row.accuracy, row.recovery_ability, row.stability_index) == (
                normal.accuracy, normal.recovery_ability, normal.stability_index
            )

    def test_normal_row(self):
        report = run_robustness_suite(EchoModel(), self.EXAMPLES, 16)
        normal = report.rows[0]
        assert normal.label == "Normal Input"
        assert normal.accuracy == pytest.approx(2 / 3)
        assert normal.recovery_ability == 1.0

    def test_deterministic(self, mini_model):
        examples = [Example(prefix=[5, 6, 7, 8, 9], label=10), Example(prefix=[11, 12, 13], label=14)]
        a = run_robustness_suite(mini_model.path("hybrid"), examples, 16, seed=5)
        b = run_robustness_suite(mini_model.path("hybrid"), examples, 16, seed=5)
        assert a == b

    def test_empty(self):
        with pytest.raises(EmptyEvaluationError):
            run_robustness_suite(EchoModel(), [], 16)
