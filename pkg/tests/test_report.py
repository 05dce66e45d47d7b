import pytest

from hcc.errors import DataError
from hcc.report import (
    FIGURE_ACCURACY, FIGURE_QUALITY, METRICS_FILE, TABLE_ACCURACY, TABLE_PERFORMANCE, TABLE_QUALITY, TABLE_ROBUSTNESS,
    emit_report, load_metrics, render_value, update_metrics, write_metrics,
)
from hcc.metrics import bleu, count_predictions, latency_report
from hcc.schemas.reports import (
    AccuracyRow, MetricsDocument, PerformanceRow, PerturbationSpec, QualityReport, QualityRow, RobustnessReport,
    RobustnessRow, TimingRecord,
)


@pytest.fixture
def document():
    breakdown = bleu(["a", "b"], ["a", "b"])
    latency = latency_report([TimingRecord(t_start=0.0, t_end=12.5)])
    return MetricsDocument(
        accuracy=[AccuracyRow(
            model="Hybrid Model", accuracy=0.925, precision=0.915, recall=0.9, f1=0.9074,
            counts=count_predictions([1, 2], [1, 2]),
        )],
        quality=[QualityRow(model="Hybrid Model", report=QualityReport(
            bleu=0.855, executability=1.0, semantic_consistency=0.5, samples=1, bleu_breakdown=breakdown,
        ))],
        performance=[PerformanceRow(
            model="Hybrid Model", average_response_time_ms=12.5, memory_bytes=1024 ** 3 // 4, memory_gb=0.25,
            tokens_per_second=80.0, generated_tokens=1, latency=latency,
        )],
        robustness=RobustnessReport(model="Hybrid Model", examples=1, rows=[RobustnessRow(
            scenario="normal", label="Normal Input", accuracy=0.93, recovery_ability=0.95, stability_index=0.94,
            perturbation=PerturbationSpec(scenario="normal"),
        )]),
    )


class TestRenderValue:
    @pytest.mark.parametrize("value, rendered", [
        (0.865, "0.86"),
        (0.875, "0.88"),
        (0.925, "0.92"),
        (0.5, "0.50"),
        (12.5, "12.50"),
        (0.8650000000000001, "0.86"),
        (1.0, "1.00"),
    ])
    def test_half_even(self, value, rendered):
        assert render_value(value) == rendered


class TestEmitReport:
    def test_headers(self, document, tmp_path):
        emit_report(document, tmp_path)
        first_line = lambda path: path.read_text(encoding="utf-8").splitlines()[0]
        assert first_line(tmp_path / "tables" / TABLE_ACCURACY) == "Model,Accuracy,Precision,Recall,F1-Score"
        assert first_line(tmp_path / "tables" / TABLE_QUALITY) == "Model,BLEU,Code Executability,Semantic Consistency"
        assert first_line(tmp_path / "tables" / TABLE_PERFORMANCE) == (
            "Model,Average Response Time(ms),Memory Usage(GB),Inference Speed(tokens/s)"
        )
        assert first_line(tmp_path / "tables" / TABLE_ROBUSTNESS) == "Test Scenario,Accuracy,Recovery Ability,Stability Index"
        assert first_line(tmp_path / "figures" / FIGURE_ACCURACY) == "model,metric,value"

    def test_rendered_rows(self, document, tmp_path):
        emit_report(document, tmp_path)
        assert (tmp_path / "tables" / TABLE_ACCURACY).read_text(encoding="utf-8").splitlines()[1] == (
            "Hybrid Model,0.92,0.92,0.90,0.91"
        )
        assert (tmp_path / "tables" / TABLE_ROBUSTNESS).read_text(encoding="utf-8").splitlines()[1] == (
            "Normal Input,0.93,0.95,0.94"
        )
        quality = (tmp_path / "figures" / FIGURE_QUALITY).read_text(encoding="utf-8").splitlines()
        assert quality[1:] == [
            "Hybrid Model,bleu,0.86",
            "Hybrid Model,code_executability,1.00",
            "Hybrid Model,semantic_consistency,0.50",
        ]

    def test_empty_sections_are_header_only(self, tmp_path):
        emit_report(MetricsDocument(), tmp_path)
        assert (tmp_path / "tables" / TABLE_PERFORMANCE).read_text(encoding="utf-8").count("\n") == 1

    def test_idempotent(self, document, tmp_path):
        paths = emit_report(document, tmp_path)
        before = {p: p.read_bytes() for p in paths}
        emit_report(load_metrics(tmp_path), tmp_path)
        assert {p: p.read_bytes() for p in paths} == before


class TestMetricsDocument:
    def test_round_trip(self, document, tmp_path):
        write_metrics(document, tmp_path)
        assert load_metrics(tmp_path) == document

    def test_definitions_recorded(self):
        assert "stability_index" in MetricsDocument().definitions

    def test_missing(self, tmp_path):
        with pytest.raises(DataError):
            load_metrics(tmp_path)

    def test_invalid(self, tmp_path):
        (tmp_path / METRICS_FILE).write_text("{\"accuracy\": 3}", encoding="utf-8")
        with pytest.raises(DataError):
            load_metrics(tmp_path)

    def test_update_merges_sections(self, document, tmp_path):
        write_metrics(document, tmp_path)
        updated = update_metrics(tmp_path, performance=None)
        assert updated.performance is None
        assert updated.accuracy == document.accuracy
