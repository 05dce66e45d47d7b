"""
Report emission.

metrics.json holds every breakdown at full precision. The CSV tables and
figure series are derived from it alone, rendering numbers with
round-half-even to two decimals.
"""
import csv
import logging
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Iterable, List, Sequence

from pydantic import ValidationError

from hcc.errors import DataError
from hcc.schemas.reports import MetricsDocument


logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.json"

TABLE_ACCURACY = "table1_accuracy.csv"
TABLE_QUALITY = "table2_generation_quality.csv"
TABLE_PERFORMANCE = "table3_performance.csv"
TABLE_ROBUSTNESS = "table4_robustness.csv"
FIGURE_ACCURACY = "figure1_accuracy.csv"
FIGURE_QUALITY = "figure2_generation_quality.csv"

HEADER_ACCURACY = ["Model", "Accuracy", "Precision", "Recall", "F1-Score"]
HEADER_QUALITY = ["Model", "BLEU", "Code Executability", "Semantic Consistency"]
HEADER_PERFORMANCE = ["Model", "Average Response Time(ms)", "Memory Usage(GB)", "Inference Speed(tokens/s)"]
HEADER_ROBUSTNESS = ["Test Scenario", "Accuracy", "Recovery Ability", "Stability Index"]
HEADER_FIGURE = ["model", "metric", "value"]

_CENTS = Decimal("0.01")


def render_value(value: float, places: Decimal = _CENTS) -> str:
    """
    Round-half-even on the shortest decimal form of ``value``, so 0.865
    renders as 0.86. The value is first rounded to 9 places to drop binary
    noise such as 0.8650000000000001.
    """
    return str(Decimal(repr(round(value, 9))).quantize(places, rounding=ROUND_HALF_EVEN))


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def table_rows(doc: MetricsDocument) -> dict[str, List[List[str]]]:
    return {
        TABLE_ACCURACY: [
            [r.model, render_value(r.accuracy), render_value(r.precision), render_value(r.recall), render_value(r.f1)]
            for r in doc.accuracy or []
        ],
        TABLE_QUALITY: [
            [
                r.model,
                render_value(r.report.bleu),
                render_value(r.report.executability),
                render_value(r.report.semantic_consistency),
            ]
            for r in doc.quality or []
        ],
        TABLE_PERFORMANCE: [
            [r.model, render_value(r.average_response_time_ms), render_value(r.memory_gb), render_value(r.tokens_per_second)]
            for r in doc.performance or []
        ],
        TABLE_ROBUSTNESS: [
            [r.label, render_value(r.accuracy), render_value(r.recovery_ability), render_value(r.stability_index)]
            for r in (doc.robustness.rows if doc.robustness else [])
        ],
    }


def figure_rows(doc: MetricsDocument) -> dict[str, List[List[str]]]:
    accuracy_series = []
    for r in doc.accuracy or []:
        for metric, value in (("accuracy", r.accuracy), ("precision", r.precision), ("recall", r.recall), ("f1", r.f1)):
            accuracy_series.append([r.model, metric, render_value(value)])

    quality_series = []
    for r in doc.quality or []:
        for metric, value in (
                ("bleu", r.report.bleu),
                ("code_executability", r.report.executability),
                ("semantic_consistency", r.report.semantic_consistency),
        ):
            quality_series.append([r.model, metric, render_value(value)])

    return {FIGURE_ACCURACY: accuracy_series, FIGURE_QUALITY: quality_series}


_HEADERS = {
    TABLE_ACCURACY: HEADER_ACCURACY,
    TABLE_QUALITY: HEADER_QUALITY,
    TABLE_PERFORMANCE: HEADER_PERFORMANCE,
    TABLE_ROBUSTNESS: HEADER_ROBUSTNESS,
}


def emit_report(doc: MetricsDocument, out_dir: str | Path) -> List[Path]:
    out_dir = Path(out_dir)
    tables_dir = out_dir / "tables"
    figures_dir = out_dir / "figures"
    tables_dir.mkdir(parents=True, exist_ok=True)
    figures_dir.mkdir(parents=True, exist_ok=True)

    written = [write_metrics(doc, out_dir)]
    for name, rows in table_rows(doc).items():
        _write_csv(tables_dir / name, _HEADERS[name], rows)
        written.append(tables_dir / name)
    for name, rows in figure_rows(doc).items():
        _write_csv(figures_dir / name, HEADER_FIGURE, rows)
        written.append(figures_dir / name)

    logger.info("wrote %d report files under %s", len(written), out_dir)
    return written


def write_metrics(doc: MetricsDocument, out_dir: str | Path) -> Path:
    path = Path(out_dir) / METRICS_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(doc.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def load_metrics(out_dir: str | Path) -> MetricsDocument:
    path = Path(out_dir) / METRICS_FILE
    if not path.exists():
        raise DataError(f"{path}: no stored metrics; run eval, robust or bench first")
    try:
        return MetricsDocument.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DataError(f"{path}: invalid metrics document: {e.errors()[0]['msg']}") from e


def update_metrics(out_dir: str | Path, **sections) -> MetricsDocument:
    """Merges ``sections`` into the stored document (creating it if absent)."""
    path = Path(out_dir) / METRICS_FILE
    doc = load_metrics(out_dir) if path.exists() else MetricsDocument()
    return doc.model_copy(update=sections)
