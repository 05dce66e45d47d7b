import logging
import time
from typing import List, Sequence

from pydantic import BaseModel

from hcc.errors import EmptyEvaluationError
from hcc.generator import NextTokenModel, generate
from hcc.metrics import latency_report
from hcc.schemas.reports import LatencyReport, TimingRecord


logger = logging.getLogger(__name__)

BYTES_PER_GB = 1024 ** 3


class ThroughputResult(BaseModel):
    tokens_per_second: float
    memory_bytes: int
    generated_tokens: int
    latency: LatencyReport

    @property
    def memory_gb(self) -> float:
        return self.memory_bytes / BYTES_PER_GB


def _now_ms() -> float:
    return time.perf_counter() * 1000.0


def benchmark_throughput(
        model: NextTokenModel, prompts: Sequence[Sequence[int]], max_new: int
) -> ThroughputResult:
    """
    Greedy generation of up to ``max_new`` tokens per prompt, one timing record
    per completion. Memory is the model's own allocation counter when it
    exposes one (``allocated_bytes``), otherwise 0.
    """
    if not prompts:
        raise EmptyEvaluationError("benchmark needs at least one prompt")

    reset = getattr(model, "reset_allocations", None)
    if callable(reset):
        reset()

    records: List[TimingRecord] = []
    generated = 0
    for prompt in prompts:
        t_start = _now_ms()
        tokens = generate(model, prompt, max_new)
        t_end = _now_ms()
        records.append(TimingRecord(t_start=t_start, t_end=t_end))
        generated += len(tokens)

    elapsed_s = sum(r.t_end - r.t_start for r in records) / 1000.0
    allocated = getattr(model, "allocated_bytes", None)
    memory = int(allocated()) if callable(allocated) else 0

    report = latency_report(records)
    tokens_per_second = generated / elapsed_s if elapsed_s > 0 else 0.0
    logger.info(
        "benchmarked %d prompts: %d tokens, %.2f tokens/s, ART %.3f ms",
        len(prompts), generated, tokens_per_second, report.art_ms,
    )
    return ThroughputResult(
        tokens_per_second=tokens_per_second,
        memory_bytes=memory,
        generated_tokens=generated,
        latency=report,
    )
