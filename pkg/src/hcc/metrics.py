import math
from collections import Counter
from typing import Dict, Hashable, List, Sequence, Tuple

import numpy as np

from hcc.encoder import ContextEncoder
from hcc.errors import ArgumentError, ClockError, EmptyEvaluationError, LexError
from hcc.lexer import tokenize_code
from hcc.schemas.reports import BleuBreakdown, ClassTally, ClassificationCounts, LatencyReport, TimingRecord


def count_predictions(predictions: Sequence[Hashable], labels: Sequence[Hashable]) -> ClassificationCounts:
    if len(predictions) != len(labels):
        raise ArgumentError(f"{len(predictions)} predictions for {len(labels)} labels")

    classes: Dict[str, ClassTally] = {}
    correct = 0
    for predicted, label in zip(predictions, labels):
        p, y = str(predicted), str(label)
        if p == y:
            correct += 1
            classes.setdefault(y, ClassTally()).tp += 1
        else:
            classes.setdefault(p, ClassTally()).fp += 1
            classes.setdefault(y, ClassTally()).fn += 1

    return ClassificationCounts(total=len(labels), correct=correct, classes=dict(sorted(classes.items())))


def accuracy(counts: ClassificationCounts) -> float:
    if counts.total == 0:
        raise EmptyEvaluationError("accuracy over zero predictions")
    return counts.correct / counts.total


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def precision_recall_f1(counts: ClassificationCounts) -> Tuple[float, float, float]:
    """Macro P/R over classes present in the reference labels; F1 is their harmonic mean."""
    present = [t for t in counts.classes.values() if t.tp + t.fn > 0]
    if not present:
        raise EmptyEvaluationError("no reference classes observed")

    precision = sum(_ratio(t.tp, t.tp + t.fp) for t in present) / len(present)
    recall = sum(_ratio(t.tp, t.tp + t.fn) for t in present) / len(present)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def ngrams(tokens: Sequence[Hashable], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _clipped_counts(candidate: Sequence[Hashable], reference: Sequence[Hashable], max_n: int) -> Tuple[List[int], List[int]]:
    matches, totals = [], []
    for n in range(1, max_n + 1):
        cand = ngrams(candidate, n)
        ref = ngrams(reference, n)
        matches.append(sum(min(count, ref[g]) for g, count in cand.items()))
        totals.append(sum(cand.values()))
    return matches, totals


def _score(
        matches: Sequence[int], totals: Sequence[int], c: int, r: int, weights: Sequence[float]
) -> BleuBreakdown:
    # p_1 is never smoothed; higher orders with no matches get +1/+1
    precisions = []
    for n, (m, t) in enumerate(zip(matches, totals), start=1):
        if n >= 2 and m == 0:
            precisions.append((m + 1) / (t + 1))
        else:
            precisions.append(_ratio(m, t))

    if c == 0:
        bp = 0.0
    elif c > r:
        bp = 1.0
    else:
        bp = math.exp(1.0 - r / c)

    if bp == 0.0 or any(p == 0.0 for p in precisions):
        score = 0.0
    else:
        score = bp * math.exp(math.fsum(w * math.log(p) for w, p in zip(weights, precisions)))

    return BleuBreakdown(
        score=min(score, 1.0),
        brevity_penalty=bp,
        weights=list(weights),
        precisions=precisions,
        matches=list(matches),
        totals=list(totals),
        candidate_length=c,
        reference_length=r,
    )


def _weights(max_n: int, weights: Sequence[float] | None) -> List[float]:
    if weights is None:
        return [1.0 / max_n] * max_n
    if len(weights) != max_n or not math.isclose(sum(weights), 1.0, abs_tol=1e-9):
        raise ArgumentError(f"expected {max_n} weights summing to 1, got {list(weights)}")
    return list(weights)


def bleu(
        candidate: Sequence[Hashable],
        reference: Sequence[Hashable],
        max_n: int = 4,
        weights: Sequence[float] | None = None,
) -> BleuBreakdown:
    if not reference:
        raise ArgumentError("BLEU needs a non-empty reference")
    w = _weights(max_n, weights)
    matches, totals = _clipped_counts(candidate, reference, max_n)
    return _score(matches, totals, len(candidate), len(reference), w)


def corpus_bleu(
        pairs: Sequence[Tuple[Sequence[Hashable], Sequence[Hashable]]],
        max_n: int = 4,
        weights: Sequence[float] | None = None,
) -> BleuBreakdown:
    """Corpus BLEU: clipped matches, n-gram totals and lengths are summed before scoring."""
    if not pairs:
        raise EmptyEvaluationError("corpus BLEU over zero pairs")
    w = _weights(max_n, weights)
    matches, totals = [0] * max_n, [0] * max_n
    c = r = 0
    for candidate, reference in pairs:
        if not reference:
            raise ArgumentError("BLEU needs a non-empty reference")
        m, t = _clipped_counts(candidate, reference, max_n)
        matches = [a + b for a, b in zip(matches, m)]
        totals = [a + b for a, b in zip(totals, t)]
        c += len(candidate)
        r += len(reference)
    return _score(matches, totals, c, r, w)


def average_response_time(records: Sequence[TimingRecord]) -> float:
    if not records:
        raise EmptyEvaluationError("average response time over zero records")
    for record in records:
        if record.t_end < record.t_start:
            raise ClockError(f"t_end {record.t_end} precedes t_start {record.t_start}")
    return math.fsum(r.t_end - r.t_start for r in records) / len(records)


def latency_report(records: Sequence[TimingRecord]) -> LatencyReport:
    art = average_response_time(records)
    durations = np.array([r.t_end - r.t_start for r in records])
    p50, p90, p99 = np.percentile(durations, [50, 90, 99])
    return LatencyReport(
        records=list(records),
        count=len(records),
        art_ms=art,
        p50_ms=float(p50),
        p90_ms=float(p90),
        p99_ms=float(p99),
    )


_OPENERS = {"(": ")", "[": "]", "{": "}"}
_CLOSERS = frozenset(_OPENERS.values())


def code_executability(prefix: Sequence[str], completion: Sequence[str]) -> bool:
    """Lexical/structural check: the joined text lexes and brackets nest correctly."""
    try:
        tokens = tokenize_code(" ".join(list(prefix) + list(completion)))
    except LexError:
        return False

    stack: List[str] = []
    for token in tokens:
        if token in _OPENERS:
            stack.append(_OPENERS[token])
        elif token in _CLOSERS:
            if not stack or stack.pop() != token:
                return False
    return not stack


def cosine_consistency(a: np.ndarray, b: np.ndarray) -> float:
    norm = float(np.linalg.norm(a) * np.linalg.norm(b))
    if norm == 0.0:
        return 0.5
    cosine = min(1.0, max(-1.0, float(a @ b) / norm))
    return (cosine + 1.0) / 2.0


def semantic_consistency(candidate: Sequence[int], reference: Sequence[int], encoder: ContextEncoder) -> float:
    return cosine_consistency(
        encoder.encode_context(candidate).f_code,
        encoder.encode_context(reference).f_code,
    )
