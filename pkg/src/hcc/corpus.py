import json
import logging
import math
from pathlib import Path
from typing import Any, List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from hcc.errors import ArgumentError, CorpusParseError, CorpusSchemaError, LexError
from hcc.lexer import tokenize_code
from hcc.vocabulary import Vocabulary


logger = logging.getLogger(__name__)


class CodeSample(BaseModel):
    model_config = ConfigDict(extra="ignore")

    code: str


class TokenizedSample(BaseModel):
    source: str
    tokens: List[str]
    ids: List[int]

    @model_validator(mode="after")
    def validate_lengths(self):
        if len(self.tokens) != len(self.ids):
            raise ValueError(f"{len(self.tokens)} tokens but {len(self.ids)} ids")
        return self

    @classmethod
    def new(cls, source: str, vocab: Vocabulary) -> "TokenizedSample":
        tokens = tokenize_code(source)
        return cls(source=source, tokens=tokens, ids=vocab.encode(tokens))


class CorpusSplit(BaseModel):
    train: List[Any]
    valid: List[Any]
    test: List[Any]
    seed: int
    ratios: List[float] = Field(min_length=3, max_length=3)


def load_corpus(path: str | Path) -> List[CodeSample]:
    path = Path(path)
    samples: List[CodeSample] = []

    with path.open("rb") as f:
        for line_no, raw in enumerate(f, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise CorpusParseError(str(path), line_no, f"invalid UTF-8 at byte {e.start}") from e
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusParseError(str(path), line_no, e.msg) from e

            if not isinstance(record, dict) or "code" not in record:
                raise CorpusSchemaError(str(path), line_no, "missing required field 'code'")
            if not isinstance(record["code"], str):
                raise CorpusSchemaError(str(path), line_no, "field 'code' must be a string")

            samples.append(CodeSample(**record))

    logger.info("loaded %d samples from %s", len(samples), path)
    return samples


def tokenize_samples(samples: Sequence[CodeSample], vocab: Vocabulary) -> List[TokenizedSample]:
    tokenized = []
    for index, sample in enumerate(samples):
        try:
            tokenized.append(TokenizedSample.new(sample.code, vocab))
        except LexError as e:
            raise LexError(f"sample {index}: {e.message}", e.offset) from e
    return tokenized


def split_corpus(samples: Sequence[Any], ratios: Sequence[float], seed: int) -> CorpusSplit:
    if len(ratios) != 3:
        raise ArgumentError(f"expected three ratios, got {len(ratios)}")
    if any(r < 0 for r in ratios):
        raise ArgumentError(f"ratios must be nonnegative, got {list(ratios)}")
    if not math.isclose(sum(ratios), 1.0, rel_tol=0.0, abs_tol=1e-9):
        raise ArgumentError(f"ratios must sum to 1, got {sum(ratios)}")

    n = len(samples)
    order = np.random.default_rng(seed).permutation(n)
    shuffled = [samples[i] for i in order]

    # largest-remainder apportionment; a zero ratio never receives a sample
    exact = [r * n for r in ratios]
    sizes = [math.floor(x + 1e-9) for x in exact]
    by_remainder = sorted(range(3), key=lambda k: (-(exact[k] - sizes[k]), k))
    for k in by_remainder[:max(0, n - sum(sizes))]:
        sizes[k] += 1
    n_train, n_valid = sizes[0], sizes[1]

    return CorpusSplit(
        train=shuffled[:n_train],
        valid=shuffled[n_train:n_train + n_valid],
        test=shuffled[n_train + n_valid:],
        seed=seed,
        ratios=list(ratios),
    )
