from typing import Sequence

import numpy as np

from hcc.vocabulary import BOS


class BigramBaseline:
    """Add-one smoothed bigram counts over training sequences; logits are log-probabilities."""

    def __init__(self, vocab_size: int):
        self.vocab_size = vocab_size
        self.counts = np.ones((vocab_size, vocab_size))

    def fit(self, sequences: Sequence[Sequence[int]]) -> "BigramBaseline":
        for ids in sequences:
            previous = BOS
            for token in ids:
                self.counts[previous, token] += 1.0
                previous = token
        return self

    def next_token_logits(self, prefix: Sequence[int]) -> np.ndarray:
        previous = prefix[-1] if len(prefix) else BOS
        row = self.counts[previous]
        return np.log(row / row.sum())

    def allocated_bytes(self) -> int:
        return self.counts.nbytes
