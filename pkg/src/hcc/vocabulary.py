from collections import Counter
from typing import Dict, Iterable, List, Sequence

from hcc.errors import ArgumentError, VocabularyError


PAD, UNK, BOS, EOS, MASK = 0, 1, 2, 3, 4
RESERVED_TOKENS = ["<pad>", "<unk>", "<bos>", "<eos>", "<mask>"]
NUM_RESERVED = len(RESERVED_TOKENS)


class Vocabulary:
    def __init__(self, tokens: Sequence[str]):
        if list(tokens[:NUM_RESERVED]) != RESERVED_TOKENS:
            raise VocabularyError(f"vocabulary must start with the reserved tokens {RESERVED_TOKENS}")

        self._id_to_token: List[str] = list(tokens)
        self._token_to_id: Dict[str, int] = {}
        for i, token in enumerate(self._id_to_token):
            if token in self._token_to_id:
                raise VocabularyError(f"duplicate vocabulary token '{token}'")
            self._token_to_id[token] = i

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    @property
    def size(self) -> int:
        return len(self._id_to_token)

    @property
    def tokens(self) -> List[str]:
        return list(self._id_to_token)

    def id_of(self, token: str) -> int:
        return self._token_to_id.get(token, UNK)

    def token_of(self, token_id: int) -> str:
        if not 0 <= token_id < len(self._id_to_token):
            raise VocabularyError(f"id {token_id} is not assigned (vocabulary size {len(self)})")
        return self._id_to_token[token_id]

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self._token_to_id.get(t, UNK) for t in tokens]

    def decode(self, ids: Iterable[int]) -> List[str]:
        return [self.token_of(int(i)) for i in ids]


def build_vocabulary(samples: Iterable[Sequence[str]], max_size: int, min_freq: int = 1) -> Vocabulary:
    if max_size <= NUM_RESERVED:
        raise ArgumentError(f"max_size must exceed {NUM_RESERVED} reserved ids, got {max_size}")

    counts: Counter = Counter()
    for tokens in samples:
        counts.update(tokens)

    admitted = [
        token for token, freq in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        if freq >= min_freq and token not in RESERVED_TOKENS
    ]
    return Vocabulary(RESERVED_TOKENS + admitted[:max_size - NUM_RESERVED])
