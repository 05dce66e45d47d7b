import pytest

from hcc.errors import ArgumentError, VocabularyError
from hcc.vocabulary import BOS, EOS, MASK, PAD, RESERVED_TOKENS, UNK, Vocabulary, build_vocabulary


class TestVocabulary:
    def test_reserved_ids(self, mini_vocab):
        assert [mini_vocab.id_of(t) for t in RESERVED_TOKENS] == [PAD, UNK, BOS, EOS, MASK]
        assert mini_vocab.size == 16

    def test_unknown_token_encodes_to_unk(self, mini_vocab):
        assert mini_vocab.encode(["def", "zzz"]) == [mini_vocab.id_of("def"), UNK]

    def test_decode_inverts_encode(self, mini_vocab):
        tokens = ["def", "f", "(", ")", ":"]
        assert mini_vocab.decode(mini_vocab.encode(tokens)) == tokens

    def test_decode_unassigned_id(self, mini_vocab):
        with pytest.raises(VocabularyError, match="not assigned"):
            mini_vocab.decode([mini_vocab.size + 10])

    def test_must_start_with_reserved_tokens(self):
        with pytest.raises(VocabularyError):
            Vocabulary(["a", "b"])

    def test_duplicate_tokens_rejected(self):
        with pytest.raises(VocabularyError, match="duplicate"):
            Vocabulary(RESERVED_TOKENS + ["a", "a"])


class TestBuildVocabulary:
    def test_frequency_order(self):
        vocab = build_vocabulary([["a", "a", "b"]], max_size=7)
        assert "a" in vocab and "b" in vocab
        assert vocab.id_of("a") < vocab.id_of("b")

    def test_ties_broken_lexicographically(self):
        vocab = build_vocabulary([["c", "b", "a"]], max_size=8)
        assert vocab.tokens[5:] == ["a", "b", "c"]

    def test_empty_corpus(self):
        assert build_vocabulary([], max_size=10).tokens == RESERVED_TOKENS

    def test_min_freq(self):
        vocab = build_vocabulary([["a", "b", "b"]], max_size=10, min_freq=2)
        assert "a" not in vocab
        assert "b" in vocab

    def test_max_size_caps_admission(self):
        vocab = build_vocabulary([["a", "a", "a", "b", "b", "c"]], max_size=7)
        assert vocab.tokens[5:] == ["a", "b"]

    def test_max_size_must_leave_room(self):
        with pytest.raises(ArgumentError):
            build_vocabulary([["a"]], max_size=5)
