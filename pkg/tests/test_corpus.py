import pytest

from hcc.corpus import TokenizedSample, load_corpus, split_corpus, tokenize_samples, CodeSample
from hcc.errors import ArgumentError, CorpusParseError, CorpusSchemaError, LexError
from hcc.vocabulary import UNK


class TestLoadCorpus:
    def test_file_order(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"code": "a = 1"}\n{"code": "b = 2", "extra": true}\n', encoding="utf-8")
        assert [s.code for s in load_corpus(path)] == ["a = 1", "b = 2"]

    def test_invalid_utf8_names_line(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_bytes(b'{"code": "x"}\n\xff\n')
        with pytest.raises(CorpusParseError) as info:
            load_corpus(path)
        assert info.value.line == 2
        assert info.value.exit_code == 2

    def test_parse_error_names_line(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"code": "a"}\n{"code": "b"}\n{\n', encoding="utf-8")
        with pytest.raises(CorpusParseError) as info:
            load_corpus(path)
        assert info.value.line == 3
        assert "line 3" in str(info.value)

    @pytest.mark.parametrize("line", ['{"source": "a"}', '{"code": 5}', '["a"]'])
    def test_schema_error(self, tmp_path, line):
        path = tmp_path / "corpus.jsonl"
        path.write_text(line + "\n", encoding="utf-8")
        with pytest.raises(CorpusSchemaError):
            load_corpus(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text("", encoding="utf-8")
        assert load_corpus(path) == []

    def test_toy_corpus(self, toy_corpus_path):
        assert len(load_corpus(toy_corpus_path)) == 32


class TestTokenize:
    def test_ids_follow_vocabulary(self, mini_vocab):
        sample = TokenizedSample.new("def f ( ) : return zzz", mini_vocab)
        assert sample.tokens == ["def", "f", "(", ")", ":", "return", "zzz"]
        assert sample.ids[-1] == UNK
        assert len(sample.ids) == len(sample.tokens)

    def test_lex_error_names_sample(self, mini_vocab):
        with pytest.raises(LexError, match="sample 1"):
            tokenize_samples([CodeSample(code="x"), CodeSample(code="'open")], mini_vocab)


class TestSplitCorpus:
    def test_sizes(self):
        split = split_corpus(list(range(10)), [0.8, 0.1, 0.1], seed=0)
        assert (len(split.train), len(split.valid), len(split.test)) == (8, 1, 1)

    def test_partition_is_disjoint_and_exhaustive(self):
        samples = list(range(37))
        split = split_corpus(samples, [0.7, 0.2, 0.1], seed=3)
        combined = split.train + split.valid + split.test
        assert sorted(combined) == samples

    def test_seed_reproducible(self):
        a = split_corpus(list(range(20)), [0.5, 0.25, 0.25], seed=7)
        b = split_corpus(list(range(20)), [0.5, 0.25, 0.25], seed=7)
        assert a == b

    def test_all_in_train(self):
        split = split_corpus(list(range(9)), [1.0, 0.0, 0.0], seed=1)
        assert len(split.train) == 9
        assert split.valid == [] and split.test == []

    @pytest.mark.parametrize("ratios", [[1.2, -0.1, -0.1], [0.5, 0.2, 0.2], [0.5, 0.5]])
    def test_invalid_ratios(self, ratios):
        with pytest.raises(ArgumentError):
            split_corpus(list(range(5)), ratios, seed=0)
