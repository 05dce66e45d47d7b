import numpy as np
import pytest

from hcc.checkpoint import MAGIC, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from hcc.errors import CheckpointCorruptionError, CheckpointFormatError, CheckpointVersionError
from hcc.training import make_examples, train_model
from hcc.schemas.config import PhaseConfig, TrainConfig


@pytest.fixture
def trained_model(make_model):
    model = make_model(seed=7)
    phase = PhaseConfig(rate=0.1, epochs=1)
    config = TrainConfig(batch_size=4, generator_pretrain=phase, encoder_finetune=phase, fusion=phase, joint=phase)
    train_model(model, make_examples([[5, 6, 7, 8], [9, 10, 11]], window=8), config, seed=7)
    return model


class TestCheckpointRoundTrip:
    def test_save_load_save_is_byte_identical(self, trained_model, tmp_path):
        first = tmp_path / "a.hcc"
        second = tmp_path / "b.hcc"
        save_checkpoint(trained_model, first)
        save_checkpoint(load_checkpoint(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_restores_model(self, trained_model, tmp_path):
        path = tmp_path / "model.hcc"
        save_checkpoint(trained_model, path)
        restored = load_checkpoint(path)

        assert restored.provenance.phases == [0, 1, 2, 3]
        assert restored.provenance.seed == 7
        assert restored.vocab.tokens == trained_model.vocab.tokens
        assert restored.store.names() == trained_model.store.names()
        np.testing.assert_allclose(
            restored.next_token_logits([5, 6]), trained_model.next_token_logits([5, 6]), atol=1e-4
        )

    def test_dynamic_mode_survives(self, make_model):
        model = make_model(fusion_mode="dynamic")
        assert decode_checkpoint(encode_checkpoint(model)).fusion_mode == "dynamic"

    def test_starts_with_magic(self, mini_model):
        assert encode_checkpoint(mini_model)[:4] == MAGIC


class TestCheckpointErrors:
    def test_bad_magic(self, mini_model):
        data = b"XXXX" + encode_checkpoint(mini_model)[4:]
        with pytest.raises(CheckpointFormatError):
            decode_checkpoint(data)

    def test_version_mismatch(self, mini_model):
        with pytest.raises(CheckpointVersionError):
            decode_checkpoint(encode_checkpoint(mini_model), expected_version=2)

    def test_payload_corruption(self, mini_model):
        data = bytearray(encode_checkpoint(mini_model))
        data[-1] ^= 0xFF
        with pytest.raises(CheckpointCorruptionError):
            decode_checkpoint(bytes(data))

    def test_truncated_payload(self, mini_model):
        with pytest.raises(CheckpointCorruptionError):
            decode_checkpoint(encode_checkpoint(mini_model)[:-8])

    def test_truncated_manifest(self, mini_model):
        with pytest.raises(CheckpointCorruptionError):
            decode_checkpoint(encode_checkpoint(mini_model)[:20])

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_checkpoint(tmp_path / "absent.hcc")
