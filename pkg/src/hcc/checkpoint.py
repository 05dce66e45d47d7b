"""
Checkpoint file layout::

    b"HCC1" | u64 little-endian manifest length N | N bytes UTF-8 JSON manifest | tensor payload

The payload is every parameter in registration order, row-major little-endian
float32, contiguous. The manifest records each tensor's offset and length
relative to the payload start and a sha256 digest of the whole payload.
"""
import hashlib
import logging
import struct
from pathlib import Path
from typing import List

import numpy as np
from pydantic import ValidationError

from hcc.errors import CheckpointCorruptionError, CheckpointFormatError, CheckpointVersionError
from hcc.fusion import HybridModel
from hcc.schemas.checkpoint import CheckpointManifest, TensorEntry
from hcc.tensor import DTYPE
from hcc.vocabulary import Vocabulary


logger = logging.getLogger(__name__)

MAGIC = b"HCC1"
FORMAT_VERSION = 1
_LENGTH = struct.Struct("<Q")
_STORED = np.dtype("<f4")


def encode_checkpoint(model: HybridModel) -> bytes:
    entries: List[TensorEntry] = []
    chunks: List[bytes] = []
    offset = 0
    for param in model.store.list():
        raw = np.ascontiguousarray(param.value, dtype=_STORED).tobytes()
        entries.append(TensorEntry(name=param.name, shape=list(param.shape), offset=offset, byte_length=len(raw)))
        chunks.append(raw)
        offset += len(raw)

    payload = b"".join(chunks)
    manifest = CheckpointManifest(
        format_version=FORMAT_VERSION,
        encoder=model.encoder_config,
        generator=model.generator_config,
        fusion_mode=model.fusion_mode,
        vocabulary=model.vocab.tokens,
        tensors=entries,
        digest=hashlib.sha256(payload).hexdigest(),
        provenance=model.provenance,
    )
    header = manifest.model_dump_json().encode("utf-8")
    return MAGIC + _LENGTH.pack(len(header)) + header + payload


def decode_checkpoint(data: bytes, expected_version: int = FORMAT_VERSION) -> HybridModel:
    if data[:4] != MAGIC:
        raise CheckpointFormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < 4 + _LENGTH.size:
        raise CheckpointCorruptionError("file ends inside the manifest length")

    (length,) = _LENGTH.unpack_from(data, 4)
    start = 4 + _LENGTH.size
    if len(data) < start + length:
        raise CheckpointCorruptionError("file ends inside the manifest")

    try:
        manifest = CheckpointManifest.model_validate_json(data[start:start + length])
    except ValidationError as e:
        raise CheckpointFormatError(f"invalid manifest: {e.errors()[0]['msg']}") from e

    if manifest.format_version != expected_version:
        raise CheckpointVersionError(
            f"checkpoint format version {manifest.format_version}, reader supports {expected_version}"
        )

    payload = data[start + length:]
    expected_size = sum(e.byte_length for e in manifest.tensors)
    if len(payload) != expected_size:
        raise CheckpointCorruptionError(f"tensor payload is {len(payload)} bytes, manifest declares {expected_size}")
    if hashlib.sha256(payload).hexdigest() != manifest.digest:
        raise CheckpointCorruptionError("tensor payload digest mismatch")

    model = HybridModel(
        Vocabulary(manifest.vocabulary),
        manifest.encoder,
        manifest.generator,
        manifest.fusion_mode,
        seed=manifest.provenance.seed,
    )

    names = [e.name for e in manifest.tensors]
    if sorted(names) != sorted(model.store.names()) or len(set(names)) != len(names):
        raise CheckpointFormatError("tensor directory does not match the model's parameters")

    values = {}
    for entry in manifest.tensors:
        raw = payload[entry.offset:entry.offset + entry.byte_length]
        if len(raw) != entry.byte_length or entry.byte_length != 4 * int(np.prod(entry.shape, dtype=np.int64)):
            raise CheckpointCorruptionError(f"tensor '{entry.name}' has inconsistent extents")
        values[entry.name] = np.frombuffer(raw, dtype=_STORED).reshape(entry.shape).astype(DTYPE)

    model.store.assign(values)
    model.provenance = manifest.provenance
    return model


def save_checkpoint(model: HybridModel, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = encode_checkpoint(model)
    path.write_bytes(data)
    logger.info("wrote checkpoint %s (%d tensors, %d bytes)", path, len(model.store), len(data))


def load_checkpoint(path: str | Path, expected_version: int = FORMAT_VERSION) -> HybridModel:
    path = Path(path)
    model = decode_checkpoint(path.read_bytes(), expected_version)
    logger.info("loaded checkpoint %s (phases %s)", path, model.provenance.phases)
    return model
