"""Binary tensor container.

Layout::

    b"GDST" | u32 LE version | u64 LE header length | UTF-8 JSON header | payload

The header holds the run-config text and a manifest of
``{name, dtype, shape, offset, length}`` entries; offsets are relative to the
start of the payload, tensors are packed little-endian in manifest order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import BadMagicError, CheckpointBoundsError, CheckpointError, PersistenceError, VersionMismatchError

MAGIC = b"GDST"
VERSION = 1
_PREFIX = struct.Struct("<4sIQ")
_DTYPES = {"float64": "<f8", "float32": "<f4"}


@dataclass
class Checkpoint:
    config_text: str
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def to_bytes(self, storage_dtype: str | None = None) -> bytes:
        manifest = []
        chunks = []
        offset = 0
        for name, arr in self.tensors.items():
            code = _DTYPES[storage_dtype] if storage_dtype else np.dtype(arr.dtype).newbyteorder("<").str
            raw = np.ascontiguousarray(arr, dtype=code).tobytes()
            manifest.append({"name": name, "dtype": code, "shape": list(arr.shape),
                             "offset": offset, "length": len(raw)})
            chunks.append(raw)
            offset += len(raw)
        header = json.dumps({"config": self.config_text, "tensors": manifest},
                            sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
        return _PREFIX.pack(MAGIC, VERSION, len(header)) + header + b"".join(chunks)

    @classmethod
    def from_bytes(cls, blob: bytes) -> Checkpoint:
        if len(blob) < _PREFIX.size:
            raise BadMagicError("file too short to be a checkpoint")
        magic, version, header_len = _PREFIX.unpack_from(blob)
        if magic != MAGIC:
            raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise VersionMismatchError(f"checkpoint version {version}, this build reads {VERSION}")
        start = _PREFIX.size
        if start + header_len > len(blob):
            raise CheckpointBoundsError("header extends past end of file")
        try:
            header = json.loads(blob[start : start + header_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"unreadable header: {exc}") from exc
        payload = memoryview(blob)[start + header_len :]
        tensors: dict[str, np.ndarray] = {}
        end_prev = 0
        for entry in sorted(header["tensors"], key=lambda e: e["offset"]):
            name, off, length = entry["name"], entry["offset"], entry["length"]
            dtype = np.dtype(entry["dtype"])
            shape = tuple(entry["shape"])
            if off < end_prev:
                raise CheckpointBoundsError(f"tensor {name!r} overlaps its predecessor")
            if off + length > len(payload):
                raise CheckpointBoundsError(
                    f"tensor {name!r} spans bytes {off}..{off + length} but payload has {len(payload)}"
                )
            if length != int(np.prod(shape, dtype=np.int64)) * dtype.itemsize:
                raise CheckpointBoundsError(f"tensor {name!r} length {length} does not match shape {shape}")
            tensors[name] = np.frombuffer(payload[off : off + length], dtype=dtype).reshape(shape).copy()
            end_prev = off + length
        ordered = {e["name"]: tensors[e["name"]] for e in header["tensors"]}
        return cls(header["config"], ordered)

    def save(self, path: str | Path, storage_dtype: str | None = None) -> None:
        try:
            Path(path).write_bytes(self.to_bytes(storage_dtype))
        except OSError as exc:
            raise PersistenceError(f"{path}: cannot write checkpoint: {exc.strerror or exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> Checkpoint:
        try:
            blob = Path(path).read_bytes()
        except OSError as exc:
            raise PersistenceError(f"{path}: cannot read checkpoint: {exc.strerror or exc}") from exc
        try:
            return cls.from_bytes(blob)
        except CheckpointError as exc:
            raise type(exc)(f"{path}: {exc}") from None


def save_checkpoint(model, config, path: str | Path) -> None:
    """Write ``model`` weights with the serialized ``config`` (a RunConfig)."""
    from .runconfig import serialize

    ckpt = Checkpoint(serialize(config), {name: t.data for name, t in model.named_parameters()})
    ckpt.save(path, config.output.storage_dtype)


def load_checkpoint(path: str | Path):
    """Rebuild ``(student, run_config)`` from a checkpoint file."""
    from ..models import build_student
    from .runconfig import parse

    ckpt = Checkpoint.load(path)
    config = parse(ckpt.config_text)
    s = config.student
    model = build_student(s.variant, s.frontend, s.block, config.student_seed,
                          step_embedding=s.step_embedding, init_mode="shape")
    params = model.parameters()
    if set(params) != set(ckpt.tensors):
        missing = sorted(set(params) - set(ckpt.tensors))
        extra = sorted(set(ckpt.tensors) - set(params))
        raise CheckpointError(f"tensor set mismatch; missing {missing}, unexpected {extra}")
    for name, t in params.items():
        arr = ckpt.tensors[name]
        if arr.shape != t.shape:
            raise CheckpointError(f"tensor {name!r} has shape {arr.shape}, model expects {t.shape}")
        t.data = arr.astype(np.float64)
    model.trained_target_count = len(config.distill.target_layers)
    return model, config
