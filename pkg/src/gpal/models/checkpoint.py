"""Bit-exact checkpoint container.

Layout: ``b"GPAL1\\n"``, an 8-byte little-endian header length, a UTF-8 JSON
header, then the float64 little-endian payload.  Tensor offsets are byte
offsets into the payload and must tile it exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..diffcore.tensor import Tensor
from ..textcore.vocab import Vocabulary
from .layers import TransformerConfig
from .lm import CausalLm, EmbeddingBridge
from .nmt import NmtModel

MAGIC = b"GPAL1\n"
KIND_NMT = "nmt"
KIND_LM = "lm_bridge"


class CheckpointError(ValueError):
    pass


def _named_tensors(obj) -> tuple[str, TransformerConfig, Vocabulary, Vocabulary | None, list]:
    if isinstance(obj, NmtModel):
        return KIND_NMT, obj.config, obj.vocab_src, obj.vocab_tgt, [
            (k, v.data) for k, v in obj.params.items()]
    if isinstance(obj, tuple) and len(obj) == 2 and isinstance(obj[0], CausalLm):
        lm, bridge = obj
        named = [(k, v.data) for k, v in lm.params.items()]
        named += [("bridge.fc", bridge.fc.data), ("bridge.bos_source", bridge.bos_source)]
        return KIND_LM, lm.config, lm.vocab, None, named
    raise CheckpointError(f"cannot checkpoint object of type {type(obj).__name__}")


def save_checkpoint(obj, path, meta: dict | None = None) -> Path:
    """Write an ``NmtModel`` or an ``(CausalLm, EmbeddingBridge)`` pair."""
    kind, config, vocab_src, vocab_tgt, named = _named_tensors(obj)
    entries, blobs, offset = [], [], 0
    for name, arr in named:
        arr = np.ascontiguousarray(arr, dtype="<f8")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset,
                        "count": int(arr.size)})
        blobs.append(arr.tobytes())
        offset += arr.size * 8
    header = {"kind": kind, "config": config.to_dict(), "vocab_src": vocab_src.itos}
    if vocab_tgt is not None:
        header["vocab_tgt"] = vocab_tgt.itos
    header["tensors"] = entries
    if meta:
        header["meta"] = meta
    raw = json.dumps(header, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(raw)))
        fh.write(raw)
        for blob in blobs:
            fh.write(blob)
    return path


def read_header(path) -> tuple[dict, bytes]:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise CheckpointError("bad magic: not a GPAL1 checkpoint")
    pos = len(MAGIC)
    if len(data) < pos + 8:
        raise CheckpointError("truncated before header length")
    (n,) = struct.unpack("<Q", data[pos:pos + 8])
    pos += 8
    if len(data) < pos + n:
        raise CheckpointError("truncated header")
    try:
        header = json.loads(data[pos:pos + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable header: {exc}") from None
    return header, data[pos + n:]


def _tensors(header: dict, payload: bytes) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    expected = 0
    for entry in header.get("tensors", []):
        try:
            name, shape = entry["name"], tuple(int(s) for s in entry["shape"])
            offset, count = int(entry["offset"]), int(entry["count"])
        except (KeyError, TypeError, ValueError):
            raise CheckpointError(f"malformed tensor entry {entry!r}") from None
        if count != int(np.prod(shape, dtype=np.int64)):
            raise CheckpointError(f"{name}: count {count} disagrees with shape {list(shape)}")
        if offset != expected:
            raise CheckpointError(f"{name}: offset {offset} does not follow previous tensor ({expected})")
        end = offset + 8 * count
        if end > len(payload):
            raise CheckpointError(f"{name}: payload truncated")
        out[name] = np.frombuffer(payload, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64)
        expected = end
    if expected != len(payload):
        raise CheckpointError(f"payload has {len(payload) - expected} trailing bytes")
    return out


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`; validates everything before building a model."""
    header, payload = read_header(path)
    for key in ("kind", "config", "vocab_src", "tensors"):
        if key not in header:
            raise CheckpointError(f"header lacks {key!r}")
    tensors = _tensors(header, payload)
    try:
        config = TransformerConfig(**header["config"])
    except TypeError as exc:
        raise CheckpointError(f"bad config: {exc}") from None
    vocab_src = Vocabulary(header["vocab_src"])
    kind = header["kind"]
    if kind == KIND_NMT:
        if "vocab_tgt" not in header:
            raise CheckpointError("nmt checkpoint lacks vocab_tgt")
        vocab_tgt = Vocabulary(header["vocab_tgt"])
        params = {k: Tensor(v, requires_grad=False, name=k) for k, v in tensors.items()}
        reference = NmtModel(config, vocab_src, vocab_tgt, seed=0)
        _check_names(reference.params, params)
        return NmtModel(config, vocab_src, vocab_tgt, params=params)
    if kind == KIND_LM:
        fc = tensors.pop("bridge.fc", None)
        bos = tensors.pop("bridge.bos_source", None)
        if fc is None or bos is None:
            raise CheckpointError("lm checkpoint lacks bridge tensors")
        params = {k: Tensor(v, name=k) for k, v in tensors.items()}
        _check_names(CausalLm(config, vocab_src, seed=0).params, params)
        return CausalLm(config, vocab_src, params=params), EmbeddingBridge(Tensor(fc, name="fc"), bos)
    raise CheckpointError(f"unknown checkpoint kind {kind!r}")


def _check_names(reference: dict, params: dict) -> None:
    if list(reference) != list(params):
        raise CheckpointError("tensor names do not match the model layout")
    for k, v in reference.items():
        if v.shape != params[k].shape:
            raise CheckpointError(f"{k}: shape {params[k].shape} != expected {v.shape}")
