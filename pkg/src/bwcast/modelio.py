"""Binary model container.

Layout (all integers little-endian)::

    8 bytes   magic  b"BWCMODEL"
    4 bytes   uint32 format version
    8 bytes   uint64 header length H
    H bytes   UTF-8 JSON header (sorted keys): spec, normalizer method,
              tensor manifest [(name, shape)], training history, config echo
    ...       tensor payload: float64 little-endian, C order, manifest order
    32 bytes  SHA-256 of every preceding byte

Tensor names prefixed ``norm.`` hold the normalizer state; all others are
network parameters.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .exceptions import ModelFileError
from .nn.model import ForecastModel, ModelSpec
from .preprocess import Normalizer

MAGIC = b"BWCMODEL"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sIQ")
_DIGEST = 32


def save_model(model: ForecastModel, normalizer: Normalizer | None, path, config: dict | None = None) -> None:
    tensors = [(name, np.asarray(arr, dtype="<f8")) for name, arr in model.params.items()]
    method = None
    if normalizer is not None:
        method = normalizer.method
        tensors += [(f"norm.{k}", np.asarray(v, dtype="<f8")) for k, v in normalizer.get_state().items()]
    header = {
        "spec": model.spec.to_dict(),
        "normalizer": method,
        "tensors": [[name, list(arr.shape)] for name, arr in tensors],
        "history": model.history,
        "config": config or {},
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = _PREFIX.pack(MAGIC, FORMAT_VERSION, len(hbytes)) + hbytes
    body += b"".join(np.ascontiguousarray(arr).tobytes() for _, arr in tensors)
    Path(path).write_bytes(body + hashlib.sha256(body).digest())


def load_model(path) -> tuple[ForecastModel, Normalizer | None, dict]:
    """Return ``(model, normalizer, config)``; raises :class:`ModelFileError` on any inconsistency."""
    data = Path(path).read_bytes()
    if len(data) < _PREFIX.size + _DIGEST:
        raise ModelFileError(f"{path}: truncated model file")
    magic, version, hlen = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise ModelFileError(f"{path}: not a model file (bad magic)")
    if version != FORMAT_VERSION:
        raise ModelFileError(f"{path}: unsupported model file version {version} (expected {FORMAT_VERSION})")
    body, digest = data[:-_DIGEST], data[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise ModelFileError(f"{path}: checksum mismatch (file corrupted or truncated)")

    start = _PREFIX.size
    try:
        header = json.loads(body[start:start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFileError(f"{path}: unreadable header: {exc}") from exc
    offset = start + hlen
    tensors = {}
    for name, shape in header["tensors"]:
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + 8 * count
        if end > len(body):
            raise ModelFileError(f"{path}: truncated tensor payload at {name}")
        arr = np.frombuffer(body[offset:end], dtype="<f8").astype(float).reshape(shape)
        if not np.all(np.isfinite(arr)):
            raise ModelFileError(f"{path}: non-finite values in tensor {name}")
        tensors[name] = arr
        offset = end
    if offset != len(body):
        raise ModelFileError(f"{path}: {len(body) - offset} unexpected trailing bytes")

    spec_d = dict(header["spec"])
    spec_d["units"] = tuple(spec_d["units"])
    spec = ModelSpec(**spec_d)
    params = {k: v for k, v in tensors.items() if not k.startswith("norm.")}
    expected = spec.param_shapes()
    if list(params) != list(expected) or any(params[k].shape != s for k, s in expected.items()):
        raise ModelFileError(f"{path}: parameter tensors do not match the stored topology")
    normalizer = None
    if header["normalizer"] is not None:
        state = {k[5:]: v for k, v in tensors.items() if k.startswith("norm.")}
        normalizer = Normalizer.from_state(header["normalizer"], state)
    return ForecastModel(spec, params, header["history"]), normalizer, header["config"]
