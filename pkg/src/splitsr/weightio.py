"""Versioned binary weight files (magic "SSRW").

Layout, all integers little-endian:

    magic       4 bytes  b"SSRW"
    version     u16      currently 1
    cfg_len     u32      length of the config block
    cfg         bytes    NetworkConfig as canonical JSON (utf-8)
    cfg_crc     u32      crc32 of the config block
    count       u32      number of tensors
    per tensor:
        name_len  u16, name bytes (utf-8)
        dtype     u8   (0 = float32)
        rank      u8
        dims      u32 * rank
        data      raw little-endian float32 values

Round-trips are bit-exact; the loader rebuilds the architecture from
the config and validates every tensor shape against it.
"""

from __future__ import annotations

import io
import struct
import zlib
from typing import BinaryIO, Union

import numpy as np

from .network import Network, NetworkConfig, build, named_weights

MAGIC = b"SSRW"
VERSION = 1
_DTYPE_F32 = 0


class WeightFileError(ValueError):
    """Malformed, truncated or architecture-incompatible weight file."""


def _write_tensor(out: BinaryIO, name: str, arr: np.ndarray) -> None:
    data = np.ascontiguousarray(arr, dtype="<f4")
    nb = name.encode("utf-8")
    out.write(struct.pack("<H", len(nb)))
    out.write(nb)
    out.write(struct.pack("<BB", _DTYPE_F32, data.ndim))
    out.write(struct.pack(f"<{data.ndim}I", *data.shape))
    out.write(data.tobytes())


def save_weights(net: Network, destination: Union[str, BinaryIO]) -> None:
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<H", VERSION))
    cfg = net.config.to_json().encode("utf-8")
    out.write(struct.pack("<I", len(cfg)))
    out.write(cfg)
    out.write(struct.pack("<I", zlib.crc32(cfg)))
    tensors = []
    for name, w in named_weights(net):
        tensors.append((f"{name}.kernel", w.kernel))
        if w.bias is not None:
            tensors.append((f"{name}.bias", w.bias))
    out.write(struct.pack("<I", len(tensors)))
    for name, arr in tensors:
        _write_tensor(out, name, arr)
    blob = out.getvalue()
    if isinstance(destination, str):
        with open(destination, "wb") as fh:
            fh.write(blob)
    else:
        destination.write(blob)


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise WeightFileError("truncated weight file")
        chunk = self.blob[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_weights(source: Union[str, bytes, BinaryIO]) -> Network:
    if isinstance(source, str):
        with open(source, "rb") as fh:
            blob = fh.read()
    elif isinstance(source, bytes):
        blob = source
    else:
        blob = source.read()
    r = _Reader(blob)
    if r.take(4) != MAGIC:
        raise WeightFileError("bad magic; not a SSRW weight file")
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise WeightFileError(f"unsupported weight file version {version}")
    (cfg_len,) = r.unpack("<I")
    cfg_bytes = r.take(cfg_len)
    (crc,) = r.unpack("<I")
    if zlib.crc32(cfg_bytes) != crc:
        raise WeightFileError("config hash mismatch")
    import json

    config = NetworkConfig.from_dict(json.loads(cfg_bytes.decode("utf-8")))
    net = build(config, seed=0)

    (count,) = r.unpack("<I")
    loaded = {}
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        dtype, rank = r.unpack("<BB")
        if dtype != _DTYPE_F32:
            raise WeightFileError(f"unknown dtype tag {dtype}")
        dims = r.unpack(f"<{rank}I")
        n = int(np.prod(dims)) if rank else 1
        data = np.frombuffer(r.take(4 * n), dtype="<f4").reshape(dims)
        loaded[name] = np.ascontiguousarray(data)
    if r.pos != len(blob):
        raise WeightFileError("trailing bytes after tensor table")

    for name, w in named_weights(net):
        for part, expect in (("kernel", w.kernel.shape),
                             ("bias", None if w.bias is None else w.bias.shape)):
            if expect is None:
                continue
            key = f"{name}.{part}"
            if key not in loaded:
                raise WeightFileError(f"missing tensor {key!r}")
            arr = loaded.pop(key)
            if arr.shape != expect:
                raise WeightFileError(
                    f"shape mismatch for {key!r}: file has {arr.shape}, "
                    f"architecture expects {expect}")
            setattr(w, part, arr)
    if loaded:
        raise WeightFileError(f"unexpected tensors: {sorted(loaded)}")
    return net
