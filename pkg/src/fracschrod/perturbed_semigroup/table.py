"""KernelTable and its versioned binary container.

File layout: b"FKL1", a little-endian uint32 header length, the UTF-8 JSON
header, then the kernel values as row-major little-endian float64.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import asdict, dataclass, field

import numpy as np

MAGIC = b"FKL1"


class TableFormatError(ValueError):
    pass


@dataclass
class KernelTable:
    """Kernel values e^{-t Lambda}(x, y) for one source x.

    ``values`` has shape (len(t), len(targets)); ``error`` matches it or is None.
    """

    t: np.ndarray
    source: np.ndarray
    targets: np.ndarray
    values: np.ndarray
    method: str
    eps: float
    error: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.atleast_1d(np.asarray(self.t, dtype=float))
        self.source = np.asarray(self.source, dtype=float)
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=float))
        self.values = np.asarray(self.values, dtype=float).reshape(len(self.t), len(self.targets))
        if self.error is not None:
            self.error = np.asarray(self.error, dtype=float).reshape(self.values.shape)

    def check_nonnegative(self, tol: float = 0.0) -> bool:
        return bool(np.all(self.values >= -tol))

    def header(self) -> dict:
        return {
            "version": 1,
            "method": self.method,
            "eps": self.eps,
            "t": self.t.tolist(),
            "source": self.source.tolist(),
            "targets": self.targets.tolist(),
            "shape": list(self.values.shape),
            "has_error": self.error is not None,
            "meta": self.meta,
        }


def _atomic_write(path: str, payload: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_bytes(table: KernelTable) -> bytes:
    head = json.dumps(table.header(), sort_keys=True).encode("utf-8")
    body = table.values.astype("<f8").tobytes(order="C")
    if table.error is not None:
        body += table.error.astype("<f8").tobytes(order="C")
    return MAGIC + struct.pack("<I", len(head)) + head + body


def from_bytes(buf: bytes) -> KernelTable:
    if buf[:4] != MAGIC:
        raise TableFormatError("not an FKL1 kernel table")
    (n,) = struct.unpack("<I", buf[4:8])
    head = json.loads(buf[8 : 8 + n].decode("utf-8"))
    if head.get("version") != 1:
        raise TableFormatError(f"unsupported table version {head.get('version')!r}")
    shape = tuple(head["shape"])
    size = int(np.prod(shape))
    data = np.frombuffer(buf, dtype="<f8", offset=8 + n)
    expect = size * (2 if head["has_error"] else 1)
    if data.size != expect:
        raise TableFormatError(f"payload holds {data.size} floats, header implies {expect}")
    values = data[:size].reshape(shape).astype(float)
    error = data[size:].reshape(shape).astype(float) if head["has_error"] else None
    return KernelTable(
        t=head["t"], source=head["source"], targets=head["targets"], values=values,
        method=head["method"], eps=head["eps"], error=error, meta=head["meta"],
    )


def save_table(table: KernelTable, path: str) -> None:
    _atomic_write(path, to_bytes(table))


def load_table(path: str) -> KernelTable:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def jsonable(obj):
    """Dataclass/ndarray-aware conversion used for table metadata."""
    if hasattr(obj, "__dataclass_fields__"):
        return jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
