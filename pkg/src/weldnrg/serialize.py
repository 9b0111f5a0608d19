"""Deterministic JSON and binary output.

JSON keys are sorted and floats are printed with 17 significant digits, so
the same config yields byte-identical output and every number round-trips.
Non-finite values are written as ``null``.
"""
import json
import math
import struct

import numpy as np

from .errors import InvalidParameterError
from .harmonic import GrunskyTable

MAGIC = b"WGRK"
VERSION = 1
_HEADER = struct.Struct("<4sIQ")  # magic, version, N: 16 bytes


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _encode(obj):
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        text = "%.17g" % obj
        # keep floats distinguishable from integers after a round trip
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ", ".join(f"{json.dumps(k)}: {_encode(v)}" for k, v in items) + "}"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj):
    """Canonical JSON text: sorted keys, %.17g floats, NaN/inf as null."""
    return _encode(_plain(obj))


def loads(text):
    return json.loads(text)


def _pairs(a):
    a = np.asarray(a, dtype=complex).ravel()
    return [[float(z.real), float(z.imag)] for z in a]


def table_to_dict(t):
    return {"order": t.order, "grid_size": t.grid_size, "lambda_hat": _pairs(t.lambda_hat)}


def table_from_dict(d):
    n = int(d["order"])
    vals = np.array([complex(re, im) for re, im in d["lambda_hat"]])
    if vals.size != (2 * n + 1) ** 2:
        raise InvalidParameterError("lambda_hat length does not match order")
    return GrunskyTable(vals.reshape(2 * n + 1, 2 * n + 1), n, int(d["grid_size"]))


def matrix_to_dict(a, block="full"):
    a = np.asarray(a)
    return {"order": int(a.shape[0]), "block": block, "values": _pairs(a)}


def matrix_from_dict(d):
    vals = np.array([complex(re, im) for re, im in d["values"]])
    n = int(d["order"])
    return vals.reshape(n, vals.size // n)


def write_matrix_binary(path, a):
    """Square complex matrix as a 16-byte header plus column-major complex128."""
    a = np.asarray(a, dtype="<c16")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidParameterError("binary dump expects a square matrix")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, a.shape[0]))
        fh.write(np.asfortranarray(a).tobytes(order="F"))


def read_matrix_binary(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise InvalidParameterError("truncated header")
        magic, version, n = _HEADER.unpack(head)
        if magic != MAGIC:
            raise InvalidParameterError(f"bad magic {magic!r}")
        if version != VERSION:
            raise InvalidParameterError(f"unsupported version {version}")
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != n * n:
        raise InvalidParameterError(f"expected {n * n} entries, found {data.size}")
    return data.reshape((n, n), order="F").astype(complex)
