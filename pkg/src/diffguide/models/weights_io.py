"""Weight files: JSON header + raw little-endian payload with a checksum.

Layout: 4-byte magic, uint32 little-endian header length, UTF-8 JSON
header, then the arrays' bytes concatenated in header order. The header
records name/shape/dtype per array and a sha256 of the payload, so a
truncated or bit-flipped file fails loudly instead of loading garbage.
"""

import hashlib
import json

import numpy as np

__all__ = ["save_weights", "load_weights", "WeightFormatError"]

MAGIC = b"DGW\x01"
VERSION = 1


class WeightFormatError(ValueError):
    pass


def _le_dtype(dt):
    dt = np.dtype(dt)
    return dt.newbyteorder("<")


def save_weights(path, params, meta=None):
    names = sorted(params)
    payload = b"".join(np.ascontiguousarray(params[n], dtype=_le_dtype(params[n].dtype)).tobytes()
                       for n in names)
    header = {
        "version": VERSION,
        "arrays": [
            {"name": n, "shape": list(params[n].shape), "dtype": _le_dtype(params[n].dtype).str}
            for n in names
        ],
        "sha256": hashlib.sha256(payload).hexdigest(),
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(blob).to_bytes(4, "little"))
        fh.write(blob)
        fh.write(payload)


def load_weights(path):
    """Returns (params dict, meta dict); raises WeightFormatError on damage."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise WeightFormatError("bad magic; not a weight file")
    hlen = int.from_bytes(raw[4:8], "little")
    try:
        header = json.loads(raw[8 : 8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise WeightFormatError("unreadable header") from e
    if header.get("version") != VERSION:
        raise WeightFormatError(f"unsupported version {header.get('version')!r}")
    payload = raw[8 + hlen :]
    if hashlib.sha256(payload).hexdigest() != header["sha256"]:
        raise WeightFormatError("checksum mismatch; file truncated or corrupted")
    params = {}
    off = 0
    for spec in header["arrays"]:
        dt = np.dtype(spec["dtype"])
        n_bytes = int(np.prod(spec["shape"], dtype=np.int64)) * dt.itemsize if spec["shape"] else dt.itemsize
        count = n_bytes // dt.itemsize
        arr = np.frombuffer(payload[off : off + n_bytes], dtype=dt, count=count)
        params[spec["name"]] = arr.reshape(spec["shape"]).copy()
        off += n_bytes
    return params, header["meta"]
