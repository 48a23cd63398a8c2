"""Deterministic binary container for named arrays plus JSON metadata.

Layout: one JSON header line describing every array (name, dtype, shape,
byte offset), followed by the raw little-endian array bytes in order.
Unlike ``np.savez`` the output carries no timestamps, so identical content
gives identical bytes.
"""

import json

import numpy as np

MAGIC = "noddle-arrays-v1"


def pack(meta: dict, arrays: dict) -> bytes:
    entries = []
    chunks = []
    offset = 0
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        arr = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        raw = arr.tobytes()
        entries.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape),
                        "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    header = json.dumps({"magic": MAGIC, "meta": meta, "arrays": entries}, sort_keys=True)
    return header.encode() + b"\n" + b"".join(chunks)


def unpack(blob: bytes):
    head, sep, body = blob.partition(b"\n")
    try:
        header = json.loads(head.decode())
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise ValueError("not an array container") from None
    if not sep or header.get("magic") != MAGIC:
        raise ValueError("not an array container")
    arrays = {}
    for e in header["arrays"]:
        raw = body[e["offset"]:e["offset"] + e["nbytes"]]
        arrays[e["name"]] = np.frombuffer(raw, dtype=np.dtype(e["dtype"])).reshape(e["shape"]).copy()
    return header["meta"], arrays
