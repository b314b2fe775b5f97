"""JSON helpers for real/complex ndarrays with explicit shape headers."""

import numpy as np


def pack(arr) -> dict:
    arr = np.asarray(arr)
    out = {"shape": list(arr.shape)}
    if np.iscomplexobj(arr):
        flat = arr.reshape(-1)
        out["re"] = flat.real.tolist()
        out["im"] = flat.imag.tolist()
    elif np.issubdtype(arr.dtype, np.integer):
        out["int"] = arr.reshape(-1).tolist()
    else:
        out["re"] = arr.reshape(-1).tolist()
    return out


def unpack(record: dict) -> np.ndarray:
    shape = tuple(record["shape"])
    if "int" in record:
        return np.asarray(record["int"], dtype=np.int64).reshape(shape)
    re = np.asarray(record["re"], dtype=float)
    if "im" in record:
        return (re + 1j * np.asarray(record["im"], dtype=float)).reshape(shape)
    return re.reshape(shape)
