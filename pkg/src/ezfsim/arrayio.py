"""JSON container for complex arrays, used to diff results across runs and
implementations.

Layout::

    {"format": "ezfsim-arrays/1",
     "meta": {...},
     "arrays": {"h": {"shape": [K, N_R, N_T], "dtype": "complex128",
                      "data": [re0, im0, re1, im1, ...]}}}

``data`` is row-major with real and imaginary parts interleaved.  Python's
float repr round-trips exactly, so a save/load cycle is lossless.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .channel import RNG_ALGORITHM, ChannelSet, SystemConfig
from .precoder import Precoder

FORMAT = "ezfsim-arrays/1"

__all__ = [
    "FORMAT",
    "dump_arrays",
    "load_arrays",
    "load_channels",
    "load_precoder",
    "parse_arrays",
    "save_arrays",
    "save_channels",
    "save_precoder",
]


def _encode(a: np.ndarray) -> dict:
    a = np.asarray(a)
    if np.iscomplexobj(a):
        flat = np.column_stack([a.real.ravel(), a.imag.ravel()]).ravel()
        dtype = "complex128"
    else:
        flat = a.astype(float).ravel()
        dtype = "float64"
    return {"shape": list(a.shape), "dtype": dtype, "data": [float(x) for x in flat]}


def _decode(entry: dict) -> np.ndarray:
    shape = tuple(entry["shape"])
    data = np.asarray(entry["data"], dtype=float)
    if entry["dtype"] == "complex128":
        pairs = data.reshape(-1, 2)
        return (pairs[:, 0] + 1j * pairs[:, 1]).reshape(shape)
    if entry["dtype"] == "float64":
        return data.reshape(shape)
    raise ValueError(f"unsupported dtype {entry['dtype']!r}")


def dump_arrays(arrays: dict[str, np.ndarray], meta: dict | None = None) -> str:
    doc = {
        "format": FORMAT,
        "meta": meta or {},
        "arrays": {name: _encode(a) for name, a in arrays.items()},
    }
    return json.dumps(doc)


def parse_arrays(text: str) -> tuple[dict[str, np.ndarray], dict]:
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ValueError(f"not an {FORMAT} document")
    return {name: _decode(e) for name, e in doc["arrays"].items()}, doc.get("meta", {})


def save_arrays(path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    Path(path).write_text(dump_arrays(arrays, meta))


def load_arrays(path) -> tuple[dict[str, np.ndarray], dict]:
    return parse_arrays(Path(path).read_text())


def save_channels(path, ch: ChannelSet, **meta) -> None:
    meta = {"kind": "ChannelSet", "cfg": ch.cfg.to_dict(), "rng": RNG_ALGORITHM, **meta}
    arrays = {"h": ch.h}
    if ch.gains is not None:
        arrays["gains"] = ch.gains
    save_arrays(path, arrays, meta)


def load_channels(path) -> ChannelSet:
    arrays, meta = load_arrays(path)
    cfg = SystemConfig(**meta["cfg"])
    return ChannelSet(cfg, arrays["h"], arrays.get("gains"))


def save_precoder(path, pre: Precoder, **meta) -> None:
    meta = {"kind": "Precoder", "scheme": pre.scheme, "n_bcu": pre.n_bcu, "gamma": pre.gamma,
            "zero_columns": [list(z) for z in pre.zero_columns], **meta}
    save_arrays(path, {"w": pre.w, "q": pre.q}, meta)


def load_precoder(path) -> Precoder:
    arrays, meta = load_arrays(path)
    return Precoder(arrays["w"], arrays["q"], meta["scheme"], meta["n_bcu"], meta.get("gamma"),
                    tuple(tuple(z) for z in meta.get("zero_columns", [])))
