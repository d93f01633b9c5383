"""Adapter wire protocol: line-delimited JSON with explicit NaN/Inf encoding.

One UTF-8 JSON object per line over the child's stdin/stdout. Floats ride as
JSON numbers except non-finite values, which become the strings "NaN", "Inf",
and "-Inf" inside data arrays so every implementation round-trips them
identically.
"""

from __future__ import annotations

import json
import math

import numpy as np

NONFINITE_TO_STR = {math.inf: "Inf", -math.inf: "-Inf"}
STR_TO_NONFINITE = {"NaN": math.nan, "Inf": math.inf, "-Inf": -math.inf}


def encode_data(values) -> list:
    """Float list with non-finite entries replaced by their string names."""
    out = []
    for v in values:
        v = float(v)
        if math.isfinite(v):
            out.append(v)
        elif math.isnan(v):
            out.append("NaN")
        else:
            out.append(NONFINITE_TO_STR[v])
    return out


def decode_data(values) -> list:
    """Inverse of :func:`encode_data`; raises ValueError on junk entries."""
    out = []
    for idx, v in enumerate(values):
        if isinstance(v, str):
            if v not in STR_TO_NONFINITE:
                raise ValueError(f"data[{idx}]: unknown non-finite token {v!r}")
            out.append(STR_TO_NONFINITE[v])
        elif isinstance(v, (int, float)) and not isinstance(v, bool):
            out.append(float(v))
        else:
            raise ValueError(f"data[{idx}]: expected number or non-finite token, got {type(v).__name__}")
    return out


def tensor_to_wire(tensor) -> dict:
    return {
        "shape": list(tensor.shape.as_tuple()),
        "data": encode_data(tensor.flat.tolist()),
    }


def tensor_from_wire(obj, dtype=np.float64):
    from .backends import Tensor
    from .graph import TensorShape

    if not isinstance(obj, dict):
        raise ValueError(f"tensor payload must be an object, got {type(obj).__name__}")
    shape_list = obj.get("shape")
    if not isinstance(shape_list, list) or len(shape_list) != 4:
        raise ValueError("tensor payload needs a 4-element shape array")
    shape = TensorShape(*shape_list)
    data = obj.get("data")
    if not isinstance(data, list):
        raise ValueError("tensor payload needs a data array")
    values = decode_data(data)
    if len(values) != shape.element_count:
        raise ValueError(f"data length {len(values)} != element count {shape.element_count}")
    return Tensor.from_flat(shape, values, dtype=dtype)


def dump_message(obj: dict) -> bytes:
    """One protocol frame, newline terminated.

    Callers are responsible for pre-encoding non-finite floats in data
    arrays; any that leak through are a programming error, so refuse them.
    """
    return (json.dumps(obj, allow_nan=False, separators=(",", ":")) + "\n").encode("utf-8")


def parse_message(line: bytes | str) -> dict:
    if isinstance(line, bytes):
        line = line.decode("utf-8", errors="replace")
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"bad JSON frame: {exc}") from exc
    if not isinstance(obj, dict):
        raise ValueError(f"frame must be an object, got {type(obj).__name__}")
    if "type" not in obj:
        raise ValueError("frame missing 'type'")
    return obj
