"""Protocol server: line-delimited JSON frames over stdin/stdout.

Framework exceptions are contained: they come back as crash frames, never as
protocol corruption, and the process keeps serving. EOF on stdin or a
shutdown frame ends the process cleanly.
"""

from __future__ import annotations

import json
import math
import time

import numpy as np

PROTOCOL_VERSION = 1


def encode_values(values) -> list:
    out = []
    for v in values:
        v = float(v)
        if math.isnan(v):
            out.append("NaN")
        elif v == math.inf:
            out.append("Inf")
        elif v == -math.inf:
            out.append("-Inf")
        else:
            out.append(v)
    return out


def decode_values(values) -> list:
    tokens = {"NaN": math.nan, "Inf": math.inf, "-Inf": -math.inf}
    out = []
    for v in values:
        if isinstance(v, str):
            if v not in tokens:
                raise ValueError(f"unknown non-finite token {v!r}")
            out.append(tokens[v])
        elif isinstance(v, (int, float)) and not isinstance(v, bool):
            out.append(float(v))
        else:
            raise ValueError("data entries must be numbers or non-finite tokens")
    return out


def parse_input_tensor(obj) -> np.ndarray:
    if not isinstance(obj, dict):
        raise ValueError("input must be an object")
    shape = obj.get("shape")
    if not isinstance(shape, list) or len(shape) != 4 or any(not isinstance(d, int) or d < 1 for d in shape):
        raise ValueError("input shape must be four positive integers")
    data = obj.get("data")
    if not isinstance(data, list):
        raise ValueError("input data must be an array")
    values = decode_values(data)
    count = shape[0] * shape[1] * shape[2] * shape[3]
    if len(values) != count:
        raise ValueError(f"input data length {len(values)} != element count {count}")
    return np.array(values, dtype=np.float32).reshape(shape)


def serve(stdin, stdout, framework: str, capabilities) -> int:
    from . import torch_ops

    def reply(obj):
        stdout.write((json.dumps(obj, allow_nan=False) + "\n").encode("utf-8"))
        stdout.flush()

    def crash(phase, message):
        reply({"type": "crash", "phase": phase, "message": message})

    for raw in iter(stdin.readline, b""):
        raw = raw.strip()
        if not raw:
            continue
        try:
            msg = json.loads(raw)
            if not isinstance(msg, dict) or "type" not in msg:
                raise ValueError("frame must be an object with a type")
        except ValueError as exc:
            crash("build", f"protocol-error:{exc}")
            continue
        kind = msg["type"]
        if kind == "hello":
            reply({
                "type": "hello_ack",
                "version": PROTOCOL_VERSION,
                "backend": framework,
                "ops": list(capabilities),
            })
        elif kind == "execute":
            started = time.perf_counter()
            try:
                input_array = parse_input_tensor(msg.get("input"))
                seed = msg.get("param_seed")
                if not isinstance(seed, int) or seed < 0:
                    raise torch_ops.BuildError("param_seed must be a non-negative integer")
                output = torch_ops.execute(msg.get("model"), input_array, seed, capabilities)
            except (torch_ops.BuildError, ValueError) as exc:
                crash("build", str(exc))
                continue
            except Exception as exc:  # framework failure: contain and keep serving
                crash("execute", f"{type(exc).__name__}: {exc}")
                continue
            elapsed = max(time.perf_counter() - started, 1e-9)
            reply({
                "type": "result",
                "output": {
                    "shape": list(output.shape),
                    "data": encode_values(output.reshape(-1).tolist()),
                },
                "elapsed_seconds": elapsed,
            })
        elif kind == "shutdown":
            return 0
        else:
            crash("build", f"protocol-error:unknown message type {kind!r}")
    return 0
