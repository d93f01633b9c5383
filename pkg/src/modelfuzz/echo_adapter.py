"""Minimal in-tree adapter double for protocol tests.

Speaks the full wire protocol but only executes Identity and ReLU, which is
enough to exercise handshakes, capability rejections, crash containment, and
connection-loss handling without a real framework. Test hooks:

    MODELFUZZ_ECHO_VERSION         override the hello_ack version
    MODELFUZZ_ECHO_DIE_ON_EXECUTE  exit abruptly when an execute arrives
    MODELFUZZ_ECHO_HANG_ON_EXECUTE sleep through an execute (timeout tests)

Run with ``python -m modelfuzz.echo_adapter``.
"""

from __future__ import annotations

import os
import sys
import time

import numpy as np

from . import wire
from .errors import InvalidModelError, ModelParseError
from .graph import model_from_obj

SUPPORTED_OPS = ("Identity", "ReLU")


def _execute(model, input_tensor):
    for _, _, op in model.edges:
        if op.tag not in SUPPORTED_OPS:
            raise ValueError(f"unsupported-operator:{op.tag}")
    incoming: dict[int, list] = {}
    for i, j, op in model.sorted_edges:
        incoming.setdefault(j, []).append((i, op))
    values = {0: input_tensor.data.astype(np.float32)}
    for v in range(1, model.vertex_count):
        if v not in incoming:
            continue
        acc = None
        for i, op in sorted(incoming[v], key=lambda e: e[0]):
            x = values[i]
            out = np.maximum(x, np.float32(0)) if op.tag == "ReLU" else x
            acc = out if acc is None else acc + out
        values[v] = acc
    return values[model.vertex_count - 1]


def serve(stdin, stdout) -> int:
    from .backends import Tensor

    def reply(obj):
        stdout.write(wire.dump_message(obj))
        stdout.flush()

    for raw in iter(stdin.readline, b""):
        raw = raw.strip()
        if not raw:
            continue
        try:
            msg = wire.parse_message(raw)
        except ValueError as exc:
            reply({"type": "crash", "phase": "build", "message": f"protocol-error:{exc}"})
            continue
        kind = msg.get("type")
        if kind == "hello":
            version = int(os.environ.get("MODELFUZZ_ECHO_VERSION", "1"))
            reply({"type": "hello_ack", "version": version, "backend": "echo", "ops": list(SUPPORTED_OPS)})
        elif kind == "execute":
            if os.environ.get("MODELFUZZ_ECHO_DIE_ON_EXECUTE"):
                os._exit(17)
            if os.environ.get("MODELFUZZ_ECHO_HANG_ON_EXECUTE"):
                time.sleep(60)
            start = time.perf_counter()
            try:
                model = model_from_obj(msg.get("model"))
                tensor = wire.tensor_from_wire(msg.get("input"), dtype=np.float32)
                if tensor.shape != model.input_shape:
                    raise ValueError("input shape does not match model input shape")
                out = _execute(model, tensor)
            except (ModelParseError, InvalidModelError, ValueError) as exc:
                reply({"type": "crash", "phase": "build", "message": str(exc)})
                continue
            except Exception as exc:
                reply({"type": "crash", "phase": "execute", "message": f"{type(exc).__name__}: {exc}"})
                continue
            elapsed = max(time.perf_counter() - start, 1e-9)
            reply({
                "type": "result",
                "output": wire.tensor_to_wire(Tensor(np.ascontiguousarray(out))),
                "elapsed_seconds": elapsed,
            })
        elif kind == "shutdown":
            return 0
        else:
            reply({"type": "crash", "phase": "build", "message": f"protocol-error:unknown message type {kind!r}"})
    return 0


def main() -> int:
    return serve(sys.stdin.buffer, sys.stdout.buffer)


if __name__ == "__main__":
    sys.exit(main())
