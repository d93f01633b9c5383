"""Execution backends: native interpreters, fault injection, adapter client.

The two native interpreters compute the same mathematical function from
shared float32 parameters but with deliberately different numerics:

    reference   float64, forward accumulation, softmax subtracts the max
    alternate   float32, pairwise-tree accumulation, softmax does not

so cross-backend differencing has a realistic, reproducible signal without
real DL frameworks in the loop.

Native backends report a deterministic virtual clock (a fixed cost model
over operator work) as ``elapsed_seconds`` so campaign logs are replayable
byte for byte; adapter backends report their own wall clock.
"""

from __future__ import annotations

import os
import select
import subprocess
import time
from dataclasses import dataclass

import numpy as np

from . import kernels, params, wire
from .errors import BackendUnavailableError
from .graph import GraphModel, TensorShape, model_to_obj, require_valid

# Virtual clock calibration: work units are roughly scalar flops.
COST_BASE_SECONDS = 1e-4
COST_SECONDS_PER_UNIT = 5e-9

ADAPTER_PROTOCOL_VERSION = 1
DEFAULT_ADAPTER_TIMEOUT = 30.0


@dataclass(frozen=True, eq=False)
class Tensor:
    """NCHW tensor; data is a C-contiguous float32/float64 ndarray."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 4:
            raise ValueError(f"tensor must be 4-d NCHW, got ndim {self.data.ndim}")
        if self.data.dtype not in (np.float32, np.float64):
            raise ValueError(f"tensor dtype must be float32 or float64, got {self.data.dtype}")
        if not self.data.flags.c_contiguous:
            object.__setattr__(self, "data", np.ascontiguousarray(self.data))

    @classmethod
    def from_flat(cls, shape: TensorShape, values, dtype=np.float64) -> "Tensor":
        arr = np.asarray(values, dtype=dtype).reshape(shape.as_tuple())
        return cls(arr)

    @property
    def shape(self) -> TensorShape:
        return TensorShape(*map(int, self.data.shape))

    @property
    def dtype_tag(self) -> str:
        return "f32" if self.data.dtype == np.float32 else "f64"

    @property
    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)


@dataclass(frozen=True)
class CrashInfo:
    message: str
    phase: str  # "build" | "execute"


@dataclass(frozen=True, eq=False)
class ExecutionOutcome:
    """Either an output tensor or a crash, plus elapsed time."""

    output: Tensor | None
    crash: CrashInfo | None
    elapsed_seconds: float

    def __post_init__(self):
        if (self.output is None) == (self.crash is None):
            raise ValueError("outcome must carry exactly one of output/crash")
        if not self.elapsed_seconds > 0:
            raise ValueError("elapsed_seconds must be positive")

    @property
    def ok(self) -> bool:
        return self.crash is None

    @classmethod
    def success(cls, output: Tensor, elapsed: float) -> "ExecutionOutcome":
        return cls(output, None, elapsed)

    @classmethod
    def crashed(cls, message: str, phase: str, elapsed: float) -> "ExecutionOutcome":
        return cls(None, CrashInfo(message, phase), elapsed)


@dataclass(frozen=True)
class BackendId:
    name: str
    kind: str  # native-reference | native-alternate | fault-injection | external-adapter


class _InjectedCrash(RuntimeError):
    pass


def _pad_same(x: np.ndarray, size: int, dilation: int, fill: float) -> np.ndarray:
    """SAME padding for an effective window of `size` taps at `dilation`."""
    eff = (size - 1) * dilation
    lo = eff // 2
    hi = eff - lo
    if eff == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (lo, hi), (lo, hi)), constant_values=fill)


def _op_cost_units(tag: str, op_params: dict, shape: TensorShape) -> int:
    e = shape.element_count
    if tag in ("Identity", "Dropout", "ReLU"):
        return e
    if tag == "PReLU":
        return 2 * e
    if tag in ("Sigmoid", "Tanh"):
        return 8 * e
    if tag == "Softmax":
        return 12 * e
    if tag == "BatchNorm":
        return 4 * e
    if tag == "Conv2D":
        k = op_params["kernel"]
        return 2 * e * shape.channel * k * k
    if tag == "DepthwiseConv2D":
        k = op_params["kernel"]
        return 2 * e * k * k
    if tag == "Dense1x1":
        return 2 * e * shape.channel
    if tag in ("MaxPool2D", "AvgPool2D"):
        w = op_params["window"]
        return e * w * w
    raise ValueError(f"no cost model for operator {tag!r}")


def model_cost_units(model: GraphModel) -> int:
    """Deterministic work estimate: operator costs plus fan-in adds."""
    units = 0
    indegree: dict[int, int] = {}
    for _, j, _ in model.edges:
        indegree[j] = indegree.get(j, 0) + 1
    for _, j, op in model.edges:
        units += _op_cost_units(op.tag, op.param_dict, model.input_shape)
    for j, deg in indegree.items():
        if deg > 1:
            units += (deg - 1) * model.input_shape.element_count
    return units


class _NativeNumerics:
    """One native interpreter configuration."""

    def __init__(self, dtype, pairwise: bool, softmax_subtract_max: bool):
        self.dtype = dtype
        self.pairwise = pairwise
        self.softmax_subtract_max = softmax_subtract_max

    def _sum(self, terms: list) -> np.ndarray:
        if not self.pairwise:
            acc = terms[0]
            for t in terms[1:]:
                acc = acc + t
            return acc
        while len(terms) > 1:
            nxt = [terms[2 * i] + terms[2 * i + 1] for i in range(len(terms) // 2)]
            if len(terms) % 2 == 1:
                nxt.append(terms[-1])
            terms = nxt
        return terms[0]

    def apply_operator(self, op, edge, x: np.ndarray, param_seed: int) -> np.ndarray:
        tag = op.tag
        p = op.param_dict
        dt = self.dtype
        i, j = edge
        if tag in ("Identity", "Dropout"):
            return x
        if tag == "ReLU":
            return np.maximum(x, dt(0))
        if tag == "PReLU":
            slope = dt(params.prelu_slope(param_seed, i, j))
            return np.where(x > 0, x, slope * x)
        if tag == "Sigmoid":
            with np.errstate(over="ignore"):
                return dt(1) / (dt(1) + np.exp(-x))
        if tag == "Tanh":
            return np.tanh(x)
        if tag == "Softmax":
            with np.errstate(over="ignore", invalid="ignore"):
                if self.softmax_subtract_max:
                    e = np.exp(x - x.max(axis=1, keepdims=True))
                else:
                    e = np.exp(x)
                total = self._sum([e[:, c : c + 1] for c in range(e.shape[1])])
                return e / total
        if tag == "BatchNorm":
            gamma, beta, mean, var = (
                a.astype(dt)[None, :, None, None]
                for a in params.batchnorm_params(param_seed, i, j, x.shape[1])
            )
            eps = dt(params.BN_EPSILON)
            return (x - mean) / np.sqrt(var + eps) * gamma + beta
        if tag in ("Conv2D", "Dense1x1"):
            k = p.get("kernel", 1)
            d = p.get("dilation", 1)
            c = x.shape[1]
            w = params.conv_weights(param_seed, i, j, c, c, k).astype(dt)
            xp = _pad_same(x, k, d, 0.0)
            if self.pairwise:
                return kernels.conv2d_pairwise_f32(xp, w, d)
            return kernels.conv2d_forward_f64(xp, w, d)
        if tag == "DepthwiseConv2D":
            k = p["kernel"]
            d = p["dilation"]
            w = params.depthwise_weights(param_seed, i, j, x.shape[1], k).astype(dt)
            xp = _pad_same(x, k, d, 0.0)
            if self.pairwise:
                return kernels.depthwise_pairwise_f32(xp, w, d)
            return kernels.depthwise_forward_f64(xp, w, d)
        if tag == "MaxPool2D":
            win = p["window"]
            xp = _pad_same(x, win, 1, -np.inf)
            return kernels.maxpool_f32(xp, win) if self.pairwise else kernels.maxpool_f64(xp, win)
        if tag == "AvgPool2D":
            win = p["window"]
            xp = _pad_same(x, win, 1, 0.0)
            if self.pairwise:
                return kernels.avgpool_pairwise_f32(xp, win)
            return kernels.avgpool_forward_f64(xp, win)
        raise ValueError(f"no execution semantics for operator {tag!r}")


REFERENCE_NUMERICS = _NativeNumerics(np.float64, pairwise=False, softmax_subtract_max=True)
ALTERNATE_NUMERICS = _NativeNumerics(np.float32, pairwise=True, softmax_subtract_max=False)


class NativeBackend:
    """Interpreter over the shared operator semantics; pure and stateless."""

    def __init__(self, name: str, numerics: _NativeNumerics, kind: str):
        self.id = BackendId(name, kind)
        self._numerics = numerics

    def _post_operator(self, tag, edge, op, arr, param_seed):
        return arr

    def execute(self, model: GraphModel, input_tensor: Tensor, param_seed: int) -> ExecutionOutcome:
        require_valid(model)
        if input_tensor.shape != model.input_shape:
            raise ValueError(
                f"input shape {input_tensor.shape.as_tuple()} != model input shape {model.input_shape.as_tuple()}"
            )
        nm = self._numerics
        cost = 0
        try:
            incoming: dict[int, list] = {}
            for i, j, op in model.sorted_edges:
                incoming.setdefault(j, []).append((i, op))
            values: dict[int, np.ndarray] = {0: input_tensor.data.astype(nm.dtype)}
            for v in range(1, model.vertex_count):
                if v not in incoming:
                    continue
                terms = []
                for i, op in sorted(incoming[v], key=lambda e: e[0]):
                    out = nm.apply_operator(op, (i, v), values[i], param_seed)
                    out = self._post_operator(op.tag, (i, v), op, out, param_seed)
                    cost += _op_cost_units(op.tag, op.param_dict, model.input_shape)
                    terms.append(out)
                cost += (len(terms) - 1) * model.input_shape.element_count
                values[v] = nm._sum(terms)
            output = values[model.vertex_count - 1]
            elapsed = COST_BASE_SECONDS + cost * COST_SECONDS_PER_UNIT
            return ExecutionOutcome.success(Tensor(np.ascontiguousarray(output)), elapsed)
        except _InjectedCrash as exc:
            elapsed = COST_BASE_SECONDS + cost * COST_SECONDS_PER_UNIT
            return ExecutionOutcome.crashed(str(exc), "execute", elapsed)
        except Exception as exc:  # backend errors become Crash outcomes
            elapsed = COST_BASE_SECONDS + cost * COST_SECONDS_PER_UNIT
            return ExecutionOutcome.crashed(f"{type(exc).__name__}: {exc}", "execute", elapsed)


def reference_backend(name: str = "reference") -> NativeBackend:
    return NativeBackend(name, REFERENCE_NUMERICS, "native-reference")


def alternate_backend(name: str = "alternate") -> NativeBackend:
    return NativeBackend(name, ALTERNATE_NUMERICS, "native-alternate")


@dataclass(frozen=True)
class FaultSpec:
    """Deliberate corruption applied after matching operators.

    Modes: "none" (clean wrapper), "nan" (all-NaN output), "bias" (adds
    ``magnitude``), "crash" (raises), "dropout-chaos" (stochastic dropout
    masks seeded from (fault seed, param_seed, edge)).
    """

    mode: str
    operator: str = ""
    magnitude: float = 10.0
    seed: int = 0
    base: str = "reference"

    def __post_init__(self):
        if self.mode not in ("none", "nan", "bias", "crash", "dropout-chaos"):
            raise ValueError(f"unknown fault mode {self.mode!r}")
        if self.mode in ("nan", "bias", "crash") and not self.operator:
            raise ValueError(f"fault mode {self.mode!r} needs a target operator")
        if self.base not in ("reference", "alternate"):
            raise ValueError(f"fault base must be reference or alternate, got {self.base!r}")


class FaultInjectionBackend(NativeBackend):
    """Native interpreter with configured corruption; the voting oracle."""

    def __init__(self, name: str, spec: FaultSpec):
        numerics = REFERENCE_NUMERICS if spec.base == "reference" else ALTERNATE_NUMERICS
        super().__init__(name, numerics, "fault-injection")
        self.spec = spec

    def _post_operator(self, tag, edge, op, arr, param_seed):
        spec = self.spec
        if spec.mode == "none":
            return arr
        if spec.mode == "dropout-chaos" and tag == "Dropout":
            rate = float(op.param_dict.get("rate", 0.0))
            if rate <= 0.0:
                return arr
            mix = params.param_word(param_seed ^ spec.seed, edge[0], edge[1], 0xFA, 0)
            rng = np.random.Generator(np.random.PCG64(mix))
            mask = (rng.random(arr.shape) >= rate).astype(arr.dtype)
            return arr * mask / arr.dtype.type(1.0 - rate)
        if tag != spec.operator:
            return arr
        if spec.mode == "nan":
            return np.full_like(arr, np.nan)
        if spec.mode == "bias":
            return arr + arr.dtype.type(spec.magnitude)
        if spec.mode == "crash":
            raise _InjectedCrash(f"injected-crash:{tag}")
        return arr


class AdapterBackend:
    """Client for an external adapter process speaking the wire protocol."""

    def __init__(self, proc: subprocess.Popen, name: str, capabilities: tuple, timeout: float):
        self.id = BackendId(name, "external-adapter")
        self.capabilities = capabilities
        self._proc = proc
        self._timeout = timeout
        self._buffer = bytearray()
        self._dead = False

    # -- protocol plumbing -------------------------------------------------

    def _read_line(self, timeout: float) -> bytes | None:
        """One newline-terminated frame from the child, or None on EOF."""
        deadline = time.monotonic() + timeout
        fd = self._proc.stdout.fileno()
        while True:
            nl = self._buffer.find(b"\n")
            if nl >= 0:
                line = bytes(self._buffer[:nl])
                del self._buffer[: nl + 1]
                return line
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError("adapter read timed out")
            ready, _, _ = select.select([fd], [], [], min(remaining, 0.5))
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                return None
            self._buffer.extend(chunk)

    def _send(self, obj: dict) -> None:
        line = wire.dump_message(obj)
        self._proc.stdin.write(line)
        self._proc.stdin.flush()

    # -- execution ----------------------------------------------------------

    def execute(self, model: GraphModel, input_tensor: Tensor, param_seed: int) -> ExecutionOutcome:
        start = time.perf_counter()

        def wall() -> float:
            return max(time.perf_counter() - start, 1e-9)

        if self._dead:
            return ExecutionOutcome.crashed("adapter-connection-lost", "execute", wall())
        request = {
            "type": "execute",
            "model": model_to_obj(model),
            "input": wire.tensor_to_wire(input_tensor),
            "param_seed": int(param_seed),
        }
        try:
            self._send(request)
            line = self._read_line(self._timeout)
        except TimeoutError:
            self._dead = True
            self._proc.kill()
            return ExecutionOutcome.crashed("timeout", "execute", wall())
        except (BrokenPipeError, OSError):
            self._dead = True
            return ExecutionOutcome.crashed("adapter-connection-lost", "execute", wall())
        if line is None:
            self._dead = True
            return ExecutionOutcome.crashed("adapter-connection-lost", "execute", wall())
        try:
            reply = wire.parse_message(line)
        except ValueError as exc:
            return ExecutionOutcome.crashed(f"protocol-error: {exc}", "execute", wall())
        kind = reply.get("type")
        if kind == "result":
            try:
                output = wire.tensor_from_wire(reply["output"], dtype=np.float64)
            except (KeyError, ValueError) as exc:
                return ExecutionOutcome.crashed(f"protocol-error: bad result payload ({exc})", "execute", wall())
            elapsed = reply.get("elapsed_seconds", 0.0)
            if not isinstance(elapsed, (int, float)) or elapsed <= 0:
                elapsed = wall()
            return ExecutionOutcome.success(output, float(elapsed))
        if kind == "crash":
            phase = reply.get("phase", "execute")
            if phase not in ("build", "execute"):
                phase = "execute"
            return ExecutionOutcome.crashed(str(reply.get("message", "unknown")), phase, wall())
        return ExecutionOutcome.crashed(f"protocol-error: unexpected message type {kind!r}", "execute", wall())

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._send({"type": "shutdown"})
                self._proc.wait(timeout=5.0)
            except Exception:
                self._proc.kill()
        if self._proc.stdin:
            self._proc.stdin.close()
        if self._proc.stdout:
            self._proc.stdout.close()


def spawn_adapter(command, args=(), timeout: float = DEFAULT_ADAPTER_TIMEOUT, name: str | None = None, env=None) -> AdapterBackend:
    """Start an adapter process and complete the hello handshake."""
    argv = ([command] if isinstance(command, str) else list(command)) + list(args)
    try:
        proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            bufsize=0,
            env=env,
        )
    except OSError as exc:
        raise BackendUnavailableError(f"cannot spawn adapter {argv!r}: {exc}") from exc
    backend = AdapterBackend(proc, name or "adapter", (), timeout)
    try:
        backend._send({"type": "hello", "version": ADAPTER_PROTOCOL_VERSION})
        line = backend._read_line(timeout)
    except (TimeoutError, BrokenPipeError, OSError) as exc:
        proc.kill()
        raise BackendUnavailableError(f"adapter handshake failed: {exc}") from exc
    if line is None:
        proc.kill()
        raise BackendUnavailableError("adapter exited during handshake")
    try:
        ack = wire.parse_message(line)
    except ValueError as exc:
        proc.kill()
        raise BackendUnavailableError(f"adapter handshake garbled: {exc}") from exc
    if ack.get("type") != "hello_ack":
        proc.kill()
        raise BackendUnavailableError(f"expected hello_ack, got {ack.get('type')!r}")
    if ack.get("version") != ADAPTER_PROTOCOL_VERSION:
        proc.kill()
        raise BackendUnavailableError(
            f"protocol version mismatch: want {ADAPTER_PROTOCOL_VERSION}, got {ack.get('version')!r}"
        )
    reported = ack.get("backend")
    resolved_name = name or (reported if isinstance(reported, str) and reported else "adapter")
    backend.id = BackendId(resolved_name, "external-adapter")
    backend.capabilities = tuple(ack.get("ops", ()))
    return backend


def backend_from_spec(spec: dict):
    """Build a backend from a campaign roster entry."""
    kind = spec.get("kind", "")
    name = spec.get("name")
    if kind in ("reference", "native-reference"):
        return reference_backend(name or "reference")
    if kind in ("alternate", "native-alternate"):
        return alternate_backend(name or "alternate")
    if kind in ("fault", "fault-injection"):
        fault = FaultSpec(
            mode=spec.get("mode", "none"),
            operator=spec.get("operator", ""),
            magnitude=float(spec.get("magnitude", 10.0)),
            seed=int(spec.get("fault_seed", 0)),
            base=spec.get("base", "reference"),
        )
        return FaultInjectionBackend(name or f"fault-{fault.mode}", fault)
    if kind in ("adapter", "external-adapter"):
        command = spec.get("command")
        if not command:
            raise BackendUnavailableError(f"adapter roster entry needs a command: {spec!r}")
        timeout = float(spec.get("timeout", DEFAULT_ADAPTER_TIMEOUT))
        return spawn_adapter(command, spec.get("args", ()), timeout=timeout, name=name)
    raise BackendUnavailableError(f"unknown backend kind {kind!r}")
