"""Execute a serialized graph model with PyTorch.

Mirrors the engine's operator semantics: shape-preserving NCHW operators,
SAME padding with the extra cell on the bottom/right, fan-in as elementwise
sum in source-index order, dropout as inference-mode identity. All
computation is float32 on a single CPU thread for comparability.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from . import generator

torch.set_num_threads(1)

ALL_OPS = (
    "Identity",
    "Conv2D",
    "DepthwiseConv2D",
    "Dense1x1",
    "BatchNorm",
    "ReLU",
    "PReLU",
    "Sigmoid",
    "Tanh",
    "Softmax",
    "MaxPool2D",
    "AvgPool2D",
    "Dropout",
)


class BuildError(Exception):
    """Request cannot be turned into a computation; reported as a build crash."""


def _same_pad(x: torch.Tensor, taps: int, dilation: int, value: float) -> torch.Tensor:
    total = (taps - 1) * dilation
    lo = total // 2
    hi = total - lo
    if total == 0:
        return x
    return F.pad(x, (lo, hi, lo, hi), value=value)


def _apply(tag: str, params: dict, edge, x: torch.Tensor, seed: int) -> torch.Tensor:
    i, j = edge
    if tag in ("Identity", "Dropout"):
        return x
    if tag == "ReLU":
        return torch.relu(x)
    if tag == "PReLU":
        slope = float(generator.prelu_slope(seed, i, j))
        return torch.where(x > 0, x, slope * x)
    if tag == "Sigmoid":
        return torch.sigmoid(x)
    if tag == "Tanh":
        return torch.tanh(x)
    if tag == "Softmax":
        return torch.softmax(x, dim=1)
    if tag == "BatchNorm":
        channels = x.shape[1]
        gamma, beta, mean, var = (
            torch.from_numpy(np.ascontiguousarray(a)).view(1, channels, 1, 1)
            for a in generator.batchnorm_stats(seed, i, j, channels)
        )
        eps = float(generator.BN_EPSILON)
        return (x - mean) / torch.sqrt(var + eps) * gamma + beta
    if tag in ("Conv2D", "Dense1x1"):
        k = int(params.get("kernel", 1))
        d = int(params.get("dilation", 1))
        channels = x.shape[1]
        weight = torch.from_numpy(np.ascontiguousarray(generator.conv_kernel(seed, i, j, channels, channels, k)))
        return F.conv2d(_same_pad(x, k, d, 0.0), weight, dilation=d)
    if tag == "DepthwiseConv2D":
        k = int(params["kernel"])
        d = int(params["dilation"])
        channels = x.shape[1]
        weight = torch.from_numpy(
            np.ascontiguousarray(generator.depthwise_kernel(seed, i, j, channels, k))
        ).view(channels, 1, k, k)
        return F.conv2d(_same_pad(x, k, d, 0.0), weight, dilation=d, groups=channels)
    if tag == "MaxPool2D":
        win = int(params["window"])
        return F.max_pool2d(_same_pad(x, win, 1, float("-inf")), kernel_size=win, stride=1)
    if tag == "AvgPool2D":
        win = int(params["window"])
        # explicit zero padding first, so the divisor is the full window area
        return F.avg_pool2d(_same_pad(x, win, 1, 0.0), kernel_size=win, stride=1, count_include_pad=True)
    raise BuildError(f"unsupported-operator:{tag}")


def parse_model(obj, capabilities) -> tuple:
    """(vertex_count, input_shape, edges) from a model JSON object."""
    if not isinstance(obj, dict):
        raise BuildError("model must be an object")
    if obj.get("version") != 1:
        raise BuildError(f"unsupported model version {obj.get('version')!r}")
    vertex_count = obj.get("vertex_count")
    if not isinstance(vertex_count, int) or vertex_count < 2:
        raise BuildError("vertex_count must be an integer >= 2")
    shape = obj.get("input_shape")
    if not isinstance(shape, list) or len(shape) != 4 or any(not isinstance(d, int) or d < 1 for d in shape):
        raise BuildError("input_shape must be four positive integers")
    raw_edges = obj.get("edges")
    if not isinstance(raw_edges, list) or not raw_edges:
        raise BuildError("edges must be a non-empty array")
    edges = []
    for entry in raw_edges:
        if not isinstance(entry, dict):
            raise BuildError("edge entries must be objects")
        i, j, tag = entry.get("from"), entry.get("to"), entry.get("op")
        if not isinstance(i, int) or not isinstance(j, int) or not 0 <= i < j < vertex_count:
            raise BuildError(f"bad edge endpoints ({i!r}, {j!r})")
        if tag not in capabilities:
            raise BuildError(f"unsupported-operator:{tag}")
        params = entry.get("params", {})
        if not isinstance(params, dict):
            raise BuildError("edge params must be an object")
        edges.append((i, j, tag, params))
    return vertex_count, tuple(shape), sorted(edges)


def execute(model_obj, input_array: np.ndarray, param_seed: int, capabilities) -> np.ndarray:
    vertex_count, shape, edges = parse_model(model_obj, capabilities)
    if tuple(input_array.shape) != shape:
        raise BuildError(
            f"input shape {tuple(input_array.shape)} does not match model input_shape {shape}"
        )
    incoming: dict[int, list] = {}
    for i, j, tag, params in edges:
        incoming.setdefault(j, []).append((i, tag, params))
    with torch.no_grad():
        values = {0: torch.from_numpy(np.ascontiguousarray(input_array, dtype=np.float32))}
        for v in range(1, vertex_count):
            if v not in incoming:
                continue
            acc = None
            for i, tag, params in sorted(incoming[v], key=lambda e: e[0]):
                if i not in values:
                    raise BuildError(f"vertex {v} consumes unevaluated vertex {i}")
                out = _apply(tag, params, (i, v), values[i], param_seed)
                acc = out if acc is None else acc + out
            values[v] = acc
        if vertex_count - 1 not in values:
            raise BuildError("sink vertex received no operator outputs")
        return values[vertex_count - 1].numpy()
