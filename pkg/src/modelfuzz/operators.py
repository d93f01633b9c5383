"""Operator vocabulary: tags, parameter schemas, and sampling palettes.

Every operator maps an NCHW tensor to a tensor of the same shape, so any
structurally valid graph is executable. ``None`` is the absence-of-operator
pseudo-label: it participates in mutation sampling but is never stored on an
active edge.
"""

from __future__ import annotations

NONE_TAG = "None"

# Canonical tag order; also the column order for weight tables and samplers.
OPERATOR_ORDER: tuple[str, ...] = (
    "None",
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

OPERATOR_TAGS = frozenset(OPERATOR_ORDER)

# Parameter palettes used by the mutation RNG when an edge is created.
# Keys double as the parameter schema for each tag: a stored operator must
# carry exactly these parameter names.
PARAM_PALETTES: dict[str, dict[str, tuple]] = {
    "None": {},
    "Identity": {},
    "Conv2D": {"kernel": (1, 3, 5), "dilation": (1, 2)},
    "DepthwiseConv2D": {"kernel": (1, 3, 5), "dilation": (1, 2)},
    "Dense1x1": {},
    "BatchNorm": {},
    "ReLU": {},
    "PReLU": {},
    "Sigmoid": {},
    "Tanh": {},
    "Softmax": {},
    "MaxPool2D": {"window": (2, 3)},
    "AvgPool2D": {"window": (2, 3)},
    "Dropout": {"rate": (0.0, 0.25, 0.5)},
}


def param_schema(tag: str) -> tuple[str, ...]:
    """Parameter names required for ``tag``."""
    return tuple(sorted(PARAM_PALETTES[tag]))


def check_params(tag: str, params: dict) -> list[str]:
    """Return a list of problems with ``params`` for ``tag`` (empty if fine).

    Palette membership is not enforced here; palettes constrain generation,
    not the wire format. Structural sanity is.
    """
    problems = []
    if tag not in OPERATOR_TAGS:
        return [f"unknown operator tag {tag!r}"]
    schema = set(PARAM_PALETTES[tag])
    got = set(params)
    for missing in sorted(schema - got):
        problems.append(f"{tag} missing parameter {missing!r}")
    for extra in sorted(got - schema):
        problems.append(f"{tag} does not take parameter {extra!r}")
    for name in sorted(schema & got):
        value = params[name]
        if name in ("kernel", "dilation", "window"):
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                problems.append(f"{tag} parameter {name!r} must be a positive integer")
            elif name == "window" and value < 2:
                problems.append(f"{tag} parameter 'window' must be >= 2")
        elif name == "rate":
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                problems.append(f"{tag} parameter 'rate' must be a number")
            elif not 0.0 <= float(value) < 1.0:
                problems.append(f"{tag} parameter 'rate' must be in [0, 1)")
    return problems
