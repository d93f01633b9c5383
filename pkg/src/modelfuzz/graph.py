"""DAG model representation: validity rules, canonical hashing, JSON codec.

A model is a labeled DAG over tensor vertices. Edges always run from a lower
to a higher vertex index, so cycles are unrepresentable. Edges not present in
the edge set carry the implicit ``None`` label. Vertices touching only
``None`` edges are inactive: ignored by validation, execution, and hashing.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import InvalidModelError, ModelParseError
from .operators import NONE_TAG, OPERATOR_TAGS, check_params

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TensorShape:
    """NCHW tensor shape (batch, channel, height, width), all dims >= 1."""

    batch: int
    channel: int
    height: int
    width: int

    def __post_init__(self):
        for name, value in self.as_tuple_named():
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"shape dimension {name!r} must be a positive integer, got {value!r}")
        if self.element_count >= 2**64:
            raise ValueError("shape element count does not fit in 64 bits")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.batch, self.channel, self.height, self.width)

    def as_tuple_named(self):
        return (
            ("batch", self.batch),
            ("channel", self.channel),
            ("height", self.height),
            ("width", self.width),
        )

    @property
    def element_count(self) -> int:
        return self.batch * self.channel * self.height * self.width


@dataclass(frozen=True)
class OperatorKind:
    """An edge label: operator tag plus its fixed parameter record.

    ``params`` is a sorted tuple of (name, value) pairs so labels hash and
    compare structurally.
    """

    tag: str
    params: tuple = ()

    @classmethod
    def make(cls, tag: str, **params) -> "OperatorKind":
        problems = check_params(tag, params)
        if problems:
            raise ValueError("; ".join(problems))
        return cls(tag, tuple(sorted(params.items())))

    @property
    def param_dict(self) -> dict:
        return dict(self.params)

    def label_key(self) -> tuple:
        """Stable identity used by hashing and motif isomorphism."""
        return (self.tag, self.params)

    def __str__(self):
        if not self.params:
            return self.tag
        inner = ",".join(f"{k}={v}" for k, v in self.params)
        return f"{self.tag}({inner})"


@dataclass(frozen=True)
class GraphModel:
    """A test-input model: vertex count, non-None labeled edges, input shape.

    Vertex 0 is the source and vertex ``vertex_count - 1`` the sink of the
    active subgraph (enforced by :func:`validate`, not by construction).
    """

    vertex_count: int
    edges: tuple  # tuple of (from, to, OperatorKind)
    input_shape: TensorShape

    @property
    def edge_map(self) -> dict:
        return {(i, j): op for i, j, op in self.edges}

    @property
    def sorted_edges(self) -> tuple:
        return tuple(sorted(self.edges, key=lambda e: (e[0], e[1])))

    @property
    def active_vertices(self) -> set:
        verts = set()
        for i, j, _ in self.edges:
            verts.add(i)
            verts.add(j)
        return verts

    def with_edge(self, i: int, j: int, op: OperatorKind | None) -> "GraphModel":
        """New model with edge (i, j) relabeled to ``op`` (None removes it)."""
        kept = [e for e in self.edges if (e[0], e[1]) != (i, j)]
        if op is not None and op.tag != NONE_TAG:
            kept.append((i, j, op))
        return GraphModel(self.vertex_count, tuple(sorted(kept, key=lambda e: (e[0], e[1]))), self.input_shape)

    def with_grown_sink(self) -> "GraphModel":
        """New model with one extra vertex inserted just before the sink.

        The old sink index shifts up by one; the inserted vertex starts out
        inactive.
        """
        old_sink = self.vertex_count - 1
        remapped = tuple(
            (i if i != old_sink else old_sink + 1, j if j != old_sink else old_sink + 1, op)
            for i, j, op in self.edges
        )
        return GraphModel(self.vertex_count + 1, tuple(sorted(remapped, key=lambda e: (e[0], e[1]))), self.input_shape)


@dataclass(frozen=True)
class ValidationResult:
    valid: bool
    violations: tuple = field(default_factory=tuple)  # tuple of (rule id, detail)


def validate(model: GraphModel) -> ValidationResult:
    """Check every GraphModel invariant; one violation entry per failed rule."""
    violations: list[tuple[str, str]] = []

    if model.vertex_count < 2:
        violations.append(("vertex-count", f"need at least 2 vertices, got {model.vertex_count}"))

    n = model.vertex_count
    bad_range = [(i, j) for i, j, _ in model.edges if not (0 <= i < n and 0 <= j < n)]
    if bad_range:
        violations.append(("edge-range", f"edges outside 0..{n - 1}: {bad_range}"))
    bad_dir = [(i, j) for i, j, _ in model.edges if i >= j]
    if bad_dir:
        violations.append(("edge-direction", f"edges must go low to high index: {bad_dir}"))
    seen = set()
    dupes = set()
    for i, j, _ in model.edges:
        if (i, j) in seen:
            dupes.add((i, j))
        seen.add((i, j))
    if dupes:
        violations.append(("duplicate-edge", f"duplicate edge pairs: {sorted(dupes)}"))
    bad_ops = [(i, j) for i, j, op in model.edges if op.tag not in OPERATOR_TAGS or op.tag == NONE_TAG or check_params(op.tag, op.param_dict)]
    if bad_ops:
        violations.append(("bad-operator", f"edges with invalid operator labels: {bad_ops}"))

    if violations:
        # Structural problems make reachability analysis meaningless.
        return ValidationResult(False, tuple(violations))

    if not model.edges:
        violations.append(("no-active-edge", "model has no active edges"))
        return ValidationResult(False, tuple(violations))

    active = model.active_vertices
    fwd: dict[int, list[int]] = {}
    bwd: dict[int, list[int]] = {}
    for i, j, _ in model.edges:
        fwd.setdefault(i, []).append(j)
        bwd.setdefault(j, []).append(i)

    def reach(start: int, adj: dict) -> set:
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in adj.get(v, ()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    from_source = reach(0, fwd)
    to_sink = reach(n - 1, bwd)

    unreached = sorted(active - from_source)
    if 0 not in active:
        violations.append(("source-not-reached", "source vertex 0 touches no active edge"))
    elif unreached:
        violations.append(("source-not-reached", f"active vertices not reachable from source: {unreached}"))

    cut_off = sorted(active - to_sink)
    if n - 1 not in active:
        violations.append(("sink-not-reached", f"sink vertex {n - 1} touches no active edge"))
    elif cut_off:
        violations.append(("sink-not-reached", f"active vertices with no path to sink: {cut_off}"))

    return ValidationResult(not violations, tuple(violations))


def require_valid(model: GraphModel) -> None:
    result = validate(model)
    if not result.valid:
        raise InvalidModelError(result.violations)


def canonical_hash(model: GraphModel) -> bytes:
    """SHA-256 digest of the model's structural identity (256 bits).

    Deterministic over (vertex_count, sorted active edges with full labels,
    input_shape); rejects invalid models.
    """
    require_valid(model)
    parts = [b"modelfuzz-hash-v1", str(model.vertex_count).encode()]
    parts.append(repr(model.input_shape.as_tuple()).encode())
    for i, j, op in model.sorted_edges:
        parts.append(f"{i}>{j}:{op}".encode())
    return hashlib.sha256(b"\x00".join(parts)).digest()


def model_digest_hex(model: GraphModel) -> str:
    return canonical_hash(model).hex()


def structural_hash(model: GraphModel) -> bytes:
    """Digest of topology, operator tags, and shape, ignoring parameters.

    The dedup signature for bug reports: the same structure with different
    kernel sizes collapses to one identity.
    """
    require_valid(model)
    parts = [b"modelfuzz-structure-v1", str(model.vertex_count).encode()]
    parts.append(repr(model.input_shape.as_tuple()).encode())
    for i, j, op in model.sorted_edges:
        parts.append(f"{i}>{j}:{op.tag}".encode())
    return hashlib.sha256(b"\x00".join(parts)).digest()


# ---------------------------------------------------------------------------
# JSON codec (corpus file format and adapter wire payload)
# ---------------------------------------------------------------------------


def model_to_obj(model: GraphModel) -> dict:
    require_valid(model)
    return {
        "version": MODEL_FORMAT_VERSION,
        "vertex_count": model.vertex_count,
        "input_shape": list(model.input_shape.as_tuple()),
        "edges": [
            {"from": i, "to": j, "op": op.tag, "params": op.param_dict}
            for i, j, op in model.sorted_edges
        ],
    }


def encode_model(model: GraphModel) -> bytes:
    return json.dumps(model_to_obj(model), separators=(",", ":")).encode("utf-8")


def _expect(obj: dict, key: str, kind, path: str):
    if key not in obj:
        raise ModelParseError(f"{path}.{key}", "missing field")
    value = obj[key]
    if kind is int and (not isinstance(value, int) or isinstance(value, bool)):
        raise ModelParseError(f"{path}.{key}", f"expected integer, got {type(value).__name__}")
    if kind is list and not isinstance(value, list):
        raise ModelParseError(f"{path}.{key}", f"expected array, got {type(value).__name__}")
    if kind is dict and not isinstance(value, dict):
        raise ModelParseError(f"{path}.{key}", f"expected object, got {type(value).__name__}")
    if kind is str and not isinstance(value, str):
        raise ModelParseError(f"{path}.{key}", f"expected string, got {type(value).__name__}")
    return value


def model_from_obj(obj) -> GraphModel:
    """Build and validate a model from its JSON object form.

    Raises :class:`ModelParseError` for malformed structure (naming the first
    offending field) and :class:`InvalidModelError` for rule violations.
    """
    if not isinstance(obj, dict):
        raise ModelParseError("$", f"expected top-level object, got {type(obj).__name__}")
    version = _expect(obj, "version", int, "$")
    if version != MODEL_FORMAT_VERSION:
        raise ModelParseError("$.version", f"unsupported version {version}")
    vertex_count = _expect(obj, "vertex_count", int, "$")
    shape_list = _expect(obj, "input_shape", list, "$")
    if len(shape_list) != 4:
        raise ModelParseError("$.input_shape", f"expected 4 dimensions, got {len(shape_list)}")
    for idx, dim in enumerate(shape_list):
        if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
            raise ModelParseError(f"$.input_shape[{idx}]", "dimensions must be positive integers")
    try:
        shape = TensorShape(*shape_list)
    except ValueError as exc:
        raise ModelParseError("$.input_shape", str(exc)) from exc

    edges = []
    for idx, entry in enumerate(_expect(obj, "edges", list, "$")):
        path = f"$.edges[{idx}]"
        if not isinstance(entry, dict):
            raise ModelParseError(path, f"expected object, got {type(entry).__name__}")
        i = _expect(entry, "from", int, path)
        j = _expect(entry, "to", int, path)
        tag = _expect(entry, "op", str, path)
        if tag == NONE_TAG:
            raise ModelParseError(f"{path}.op", "explicit None edges are not part of the wire format")
        if tag not in OPERATOR_TAGS:
            raise ModelParseError(f"{path}.op", f"unknown operator {tag!r}")
        params = entry.get("params", {})
        if not isinstance(params, dict):
            raise ModelParseError(f"{path}.params", f"expected object, got {type(params).__name__}")
        problems = check_params(tag, params)
        if problems:
            raise ModelParseError(f"{path}.params", problems[0])
        edges.append((i, j, OperatorKind(tag, tuple(sorted(params.items())))))

    model = GraphModel(vertex_count, tuple(edges), shape)
    require_valid(model)
    return model


def decode_model(data) -> GraphModel:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelParseError("$", f"not valid UTF-8: {exc}") from exc
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelParseError("$", f"not valid JSON: {exc}") from exc
    return model_from_obj(obj)
