"""Differential execution, NaN/inconsistency voting, and bug deduplication.

A model runs on every configured backend; verdict precedence is crash, then
NaN voting, then pairwise-inconsistency voting at threshold epsilon (strict
comparison). Attribution follows the common backend of the two largest
exceeding pairs. Each record also yields the (performance, variety, time)
measurement row that feeds the judge matrix.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

from .errors import HarnessDegradedError
from .fusion import MeasurementRecord
from .graph import GraphModel, model_digest_hex, require_valid, structural_hash
from .motifs import variety_degree

# Finite stand-in when backend outputs diverge to infinity.
PERFORMANCE_CAP = float(np.finfo(np.float64).max)


@dataclass(frozen=True)
class Verdict:
    kind: str  # NoBug | Crash | NanBug | InconsistencyBug
    backends: tuple = ()  # crashed set, or single attributed backend; empty when unattributed

    def to_obj(self) -> dict:
        return {"kind": self.kind, "backends": list(self.backends)}

    @classmethod
    def from_obj(cls, obj: dict) -> "Verdict":
        return cls(obj["kind"], tuple(obj.get("backends", ())))


@dataclass(frozen=True, eq=False)
class DifferentialRecord:
    model_digest: str
    outcomes: dict  # backend name -> ExecutionOutcome
    pairwise: dict  # (name_a, name_b) sorted -> float (may be inf)
    verdict: Verdict
    measurement: MeasurementRecord
    param_seed: int
    flagged: bool = False  # exceeding pairs shared no common backend


@dataclass(frozen=True, eq=False)
class BugReport:
    kind: str  # Crash | NaN | Inconsistency
    attributed_backend: str | None
    model: GraphModel
    input_digest: str
    evidence: dict
    first_seen: int
    signature: str


def pairwise_inconsistency(a, b) -> float:
    """Maximum elementwise absolute difference between two outputs.

    Elements that compare equal (including matching infinities) contribute
    zero; a finite-vs-infinite mismatch yields inf, which callers cap before
    storing measurements. NaN inputs must be routed to NaN detection first.
    """
    a = np.asarray(a.data if hasattr(a, "data") else a, dtype=np.float64)
    b = np.asarray(b.data if hasattr(b, "data") else b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if np.isnan(a).any() or np.isnan(b).any():
        raise ValueError("inputs contain NaN; route to NaN detection first")
    with np.errstate(invalid="ignore"):  # matching infinities subtract to NaN
        diff = np.abs(a - b)
    diff[a == b] = 0.0
    return float(diff.max()) if diff.size else 0.0


def _contains_nan(tensor) -> bool:
    return bool(np.isnan(tensor.data).any())


def inconsistency_verdict(pairwise: dict, epsilon: float, backend_count: int):
    """Fold pairwise inconsistencies into a verdict: (Verdict, flagged).

    A bug needs two exceeding pairs; attribution goes to the backend common
    to the two largest (strict comparison against epsilon). With exactly two
    backends the single pair can exceed but nobody can be blamed. ``flagged``
    marks the undefined case where the two largest exceeding pairs share no
    backend.
    """
    exceeding = sorted(
        ((value, pair) for pair, value in pairwise.items() if value > epsilon),
        key=lambda t: (-t[0], t[1]),
    )
    if backend_count == 2 and len(exceeding) == 1:
        return Verdict("InconsistencyBug", ()), False
    if len(exceeding) >= 2:
        (_, first), (_, second) = exceeding[0], exceeding[1]
        common = set(first) & set(second)
        if common:
            return Verdict("InconsistencyBug", (sorted(common)[0],)), False
        return Verdict("InconsistencyBug", ()), True
    return Verdict("NoBug", ()), False


def run_differential(model: GraphModel, input_tensor, backends: list, epsilon: float, param_seed: int, depth: int = 2) -> DifferentialRecord:
    """Execute on all backends and fold outcomes into a verdict + measurement."""
    require_valid(model)
    if len(backends) < 2:
        raise ValueError("differential testing needs at least 2 backends")
    digest = model_digest_hex(model)
    outcomes = {b.id.name: b.execute(model, input_tensor, param_seed) for b in backends}

    crashed = sorted(name for name, o in outcomes.items() if not o.ok)
    nan_backends = sorted(name for name, o in outcomes.items() if o.ok and _contains_nan(o.output))
    clean = sorted(name for name, o in outcomes.items() if o.ok and name not in nan_backends)

    pairwise: dict = {}
    for idx, a in enumerate(clean):
        for b in clean[idx + 1 :]:
            pairwise[(a, b)] = pairwise_inconsistency(outcomes[a].output, outcomes[b].output)

    flagged = False
    if crashed:
        verdict = Verdict("Crash", tuple(crashed))
    elif len(nan_backends) == 1 and len(outcomes) >= 2:
        verdict = Verdict("NanBug", (nan_backends[0],))
    else:
        verdict, flagged = inconsistency_verdict(pairwise, epsilon, len(outcomes))

    if verdict.kind in ("Crash", "NanBug"):
        performance = abs(float(np.mean(np.asarray(input_tensor.data, dtype=np.float64))))
    else:
        performance = max(pairwise.values(), default=0.0)
        performance = min(performance, PERFORMANCE_CAP)

    ok_times = [o.elapsed_seconds for o in outcomes.values() if o.ok]
    if ok_times:
        time_seconds = float(np.mean(ok_times))
    else:
        # Nothing ran to completion; fall back to the slowest crash.
        time_seconds = max(o.elapsed_seconds for o in outcomes.values())

    measurement = MeasurementRecord(
        model_digest=digest,
        performance=performance,
        variety=variety_degree(model, depth),
        time_seconds=time_seconds,
    )
    record = DifferentialRecord(digest, outcomes, pairwise, verdict, measurement, param_seed, flagged)

    if crashed and len(crashed) == len(outcomes) and all(
        o.crash.phase == "build" for o in outcomes.values() if not o.ok
    ):
        raise HarnessDegradedError(record)
    return record


_FINGERPRINT_NUMBERS = re.compile(r"0x[0-9a-fA-F]+|\d+")
_FINGERPRINT_SPACE = re.compile(r"\s+")


def crash_fingerprint(message: str) -> str:
    """Normalized crash-message identity: case/number/whitespace insensitive."""
    text = _FINGERPRINT_NUMBERS.sub("#", message.lower())
    text = _FINGERPRINT_SPACE.sub(" ", text).strip()
    return text[:160]


class BugRegistry:
    """Seen-signature set; owned by the campaign orchestrator."""

    def __init__(self):
        self.seen: set[str] = set()

    def register(self, signature: str) -> bool:
        """True if the signature was new."""
        if signature in self.seen:
            return False
        self.seen.add(signature)
        return True


def _signature(model: GraphModel, kind: str, backend: str | None, extra: str = "") -> str:
    payload = f"{kind}|{backend or ''}|{structural_hash(model).hex()}|{extra}"
    return hashlib.sha256(payload.encode()).hexdigest()


def dedup_and_report(record: DifferentialRecord, registry: BugRegistry, model: GraphModel, input_digest: str, iteration: int) -> list:
    """Bug reports for the unseen signatures in a bug-verdict record.

    Signatures strip operator parameters, so the same topology with different
    kernel sizes collapses into one report; crash signatures also fold in a
    normalized message fingerprint. Crash verdicts may produce one report per
    crashing backend.
    """
    verdict = record.verdict
    if verdict.kind == "NoBug":
        raise ValueError("record has no bug verdict")
    reports = []
    if verdict.kind == "Crash":
        for name in verdict.backends:
            crash = record.outcomes[name].crash
            sig = _signature(model, "Crash", name, crash_fingerprint(crash.message))
            if registry.register(sig):
                reports.append(
                    BugReport(
                        kind="Crash",
                        attributed_backend=name,
                        model=model,
                        input_digest=input_digest,
                        evidence={"message": crash.message, "phase": crash.phase},
                        first_seen=iteration,
                        signature=sig,
                    )
                )
        return reports

    kind = "NaN" if verdict.kind == "NanBug" else "Inconsistency"
    backend = verdict.backends[0] if verdict.backends else None
    sig = _signature(model, kind, backend)
    if registry.register(sig):
        evidence: dict = {}
        if kind == "Inconsistency":
            evidence["pairwise"] = {f"{a}|{b}": v for (a, b), v in sorted(record.pairwise.items())}
            evidence["unattributed"] = backend is None
        reports.append(
            BugReport(
                kind=kind,
                attributed_backend=backend,
                model=model,
                input_digest=input_digest,
                evidence=evidence,
                first_seen=iteration,
                signature=sig,
            )
        )
    return reports
