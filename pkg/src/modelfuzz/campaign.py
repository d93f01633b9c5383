"""Campaign orchestration: the full generate-execute-fuse feedback loop.

Per iteration: select a seed (tournament on fitness), mutate it, run the
differential harness, append the measurement row, convert the fitness delta
into an operator-weight update, admit improving mutants into the seed pool,
and persist one log line. With native backends the whole campaign is a pure
function of (config, rng_seed): logs are byte-identical across runs.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels
from .backends import AdapterBackend, backend_from_spec
from .errors import ConfigError, HarnessDegradedError, ModelFuzzError, MutationFailedError
from .fusion import JudgeMatrix, OperatorWeightTable, fitness, update_operator_weights
from .graph import TensorShape, model_from_obj, model_to_obj
from .harness import BugRegistry, Verdict, dedup_and_report, run_differential
from .mutation import (
    MutationConfig,
    PoolEntry,
    build_seed_pool,
    mutate,
    tournament_select_entries,
)
from .tensorio import random_tensor, read_tensor, tensor_digest
from .wire import tensor_from_wire, tensor_to_wire

DEFAULT_BACKENDS = (
    {"name": "reference", "kind": "native-reference"},
    {"name": "alternate", "kind": "native-alternate"},
    {"name": "shadow", "kind": "fault-injection", "mode": "none", "base": "reference"},
)


@dataclass(frozen=True)
class CampaignConfig:
    tensor_shape: TensorShape = TensorShape(1, 3, 8, 8)
    input_mode: str = "random"
    dataset_path: str | None = None
    iterations: int = 200
    duration_seconds: float | None = None
    epsilon: float = 0.15
    depth: int = 2
    operator_count: int = 5
    pool_size: int = 20
    tournament_k: int = 1
    max_retries: int = 25
    growth_probability: float = 0.1
    backends: tuple = DEFAULT_BACKENDS
    output_dir: str = "campaign-out"
    rng_seed: int = 0
    guided: bool = True
    fusion_raw_x: bool = False

    def __post_init__(self):
        if self.input_mode not in ("random", "file"):
            raise ConfigError(f"input_mode must be random or file, got {self.input_mode!r}")
        if self.input_mode == "file" and not self.dataset_path:
            raise ConfigError("file input mode needs dataset_path")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be > 0")
        if self.depth < 1:
            raise ConfigError("depth must be >= 1")
        if len(self.backends) < 2:
            raise ConfigError("at least 2 backends required")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        names = [spec.get("name") for spec in self.backends]
        if len(set(names)) != len(names):
            raise ConfigError(f"backend names must be unique, got {names}")
        # MutationConfig re-checks its own fields.
        MutationConfig(self.operator_count, self.pool_size, self.tournament_k, self.max_retries, self.rng_seed)

    @classmethod
    def from_dict(cls, obj: dict) -> "CampaignConfig":
        known = {
            "tensor_shape", "input_mode", "dataset_path", "iterations", "duration_seconds",
            "epsilon", "depth", "operator_count", "pool_size", "tournament_k", "max_retries",
            "growth_probability", "backends", "output_dir", "rng_seed", "guided", "fusion_raw_x",
        }
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(obj)
        if "tensor_shape" in kwargs:
            dims = kwargs["tensor_shape"]
            if not isinstance(dims, (list, tuple)) or len(dims) != 4:
                raise ConfigError("tensor_shape must be a 4-element array")
            kwargs["tensor_shape"] = TensorShape(*dims)
        if "backends" in kwargs:
            kwargs["backends"] = tuple(dict(spec) for spec in kwargs["backends"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path) -> CampaignConfig:
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ImportError:
            import tomli as tomllib
        obj = tomllib.loads(text.decode("utf-8"))
    else:
        obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ConfigError("config must be a table/object")
    return CampaignConfig.from_dict(obj)


@dataclass
class CampaignResult:
    log_entries: list
    bug_reports: list
    summary: dict
    log_path: Path
    bugs_dir: Path


def _json_safe(value):
    if isinstance(value, float):
        if math.isnan(value):
            return "NaN"
        if math.isinf(value):
            return "Inf" if value > 0 else "-Inf"
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _weights_hash(table: OperatorWeightTable) -> str:
    payload = json.dumps(table.weights, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def _write_bug_files(bugs_dir: Path, report, record, config: CampaignConfig, input_tensor, iteration: int):
    stem = f"{iteration:06d}-{report.kind.lower()}-{report.attributed_backend or 'unattributed'}"
    payload = {
        "kind": report.kind,
        "attributed_backend": report.attributed_backend,
        "first_seen": report.first_seen,
        "signature": report.signature,
        "input_digest": report.input_digest,
        "model": model_to_obj(report.model),
        "input": tensor_to_wire(input_tensor),
        "verdict": record.verdict.to_obj(),
        "evidence": _json_safe(report.evidence),
        "replay": {
            "param_seed": record.param_seed,
            "epsilon": config.epsilon,
            "depth": config.depth,
            "backends": [dict(s) for s in config.backends],
        },
    }
    path = bugs_dir / f"{stem}.json"
    path.write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")
    if report.kind == "Crash":
        lines = [f"iteration {iteration} backend {report.attributed_backend}"]
        for name, outcome in sorted(record.outcomes.items()):
            if not outcome.ok:
                lines.append(f"[{name}] phase={outcome.crash.phase} message={outcome.crash.message}")
        (bugs_dir / f"{stem}.log").write_text("\n".join(lines) + "\n")
    return path


def run_campaign(config: CampaignConfig) -> CampaignResult:
    out_dir = Path(config.output_dir)
    bugs_dir = out_dir / "bugs"
    bugs_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "campaign.log.jsonl"

    backends = [backend_from_spec(dict(spec)) for spec in config.backends]
    try:
        return _run_campaign_loop(config, backends, out_dir, bugs_dir, log_path)
    finally:
        for backend in backends:
            if isinstance(backend, AdapterBackend):
                backend.close()


def _run_campaign_loop(config, backends, out_dir, bugs_dir, log_path) -> CampaignResult:
    seq = np.random.SeedSequence(config.rng_seed)
    pool_seq, loop_seq, tensor_seq, param_seq = seq.spawn(4)
    pool_rng = np.random.Generator(np.random.PCG64(pool_seq))
    loop_rng = np.random.Generator(np.random.PCG64(loop_seq))
    tensor_rng = np.random.Generator(np.random.PCG64(tensor_seq))
    param_rng = np.random.Generator(np.random.PCG64(param_seq))

    weights = OperatorWeightTable.uniform()
    mcfg = MutationConfig(
        config.operator_count, config.pool_size, config.tournament_k, config.max_retries, config.rng_seed
    )
    pool = build_seed_pool(mcfg, weights, pool_rng, config.tensor_shape, config.growth_probability)
    judge = JudgeMatrix()
    registry = BugRegistry()

    file_tensor = None
    if config.input_mode == "file":
        file_tensor = read_tensor(config.dataset_path)
        if file_tensor.shape != config.tensor_shape:
            # The file header wins; the configured shape is only for random mode.
            config = replace(config, tensor_shape=file_tensor.shape)

    log_entries: list[dict] = []
    all_reports = []
    order_counter = len(pool)
    iteration = 0
    started = time.monotonic()

    def out_of_budget() -> bool:
        if iteration >= config.iterations:
            return True
        if config.duration_seconds is not None and time.monotonic() - started >= config.duration_seconds:
            return True
        return False

    with open(log_path, "w", encoding="utf-8") as log_fp:
        while not out_of_budget():
            if config.guided:
                seed_entries = tournament_select_entries(pool, config.tournament_k, loop_rng)
            else:
                picks = loop_rng.choice(len(pool.entries), size=min(config.tournament_k, len(pool)), replace=False)
                seed_entries = [pool.entries[int(p)] for p in picks]

            for seed_entry in seed_entries:
                if out_of_budget():
                    break
                input_tensor = file_tensor if file_tensor is not None else random_tensor(config.tensor_shape, tensor_rng)
                param_seed = int(param_rng.integers(0, 2**64, dtype=np.uint64))

                mutated = None
                chosen = None
                for _ in range(10):
                    try:
                        mutated, chosen = mutate(
                            seed_entry.model, weights, loop_rng, config.max_retries, config.growth_probability
                        )
                        break
                    except MutationFailedError:
                        seed_entry = pool.entries[int(loop_rng.integers(len(pool.entries)))]
                if mutated is None:
                    raise ModelFuzzError("mutation repeatedly failed; seed pool may be degenerate")

                try:
                    record = run_differential(
                        mutated, input_tensor, backends, config.epsilon, param_seed, config.depth
                    )
                except HarnessDegradedError as exc:
                    record = exc.record

                # Adapters that died stay in the roster only as long as two
                # live backends remain.
                dead = [b for b in backends if isinstance(b, AdapterBackend) and b._dead]
                for b in dead:
                    print(f"warning: dropping dead adapter backend {b.id.name!r}", file=sys.stderr)
                    backends.remove(b)
                    b.close()
                if dead and len(backends) < 2:
                    raise ModelFuzzError("fewer than 2 live backends remain; aborting campaign")

                new_row = judge.append(record.measurement)
                delta = 0.0
                f_new = 0.0
                if config.guided:
                    f_new = fitness(judge, new_row, config.fusion_raw_x)
                    if seed_entry.row_index is not None:
                        f_seed = fitness(judge, seed_entry.row_index, config.fusion_raw_x)
                    else:
                        f_seed = seed_entry.fitness
                    delta = f_new - f_seed
                    weights = update_operator_weights(weights, chosen, delta)

                digest = record.model_digest
                if config.guided and delta > 0 and digest not in pool.digests():
                    entry = PoolEntry(mutated, f_new, digest, order=order_counter, row_index=new_row)
                    order_counter += 1
                    if len(pool) < pool.capacity:
                        pool.add(entry)
                    else:
                        weakest = min(pool.entries, key=lambda e: (e.fitness, e.order))
                        if entry.fitness > weakest.fitness:
                            pool.entries.remove(weakest)
                            pool.add(entry)

                reports = []
                if record.verdict.kind != "NoBug":
                    reports = dedup_and_report(record, registry, mutated, tensor_digest(input_tensor), iteration)
                    for report in reports:
                        _write_bug_files(bugs_dir, report, record, config, input_tensor, iteration)
                all_reports.extend(reports)

                entry_obj = {
                    "iteration": iteration,
                    "seed_digest": seed_entry.digest,
                    "chosen_op": chosen,
                    "model_digest": digest,
                    "measurement": {
                        "performance": record.measurement.performance,
                        "variety": record.measurement.variety,
                        "time_seconds": record.measurement.time_seconds,
                    },
                    "verdict": record.verdict.to_obj(),
                    "delta_fitness": delta,
                    "weights_hash": _weights_hash(weights),
                    "bug_ids": [r.signature for r in reports],
                }
                log_fp.write(json.dumps(entry_obj, sort_keys=True, separators=(",", ":")) + "\n")
                log_entries.append(entry_obj)
                iteration += 1

    bug_counts = {"Crash": 0, "NaN": 0, "Inconsistency": 0}
    for report in all_reports:
        bug_counts[report.kind] += 1
    times = [e["measurement"]["time_seconds"] for e in log_entries]
    varieties = [e["measurement"]["variety"] for e in log_entries]
    summary = {
        "iterations": iteration,
        "models_executed": iteration,
        "mean_time_seconds": float(np.mean(times)) if times else 0.0,
        "mean_variety": float(np.mean(varieties)) if varieties else 0.0,
        "bug_counts": bug_counts,
        "unique_bugs_total": len(all_reports),
        "final_pool_size": len(pool),
        "kernel_path": kernels.active_backend(),
        "guided": config.guided,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return CampaignResult(log_entries, all_reports, summary, log_path, bugs_dir)


def replay_bug(path) -> dict:
    """Re-run a persisted bug report; returns original/replayed verdicts."""
    payload = json.loads(Path(path).read_text())
    model = model_from_obj(payload["model"])
    input_tensor = tensor_from_wire(payload["input"], dtype=np.float64)
    replay = payload["replay"]
    backends = [backend_from_spec(dict(spec)) for spec in replay["backends"]]
    try:
        try:
            record = run_differential(
                model, input_tensor, backends, replay["epsilon"], replay["param_seed"], replay.get("depth", 2)
            )
        except HarnessDegradedError as exc:
            record = exc.record
    finally:
        for backend in backends:
            if isinstance(backend, AdapterBackend):
                backend.close()
    original = Verdict.from_obj(payload["verdict"])
    return {
        "original": original.to_obj(),
        "replayed": record.verdict.to_obj(),
        "match": record.verdict == original,
    }
