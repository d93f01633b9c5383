"""Campaign-log analysis: measurement correlations and the time-split table."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InsufficientDataError
from .fusion import pearson


def read_log(path) -> list:
    entries = []
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            entries.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValueError(f"bad log line {line_no}: {exc}") from exc
    return entries


def _columns(entries):
    perf = [e["measurement"]["performance"] for e in entries]
    variety = [float(e["measurement"]["variety"]) for e in entries]
    times = [e["measurement"]["time_seconds"] for e in entries]
    return perf, variety, times


def _corr_or_nan(x, y):
    # Reports mark zero-variance columns as NaN rather than forcing the
    # fusion convention (r = 0) onto readers.
    if np.std(x) == 0.0 or np.std(y) == 0.0:
        return "NaN"
    return pearson(x, y)


def analyze_correlations(entries) -> dict:
    """Pearson r for variety vs performance and variety vs time."""
    if len(entries) < 2:
        raise InsufficientDataError(f"need at least 2 log entries, got {len(entries)}")
    perf, variety, times = _columns(entries)
    return {
        "n": len(entries),
        "variety_performance": _corr_or_nan(variety, perf),
        "variety_time": _corr_or_nan(variety, times),
    }


def render_correlations_table(report: dict) -> str:
    def fmt(v):
        return v if isinstance(v, str) else f"{v:.6f}"

    lines = [
        "Pearson Correlation Coefficient among Model Measurements",
        f"{'':<12}{'Variety & Performance':>24}{'Variety & Time':>18}",
        f"{'campaign':<12}{fmt(report['variety_performance']):>24}{fmt(report['variety_time']):>18}",
        f"(n = {report['n']} models)",
    ]
    return "\n".join(lines)


def time_split_report(entries) -> dict:
    """Larger/smaller model groups split at the median execution time.

    Entries are ordered by descending time (stable, so equal times keep
    iteration order); the top half are the larger models. A group's time per
    bug is its total time over its bug count, rendered as an em dash when the
    group found nothing.
    """
    if not entries:
        raise InsufficientDataError("need at least 1 log entry")
    ordered = sorted(entries, key=lambda e: -e["measurement"]["time_seconds"])
    half = len(ordered) // 2
    groups = {"larger": ordered[:half], "smaller": ordered[half:]}
    report = {}
    for name, group in groups.items():
        total = float(sum(e["measurement"]["time_seconds"] for e in group))
        bugs = sum(len(e.get("bug_ids", ())) for e in group)
        report[name] = {
            "models": len(group),
            "total_time": total,
            "time_per_model": total / len(group) if group else 0.0,
            "bug_number": bugs,
            "time_per_bug": (total / bugs) if bugs else None,
        }
    return report


def render_time_split_table(report: dict) -> str:
    header = f"{'':<16}{'Total Time (s)':>16}{'Time Per Model (s)':>20}{'Bug Number':>12}{'Time Per Bug (s)':>18}"
    lines = ["Effect of Model Execution Time", header]
    for name in ("smaller", "larger"):
        row = report[name]
        per_bug = "—" if row["time_per_bug"] is None else f"{row['time_per_bug']:.4f}"
        lines.append(
            f"{name + ' model':<16}{row['total_time']:>16.4f}{row['time_per_model']:>20.4f}"
            f"{row['bug_number']:>12}{per_bug:>18}"
        )
    return "\n".join(lines)
