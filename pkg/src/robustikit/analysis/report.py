"""Verdicts with witnesses, shared by every check."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Optional

from ..model import BOT, Machine, PairedMachine, State

HOLDS = "holds"
FAILS = "fails"
UNKNOWN = "unknown"


@dataclass
class CheckReport:
    """Outcome of one analysis.

    ``witnesses`` are JSON-ready named valuations, lexicographically first
    violations first.  ``stats`` is deterministic; wall-clock time lives in
    ``timing`` so reports can be compared byte for byte without it.
    """

    kind: str
    subject: str
    verdict: str
    witnesses: list[dict[str, Any]] = field(default_factory=list)
    stats: dict[str, Any] = field(default_factory=dict)
    reason: Optional[str] = None
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    @property
    def fails(self) -> bool:
        return self.verdict == FAILS

    def to_json(self, *, timing: bool = True) -> dict[str, Any]:
        out: dict[str, Any] = {
            "kind": self.kind,
            "subject": self.subject,
            "verdict": self.verdict,
            "witnesses": self.witnesses,
            "stats": self.stats,
        }
        if self.reason is not None:
            out["reason"] = self.reason
        if timing:
            out["timing"] = self.timing
        return out

    def summary(self) -> str:
        line = f"{self.kind} [{self.subject}]: {self.verdict}"
        if self.reason:
            line += f" ({self.reason})"
        if self.witnesses:
            line += f"; first witness {self.witnesses[0]}"
        return line


def value_json(v: Any) -> Any:
    return "bot" if v is BOT else v


def state_json(m: Machine, s: State) -> dict[str, Any]:
    return {n: value_json(v) for n, v in zip(m.var_names, s)}


def pair_json(m: Machine, s: State) -> dict[str, Any]:
    """A state of ``m``; paired states are split into true and perceived parts."""
    if isinstance(m, PairedMachine):
        k = len(m.true_names)
        return {
            "state": {n: value_json(v) for n, v in zip(m.var_names[:k], s[:k])},
            "perceived": {n: value_json(v) for n, v in zip(m.var_names[:k], s[k:])},
        }
    return {"state": state_json(m, s)}


def params_json(names, p) -> dict[str, Any]:
    return {n: value_json(v) for n, v in zip(names, p)}


class Collector:
    """Keeps the first ``limit`` witnesses and counts the rest."""

    def __init__(self, limit: Optional[int] = 1):
        self.limit = limit
        self.witnesses: list[dict[str, Any]] = []
        self.count = 0

    def add(self, w: dict[str, Any]) -> None:
        self.count += 1
        if self.limit is None or len(self.witnesses) < self.limit:
            self.witnesses.append(w)

    @property
    def full(self) -> bool:
        return self.limit is not None and len(self.witnesses) >= self.limit


def make_report(kind: str, subject: str, col: Collector, stats: dict[str, Any], t0: float) -> CheckReport:
    stats = dict(stats)
    stats["violations"] = col.count
    return CheckReport(
        kind,
        subject,
        FAILS if col.count else HOLDS,
        col.witnesses,
        stats,
        timing={"seconds": round(time.perf_counter() - t0, 6)},
    )
