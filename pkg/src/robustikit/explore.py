"""End-to-end workflow and uncertainty sweeps.

The workflow injects the uncertainty and then prefers action-preserving
robustification, falling back to action-repurposing and finally reporting
that neither sufficient condition holds.  A sweep evaluates both conditions
at every value of one symbolic constant.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

from .analysis.checks import check_feasibility, check_invariant_preservation, check_partitioning
from .analysis.report import CheckReport
from .model import ConstDecl, Machine, ModelError, PairedMachine, UncertaintySpec
from .semantics import config, set_state_cap
from .transform.conditions import thm1_condition, thm2_condition
from .transform.inject import check_inputs, inject, merged_consts, require_bound
from .transform.robustify import RobustifyOutcome, robustify_preserving, robustify_repurposing

INJECTED = "injected"
PR_SUCCESS = "pR-success"
RR_SUCCESS = "rR-success"
INFEASIBLE = "infeasible"
PRECONDITION = "precondition-failed"

RECOMMENDATION = "decrease the level of uncertainty or relax the safety invariant"

JOBS_ENV = "ROBUSTIKIT_JOBS"


def bind(m: Machine, spec: UncertaintySpec, values: Mapping[str, int]) -> tuple[Machine, UncertaintySpec]:
    """Bind symbolic constants of the machine and the specification by name."""
    known = {c.name for c in merged_consts(m, spec)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ModelError(f"no symbolic constant named {', '.join(unknown)}")
    mv = {k: v for k, v in values.items() if k in m.const_names}
    sv = {k: v for k, v in values.items() if k in spec.const_names}
    return (m.bind(mv) if mv else m), (spec.bind(sv) if sv else spec)


# ---------------------------------------------------------------------------
# workflow


@dataclass
class WorkflowResult:
    """Stage reached by the workflow with every report produced on the way."""

    stage: str
    preconditions: list[CheckReport]
    injected: Optional[PairedMachine] = None
    preserving: Optional[RobustifyOutcome] = None
    repurposing: Optional[RobustifyOutcome] = None
    machine: Optional[PairedMachine] = None
    recommendation: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.stage in (PR_SUCCESS, RR_SUCCESS)

    def to_json(self, *, timing: bool = True) -> dict[str, Any]:
        return {
            "type": "workflow",
            "stage": self.stage,
            "preconditions": [r.to_json(timing=timing) for r in self.preconditions],
            "injected": None if self.injected is None else self.injected.name,
            "preserving": None if self.preserving is None else self.preserving.to_json(timing=timing),
            "repurposing": None if self.repurposing is None else self.repurposing.to_json(timing=timing),
            "machine": None if self.machine is None else self.machine.name,
            "recommendation": self.recommendation,
        }

    def summary(self) -> str:
        lines = [r.summary() for r in self.preconditions]
        for o in (self.preserving, self.repurposing):
            if o is not None:
                lines.append(o.condition.summary())
        line = f"workflow: {self.stage}"
        if self.machine is not None:
            line += f" ({self.machine.name})"
        lines.append(line)
        if self.recommendation:
            lines.append(f"recommendation: {self.recommendation}")
        return "\n".join(lines)


def preconditions(m: Machine, max_witnesses: Optional[int] = 1) -> list[CheckReport]:
    return [
        check_partitioning(m, max_witnesses),
        check_invariant_preservation(m, max_witnesses),
        check_feasibility(m, max_witnesses),
    ]


def run_workflow(
    m: Machine, spec: UncertaintySpec, *, max_witnesses: Optional[int] = 1, prose: bool = False
) -> WorkflowResult:
    """Inject, then robustify by preserving actions if possible and by repurposing otherwise."""
    require_bound(m, spec)
    pre = preconditions(m, max_witnesses)
    if not all(r.holds for r in pre):
        return WorkflowResult(PRECONDITION, pre)
    check_inputs(m, spec)
    pm = inject(m, spec, check=False)
    result = WorkflowResult(INJECTED, pre, injected=pm)
    result.preserving = robustify_preserving(pm)
    if result.preserving.ok:
        result.stage, result.machine = PR_SUCCESS, result.preserving.machine
        return result
    result.repurposing = robustify_repurposing(pm, prose=prose)
    if result.repurposing.ok:
        result.stage, result.machine = RR_SUCCESS, result.repurposing.machine
        return result
    result.stage = INFEASIBLE
    result.recommendation = RECOMMENDATION
    return result


# ---------------------------------------------------------------------------
# sweep


@dataclass
class SweepPoint:
    value: int
    thm1: CheckReport
    thm2: CheckReport

    def to_json(self, *, timing: bool = True) -> dict[str, Any]:
        return {
            "value": self.value,
            "thm1": self.thm1.verdict,
            "thm2": self.thm2.verdict,
            "thm1_witnesses": self.thm1.witnesses,
            "thm2_witnesses": self.thm2.witnesses,
            **({"timing": {"thm1": self.thm1.timing, "thm2": self.thm2.timing}} if timing else {}),
        }


def _prefix_max(points: Sequence[SweepPoint], key: str) -> Optional[int]:
    best = None
    for p in points:
        if not getattr(p, key).holds:
            break
        best = p.value
    return best


def _non_monotone(points: Sequence[SweepPoint], key: str) -> bool:
    failed = False
    for p in points:
        ok = getattr(p, key).holds
        if failed and ok:
            return True
        failed = failed or not ok
    return False


@dataclass
class SweepResult:
    """Both sufficient conditions at every value of ``param`` in ascending order.

    The maxima are prefix maxima: the largest value such that the condition
    holds at it and at every smaller value in the range (None when it fails
    at the first point).
    """

    machine: str
    uncertainty: str
    param: str
    points: list[SweepPoint] = field(default_factory=list)

    @property
    def max_pR(self) -> Optional[int]:
        return _prefix_max(self.points, "thm1")

    @property
    def max_rR(self) -> Optional[int]:
        return _prefix_max(self.points, "thm2")

    @property
    def non_monotone(self) -> dict[str, bool]:
        return {"pR": _non_monotone(self.points, "thm1"), "rR": _non_monotone(self.points, "thm2")}

    def to_json(self, *, timing: bool = True) -> dict[str, Any]:
        return {
            "type": "sweep",
            "machine": self.machine,
            "uncertainty": self.uncertainty,
            "param": self.param,
            "range": [self.points[0].value, self.points[-1].value] if self.points else [],
            "points": [p.to_json(timing=timing) for p in self.points],
            "max": {"pR": self.max_pR, "rR": self.max_rR},
            "non_monotone": self.non_monotone,
        }

    def table(self) -> str:
        """Plain-text point table followed by the two maxima."""
        w = max(len(self.param), 5)
        lines = [f"{self.param:>{w}}  thm1 (pR)  thm2 (rR)"]
        for p in self.points:
            lines.append(f"{p.value:>{w}}  {p.thm1.verdict:<9}  {p.thm2.verdict}")
        flags = self.non_monotone
        for label, mx, key in (("action-preserving", self.max_pR, "pR"), ("action-repurposing", self.max_rR, "rR")):
            text = "none" if mx is None else f"{self.param} <= {mx}"
            note = " (non-monotone: holds again after a failure)" if flags[key] else ""
            lines.append(f"{label} robustification feasible for {text}{note}")
        return "\n".join(lines) + "\n"


def sweep_constant(m: Machine, spec: UncertaintySpec, param: Optional[str] = None) -> ConstDecl:
    consts = merged_consts(m, spec)
    if len(consts) != 1:
        names = ", ".join(c.name for c in consts) or "none"
        raise ModelError(f"a sweep needs exactly one symbolic constant; found {names}")
    c = consts[0]
    if param is not None and param != c.name:
        raise ModelError(f"no symbolic constant named {param}; the only one is {c.name}")
    return c


def _point(args) -> SweepPoint:
    m, spec, name, v, max_witnesses, prose, cap = args
    set_state_cap(cap)
    bm, bs = bind(m, spec, {name: v})
    return SweepPoint(v, thm1_condition(bm, bs, max_witnesses), thm2_condition(bm, bs, max_witnesses, prose=prose))


def default_jobs() -> int:
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ModelError(f"{JOBS_ENV} must be an integer, not {env!r}") from None
    return os.cpu_count() or 1


def sweep(
    m: Machine,
    spec: UncertaintySpec,
    lo: int,
    hi: int,
    *,
    param: Optional[str] = None,
    jobs: Optional[int] = 1,
    max_witnesses: Optional[int] = 1,
    prose: bool = False,
) -> SweepResult:
    """Evaluate both sufficient conditions for every value in ``lo..hi``.

    ``jobs`` > 1 evaluates points in worker processes; None means
    :func:`default_jobs`.  Results do not depend on it.
    """
    c = sweep_constant(m, spec, param)
    if lo > hi:
        raise ModelError(f"empty range {lo}..{hi}")
    if lo < c.domain.lo or hi > c.domain.hi:
        raise ModelError(f"range {lo}..{hi} leaves the domain {c.domain.lo}..{c.domain.hi} of {c.name}")
    jobs = default_jobs() if jobs is None else max(1, jobs)
    work = [(m, spec, c.name, v, max_witnesses, prose, config.state_cap) for v in range(lo, hi + 1)]
    if jobs == 1 or len(work) == 1:
        points = [_point(a) for a in work]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(work))) as pool:
            points = list(pool.map(_point, work))
    points.sort(key=lambda p: p.value)
    return SweepResult(m.name, spec.name, c.name, points)
