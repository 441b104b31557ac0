"""Acceptance criteria 1 to 9, each reported as one PASS/FAIL line.

Every criterion builds its inputs from the bundled corpus and returns the JSON
documents it produced, so criterion 9 can rerun 1 to 7 and compare bytes.
"""

from __future__ import annotations

import json
import time
from typing import Any, Callable

import pytest

import test_properties
from robustikit import corpus
from robustikit.analysis import (
    check_feasibility,
    check_forward_simulation,
    check_invariant_preservation,
    check_partitioning,
    idx_c,
    recheck,
)
from robustikit.explore import sweep
from robustikit.model import BOT
from robustikit.semantics import semantics
from robustikit.syntax import jsonio
from robustikit.transform import inject, is_vacuous, robustify_preserving, robustify_repurposing, vacuity_report

RESULTS: dict[int, tuple[bool, str]] = {}


def _heater():
    sf = corpus.source("ht0")
    return sf.machines["ht0"], sf.uncertainties["eps0"], sf.uncertainties["eps7"]


def _docs(*reports) -> list[dict[str, Any]]:
    return [r.to_json(timing=False) for r in reports]


def criterion_1() -> list[Any]:
    m, _, _ = _heater()
    t0 = time.perf_counter()
    reports = [check_partitioning(m), check_invariant_preservation(m), check_feasibility(m)]
    elapsed = time.perf_counter() - t0
    assert all(r.holds for r in reports), [r.summary() for r in reports]
    assert elapsed < 5, f"{elapsed:.1f} s"
    return _docs(*reports)


def criterion_2() -> list[Any]:
    m, eps0, _ = _heater()
    pm = inject(m, eps0)
    r = check_invariant_preservation(pm, max_witnesses=None)
    assert r.fails
    for w in r.witnesses:
        assert recheck(pm, "invariant-preservation", w)
    typical = [
        w for w in r.witnesses
        if 30 <= w["state"]["temp"] <= 40 and w["perceived"]["temp"] < 30 and w["successor"]["state"]["temp"] > 40
    ]
    assert typical
    assert any(
        w["state"] == {"tn": "p", "temp": 32} and w["perceived"] == {"tn": "p", "temp": 29}
        and w["params"] == {"dh": 11} and w["successor"]["state"]["temp"] == 43
        for w in typical
    )
    return _docs(r)


def criterion_3() -> list[Any]:
    m, eps0, _ = _heater()
    t0 = time.perf_counter()
    out = robustify_preserving(inject(m, eps0))
    assert out.ok
    reports = [
        check_invariant_preservation(out.machine),
        check_feasibility(out.machine),
        check_partitioning(out.machine),
        check_forward_simulation(out.machine, m),
    ]
    elapsed = time.perf_counter() - t0
    assert all(r.holds for r in reports), [r.summary() for r in reports]
    assert elapsed < 60, f"{elapsed:.1f} s"
    return [out.to_json(timing=False), jsonio.document([out.machine])] + _docs(*reports)


def criterion_4() -> list[Any]:
    m, eps0, _ = _heater()
    pm = robustify_preserving(inject(m, eps0)).machine
    ev = pm.event("ctrl_heat_keep_safe_hetero")
    assert ev.covers == (1, 2)
    sem = semantics(pm)
    k = pm.events.index(ev)
    windows = set()
    for true_temp in range(26, 33):
        for tn in ("p", "c"):
            windows.add(tuple(sorted(sem.params(k, (tn, true_temp, tn, 29)))))
    assert windows == {tuple((d, d) for d in range(4, 9))}, windows
    return [[list(p) for p in windows.pop()]]


def criterion_5() -> list[Any]:
    m, eps0, eps7 = _heater()
    assert is_vacuous({1, 2, 3}, m, eps0)
    v7 = is_vacuous({1, 2, 3}, m, eps7)
    assert not v7
    temps = sorted({s[1] for s in v7.witnesses})
    assert 35 in temps
    for s in v7.witnesses:
        seen = {idx_c(m, (s[0], t)) for t in range(s[1] - 7, s[1] + 8) if -20 <= t <= 80}
        assert seen == {1, 2, 3}
    return _docs(vacuity_report([1, 2, 3], m, eps0), vacuity_report([1, 2, 3], m, eps7)) + [temps]


def criterion_6() -> list[Any]:
    m, eps0, _ = _heater()
    out = robustify_repurposing(inject(m, eps0))
    assert out.ok
    reports = [check_invariant_preservation(out.machine), check_feasibility(out.machine)]
    assert all(r.holds for r in reports), [r.summary() for r in reports]
    rm = out.machine
    ev = rm.event("ctrl_heat_keep_safe_hetero")
    sem = semantics(rm)
    k = rm.events.index(ev)
    checked = 0
    for s in sem.states_where(rm.uncertainty):
        for params in sem.params(k, s):
            dh = params[0]
            if dh is BOT:
                continue
            checked += 1
            for t in range(s[3] - 3, s[3] + 4):
                assert 30 <= t + dh <= 40, (s, t, dh)
    assert checked
    return [out.to_json(timing=False), jsonio.document([rm])] + _docs(*reports)


def criterion_7() -> list[Any]:
    sf = corpus.source("ht1")
    t0 = time.perf_counter()
    result = sweep(sf.machines["ht1"], sf.uncertainties["epsdt"], 0, 10, jobs=1)
    elapsed = time.perf_counter() - t0
    assert (result.max_pR, result.max_rR) == (2, 5), (result.max_pR, result.max_rR)
    assert elapsed < 300, f"{elapsed:.1f} s"
    return [result.to_json(timing=False)]


def criterion_8() -> list[Any]:
    # each property runs on at least 100 generated machines
    for name in (
        "test_generated_guards_partition",
        "test_idx_and_par_match_oracle",
        "test_compartment_par_eps_safpar_match_oracle",
        "test_injection_matches_oracle_and_preserves_uncertainty_invariant",
        "test_pruning_vacuous_events_keeps_transitions",
    ):
        getattr(test_properties, name)()
    return []


CRITERIA: dict[int, Callable[[], list[Any]]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
}


def criterion_9() -> list[Any]:
    for n in range(1, 8):
        first = json.dumps(CRITERIA[n]())
        second = json.dumps(CRITERIA[n]())
        assert first == second, f"criterion {n} output differs between runs"
    return []


CRITERIA[9] = criterion_9


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    try:
        CRITERIA[n]()
    except AssertionError as e:
        RESULTS[n] = (False, str(e).splitlines()[0] if str(e) else "assertion failed")
        raise
    except Exception as e:
        RESULTS[n] = (False, f"{type(e).__name__}: {e}")
        raise
    RESULTS[n] = (True, "")


def result_lines() -> list[str]:
    out = []
    for n in sorted(RESULTS):
        ok, why = RESULTS[n]
        out.append(f"criterion {n}: {'PASS' if ok else 'FAIL'}" + ("" if ok else f" ({why})"))
    return out


if __name__ == "__main__":
    for n in sorted(CRITERIA):
        try:
            test_criterion(n)
        except Exception:
            pass
    print("\n".join(result_lines()))
