from __future__ import annotations

import pytest

from robustikit.analysis import (
    check_feasibility,
    check_forward_simulation,
    check_invariant_preservation,
    check_partitioning,
)
from robustikit.analysis.smtlib import SmtError, emit
from robustikit.transform import is_vacuous, thm1_condition, thm2_condition

z3 = pytest.importorskip("z3")


def verdict(script: str) -> str:
    s = z3.Solver()
    s.set("timeout", 60_000)
    s.from_string(script)
    return str(s.check())


def expect(holds: bool) -> str:
    return "unsat" if holds else "sat"


def test_script_shape(ht0):
    script = emit("partitioning", ht0)
    assert script.startswith("; robustikit query")
    assert script.rstrip().endswith("(check-sat)")
    assert "get-model" not in script and "(set-logic LIA)" in script


@pytest.mark.parametrize("kind, check", [
    ("partitioning", check_partitioning),
    ("preservation", check_invariant_preservation),
    ("feasibility", check_feasibility),
])
def test_machine_queries_agree_with_enumeration(ht0, injected, pr_outcome, kind, check):
    for m in (ht0, injected, pr_outcome.machine):
        assert verdict(emit(kind, m)) == expect(check(m).holds), (kind, m.name)


def test_vacuity_queries(ht0, eps0, eps7):
    assert verdict(emit("vacuity", ht0, spec=eps0, subset=[1, 2, 3])) == "unsat"
    script = emit("vacuity", ht0, spec=eps7, subset=[1, 2, 3])
    assert verdict(script) == "sat"
    assert not is_vacuous({1, 2, 3}, ht0, eps7)
    pinned = script.replace("(check-sat)", "(assert (= h_temp 35))\n(check-sat)")
    assert verdict(pinned) == "sat"
    outside = script.replace("(check-sat)", "(assert (= h_temp 20))\n(check-sat)")
    assert verdict(outside) == "unsat"


@pytest.mark.parametrize("delta", [2, 3, 6])
def test_condition_queries_agree_with_enumeration(ht1, epsdt, delta):
    from robustikit.explore import bind

    m, spec = bind(ht1, epsdt, {"Delta": delta})
    assert verdict(emit("thm1", ht1, spec=epsdt, consts={"Delta": delta})) == expect(thm1_condition(m, spec).holds)
    assert verdict(emit("thm2", ht1, spec=epsdt, consts={"Delta": delta})) == expect(thm2_condition(m, spec).holds)


def test_simulation_query(ht0, pr_outcome):
    m = pr_outcome.machine
    assert verdict(emit("simulation", m, original=ht0)) == expect(check_forward_simulation(m, ht0).holds)


def test_query_errors(ht0):
    with pytest.raises(SmtError):
        emit("vacuity", ht0)
    with pytest.raises(SmtError):
        emit("simulation", ht0)
