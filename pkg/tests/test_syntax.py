from __future__ import annotations

import itertools
import json

import jsonschema
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import EXAMPLES
from randmodels import models
from robustikit import corpus
from robustikit.evaluate import evaluate
from robustikit.expr import (
    And,
    Arith,
    Binder,
    BoolLit,
    Cmp,
    Iff,
    Implies,
    Int,
    Name,
    Neg,
    Not,
    Or,
    Quant,
    Range,
)
from robustikit.model import ModelError
from robustikit.schema import load_schema
from robustikit.syntax import DSLError, expr_text, load, parse, parse_expr, print_entities
from robustikit.syntax import eventb, jsonio

# -- expression round trip ----------------------------------------------------------

ints = st.deferred(
    lambda: st.one_of(
        st.integers(-20, 20).map(Int),
        st.sampled_from(["x", "y"]).map(Name),
        st.builds(Neg, ints),
        st.builds(Arith, st.sampled_from(["+", "-", "*"]), ints, ints),
    )
)
bools = st.deferred(
    lambda: st.one_of(
        st.booleans().map(BoolLit),
        st.builds(Cmp, st.sampled_from(["=", "!=", "<", "<="]), ints, ints),
        st.builds(Not, bools),
        st.lists(bools, min_size=2, max_size=3).map(lambda a: And(tuple(a))),
        st.lists(bools, min_size=2, max_size=3).map(lambda a: Or(tuple(a))),
        st.builds(Implies, bools, bools),
        st.builds(Iff, bools, bools),
        st.builds(
            lambda body: Quant("exists", (Binder("t", Range(Name("x"), Arith("+", Name("x"), Int(2)))),), body),
            bools,
        ),
    )
)


@settings(max_examples=300, deadline=None)
@given(bools)
def test_printed_expressions_parse_back_to_the_same_meaning(e):
    text = expr_text(e)
    back = parse_expr(text)
    assert expr_text(back) == text
    for x, y in itertools.product(range(-2, 3), repeat=2):
        env = {"x": x, "y": y, "t": 0}
        assert evaluate(back, env) == evaluate(e, env)


def test_precedence_and_associativity():
    assert expr_text(parse_expr("a - (b - c)")) == "a - (b - c)"
    assert expr_text(parse_expr("(a - b) - c")) == "a - b - c"
    assert expr_text(parse_expr("a => (b => c)")) == "a => b => c"
    assert expr_text(parse_expr("(a => b) => c")) == "(a => b) => c"
    assert expr_text(parse_expr("not (a and b)")) == "not (a and b)"
    assert parse_expr("x > 3") == parse_expr("3 < x")


# -- models ------------------------------------------------------------------------


@pytest.mark.parametrize("name", corpus.NAMES)
def test_corpus_round_trips(name):
    sf = corpus.source(name)
    again = load(print_entities(sf.entities))
    assert again.entities == sf.entities


@settings(max_examples=100, deadline=None)
@given(models())
def test_generated_models_round_trip(model):
    sf = load(model.text())
    assert load(print_entities(sf.entities)).entities == sf.entities


def test_robustified_machines_round_trip_with_provenance(ht0, eps0, injected, pr_outcome, rr_outcome):
    for m in (injected, pr_outcome.machine, rr_outcome.machine):
        back = load(print_entities([ht0, eps0, m])).machines[m.name]
        assert back == m
        assert back.base == ht0 and back.spec == eps0


def test_unresolved_origin_is_a_warning(injected):
    sf = parse(print_entities([injected]))
    assert sf.ok
    assert any(d.severity == "warning" and "provenance" in d.message for d in sf.diagnostics)


def test_malformed_example_reports_position():
    sf = parse((EXAMPLES / "malformed.cpm").read_text())
    assert not sf.ok
    (err,) = sf.errors()
    assert err.line == 6


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("machine m\n  var x : int[0..3]\n  init x = 0\n  safety true\n"
         "  ctrl event a\n    guard x' = 1\n    action x' = x\n", "primed"),
        ("machine m\n  var x : int[0..3]\n  init y = 0\n  safety true\n"
         "  ctrl event a\n    action x' = x\n", "'y'"),
        ("machine m\n  var x : int[3..0]\n  init true\n  safety true\n"
         "  ctrl event a\n    action x' = x\n", "exceeds"),
        ("machine m\n  var x : int[0..3]\n  init true\n  safety true\n"
         "  ctrl event a\n    action x' = x\n  ctrl event a\n    action x' = x\n", "duplicate"),
        ("machine m\n  var x : int[0..3]\n  init true\n  safety true\n"
         "  ctrl event a\n    action x' = x\nuncertainty e for m\n  z within 2\n", "'z'"),
    ],
)
def test_semantic_errors_are_diagnosed(text, fragment):
    sf = parse(text)
    assert not sf.ok
    assert any(fragment in d.message for d in sf.errors()), [str(d) for d in sf.errors()]
    with pytest.raises(DSLError):
        load(text)


# -- JSON --------------------------------------------------------------------------


def test_json_round_trip_and_schema(ht0, eps0, injected, pr_outcome):
    ents = [ht0, eps0, injected, pr_outcome.machine]
    doc = jsonio.document(ents)
    jsonschema.validate(doc, load_schema("model"))
    back = jsonio.loads(jsonio.dumps(ents))
    assert back == ents
    assert back[3].base == ht0


def test_json_symbolic_radius_round_trips(ht1, epsdt):
    back = jsonio.loads(jsonio.dumps([ht1, epsdt]))
    assert back == [ht1, epsdt]


def test_json_rejects_invalid_documents(ht0):
    doc = jsonio.document([ht0])
    doc["entities"][0]["vars"][0]["domain"] = {"int": [0]}
    with pytest.raises(ModelError):
        jsonio.from_document(doc)
    doc = jsonio.document([ht0])
    doc["entities"][0]["init"] = "temp = "
    with pytest.raises(ModelError, match="init"):
        jsonio.from_document(doc)
    with pytest.raises(ModelError, match="not JSON"):
        jsonio.loads("{")


def test_json_export_is_stable(ht0, eps0):
    assert jsonio.dumps([ht0, eps0]) == jsonio.dumps([ht0, eps0])
    json.loads(jsonio.dumps([ht0, eps0]))


# -- Event-B text ------------------------------------------------------------------


def test_eventb_text_of_hetero_event_matches_golden_file(pr_outcome):
    golden = (EXAMPLES / "ctrl_heat_keep_safe_hetero.eventb.txt").read_text(encoding="utf-8")
    assert eventb.machine_text(pr_outcome.machine, ["ctrl_heat_keep_safe_hetero"]) == golden


def test_eventb_text_uses_mathematical_notation(injected):
    text = eventb.machine_text(injected)
    assert "∧" in text and "′" in text and "events may violate this" in text
    assert "Controller event ctrl_heat" in text
