from __future__ import annotations

import itertools
import operator

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustikit.evaluate import Evaluator, Unknown, evaluate
from robustikit.model import BOT, IntRange
from robustikit.syntax import parse_expr


def ev(text: str, **values):
    return evaluate(parse_expr(text), values)


def test_bot_is_strict_in_arithmetic():
    assert ev("x + 1 = bot", x=BOT) is True
    assert ev("x * 2 = bot", x=BOT) is True
    assert ev("-x = bot", x=BOT) is True


def test_ordering_with_bot_is_false():
    assert ev("x < 3", x=BOT) is False
    assert ev("3 <= x", x=BOT) is False
    assert ev("not (x < 3)", x=BOT) is True


def test_bot_equals_only_itself():
    assert ev("x = bot", x=BOT) is True
    assert ev("x = bot", x=0) is False
    assert ev("x != bot", x=0) is True
    assert ev("x = y", x=BOT, y=BOT) is True


def test_connectives():
    assert ev("a => b", a=False, b=False) is True
    assert ev("a <=> b", a=True, b=False) is False
    assert ev("x > 2 or x < -2", x=-3) is True


def test_quantifiers_over_ranges():
    assert ev("forall t in [x - 3 .. x + 3] . t + 10 > x", x=5) is True
    assert ev("exists t in [x - 3 .. x + 3] . t * 2 = 17", x=5) is False
    assert ev("exists t in [x - 3 .. x + 3] . t * 2 = 16", x=5) is True
    # empty range
    assert ev("forall t in [3 .. 2] . false") is True
    assert ev("exists t in [3 .. 2] . true") is False


def test_enum_constants():
    e = parse_expr("exists v in {p, c} . v = c and x = v")
    assert Evaluator({"p": "p", "c": "c"}).eval(e, {"x": "c"}) is True


def test_unbound_name_is_reported():
    with pytest.raises(Exception):
        ev("y + 1 = 2")


# -- the narrowing enumerator agrees with brute force ----------------------------

_OPS = {"<": operator.lt, "<=": operator.le, "=": operator.eq, "!=": operator.ne}

coef = st.integers(-3, 3)
atom = st.tuples(coef, coef, coef, st.sampled_from(sorted(_OPS)), st.integers(-12, 12))


def _atom_text(a) -> str:
    cx, cy, cz, op, k = a
    return f"{cx} * x + {cy} * y + {cz} * z {op} {k}".replace("+ -", "- ")


@settings(max_examples=300, deadline=None)
@given(st.lists(atom, min_size=1, max_size=4), st.integers(-6, 0), st.integers(0, 6), st.booleans())
def test_solver_matches_brute_force(atoms, lo, hi, with_bot):
    conjs = [parse_expr(_atom_text(a)) for a in atoms]
    dom = IntRange(lo, hi)
    e = Evaluator()
    unknowns = [Unknown("x", dom, bot=with_bot), Unknown("y", dom), Unknown("z", dom)]
    got = set(e.solver(conjs, unknowns).solutions({}))
    want = set()
    xs = list(dom.values()) + ([BOT] if with_bot else [])
    for x, y, z in itertools.product(xs, dom.values(), dom.values()):
        env = {"x": x, "y": y, "z": z}
        if all(e.eval(c, env) for c in conjs):
            want.add((x, y, z))
    assert got == want


@settings(max_examples=200, deadline=None)
@given(st.lists(atom, min_size=1, max_size=3), st.integers(-4, 4))
def test_quantifier_matches_python(atoms, x):
    body = " and ".join(_atom_text(a) for a in atoms)
    fa = evaluate(parse_expr(f"forall y in [x - 2 .. x + 2], z in [-2 .. 2] . {body}"), {"x": x})
    ex = evaluate(parse_expr(f"exists y in [x - 2 .. x + 2], z in [-2 .. 2] . {body}"), {"x": x})

    def holds(y, z):
        return all(_OPS[op](cx * x + cy * y + cz * z, k) for cx, cy, cz, op, k in atoms)

    pts = list(itertools.product(range(x - 2, x + 3), range(-2, 3)))
    assert fa == all(holds(y, z) for y, z in pts)
    assert ex == any(holds(y, z) for y, z in pts)
