"""Expression evaluation and finite constraint enumeration.

Expressions are compiled once into Python closures over a mutable environment
dict.  Primed names live in the environment under the key ``"name'"``.
Quantifiers are decided by the same enumerator that the model checker uses for
event parameters and post-states: the body is split into conjuncts, binders
fixed by an equation are computed instead of enumerated, and linear
comparisons narrow integer ranges before any value is tried.  Narrowing only
discards values that falsify some conjunct, and every conjunct is still
evaluated on each surviving assignment, so results equal plain enumeration.

The ``bot`` sentinel is strict: arithmetic on it yields ``bot``, ordering
comparisons involving it are false, and it equals only itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterator, Mapping, Optional, Sequence

from .expr import (
    And,
    Arith,
    BoolLit,
    BotLit,
    Cmp,
    EnumSet,
    Expr,
    Iff,
    Implies,
    Int,
    Name,
    Neg,
    Not,
    Or,
    Primed,
    Quant,
    Range,
    conjuncts,
    free_names,
    negate,
    primed_names,
)
from .model import BOT, Domain, EnumDomain, IntRange

DEFAULT_QUANT_LIMIT = 1_000_000
_MEMO_CAP = 500_000
_MISSING = object()

Env = dict


class EvalError(Exception):
    """Raised for unbound references, ill-typed operations or oversized ranges."""


def key_of(e: Expr) -> Optional[str]:
    """Environment key of a plain or primed name, else None."""
    if isinstance(e, Name):
        return e.name
    if isinstance(e, Primed):
        return e.name + "'"
    return None


def env_keys(e: Expr) -> frozenset[str]:
    return free_names(e) | frozenset(p + "'" for p in primed_names(e))


# ---------------------------------------------------------------------------
# primitive operations


def _arith_slow(op: str, a, b):
    if a is BOT or b is BOT:
        return BOT
    if isinstance(a, str) or isinstance(b, str):
        raise EvalError(f"arithmetic on enumeration constant ({a!r} {op} {b!r})")
    if isinstance(a, bool) or isinstance(b, bool):
        raise EvalError("arithmetic on a boolean value")
    raise EvalError(f"bad operands for {op}: {a!r}, {b!r}")


def _order_slow(a, b):
    if a is BOT or b is BOT:
        return None
    if isinstance(a, str) or isinstance(b, str):
        raise EvalError(f"ordering comparison on enumeration constant ({a!r}, {b!r})")
    raise EvalError(f"bad operands for comparison: {a!r}, {b!r}")


# ---------------------------------------------------------------------------
# linear forms


def linear_form(e: Expr, unknowns: frozenset[str]) -> Optional[tuple[dict[str, int], Expr]]:
    """Split ``e`` into ``sum(coef * unknown) + rest`` when it is linear."""
    from .expr import add, sub

    k = key_of(e)
    if k is not None:
        if k in unknowns:
            return {k: 1}, Int(0)
        return {}, e
    if isinstance(e, Int):
        return {}, e
    if isinstance(e, Neg):
        inner = linear_form(e.arg, unknowns)
        if inner is None:
            return None
        coeffs, rest = inner
        return {u: -c for u, c in coeffs.items()}, Neg(rest) if rest != Int(0) else rest
    if isinstance(e, Arith):
        if e.op in "+-":
            lf = linear_form(e.left, unknowns)
            rf = linear_form(e.right, unknowns)
            if lf is None or rf is None:
                return None
            sign = 1 if e.op == "+" else -1
            coeffs = dict(lf[0])
            for u, c in rf[0].items():
                coeffs[u] = coeffs.get(u, 0) + sign * c
            coeffs = {u: c for u, c in coeffs.items() if c}
            rest = add(lf[1], rf[1]) if sign == 1 else sub(lf[1], rf[1])
            if isinstance(lf[1], Int) and lf[1].value == 0:
                rest = rf[1] if sign == 1 else Neg(rf[1])
                if rest == Neg(Int(0)):
                    rest = Int(0)
            return coeffs, rest
        if e.op == "*":
            for lit, other in ((e.left, e.right), (e.right, e.left)):
                if isinstance(lit, Int):
                    inner = linear_form(other, unknowns)
                    if inner is None:
                        return None
                    coeffs, rest = inner
                    return (
                        {u: c * lit.value for u, c in coeffs.items() if c * lit.value},
                        Arith("*", lit, rest),
                    )
    if env_keys(e) & unknowns:
        return None
    return {}, e


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


# ---------------------------------------------------------------------------
# unknowns and the enumerator


@dataclass
class Unknown:
    """A variable to enumerate: a concrete domain or a quantifier binder domain."""

    key: str
    domain: Any  # Domain, or a Range / EnumSet expression for binders
    bot: bool = False

    @staticmethod
    def of(key: str, domain: Domain, bot: bool = False) -> "Unknown":
        return Unknown(key, domain, bot)


class _Plan:
    __slots__ = ("key", "eq", "bounds", "checks", "kind", "lo", "hi", "values", "bot", "exact")

    def __init__(self, key):
        self.key = key
        self.eq = None
        self.bounds: list[tuple[int, Callable, bool]] = []
        self.checks: list[Callable] = []
        self.kind = "int"
        self.lo = self.hi = None
        self.values: tuple = ()
        self.bot = False
        self.exact = False


class Solver:
    """Enumerates assignments of ``unknowns`` that satisfy every conjunct.

    ``groups`` partitions the unknowns into consecutive blocks; the search
    never fixes a later block before an earlier one, which is what makes
    projection onto the first block possible.  Within a block, unknowns keep
    their given order unless ``reorder`` is set, in which case an unknown whose
    value an equation already determines is fixed first.
    """

    def __init__(
        self,
        ev: "Evaluator",
        conjs: Sequence[Expr],
        unknowns: Sequence[Unknown],
        *,
        groups: Optional[Sequence[int]] = None,
        reorder: bool = True,
    ):
        self.ev = ev
        self.unknowns = list(unknowns)
        self.out_keys = tuple(u.key for u in unknowns)
        keys = frozenset(self.out_keys)
        groups = list(groups) if groups else [len(self.unknowns)]
        if sum(groups) != len(self.unknowns):
            raise ValueError("groups must cover the unknowns")
        conjs = [c for c in conjs if c != BoolLit(True)]
        info = [(c, env_keys(c) & keys) for c in conjs]
        dom_deps = {
            u.key: (env_keys(u.domain) & keys) if isinstance(u.domain, (Range, EnumSet)) else frozenset()
            for u in self.unknowns
        }
        eq_cands: dict[str, list[tuple[Expr, frozenset[str]]]] = {u.key: [] for u in self.unknowns}
        for c, ks in info:
            if isinstance(c, Cmp) and c.op == "=":
                for lhs, rhs in ((c.left, c.right), (c.right, c.left)):
                    k = key_of(lhs)
                    if k in keys and k not in env_keys(rhs):
                        eq_cands[k].append((rhs, env_keys(rhs) & keys))

        order: list[str] = []
        start = 0
        for size in groups:
            block = [u.key for u in self.unknowns[start : start + size]]
            start += size
            remaining = list(block)
            while remaining:
                chosen = set(order)
                ready = [k for k in remaining if dom_deps[k] <= chosen]
                if not ready:
                    raise ValueError("cyclic binder domains")
                pick = ready[0]
                if reorder:
                    for k in ready:
                        if any(deps <= chosen for _, deps in eq_cands[k]):
                            pick = k
                            break
                order.append(pick)
                remaining.remove(pick)
        self.order = order
        pos = {k: i for i, k in enumerate(order)}

        plans = []
        umap = {u.key: u for u in self.unknowns}
        for i, k in enumerate(order):
            p = _Plan(k)
            u = umap[k]
            p.bot = u.bot
            d = u.domain
            if isinstance(d, IntRange):
                p.kind, p.exact = "int", True
                p.lo, p.hi = d.lo, d.hi
            elif isinstance(d, EnumDomain):
                p.kind, p.values = "enum", tuple(d.values())
            elif isinstance(d, Range):
                p.kind = "int"
                p.lo, p.hi = ev.fn(d.lo), ev.fn(d.hi)
            elif isinstance(d, EnumSet):
                p.kind, p.values = "enum", d.values
            else:
                raise TypeError(f"bad domain {d!r}")
            earlier = frozenset(order[:i])
            for rhs, deps in eq_cands[k]:
                if deps <= earlier:
                    p.eq = ev.fn(rhs)
                    break
            plans.append(p)

        self.pre_checks: list[Callable] = []
        for c, ks in info:
            if not ks:
                self.pre_checks.append(ev.fn(c))
                continue
            last = max(pos[k] for k in ks)
            plans[last].checks.append(ev.fn(c))
            self._add_bound(c, ks, order, pos, plans, keys)
        self.plans = plans

    def _add_bound(self, c, ks, order, pos, plans, keys) -> None:
        if not isinstance(c, Cmp) or c.op == "!=":
            return
        lf = linear_form(c.left, keys)
        rf = linear_form(c.right, keys)
        if lf is None or rf is None:
            return
        from .expr import add, sub

        coeffs = dict(rf[0])
        for u, v in lf[0].items():
            coeffs[u] = coeffs.get(u, 0) - v
        coeffs = {u: v for u, v in coeffs.items() if v}
        if not coeffs:
            return
        last = max(coeffs, key=lambda u: pos[u])
        rest = sub(rf[1], lf[1])
        for u, v in coeffs.items():
            if u != last:
                term = Name(u) if not u.endswith("'") else Primed(u[:-1])
                rest = add(rest, Arith("*", Int(v), term))
        if c.op == "<":
            rest = sub(rest, Int(1))
        plan = plans[pos[last]]
        if plan.kind != "int":
            return
        plan.bounds.append((coeffs[last], self.ev.fn(rest), c.op == "="))

    # -- runtime ---------------------------------------------------------------

    def _candidates(self, p: _Plan, env: Env):
        limit = self.ev.limit
        if p.eq is not None:
            v = p.eq(env)
            if v is BOT:
                return (BOT,) if p.bot else ()
            if p.kind == "int":
                if type(v) is not int:
                    return ()
                lo, hi = (p.lo, p.hi) if p.exact else (p.lo(env), p.hi(env))
                return (v,) if lo <= v <= hi else ()
            return (v,) if v in p.values else ()
        if p.kind == "enum":
            return p.values + (BOT,) if p.bot else p.values
        if p.exact:
            lo, hi = p.lo, p.hi
        else:
            lo, hi = p.lo(env), p.hi(env)
            if type(lo) is not int or type(hi) is not int:
                if lo is BOT or hi is BOT:
                    return ()
                raise EvalError(f"quantifier bounds must be integers, got {lo!r}..{hi!r}")
        bounded = False
        for coef, rest_fn, is_eq in p.bounds:
            r = rest_fn(env)
            if type(r) is not int:
                if r is BOT:
                    return ()
                raise EvalError(f"non-integer operand {r!r} in linear constraint")
            bounded = True
            # coef * x + r >= 0   (or == 0)
            if is_eq:
                if r % coef:
                    return ()
                x = -r // coef
                lo, hi = max(lo, x), min(hi, x)
            elif coef > 0:
                lo = max(lo, _ceil_div(-r, coef))
            else:
                hi = min(hi, r // (-coef))
            if lo > hi:
                return ()
        if hi - lo + 1 > limit:
            raise EvalError(f"range [{lo}..{hi}] exceeds the evaluation limit of {limit} values")
        if p.bot and not bounded:
            return (*range(lo, hi + 1), BOT)
        return range(lo, hi + 1)

    def solutions(self, env: Env, project: Optional[int] = None) -> Iterator[tuple]:
        """Yield satisfying assignments as tuples ordered like ``unknowns``.

        With ``project=k`` only the first ``k`` unknowns (which must form the
        first group) are reported, each distinct prefix once, provided some
        completion exists.
        """
        for chk in self.pre_checks:
            if not chk(env):
                return
        plans = self.plans
        n = len(plans)
        saved = [env.get(p.key, _MISSING) for p in plans]
        try:
            if project is None:
                yield from self._search(0, n, env)
            else:
                for _ in self._search(0, project, env):
                    out = tuple(env[k] for k in self.out_keys[:project])
                    if project == n:
                        yield out
                        continue
                    inner = self._search(project, n, env)
                    found = next(inner, None) is not None
                    inner.close()
                    if found:
                        yield out
        finally:
            for p, old in zip(plans, saved):
                if old is _MISSING:
                    env.pop(p.key, None)
                else:
                    env[p.key] = old

    def _search(self, i: int, stop: int, env: Env):
        if i == stop:
            if stop == len(self.plans):
                yield tuple(env[k] for k in self.out_keys)
            else:
                yield ()
            return
        p = self.plans[i]
        key = p.key
        checks = p.checks
        for v in self._candidates(p, env):
            env[key] = v
            ok = True
            for chk in checks:
                if not chk(env):
                    ok = False
                    break
            if ok:
                yield from self._search(i + 1, stop, env)

    def any(self, env: Env) -> bool:
        gen = self.solutions(env)
        try:
            return next(gen, None) is not None
        finally:
            gen.close()


# ---------------------------------------------------------------------------
# the evaluator


class Evaluator:
    """Compiles expressions against fixed constants (enum names, bound consts)."""

    def __init__(self, constants: Optional[Mapping[str, Any]] = None, limit: int = DEFAULT_QUANT_LIMIT, memo: bool = True):
        self.constants = dict(constants or {})
        self.limit = limit
        self.memo = memo
        self._cache: dict[int, tuple[Expr, Callable]] = {}

    def env(self, values: Optional[Mapping[str, Any]] = None) -> Env:
        env = dict(self.constants)
        if values:
            env.update(values)
        return env

    def fn(self, e: Expr) -> Callable[[Env], Any]:
        hit = self._cache.get(id(e))
        if hit is not None and hit[0] is e:
            return hit[1]
        f = self._compile(e)
        self._cache[id(e)] = (e, f)
        return f

    def eval(self, e: Expr, values: Optional[Mapping[str, Any]] = None) -> Any:
        """Evaluate ``e`` with ``values`` layered over the constants."""
        env = self.env(values)
        try:
            return self.fn(e)(env)
        except KeyError as exc:
            raise EvalError(f"unbound reference {exc.args[0]!r}") from None

    def solver(self, conjs: Sequence[Expr], unknowns: Sequence[Unknown], **kw) -> Solver:
        return Solver(self, conjs, unknowns, **kw)

    # -- compilation -------------------------------------------------------

    def _compile(self, e: Expr) -> Callable[[Env], Any]:
        if isinstance(e, Int):
            v = e.value
            return lambda env: v
        if isinstance(e, BoolLit):
            b = e.value
            return lambda env: b
        if isinstance(e, BotLit):
            return lambda env: BOT
        if isinstance(e, Name):
            n = e.name
            return lambda env: env[n]
        if isinstance(e, Primed):
            n = e.name + "'"
            return lambda env: env[n]
        if isinstance(e, Neg):
            a = self.fn(e.arg)

            def neg(env):
                v = a(env)
                if type(v) is int:
                    return -v
                return _arith_slow("-", 0, v)

            return neg
        if isinstance(e, Arith):
            return self._compile_arith(e)
        if isinstance(e, Cmp):
            return self._compile_cmp(e)
        if isinstance(e, Not):
            a = self.fn(e.arg)
            return lambda env: not a(env)
        if isinstance(e, And):
            parts = tuple(self.fn(x) for x in e.args)
            if len(parts) == 2:
                p0, p1 = parts
                return lambda env: bool(p0(env)) and bool(p1(env))

            def and_(env):
                for p in parts:
                    if not p(env):
                        return False
                return True

            return and_
        if isinstance(e, Or):
            parts = tuple(self.fn(x) for x in e.args)

            def or_(env):
                for p in parts:
                    if p(env):
                        return True
                return False

            return or_
        if isinstance(e, Implies):
            a, b = self.fn(e.left), self.fn(e.right)
            return lambda env: (not a(env)) or bool(b(env))
        if isinstance(e, Iff):
            a, b = self.fn(e.left), self.fn(e.right)
            return lambda env: bool(a(env)) == bool(b(env))
        if isinstance(e, Quant):
            return self._compile_quant(e)
        if isinstance(e, (Range, EnumSet)):
            raise EvalError("a binder domain is not a value")
        raise TypeError(f"unknown expression node {e!r}")

    def _compile_arith(self, e: Arith):
        a, b = self.fn(e.left), self.fn(e.right)
        op = e.op
        if op == "+":

            def f(env):
                x, y = a(env), b(env)
                if type(x) is int and type(y) is int:
                    return x + y
                return _arith_slow(op, x, y)

        elif op == "-":

            def f(env):
                x, y = a(env), b(env)
                if type(x) is int and type(y) is int:
                    return x - y
                return _arith_slow(op, x, y)

        else:

            def f(env):
                x, y = a(env), b(env)
                if type(x) is int and type(y) is int:
                    return x * y
                return _arith_slow(op, x, y)

        return f

    def _compile_cmp(self, e: Cmp):
        a, b = self.fn(e.left), self.fn(e.right)
        op = e.op
        if op == "=":
            return lambda env: a(env) == b(env)
        if op == "!=":
            return lambda env: a(env) != b(env)
        if op == "<":

            def lt(env):
                x, y = a(env), b(env)
                if type(x) is int and type(y) is int:
                    return x < y
                return _order_slow(x, y) is not None

            return lt

        def le(env):
            x, y = a(env), b(env)
            if type(x) is int and type(y) is int:
                return x <= y
            return _order_slow(x, y) is not None

        return le

    def _compile_quant(self, q: Quant):
        body = q.body if q.kind == "exists" else negate(q.body)
        unknowns = [Unknown(b.name, b.domain) for b in q.binders]
        solver = Solver(self, conjuncts(body), unknowns)
        want = q.kind == "exists"
        if not self.memo:
            return lambda env: solver.any(env) == want
        fv = tuple(sorted(free_names(q) | frozenset(p + "'" for p in primed_names(q))))
        memo: dict = {}

        if len(fv) == 1:
            (k0,) = fv

            def quant1(env):
                key = env[k0]
                r = memo.get(key)
                if r is None:
                    if len(memo) > _MEMO_CAP:
                        memo.clear()
                    r = memo[key] = solver.any(env) == want
                return r

            return quant1

        def quant(env):
            key = tuple([env[k] for k in fv])
            r = memo.get(key)
            if r is None:
                if len(memo) > _MEMO_CAP:
                    memo.clear()
                r = memo[key] = solver.any(env) == want
            return r

        return quant


def evaluate(e: Expr, values: Optional[Mapping[str, Any]] = None, *, constants: Optional[Mapping[str, Any]] = None) -> Any:
    """One-shot evaluation; enumeration constants must be passed in ``constants``."""
    return Evaluator(constants).eval(e, values)
