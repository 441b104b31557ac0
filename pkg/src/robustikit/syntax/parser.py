"""Recursive-descent parser for ``.cpm`` model files.

Names must be declared before they are used: variables and constants come
before the clauses that mention them.  Validation problems are reported as
diagnostics at the clause that caused them, and any error discards all parsed
entities.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Union

from ..expr import (
    And,
    Arith,
    BOT_LIT,
    Binder,
    Cmp,
    EnumSet,
    Expr,
    FALSE,
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
    TRUE,
)
from ..model import (
    Clause,
    ConstDecl,
    EnumDomain,
    EventDef,
    IntRange,
    Machine,
    Origin,
    PairedMachine,
    ParamDecl,
    UncertaintySpec,
    VarDecl,
    decl_problems,
    event_problems,
    event_set_problems,
    expr_problems,
    known_names,
    spec_problems,
)
from .lexer import LexError, Token, tokenize

Entity = Union[Machine, UncertaintySpec]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # 'error' | 'warning'
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.severity}: {self.message}"


@dataclass
class SourceFile:
    text: str
    path: Optional[str] = None
    entities: list[Entity] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)

    @property
    def machines(self) -> dict[str, Machine]:
        return {e.name: e for e in self.entities if isinstance(e, Machine)}

    @property
    def uncertainties(self) -> dict[str, UncertaintySpec]:
        return {e.name: e for e in self.entities if isinstance(e, UncertaintySpec)}

    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]


class ParseError(Exception):
    def __init__(self, message: str, tok: Token):
        super().__init__(message)
        self.tok = tok


class DSLError(ValueError):
    """Raised by :func:`load` when a source has error diagnostics."""

    def __init__(self, source: SourceFile):
        self.source = source
        where = source.path or "<input>"
        super().__init__("\n".join(f"{where}:{d}" for d in source.errors()))


_CMP = {"=": "=", "!=": "!=", "<": "<", "<=": "<=", ">": "<", ">=": "<="}


class _Parser:
    def __init__(self, tokens: list[Token], context: Mapping[str, Entity]):
        self.toks = tokens
        self.i = 0
        self.diags: list[Diagnostic] = []
        self.context = dict(context)

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_op(self, text: str) -> bool:
        return self.at("op", text)

    def at_kw(self, text: str) -> bool:
        return self.at("kw", text)

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        if not self.at(kind, text):
            want = repr(text) if text else {"ident": "identifier", "int": "integer"}.get(kind, kind)
            got = repr(self.tok.text) if self.tok.kind != "eof" else "end of input"
            raise ParseError(f"expected {want}, found {got}", self.tok)
        return self.advance()

    def ident(self) -> str:
        return self.expect("ident").text

    def error(self, tok: Token, message: str) -> None:
        self.diags.append(Diagnostic("error", tok.line, tok.col, message))

    def warn(self, tok: Token, message: str) -> None:
        self.diags.append(Diagnostic("warning", tok.line, tok.col, message))

    # -- file ---------------------------------------------------------------

    def parse_file(self) -> list[Entity]:
        out: list[Entity] = []
        while not self.at("eof"):
            if self.at_kw("machine"):
                ent = self.machine()
            elif self.at_kw("uncertainty"):
                ent = self.uncertainty()
            else:
                raise ParseError(f"expected 'machine' or 'uncertainty', found {self.tok.text!r}", self.tok)
            if ent is not None:
                out.append(ent)
                self.context[ent.name] = ent
        return out

    # -- machines -----------------------------------------------------------

    def machine(self) -> Optional[Machine]:
        start = self.expect("kw", "machine")
        name = self.ident()
        vars_: list[VarDecl] = []
        consts: list[ConstDecl] = []
        init: Expr = TRUE
        safety: Expr = TRUE
        uncertainty: Optional[Expr] = None
        origin: Optional[Origin] = None
        origin_tok = start
        events: list[tuple[EventDef, Token]] = []
        seen: set[str] = set()
        n_diags = len(self.diags)

        def known() -> set[str]:
            out = {v.name for v in vars_} | {c.name for c in consts}
            for v in vars_:
                if isinstance(v.domain, EnumDomain):
                    out.update(v.domain.values())
            return out

        def once(t: Token, what: str) -> None:
            if what in seen:
                self.error(t, f"duplicate {what} clause")
            seen.add(what)

        while True:
            t = self.tok
            if self.at_kw("origin"):
                self.advance()
                once(t, "origin")
                method = self.ident()
                if method not in ("inject", "pR", "rR"):
                    self.error(t, f"unknown origin method {method!r}")
                self.expect("kw", "of")
                src = self.ident()
                self.expect("kw", "under")
                origin, origin_tok = Origin(method, src, self.ident()), t
            elif self.at_kw("var"):
                self.advance()
                vname = self.ident()
                self.expect("op", ":")
                vars_.append(VarDecl(vname, self.domain(t, vname)))
            elif self.at_kw("const"):
                self.advance()
                consts.append(self.const_decl(t))
            elif self.at_kw("init"):
                self.advance()
                once(t, "init")
                init = self.expr()
                self.report(t, expr_problems(init, known(), where="init"))
            elif self.at_kw("safety"):
                self.advance()
                once(t, "safety")
                safety = self.expr()
                self.report(t, expr_problems(safety, known(), where="safety"))
            elif self.at_kw("uncertainty") and self.peek().kind == "kw" and self.peek().text == "invariant":
                self.advance()
                self.advance()
                once(t, "uncertainty invariant")
                uncertainty = self.expr()
                self.report(t, expr_problems(uncertainty, known(), where="uncertainty invariant"))
            elif self.at_kw("plant") or self.at_kw("ctrl"):
                ev = self.event()
                if ev is not None:
                    events.append((ev, t))
            else:
                break

        evs = tuple(e for e, _ in events)
        if uncertainty is not None:
            m: Machine = PairedMachine(
                name, tuple(vars_), init, safety, evs, tuple(consts), uncertainty=uncertainty, origin=origin
            )
        else:
            if origin is not None:
                self.error(origin_tok, "origin clause requires an uncertainty invariant")
            m = Machine(name, tuple(vars_), init, safety, evs, tuple(consts))
        self.report(start, decl_problems(m))
        scope = known_names(m)
        for ev, t in events:
            self.report(t, event_problems(ev, m, scope))
        self.report(start, event_set_problems(m))
        if any(d.severity == "error" for d in self.diags[n_diags:]):
            return None
        if isinstance(m, PairedMachine) and origin is not None:
            m = self.attach_origin(m, origin, origin_tok)
        return m

    def attach_origin(self, m: PairedMachine, origin: Origin, tok: Token) -> PairedMachine:
        base = self.context.get(origin.machine)
        spec = self.context.get(origin.uncertainty)
        if not isinstance(base, Machine) or not isinstance(spec, UncertaintySpec):
            self.warn(tok, f"origin inputs {origin.machine}/{origin.uncertainty} not available; provenance unresolved")
            return m
        return replace(m, base=base, spec=spec)

    def const_decl(self, t: Token) -> ConstDecl:
        cname = self.ident()
        self.expect("op", ":")
        d = self.domain(t, cname)
        if not isinstance(d, IntRange):
            self.error(t, f"constant {cname!r} needs an integer domain")
            d = IntRange(0, 0)
        return ConstDecl(cname, d)

    def event(self) -> Optional[EventDef]:
        t = self.advance()
        kind = t.text
        self.expect("kw", "event")
        name = self.ident()
        params: list[ParamDecl] = []
        guard: Expr = TRUE
        action: Optional[Expr] = None
        covers = None
        while True:
            c = self.tok
            if self.at_kw("param"):
                self.advance()
                pname = self.ident()
                self.expect("op", ":")
                d = self.domain(c, pname)
                bot = False
                if self.at_op("|"):
                    self.advance()
                    self.expect("kw", "bot")
                    bot = True
                params.append(ParamDecl(pname, d, bot))
            elif self.at_kw("covers"):
                self.advance()
                self.expect("op", "{")
                idx = [int(self.expect("int").text)]
                while self.at_op(","):
                    self.advance()
                    idx.append(int(self.expect("int").text))
                self.expect("op", "}")
                covers = tuple(idx)
            elif self.at_kw("guard"):
                self.advance()
                guard = self.expr()
            elif self.at_kw("action"):
                self.advance()
                action = self.expr()
            else:
                break
        if action is None:
            self.error(t, f"event {name} has no action")
            return None
        if covers is not None and kind != "ctrl":
            self.error(t, "only controller events may carry a covers clause")
        return EventDef(kind, name, tuple(params), guard, action, covers)

    def domain(self, t: Token, name: str):
        if self.at_kw("int"):
            self.advance()
            self.expect("op", "[")
            lo = self.signed_int()
            self.expect("op", "..")
            hi = self.signed_int()
            self.expect("op", "]")
            return IntRange(lo, hi)
        if self.at_op("{"):
            self.advance()
            vals: list[str] = []
            if not self.at_op("}"):
                vals.append(self.ident())
                while self.at_op(","):
                    self.advance()
                    vals.append(self.ident())
            self.expect("op", "}")
            return EnumDomain(tuple(vals))
        raise ParseError(f"expected a finite domain (int[lo..hi] or {{a, b}}) for {name!r}", self.tok)

    def signed_int(self) -> int:
        neg = False
        if self.at_op("-"):
            self.advance()
            neg = True
        v = int(self.expect("int").text)
        return -v if neg else v

    def report(self, t: Token, problems: list[str]) -> None:
        for p in problems:
            self.error(t, p)

    # -- uncertainty ----------------------------------------------------------

    def uncertainty(self) -> Optional[UncertaintySpec]:
        start = self.expect("kw", "uncertainty")
        name = self.ident()
        self.expect("kw", "for")
        mname = self.ident()
        consts: list[ConstDecl] = []
        clauses: list[Clause] = []
        relation: Optional[Expr] = None
        n_errors = len(self.diags)
        m = self.context.get(mname)
        if not isinstance(m, Machine):
            self.error(start, f"unknown machine {mname!r} for uncertainty {name}")
        while True:
            t = self.tok
            if self.at_kw("const"):
                self.advance()
                consts.append(self.const_decl(t))
            elif self.at_kw("relation"):
                self.advance()
                relation = self.expr()
            elif self.at("ident") and self.peek().kind == "kw" and self.peek().text in ("exact", "within"):
                var = self.advance().text
                if self.advance().text == "exact":
                    clauses.append(Clause(var, None))
                elif self.at("int"):
                    clauses.append(Clause(var, Int(int(self.advance().text))))
                elif self.at("ident"):
                    clauses.append(Clause(var, Name(self.advance().text)))
                else:
                    raise ParseError("expected a radius (integer or constant name)", self.tok)
            else:
                break
        spec = UncertaintySpec(name, mname, tuple(clauses), relation, tuple(consts))
        if isinstance(m, Machine):
            self.report(start, spec_problems(spec, m))
        if any(d.severity == "error" for d in self.diags[n_errors:]):
            return None
        return spec

    # -- expressions ----------------------------------------------------------

    def expr(self) -> Expr:
        if self.at_kw("forall") or self.at_kw("exists"):
            return self.quant()
        left = self.implies()
        if self.at_op("<=>"):
            self.advance()
            right = self.implies()
            return Iff(left, right)
        return left

    def quant(self) -> Expr:
        kind = self.advance().text
        binders = [self.binder()]
        while self.at_op(","):
            self.advance()
            binders.append(self.binder())
        self.expect("op", ".")
        body = self.expr()
        return Quant(kind, tuple(binders), body)

    def binder(self) -> Binder:
        name = self.ident()
        self.expect("kw", "in")
        if self.at_op("["):
            self.advance()
            lo = self.expr()
            self.expect("op", "..")
            hi = self.expr()
            self.expect("op", "]")
            return Binder(name, Range(lo, hi))
        if self.at_op("{"):
            self.advance()
            vals = [self.ident()]
            while self.at_op(","):
                self.advance()
                vals.append(self.ident())
            self.expect("op", "}")
            return Binder(name, EnumSet(tuple(vals)))
        raise ParseError("expected a binder domain '[lo .. hi]' or '{a, b}'", self.tok)

    def implies(self) -> Expr:
        left = self.or_()
        if self.at_op("=>"):
            self.advance()
            right = self.implies() if not (self.at_kw("forall") or self.at_kw("exists")) else self.quant()
            return Implies(left, right)
        return left

    def or_(self) -> Expr:
        args = [self.and_()]
        while self.at_kw("or"):
            self.advance()
            args.append(self.and_())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def and_(self) -> Expr:
        args = [self.not_()]
        while self.at_kw("and"):
            self.advance()
            args.append(self.not_())
        return args[0] if len(args) == 1 else And(tuple(args))

    def not_(self) -> Expr:
        if self.at_kw("not"):
            self.advance()
            return Not(self.not_())
        return self.cmp()

    def cmp(self) -> Expr:
        first = self.sum()
        parts: list[Expr] = []
        prev = first
        while self.tok.kind == "op" and self.tok.text in _CMP:
            op = self.advance().text
            nxt = self.sum()
            if op in (">", ">="):
                parts.append(Cmp(_CMP[op], nxt, prev))
            else:
                parts.append(Cmp(op, prev, nxt))
            prev = nxt
        if not parts:
            return first
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def sum(self) -> Expr:
        left = self.prod()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.advance().text
            left = Arith(op, left, self.prod())
        return left

    def prod(self) -> Expr:
        left = self.unary()
        while self.at_op("*"):
            self.advance()
            left = Arith("*", left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.at_op("-"):
            self.advance()
            if self.at("int"):
                return Int(-int(self.advance().text))
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Int(int(t.text))
        if t.kind == "ident":
            self.advance()
            return Name(t.text)
        if t.kind == "primed":
            self.advance()
            return Primed(t.text)
        if t.kind == "kw":
            if t.text == "true":
                self.advance()
                return TRUE
            if t.text == "false":
                self.advance()
                return FALSE
            if t.text == "bot":
                self.advance()
                return BOT_LIT
            if t.text in ("forall", "exists"):
                return self.quant()
        if self.at_op("("):
            self.advance()
            e = self.expr()
            self.expect("op", ")")
            return e
        got = repr(t.text) if t.kind != "eof" else "end of input"
        raise ParseError(f"expected an expression, found {got}", t)


def parse(text: str, path: Optional[str] = None, context: Optional[Mapping[str, Entity]] = None) -> SourceFile:
    """Parse model text into a :class:`SourceFile`.

    ``context`` supplies entities from other files that uncertainty blocks and
    origin clauses may refer to.
    """
    src = SourceFile(text, path)
    try:
        tokens = tokenize(text)
    except LexError as e:
        src.diagnostics.append(Diagnostic("error", e.line, e.col, str(e)))
        return src
    p = _Parser(tokens, context or {})
    try:
        entities = p.parse_file()
    except ParseError as e:
        p.diags.append(Diagnostic("error", e.tok.line, e.tok.col, f"syntax error: {e}"))
        entities = []
    diags = sorted(set(p.diags), key=lambda d: (d.line, d.col, d.severity, d.message))
    src.diagnostics = diags
    if not src.ok:
        return src
    names: set[str] = set()
    for ent in entities:
        if ent.name in names:
            src.diagnostics.append(Diagnostic("error", 1, 1, f"duplicate entity name {ent.name!r}"))
        names.add(ent.name)
    if src.ok:
        src.entities = entities
    return src


def parse_expr(text: str) -> Expr:
    """Parse a single expression (used for JSON model import)."""
    p = _Parser(tokenize(text), {})
    e = p.expr()
    if not p.at("eof"):
        raise ParseError(f"unexpected {p.tok.text!r} after expression", p.tok)
    return e


def load(text: str, path: Optional[str] = None, context: Optional[Mapping[str, Entity]] = None) -> SourceFile:
    """Like :func:`parse` but raise :class:`DSLError` on any error diagnostic."""
    src = parse(text, path, context)
    if not src.ok:
        raise DSLError(src)
    return src


def load_file(path: str, context: Optional[Mapping[str, Entity]] = None) -> SourceFile:
    with open(path, encoding="utf-8") as fh:
        return load(fh.read(), path, context)
