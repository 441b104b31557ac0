"""JSON form of models, with expressions stored as model-language text.

The document shape is described by ``schema/model.schema.json``.  Import
validates against the schema, parses every expression and then applies the
same semantic checks as the text front end.
"""

from __future__ import annotations

import json
from dataclasses import replace
from typing import Any, Iterable, Mapping, Optional, Union

from ..expr import Int, Name
from ..model import (
    Clause,
    ConstDecl,
    EnumDomain,
    EventDef,
    IntRange,
    Machine,
    ModelError,
    Origin,
    PairedMachine,
    ParamDecl,
    UncertaintySpec,
    VarDecl,
    machine_problems,
    spec_problems,
)
from .lexer import LexError
from .parser import ParseError, parse_expr
from .printer import expr_text

FORMAT = "robustikit-model"
VERSION = 1

Entity = Union[Machine, UncertaintySpec]


def _domain_json(d) -> dict[str, Any]:
    if isinstance(d, IntRange):
        return {"int": [d.lo, d.hi]}
    return {"enum": list(d.values())}


def _domain(j: Mapping[str, Any]):
    if "int" in j:
        lo, hi = j["int"]
        return IntRange(lo, hi)
    return EnumDomain(tuple(j["enum"]))


def _consts_json(cs: Iterable[ConstDecl]) -> list[dict[str, Any]]:
    return [{"name": c.name, "domain": _domain_json(c.domain)} for c in cs]


def event_json(ev: EventDef) -> dict[str, Any]:
    out: dict[str, Any] = {
        "kind": ev.kind,
        "name": ev.name,
        "params": [{"name": p.name, "domain": _domain_json(p.domain), "bot": p.bot} for p in ev.params],
        "guard": expr_text(ev.guard),
        "action": expr_text(ev.action),
    }
    if ev.covers is not None:
        out["covers"] = list(ev.covers)
    return out


def machine_json(m: Machine) -> dict[str, Any]:
    out: dict[str, Any] = {
        "kind": "machine",
        "name": m.name,
        "consts": _consts_json(m.consts),
        "vars": [{"name": v.name, "domain": _domain_json(v.domain)} for v in m.vars],
        "init": expr_text(m.init),
        "safety": expr_text(m.safety),
        "events": [event_json(ev) for ev in m.events],
    }
    if isinstance(m, PairedMachine):
        out["uncertainty"] = expr_text(m.uncertainty)
        if m.origin is not None:
            o = m.origin
            out["origin"] = {"method": o.method, "machine": o.machine, "uncertainty": o.uncertainty}
    return out


def _radius_json(r) -> Union[int, str]:
    return r.value if isinstance(r, Int) else expr_text(r)


def spec_json(u: UncertaintySpec) -> dict[str, Any]:
    out: dict[str, Any] = {
        "kind": "uncertainty",
        "name": u.name,
        "machine": u.machine,
        "consts": _consts_json(u.consts),
        "clauses": [
            {"var": c.var, "exact": True} if c.radius is None else {"var": c.var, "radius": _radius_json(c.radius)}
            for c in u.clauses
        ],
    }
    if u.relation is not None:
        out["relation"] = expr_text(u.relation)
    return out


def entity_json(e: Entity) -> dict[str, Any]:
    return spec_json(e) if isinstance(e, UncertaintySpec) else machine_json(e)


def document(entities: Iterable[Entity]) -> dict[str, Any]:
    return {"format": FORMAT, "version": VERSION, "entities": [entity_json(e) for e in entities]}


def dumps(entities: Iterable[Entity]) -> str:
    return json.dumps(document(entities), indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# import


def _expr(text: str, where: str):
    try:
        return parse_expr(text)
    except (ParseError, LexError) as e:
        raise ModelError(f"{where}: {e}") from None


def _consts(js: list) -> tuple[ConstDecl, ...]:
    return tuple(ConstDecl(c["name"], _domain(c["domain"])) for c in js)


def _event(j: Mapping[str, Any], where: str) -> EventDef:
    where = f"{where}, event {j['name']}"
    params = tuple(ParamDecl(p["name"], _domain(p["domain"]), bot=p.get("bot", False)) for p in j["params"])
    covers = j.get("covers")
    return EventDef(
        j["kind"],
        j["name"],
        params,
        _expr(j["guard"], f"{where} guard"),
        _expr(j["action"], f"{where} action"),
        covers=None if covers is None else tuple(covers),
    )


def _machine(j: Mapping[str, Any]) -> Machine:
    where = f"machine {j['name']}"
    fields = dict(
        name=j["name"],
        vars=tuple(VarDecl(v["name"], _domain(v["domain"])) for v in j["vars"]),
        init=_expr(j["init"], f"{where} init"),
        safety=_expr(j["safety"], f"{where} safety"),
        events=tuple(_event(ev, where) for ev in j["events"]),
        consts=_consts(j.get("consts", [])),
    )
    if "uncertainty" not in j:
        if "origin" in j:
            raise ModelError(f"{where}: origin requires an uncertainty invariant")
        return Machine(**fields)
    o = j.get("origin")
    return PairedMachine(
        **fields,
        uncertainty=_expr(j["uncertainty"], f"{where} uncertainty"),
        origin=None if o is None else Origin(o["method"], o["machine"], o["uncertainty"]),
    )


def _radius(r: Union[int, str]):
    return Int(r) if isinstance(r, int) else Name(r)


def _spec(j: Mapping[str, Any]) -> UncertaintySpec:
    where = f"uncertainty {j['name']}"
    clauses = tuple(Clause(c["var"], None if c.get("exact") else _radius(c["radius"])) for c in j["clauses"])
    rel = j.get("relation")
    return UncertaintySpec(
        j["name"],
        j["machine"],
        clauses,
        None if rel is None else _expr(rel, f"{where} relation"),
        _consts(j.get("consts", [])),
    )


def _schema_check(doc: Any) -> None:
    import jsonschema

    from ..schema import load_schema

    try:
        jsonschema.validate(doc, load_schema("model"))
    except jsonschema.ValidationError as e:
        path = "/".join(map(str, e.absolute_path)) or "document"
        raise ModelError(f"invalid model document at {path}: {e.message}") from None


def from_document(doc: Any, context: Optional[Mapping[str, Entity]] = None) -> list[Entity]:
    """Entities of a JSON model document, checked like parsed model text."""
    _schema_check(doc)
    known: dict[str, Entity] = dict(context or {})
    out: list[Entity] = []
    for j in doc["entities"]:
        if j["name"] in {e.name for e in out}:
            raise ModelError(f"duplicate entity name {j['name']!r}")
        if j["kind"] == "machine":
            e: Entity = _machine(j)
            problems = machine_problems(e)
            if not problems and isinstance(e, PairedMachine) and e.origin is not None:
                base, spec = known.get(e.origin.machine), known.get(e.origin.uncertainty)
                if isinstance(base, Machine) and isinstance(spec, UncertaintySpec):
                    e = replace(e, base=base, spec=spec)
        else:
            e = _spec(j)
            m = known.get(e.machine)
            if not isinstance(m, Machine):
                raise ModelError(f"uncertainty {e.name}: unknown machine {e.machine!r}")
            problems = spec_problems(e, m)
        if problems:
            raise ModelError(f"{j['kind']} {j['name']}: " + "; ".join(problems))
        known[e.name] = e
        out.append(e)
    return out


def loads(text: str, context: Optional[Mapping[str, Entity]] = None) -> list[Entity]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelError(f"not JSON: {e}") from None
    return from_document(doc, context)
