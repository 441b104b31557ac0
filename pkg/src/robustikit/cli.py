"""Command-line interface.

Exit codes: 0 the property holds or the construction succeeded, 1 a property
fails or robustification is infeasible, 2 usage, parse or validation error,
3 the state-space cap was exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

from . import __version__
from .analysis.checks import check_forward_simulation
from .analysis.report import params_json
from .analysis.smtlib import QUERY_KINDS, SmtError, emit
from .explore import RR_SUCCESS, PR_SUCCESS, bind, default_jobs, preconditions, run_workflow, sweep
from .model import Machine, ModelError, PairedMachine, UncertaintySpec
from .semantics import DEFAULT_STATE_CAP, StateSpaceTooLarge, semantics, set_state_cap
from .syntax import DSLError, load, print_entities
from .syntax import eventb, jsonio
from .transform.inject import inject, injection_inputs, require_bound
from .transform.robustify import METHODS, RobustifyOutcome, robustify

OK, FAILED, USAGE, CAP = 0, 1, 2, 3
FORMATS = ("dsl", "eventb-text", "json", "smt2")

Entity = Any


class UsageError(Exception):
    """Bad combination of arguments or inputs."""


# ---------------------------------------------------------------------------
# input handling


@dataclass
class Inputs:
    entities: list[Entity]
    machine: Machine
    spec: Optional[UncertaintySpec]


def _load_paths(paths: Sequence[str]) -> list[Entity]:
    """Entities of every file; later files may refer to earlier ones."""
    context: dict[str, Entity] = {}
    out: list[Entity] = []
    for path in paths:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise UsageError(f"cannot read {path}: {e.strerror}") from None
        if path.endswith(".json"):
            ents = jsonio.loads(text, context)
        else:
            ents = load(text, path, context).entities
        for e in ents:
            context[e.name] = e
        out += ents
    return out


def _parse_set(items: Sequence[str]) -> dict[str, int]:
    values: dict[str, int] = {}
    for item in items:
        name, sep, val = item.partition("=")
        try:
            if not sep:
                raise ValueError
            values[name.strip()] = int(val)
        except ValueError:
            raise UsageError(f"--set expects NAME=INTEGER, not {item!r}") from None
    return values


def _select(args, *, need_spec: bool = False, want_spec: bool = True) -> Inputs:
    ents = _load_paths(args.paths)
    machines = [e for e in ents if isinstance(e, Machine)]
    specs = [e for e in ents if isinstance(e, UncertaintySpec)]
    if args.machine:
        found = [m for m in machines if m.name == args.machine]
        if not found:
            raise UsageError(f"no machine named {args.machine}")
        m = found[0]
    elif machines:
        m = machines[-1]
    else:
        raise UsageError("the input declares no machine")
    spec = None
    if want_spec:
        if getattr(args, "uncertainty", None):
            found_s = [s for s in specs if s.name == args.uncertainty]
            if not found_s:
                raise UsageError(f"no uncertainty named {args.uncertainty}")
            spec = found_s[0]
        elif not isinstance(m, PairedMachine):
            mine = [s for s in specs if s.machine == m.name]
            if len(mine) == 1:
                spec = mine[0]
            elif need_spec:
                names = ", ".join(s.name for s in mine) or "none"
                raise UsageError(f"choose an uncertainty for {m.name} with --uncertainty (available: {names})")
    values = _parse_set(args.set or [])
    if values:
        if isinstance(m, PairedMachine):
            m = m.bind(values)
        elif spec is not None:
            m, spec = bind(m, spec, values)
        else:
            m = m.bind(values)
    return Inputs(ents, m, spec)


def _witness_limit(text: str) -> Optional[int]:
    if text == "all":
        return None
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a count or 'all'") from None
    if n < 0:
        raise argparse.ArgumentTypeError("expected a nonnegative count")
    return n


def _range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            raise ValueError
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, not {text!r}") from None


def _subset(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated indices, not {text!r}") from None


# ---------------------------------------------------------------------------
# output


def _write(args, text: str) -> None:
    out = getattr(args, "output", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_text(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, ensure_ascii=False) + "\n"


def _note(text: str) -> None:
    print(text, file=sys.stderr)


def _with_inputs(m: Machine) -> list[Entity]:
    """``m`` preceded by the entities its origin refers to, so the output reloads on its own."""
    if isinstance(m, PairedMachine) and m.base is not None and m.spec is not None:
        return [m.base, m.spec, m]
    return [m]


def _render(fmt: str, entities: list[Entity], events: Optional[list[str]] = None) -> str:
    if fmt == "dsl":
        return print_entities(entities)
    if fmt == "json":
        return jsonio.dumps(entities)
    if fmt == "eventb-text":
        parts = []
        for e in entities:
            if isinstance(e, UncertaintySpec):
                parts.append(eventb.spec_text(e))
            else:
                parts.append(eventb.machine_text(e, events))
        return "\n".join(parts)
    raise UsageError(f"format {fmt} is not available here")


# ---------------------------------------------------------------------------
# commands


def cmd_parse(args) -> int:
    ents = _load_paths(args.paths)
    _write(args, _render(args.format, ents))
    return OK


def cmd_check(args) -> int:
    inp = _select(args, want_spec=False)
    require_bound(inp.machine)
    reports = preconditions(inp.machine, args.witnesses)
    for r in reports:
        _note(r.summary())
    if args.json or args.output:
        doc = {
            "type": "check",
            "machine": inp.machine.name,
            "reports": [r.to_json(timing=not args.no_timing) for r in reports],
        }
        _write(args, _json_text(doc))
    return OK if all(r.holds for r in reports) else FAILED


def _injected(inp: Inputs) -> PairedMachine:
    m = inp.machine
    if isinstance(m, PairedMachine):
        injection_inputs(m)
        return m
    if inp.spec is None:
        raise UsageError(f"choose an uncertainty for {m.name} with --uncertainty")
    return inject(m, inp.spec)


def cmd_inject(args) -> int:
    inp = _select(args, need_spec=True)
    if isinstance(inp.machine, PairedMachine):
        raise UsageError(f"{inp.machine.name} is already a paired machine")
    pm = _injected(inp)
    _write(args, _render(args.format, _with_inputs(pm)))
    return OK


def _outcome_doc(outcomes: Sequence[RobustifyOutcome], stage: str, timing: bool) -> dict[str, Any]:
    return {"type": "robustify", "stage": stage, "outcomes": [o.to_json(timing=timing) for o in outcomes]}


def cmd_robustify(args) -> int:
    inp = _select(args, need_spec=True)
    pm = _injected(inp)
    kw = {"force": args.force}
    if args.method == "auto":
        outcomes = [robustify(pm, "pR", **kw)]
        if not outcomes[0].ok:
            outcomes.append(robustify(pm, "rR", prose=args.safpar_prose, **kw))
    else:
        outcomes = [robustify(pm, args.method, prose=args.safpar_prose, **kw)]
    final = outcomes[-1]
    for o in outcomes:
        _note(o.condition.summary())
    if final.ok:
        stage = PR_SUCCESS if final.method == "pR" else RR_SUCCESS
    else:
        stage = "infeasible"
        from .explore import RECOMMENDATION

        _note(f"robustification infeasible: {RECOMMENDATION}")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(_json_text(_outcome_doc(outcomes, stage, not args.no_timing)))
    if args.json:
        _write(args, _json_text(_outcome_doc(outcomes, stage, not args.no_timing)))
    elif final.machine is not None:
        _write(args, _render(args.format, _with_inputs(final.machine)))
    return OK if final.ok else FAILED


def cmd_workflow(args) -> int:
    inp = _select(args, need_spec=True)
    if isinstance(inp.machine, PairedMachine):
        raise UsageError("the workflow starts from an uncertainty-unaware machine")
    if inp.spec is None:
        raise UsageError(f"choose an uncertainty for {inp.machine.name} with --uncertainty")
    result = run_workflow(inp.machine, inp.spec, max_witnesses=args.witnesses, prose=args.safpar_prose)
    _note(result.summary())
    if args.json:
        _write(args, _json_text(result.to_json(timing=not args.no_timing)))
    elif result.machine is not None:
        _write(args, _render(args.format, _with_inputs(result.machine)))
    return OK if result.ok else FAILED


def cmd_sweep(args) -> int:
    inp = _select(args, need_spec=True)
    if inp.spec is None:
        raise UsageError(f"choose an uncertainty for {inp.machine.name} with --uncertainty")
    lo, hi = args.range
    result = sweep(
        inp.machine, inp.spec, lo, hi, param=args.param, jobs=args.jobs, max_witnesses=args.witnesses,
        prose=args.safpar_prose,
    )
    if args.json:
        _write(args, _json_text(result.to_json(timing=not args.no_timing)))
    else:
        _write(args, result.table())
    return OK


def simulate(m: Machine, steps: int, seed: int) -> dict[str, Any]:
    """Seeded random run alternating plant and controller steps, starting with the plant."""
    require_bound(m)
    sem = semantics(m)
    rng = random.Random(seed)
    inits = list(sem.states_where(m.init))
    trace: list[dict[str, Any]] = []
    violations: list[int] = []
    if steps == 0 or not inits:
        return {
            "type": "simulate",
            "machine": m.name,
            "seed": seed,
            "steps": 0,
            "status": "completed",
            "trace": [],
            "violations": [],
        }
    s = rng.choice(inits)
    trace.append({"step": 0, "event": None, "params": {}, "state": m.state_dict(s), "safe": sem.safe(s)})
    if not sem.safe(s):
        violations.append(0)
    plant = {k for k, ev in enumerate(m.events) if ev.kind == "plant"}
    status = "completed"
    for step in range(1, steps + 1):
        want_plant = step % 2 == 1
        moves = [t for t in sem.transitions(s) if (t[0] in plant) == want_plant]
        if not moves:
            status = f"deadlock: no {'plant' if want_plant else 'controller'} transition"
            break
        k, p, s = rng.choice(moves)
        safe = sem.safe(s)
        if not safe:
            violations.append(step)
        trace.append(
            {
                "step": step,
                "event": m.events[k].name,
                "params": params_json(m.events[k].param_names, p),
                "state": m.state_dict(s),
                "safe": safe,
            }
        )
    return {
        "type": "simulate",
        "machine": m.name,
        "seed": seed,
        "steps": len(trace) - 1,
        "status": status,
        "trace": trace,
        "violations": violations,
    }


def cmd_simulate(args) -> int:
    inp = _select(args, want_spec=False)
    if args.steps < 0:
        raise UsageError("--steps must be nonnegative")
    run = simulate(inp.machine, args.steps, args.seed)
    if run["violations"]:
        _note(f"safety violated at step(s) {', '.join(map(str, run['violations'][:10]))}")
    else:
        _note(f"no safety violation in {run['steps']} step(s)")
    if args.json:
        _write(args, _json_text(run))
    else:
        lines = []
        for t in run["trace"]:
            flag = "" if t["safe"] else "  UNSAFE"
            ev = t["event"] or "init"
            params = ", ".join(f"{k}={v}" for k, v in t["params"].items())
            state = ", ".join(f"{k}={v}" for k, v in t["state"].items())
            lines.append(f"{t['step']:>5}  {ev}({params})  {state}{flag}")
        _write(args, "\n".join(lines) + ("\n" if lines else ""))
    return FAILED if run["violations"] else OK


def cmd_export(args) -> int:
    inp = _select(args)
    m = inp.machine
    if args.format != "smt2":
        if args.query:
            raise UsageError("--query applies to --format smt2 only")
        events = args.event or None
        ents = _with_inputs(m) if args.format != "eventb-text" or events is None else [m]
        if inp.spec is not None and not isinstance(m, PairedMachine) and args.format != "eventb-text":
            ents = [m, inp.spec]
        _write(args, _render(args.format, ents, events))
        return OK
    if not args.query:
        raise UsageError(f"--format smt2 needs --query ({', '.join(QUERY_KINDS)})")
    spec, original = inp.spec, None
    if isinstance(m, PairedMachine) and m.base is not None:
        original = m.base
        if args.query in ("vacuity", "thm1", "thm2"):
            m, spec = m.base, m.spec
    _write(args, emit(args.query, m, spec=spec, subset=args.subset, original=original, prose=args.safpar_prose))
    return OK


def cmd_simulation(args) -> int:
    inp = _select(args, want_spec=False)
    m = inp.machine
    if not isinstance(m, PairedMachine) or m.base is None:
        raise UsageError("forward simulation needs a robustified machine whose inputs are loaded")
    r = check_forward_simulation(m, m.base, args.witnesses)
    _note(r.summary())
    if args.json:
        doc = {"type": "check", "machine": m.name, "reports": [r.to_json(timing=not args.no_timing)]}
        _write(args, _json_text(doc))
    return OK if r.holds else FAILED


# ---------------------------------------------------------------------------
# argument parsing


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("paths", nargs="+", metavar="FILE", help="model files (.cpm or .json)")
    common.add_argument("--machine", help="machine to use (default: the last one)")
    common.add_argument("--uncertainty", help="uncertainty specification to use")
    common.add_argument("--set", action="append", metavar="NAME=VALUE", help="bind a symbolic constant")
    common.add_argument("--witnesses", type=_witness_limit, default=1, metavar="N|all", help="witnesses per report")
    common.add_argument("--cap", type=int, default=DEFAULT_STATE_CAP, help="state-space cap (default 10^7)")
    common.add_argument("--jobs", type=int, default=None, help="worker processes (default: $ROBUSTIKIT_JOBS or all cores)")
    common.add_argument("-o", "--output", help="write to this file instead of stdout")
    common.add_argument("--json", action="store_true", help="print the JSON report")
    common.add_argument("--no-timing", action="store_true", help="omit wall-clock timing from JSON")
    common.add_argument("--safpar-prose", action="store_true", help="safe parameters only over states enabling the event")

    p = argparse.ArgumentParser(prog="robustikit", description="Perceptual-uncertainty injection and robustification.")
    p.add_argument("--version", action="version", version=f"robustikit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, fn: Callable, help: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, parents=[common], help=help, description=help)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("parse", cmd_parse, "parse and print models")
    sp.add_argument("--format", choices=("dsl", "eventb-text", "json"), default="dsl")
    add("check", cmd_check, "partitioning, invariant preservation and feasibility")
    sp = add("inject", cmd_inject, "inject an uncertainty specification")
    sp.add_argument("--format", choices=("dsl", "eventb-text", "json"), default="dsl")
    sp = add("robustify", cmd_robustify, "robustify an (injected) machine")
    sp.add_argument("--method", choices=sorted(METHODS) + ["auto"], default="auto")
    sp.add_argument("--force", action="store_true", help="emit the machine even when the condition fails")
    sp.add_argument("--report", help="write the outcome JSON to this file")
    sp.add_argument("--format", choices=("dsl", "eventb-text", "json"), default="dsl")
    sp = add("workflow", cmd_workflow, "check, inject, then robustify preferring action preservation")
    sp.add_argument("--format", choices=("dsl", "eventb-text", "json"), default="dsl")
    sp = add("sweep", cmd_sweep, "evaluate both conditions over a range of one symbolic constant")
    sp.add_argument("--param", help="the symbolic constant to sweep")
    sp.add_argument("--range", type=_range, required=True, metavar="LO..HI")
    sp = add("simulate", cmd_simulate, "seeded random run alternating plant and controller steps")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--steps", type=int, default=100)
    add("simulation", cmd_simulation, "forward simulation of a robustified machine by its original")
    sp = add("export", cmd_export, "write a model or an SMT-LIB query")
    sp.add_argument("--format", choices=FORMATS, default="dsl")
    sp.add_argument("--query", choices=QUERY_KINDS)
    sp.add_argument("--subset", type=_subset, help="compartment for the vacuity query, e.g. 1,2,3")
    sp.add_argument("--event", action="append", help="restrict eventb-text output to this event")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    set_state_cap(args.cap)
    if args.jobs is None:
        try:
            args.jobs = default_jobs()
        except ModelError as e:
            parser.error(str(e))
    try:
        return args.fn(args)
    except DSLError as e:
        _note(str(e))
        return USAGE
    except (ModelError, UsageError, SmtError) as e:
        _note(f"error: {e}")
        return USAGE
    except StateSpaceTooLarge as e:
        _note(f"error: {e}")
        return CAP
    finally:
        set_state_cap(DEFAULT_STATE_CAP)


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
