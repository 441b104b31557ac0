"""Random small controller-plant models and a set-comprehension oracle for them.

A model is kept as plain data so the oracle can evaluate it with ordinary
Python, independently of the library's evaluator.  Controller guards split
the domain of ``x0`` into consecutive intervals, which makes partitioning
hold by construction; an optional parameter constraint ``p <= xj - lo + q``
never empties the guard because ``p = 0`` always satisfies it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from hypothesis import strategies as st

from robustikit.syntax import load


@dataclass(frozen=True)
class Update:
    kind: str  # 'keep' | 'param' | 'shift' | 'set'
    k: int = 0


@dataclass(frozen=True)
class Ctrl:
    lo: int  # region lo <= x0 <= hi
    hi: int
    plo: Optional[int]  # parameter domain, None when parameterless
    phi: Optional[int]
    cvar: Optional[int]  # parameter constraint p <= x[cvar] - lo[cvar] + q
    q: int
    updates: tuple[Update, ...]


@dataclass(frozen=True)
class Model:
    doms: tuple[tuple[int, int], ...]
    ctrls: tuple[Ctrl, ...]
    safe: tuple[int, int]  # safety: safe[0] <= x0 <= safe[1]
    radii: tuple[Optional[int], ...]  # None means exact

    # -- model text --------------------------------------------------------------

    @property
    def names(self) -> list[str]:
        return [f"x{j}" for j in range(len(self.doms))]

    def _action(self, c: Ctrl) -> str:
        parts = []
        for v, u in zip(self.names, c.updates):
            if u.kind == "keep":
                parts.append(f"{v}' = {v}")
            elif u.kind == "param":
                parts.append(f"{v}' = {v} + p")
            elif u.kind == "shift":
                parts.append(f"{v}' = {v} + {u.k}" if u.k >= 0 else f"{v}' = {v} - {-u.k}")
            else:
                parts.append(f"{v}' = {u.k}" if u.k >= 0 else f"{v}' = -{-u.k}")
        return " and ".join(parts)

    def text(self) -> str:
        lines = ["machine rnd"]
        for v, (lo, hi) in zip(self.names, self.doms):
            lines.append(f"  var {v} : int[{lo}..{hi}]")
        lo0, hi0 = self.doms[0]
        lines.append(f"  init {lo0} <= x0")
        lines.append(f"  safety {self.safe[0]} <= x0 and x0 <= {self.safe[1]}")
        lines.append("  plant event drift")
        lines.append("    param d : int[-2..2]")
        lines.append("    guard true")
        lines.append("    action x0' = x0 + d" + "".join(f" and {v}' = {v}" for v in self.names[1:]))
        for i, c in enumerate(self.ctrls, 1):
            lines.append(f"  ctrl event c{i}")
            if c.plo is not None:
                lines.append(f"    param p : int[{c.plo}..{c.phi}]")
            guard = f"{c.lo} <= x0 and x0 <= {c.hi}"
            if c.cvar is not None:
                off = c.q - self.doms[c.cvar][0]
                guard += f" and p <= x{c.cvar} + {off}" if off >= 0 else f" and p <= x{c.cvar} - {-off}"
            lines.append(f"    guard {guard}")
            lines.append(f"    action {self._action(c)}")
        lines.append("uncertainty e for rnd")
        for v, r in zip(self.names, self.radii):
            lines.append(f"  {v} exact" if r is None else f"  {v} within {r}")
        return "\n".join(lines) + "\n"

    def load(self):
        sf = load(self.text())
        return sf.machines["rnd"], sf.uncertainties["e"]

    # -- oracle -------------------------------------------------------------------

    def states(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(lo, hi + 1) for lo, hi in self.doms)))

    def param_space(self, i: int) -> list[tuple]:
        c = self.ctrls[i - 1]
        return [()] if c.plo is None else [(p,) for p in range(c.plo, c.phi + 1)]

    def guard(self, i: int, s, p) -> bool:
        c = self.ctrls[i - 1]
        if not c.lo <= s[0] <= c.hi:
            return False
        if c.cvar is None:
            return True
        return p[0] <= s[c.cvar] - self.doms[c.cvar][0] + c.q

    def par(self, i: int, s) -> set:
        return {p for p in self.param_space(i) if self.guard(i, s, p)}

    def idx(self, s) -> int:
        (i,) = [i for i in range(1, len(self.ctrls) + 1) if self.par(i, s)]
        return i

    def posts(self, i: int, s, p) -> set:
        c = self.ctrls[i - 1]
        t = []
        for v, u in zip(s, c.updates):
            t.append({"keep": v, "param": v + (p[0] if p else 0), "shift": v + u.k, "set": u.k}[u.kind])
        ok = all(lo <= x <= hi for x, (lo, hi) in zip(t, self.doms))
        return {tuple(t)} if ok else set()

    def safe_state(self, s) -> bool:
        return self.safe[0] <= s[0] <= self.safe[1]

    def ball(self, hat) -> list:
        ranges = []
        for h, r, (lo, hi) in zip(hat, self.radii, self.doms):
            ranges.append([h] if r is None else range(max(lo, h - r), min(hi, h + r) + 1))
        return list(itertools.product(*ranges))

    def compartment(self, hat) -> frozenset:
        return frozenset(self.idx(s) for s in self.ball(hat))

    def par_eps(self, i: int, hat) -> set:
        fam = [self.par(i, s) for s in self.ball(hat) if self.idx(s) == i]
        if not fam:
            return set(self.param_space(i))
        return set.intersection(*fam)

    def safpar(self, i: int, hat) -> set:
        return {
            p
            for p in self.param_space(i)
            if all(self.posts(i, s, p) and all(self.safe_state(t) for t in self.posts(i, s, p)) for s in self.ball(hat))
        }


@st.composite
def models(draw, max_vars: int = 3, max_width: int = 19, max_ctrls: int = 4, max_radius: int = 3) -> Model:
    """Models with at most 20 values per variable; wider domains come with fewer variables."""
    n = draw(st.integers(1, max_vars))
    max_width = min(max_width, {1: 19, 2: 9}.get(n, 5))
    doms = []
    for j in range(n):
        lo = draw(st.integers(-5, 5))
        w = draw(st.integers(1 if j == 0 else 0, max_width))
        doms.append((lo, lo + w))
    lo0, hi0 = doms[0]
    k = draw(st.integers(1, min(max_ctrls, hi0 - lo0 + 1)))
    cuts = sorted(draw(st.lists(st.integers(lo0 + 1, hi0), min_size=k - 1, max_size=k - 1, unique=True)))
    bounds = [lo0] + cuts + [hi0 + 1]
    ctrls = []
    for i in range(k):
        has_p = draw(st.booleans())
        plo = phi = cvar = None
        q = 0
        if has_p:
            plo = draw(st.integers(-3, 0))
            phi = draw(st.integers(0, 4))
            if draw(st.booleans()):
                cvar = draw(st.integers(0, n - 1))
                q = draw(st.integers(0, 2))
        kinds = ["keep", "shift", "set"] + (["param"] if has_p else [])
        updates = []
        for j in range(n):
            kind = draw(st.sampled_from(kinds))
            kk = 0
            if kind == "shift":
                kk = draw(st.integers(-3, 3))
            elif kind == "set":
                kk = draw(st.integers(doms[j][0], doms[j][1]))
            updates.append(Update(kind, kk))
        ctrls.append(Ctrl(bounds[i], bounds[i + 1] - 1, plo, phi, cvar, q, tuple(updates)))
    a = draw(st.integers(lo0, hi0))
    b = draw(st.integers(a, hi0))
    radii = tuple(draw(st.one_of(st.none(), st.integers(0, max_radius))) for _ in range(n))
    return Model(tuple(doms), tuple(ctrls), (a, b), radii)
