from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORDS = frozenset(
    """
    machine var const init safety uncertainty invariant origin of under
    plant ctrl event param guard action covers
    for exact within relation
    and or not true false bot forall exists in int
    """.split()
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*'?)
  | (?P<op><=>|=>|<=|>=|!=|\.\.|[-+*=<>()\[\]{},.:|])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # 'int' | 'ident' | 'primed' | 'kw' | 'op' | 'eof'
    text: str
    line: int
    col: int


class LexError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(message)
        self.line = line
        self.col = col


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise LexError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            if s.endswith("'"):
                tokens.append(Token("primed", s[:-1], line, col))
            elif s in KEYWORDS:
                tokens.append(Token("kw", s, line, col))
            else:
                tokens.append(Token("ident", s, line, col))
        elif kind in ("int", "op"):
            tokens.append(Token(kind, s, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens
