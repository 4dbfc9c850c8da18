"""Text format for equations.

::

    n=2; [x1,y1] = z1 (a1 a2 A1 A2) Z1
    n=2; z1 (a1 a2 A1 A2) Z1 = 1
    n=2; raw: x1 a1 y1 X1 a2 Y1 = 1

Lowercase letters are generators/variables, uppercase their inverses.
Generators are ``a<k>``; variables are ``x<i>``, ``y<i>``, ``z<i>``.  Input
that is exactly in standard shape parses to a :class:`StandardEquation`;
anything else parses to a :class:`MixedWord` (``LHS · RHS^-1``) for the
normalizer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .mgroup import format_word, inverse_word
from .qnormal import MixedWord, StandardEquation, mixed_from_parts

_TOKENS = re.compile(r"""
    (?P<ws>\s+)
  | (?P<gen>[aA]\d+)
  | (?P<var>[xyzXYZ]\d+)
  | (?P<raw>raw)
  | (?P<n>n)
  | (?P<int>\d+)
  | (?P<sym>[\[\],();=:])
""", re.VERBOSE)


class DslError(ValueError):
    def __init__(self, msg: str, text: str, offset: int):
        line = text.count("\n", 0, offset) + 1
        col = offset - (text.rfind("\n", 0, offset) + 1) + 1
        super().__init__(f"{msg} at line {line}, column {col} (offset {offset})")
        self.offset, self.line, self.col = offset, line, col


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _lex(text: str) -> list[_Tok]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKENS.match(text, pos)
        if not m:
            raise DslError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    out.append(_Tok("eof", "", len(text)))
    return out


# items on one side of '='
@dataclass
class _Comm:
    x: str
    y: str
    pos: int


@dataclass
class _Var:
    name: str
    sign: int
    pos: int


@dataclass
class _Const:
    word: tuple[int, ...]
    paren: bool
    pos: int


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _lex(text)
        self.i = 0
        self.rank = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str, text: str | None = None) -> _Tok:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            got = t.text or "end of input"
            raise DslError(f"expected {want!r}, found {got!r}", self.text, t.pos)
        self.i += 1
        return t

    def error(self, msg: str, pos: int | None = None):
        raise DslError(msg, self.text, self.peek().pos if pos is None else pos)

    def header(self) -> int:
        self.take("n")
        self.take("sym", "=")
        t = self.take("int")
        n = int(t.text)
        if n < 1:
            self.error("rank must be positive", t.pos)
        self.take("sym", ";")
        self.rank = n
        return n

    def gen(self) -> int:
        t = self.take("gen")
        k = int(t.text[1:])
        if k < 1 or k > self.rank:
            self.error(f"generator {t.text} outside rank {self.rank}", t.pos)
        return k if t.text[0] == "a" else -k

    def var(self) -> _Var:
        t = self.take("var")
        return _Var(t.text.lower(), 1 if t.text[0].islower() else -1, t.pos)

    def side(self, stop: set[str]) -> list:
        items: list = []
        while True:
            t = self.peek()
            if t.kind == "eof" or (t.kind == "sym" and t.text in stop):
                break
            if t.kind == "int" and t.text == "1":
                self.i += 1
                continue
            if t.kind == "sym" and t.text == "[":
                self.i += 1
                x = self.var()
                self.take("sym", ",")
                y = self.var()
                self.take("sym", "]")
                if x.sign < 0 or y.sign < 0:
                    self.error("commutator entries must be plain variables", t.pos)
                items.append(_Comm(x.name, y.name, t.pos))
            elif t.kind == "sym" and t.text == "(":
                self.i += 1
                word = []
                while self.peek().kind == "gen":
                    word.append(self.gen())
                self.take("sym", ")")
                items.append(_Const(tuple(word), True, t.pos))
            elif t.kind == "gen":
                word = []
                while self.peek().kind == "gen":
                    word.append(self.gen())
                items.append(_Const(tuple(word), False, t.pos))
            elif t.kind == "var":
                items.append(self.var())
            else:
                self.error(f"unexpected {t.text!r}")
        return items


def _expand(items: list) -> list[tuple[str, object]]:
    parts: list[tuple[str, object]] = []
    for it in items:
        if isinstance(it, _Comm):
            parts += [("var", (it.x, 1)), ("var", (it.y, 1)), ("var", (it.x, -1)), ("var", (it.y, -1))]
        elif isinstance(it, _Var):
            parts.append(("var", (it.name, it.sign)))
        else:
            parts.append(("word", it.word))
    return parts


def _invert(parts: list[tuple[str, object]]) -> list[tuple[str, object]]:
    out = []
    for kind, val in reversed(parts):
        if kind == "var":
            out.append(("var", (val[0], -val[1])))
        else:
            out.append(("word", inverse_word(val)))
    return out


def _as_standard(rank: int, lhs: list, rhs: list) -> StandardEquation | None:
    if not all(isinstance(it, _Comm) for it in lhs):
        return None
    xs = [it.x for it in lhs]
    ys = [it.y for it in lhs]
    zs: list[str] = []
    coeffs: list[tuple[int, ...]] = []
    k = 0
    while k < len(rhs):
        if k + 2 >= len(rhs):
            return None
        a, c, b = rhs[k], rhs[k + 1], rhs[k + 2]
        if not (isinstance(a, _Var) and isinstance(c, _Const) and isinstance(b, _Var)):
            return None
        if a.sign != 1 or b.sign != -1 or a.name != b.name:
            return None
        zs.append(a.name)
        coeffs.append(c.word)
        k += 3
    names = xs + ys + zs
    if len(set(names)) != len(names):
        return None
    return StandardEquation(rank, len(xs), coeffs, xs, ys, zs)


def parse(text: str) -> StandardEquation | MixedWord:
    """Parse an equation; see the module docstring for the grammar."""
    p = _Parser(text)
    n = p.header()
    if p.peek().kind == "raw":
        p.i += 1
        p.take("sym", ":")
        lhs = p.side({"="})
        p.take("sym", "=")
        t = p.take("int")
        if t.text != "1":
            p.error("raw equations must have right-hand side 1", t.pos)
        p.take("eof")
        return _mixed(n, _expand(lhs))
    lhs = p.side({"="})
    if p.peek().kind == "eof":
        p.error("expected '='")
    p.take("sym", "=")
    rhs = p.side(set())
    p.take("eof")
    std = _as_standard(n, lhs, rhs)
    if std is not None:
        return std
    if not rhs:
        std = _as_standard(n, [], lhs)
        if std is not None and std.m:
            return std
    return _mixed(n, _expand(lhs) + _invert(_expand(rhs)))


def _mixed(n: int, parts) -> MixedWord:
    if not parts:
        return MixedWord(n, ())
    return mixed_from_parts(n, parts)


def format_equation(eq: StandardEquation | MixedWord) -> str:
    if isinstance(eq, StandardEquation):
        return eq.describe()
    body = " ".join(_format_token(eq, t) for t in eq.tokens) or "1"
    return f"n={eq.rank}; raw: {body} = 1"


def _format_token(eq: MixedWord, t: int) -> str:
    from .qnormal import is_var, var_id
    if is_var(t):
        nm = eq.name(var_id(t))
        return nm if t > 0 else nm.upper()
    return format_word((t,))
