"""Rewriting orientable quadratic words into standard form.

A mixed word is a sequence of int tokens: ``±k`` for ``a_k^{±1}`` when
``k <= VAR_BASE`` and ``±(VAR_BASE + i)`` for the i-th variable.  Every
rewriting step is a substitution ``x -> L x^s R`` (an automorphism of G*F_X
fixing G) followed by free reduction, so the log replays literally.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .mgroup import (MElem, MalformedWord, Word, free_reduce, inverse_word,
                     product, sigma_of_word)

VAR_BASE = 1 << 20


class QuadraticClass(enum.Enum):
    ORIENTABLE = "orientable"
    NON_ORIENTABLE = "non-orientable"
    NOT_QUADRATIC = "not-quadratic"


class UnsupportedClass(ValueError):
    pass


class TransportError(AssertionError):
    pass


def is_var(t: int) -> bool:
    return abs(t) > VAR_BASE


def var_id(t: int) -> int:
    return abs(t) - VAR_BASE


def var_token(i: int, sign: int = 1) -> int:
    return sign * (VAR_BASE + i)


@dataclass
class MixedWord:
    rank: int
    tokens: tuple[int, ...]
    names: dict[int, str] = field(default_factory=dict)

    def variables(self) -> list[int]:
        seen: dict[int, None] = {}
        for t in self.tokens:
            if is_var(t):
                seen.setdefault(var_id(t))
        return list(seen)

    def name(self, vid: int) -> str:
        return self.names.get(vid, f"v{vid}")

    def __str__(self) -> str:
        out = []
        for t in self.tokens:
            if is_var(t):
                nm = self.name(var_id(t))
                out.append(nm if t > 0 else nm.upper())
            else:
                out.append(f"a{t}" if t > 0 else f"A{-t}")
        return " ".join(out) if out else "1"

    def evaluate(self, values: Mapping[str, Word]) -> MElem:
        return sigma_of_word(self.substitute(values), self.rank)

    def substitute(self, values: Mapping[str, Word]) -> Word:
        word: list[int] = []
        for t in self.tokens:
            if is_var(t):
                nm = self.name(var_id(t))
                if nm not in values:
                    raise MalformedWord(f"no value for variable {nm}")
                v = tuple(values[nm])
                word.extend(v if t > 0 else inverse_word(v))
            else:
                word.append(t)
        return tuple(word)


def classify(W: MixedWord) -> QuadraticClass:
    signs: dict[int, list[int]] = {}
    for t in W.tokens:
        if is_var(t):
            signs.setdefault(var_id(t), []).append(1 if t > 0 else -1)
    for s in signs.values():
        if len(s) != 2:
            return QuadraticClass.NOT_QUADRATIC
    if all(s[0] == -s[1] for s in signs.values()):
        return QuadraticClass.ORIENTABLE
    return QuadraticClass.NON_ORIENTABLE


# --------------------------------------------------------------------------
# moves


@dataclass(frozen=True)
class Move:
    """``var -> left · var^sign · right``; ``kind == 'drop'`` forgets ``var``."""

    var: int
    left: tuple[int, ...] = ()
    sign: int = 1
    right: tuple[int, ...] = ()
    kind: str = "subst"

    def image(self, t: int) -> tuple[int, ...]:
        body = self.left + (var_token(self.var, self.sign),) + self.right
        return body if t > 0 else inverse_word(body)

    def is_identity(self) -> bool:
        return self.kind == "subst" and self.sign == 1 and not self.left and not self.right


def apply_move(tokens: Sequence[int], mv: Move) -> tuple[int, ...]:
    if mv.kind == "drop":
        return free_reduce(t for t in tokens if not (is_var(t) and var_id(t) == mv.var))
    out: list[int] = []
    for t in tokens:
        if is_var(t) and var_id(t) == mv.var:
            out.extend(mv.image(t))
        else:
            out.append(t)
    return free_reduce(out)


@dataclass
class AutomorphismLog:
    moves: list[Move] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.moves)

    def replay(self, tokens: Sequence[int]) -> tuple[int, ...]:
        cur = free_reduce(tokens)
        for mv in self.moves:
            cur = apply_move(cur, mv)
        return cur


# --------------------------------------------------------------------------
# standard equations


@dataclass
class StandardEquation:
    """``[x1,y1]...[xg,yg] = z1 c1 z1^-1 ... zm cm zm^-1``."""

    rank: int
    genus: int
    coeffs: list[Word]
    xs: list[str] = field(default_factory=list)
    ys: list[str] = field(default_factory=list)
    zs: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.xs:
            self.xs = [f"x{i + 1}" for i in range(self.genus)]
        if not self.ys:
            self.ys = [f"y{i + 1}" for i in range(self.genus)]
        if not self.zs:
            self.zs = [f"z{i + 1}" for i in range(len(self.coeffs))]
        self.coeffs = [tuple(c) for c in self.coeffs]
        if len(self.xs) != self.genus or len(self.ys) != self.genus or len(self.zs) != len(self.coeffs):
            raise ValueError("variable name lists do not match genus/coefficients")

    @property
    def m(self) -> int:
        return len(self.coeffs)

    def coeff_elems(self) -> list[MElem]:
        return [sigma_of_word(c, self.rank) for c in self.coeffs]

    def cbars(self) -> list[tuple[int, ...]]:
        return [e.ab for e in self.coeff_elems()]

    def coeff_lengths(self) -> list[int]:
        return [len(c) for c in self.coeffs]

    def product_in_derived(self) -> bool:
        return product(self.coeff_elems(), self.rank).in_derived()

    def variables(self) -> list[str]:
        out = []
        for x, y in zip(self.xs, self.ys):
            out += [x, y]
        return out + list(self.zs)

    def to_mixed(self) -> MixedWord:
        """LHS · RHS^-1 as a mixed word."""
        names = {}
        toks: list[int] = []
        vid = 0

        def new(nm):
            nonlocal vid
            vid += 1
            names[vid] = nm
            return vid

        for x, y in zip(self.xs, self.ys):
            a, b = new(x), new(y)
            toks += [var_token(a), var_token(b), var_token(a, -1), var_token(b, -1)]
        rhs: list[int] = []
        for z, c in zip(self.zs, self.coeffs):
            k = new(z)
            rhs += [var_token(k)] + list(c) + [var_token(k, -1)]
        toks += list(inverse_word(rhs))
        return MixedWord(self.rank, tuple(toks), names)

    def describe(self) -> str:
        from .mgroup import format_word
        lhs = "".join(f"[{x},{y}]" for x, y in zip(self.xs, self.ys)) or "1"
        rhs = " ".join(f"{z} ({format_word(c)}) {z.upper()}" for z, c in zip(self.zs, self.coeffs)) or "1"
        return f"n={self.rank}; {lhs} = {rhs}"


@dataclass
class Standardization:
    equation: StandardEquation
    log: AutomorphismLog
    source: MixedWord
    final_tokens: tuple[int, ...]
    # variable ids in the final word, in equation order
    handle_ids: list[tuple[int, int]]
    block_ids: list[int]
    z0_name: str | None

    @property
    def genus(self) -> int:
        return self.equation.genus

    @property
    def m(self) -> int:
        return self.equation.m


def _scan_link(tokens: Sequence[int], start: int) -> tuple[int, int] | None:
    """First crossing pair (v, y) in ``tokens[start:]``, or None if nested."""
    stack: list[int] = []
    where: dict[int, int] = {}
    for t in tokens[start:]:
        if not is_var(t):
            continue
        v = var_id(t)
        if v not in where:
            where[v] = len(stack)
            stack.append(v)
            continue
        if stack[-1] == v:
            stack.pop()
            del where[v]
            continue
        return v, stack[-1]
    return None


def _scan_innermost(tokens: Sequence[int], start: int) -> int | None:
    open_: set[int] = set()
    for t in tokens[start:]:
        if not is_var(t):
            continue
        v = var_id(t)
        if v in open_:
            return v
        open_.add(v)
    return None


def _positions(tokens: Sequence[int], v: int, start: int) -> list[int]:
    return [i for i in range(start, len(tokens)) if is_var(tokens[i]) and var_id(tokens[i]) == v]


class _Rewriter:
    def __init__(self, W: MixedWord):
        self.tokens = free_reduce(W.tokens)
        self.log = AutomorphismLog()

    def move(self, mv: Move) -> None:
        if mv.is_identity():
            return
        self.log.moves.append(mv)
        self.tokens = apply_move(self.tokens, mv)

    def front(self, v: int, start: int) -> None:
        """Make ``v`` (positively) the first token after ``start``."""
        p = _positions(self.tokens, v, start)[0]
        if self.tokens[p] < 0:
            self.move(Move(v, (), -1, ()))
        pre = self.tokens[start:p]
        self.move(Move(v, inverse_word(pre), 1, ()))

    def extract_handle(self, x: int, y: int, start: int) -> tuple[int, int]:
        self.front(x, start)
        t = self.tokens
        px = _positions(t, x, start)
        py = _positions(t, y, start)
        if not px[0] < py[0] < px[1] < py[1]:
            x, y = y, x
            self.front(x, start)
            t = self.tokens
            px = _positions(t, x, start)
            py = _positions(t, y, start)
        if t[py[0]] < 0:
            self.move(Move(y, (), -1, ()))
            t = self.tokens
            py = _positions(t, y, start)
        A = t[px[0] + 1: py[0]]
        self.move(Move(x, (), 1, inverse_word(A)))
        t = self.tokens
        px, py = _positions(t, x, start), _positions(t, y, start)
        B = t[py[0] + 1: px[1]]  # now x y B A X ...
        self.move(Move(y, (), 1, inverse_word(B)))
        t = self.tokens
        px, py = _positions(t, x, start), _positions(t, y, start)
        # x y X E Y D
        E = t[px[1] + 1: py[1]]
        if E:
            self.move(Move(x, (), 1, E))
            self.move(Move(y, inverse_word(E), 1, E))
        assert self.tokens[start:start + 4] == (var_token(x), var_token(y), var_token(x, -1), var_token(y, -1))
        return x, y

    def run(self, W: MixedWord):
        start = 0
        handles: list[tuple[int, int]] = []
        while True:
            link = _scan_link(self.tokens, start)
            if link is None:
                break
            x, y = self.extract_handle(*link, start)
            handles.append((x, y))
            start += 4
        blocks: list[int] = []
        dropped: list[int] = []
        while True:
            v = _scan_innermost(self.tokens, start)
            if v is None:
                break
            self.front(v, start)
            p = _positions(self.tokens, v, start)
            inner = self.tokens[p[0] + 1: p[1]]
            if sigma_of_word(inner, W.rank).is_identity():
                self.move(Move(v, kind="drop"))
                dropped.append(v)
                continue
            blocks.append(v)
            start = p[1] + 1
        for v in W.variables():
            if v not in {a for h in handles for a in h} | set(blocks) | set(dropped):
                # vanished by free reduction: unconstrained
                self.log.moves.append(Move(v, kind="drop"))
        return handles, blocks


def standardize(W: MixedWord) -> Standardization:
    cls = classify(W)
    if cls is QuadraticClass.NON_ORIENTABLE:
        raise UnsupportedClass("non-orientable quadratic equations are not supported")
    if cls is QuadraticClass.NOT_QUADRATIC:
        raise MalformedWord("word is not quadratic: every variable must occur exactly twice")
    for t in W.tokens:
        if not is_var(t) and (t == 0 or abs(t) > W.rank):
            raise MalformedWord(f"generator a{abs(t)} outside rank {W.rank}")
    rw = _Rewriter(W)
    handles, blocks = rw.run(W)
    toks = rw.tokens
    # final shape: handles, then z_i d_i Z_i blocks, then d_0
    pos = 4 * len(handles)
    coeff_d: list[Word] = []
    for v in blocks:
        assert toks[pos] == var_token(v)
        end = toks.index(var_token(v, -1), pos + 1)
        coeff_d.append(tuple(toks[pos + 1: end]))
        pos = end + 1
    d0 = tuple(toks[pos:])
    assert not any(is_var(t) for t in d0)
    names = W.name
    coeffs: list[Word] = []
    zs: list[str] = []
    z0 = None
    if not sigma_of_word(d0, W.rank).is_identity():
        taken = {W.name(v) for v in W.variables()}
        i = 0
        while f"z{i}" in taken:
            i -= 1
        z0 = f"z{i}"
        coeffs.append(inverse_word(d0))
        zs.append(z0)
    for v, d in reversed(list(zip(blocks, coeff_d))):
        coeffs.append(inverse_word(d))
        zs.append(names(v))
    eq = StandardEquation(W.rank, len(handles), coeffs,
                          [names(x) for x, _ in handles], [names(y) for _, y in handles], zs)
    return Standardization(eq, rw.log, W, toks, handles, blocks, z0)


def transport_solution(std: Standardization, values: Mapping[str, Word],
                       check: bool = True) -> dict[str, Word]:
    """Map a solution of ``std.equation`` to one of the source word."""
    W = std.source
    vals = {k: tuple(v) for k, v in values.items()}
    if std.z0_name is not None:
        # conjugate the whole solution so that z0 becomes trivial
        c = vals.pop(std.z0_name, ())
        ci = inverse_word(c)
        zs = set(std.equation.zs)
        vals = {k: free_reduce(ci + v) if k in zs else free_reduce(ci + v + c)
                for k, v in vals.items()}
    by_id: dict[int, Word] = {}
    for v in W.variables():
        by_id[v] = vals.get(W.name(v), ())
    for mv in reversed(std.log.moves):
        if mv.kind == "drop":
            continue
        parts: list[int] = []
        for t in mv.left:
            parts.extend(_tok_value(t, by_id))
        xv = by_id.get(mv.var, ())
        parts.extend(xv if mv.sign > 0 else inverse_word(xv))
        for t in mv.right:
            parts.extend(_tok_value(t, by_id))
        by_id[mv.var] = free_reduce(parts)
    out = {W.name(v): by_id.get(v, ()) for v in W.variables()}
    if check and not W.evaluate(out).is_identity():
        raise TransportError("transported solution does not satisfy the source word")
    return out


def _tok_value(t: int, by_id: Mapping[int, Word]) -> Word:
    if not is_var(t):
        return (t,)
    v = by_id.get(var_id(t), ())
    return v if t > 0 else inverse_word(v)


def mixed_from_parts(rank: int, parts: Iterable[tuple[str, object]]) -> MixedWord:
    """Build a mixed word from ``('var', (name, sign))`` / ``('word', Word)`` items."""
    names: dict[str, int] = {}
    toks: list[int] = []
    for kind, val in parts:
        if kind == "var":
            nm, s = val
            if nm not in names:
                names[nm] = len(names) + 1
            toks.append(var_token(names[nm], s))
        else:
            toks.extend(val)
    return MixedWord(rank, tuple(toks), {i: nm for nm, i in names.items()})


def forward_solution(std: Standardization, values: Mapping[str, Word]) -> dict[str, Word]:
    """Push a solution of the source word through the log (inverse of transport)."""
    W = std.source
    by_id = {v: tuple(values[W.name(v)]) for v in W.variables()}
    for mv in std.log.moves:
        if mv.kind == "drop":
            by_id.pop(mv.var, None)
            continue
        left = [x for t in mv.left for x in _tok_value(t, by_id)]
        right = [x for t in mv.right for x in _tok_value(t, by_id)]
        core = free_reduce(inverse_word(left) + by_id.get(mv.var, ()) + inverse_word(right))
        by_id[mv.var] = core if mv.sign > 0 else inverse_word(core)
    out = {W.name(v): by_id[v] for v in by_id}
    if std.z0_name is not None:
        out[std.z0_name] = ()
    return out
