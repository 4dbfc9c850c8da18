"""Exhaustive bounded search for witnesses, used as an independent check.

Standard equations are split meet-in-the-middle: the handle side and the
conjugate side are tabulated separately and matched by normal form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product as iproduct
from typing import Iterator

from .mgroup import MElem, commutator, conj, mul, sigma_of_word
from .qnormal import MixedWord, StandardEquation

Word = tuple[int, ...]


class OracleRefused(RuntimeError):
    def __init__(self, estimate: int, limit: int):
        super().__init__(f"search space estimate {estimate} exceeds limit {limit}")
        self.estimate = estimate
        self.limit = limit


@dataclass
class OracleResult:
    status: str                        # SAT | NO_WITNESS
    witness: dict[str, Word] | None = None
    max_len: int = 0
    checked: int = 0
    notes: dict = field(default_factory=dict)


def reduced_words(n: int, max_len: int) -> list[Word]:
    """All freely reduced words of length <= max_len, shortlex order."""
    out: list[Word] = [()]
    layer: list[Word] = [()]
    letters = [k for i in range(1, n + 1) for k in (i, -i)]
    for _ in range(max_len):
        nxt = []
        for w in layer:
            for l in letters:
                if w and w[-1] == -l:
                    continue
                nxt.append(w + (l,))
        out.extend(nxt)
        layer = nxt
    return out


def word_count(n: int, max_len: int) -> int:
    if max_len <= 0:
        return 1
    return 1 + sum(2 * n * (2 * n - 1) ** (k - 1) for k in range(1, max_len + 1))


@lru_cache(maxsize=8)
def _elems(n: int, max_len: int) -> tuple[tuple[Word, MElem], ...]:
    return tuple((w, sigma_of_word(w, n)) for w in reduced_words(n, max_len))


@lru_cache(maxsize=8)
def _handle_table(n: int, g: int, max_len: int) -> dict:
    """Normal form of [x1,y1]...[xg,yg] -> first (shortlex) assignment reaching it."""
    elems = _elems(n, max_len)
    comms: dict = {}
    for (x, ex), (y, ey) in iproduct(elems, repeat=2):
        comms.setdefault(commutator(ex, ey).key(), ((x, y), commutator(ex, ey)))
    table = {MElem.identity(n).key(): ((), MElem.identity(n))}
    for _ in range(g):
        nxt: dict = {}
        for pairs, acc in table.values():
            for pair, c in comms.values():
                prod = mul(acc, c)
                nxt.setdefault(prod.key(), (pairs + (pair,), prod))
        table = nxt
    return table


def estimate(source: StandardEquation | MixedWord, max_len: int) -> int:
    W = word_count(source.rank, max_len)
    if isinstance(source, StandardEquation):
        return W ** (2 * source.genus) + W ** source.m
    return W ** len(source.variables())


def brute_oracle(source: StandardEquation | MixedWord, max_len: int,
                 limit: int = 2_000_000) -> OracleResult:
    est = estimate(source, max_len)
    if est > limit:
        raise OracleRefused(est, limit)
    if isinstance(source, StandardEquation):
        return _standard(source, max_len)
    return _mixed(source, max_len)


def _conjugates(n: int, c: Word, max_len: int) -> list[tuple[Word, MElem]]:
    """Distinct values z c z^-1, each with its shortlex-first z."""
    ce = sigma_of_word(c, n)
    seen: dict = {}
    for z, ez in _elems(n, max_len):
        e = conj(ce, ez)
        seen.setdefault(e.key(), (z, e))
    return list(seen.values())


def _rhs_products(eq: StandardEquation, max_len: int) -> Iterator[tuple[tuple[Word, ...], MElem]]:
    n = eq.rank
    if eq.m == 0:
        yield (), MElem.identity(n)
        return
    tables = [_conjugates(n, c, max_len) for c in eq.coeffs]

    def rec(i: int, zs: tuple[Word, ...], acc: MElem):
        if i == len(tables):
            yield zs, acc
            return
        for z, e in tables[i]:
            yield from rec(i + 1, zs + (z,), mul(acc, e))

    yield from rec(0, (), MElem.identity(n))


def _standard(eq: StandardEquation, max_len: int) -> OracleResult:
    # every right-hand value has abelianization sum(c̄_i); the left side has 0
    if any(sum(col) for col in zip(*eq.cbars())):
        return OracleResult("NO_WITNESS", None, max_len, 0, {"abelianization": True})
    table = _handle_table(eq.rank, eq.genus, max_len)
    checked = 0
    for zs, rhs in _rhs_products(eq, max_len):
        checked += 1
        hit = table.get(rhs.key())
        if hit is None:
            continue
        pairs = hit[0]
        w: dict[str, Word] = {}
        for (x, y), xn, yn in zip(pairs, eq.xs, eq.ys):
            w[xn], w[yn] = x, y
        for z, zn in zip(zs, eq.zs):
            w[zn] = z
        return OracleResult("SAT", w, max_len, checked)
    return OracleResult("NO_WITNESS", None, max_len, checked, {"handle_values": len(table)})


def _mixed(W: MixedWord, max_len: int) -> OracleResult:
    names = [W.name(v) for v in W.variables()]
    words = reduced_words(W.rank, max_len)
    checked = 0
    for vals in iproduct(words, repeat=len(names)):
        checked += 1
        w = dict(zip(names, vals))
        if W.evaluate(w).is_identity():
            return OracleResult("SAT", w, max_len, checked)
    return OracleResult("NO_WITNESS", None, max_len, checked)
