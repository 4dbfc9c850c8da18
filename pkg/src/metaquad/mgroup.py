"""Exact arithmetic in the free metabelian group M_n.

An element is stored as its abelianization (a vector in Z^n) together with
the 1-chain its word traces in the Cayley graph of Z^n.  Two words are equal
in M_n exactly when they trace the same chain, so this is a normal form.

Words are tuples of nonzero ints: ``k`` stands for ``a_k`` and ``-k`` for its
inverse (1-based).  Chain edges are keyed ``(base, d)`` with a 0-based
direction ``d``; only the positively oriented edge ``base -> base + e_d`` is
stored and reverse traversals carry negative coefficients.
"""

from __future__ import annotations

import json
import re
from typing import Iterable, Mapping

from .zlattice import Lattice, Wedge

Word = tuple[int, ...]
Edge = tuple[tuple[int, ...], int]

_TOKEN = re.compile(r"\s*([aA])(\d+)\s*")


class MalformedWord(ValueError):
    pass


class RankMismatch(ValueError):
    pass


# --------------------------------------------------------------------------
# words


def parse_word(text: str, rank: int | None = None) -> Word:
    """Parse ``"a1 a2 A1 A2"`` (``A<k>`` is the inverse of ``a<k>``)."""
    letters = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise MalformedWord(f"bad token at offset {pos} in {text!r}")
        k = int(m.group(2))
        if k == 0 or (rank is not None and k > rank):
            raise MalformedWord(f"generator index {k} out of range")
        letters.append(k if m.group(1) == "a" else -k)
        pos = m.end()
    return tuple(letters)


def format_word(word: Iterable[int]) -> str:
    return " ".join(f"a{l}" if l > 0 else f"A{-l}" for l in word)


def check_word(word: Iterable[int], rank: int) -> None:
    for l in word:
        if l == 0 or abs(l) > rank:
            raise MalformedWord(f"letter {l} outside rank {rank}")


def free_reduce(word: Iterable) -> tuple:
    out: list = []
    for l in word:
        if out and _is_inverse(out[-1], l):
            out.pop()
        else:
            out.append(l)
    return tuple(out)


def _is_inverse(a, b) -> bool:
    if isinstance(a, int):
        return isinstance(b, int) and a == -b
    return a[0] == b[0] and a[1] == -b[1]


def inverse_word(word: Iterable[int]) -> Word:
    return tuple(-l for l in reversed(tuple(word)))


def commutator_word(u: Word, v: Word) -> Word:
    """``[u, v] = u v u^-1 v^-1``."""
    return free_reduce(u + v + inverse_word(u) + inverse_word(v))


def word_for_vector(vec: Iterable[int]) -> Word:
    """Shortest-lex word with the given abelianization: a1^k1 a2^k2 ..."""
    out: list[int] = []
    for i, k in enumerate(vec):
        out.extend([i + 1 if k > 0 else -(i + 1)] * abs(k))
    return tuple(out)


# --------------------------------------------------------------------------
# chains


def translate(chain: Mapping[Edge, int], shift: tuple[int, ...]) -> dict[Edge, int]:
    if not any(shift):
        return dict(chain)
    return {(tuple(b + s for b, s in zip(base, shift)), d): c
            for (base, d), c in chain.items()}


def add_into(acc: dict[Edge, int], chain: Mapping[Edge, int], scale: int = 1,
             shift: tuple[int, ...] | None = None) -> dict[Edge, int]:
    """In place: ``acc += scale * (shift . chain)``; zero entries removed."""
    for (base, d), c in chain.items():
        if shift is not None:
            base = tuple(b + s for b, s in zip(base, shift))
        key = (base, d)
        v = acc.get(key, 0) + scale * c
        if v:
            acc[key] = v
        else:
            acc.pop(key, None)
    return acc


def chain_boundary(chain: Mapping[Edge, int]) -> dict[tuple[int, ...], int]:
    out: dict[tuple[int, ...], int] = {}
    for (base, d), c in chain.items():
        head = list(base)
        head[d] += 1
        head_t = tuple(head)
        out[head_t] = out.get(head_t, 0) + c
        out[base] = out.get(base, 0) - c
    return {p: c for p, c in out.items() if c}


def square_chain(n: int, i: int, j: int, at: tuple[int, ...] | None = None) -> dict[Edge, int]:
    """Chain of the basic commutator [a_i, a_j] (0-based i, j) placed at ``at``."""
    base = tuple(at) if at is not None else (0,) * n
    ei = tuple(1 if k == i else 0 for k in range(n))
    ej = tuple(1 if k == j else 0 for k in range(n))
    plus_i = tuple(b + e for b, e in zip(base, ei))
    plus_j = tuple(b + e for b, e in zip(base, ej))
    return {(base, i): 1, (plus_i, j): 1, (plus_j, i): -1, (base, j): -1}


# --------------------------------------------------------------------------
# elements


class MElem:
    """Element of M_n in (abelianization, 1-chain) normal form.  Immutable."""

    __slots__ = ("rank", "ab", "chain", "_hash")

    def __init__(self, rank: int, ab: Iterable[int], chain: Mapping[Edge, int] | None = None):
        self.rank = rank
        self.ab = tuple(ab)
        self.chain = {k: v for k, v in (chain or {}).items() if v}
        self._hash = None
        if len(self.ab) != rank:
            raise RankMismatch(f"abelianization {self.ab} has wrong length for rank {rank}")

    @classmethod
    def identity(cls, rank: int) -> "MElem":
        return cls(rank, (0,) * rank)

    @classmethod
    def from_word(cls, word: Iterable[int], rank: int) -> "MElem":
        return sigma_of_word(tuple(word), rank)

    def __mul__(self, other: "MElem") -> "MElem":
        return mul(self, other)

    def inverse(self) -> "MElem":
        return inv(self)

    def is_identity(self) -> bool:
        return not any(self.ab) and not self.chain

    def in_derived(self) -> bool:
        return not any(self.ab)

    def boundary_ok(self) -> bool:
        expected: dict[tuple[int, ...], int] = {}
        if any(self.ab):
            expected[self.ab] = 1
            expected[(0,) * self.rank] = -1
        return chain_boundary(self.chain) == expected

    def key(self):
        return (self.ab, frozenset(self.chain.items()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, MElem):
            return NotImplemented
        return self.rank == other.rank and self.ab == other.ab and self.chain == other.chain

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.rank,) + self.key())
        return self._hash

    def __repr__(self) -> str:
        return f"MElem(ab={self.ab}, |chain|={len(self.chain)})"

    def to_json(self) -> dict:
        chain = [{"base": list(base), "dir": d + 1, "coeff": c}
                 for (base, d), c in sorted(self.chain.items())]
        return {"ab": list(self.ab), "chain": chain}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, data: Mapping) -> "MElem":
        ab = tuple(data["ab"])
        chain = {(tuple(e["base"]), e["dir"] - 1): e["coeff"] for e in data["chain"]}
        return cls(len(ab), ab, chain)


def sigma_of_word(word: Word, rank: int) -> MElem:
    """Trace ``word`` from the origin; mutually inverse traversals cancel."""
    pos = [0] * rank
    chain: dict[Edge, int] = {}
    for l in word:
        if l == 0 or abs(l) > rank:
            raise MalformedWord(f"letter {l} outside rank {rank}")
        d = abs(l) - 1
        if l > 0:
            key = (tuple(pos), d)
            pos[d] += 1
            step = 1
        else:
            pos[d] -= 1
            key = (tuple(pos), d)
            step = -1
        v = chain.get(key, 0) + step
        if v:
            chain[key] = v
        else:
            del chain[key]
    return MElem(rank, pos, chain)


def _same_rank(g: MElem, h: MElem) -> None:
    if g.rank != h.rank:
        raise RankMismatch(f"rank {g.rank} vs {h.rank}")


def mul(g: MElem, h: MElem) -> MElem:
    # sigma(gh) = sigma(g) + gbar . sigma(h)
    _same_rank(g, h)
    chain = add_into(dict(g.chain), h.chain, 1, g.ab)
    return MElem(g.rank, tuple(a + b for a, b in zip(g.ab, h.ab)), chain)


def inv(g: MElem) -> MElem:
    neg = tuple(-a for a in g.ab)
    return MElem(g.rank, neg, {k: -v for k, v in translate(g.chain, neg).items()})


def conj(h: MElem, by: MElem) -> MElem:
    """``by * h * by^-1``."""
    return mul(mul(by, h), inv(by))


def commutator(g: MElem, h: MElem) -> MElem:
    return mul(mul(g, h), mul(inv(g), inv(h)))


def is_identity(g: MElem) -> bool:
    return g.is_identity()


def product(elems: Iterable[MElem], rank: int) -> MElem:
    acc = MElem.identity(rank)
    for e in elems:
        acc = mul(acc, e)
    return acc


class PhiDomainError(ValueError):
    pass


def phi_doubled(chain: Mapping[Edge, int], n: int) -> dict[tuple[int, int], int]:
    """The sum  sum_{(p,j)} m_{p,j} (p ^ e_j)  before halving (0-based pairs)."""
    out: dict[tuple[int, int], int] = {}
    for (base, j), c in chain.items():
        for i, p in enumerate(base):
            if p == 0 or i == j:
                continue
            if i < j:
                key, s = (i, j), 1
            else:
                key, s = (j, i), -1
            out[key] = out.get(key, 0) + s * c * p
    return {k: v for k, v in out.items() if v}


def phi(g: MElem) -> Wedge:
    """Image of ``g`` in the exterior square of Z^n; needs ``g`` in M_n'.

    This is the signed area enclosed by the cycle, i.e. half of
    sum m_{p,j} (p ^ e_j) over the chain.
    """
    if any(g.ab):
        raise PhiDomainError(f"phi needs an element of the derived subgroup, got ab={g.ab}")
    doubled = phi_doubled(g.chain, g.rank)
    coords = {}
    for k, v in doubled.items():
        if v % 2:
            raise AssertionError(f"odd area sum {v} at {k}; chain is not a cycle")
        coords[k] = v // 2
    return Wedge(g.rank, coords)


class QuotChain:
    """Projection of a chain to the quotient graph Gamma_n / L."""

    __slots__ = ("modulus", "support")

    def __init__(self, modulus: Lattice, support: Mapping[Edge, int]):
        self.modulus = modulus
        self.support = {k: v for k, v in support.items() if v}

    def is_zero(self) -> bool:
        return not self.support

    def __eq__(self, other) -> bool:
        return (isinstance(other, QuotChain) and self.modulus == other.modulus
                and self.support == other.support)

    def __repr__(self) -> str:
        return f"QuotChain({self.support})"


def project_chain(chain: Mapping[Edge, int], L: Lattice) -> QuotChain:
    out: dict[Edge, int] = {}
    cache: dict[tuple[int, ...], tuple[int, ...]] = {}
    for (base, d), c in chain.items():
        rep = cache.get(base)
        if rep is None:
            rep = cache[base] = L.reduce(base)
        key = (rep, d)
        v = out.get(key, 0) + c
        if v:
            out[key] = v
        else:
            out.pop(key, None)
    return QuotChain(L, out)


def tau_L(g: MElem, L: Lattice) -> QuotChain:
    if L.n != g.rank:
        raise RankMismatch(f"lattice in Z^{L.n}, element of rank {g.rank}")
    return project_chain(g.chain, L)


def magnus_degree2(word: Word, n: int) -> tuple[list[int], list[list[int]]]:
    """Degree <= 2 coefficients of the Magnus expansion a_i -> 1 + X_i.

    Returns ``(first, second)`` where ``first[i]`` is the X_i coefficient and
    ``second[i][j]`` the X_i X_j coefficient.  Independent of the chain code;
    used as an oracle for ``phi``.
    """
    first = [0] * n
    second = [[0] * n for _ in range(n)]
    for l in word:
        k = abs(l) - 1
        # right-multiply by 1 + X_k  or  1 - X_k + X_k^2
        if l > 0:
            for i in range(n):
                second[i][k] += first[i]
            first[k] += 1
        else:
            for i in range(n):
                second[i][k] -= first[i]
            second[k][k] += 1
            first[k] -= 1
    return first, second
