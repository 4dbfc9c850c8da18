"""Shared helpers for the test suite: random words, independent oracles, corpora."""

from __future__ import annotations

import random
from itertools import product as iproduct

Word = tuple[int, ...]


def letters(n: int) -> list[int]:
    return [k for i in range(1, n + 1) for k in (i, -i)]


def stack_reduce(word) -> Word:
    out: list[int] = []
    for x in word:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def rand_word(rng: random.Random, n: int, max_len: int, min_len: int = 0) -> Word:
    """Random freely reduced word; length drawn uniformly, then letters without backtracking."""
    length = rng.randint(min_len, max_len)
    out: list[int] = []
    while len(out) < length:
        x = rng.choice(letters(n))
        if out and out[-1] == -x:
            continue
        out.append(x)
    return tuple(out)


def inv(w) -> Word:
    return tuple(-x for x in reversed(w))


def comm(u, v) -> Word:
    return tuple(u) + tuple(v) + inv(u) + inv(v)


def fmt(w) -> str:
    return "".join(f"a{x}" if x > 0 else f"A{-x}" for x in w)


def ab(w, n: int) -> tuple[int, ...]:
    v = [0] * n
    for x in w:
        v[abs(x) - 1] += 1 if x > 0 else -1
    return tuple(v)


def fox(w, n: int):
    """Abelianization plus Fox derivatives in Z[Z^n], as a hashable key.

    The Magnus embedding is injective on the free metabelian group, so two
    words agree in M_n exactly when these keys agree.
    """
    p = [0] * n
    ders: list[dict] = [dict() for _ in range(n)]
    for x in w:
        j = abs(x) - 1
        if x > 0:
            key = tuple(p)
            ders[j][key] = ders[j].get(key, 0) + 1
            p[j] += 1
        else:
            p[j] -= 1
            key = tuple(p)
            ders[j][key] = ders[j].get(key, 0) - 1
    return tuple(p), tuple(frozenset((k, c) for k, c in d.items() if c) for d in ders)


def fox_trivial(w, n: int) -> bool:
    a, ds = fox(w, n)
    return not any(a) and not any(ds)


# --------------------------------------------------------------------------
# solvable corpora built from planted solutions


def commutator_targets(rng: random.Random, count: int, n: int) -> list[tuple[str, dict]]:
    out = []
    while len(out) < count:
        u = rand_word(rng, n, 4, 1)
        v = rand_word(rng, n, 4, 1)
        c = stack_reduce(comm(u, v))
        if not c:
            continue
        out.append((f"n={n}; [x1,y1] = z1 ({fmt(c)}) Z1", {"x1": u, "y1": v, "z1": ()}))
    return out


def conjugacy_pairs(rng: random.Random, count: int, n: int) -> list[tuple[str, dict]]:
    out = []
    while len(out) < count:
        c1 = rand_word(rng, n, 5, 1)
        t = rand_word(rng, n, 3, 0)
        c2 = stack_reduce(t + inv(c1) + inv(t))
        if not c2:
            continue
        out.append((f"n={n}; z1 ({fmt(c1)}) Z1 z2 ({fmt(c2)}) Z2 = 1",
                    {"z1": (), "z2": inv(t)}))
    return out


def mixed_instances(rng: random.Random, count: int, n: int) -> list[tuple[str, dict]]:
    """Words  x d1 y d2 X d3 Y d4 z d5 Z d6  with d6 chosen so a random assignment solves it."""
    out = []
    while len(out) < count:
        d = [rand_word(rng, n, 2, 0) for _ in range(5)]
        vals = {"x1": rand_word(rng, n, 3, 1), "y1": rand_word(rng, n, 3, 1),
                "z1": rand_word(rng, n, 2, 0)}
        x, y, z = vals["x1"], vals["y1"], vals["z1"]
        body = x + d[0] + y + d[1] + inv(x) + d[2] + inv(y) + d[3] + z + d[4] + inv(z)
        d6 = inv(stack_reduce(body))
        if not stack_reduce(d[4]):
            continue
        parts = ["x1", fmt(d[0]), "y1", fmt(d[1]), "X1", fmt(d[2]), "Y1", fmt(d[3]),
                 "z1", fmt(d[4]), "Z1", fmt(d6)]
        text = f"n={n}; raw: " + " ".join(p for p in parts if p) + " = 1"
        out.append((text, vals))
    return out


def soundness_corpus(seed: int = 20240611) -> list[tuple[str, dict]]:
    rng = random.Random(seed)
    corpus = []
    for n in (2, 3):
        corpus += commutator_targets(rng, 7, n)
        corpus += conjugacy_pairs(rng, 7, n)
        corpus += mixed_instances(rng, 7, n)
    return corpus


# --------------------------------------------------------------------------
# exhaustive tiny corpus over F_2


def _cyclically_reduced(w) -> bool:
    return not w or w[0] != -w[-1]


def _words(n: int, max_len: int):
    out = [()]
    layer = [()]
    for _ in range(max_len):
        layer = [w + (x,) for w in layer for x in letters(n) if not w or w[-1] != -x]
        out += layer
    return out


def _signed_perms(n: int):
    from itertools import permutations
    for perm in permutations(range(1, n + 1)):
        for signs in iproduct((1, -1), repeat=n):
            yield {i + 1: signs[i] * perm[i] for i in range(n)}


def _apply(auto: dict, w) -> Word:
    return tuple(auto[x] if x > 0 else -auto[-x] for x in w)


def _cyclic_class(w) -> Word:
    rots = [w[i:] + w[:i] for i in range(len(w))] or [()]
    return min(rots)


def tiny_coefficients(n: int = 2, max_len: int = 4) -> list[Word]:
    """Nontrivial cyclically reduced words up to rotation, one per class."""
    seen = set()
    out = []
    for w in _words(n, max_len):
        if not w or not _cyclically_reduced(w):
            continue
        k = _cyclic_class(w)
        if k not in seen:
            seen.add(k)
            out.append(k)
    return out


def tiny_corpus(n: int = 2, max_len: int = 4) -> list[tuple[int, tuple[Word, ...]]]:
    """(genus, coefficients) with genus <= 1 and m <= 2, modulo obvious symmetries.

    Coefficients are taken up to rotation (absorbed by z), the coefficient
    list up to order (products of conjugates can be reordered), and the whole
    equation up to signed generator permutations.
    """
    coeffs = tiny_coefficients(n, max_len)
    autos = list(_signed_perms(n))

    def canon(cs: tuple[Word, ...]) -> tuple[Word, ...]:
        best = None
        for a in autos:
            key = tuple(sorted(_cyclic_class(_apply(a, c)) for c in cs))
            if best is None or key < best:
                best = key
        return best

    keys: set = set()
    out: list[tuple[int, tuple[Word, ...]]] = []
    for g in (0, 1):
        for m in (0, 1, 2):
            if g == 0 and m == 0:
                continue
            for cs in iproduct(coeffs, repeat=m):
                k = (g, canon(cs))
                if k not in keys:
                    keys.add(k)
                    out.append(k)
    return out


def tiny_text(n: int, g: int, cs) -> str:
    lhs = " ".join(f"[x{i},y{i}]" for i in range(1, g + 1)) or "1"
    rhs = " ".join(f"z{i} ({fmt(c)}) Z{i}" for i, c in enumerate(cs, 1)) or "1"
    if g == 0:
        return f"n={n}; {rhs} = 1"
    return f"n={n}; {lhs} = {rhs}"


# --------------------------------------------------------------------------
# exact affine representation:  a_i -> (x -> t_i x + b_i)


def affine_params(n: int, seed: int = 7):
    from fractions import Fraction
    rng = random.Random(seed)
    primes = [2, 3, 5, 7, 11, 13]
    return [(Fraction(primes[i], primes[i + 1]) ** (i + 1) + 1,
             Fraction(rng.randint(1, 97), rng.randint(1, 13))) for i in range(n)]


def affine(w, params):
    """Image of a word as a pair (t, b) meaning x -> t x + b; composition left to right."""
    from fractions import Fraction
    t, b = Fraction(1), Fraction(0)
    for x in w:
        ti, bi = params[abs(x) - 1]
        if x < 0:
            ti, bi = 1 / ti, -bi / ti
        # apply current map first, then the letter's map
        t, b = ti * t, ti * b + bi
    return t, b


# --------------------------------------------------------------------------
# exact linear algebra used as a reference


def mat_mul(A, B):
    return [[sum(a * b for a, b in zip(row, col)) for col in zip(*B)] for row in A]


def det_exact(M) -> int:
    """Determinant by Gaussian elimination over the rationals."""
    from fractions import Fraction
    A = [[Fraction(x) for x in r] for r in M]
    n = len(A)
    d = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c]), None)
        if p is None:
            return 0
        if p != c:
            A[c], A[p] = A[p], A[c]
            d = -d
        d *= A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    assert d.denominator == 1
    return int(d)


def reverse_gso(vectors):
    """b_r* = b_r, and b_i* is b_i minus its projection onto span(b_{i+1}, ..., b_r)."""
    from fractions import Fraction
    r = len(vectors)
    out = [None] * r
    for i in range(r - 1, -1, -1):
        v = [Fraction(x) for x in vectors[i]]
        for j in range(i + 1, r):
            bj = out[j]
            nj = sum(x * x for x in bj)
            mu = sum(Fraction(a) * b for a, b in zip(vectors[i], bj)) / nj
            v = [x - mu * y for x, y in zip(v, bj)]
        out[i] = v
    return out


def rand_matrix(rng: random.Random, rows: int, cols: int, lo: int = -50, hi: int = 50):
    return [[rng.randint(lo, hi) for _ in range(cols)] for _ in range(rows)]


# --------------------------------------------------------------------------
# synthetic quadratic words


def synthetic_quadratic(rng: random.Random, length: int, n: int = 2, density: int = 7):
    """Orientable quadratic word with about ``length`` letters, one variable pair per ``2*density``."""
    from metaquad.qnormal import mixed_from_parts
    k = max(1, length // (2 * density))
    toks = []
    for v in range(k):
        toks += [("var", (f"v{v}", 1)), ("var", (f"v{v}", -1))]
    rng.shuffle(toks)
    budget = length - 2 * k
    parts = []
    for i, t in enumerate(toks):
        parts.append(t)
        share = budget // (2 * k) + (1 if i < budget % (2 * k) else 0)
        parts.append(("word", rand_word(rng, n, share, share)))
    return mixed_from_parts(n, parts)
