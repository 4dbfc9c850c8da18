"""Solving Σ u_i ∧ v_i = h with ⟨u_1, v_1, ..., u_g, v_g⟩ = R.

R = Z^r ⊕ Z/d_1 ⊕ ... is described by ``mods`` (0 for a free summand).
Coordinate (a, b) of Λ²(R) lives in Z/gcd(mods[a], mods[b]).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import product as iproduct
from math import gcd
from typing import Iterator, Sequence

from .zlattice import Lattice, Wedge, inverse_fraction, matmul, transpose, wedge

log = logging.getLogger(__name__)

Vec = tuple[int, ...]


# --------------------------------------------------------------------------
# symplectic moves


class InvalidMove(ValueError):
    pass


@dataclass(frozen=True)
class SymplecticMove:
    kind: str   # "S1" | "S2u" | "S2v" | "S3" | "S4"
    i: int
    j: int = -1
    t: int = 0


def _axpy(x: Sequence[int], y: Sequence[int], t: int) -> Vec:
    return tuple(a + t * b for a, b in zip(x, y))


def apply_move(T: Sequence[Vec], mv: SymplecticMove, check: bool = False) -> list[Vec]:
    """Apply a move to (u_1, v_1, ..., u_g, v_g) stored flat.

    S1 swaps pairs i, j.  S2u: u_i += t v_i.  S2v: v_i += t u_i.
    S3: u_i += t u_j and v_j -= t v_i.  S4: u_i += t v_j and u_j += t v_i.
    """
    g = len(T) // 2
    out = [tuple(x) for x in T]
    i, j, t = mv.i, mv.j, mv.t
    if not 0 <= i < g:
        raise InvalidMove(f"pair index {i} out of range")
    if mv.kind in ("S1", "S3", "S4") and (not 0 <= j < g or i == j):
        raise InvalidMove(f"move {mv.kind} needs two distinct pairs")
    ui, vi = 2 * i, 2 * i + 1
    if mv.kind == "S1":
        uj, vj = 2 * j, 2 * j + 1
        out[ui], out[uj] = out[uj], out[ui]
        out[vi], out[vj] = out[vj], out[vi]
    elif mv.kind == "S2u":
        out[ui] = _axpy(out[ui], out[vi], t)
    elif mv.kind == "S2v":
        out[vi] = _axpy(out[vi], out[ui], t)
    elif mv.kind == "S3":
        uj, vj = 2 * j, 2 * j + 1
        out[ui] = _axpy(T[ui], T[uj], t)
        out[vj] = _axpy(T[vj], T[vi], -t)
    elif mv.kind == "S4":
        uj, vj = 2 * j, 2 * j + 1
        out[ui] = _axpy(T[ui], T[vj], t)
        out[uj] = _axpy(T[uj], T[vi], t)
    else:
        raise InvalidMove(f"unknown move kind {mv.kind!r}")
    if check:
        if wedge_total(out) != wedge_total(T):
            raise AssertionError("move changed Σ u∧v")
        if span_key(out) != span_key(T):
            raise AssertionError("move changed the generated subgroup")
    return out


def wedge_total(T: Sequence[Vec]) -> Wedge:
    k = len(T[0]) if T else 0
    acc = Wedge.zero(k)
    for a in range(0, len(T), 2):
        acc = acc + wedge(T[a], T[a + 1])
    return acc


def span_key(T: Sequence[Vec]):
    return Lattice(len(T[0]), T).basis if T else ()


def _coords(basis: Sequence[Vec], x: Vec) -> list[int]:
    lat = Lattice(len(x), basis)
    c = lat.express(x)
    if c is None:
        raise ValueError("vector outside the span of the basis")
    return c


def normalize_first_pair(T: Sequence[Vec], B: Sequence[Vec]) -> tuple[list[Vec], list[SymplecticMove]]:
    """Moves reaching u_1 = b_1 with the rest generating ⟨b_2, ..., b_r⟩."""
    if not B:
        raise ValueError("normalize_first_pair needs a nonzero subgroup")
    T = [tuple(x) for x in T]
    g = len(T) // 2
    moves: list[SymplecticMove] = []

    def do(mv):
        nonlocal T
        T = apply_move(T, mv)
        moves.append(mv)

    def b1(x):
        return _coords(B, x)[0]

    def swap_pair(i):
        # (u, v) -> (v, -u)
        do(SymplecticMove("S2u", i, t=1))
        do(SymplecticMove("S2v", i, t=-1))
        do(SymplecticMove("S2u", i, t=1))

    # Euclid inside each pair until v_i has no b_1 component
    for i in range(g):
        while b1(T[2 * i + 1]):
            a, b = b1(T[2 * i]), b1(T[2 * i + 1])
            q = a // b
            if q:
                do(SymplecticMove("S2u", i, t=-q))
            swap_pair(i)
    # Euclid across pairs on the u's
    while True:
        nz = [i for i in range(g) if b1(T[2 * i])]
        if len(nz) <= 1:
            break
        p = min(nz, key=lambda i: abs(b1(T[2 * i])))
        for i in nz:
            if i != p:
                q = b1(T[2 * i]) // b1(T[2 * p])
                if q:
                    do(SymplecticMove("S3", i, p, -q))
    piv = next(i for i in range(g) if b1(T[2 * i]))
    if piv != 0:
        do(SymplecticMove("S1", 0, piv))
    if b1(T[0]) < 0:
        swap_pair(0)
        swap_pair(0)
    assert b1(T[0]) == 1, "b_1 coefficient gcd must be one"
    # clear the u's b_1 part from other pairs: u_j -= a_j u_1
    for j in range(1, g):
        a = b1(T[2 * j])
        if a:
            do(SymplecticMove("S3", j, 0, -a))
    # remove h = u_1 - b_1 using the other generators
    rest_idx = [1] + [x for j in range(1, g) for x in (2 * j, 2 * j + 1)]
    h = tuple(a - b for a, b in zip(T[0], B[0]))
    if any(h):
        gens = [T[x] for x in rest_idx]
        s = Lattice(len(h), gens).express(h)
        assert s is not None
        coef = dict(zip(rest_idx, s))
        for j in range(1, g):
            alpha = coef.get(2 * j, 0)
            if alpha:
                do(SymplecticMove("S3", 0, j, -alpha))
            beta = coef.get(2 * j + 1, 0)
            if beta:
                do(SymplecticMove("S4", 0, j, -beta))
        h = tuple(a - b for a, b in zip(T[0], B[0]))
        if any(h):
            v1 = T[1]
            k = next(idx for idx, x in enumerate(v1) if x)
            c = h[k] // v1[k]
            do(SymplecticMove("S2u", 0, t=-c))
    assert T[0] == tuple(B[0])
    return T, moves


# --------------------------------------------------------------------------
# skew normal form over Z


@dataclass
class SkewNormalForm:
    P: list[list[int]]       # unimodular, P H P^T = block form
    blocks: list[int]        # d_1 | d_2 | ... (positive)
    radical: int             # number of trailing zero rows

    @property
    def p(self) -> int:
        return len(self.blocks)


def skew_normal_form(H: Sequence[Sequence[int]]) -> SkewNormalForm:
    r = len(H)
    A = [list(row) for row in H]
    P = [[int(i == j) for j in range(r)] for i in range(r)]

    def addmul(dst, src, c):
        if not c:
            return
        A[dst] = [a + c * b for a, b in zip(A[dst], A[src])]
        for row in A:
            row[dst] += c * row[src]
        P[dst] = [a + c * b for a, b in zip(P[dst], P[src])]

    def swap(i, j):
        if i == j:
            return
        A[i], A[j] = A[j], A[i]
        for row in A:
            row[i], row[j] = row[j], row[i]
        P[i], P[j] = P[j], P[i]

    def place(i, j):
        # move entry (i, j), i != j, to (s, s+1)
        if i > j:
            i, j = j, i
        swap(s, i)
        if j == s:
            j = i
        swap(s + 1, j)

    blocks: list[int] = []
    s = 0
    while s + 1 < r:
        cand = [(abs(A[i][j]), i, j) for i in range(s, r) for j in range(i + 1, r) if A[i][j]]
        if not cand:
            break
        _, i, j = min(cand)
        place(i, j)
        while True:
            a = A[s][s + 1]
            for t in range(s + 2, r):
                addmul(t, s + 1, -(A[s][t] // a))
                addmul(t, s, A[s + 1][t] // a)
            rem = [(abs(A[x][t]), x, t) for x in (s, s + 1) for t in range(s + 2, r) if A[x][t]]
            if rem:
                _, x, t = min(rem)
                place(x, t)
                continue
            bad = next((x for x in range(s + 2, r) for y in range(s + 2, r) if A[x][y] % a), None)
            if bad is not None:
                addmul(s, bad, 1)
                continue
            break
        if A[s][s + 1] < 0:
            swap(s, s + 1)
        blocks.append(A[s][s + 1])
        s += 2
    return SkewNormalForm(P, blocks, r - 2 * len(blocks))


# --------------------------------------------------------------------------
# problems


@dataclass
class WedgeProblem:
    mods: list[int]                       # 0 = free summand, listed first
    h: dict[tuple[int, int], int]         # Λ²(R) coordinates
    g: int

    def __post_init__(self):
        r = sum(1 for d in self.mods if d == 0)
        tors = self.mods[r:]
        if any(d == 0 for d in tors) or any(d < 0 for d in self.mods):
            raise ValueError("free summands must come first and moduli must be positive")
        if any(d == 1 for d in tors) or any(b % a for a, b in zip(tors, tors[1:])):
            raise ValueError(f"torsion moduli {tors} are not an invariant factor chain")

    @property
    def q(self) -> int:
        return len(self.mods)

    @property
    def r(self) -> int:
        return sum(1 for d in self.mods if d == 0)

    def pair_mod(self, a: int, b: int) -> int:
        return gcd(self.mods[a], self.mods[b])

    def normalize_vec(self, x: Sequence[int]) -> Vec:
        return tuple(v % d if d else v for v, d in zip(x, self.mods))

    def wedge_of(self, T: Sequence[Vec]) -> dict[tuple[int, int], int]:
        out: dict[tuple[int, int], int] = {}
        q = self.q
        for k in range(0, len(T), 2):
            u, v = T[k], T[k + 1]
            for a in range(q):
                if not u[a] and not v[a]:
                    continue
                for b in range(a + 1, q):
                    x = u[a] * v[b] - u[b] * v[a]
                    if x:
                        out[(a, b)] = out.get((a, b), 0) + x
        return self.reduce_wedge(out)

    def reduce_wedge(self, w: dict[tuple[int, int], int]) -> dict[tuple[int, int], int]:
        out = {}
        for (a, b), x in w.items():
            m = self.pair_mod(a, b)
            if m:
                x %= m
            if x:
                out[(a, b)] = x
        return out

    def generates(self, T: Sequence[Vec]) -> bool:
        rows = [list(t) for t in T]
        for a, d in enumerate(self.mods):
            if d:
                rows.append([d * int(b == a) for b in range(self.q)])
        if not rows:
            return True
        return Lattice(self.q, rows).basis == tuple(
            tuple(int(i == j) for j in range(self.q)) for i in range(self.q))

    def check(self, T: Sequence[Vec]) -> bool:
        return (len(T) == 2 * self.g and self.generates(T)
                and self.wedge_of(T) == self.reduce_wedge(self.h))


@dataclass
class WedgeCaps:
    shell_cap: int = 2
    max_nodes: int = 200000


@dataclass
class WedgeResult:
    status: str                    # SAT | UNSAT | UNKNOWN
    T: list[Vec] | None = None
    reason: str = ""
    report: dict = field(default_factory=dict)


def free_criterion(H: Sequence[Sequence[int]], g: int) -> tuple[bool, SkewNormalForm]:
    """Z^r is generated by g pairs with Σ u∧v = H iff p + k + t <= g."""
    snf = skew_normal_form(H)
    t = sum(1 for d in snf.blocks if d > 1)
    return snf.p + snf.radical + t <= g, snf


def free_construct(H: Sequence[Sequence[int]], g: int) -> list[Vec] | None:
    r = len(H)
    ok, snf = free_criterion(H, g)
    if not ok:
        return None
    rows: list[list[int]] = []
    e = lambda i, c=1: [c * int(x == i) for x in range(r)]  # noqa: E731
    for b, d in enumerate(snf.blocks):
        if d == 1:
            rows += [e(2 * b), e(2 * b + 1)]
        else:
            rows += [e(2 * b), e(2 * b + 1, d), e(2 * b + 1), [0] * r]
    for j in range(2 * snf.p, r):
        rows += [e(j), [0] * r]
    while len(rows) < 2 * g:
        rows.append([0] * r)
    # back to the original basis: T = T' P^{-T}
    Pinv_T = transpose(inverse_fraction(snf.P)) if r else []
    T = []
    for row in rows:
        v = [sum(row[i] * Pinv_T[i][j] for i in range(r)) for j in range(r)] if r else []
        assert all(x.denominator == 1 for x in v)
        T.append(tuple(int(x) for x in v))
    return T


def _h_matrix(prob: WedgeProblem, idx: Sequence[int]) -> list[list[int]]:
    k = len(idx)
    M = [[0] * k for _ in range(k)]
    for a in range(k):
        for b in range(a + 1, k):
            x = prob.h.get((idx[a], idx[b]), 0)
            M[a][b], M[b][a] = x, -x
    return M


def solution_bound(prob: WedgeProblem) -> int:
    """Free-coordinate bound 2^{r^2}(‖h_free‖ + 1), rounded up."""
    from math import isqrt
    r = prob.r
    hn2 = sum(x * x for (a, b), x in prob.h.items() if a < r and b < r)
    root = isqrt(hn2)
    if root * root < hn2:
        root += 1
    return 2 ** (r * r) * (root + 1)


def solve(prob: WedgeProblem, caps: WedgeCaps | None = None) -> WedgeResult:
    caps = caps or WedgeCaps()
    q, g, r = prob.q, prob.g, prob.r
    if q > 2 * g:
        return WedgeResult("UNSAT", reason=f"R needs {q} generators but only {2 * g} are available")
    if q == 0:
        return WedgeResult("SAT", T=[()] * (2 * g), reason="trivial R")
    Hf = _h_matrix(prob, list(range(r)))
    free_T = free_construct(Hf, g) if r else [()] * (2 * g)
    if free_T is None:
        return WedgeResult("UNSAT", reason="free part fails the skew normal form criterion")
    if r == q:
        T = [tuple(x) for x in free_T]
        if not prob.check(T):
            raise AssertionError("constructed tuple failed verification")
        return WedgeResult("SAT", T=T, reason="skew normal form construction")
    # torsion present: try the free construction with torsion coordinates searched
    tors = list(range(r, q))
    ranges = [range(prob.mods[a]) for a in tors]
    nodes = 0
    for tail in iproduct(*[iproduct(*ranges) for _ in range(2 * g)]):
        nodes += 1
        T = [tuple(free_T[k]) + tuple(tail[k]) for k in range(2 * g)]
        if prob.check(T):
            return WedgeResult("SAT", T=T, reason="free construction plus torsion search",
                               report={"nodes": nodes})
        if nodes > caps.max_nodes:
            break
    return _shell_search(prob, caps, nodes)


def _shell_search(prob: WedgeProblem, caps: WedgeCaps, nodes0: int) -> WedgeResult:
    q, g, r = prob.q, prob.g, prob.r
    bound = solution_bound(prob)
    cap = min(caps.shell_cap, bound)
    nodes = nodes0
    tors_ranges = [range(prob.mods[a]) for a in range(r, q)]
    nvars_free = 2 * g * r
    for s in range(cap + 1):
        for free in _shell(nvars_free, s):
            for tail in iproduct(*[iproduct(*tors_ranges) for _ in range(2 * g)]):
                nodes += 1
                if nodes > caps.max_nodes:
                    return WedgeResult("UNKNOWN", reason="wedge search node budget exhausted",
                                       report={"nodes": nodes, "shell": s, "bound": bound})
                T = [tuple(free[k * r:(k + 1) * r]) + tuple(tail[k]) for k in range(2 * g)]
                if prob.check(T):
                    return WedgeResult("SAT", T=T, reason="shell search",
                                       report={"nodes": nodes, "shell": s})
    if cap >= bound:
        return WedgeResult("UNSAT", reason="certified search space exhausted",
                           report={"nodes": nodes, "bound": bound})
    return WedgeResult("UNKNOWN", reason="wedge shell cap below certified bound",
                       report={"nodes": nodes, "cap": cap, "bound": bound})


def _shell(k: int, s: int) -> Iterator[tuple[int, ...]]:
    """Integer vectors of length k with max |entry| exactly s (lexicographic)."""
    if k == 0:
        if s == 0:
            yield ()
        return
    rng = range(-s, s + 1)
    for v in iproduct(rng, repeat=k):
        if max(abs(x) for x in v) == s:
            yield v


def brute_force(prob: WedgeProblem, box: int = 3) -> list[Vec] | None:
    """Exhaustive oracle over coordinate matrices with entries in [-box, box]."""
    q, g = prob.q, prob.g
    ranges = [range(-box, box + 1) if d == 0 else range(d) for d in prob.mods]
    vecs = list(iproduct(*ranges))
    for T in iproduct(vecs, repeat=2 * g):
        if prob.check(list(T)):
            return list(T)
    return None
