"""Abelian reduction: w̄-tuples, candidate subgroups L, reduced wedge problems."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product as iproduct
from math import gcd, isqrt
from typing import Iterator, Sequence

import mpmath

from .mgroup import Edge, MElem, add_into, phi, product, project_chain, sigma_of_word
from .qnormal import StandardEquation
from .zlattice import (Lattice, SnfDecomposition, Wedge, hnf_with_transform, inverse_fraction,
                       matmul, pair_index, snf_with_transform, transpose, wedge,
                       wedge_change_basis, wedge_mod_subgroup)

log = logging.getLogger(__name__)

Vec = tuple[int, ...]


class AbelianizationObstruction(Exception):
    """c_1...c_m is not in M_n': the equation has no solution."""


class CandidateInfeasible(Exception):
    pass


class RepairError(AssertionError):
    pass


def l1(v: Sequence[int]) -> int:
    return sum(abs(x) for x in v)


def norm2(v: Sequence[int]) -> int:
    return sum(x * x for x in v)


# --------------------------------------------------------------------------
# w̄ enumeration


def ball_points(n: int, radius: int) -> list[Vec]:
    """Integer points of the l1 ball, lexicographic."""
    out: list[Vec] = []

    def rec(prefix: list[int], left: int) -> None:
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for x in range(-left, left + 1):
            prefix.append(x)
            rec(prefix, left - abs(x))
            prefix.pop()

    rec([], radius)
    return out


def sphere_points(n: int, r: int) -> list[Vec]:
    return [p for p in ball_points(n, r) if l1(p) == r]


def wbar_radius(eq: StandardEquation) -> int:
    return sum(eq.coeff_lengths())


def enumerate_wbars(eq: StandardEquation, anchor: bool = False,
                    order: str = "lex") -> Iterator[tuple[Vec, ...]]:
    """Tuples with every |w̄_i|_1 <= sum of coefficient lengths.

    ``anchor`` pins w̄_1 = 0 (global conjugation plus the cluster argument).
    ``order="shell"`` lists tuples by total l1 norm first, then lexicographically.
    """
    m, n = eq.m, eq.rank
    if m == 0:
        yield ()
        return
    B = wbar_radius(eq)
    free = m - 1 if anchor else m
    head: tuple[Vec, ...] = ((0,) * n,) if anchor else ()
    if order == "lex":
        ball = ball_points(n, B)
        for tup in iproduct(ball, repeat=free):
            yield head + tup
        return
    if order != "shell":
        raise ValueError(f"unknown order {order!r}")
    spheres = [sphere_points(n, r) for r in range(B + 1)]

    def split(total: int, parts: int) -> Iterator[tuple[int, ...]]:
        if parts == 0:
            if total == 0:
                yield ()
            return
        for first in range(min(total, B) + 1):
            for rest in split(total - first, parts - 1):
                yield (first,) + rest

    for total in range(free * B + 1):
        for radii in split(total, free):
            for tup in iproduct(*(spheres[r] for r in radii)):
                yield head + tup


# --------------------------------------------------------------------------
# systems


@dataclass
class ReductionSystem:
    eq: StandardEquation
    wbars: tuple[Vec, ...]
    delta: dict[Edge, int]
    h: Wedge
    cbars: list[Vec]
    phi_c: Wedge

    @property
    def g(self) -> int:
        return self.eq.genus

    @property
    def n(self) -> int:
        return self.eq.rank


def h_for_wbars(phi_c: Wedge, wbars: Sequence[Vec], cbars: Sequence[Vec]) -> Wedge:
    """h = φ(c_1...c_m) + Σ w̄_i ∧ c̄_i."""
    h = phi_c
    for w, c in zip(wbars, cbars):
        if any(c) and any(w):
            h = h + wedge(w, c)
    return h


def delta_for_wbars(elems: Sequence[MElem], wbars: Sequence[Vec]) -> dict[Edge, int]:
    acc: dict[Edge, int] = {}
    for w, e in zip(wbars, elems):
        add_into(acc, e.chain, 1, tuple(w))
    return acc


class SystemCache:
    """Per-equation constants reused across w̄ tuples."""

    def __init__(self, eq: StandardEquation):
        self.eq = eq
        self.elems = eq.coeff_elems()
        self.cbars = [e.ab for e in self.elems]
        prod = product(self.elems, eq.rank)
        if any(prod.ab):
            raise AbelianizationObstruction(
                f"coefficient product has abelianization {list(prod.ab)} != 0")
        self.phi_c = phi(prod)


def build_system(eq: StandardEquation, wbars: Sequence[Vec],
                 cache: SystemCache | None = None, check_bounds: bool = True) -> ReductionSystem:
    cache = cache or SystemCache(eq)
    wbars = tuple(tuple(w) for w in wbars)
    if len(wbars) != eq.m:
        raise ValueError(f"need {eq.m} wbar vectors, got {len(wbars)}")
    delta = delta_for_wbars(cache.elems, wbars)
    h = h_for_wbars(cache.phi_c, wbars, cache.cbars)
    sys_ = ReductionSystem(eq, wbars, delta, h, list(cache.cbars), cache.phi_c)
    if check_bounds:
        N = size_parameter(eq)
        d = support_diameter(delta)
        hm = h.max_abs()
        if d > 2 * N or hm > 2 * N * N:
            log.warning("system exceeds size bounds: diam %d (limit %d), max|h| %d (limit %d)",
                        d, 2 * N, hm, 2 * N * N)
    return sys_


def size_parameter(eq: StandardEquation) -> int:
    """Total input size N: sum of coefficient lengths plus variable count."""
    return sum(eq.coeff_lengths()) + 2 * eq.genus + eq.m


def _edge_dist(e: Edge, f: Edge) -> int:
    if e == f:
        return 0
    (p, i), (q, j) = e, f
    best = None
    for a in (p, tuple(x + (k == i) for k, x in enumerate(p))):
        for b in (q, tuple(x + (k == j) for k, x in enumerate(q))):
            d = sum(abs(x - y) for x, y in zip(a, b))
            best = d if best is None else min(best, d)
    return 1 + best


def support_diameter(chain: dict[Edge, int]) -> int:
    """Graph diameter of the support, edges measured midpoint to midpoint."""
    edges = sorted(chain)
    best = 0
    for a in range(len(edges)):
        for b in range(a + 1, len(edges)):
            best = max(best, _edge_dist(edges[a], edges[b]))
    return best


def check_projection(sys_: ReductionSystem, L: Lattice) -> bool:
    return project_chain(sys_.delta, L).is_zero()


# --------------------------------------------------------------------------
# bound on bases of L

OMEGA2 = Fraction(3, 4)  # ω² with ω = √3/2


def l_basis_bound(n: int, D, h_norm2: int, cmax_norm2: int) -> mpmath.mpf:
    """n 2^n ω^{-n(n-1)/2} D^n + 2 ω^{1-n} ‖h‖ (max‖c̄_i‖)^n, evaluated at 50 digits."""
    with mpmath.workdps(50):
        omega = mpmath.sqrt(3) / 2
        D = mpmath.mpf(D)
        t1 = n * mpmath.mpf(2) ** n * omega ** (-(n * (n - 1)) / mpmath.mpf(2)) * D ** n
        t2 = 2 * omega ** (1 - n) * mpmath.sqrt(h_norm2) * mpmath.sqrt(cmax_norm2) ** n
        return t1 + t2


def basis_bound_value(sys_: ReductionSystem) -> tuple[mpmath.mpf, int, mpmath.mpf]:
    """(bound, support diameter, D) for the system."""
    cmax2 = max((norm2(c) for c in sys_.cbars), default=0)
    diam = support_diameter(sys_.delta)
    with mpmath.workdps(50):
        D = mpmath.sqrt(cmax2) + diam
        return l_basis_bound(sys_.n, D, sys_.h.norm2(), cmax2), diam, D


def within_basis_bound(v: Sequence[int], bound: mpmath.mpf) -> bool:
    with mpmath.workdps(50):
        return mpmath.sqrt(norm2(v)) <= bound


def system_basis_bound(sys_: ReductionSystem) -> tuple[int, dict]:
    B, diam, D = basis_bound_value(sys_)
    with mpmath.workdps(50):
        Bint = int(mpmath.floor(B + mpmath.mpf(10) ** -30))
    return Bint, {"diam": diam, "D": mpmath.nstr(D, 12), "bound": Bint}


def certified_entry_cap(rank: int, B: int) -> int:
    """Max |entry| of the HNF of a rank-k lattice with a basis of norms <= B."""
    if rank <= 1:
        return B
    return rank * B ** rank


def hnf_count_estimate(n: int, rank: int, cap: int) -> int:
    """Upper estimate of the number of HNF matrices with entries <= cap."""
    total = 0
    for piv in combinations(range(n), rank):
        est = 1
        for r, c in enumerate(piv):
            est *= cap
            est *= cap ** r  # entries above the pivot
            free_cols = [j for j in range(c + 1, n) if j not in piv]
            est *= (2 * cap + 1) ** len(free_cols)
        total += est
    return total


def _hnf_matrices(n: int, rank: int, s: int) -> Iterator[tuple[Vec, ...]]:
    """Row HNF matrices of the given rank with max |entry| exactly ``s``."""
    for piv in combinations(range(n), rank):
        slots: list[tuple[int, int, range]] = []
        for r, c in enumerate(piv):
            slots.append((r, c, range(1, s + 1)))
        for r, c in enumerate(piv):
            for j in range(c + 1, n):
                if j in piv:
                    continue
                slots.append((r, j, range(-s, s + 1)))
        for vals in iproduct(*(sl[2] for sl in slots)):
            M = [[0] * n for _ in range(rank)]
            for (r, c, _), v in zip(slots, vals):
                M[r][c] = v
            # entries above pivots
            above = [(i, r, c) for r, c in enumerate(piv) for i in range(r)]
            for extra in iproduct(*(range(M[r][c]) for i, r, c in above)):
                for (i, r, c), v in zip(above, extra):
                    M[i][c] = v
                if max(abs(x) for row in M for x in row) == s:
                    yield tuple(tuple(row) for row in M)


def q_wedge_rank(h: Wedge, cbars: Sequence[Vec], n: int) -> int:
    """Rank of h viewed in Λ²(Q^n / span c̄)."""
    rows = [list(c) for c in cbars if any(c)]
    if rows:
        H, U = hnf_with_transform(transpose(rows))
        # rows of U whose H-row vanishes annihilate every c̄
        ann = [U[i] for i in range(n) if not any(H[i])]
    else:
        ann = [[int(i == j) for j in range(n)] for i in range(n)]
    if not ann:
        return 0
    M = matmul(matmul(ann, h.to_matrix()), transpose(ann))
    return _rank_q(M)


def _rank_q(M: list[list[int]]) -> int:
    A = [[Fraction(x) for x in row] for row in M]
    rank = 0
    cols = len(A[0]) if A else 0
    for c in range(cols):
        piv = next((i for i in range(rank, len(A)) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        for i in range(len(A)):
            if i != rank and A[i][c] != 0:
                f = A[i][c] / A[rank][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[rank])]
        rank += 1
    return rank


def max_l_rank(sys_: ReductionSystem) -> int:
    q = Lattice(sys_.n, sys_.cbars).rank
    p = q_wedge_rank(sys_.h, sys_.cbars, sys_.n) // 2
    g = sys_.g
    return min(sys_.n, q + min(2 * g, g + p))


@dataclass
class LCaps:
    entry_cap: int = 2
    max_candidates: int = 20000
    certify_budget: int = 200000


@dataclass
class LEnumeration:
    """Stream of candidate subgroups L; inspect ``certified`` after exhausting it."""

    sys: ReductionSystem
    caps: LCaps = field(default_factory=LCaps)
    certified: bool = False
    truncated: bool = False
    report: dict = field(default_factory=dict)

    def __iter__(self) -> Iterator[Lattice]:
        s = self.sys
        n = s.n
        Q = Lattice(n, s.cbars)
        if s.g == 0:
            self.certified = True
            self.report = {"mode": "L = Q (genus 0)"}
            if check_projection(s, Q):
                yield Q
            return
        kmin, kmax = Q.rank, max_l_rank(s)
        B, info = system_basis_bound(s)
        need = max((certified_entry_cap(k, B) for k in range(max(kmin, 1), kmax + 1)), default=0)
        cap = self.caps.entry_cap
        est = sum(hnf_count_estimate(n, k, need) for k in range(kmin, kmax + 1))
        if need > cap and est <= self.caps.certify_budget:
            cap = need
        self.report = dict(info, rank_range=[kmin, kmax], entry_cap=cap, certify_cap=need,
                           estimate=est)
        count = 0
        seen: set = set()
        for k in range(kmin, kmax + 1):
            shells = [0] if k == 0 else range(1, cap + 1)
            for sh in shells:
                for L in _hnf_batch(n, k, sh):
                    if L in seen:
                        continue
                    seen.add(L)
                    if not L.contains(Q):
                        continue
                    if not check_projection(s, L):
                        continue
                    count += 1
                    if count > self.caps.max_candidates:
                        self.truncated = True
                        self.report["truncated_at"] = count
                        return
                    yield L
        self.certified = cap >= need
        self.report["candidates"] = count


@lru_cache(maxsize=4096)
def _hnf_batch(n: int, k: int, sh: int) -> tuple[Lattice, ...]:
    if k == 0:
        return (Lattice(n, []),)
    batch = sorted(_hnf_matrices(n, k, sh), key=lambda M: (_pivot_product(M), M))
    return tuple(Lattice(n, M) for M in batch)


def _pivot_product(M) -> int:
    p = 1
    for row in M:
        p *= next(x for x in row if x)
    return p


def enumerate_L(sys_: ReductionSystem, caps: LCaps | None = None) -> LEnumeration:
    return LEnumeration(sys_, caps or LCaps())


# --------------------------------------------------------------------------
# reduced problem


@dataclass
class ReducedProblem:
    sys: ReductionSystem
    L: Lattice
    Q: Lattice
    f: tuple[Vec, ...]                # HNF basis of L
    h_f: Wedge                        # h in Λ²(L), basis f
    k_gens: list[Wedge]               # c̄_i ∧ f_j in basis f
    h_rep: Wedge                      # canonical h mod K, basis f
    snf: SnfDecomposition
    fprime: tuple[Vec, ...]           # SNF-adapted basis of L
    d: list[int]                      # SNF diagonal (length rank L)
    h_prime: Wedge                    # h in basis f'
    r_idx: list[int]                  # indices of f' surviving in R = L/Q
    mods: list[int]                   # 0 for free summands, d_j for torsion
    h_R: dict[tuple[int, int], int]   # h in Λ²(R), positions in r_idx
    g: int

    @property
    def free_rank(self) -> int:
        return sum(1 for d in self.mods if d == 0)

    @property
    def q(self) -> int:
        return len(self.mods)

    def to_R(self, x: Sequence[int]) -> Vec:
        """R-coordinates of a vector of L (torsion entries reduced)."""
        a = self.L.coords(tuple(x))
        if a is None:
            raise CandidateInfeasible("vector outside L")
        V = self.snf.V
        k = len(self.f)
        ap = [sum(a[l] * V[l][j] for l in range(k)) for j in range(k)]
        return tuple(ap[j] % d if d else ap[j] for j, d in zip(self.r_idx, self.mods))

    def lift_R(self, coords: Sequence[int]) -> Vec:
        """Vector of L with the given R-coordinates (zero on d=1 summands)."""
        n = self.L.n
        out = [0] * n
        for c, j in zip(coords, self.r_idx):
            if c:
                for t in range(n):
                    out[t] += c * self.fprime[j][t]
        return tuple(out)


def _gmod(a: int, b: int) -> int:
    return gcd(a, b)


def build_reduced(sys_: ReductionSystem, L: Lattice) -> ReducedProblem:
    n = sys_.n
    f = L.basis
    k = len(f)
    pairs = pair_index(k)
    # h inside Λ²(L)
    gens = [wedge(f[a], f[b]).to_vector() for a, b in pairs]
    W2 = Lattice(len(pair_index(n)), gens) if gens else Lattice(len(pair_index(n)))
    hv = sys_.h.to_vector()
    coeffs = W2.express(hv) if gens else ([] if not any(hv) else None)
    if coeffs is None:
        raise CandidateInfeasible("h does not lie in the exterior square of L")
    h_f = Wedge(k, dict(zip(pairs, coeffs)))
    qs = []
    for c in sys_.cbars:
        cc = L.coords(c)
        if cc is None:
            raise CandidateInfeasible("coefficient abelianization outside L")
        qs.append(cc)
    k_gens = []
    for q in qs:
        for b in range(k):
            e = [int(i == b) for i in range(k)]
            w = wedge(q, e)
            if not w.is_zero():
                k_gens.append(w)
    h_rep = wedge_mod_subgroup(h_f, k_gens) if k else h_f
    snf = snf_with_transform(qs, k) if qs else snf_with_transform([], k)
    d = list(snf.diagonal) + [0] * (k - len(snf.diagonal))
    V = snf.V if k else []
    Vinv = [[int(x) for x in row] for row in inverse_fraction(V)] if k else []
    fprime = tuple(tuple(sum(Vinv[j][l] * f[l][t] for l in range(k)) for t in range(n))
                   for j in range(k))
    h_prime = wedge_change_basis(h_f, Vinv) if k else h_f
    free = [j for j in range(k) if d[j] == 0]
    tors = sorted((j for j in range(k) if d[j] > 1), key=lambda j: (d[j], j))
    r_idx = free + tors
    mods = [d[j] for j in r_idx]
    h_R: dict[tuple[int, int], int] = {}
    for a in range(len(r_idx)):
        for b in range(a + 1, len(r_idx)):
            ja, jb = r_idx[a], r_idx[b]
            val = h_prime.coords.get((ja, jb), 0) if ja < jb else -h_prime.coords.get((jb, ja), 0)
            mod = _gmod(mods[a], mods[b])
            if mod:
                val %= mod
            if val:
                h_R[(a, b)] = val
    Q = Lattice(n, sys_.cbars)
    return ReducedProblem(sys_, L, Q, f, h_f, k_gens, h_rep, snf, fprime, d, h_prime,
                          r_idx, mods, h_R, sys_.g)


# --------------------------------------------------------------------------
# repair


def repair_wbar(sys_: ReductionSystem, L: Lattice, defect: Wedge) -> tuple[Vec, ...]:
    """Shift w̄_i inside L so that h gains exactly ``defect`` (which must lie in K)."""
    n = sys_.n
    if defect.is_zero():
        return sys_.wbars
    slots = []
    gens = []
    for i, c in enumerate(sys_.cbars):
        if not any(c):
            continue
        for b, fb in enumerate(L.basis):
            w = wedge(fb, c)
            slots.append((i, b))
            gens.append(w.to_vector())
    if not gens:
        raise RepairError("defect is nonzero but K is trivial")
    lat = Lattice(len(pair_index(n)), gens)
    y = lat.express(defect.to_vector())
    if y is None:
        raise RepairError("defect does not lie in K")
    new = [list(w) for w in sys_.wbars]
    for (i, b), coef in zip(slots, y):
        if coef:
            for t in range(n):
                new[i][t] += coef * L.basis[b][t]
    return tuple(tuple(w) for w in new)
