"""Exact integer linear algebra over Z.

Row-style Hermite and Smith normal forms with unimodular transforms,
subgroups of Z^n with canonical coset representatives, Hermite-reduced
bases in rational arithmetic, and the exterior square of a free Z-module.
Matrices are plain lists of lists of Python ints.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import gcd, prod
from typing import Iterable, Mapping, Sequence

log = logging.getLogger(__name__)

IntMatrix = list[list[int]]
Vec = tuple[int, ...]


# --------------------------------------------------------------------------
# small matrix helpers


def identity(n: int) -> IntMatrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(A: Sequence[Sequence], B: Sequence[Sequence]) -> list[list]:
    if not A:
        return []
    inner = len(B)
    cols = len(B[0]) if B else 0
    return [[sum(A[i][k] * B[k][j] for k in range(inner)) for j in range(cols)]
            for i in range(len(A))]


def transpose(A: Sequence[Sequence]) -> list[list]:
    return [list(r) for r in zip(*A)] if A else []


def det(M: Sequence[Sequence[int]]) -> int:
    """Bareiss fraction-free determinant."""
    n = len(M)
    if n == 0:
        return 1
    A = [list(r) for r in M]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k]:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def inverse_fraction(M: Sequence[Sequence[int]]) -> list[list[Fraction]]:
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(M)]
    for c in range(n):
        piv = next((i for i in range(c, n) if A[i][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        A[c], A[piv] = A[piv], A[c]
        p = A[c][c]
        A[c] = [x / p for x in A[c]]
        for i in range(n):
            if i != c and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[c])]
    return [row[n:] for row in A]


def max_abs(M: Sequence[Sequence[int]]) -> int:
    return max((abs(x) for row in M for x in row), default=0)


# --------------------------------------------------------------------------
# Hermite normal form


def hnf_with_transform(M: Sequence[Sequence[int]], ncols: int | None = None) -> tuple[IntMatrix, IntMatrix]:
    """Return ``(H, U)`` with ``H = U M``, ``U`` unimodular, ``H`` in row HNF.

    Pivot columns strictly increase, pivots are positive, entries above a
    pivot lie in ``[0, pivot)``, zero rows come last.
    """
    A = [list(r) for r in M]
    m = len(A)
    if ncols is None:
        ncols = len(A[0]) if m else 0
    U = identity(m)

    def sub(i: int, r: int, q: int) -> None:
        if q:
            Ai, Ar = A[i], A[r]
            for j in range(ncols):
                Ai[j] -= q * Ar[j]
            Ui, Ur = U[i], U[r]
            for j in range(m):
                Ui[j] -= q * Ur[j]

    r = 0
    for c in range(ncols):
        if r == m:
            break
        while True:
            nz = [i for i in range(r, m) if A[i][c]]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(A[i][c]))
            if piv != r:
                A[r], A[piv] = A[piv], A[r]
                U[r], U[piv] = U[piv], U[r]
            clean = True
            for i in range(r + 1, m):
                if A[i][c]:
                    sub(i, r, A[i][c] // A[r][c])
                    if A[i][c]:
                        clean = False
            if clean:
                break
        if A[r][c] == 0:
            continue
        if A[r][c] < 0:
            A[r] = [-x for x in A[r]]
            U[r] = [-x for x in U[r]]
        p = A[r][c]
        for i in range(r):
            sub(i, r, A[i][c] // p)
        r += 1
    return A, U


def hnf(M: Sequence[Sequence[int]]) -> IntMatrix:
    return hnf_with_transform(M)[0]


def is_row_hnf(H: Sequence[Sequence[int]]) -> bool:
    last = -1
    seen_zero = False
    pivots = []
    for row in H:
        nz = next((j for j, x in enumerate(row) if x), None)
        if nz is None:
            seen_zero = True
            continue
        if seen_zero or nz <= last or row[nz] <= 0:
            return False
        pivots.append((len(pivots), nz))
        last = nz
    for r, c in pivots:
        for i in range(r):
            if not 0 <= H[i][c] < H[r][c]:
                return False
    return True


# --------------------------------------------------------------------------
# Smith normal form


@dataclass
class SnfDecomposition:
    S: IntMatrix
    U: IntMatrix
    V: IntMatrix
    diagonal: list[int]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d)

    def invariant_factors(self) -> list[int]:
        """Nonunit nonzero diagonal entries."""
        return [d for d in self.diagonal if d > 1]


def snf_with_transform(M: Sequence[Sequence[int]], ncols: int | None = None) -> SnfDecomposition:
    A = [list(r) for r in M]
    m = len(A)
    n = ncols if ncols is not None else (len(A[0]) if m else 0)
    U = identity(m)
    V = identity(n)

    def row_sub(i, r, q):
        if q:
            A[i] = [a - q * b for a, b in zip(A[i], A[r])]
            U[i] = [a - q * b for a, b in zip(U[i], U[r])]

    def col_sub(j, c, q):
        if q:
            for row in A:
                row[j] -= q * row[c]
            for row in V:
                row[j] -= q * row[c]

    def swap_rows(i, j):
        if i != j:
            A[i], A[j] = A[j], A[i]
            U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        if i != j:
            for row in A:
                row[i], row[j] = row[j], row[i]
            for row in V:
                row[i], row[j] = row[j], row[i]

    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if A[i][j] and (best is None or abs(A[i][j]) < abs(A[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        swap_rows(t, best[0])
        swap_cols(t, best[1])
        while True:
            dirty = False
            for i in range(t + 1, m):
                if A[i][t]:
                    row_sub(i, t, A[i][t] // A[t][t])
                    dirty = dirty or A[i][t] != 0
            for j in range(t + 1, n):
                if A[t][j]:
                    col_sub(j, t, A[t][j] // A[t][t])
                    dirty = dirty or A[t][j] != 0
            if dirty:
                cand = [(abs(A[i][t]), i, t) for i in range(t + 1, m) if A[i][t]]
                cand += [(abs(A[t][j]), t, j) for j in range(t + 1, n) if A[t][j]]
                _, i, j = min(cand)
                swap_rows(t, i)
                swap_cols(t, j)
                continue
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n)
                        if A[i][j] % A[t][t]), None)
            if bad is None:
                break
            A[t] = [a + b for a, b in zip(A[t], A[bad[0]])]
            U[t] = [a + b for a, b in zip(U[t], U[bad[0]])]
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            U[t] = [-x for x in U[t]]
        t += 1
    diag = [A[i][i] for i in range(min(m, n))]
    bound_r = max(m, n)
    norm = max_abs(M)
    if norm and bound_r:
        bound = bound_r ** (4 * bound_r + 5) * norm ** (4 * bound_r + 1)
        if max(max_abs(U), max_abs(V)) > bound:
            log.warning("SNF transform entries exceed the textbook size bound")
    return SnfDecomposition(A, U, V, diag)


# --------------------------------------------------------------------------
# subgroups of Z^n


class Lattice:
    """Finitely generated subgroup of Z^n, canonically given by its row HNF."""

    __slots__ = ("n", "gens", "basis", "pivots", "_transform", "_hash")

    def __init__(self, n: int, gens: Iterable[Iterable[int]] = ()):
        self.n = n
        self.gens = [tuple(g) for g in gens]
        for g in self.gens:
            if len(g) != n:
                raise ValueError(f"generator {g} not in Z^{n}")
        H, U = hnf_with_transform(self.gens, n)
        rank = sum(1 for row in H if any(row))
        self.basis: tuple[Vec, ...] = tuple(tuple(row) for row in H[:rank])
        self._transform = U[:rank]
        self.pivots = tuple(next(j for j, x in enumerate(row) if x) for row in self.basis)
        self._hash = None

    @classmethod
    def from_basis(cls, n: int, rows: Iterable[Iterable[int]]) -> "Lattice":
        return cls(n, rows)

    @classmethod
    def zero(cls, n: int) -> "Lattice":
        return cls(n)

    @classmethod
    def full(cls, n: int) -> "Lattice":
        return cls(n, identity(n))

    @property
    def rank(self) -> int:
        return len(self.basis)

    def key(self) -> tuple[Vec, ...]:
        return self.basis

    def __eq__(self, other) -> bool:
        return isinstance(other, Lattice) and self.n == other.n and self.basis == other.basis

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n, self.basis))
        return self._hash

    def __repr__(self) -> str:
        return f"Lattice(n={self.n}, basis={list(self.basis)})"

    def reduce(self, x: Iterable[int]) -> Vec:
        """Canonical coset representative: pivot coordinates in [0, pivot)."""
        v = list(x)
        for row, c in zip(self.basis, self.pivots):
            q = v[c] // row[c]
            if q:
                for j in range(c, self.n):
                    v[j] -= q * row[j]
        return tuple(v)

    def coords(self, x: Iterable[int]) -> list[int] | None:
        """Coefficients of ``x`` in the HNF basis, or None when x is not in L."""
        v = list(x)
        out = []
        for row, c in zip(self.basis, self.pivots):
            q, r = divmod(v[c], row[c])
            if r:
                return None
            out.append(q)
            if q:
                for j in range(c, self.n):
                    v[j] -= q * row[j]
        if any(v):
            return None
        return out

    def express(self, x: Iterable[int]) -> list[int] | None:
        """Integer coefficients of ``x`` over the original generators."""
        c = self.coords(x)
        if c is None:
            return None
        m = len(self.gens)
        return [sum(c[i] * self._transform[i][j] for i in range(len(c))) for j in range(m)]

    def member(self, x: Iterable[int]) -> bool:
        return not any(self.reduce(x))

    def coset_eq(self, x: Iterable[int], y: Iterable[int]) -> bool:
        return self.member(a - b for a, b in zip(x, y))

    def contains(self, other: "Lattice") -> bool:
        return all(self.member(b) for b in other.basis)

    def __add__(self, other: "Lattice") -> "Lattice":
        return Lattice(self.n, self.basis + other.basis)

    def gram_det(self) -> int:
        """Vol(L)^2 = det(B B^T)."""
        B = [list(b) for b in self.basis]
        return det(matmul(B, transpose(B))) if B else 1

    def index_in_saturation(self) -> int:
        return gcd_of_minors(self.basis)


def gcd_of_minors(rows: Sequence[Sequence[int]]) -> int:
    """gcd of the maximal minors (the index of L in its saturation)."""
    k = len(rows)
    if k == 0:
        return 1
    n = len(rows[0])
    g = 0
    for cols in combinations(range(n), k):
        g = gcd(g, det([[r[c] for c in cols] for r in rows]))
        if g == 1:
            break
    return g


def member(L: Lattice, x: Iterable[int]) -> bool:
    return L.member(x)


def coset_eq(L: Lattice, x: Iterable[int], y: Iterable[int]) -> bool:
    return L.coset_eq(x, y)


# --------------------------------------------------------------------------
# Hermite-reduced bases

FOUR_THIRDS = Fraction(4, 3)


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def gram_schmidt(vectors: Sequence[Sequence[int]]) -> tuple[list[list[Fraction]], list[list[Fraction]]]:
    """Standard-order GSO: returns (b*, mu) with mu[i][j] = <b_i, b_j*>/|b_j*|^2."""
    gso: list[list[Fraction]] = []
    mu = [[Fraction(0)] * len(vectors) for _ in vectors]
    norms: list[Fraction] = []
    for i, b in enumerate(vectors):
        v = [Fraction(x) for x in b]
        for j in range(i):
            if norms[j]:
                mu[i][j] = _dot(b, gso[j]) / norms[j]
                v = [a - mu[i][j] * c for a, c in zip(v, gso[j])]
        gso.append(v)
        norms.append(_dot(v, v))
    return gso, mu


@dataclass
class ReducedBasis:
    """Basis b_1..b_r; ``gso[i]`` is b_i* orthogonalized starting from b_r."""

    vectors: list[Vec]
    gso: list[list[Fraction]] = field(repr=False)

    @property
    def rank(self) -> int:
        return len(self.vectors)

    def gso_norms2(self) -> list[Fraction]:
        return [_dot(v, v) for v in self.gso]

    def check_ratio(self) -> bool:
        """|b_i*| >= (sqrt3/2) |b_{i+1}*| for every i."""
        n2 = self.gso_norms2()
        return all(4 * n2[i] >= 3 * n2[i + 1] for i in range(len(n2) - 1))

    def check_size(self) -> bool:
        """|b_i . b_j*| <= |b_j*|^2 / 2 for i < j."""
        n2 = self.gso_norms2()
        for j in range(self.rank):
            for i in range(j):
                if 2 * abs(_dot(self.vectors[i], self.gso[j])) > n2[j]:
                    return False
        return True

    def vol2(self) -> Fraction:
        return prod(self.gso_norms2(), start=Fraction(1))

    def check_length_bound(self) -> bool:
        """|b_i| < 2^r omega^{-r(r-1)/2} Vol(L), squared and exact."""
        r = self.rank
        # squaring: omega^{-2} = 4/3, so the exponent stays integral
        rhs = Fraction(4) ** r * FOUR_THIRDS ** (r * (r - 1) // 2) * self.vol2()
        return all(_dot(b, b) < rhs for b in self.vectors)


def _reverse_gso(vectors: Sequence[Vec]) -> list[list[Fraction]]:
    gso, _ = gram_schmidt(list(reversed(vectors)))
    return list(reversed(gso))


class ReductionStall(RuntimeError):
    pass


def _lll_exact(basis: list[list[int]], max_steps: int) -> list[list[int]]:
    """Exact LLL with Lovasz parameter 1 on an independent basis."""
    b = [list(v) for v in basis]
    k = 1
    steps = 0
    while k < len(b):
        steps += 1
        if steps > max_steps:
            raise ReductionStall(f"basis reduction exceeded {max_steps} steps")
        for j in range(k - 1, -1, -1):
            _, mu = gram_schmidt(b[: k + 1])
            q = (mu[k][j] + Fraction(1, 2)).__floor__()
            if q:
                b[k] = [x - q * y for x, y in zip(b[k], b[j])]
        gso, mu = gram_schmidt(b[: k + 1])
        if _dot(gso[k], gso[k]) >= (1 - mu[k][k - 1] ** 2) * _dot(gso[k - 1], gso[k - 1]):
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            k = max(k - 1, 1)
    return b


def reduce_basis(gens: Iterable[Iterable[int]], max_steps: int = 100_000) -> ReducedBasis:
    gens = [tuple(g) for g in gens]
    if not gens:
        return ReducedBasis([], [])
    n = len(gens[0])
    L = Lattice(n, gens)
    if L.rank == 0:
        return ReducedBasis([], [])
    # orthogonalization runs from b_r, so reduce the reversed list
    rev = _lll_exact([list(b) for b in reversed(L.basis)], max_steps)
    vectors = [tuple(v) for v in reversed(rev)]
    rb = ReducedBasis(vectors, _reverse_gso(vectors))
    if not (rb.check_ratio() and rb.check_size()):
        raise AssertionError("reduced basis failed its own certification")
    if Lattice(n, vectors) != L:
        raise AssertionError("basis reduction changed the lattice")
    return rb


# --------------------------------------------------------------------------
# exterior square


class WedgeError(ValueError):
    pass


class Wedge:
    """Element of the exterior square of Z^k in the basis b_i ^ b_j (i < j)."""

    __slots__ = ("rank", "coords")

    def __init__(self, rank: int, coords: Mapping[tuple[int, int], int] | None = None):
        self.rank = rank
        self.coords = {}
        for (i, j), v in (coords or {}).items():
            if not 0 <= i < j < rank:
                raise WedgeError(f"bad wedge index {(i, j)} for rank {rank}")
            if v:
                self.coords[(i, j)] = v

    @classmethod
    def zero(cls, rank: int) -> "Wedge":
        return cls(rank)

    @classmethod
    def from_matrix(cls, M: Sequence[Sequence[int]]) -> "Wedge":
        k = len(M)
        return cls(k, {(i, j): M[i][j] for i in range(k) for j in range(i + 1, k)})

    @classmethod
    def from_vector(cls, rank: int, vec: Sequence[int]) -> "Wedge":
        return cls(rank, dict(zip(pair_index(rank), vec)))

    def to_matrix(self) -> IntMatrix:
        M = [[0] * self.rank for _ in range(self.rank)]
        for (i, j), v in self.coords.items():
            M[i][j] = v
            M[j][i] = -v
        return M

    def to_vector(self) -> list[int]:
        return [self.coords.get(p, 0) for p in pair_index(self.rank)]

    def _check(self, other: "Wedge") -> None:
        if self.rank != other.rank:
            raise WedgeError(f"rank {self.rank} vs {other.rank}")

    def __add__(self, other: "Wedge") -> "Wedge":
        self._check(other)
        c = dict(self.coords)
        for k, v in other.coords.items():
            c[k] = c.get(k, 0) + v
        return Wedge(self.rank, c)

    def __neg__(self) -> "Wedge":
        return Wedge(self.rank, {k: -v for k, v in self.coords.items()})

    def __sub__(self, other: "Wedge") -> "Wedge":
        return self + (-other)

    def __rmul__(self, s: int) -> "Wedge":
        return Wedge(self.rank, {k: s * v for k, v in self.coords.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, Wedge) and self.rank == other.rank and self.coords == other.coords

    def __hash__(self) -> int:
        return hash((self.rank, frozenset(self.coords.items())))

    def is_zero(self) -> bool:
        return not self.coords

    def norm2(self) -> int:
        return sum(v * v for v in self.coords.values())

    def max_abs(self) -> int:
        return max((abs(v) for v in self.coords.values()), default=0)

    def __repr__(self) -> str:
        return f"Wedge({self.rank}, {dict(sorted(self.coords.items()))})"

    def to_json(self) -> list:
        return [[i + 1, j + 1, v] for (i, j), v in sorted(self.coords.items())]


def pair_index(k: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(k) for j in range(i + 1, k)]


def wedge(u: Sequence[int], v: Sequence[int]) -> Wedge:
    if len(u) != len(v):
        raise WedgeError(f"length mismatch {len(u)} vs {len(v)}")
    k = len(u)
    return Wedge(k, {(i, j): u[i] * v[j] - u[j] * v[i] for i, j in pair_index(k)})


def wedge_sum(pairs: Iterable[tuple[Sequence[int], Sequence[int]]], rank: int) -> Wedge:
    acc = Wedge.zero(rank)
    for u, v in pairs:
        acc = acc + wedge(u, v)
    return acc


def wedge_change_basis(w: Wedge, P: Sequence[Sequence[int]]) -> Wedge:
    """Rewrite ``w`` in the basis whose i-th vector is row i of ``P``.

    With W the skew matrix of w, the new matrix is P^-T W P^-1; it must be
    integral.
    """
    k = w.rank
    if len(P) != k or any(len(r) != k for r in P):
        raise WedgeError("basis change must be a square matrix of the wedge rank")
    Pinv = inverse_fraction(P)
    W = w.to_matrix()
    Wn = matmul(matmul(transpose(Pinv), W), Pinv)
    coords = {}
    for i, j in pair_index(k):
        x = Wn[i][j]
        if x.denominator != 1:
            raise WedgeError("wedge is not integral in the new basis")
        coords[(i, j)] = int(x)
    return Wedge(k, coords)


def wedge_mod_subgroup(x: Wedge, kgens: Iterable[Wedge]) -> Wedge:
    """Canonical representative of ``x`` modulo the subgroup spanned by ``kgens``."""
    pairs = pair_index(x.rank)
    L = Lattice(len(pairs), [g.to_vector() for g in kgens])
    return Wedge(x.rank, dict(zip(pairs, L.reduce(x.to_vector()))))


# --------------------------------------------------------------------------
# sparse integer systems


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def _sparse_comb(a: dict, b: dict, s: int, t: int) -> dict:
    """s*a + t*b without zero entries."""
    out = {k: s * v for k, v in a.items()} if s else {}
    if t:
        for k, v in b.items():
            x = out.get(k, 0) + t * v
            if x:
                out[k] = x
            else:
                out.pop(k, None)
    return out


class SparseIntSolver:
    """Incremental echelon basis of the Z-span of sparse integer columns.

    Columns are dicts key -> int over a totally ordered key set.  Each basis
    vector remembers how it was built from the inserted columns, so a target
    in the span can be written as an explicit integer combination.
    """

    def __init__(self):
        self.basis: dict = {}      # pivot key -> (vector, combination)
        self.ncols = 0

    def add(self, col: dict) -> int:
        idx = self.ncols
        self.ncols += 1
        v = {k: x for k, x in col.items() if x}
        comb = {idx: 1}
        while v:
            p = min(v)
            if p not in self.basis:
                self.basis[p] = (v, comb)
                return idx
            bv, bc = self.basis[p]
            a, b = bv[p], v[p]
            if b % a == 0:
                q = b // a
                v = _sparse_comb(v, bv, 1, -q)
                comb = _sparse_comb(comb, bc, 1, -q)
                continue
            g, s, t = _xgcd(a, b)
            nb = _sparse_comb(bv, v, s, t)
            nbc = _sparse_comb(bc, comb, s, t)
            v = _sparse_comb(bv, v, -b // g, a // g)
            comb = _sparse_comb(bc, comb, -b // g, a // g)
            self.basis[p] = (nb, nbc)
        return idx

    def solve(self, target: dict) -> dict | None:
        """Integer combination of inserted columns equal to ``target``, or None."""
        v = {k: x for k, x in target.items() if x}
        out: dict = {}
        while v:
            p = min(v)
            if p not in self.basis:
                return None
            bv, bc = self.basis[p]
            q, r = divmod(v[p], bv[p])
            if r:
                return None
            v = _sparse_comb(v, bv, 1, -q)
            out = _sparse_comb(out, bc, 1, q)
        return out
