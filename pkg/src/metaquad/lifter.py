"""Lifting abelian solutions to exact witnesses in M_n."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product as iproduct
from typing import Mapping, Sequence

from .mgroup import (Edge, MElem, add_into, commutator_word, free_reduce, inverse_word, phi,
                     sigma_of_word, square_chain, tau_L, word_for_vector)
from .qnormal import StandardEquation
from .reducer import h_for_wbars, l1, delta_for_wbars
from .zlattice import Lattice, SparseIntSolver, Wedge, wedge

log = logging.getLogger(__name__)

Vec = tuple[int, ...]
Witness = dict[str, tuple[int, ...]]


class LiftingIncomplete(RuntimeError):
    def __init__(self, msg: str, solution: "AbelianSolution"):
        super().__init__(msg)
        self.solution = solution


class InvalidAbelianSolution(ValueError):
    pass


@dataclass
class AbelianSolution:
    us: list[Vec]
    vs: list[Vec]
    wbars: list[Vec]
    L: Lattice

    @classmethod
    def checked(cls, eq: StandardEquation, us, vs, wbars) -> "AbelianSolution":
        us = [tuple(u) for u in us]
        vs = [tuple(v) for v in vs]
        wbars = [tuple(w) for w in wbars]
        n = eq.rank
        L = Lattice(n, us + vs + eq.cbars())
        sol = cls(us, vs, wbars, L)
        ok, why = sol.check(eq)
        if not ok:
            raise InvalidAbelianSolution(why)
        return sol

    def check(self, eq: StandardEquation) -> tuple[bool, str]:
        elems = eq.coeff_elems()
        cbars = [e.ab for e in elems]
        from .mgroup import product, project_chain
        prod = product(elems, eq.rank)
        if any(prod.ab):
            return False, "coefficient product not in M_n'"
        delta = delta_for_wbars(elems, self.wbars)
        if not project_chain(delta, self.L).is_zero():
            return False, "delta does not vanish modulo L"
        h = h_for_wbars(phi(prod), self.wbars, cbars)
        lhs = Wedge.zero(eq.rank)
        for u, v in zip(self.us, self.vs):
            lhs = lhs + wedge(u, v)
        if lhs != h:
            return False, "wedge sum differs from h"
        return True, ""


# --------------------------------------------------------------------------
# evaluation


def evaluate(eq: StandardEquation, w: Mapping[str, Sequence[int]]) -> MElem:
    """LHS · RHS^-1 under the assignment."""
    for name in eq.variables():
        if name not in w:
            raise KeyError(f"witness has no value for {name}")
    word: list[int] = []
    for x, y in zip(eq.xs, eq.ys):
        word.extend(commutator_word(tuple(w[x]), tuple(w[y])))
    rhs: list[int] = []
    for z, c in zip(eq.zs, eq.coeffs):
        zw = tuple(w[z])
        rhs.extend(zw + tuple(c) + inverse_word(zw))
    word.extend(inverse_word(rhs))
    return sigma_of_word(tuple(word), eq.rank)


def verify(eq: StandardEquation, w: Mapping[str, Sequence[int]]) -> bool:
    return evaluate(eq, w).is_identity()


# --------------------------------------------------------------------------
# lifting


def _box(points: Sequence[Vec], pad: int, n: int) -> list[range]:
    lo = [min(p[i] for p in points) - pad for i in range(n)]
    hi = [max(p[i] for p in points) + pad for i in range(n)]
    return [range(a, b + 1) for a, b in zip(lo, hi)]


def _neg(v: Vec) -> Vec:
    return tuple(-x for x in v)


def _add(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def _sub(a: Vec, b: Vec) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def _diff_column(n: int, i: int, j: int, t: Vec, step: Vec, sign: int) -> dict[Edge, int]:
    """sign * (sq_t - sq_{t+step})."""
    col: dict[Edge, int] = {}
    add_into(col, square_chain(n, i, j, t), sign)
    add_into(col, square_chain(n, i, j, _add(t, step)), -sign)
    return col


# --------------------------------------------------------------------------
# 2-chains: keys (base, (i, j)) with i < j, the square of [a_i, a_j] at base

Square = tuple[Vec, tuple[int, int]]


def _unit(n: int, i: int) -> Vec:
    return tuple(int(k == i) for k in range(n))


def square_boundary(F: Mapping[Square, int], n: int) -> dict[Edge, int]:
    out: dict[Edge, int] = {}
    for (q, (i, j)), c in F.items():
        add_into(out, square_chain(n, i, j, q), c)
    return out


def fill_cycle(z: Mapping[Edge, int], n: int) -> dict[Square, int]:
    """A 2-chain F with boundary ``z`` (z must be a 1-cycle), by coordinate sweeps."""
    F: dict[Square, int] = {}
    rest = dict(z)
    for a in range(n):
        step: dict[Square, int] = {}
        for (p, d), c in rest.items():
            if d <= a or p[a] == 0:
                continue
            lo, hi, sgn = (0, p[a], 1) if p[a] > 0 else (p[a], 0, -1)
            for x in range(lo, hi):
                q = p[:a] + (x,) + p[a + 1:]
                key = (q, (a, d))
                v = step.get(key, 0) + sgn * c
                if v:
                    step[key] = v
                else:
                    step.pop(key, None)
        add_into(rest, square_boundary(step, n), -1)
        for k, v in step.items():
            nv = F.get(k, 0) + v
            if nv:
                F[k] = nv
            else:
                F.pop(k, None)
        if any(d == a for (_, d) in rest):
            raise AssertionError("chain is not a cycle")
    if rest:
        raise AssertionError("chain is not a cycle")
    return F


def cube_boundary(q: Vec, i: int, j: int, k: int, n: int) -> dict[Square, int]:
    """(X^i - 1)[j,k] - (X^j - 1)[i,k] + (X^k - 1)[i,j] at q."""
    out: dict[Square, int] = {}
    for sign, shift, pair in ((1, i, (j, k)), (-1, j, (i, k)), (1, k, (i, j))):
        q1 = _add(q, _unit(n, shift))
        for key, c in (((q1, pair), sign), ((q, pair), -sign)):
            v = out.get(key, 0) + c
            if v:
                out[key] = v
            else:
                out.pop(key, None)
    return out


def _coset_sums(F: Mapping[Square, int], L: Lattice) -> dict:
    out: dict = {}
    for (q, pair), c in F.items():
        key = (L.reduce(q), pair)
        v = out.get(key, 0) + c
        if v:
            out[key] = v
        else:
            out.pop(key, None)
    return out


def _cube_correction(F: dict[Square, int], L: Lattice, n: int, pad: int) -> dict[Square, int] | None:
    """F - ∂K with vanishing coset sums for a 3-chain K near supp F, or None."""
    target = _coset_sums(F, L)
    if not target:
        return F
    if n < 3:
        return None
    pts = [q for q, _ in F]
    box = _box(pts, pad, n)
    triples = [(i, j, k) for i in range(n) for j in range(i + 1, n) for k in range(j + 1, n)]
    solver = SparseIntSolver()
    cubes = []
    seen = set()
    for t in iproduct(*box):
        rep = L.reduce(t)
        for tr in triples:
            if (rep, tr) in seen:
                continue
            seen.add((rep, tr))
            col = _coset_sums(cube_boundary(rep, *tr, n), L)
            if col:
                solver.add(col)
                cubes.append((rep, tr))
    y = solver.solve(target)
    if y is None:
        return None
    out = dict(F)
    for idx, c in y.items():
        rep, tr = cubes[idx]
        for key, v in cube_boundary(rep, *tr, n).items():
            nv = out.get(key, 0) - c * v
            if nv:
                out[key] = nv
            else:
                out.pop(key, None)
    return out


def _split_power(a: int) -> list[tuple[int, int]]:
    """X^{a g} - 1 = Σ coef · X^{s g} (X^g - 1); returns (s, coef) terms."""
    if a > 0:
        return [(s, 1) for s in range(a)]
    return [(-s, -1) for s in range(1, -a + 1)]


def _structured_adjustments(F: dict[Square, int], L: Lattice, slots, n: int):
    """Write F as Σ y · X^t (X^{step} - 1) sq over slots; yields (slot, t, pair, y)."""
    steps = [s[1] for s in slots]
    SL = Lattice(n, steps)
    out: dict = {}
    for (q, pair), c in F.items():
        r = L.reduce(q)
        l = _sub(q, r)
        a = SL.express(l)
        if a is None:
            return None
        base = r
        for k, ak in enumerate(a):
            if not ak:
                continue
            for s, coef in _split_power(ak):
                t = _add(base, tuple(s * x for x in steps[k]))
                key = (k, t, pair)
                v = out.get(key, 0) + c * coef
                if v:
                    out[key] = v
                else:
                    out.pop(key, None)
            base = _add(base, tuple(ak * x for x in steps[k]))
    return out


def lift(eq: StandardEquation, sol: AbelianSolution, max_doublings: int = 4) -> Witness:
    n = eq.rank
    w: Witness = {}
    for k, (x, y) in enumerate(zip(eq.xs, eq.ys)):
        w[x] = word_for_vector(sol.us[k])
        w[y] = word_for_vector(sol.vs[k])
    for i, z in enumerate(eq.zs):
        w[z] = word_for_vector(sol.wbars[i])
    E = evaluate(eq, w)
    if E.is_identity():
        return w
    if any(E.ab):
        raise InvalidAbelianSolution("lifted error has nonzero abelianization")
    if not phi(E).is_zero() or not tau_L(E, sol.L).is_zero():
        raise AssertionError("lifted error is outside ker(phi) ∩ ker(tau_L)")
    # slots: (name, step, sign, offset) where column = sign*(sq_t - sq_{t+step})
    # and the conjugator p of the commutator satisfies p̄ = t - offset
    slots = []
    for k, (x, y) in enumerate(zip(eq.xs, eq.ys)):
        slots.append((x, sol.vs[k], 1, sol.us[k]))
        slots.append((y, sol.us[k], -1, sol.vs[k]))
    prefix = (0,) * n
    cb = eq.cbars()
    for i, z in enumerate(eq.zs):
        slots.append((z, cb[i], -1, _add(prefix, sol.wbars[i])))
        prefix = _add(prefix, cb[i])
    slots = [s for s in slots if any(s[1])]
    target = {e: -c for e, c in E.chain.items()}
    radius = max((l1(wb) for wb in sol.wbars), default=0) + sum(eq.coeff_lengths())
    adjusted = _lift_structured(eq, sol, w, slots, target, radius, max_doublings)
    if adjusted is not None:
        return adjusted
    log.info("structured lift failed; falling back to the windowed system")
    return _lift_windowed(eq, sol, w, slots, target, radius, max_doublings)


def _apply_adjustments(eq, w: Witness, items) -> Witness:
    """items: (slot name, conjugator vector, i, j, exponent)."""
    adj: dict[str, list[int]] = {}
    for name, pbar, i, j, coef in items:
        pw = word_for_vector(pbar)
        comm = pw + commutator_word((i + 1,), (j + 1,)) + inverse_word(pw)
        piece = comm if coef > 0 else inverse_word(comm)
        adj.setdefault(name, []).extend(piece * abs(coef))
    out = dict(w)
    for name, extra in adj.items():
        out[name] = free_reduce(tuple(out[name]) + tuple(extra))
    return out


def _lift_structured(eq, sol, w, slots, target, radius, max_doublings):
    n = eq.rank
    F = fill_cycle(target, n)
    pad = 1
    for _ in range(max_doublings + 2):
        F2 = _cube_correction(F, sol.L, n, pad)
        if F2 is not None:
            break
        pad *= 2
    else:
        return None
    split = _structured_adjustments(F2, sol.L, slots, n)
    if split is None:
        return None
    items = []
    for (k, t, pair), c in sorted(split.items()):
        name, step, sign, off = slots[k]
        # column_k(t) = -sign · X^t (X^step - 1) sq
        items.append((name, _sub(t, off), pair[0], pair[1], -sign * c))
    out = _apply_adjustments(eq, w, items)
    if not verify(eq, out):
        raise AssertionError("structured adjustment failed verification")
    return out


def _lift_windowed(eq, sol, w, slots, target, radius, max_doublings):
    n = eq.rank
    pts = [base for base, _ in target]
    pads = []
    p = 1
    while p < max(radius, 1):
        pads.append(p)
        p *= 2
    pads.append(max(radius, 1))
    for _ in range(max_doublings):
        pads.append(pads[-1] * 2)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    solver = SparseIntSolver()
    cols: list[tuple[str, Vec, int, int, int]] = []
    have: set = set()
    for pad in pads:
        box = _box(pts, pad, n)
        for t in iproduct(*box):
            for si, (name, step, sign, off) in enumerate(slots):
                for (i, j) in pairs:
                    key = (si, t, i, j)
                    if key in have:
                        continue
                    have.add(key)
                    solver.add(_diff_column(n, i, j, t, step, sign))
                    cols.append((name, _sub(t, off), i, j, si))
        y = solver.solve(target)
        if y is None:
            log.debug("lift window pad %d insufficient (%d columns)", pad, len(cols))
            continue
        items = [cols[idx][:4] + (y[idx],) for idx in sorted(y)]
        out = _apply_adjustments(eq, w, items)
        if not verify(eq, out):
            raise AssertionError("adjusted witness failed verification")
        return out
    raise LiftingIncomplete(f"adjustment system unsolved after pad {pads[-1]}", sol)
