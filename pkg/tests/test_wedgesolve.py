import random

import pytest

from metaquad.wedgesolve import (InvalidMove, SymplecticMove, WedgeCaps, WedgeProblem,
                                 apply_move, brute_force, free_construct, free_criterion,
                                 normalize_first_pair, skew_normal_form, solve, span_key,
                                 wedge_total)
from metaquad.zlattice import Lattice

from support import mat_mul

KINDS = ("S1", "S2u", "S2v", "S3", "S4")


def random_move(rng, g):
    kind = rng.choice(KINDS if g > 1 else ("S2u", "S2v"))
    i = rng.randrange(g)
    j = rng.choice([x for x in range(g) if x != i]) if kind in ("S1", "S3", "S4") else -1
    return SymplecticMove(kind, i, j, rng.randint(-3, 3))


def random_tuple(rng, g, k, lo=-4, hi=4):
    return [tuple(rng.randint(lo, hi) for _ in range(k)) for _ in range(2 * g)]


class TestMoves:
    def test_each_kind(self):
        T = [(1, 0), (0, 1), (2, 3), (1, 1)]
        for kind in KINDS:
            mv = SymplecticMove(kind, 0, 1, 2)
            out = apply_move(T, mv, check=True)
            assert wedge_total(out) == wedge_total(T)

    def test_definitions(self):
        T = [(1, 0), (0, 1), (2, 3), (1, 1)]
        assert apply_move(T, SymplecticMove("S1", 0, 1)) == [(2, 3), (1, 1), (1, 0), (0, 1)]
        assert apply_move(T, SymplecticMove("S2u", 0, t=2))[0] == (1, 2)
        assert apply_move(T, SymplecticMove("S2v", 0, t=2))[1] == (2, 1)
        out = apply_move(T, SymplecticMove("S3", 0, 1, 1))
        assert out[0] == (3, 3) and out[3] == (1, 0)
        out = apply_move(T, SymplecticMove("S4", 0, 1, 1))
        assert out[0] == (2, 1) and out[2] == (2, 4)

    def test_invalid(self):
        T = [(1, 0), (0, 1)]
        with pytest.raises(InvalidMove):
            apply_move(T, SymplecticMove("S3", 0, 0, 1))
        with pytest.raises(InvalidMove):
            apply_move(T, SymplecticMove("S2u", 3, t=1))
        with pytest.raises(InvalidMove):
            apply_move(T, SymplecticMove("S9", 0))

    def test_random_sequences(self):
        rng = random.Random(1)
        for _ in range(200):
            g, k = rng.randint(1, 3), rng.randint(1, 4)
            T = random_tuple(rng, g, k)
            w0, s0 = wedge_total(T), span_key(T)
            for _ in range(10):
                T = apply_move(T, random_move(rng, g))
            assert wedge_total(T) == w0
            assert span_key(T) == s0


class TestNormalizeFirstPair:
    def test_random(self):
        rng = random.Random(2)
        done = 0
        while done < 100:
            g, k = rng.randint(1, 3), rng.randint(1, 3)
            T = random_tuple(rng, g, k, -3, 3)
            B = list(Lattice(k, T).basis)
            if not B:
                continue
            done += 1
            out, moves = normalize_first_pair(T, B)
            assert out[0] == B[0]
            assert wedge_total(out) == wedge_total(T)
            assert span_key(out) == span_key(T)
            replay = T
            for mv in moves:
                replay = apply_move(replay, mv)
            assert replay == out

    def test_empty_subgroup(self):
        with pytest.raises(ValueError):
            normalize_first_pair([(0,), (0,)], [])


class TestSkewNormalForm:
    def test_random(self):
        rng = random.Random(3)
        for _ in range(150):
            r = rng.randint(0, 6)
            H = [[0] * r for _ in range(r)]
            for i in range(r):
                for j in range(i + 1, r):
                    H[i][j] = rng.randint(-6, 6)
                    H[j][i] = -H[i][j]
            snf = skew_normal_form(H)
            P = snf.P
            Pt = [list(c) for c in zip(*P)] if r else []
            B = mat_mul(mat_mul(P, H), Pt) if r else []
            for i in range(r):
                for j in range(r):
                    want = 0
                    b = i // 2
                    if b < snf.p and {i, j} == {2 * b, 2 * b + 1}:
                        want = snf.blocks[b] if i < j else -snf.blocks[b]
                    assert B[i][j] == want
            assert all(snf.blocks[t + 1] % snf.blocks[t] == 0 for t in range(snf.p - 1))
            assert 2 * snf.p + snf.radical == r


class TestSolve:
    def test_rank_obstruction(self):
        assert solve(WedgeProblem([0, 0], {}, 1)).status == "UNSAT"

    def test_symplectic_plane(self):
        res = solve(WedgeProblem([0, 0], {(0, 1): 1}, 1))
        assert res.status == "SAT"
        assert WedgeProblem([0, 0], {(0, 1): 1}, 1).check(res.T)

    def test_scaled_plane_needs_two_handles(self):
        assert solve(WedgeProblem([0, 0], {(0, 1): 2}, 1)).status == "UNSAT"
        res = solve(WedgeProblem([0, 0], {(0, 1): 2}, 2))
        assert res.status == "SAT"

    def test_too_many_generators(self):
        assert solve(WedgeProblem([0, 0, 0], {}, 1)).status == "UNSAT"

    def test_rejects_non_chain_moduli(self):
        with pytest.raises(ValueError):
            WedgeProblem([0, 3, 4], {}, 1)
        with pytest.raises(ValueError):
            WedgeProblem([2, 0], {}, 1)

    def test_trivial_R(self):
        assert solve(WedgeProblem([], {}, 2)).status == "SAT"

    def test_torsion(self):
        prob = WedgeProblem([2, 2], {(0, 1): 1}, 1)
        res = solve(prob)
        assert res.status == "SAT" and prob.check(res.T)
        prob = WedgeProblem([2, 2], {}, 1)
        res = solve(prob)
        assert res.status in ("UNSAT", "UNKNOWN")
        assert brute_force(prob) is None

    def test_free_construct_random(self):
        rng = random.Random(4)
        for _ in range(100):
            r, g = rng.randint(1, 4), rng.randint(1, 3)
            H = [[0] * r for _ in range(r)]
            for i in range(r):
                for j in range(i + 1, r):
                    H[i][j] = rng.randint(-3, 3)
                    H[j][i] = -H[i][j]
            T = free_construct(H, g)
            ok, _ = free_criterion(H, g)
            assert (T is not None) == ok
            if T is not None:
                h = {(i, j): H[i][j] for i in range(r) for j in range(i + 1, r) if H[i][j]}
                assert WedgeProblem([0] * r, h, g).check(T)

    def test_against_brute_force(self):
        rng = random.Random(5)
        for _ in range(120):
            r = rng.randint(0, 2)
            tors = rng.choice([[], [2], [3], [2, 2], [2, 4], [3, 6]][: 6 if r < 2 else 3])
            mods = [0] * r + tors
            q = len(mods)
            g = rng.randint(1, 2)
            h = {}
            for a in range(q):
                for b in range(a + 1, q):
                    x = rng.randint(-2, 2)
                    if x:
                        h[(a, b)] = x
            prob = WedgeProblem(mods, h, g)
            h = prob.reduce_wedge(h)
            prob = WedgeProblem(mods, h, g)
            res = solve(prob, WedgeCaps(shell_cap=2, max_nodes=50000))
            bf = brute_force(prob, box=2) if (q * 2 * g) <= 8 else None
            if res.status == "SAT":
                assert prob.check(res.T)
            if res.status == "UNSAT":
                assert bf is None
            if bf is not None:
                assert res.status != "UNSAT"
