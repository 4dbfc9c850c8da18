"""End-to-end decision procedure: verdicts, witnesses and certificates."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from itertools import product as iproduct
from typing import Any, Mapping, Sequence

from .lifter import AbelianSolution, InvalidAbelianSolution, LiftingIncomplete, lift, verify
from .mgroup import MalformedWord, format_word, free_reduce, parse_word, sigma_of_word
from .qnormal import (MixedWord, StandardEquation, Standardization, UnsupportedClass,
                      standardize, transport_solution)
from .reducer import (AbelianizationObstruction, CandidateInfeasible, LCaps, RepairError,
                      SystemCache, basis_bound_value, build_reduced, build_system,
                      ball_points, check_projection, enumerate_L, enumerate_wbars,
                      h_for_wbars, l1, repair_wbar,
                      wbar_radius, within_basis_bound)
from .wedgesolve import WedgeCaps, WedgeProblem
from .wedgesolve import solve as wedge_solve
from .zlattice import Lattice, Wedge, reduce_basis, wedge

log = logging.getLogger(__name__)

VERDICT_SCHEMA = "metaquad.verdict/1"
CERT_SCHEMA = "metaquad.certificate/1"

Vec = tuple[int, ...]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    l_entry_cap: int = 2
    l_max_candidates: int = 20000
    l_certify_budget: int = 200000
    shell_cap: int = 2
    wedge_max_nodes: int = 200000
    lift_doublings: int = 4
    max_wbars: int = 50000
    probe_budget: int = 20000
    jobs: int = 1

    def validate(self) -> "SolveConfig":
        for name, val in asdict(self).items():
            if not isinstance(val, int) or isinstance(val, bool):
                raise ConfigError(f"{name} must be an integer")
            if val < (0 if name in ("lift_doublings", "shell_cap", "probe_budget") else 1):
                raise ConfigError(f"{name} out of range: {val}")
        return self

    def l_caps(self) -> LCaps:
        return LCaps(self.l_entry_cap, self.l_max_candidates, self.l_certify_budget)

    def wedge_caps(self) -> WedgeCaps:
        return WedgeCaps(self.shell_cap, self.wedge_max_nodes)


# --------------------------------------------------------------------------
# preprocessing


@dataclass
class Prepared:
    """The equation actually searched, plus what is needed to map witnesses back."""

    source: StandardEquation | MixedWord
    std: Standardization | None
    full: StandardEquation
    eq: StandardEquation
    dropped: list[str]
    capped_handles: list[tuple[str, str]]

    def expand_witness(self, w: Mapping[str, Sequence[int]]) -> dict[str, tuple[int, ...]]:
        out = {k: tuple(v) for k, v in w.items()}
        for z in self.dropped:
            out[z] = ()
        for x, y in self.capped_handles:
            out[x] = ()
            out[y] = ()
        if self.std is not None:
            return transport_solution(self.std, out)
        return {name: out[name] for name in self.full.variables()}

    def check_source(self, w: Mapping[str, Sequence[int]]) -> bool:
        if isinstance(self.source, MixedWord):
            return self.source.evaluate(w).is_identity()
        return verify(self.source, w)


def prepare(source: StandardEquation | MixedWord) -> Prepared:
    """Standardize, drop trivial coefficients and cap the genus at the rank."""
    std = None
    if isinstance(source, MixedWord):
        std = standardize(source)
        full = std.equation
    else:
        full = source
    n = full.rank
    keep = [i for i, c in enumerate(full.coeffs) if not sigma_of_word(c, n).is_identity()]
    dropped = [full.zs[i] for i in range(full.m) if i not in keep]
    g = min(full.genus, n)
    eq = StandardEquation(n, g, [full.coeffs[i] for i in keep], full.xs[:g], full.ys[:g],
                          [full.zs[i] for i in keep])
    capped = list(zip(full.xs[g:], full.ys[g:]))
    return Prepared(source, std, full, eq, dropped, capped)


# --------------------------------------------------------------------------
# verdicts


@dataclass
class Verdict:
    status: str                                   # SAT | UNSAT | UNKNOWN
    equation: str
    standard: str
    witness: dict[str, tuple[int, ...]] | None = None
    certificate: dict | None = None
    report: dict = field(default_factory=dict)
    caps_hit: list[str] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "schema": VERDICT_SCHEMA,
            "status": self.status,
            "equation": self.equation,
            "standard_form": self.standard,
            "report": self.report,
        }
        if self.witness is not None:
            out["witness"] = {k: format_word(v) for k, v in sorted(self.witness.items())}
        if self.certificate is not None:
            out["certificate"] = self.certificate
        if self.status == "UNKNOWN":
            out["caps_hit"] = self.caps_hit
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)


def _describe_source(source) -> str:
    from .dsl import format_equation
    return format_equation(source)


@dataclass
class _Found:
    wbars: tuple[Vec, ...]
    L_basis: tuple[Vec, ...]
    T: list[Vec]
    direct: tuple[list[Vec], list[Vec]] | None = None   # exact (ū, v̄) when known


@dataclass
class _WbarOutcome:
    found: _Found | None = None
    certified: bool = True
    caps_hit: list[str] = field(default_factory=list)
    candidates: int = 0
    wedge_calls: int = 0
    reasons: dict[str, int] = field(default_factory=dict)
    l_report: dict = field(default_factory=dict)


def _try_wbar(eq: StandardEquation, wb: tuple[Vec, ...], config: SolveConfig,
              cache: SystemCache | None = None, seen: set | None = None) -> _WbarOutcome:
    out = _WbarOutcome()
    sys_ = build_system(eq, wb, cache)
    en = enumerate_L(sys_, config.l_caps())
    for L in en:
        if seen is not None:
            key = (L, tuple(L.reduce(w) for w in wb))
            if key in seen:
                continue
            seen.add(key)
        out.candidates += 1
        try:
            rp = build_reduced(sys_, L)
        except CandidateInfeasible as exc:
            out.reasons[str(exc)] = out.reasons.get(str(exc), 0) + 1
            continue
        prob = WedgeProblem(rp.mods, rp.h_R, rp.g)
        res = wedge_solve(prob, config.wedge_caps())
        out.wedge_calls += 1
        if res.status == "SAT":
            out.found = _Found(tuple(wb), L.basis, [tuple(t) for t in res.T])
            out.l_report = en.report
            return out
        out.reasons[res.reason] = out.reasons.get(res.reason, 0) + 1
        if res.status == "UNKNOWN":
            out.certified = False
            if "wedge search" not in out.caps_hit:
                out.caps_hit.append("wedge search")
    out.l_report = en.report
    if en.truncated:
        out.certified = False
        out.caps_hit.append("L candidate count")
    elif not en.certified:
        out.certified = False
        out.caps_hit.append("L entry cap below certified bound")
    return out


def _worker(args) -> _WbarOutcome:
    eq, wb, config = args
    return _try_wbar(eq, wb, config)


def _wbar_stream(eq: StandardEquation):
    return enumerate_wbars(eq, anchor=True, order="shell")


def solve(source: StandardEquation | MixedWord, config: SolveConfig | None = None) -> Verdict:
    """Decide the equation; SAT verdicts carry a verified witness and a certificate."""
    config = (config or SolveConfig()).validate()
    prep = prepare(source)
    eq = prep.eq
    v = Verdict("UNKNOWN", _describe_source(source), eq.describe())
    report: dict[str, Any] = {
        "genus": prep.full.genus, "genus_searched": eq.genus,
        "coefficients": prep.full.m, "coefficients_searched": eq.m,
        "moves": len(prep.std.log) if prep.std else 0,
    }
    v.report = report
    try:
        cache = SystemCache(eq)
    except AbelianizationObstruction as exc:
        v.status = "UNSAT"
        report["obstruction"] = f"abelianization: {exc}"
        return v
    report["wbar_radius"] = wbar_radius(eq)
    stats = {"wbar_tuples": 0, "L_candidates": 0, "wedge_calls": 0}
    reasons: dict[str, int] = {}
    caps_hit: list[str] = []
    certified = True
    found: _Found | None = None
    l_reports: list[dict] = []

    def absorb(o: _WbarOutcome) -> None:
        nonlocal certified
        stats["wbar_tuples"] += 1
        stats["L_candidates"] += o.candidates
        stats["wedge_calls"] += o.wedge_calls
        for k, c in o.reasons.items():
            reasons[k] = reasons.get(k, 0) + c
        for c in o.caps_hit:
            if c not in caps_hit:
                caps_hit.append(c)
        if not o.certified:
            certified = False
        if o.l_report and len(l_reports) < 1:
            l_reports.append(o.l_report)

    probed = _probe(eq, cache, config, report)
    if probed is not None:
        report["found_by"] = "abelian probe"
        return _finish(prep, v, probed, config)
    stream = _wbar_stream(eq)
    exhausted = True
    if config.jobs == 1:
        seen: set = set()
        for idx, wb in enumerate(stream):
            if idx >= config.max_wbars:
                exhausted = False
                break
            o = _try_wbar(eq, wb, config, cache, seen)
            absorb(o)
            if o.found:
                found = o.found
                break
    else:
        found, exhausted = _parallel(eq, stream, config, absorb)
    report.update(stats)
    if l_reports:
        report["L_enumeration"] = l_reports[0]
    if found is not None:
        return _finish(prep, v, found, config)
    report["rejections"] = dict(sorted(reasons.items()))
    if not exhausted:
        caps_hit.append("w̄ tuple budget")
        certified = False
    if certified:
        v.status = "UNSAT"
        report["exhausted"] = "all w̄ tuples within the coefficient bound and all certified L candidates"
    else:
        v.status = "UNKNOWN"
        v.caps_hit = caps_hit
    return v


def _parallel(eq, stream, config: SolveConfig, absorb):
    batch_size = 4 * config.jobs
    exhausted = True
    idx = 0
    with ProcessPoolExecutor(max_workers=config.jobs) as pool:
        while True:
            batch = []
            for wb in stream:
                if idx >= config.max_wbars:
                    exhausted = False
                    break
                batch.append(wb)
                idx += 1
                if len(batch) == batch_size:
                    break
            if not batch:
                return None, exhausted
            for o in pool.map(_worker, [(eq, wb, config) for wb in batch]):
                absorb(o)
                if o.found:
                    return o.found, exhausted
            if not exhausted:
                return None, False


def _neg(p: Vec) -> Vec:
    return tuple(-x for x in p)


def _probe_radius(n: int, g: int, budget: int) -> int:
    r = 0
    while len(ball_points(n, r + 1)) ** (2 * g) <= budget:
        r += 1
    return r


@lru_cache(maxsize=16)
def _probe_table(n: int, g: int, r: int) -> tuple[dict, int]:
    """g-tuples of pairs from the l1 ball of radius r, keyed by Σ ū∧v̄."""
    # short vectors first, positive coordinates before negative ones
    order = sorted(ball_points(n, r), key=lambda p: (l1(p), _neg(p)))
    rank_of = {p: i for i, p in enumerate(order)}
    pairs = [(u, v, wedge(u, v).to_vector()) for u in order for v in order]
    pairs.sort(key=lambda t: (l1(t[0]) + l1(t[1]), rank_of[t[0]], rank_of[t[1]]))
    table: dict[tuple[int, ...], list] = {}
    for combo in iproduct(pairs, repeat=g):
        key = tuple(map(sum, zip(*(c[2] for c in combo))))
        table.setdefault(key, []).append(combo)
    return table, len(pairs) ** g


def _probe(eq: StandardEquation, cache: SystemCache, config: SolveConfig,
           report: dict) -> _Found | None:
    """Look for small (ū, v̄) meeting both abelian conditions exactly.

    Tuples are indexed by Σ ū∧v̄, so each w̄ costs one lookup plus a projection
    check of delta modulo L for the matching tuples.  Sound but incomplete; the certified
    L enumeration runs afterwards.
    """
    g, n = eq.genus, eq.rank
    if g == 0 or config.probe_budget == 0:
        return None
    r = _probe_radius(n, g, config.probe_budget)
    if r == 0:
        return None
    table, count = _probe_table(n, g, r)
    report["probe"] = {"radius": r, "tuples": count}
    lattices: dict = {}
    checked: dict = {}
    for idx, wb in enumerate(_wbar_stream(eq)):
        if idx >= config.max_wbars:
            break
        h = h_for_wbars(cache.phi_c, wb, cache.cbars)
        hits = table.get(tuple(h.to_vector()))
        if not hits:
            continue
        sys_ = None
        for combo in hits:
            us = [c[0] for c in combo]
            vs = [c[1] for c in combo]
            gkey = tuple(us + vs)
            L = lattices.get(gkey)
            if L is None:
                L = lattices[gkey] = Lattice(n, us + vs + list(cache.cbars))
            ckey = (L, tuple(L.reduce(w) for w in wb))
            if ckey not in checked:
                sys_ = sys_ or build_system(eq, wb, cache, check_bounds=False)
                checked[ckey] = check_projection(sys_, L)
            if not checked[ckey]:
                continue
            rp = build_reduced(sys_, L)
            T = []
            for u, v in zip(us, vs):
                T += [rp.to_R(u), rp.to_R(v)]
            return _Found(tuple(wb), L.basis, T, (us, vs))
    return None


def _abelian_solution(eq: StandardEquation, found: _Found):
    """Recompute the reduced problem, lift T to A_n and repair w̄."""
    n = eq.rank
    sys_ = build_system(eq, found.wbars, check_bounds=False)
    L = Lattice(n, found.L_basis)
    rp = build_reduced(sys_, L)
    us = [rp.lift_R(found.T[2 * k]) for k in range(eq.genus)]
    vs = [rp.lift_R(found.T[2 * k + 1]) for k in range(eq.genus)]
    total = Wedge.zero(n)
    for u, w in zip(us, vs):
        total = total + wedge(u, w)
    wb2 = repair_wbar(sys_, L, total - sys_.h)
    return sys_, L, rp, AbelianSolution.checked(eq, us, vs, wb2)


def _finish(prep: Prepared, v: Verdict, found: _Found, config: SolveConfig) -> Verdict:
    eq = prep.eq
    if found.direct is not None:
        sol = AbelianSolution.checked(eq, found.direct[0], found.direct[1], found.wbars)
        L = sol.L
    else:
        _, L, _, sol = _abelian_solution(eq, found)
    try:
        w = lift(eq, sol, config.lift_doublings)
    except LiftingIncomplete as exc:
        v.status = "UNKNOWN"
        v.caps_hit = ["lifter window"]
        v.report["lift_failure"] = str(exc)
        return v
    full_w = prep.expand_witness(w)
    if not prep.check_source(full_w):
        raise AssertionError("witness failed verification against the input equation")
    short = reduce_basis(L.basis).vectors if L.rank else []
    v.status = "SAT"
    v.witness = full_w
    v.certificate = make_certificate(eq, found.wbars, short, found.T)
    return v


# --------------------------------------------------------------------------
# certificates


def _transcript(eq: StandardEquation, wbars, L_basis, T) -> str:
    payload = {
        "equation": eq.describe(),
        "wbars": [list(w) for w in wbars],
        "L_basis": [list(b) for b in L_basis],
        "T": [list(t) for t in T],
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def make_certificate(eq: StandardEquation, wbars, L_basis, T) -> dict:
    return {
        "schema": CERT_SCHEMA,
        "equation": eq.describe(),
        "wbars": [list(w) for w in wbars],
        "L_basis": [list(b) for b in L_basis],
        "T": [list(t) for t in T],
        "transcript_sha256": _transcript(eq, wbars, L_basis, T),
    }


def _int_matrix(x, name: str) -> list[tuple[int, ...]]:
    if not isinstance(x, list) or not all(isinstance(r, list) for r in x):
        raise ValueError(f"{name} must be a list of integer lists")
    for r in x:
        if not all(isinstance(e, int) and not isinstance(e, bool) for e in r):
            raise ValueError(f"{name} must contain integers only")
    return [tuple(r) for r in x]


def verify_certificate(source: StandardEquation | MixedWord, cert: Mapping) -> tuple[bool, str]:
    """Check a certificate without searching; returns (accepted, reason)."""
    try:
        return _verify_certificate(source, cert)
    except (KeyError, TypeError, ValueError) as exc:
        return False, f"malformed certificate: {exc}"


def _verify_certificate(source, cert: Mapping) -> tuple[bool, str]:
    if cert.get("schema") != CERT_SCHEMA:
        return False, "unknown certificate schema"
    prep = prepare(source)
    eq = prep.eq
    n = eq.rank
    if cert["equation"] != eq.describe():
        return False, "equation mismatch"
    wbars = _int_matrix(cert["wbars"], "wbars")
    basis = _int_matrix(cert["L_basis"], "L_basis")
    T = _int_matrix(cert["T"], "T")
    if len(wbars) != eq.m or any(len(w) != n for w in wbars):
        return False, "wbar shape"
    radius = wbar_radius(eq)
    if any(l1(w) > radius for w in wbars):
        return False, "wbar bound"
    try:
        cache = SystemCache(eq)
    except AbelianizationObstruction:
        return False, "coefficient product outside the derived subgroup"
    sys_ = build_system(eq, wbars, cache, check_bounds=False)
    if any(len(b) != n for b in basis):
        return False, "L basis shape"
    L = Lattice(n, basis)
    if L.rank != len(basis):
        return False, "L basis is not linearly independent"
    bound, _, _ = basis_bound_value(sys_)
    if not all(within_basis_bound(b, bound) for b in basis):
        return False, "L basis bound"
    if not all(L.member(c) for c in sys_.cbars):
        return False, "coefficient abelianization outside L"
    if not check_projection(sys_, L):
        return False, "delta does not vanish modulo L"
    try:
        rp = build_reduced(sys_, L)
    except CandidateInfeasible as exc:
        return False, f"reduced problem infeasible: {exc}"
    prob = WedgeProblem(rp.mods, rp.h_R, rp.g)
    if len(T) != 2 * eq.genus or any(len(t) != prob.q for t in T):
        return False, "T shape"
    if any(prob.normalize_vec(t) != t for t in T):
        return False, "T torsion coordinates not reduced"
    if not prob.generates(T):
        return False, "T does not generate R"
    if prob.wedge_of(T) != prob.reduce_wedge(prob.h):
        return False, "T wedge sum differs from h"
    try:
        _, _, _, sol = _abelian_solution(eq, _Found(tuple(wbars), L.basis, T))
        w = lift(eq, sol)
    except (RepairError, InvalidAbelianSolution, LiftingIncomplete) as exc:
        return False, f"lifting failed: {exc}"
    if not verify(eq, w):
        return False, "lifted witness does not verify"
    if cert.get("transcript_sha256") != _transcript(eq, wbars, basis, T):
        return False, "transcript hash mismatch"
    return True, "ok"


# --------------------------------------------------------------------------
# witnesses


def parse_witness(data: Mapping[str, str], rank: int) -> dict[str, tuple[int, ...]]:
    return {k: parse_word(v, rank) for k, v in data.items()}


def verify_witness(source: StandardEquation | MixedWord, w: Mapping[str, Sequence[int]]) -> bool:
    if isinstance(source, MixedWord):
        names = {source.name(v) for v in source.variables()}
        if not names <= set(w):
            raise MalformedWord(f"witness lacks values for {sorted(names - set(w))}")
        return source.evaluate(w).is_identity()
    return verify(source, {k: free_reduce(v) for k, v in w.items()})


__all__ = [
    "CERT_SCHEMA", "ConfigError", "Prepared", "SolveConfig", "UnsupportedClass", "VERDICT_SCHEMA",
    "Verdict", "make_certificate", "parse_witness", "prepare", "solve", "verify_certificate",
    "verify_witness",
]
