"""Command line interface.

Exit codes: 0 SAT / accepted, 1 UNSAT / rejected, 2 UNKNOWN or refused,
3 input error.  With ``--json`` a single JSON document goes to stdout and
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path
from typing import Sequence

from .dsl import DslError, format_equation, parse
from .mgroup import (MalformedWord, commutator_word, format_word, free_reduce, parse_word,
                     sigma_of_word)
from .oracle import OracleRefused, brute_oracle
from .pipeline import (ConfigError, SolveConfig, parse_witness, prepare, solve,
                       verify_certificate, verify_witness)
from .qnormal import MixedWord, UnsupportedClass, standardize

EXIT_OK, EXIT_NO, EXIT_UNKNOWN, EXIT_INPUT = 0, 1, 2, 3

log = logging.getLogger("metaquad")


class InputError(Exception):
    pass


def _read_text(arg: str) -> str:
    if arg == "-":
        return sys.stdin.read()
    p = Path(arg)
    if "=" not in arg and p.exists():
        return p.read_text(encoding="utf-8")
    return arg


def _read_json(arg: str):
    try:
        return json.loads(_read_text(arg))
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc


def _equation(arg: str):
    try:
        return parse(_read_text(arg))
    except DslError as exc:
        raise InputError(str(exc)) from exc


def _emit(args, doc: dict, text: str) -> None:
    if args.json:
        print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        print(text)


def _config(args) -> SolveConfig:
    return SolveConfig(l_entry_cap=args.caps_l, shell_cap=args.caps_shell,
                       jobs=args.jobs).validate()


# --------------------------------------------------------------------------
# subcommands


def cmd_solve(args) -> int:
    eq = _equation(args.equation)
    try:
        v = solve(eq, _config(args))
    except UnsupportedClass as exc:
        raise InputError(str(exc)) from exc
    lines = [v.status, f"standard form: {v.standard}"]
    if v.witness is not None:
        lines += [f"  {k} = {format_word(w) or '1'}" for k, w in sorted(v.witness.items())]
    if v.status == "UNKNOWN":
        lines.append("caps hit: " + ", ".join(v.caps_hit))
    _emit(args, v.to_json(), "\n".join(lines))
    return {"SAT": EXIT_OK, "UNSAT": EXIT_NO}.get(v.status, EXIT_UNKNOWN)


def cmd_normalize(args) -> int:
    eq = _equation(args.equation)
    if isinstance(eq, MixedWord):
        try:
            std = standardize(eq)
        except UnsupportedClass as exc:
            raise InputError(str(exc)) from exc
        out, moves = std.equation, len(std.log)
    else:
        out, moves = eq, 0
    doc = {"schema": "metaquad.normalize/1", "input": format_equation(eq),
           "standard_form": out.describe(), "genus": out.genus, "m": out.m, "moves": moves}
    _emit(args, doc, f"{out.describe()}\n(genus {out.genus}, m {out.m}, {moves} moves)")
    return EXIT_OK


def cmd_verify_witness(args) -> int:
    eq = _equation(args.equation)
    data = _read_json(args.witness)
    if isinstance(data, dict) and "witness" in data:
        data = data["witness"]
    if not isinstance(data, dict) or not all(isinstance(v, str) for v in data.values()):
        raise InputError("witness must map variable names to words")
    try:
        w = parse_witness(data, eq.rank)
        ok = verify_witness(eq, w)
    except (MalformedWord, KeyError) as exc:
        raise InputError(f"malformed witness: {exc}") from exc
    _emit(args, {"schema": "metaquad.witness-check/1", "valid": ok},
          "valid" if ok else "invalid")
    return EXIT_OK if ok else EXIT_NO


def cmd_verify_cert(args) -> int:
    eq = _equation(args.equation)
    data = _read_json(args.certificate)
    if isinstance(data, dict) and "certificate" in data:
        data = data["certificate"]
    if not isinstance(data, dict):
        raise InputError("certificate must be a JSON object")
    ok, reason = verify_certificate(eq, data)
    _emit(args, {"schema": "metaquad.cert-check/1", "valid": ok, "reason": reason},
          ("accepted" if ok else "rejected") + f": {reason}")
    return EXIT_OK if ok else EXIT_NO


def cmd_oracle(args) -> int:
    eq = _equation(args.equation)
    target = prepare(eq).full if isinstance(eq, MixedWord) and args.standardize else eq
    try:
        res = brute_oracle(target, args.max_len, args.limit)
    except OracleRefused as exc:
        _emit(args, {"schema": "metaquad.oracle/1", "status": "REFUSED",
                     "estimate": exc.estimate, "limit": exc.limit}, f"refused: {exc}")
        return EXIT_UNKNOWN
    doc = {"schema": "metaquad.oracle/1", "status": res.status, "max_len": res.max_len,
           "checked": res.checked}
    text = f"{res.status} (max_len {res.max_len})"
    if res.witness is not None:
        doc["witness"] = {k: format_word(v) for k, v in sorted(res.witness.items())}
        text += "\n" + "\n".join(f"  {k} = {format_word(v) or '1'}"
                                 for k, v in sorted(res.witness.items()))
    _emit(args, doc, text)
    return EXIT_OK if res.status == "SAT" else EXIT_NO


def _random_word(rng: random.Random, n: int, length: int) -> tuple[int, ...]:
    letters = [k for i in range(1, n + 1) for k in (i, -i)]
    return free_reduce(rng.choice(letters) for _ in range(length))


def cmd_wordproblem(args) -> int:
    if args.random:
        rng = random.Random(args.seed)
        failures = 0
        for _ in range(args.random):
            w = _random_word(rng, args.rank, rng.randint(0, 40))
            u, v, s, t = (_random_word(rng, args.rank, rng.randint(1, 6)) for _ in range(4))
            rel = commutator_word(commutator_word(u, v), commutator_word(s, t))
            cut = rng.randint(0, len(w))
            if sigma_of_word(w[:cut] + rel + w[cut:], args.rank) != sigma_of_word(w, args.rank):
                failures += 1
        _emit(args, {"schema": "metaquad.wordproblem-selfcheck/1", "words": args.random,
                     "seed": args.seed, "failures": failures},
              f"{args.random} words, {failures} failures")
        return EXIT_OK if failures == 0 else EXIT_NO
    if not args.words:
        raise InputError("give one or two words, or --random N")
    try:
        ws = [parse_word(w, args.rank) for w in args.words]
    except MalformedWord as exc:
        raise InputError(str(exc)) from exc
    elems = [sigma_of_word(w, args.rank) for w in ws]
    if len(elems) == 1:
        e = elems[0]
        ok = e.is_identity()
        _emit(args, {"schema": "metaquad.wordproblem/1", "identity": ok, "normal_form": e.to_json()},
              f"identity: {ok}\n{e.dumps()}")
    else:
        ok = elems[0] == elems[1]
        _emit(args, {"schema": "metaquad.wordproblem/1", "equal": ok,
                     "normal_forms": [e.to_json() for e in elems]}, f"equal: {ok}")
    return EXIT_OK if ok else EXIT_NO


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit one JSON document")
    common.add_argument("--caps-l", type=int, default=SolveConfig.l_entry_cap,
                        help="HNF entry cap for candidate subgroups (raised automatically "
                             "to the certified bound when that is affordable)")
    common.add_argument("--caps-shell", type=int, default=SolveConfig.shell_cap,
                        help="coordinate shell cap for the wedge search")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized corpora")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="metaquad", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="decide an equation")
    s.add_argument("equation", help="equation text, a file path, or - for stdin")
    s.set_defaults(func=cmd_solve)
    s = sub.add_parser("normalize", parents=[common], help="rewrite into standard form")
    s.add_argument("equation")
    s.set_defaults(func=cmd_normalize)
    s = sub.add_parser("verify-witness", parents=[common], help="check a witness")
    s.add_argument("equation")
    s.add_argument("witness", help="JSON file (or text) mapping variables to words")
    s.set_defaults(func=cmd_verify_witness)
    s = sub.add_parser("verify-cert", parents=[common], help="check a certificate")
    s.add_argument("equation")
    s.add_argument("certificate", help="certificate JSON or a solve --json output")
    s.set_defaults(func=cmd_verify_cert)
    s = sub.add_parser("oracle", parents=[common], help="bounded brute-force search")
    s.add_argument("equation")
    s.add_argument("--max-len", type=int, default=4)
    s.add_argument("--limit", type=int, default=2_000_000)
    s.add_argument("--standardize", action="store_true",
                   help="search the standard form of a raw equation instead")
    s.set_defaults(func=cmd_oracle)
    s = sub.add_parser("wordproblem", parents=[common], help="normal forms in M_n")
    s.add_argument("words", nargs="*")
    s.add_argument("--rank", "-n", type=int, default=2)
    s.add_argument("--random", type=int, default=0, metavar="N",
                   help="self-check relator invariance on N random words")
    s.set_defaults(func=cmd_wordproblem)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
