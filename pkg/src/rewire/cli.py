"""Command-line front end.

Machine-readable results go to stdout in a line grammar documented per
subcommand; diagnostics go to stderr.  Exit codes: 0 success, 1 negative
verdict (timeout, counterexample, no solution, rejected claim), 2 usage or
parse errors.
"""
from __future__ import annotations

import argparse
import sys as _sys
from fractions import Fraction

from .model import DefinitionError, RewireError, run, io_map
from .interventions import apply, diff_io
from .automata import accept_equiv, cs_to_dfa, dfa_to_cs
from .bruteforce import SearchSpaceError, min_for_class
from .goals import NO_SOLUTION
from .solver import Budget, decode, encode, run_solver, verify_re, SolverFault
from .csys import (
    CsysError,
    parse_csys,
    parse_dfa,
    parse_family,
    parse_interventions,
    print_csys,
    print_dfa,
    print_interventions,
    _parse_sym,
    _sym_token,
)
from . import networks


def _read(path):
    if path == "-":
        return _sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_system(path):
    return parse_csys(_read(path))


def _parse_input(text):
    toks = text.split() if any(ch.isspace() for ch in text) else list(text)
    return tuple(_parse_sym(t) for t in toks)


def _print_run(out):
    for node, symbol in out.fired:
        print(f"output {node} {_sym_token(symbol)}")
    print(f"status {'complete' if out.complete else 'timeout'}")
    return 0 if out.complete else 1


def _print_set(zs):
    if zs is NO_SOLUTION:
        print("no-solution")
        return 1
    for z in zs:
        from .csys import _fn_param_tokens

        toks = " ".join(_fn_param_tokens(z.replacement))
        suffix = f" {toks}" if toks else ""
        print(f"intervention {z.node} {z.time} {z.replacement.kind}{suffix}")
    print(f"cardinality {len(zs)}")
    return 0


def _exemplar_system(args):
    name = args.exemplar
    if name == "line":
        return networks.build_line(args.n)
    if name == "butterfly":
        return networks.build_butterfly()
    if name == "fft":
        return networks.build_fft(args.n, args.q, args.omega)
    if name == "reward":
        return networks.build_reward(args.variant)
    raise DefinitionError(f"unknown exemplar {name!r}")


def _exemplar_family(args):
    name = args.exemplar
    if name == "line":
        return networks.line_family(args.n)
    if name == "butterfly":
        return networks.butterfly_family()
    if name == "fft":
        return networks.fft_family(args.n, args.q, args.omega)
    if name == "reward":
        return networks.reward_family(args.variant)
    raise DefinitionError(f"unknown exemplar {name!r}")


def _exemplar_solver(args):
    name = args.exemplar
    if name == "line":
        return networks.line_solver(args.limit if args.limit is not None else 2 * args.n)
    if name == "butterfly":
        return networks.butterfly_solver()
    if name == "fft":
        return networks.fft_solver()
    if name == "reward":
        return networks.reward_solver(args.variant)
    raise DefinitionError(f"unknown exemplar {name!r}")


def _parse_p(text):
    if "," in text:
        parts = tuple(int(t) for t in text.split(","))
        return parts
    val = _parse_sym(text)
    if isinstance(val, (int, Fraction)):
        return val
    raise DefinitionError(f"bad class index {text!r}")


def _add_exemplar_args(sub):
    sub.add_argument("--exemplar", choices=("line", "butterfly", "fft", "reward"))
    sub.add_argument("--n", type=int, default=4)
    sub.add_argument("--q", type=int, default=17)
    sub.add_argument("--omega", type=int, default=4)
    sub.add_argument("--variant", choices=("difference", "ratio"), default="difference")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rewire",
        description="Simulate graph computations, apply interventions, and "
        "verify minimal-intervention solver programs.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("simulate", help="run a system on one input string")
    p.add_argument("--system", default="-")
    p.add_argument("--input", default="")
    p.add_argument("--horizon", type=int)

    p = subs.add_parser("intervene", help="apply an intervention file and diff the I/O")
    p.add_argument("--system", required=True)
    p.add_argument("--interventions", required=True)
    p.add_argument("--probes", required=True, nargs="+")
    p.add_argument("--horizon", type=int, required=True)

    p = subs.add_parser("dfa2cs", help="compile an automaton into a system")
    p.add_argument("--dfa", default="-")
    p.add_argument("--max-input-len", type=int, default=16)

    p = subs.add_parser("cs2dfa", help="product automaton of a finite system")
    p.add_argument("--system", default="-")

    p = subs.add_parser("equiv", help="bounded automaton/system equivalence")
    p.add_argument("--dfa", required=True)
    p.add_argument("--system", required=True)
    p.add_argument("--max-len", type=int, required=True)

    p = subs.add_parser("brute", help="exhaustive minimal intervention search")
    p.add_argument("--system", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--limit", type=int, required=True)

    p = subs.add_parser("solve", help="run a shipped exemplar solver")
    _add_exemplar_args(p)
    p.add_argument("--p", required=True)
    p.add_argument("--limit", type=int)
    p.add_argument("--queries", type=int, default=1)

    p = subs.add_parser("verify", help="verify a solver program against a claim")
    _add_exemplar_args(p)
    p.add_argument("--system")
    p.add_argument("--family")
    p.add_argument("--solver")
    p.add_argument("--limit", "--L", dest="limit", type=int, required=True)
    p.add_argument("--bits", "--M", dest="bits", type=int, required=True)
    p.add_argument("--queries", "--Q", dest="queries", type=int, required=True)

    p = subs.add_parser("exemplar", help="emit a named exemplar document")
    p.add_argument("name", choices=("line", "butterfly", "fft", "reward"))
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--q", type=int, default=17)
    p.add_argument("--omega", type=int, default=4)
    p.add_argument("--variant", choices=("difference", "ratio"), default="difference")
    p.add_argument("--solver-out", help="also write the shipped solver bytecode here")
    p.add_argument("--limit", type=int)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        return _dispatch(args)
    except (CsysError, DefinitionError, SolverFault, SearchSpaceError, OSError) as exc:
        print(f"rewire: {exc}", file=_sys.stderr)
        return 2
    except RewireError as exc:
        print(f"rewire: {exc}", file=_sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "simulate":
        sys = _load_system(args.system)
        out = run(sys, _parse_input(args.input), args.horizon)
        return _print_run(out)

    if args.command == "intervene":
        sys = _load_system(args.system)
        zs = parse_interventions(_read(args.interventions), sys)
        probes = [_parse_input(p) for p in args.probes]
        before = io_map(sys, probes, args.horizon)
        after = io_map(apply(sys, zs), probes, args.horizon)
        rows = diff_io(before, after)
        for probe, node, was, now in rows:
            probe_txt = ",".join(_sym_token(s) for s in probe)
            was_txt = _sym_token(was) if was is not None else "none"
            now_txt = _sym_token(now) if now is not None else "none"
            print(f"diff {probe_txt} {node} {was_txt} {now_txt}")
        print(f"differences {len(rows)}")
        return 0

    if args.command == "dfa2cs":
        dfa = parse_dfa(_read(args.dfa))
        print(print_csys(dfa_to_cs(dfa, args.max_input_len)), end="")
        return 0

    if args.command == "cs2dfa":
        sys = _load_system(args.system)
        print(print_dfa(cs_to_dfa(sys)), end="")
        return 0

    if args.command == "equiv":
        dfa = parse_dfa(_read(args.dfa))
        sys = _load_system(args.system)
        res = accept_equiv(dfa, sys, args.max_len)
        if res.equivalent:
            print("equivalent")
            return 0
        word = " ".join(_sym_token(s) for s in res.counterexample)
        print(f"counterexample {word if word else '<empty>'}")
        return 1

    if args.command == "brute":
        sys = _load_system(args.system)
        observed, fam = parse_family(_read(args.family), sys)
        zs = min_for_class(observed, _parse_p(args.p), fam, args.limit)
        return _print_set(zs)

    if args.command == "solve":
        if not args.exemplar:
            raise DefinitionError("solve needs --exemplar")
        observed, fam = _exemplar_family(args)
        prog = _exemplar_solver(args)
        answer = run_solver(prog, _coerce_p(args.p, fam), observed, fam,
                            Budget(args.queries))
        return _print_set(answer)

    if args.command == "verify":
        if args.exemplar:
            observed, fam = _exemplar_family(args)
            prog = decode(_read_bytes(args.solver)) if args.solver else _default_solver(args)
        else:
            if not (args.system and args.family and args.solver):
                raise DefinitionError("verify needs --exemplar or --system/--family/--solver")
            sys = _load_system(args.system)
            observed, fam = parse_family(_read(args.family), sys)
            prog = decode(_read_bytes(args.solver))
        verdict = verify_re(prog, observed, fam, args.limit, args.bits, args.queries)
        if verdict.accepted:
            print("accept")
            return 0
        print(f"reject {verdict.reason}")
        return 1

    if args.command == "exemplar":
        args.exemplar = args.name
        sys = _exemplar_system(args)
        print(print_csys(sys), end="")
        if args.solver_out:
            if args.limit is None:
                args.limit = 2 * args.n
            prog = _exemplar_solver(args)
            with open(args.solver_out, "wb") as fh:
                fh.write(encode(prog))
        return 0

    raise DefinitionError(f"unknown command {args.command!r}")


def _default_solver(args):
    if args.limit is None:
        args.limit = args.n * 2 if args.exemplar == "line" else 1
    return _exemplar_solver(args)


def _coerce_p(text, fam):
    p = _parse_p(text)
    if p in fam.classes:
        return p
    if isinstance(p, tuple) and frozenset(p) in fam.classes:
        return frozenset(p)
    raise DefinitionError(f"class index {text!r} is not in the family")


def _read_bytes(path):
    if path == "-":
        return _sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


if __name__ == "__main__":
    raise SystemExit(main())
