"""Command-line front end.

Exit codes: 0 success, 1 a check failed, 2 parse or usage error (including
unknown symbols in a string), 3 semiring or alphabet mismatch, 4 divergent
epsilon closure, 5 truncated sum did not converge.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path as FilePath

from .automaton import Wfsa, automaton_string_weight, parse_wfsa
from .correspondence import bounded_join, check_strong_equivalence, check_weak_equivalence
from .dot import automaton_dot, derivation_dot, grammar_dot
from .generate import random_instance
from .grammar import Wcfg, derivation_yield, dump_wcfg, from_leftmost_sequence, grammar_string_weight_truncated, parse_wcfg
from .intersection import (
    IncompatibleInputs,
    closed_form_counts,
    dump_provenance,
    intersect_general,
    intersect_legacy,
    parse_provenance,
    rule_family_counts,
    trim,
)
from .semiring import DivergenceError
from .symbols import ParseError, SemiringConflict, content_lines

log = logging.getLogger("barhillel")

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_MISMATCH, EXIT_DIVERGENT, EXIT_NONCONVERGED = 0, 1, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read(path) -> str:
    try:
        return FilePath(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(EXIT_PARSE, f"cannot read {path}: {e.strerror}") from None


def _header(text: str):
    lines = content_lines(text)
    if lines and lines[0][1][0] == "semiring" and len(lines[0][1]) == 2:
        return lines[0][1][1]
    return None


def _shared_semiring(flag, *texts):
    chosen = flag
    for t in texts:
        h = _header(t)
        if h is None:
            continue
        if chosen is None:
            chosen = h
        elif h != chosen:
            raise CliError(EXIT_MISMATCH, f"semiring mismatch: {chosen} vs {h}")
    return chosen


def _load(loader, path, text, semiring):
    try:
        return loader(text, semiring)
    except SemiringConflict as e:
        raise CliError(EXIT_MISMATCH, f"{path}: {e}") from None
    except (ParseError, ValueError) as e:
        raise CliError(EXIT_PARSE, f"{path}: {e}") from None


def load_models(args, need_grammar=True, need_automaton=True):
    gtext = _read(args.grammar) if getattr(args, "grammar", None) else None
    atext = _read(args.automaton) if getattr(args, "automaton", None) else None
    if need_grammar and gtext is None:
        raise CliError(EXIT_PARSE, "a grammar file (-g) is required")
    if need_automaton and atext is None:
        raise CliError(EXIT_PARSE, "an automaton file (-a) is required")
    sr = _shared_semiring(args.semiring, *(t for t in (gtext, atext) if t is not None))
    G = _load(parse_wcfg, args.grammar, gtext, sr) if gtext is not None else None
    A = _load(parse_wfsa, args.automaton, atext, sr) if atext is not None else None
    return G, A


def split_string(text: str, alphabet) -> tuple:
    """Split on whitespace; a single unknown token made of known one-letter symbols is split into letters."""
    toks = tuple(text.split())
    if len(toks) == 1 and toks[0] not in alphabet and all(c in alphabet for c in toks[0]):
        toks = tuple(toks[0])
    unknown = [t for t in toks if t not in alphabet]
    if unknown:
        raise CliError(EXIT_PARSE, f"unknown symbol(s) in string: {' '.join(unknown)}")
    return toks


def _construct(G, A, legacy):
    try:
        return intersect_legacy(G, A) if legacy else intersect_general(G, A)
    except IncompatibleInputs as e:
        raise CliError(EXIT_MISMATCH, str(e)) from None


# commands ---------------------------------------------------------------------------


def cmd_intersect(args) -> int:
    G, A = load_models(args)
    full = _construct(G, A, args.legacy)
    counts = rule_family_counts(full)
    expected = closed_form_counts(G, A, legacy=args.legacy)
    out = full if args.no_trim else trim(full)
    FilePath(args.output).write_text(dump_wcfg(out.grammar), encoding="utf-8")
    FilePath(str(args.output) + ".prov").write_text(dump_provenance(out), encoding="utf-8")
    print("family  emitted  closed-form")
    for fam, n in counts.items():
        print(f"{fam:6s}  {n:7d}  {expected[fam]:11d}")
    print(f"rules written: {len(out.grammar.rules)}{'' if args.no_trim else ' (after trimming)'}")
    if not out.grammar.rules:
        log.warning("the intersection grammar is empty")
    return EXIT_OK


def cmd_weight(args) -> int:
    if bool(args.grammar) == bool(args.automaton):
        raise CliError(EXIT_PARSE, "give exactly one of -g or -a")
    G, A = load_models(args, need_grammar=bool(args.grammar), need_automaton=bool(args.automaton))
    model = G if G is not None else A
    y = split_string(args.string, model.alphabet)
    sr = model.semiring
    if A is not None:
        try:
            w = automaton_string_weight(A, y)
        except DivergenceError as e:
            raise CliError(EXIT_DIVERGENT, f"divergent: {e}") from None
        print(f"weight {sr.format(w)}")
        print("converged true")
        return EXIT_OK
    w, converged = grammar_string_weight_truncated(G, y, args.max_size, args.tol)
    print(f"weight {sr.format(w)}")
    print(f"converged {str(converged).lower()}")
    if not converged:
        log.error("truncated sum did not converge within %d rule applications", args.max_size)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _check_instance(G: Wcfg, A: Wfsa, args, strings=None, verbose=True):
    ok = True
    sections = []
    if not args.legacy:
        try:
            report = check_strong_equivalence(G, A, args.max_tree, args.max_path)
        except IncompatibleInputs as e:
            raise CliError(EXIT_MISMATCH, str(e)) from None
        sections.append(("strong equivalence", report.to_text()))
        ok &= report.ok
        line = report.to_line(args.seed)
    else:
        line = f"{args.seed} legacy"
    if strings is None:
        seen = []
        for p in bounded_join(G, A, args.max_tree, args.max_path):
            y = derivation_yield(G, p.tree)
            if y not in seen:
                seen.append(y)
        strings = seen
    try:
        weak = check_weak_equivalence(G, A, strings, args.tol, args.max_size, legacy=args.legacy)
    except IncompatibleInputs as e:
        raise CliError(EXIT_MISMATCH, str(e)) from None
    sections.append(("weak equivalence", weak.to_text() or "(no strings)"))
    ok &= weak.ok
    line += f" weak_equivalence:{str(weak.ok).lower()}"
    if verbose:
        for title, body in sections:
            print(f"== {title}")
            print(body)
    return ok, line


def cmd_check(args) -> int:
    if args.random:
        failures = 0
        for i in range(args.random):
            seed = args.seed + i
            G, A = random_instance(seed, args.semiring or "real")
            sub = argparse.Namespace(**{**vars(args), "seed": seed})
            ok, line = _check_instance(G, A, sub, verbose=False)
            print(line)
            failures += not ok
        print(f"{args.random - failures}/{args.random} instances passed")
        return EXIT_OK if failures == 0 else EXIT_CHECK
    G, A = load_models(args)
    strings = None
    if args.strings:
        strings = [split_string(s, G.alphabet | A.alphabet) for s in args.strings]
    ok, line = _check_instance(G, A, args, strings)
    print(line)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_stats(args) -> int:
    G, A = load_models(args, need_grammar=True, need_automaton=bool(args.automaton))
    eps_rules = sum(1 for r in G.rules if r.is_epsilon)
    print(f"semiring {G.semiring.name}")
    print(f"start {G.start}")
    print(f"nonterminals {len(G.nonterminals)}")
    print(f"terminals {len(G.alphabet)}")
    print(f"rules {len(G.rules)}")
    print(f"epsilon_rules {eps_rules}")
    print(f"longest_rhs {G.longest_rhs}")
    prov_file = FilePath(str(args.grammar) + ".prov")
    if prov_file.exists():
        prov = parse_provenance(prov_file.read_text(encoding="utf-8"))
        fams: dict = {}
        for fam, _ in prov.values():
            fams[fam] = fams.get(fam, 0) + 1
        for fam in sorted(fams):
            print(f"family {fam} {fams[fam]}")
    if A is not None:
        print(f"states {len(A.states)}")
        print(f"arcs {len(A.arcs)}")
        print(f"epsilon_arcs {sum(1 for a in A.arcs if a.is_epsilon)}")
        print(f"initial {len(A.initial)}")
        print(f"final {len(A.final)}")
        for fam, n in closed_form_counts(G, A).items():
            print(f"predicted {fam} {n}")
    return EXIT_OK


def cmd_render(args) -> int:
    if bool(args.grammar) == bool(args.automaton):
        raise CliError(EXIT_PARSE, "give exactly one of -g or -a")
    G, A = load_models(args, need_grammar=bool(args.grammar), need_automaton=bool(args.automaton))
    if A is not None:
        text = automaton_dot(A)
    elif args.derivation:
        try:
            seq = [int(x) for x in args.derivation.replace(",", " ").split()]
            t = from_leftmost_sequence(G, seq, G.start if args.full else None)
        except ValueError as e:
            raise CliError(EXIT_PARSE, f"bad derivation: {e}") from None
        families = None
        prov_file = FilePath(str(args.grammar) + ".prov")
        if prov_file.exists():
            prov = parse_provenance(prov_file.read_text(encoding="utf-8"))
            families = {i: fam for i, (fam, _) in prov.items()}
        text = derivation_dot(G, t, families)
    else:
        text = grammar_dot(G)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        FilePath(args.output).write_text(text, encoding="utf-8")
    return EXIT_OK


# argument parsing ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="barhillel", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grammar=True, automaton=True):
        if grammar:
            sp.add_argument("-g", "--grammar", help="grammar file (.wcfg)")
        if automaton:
            sp.add_argument("-a", "--automaton", help="automaton file (.wfsa)")
        sp.add_argument("--semiring", choices=["boolean", "real", "tropical"], help="must agree with file headers")

    sp = sub.add_parser("intersect", help="build the intersection grammar")
    common(sp)
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--legacy", action="store_true", help="classical construction (ignores epsilon arcs)")
    sp.add_argument("--no-trim", action="store_true")
    sp.set_defaults(func=cmd_intersect)

    sp = sub.add_parser("weight", help="weight of a string under a grammar or an automaton")
    common(sp)
    sp.add_argument("-s", "--string", required=True)
    sp.add_argument("--max-size", type=int, default=100, help="max rule applications per derivation")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.set_defaults(func=cmd_weight)

    sp = sub.add_parser("check", help="bounded strong and weak equivalence checks")
    common(sp)
    sp.add_argument("--legacy", action="store_true", help="weak check only, against the classical construction")
    sp.add_argument("--max-tree", type=int, default=6)
    sp.add_argument("--max-path", type=int, default=6)
    sp.add_argument("--max-size", type=int, default=120)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--random", type=int, default=0, metavar="N", help="check N seeded random instances instead of files")
    sp.add_argument("--strings", nargs="*", help="strings for the weak check (default: yields of the bounded join)")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("stats", help="size statistics")
    common(sp)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("render", help="write a DOT rendering")
    common(sp)
    sp.add_argument("-d", "--derivation", help="leftmost rule sequence (rule indices in file order)")
    sp.add_argument("--full", action="store_true", help="require the derivation to start at the start symbol")
    sp.add_argument("-o", "--output", default="-")
    sp.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as e:
        log.error("%s", e)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
