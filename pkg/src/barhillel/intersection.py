"""Bar-Hillel intersection of a WCFG with a WFSA.

Two constructions are provided. :func:`intersect_legacy` is the classical
one, which silently loses every path that uses an epsilon arc.
:func:`intersect_general` adds three weight-one rule families that thread
epsilon arcs through the derivation, so every (derivation, path) pair with
matching yield corresponds to exactly one derivation of the output.

Rule families (tags stored as provenance on every emitted rule):

====  ======================================================================
5a    ``S' -> (qI, <sbar>, qF)``         weight lambda(qI) * rho(qF)
5b    ``(qI, <sbar>, q1) -> (qI, <sbar>, q0) (q0, <eps>, q1)``   weight one
5c    ``(qI, <sbar>, q0) -> (qI, S, q0)``                        weight one
5d    ``(q0, X, qM) -> (q0, X1, q1) ... (qM-1, XM, qM)``  per rule X -> X1..XM
5e    ``(q0, X, q0) -> <eps>``                              per rule X -> <eps>
5f    ``(q0, a, q1) -> a``                 per arc, ``a`` possibly epsilon
5g    ``(q0, a, q2) -> (q0, <eps>, q1) (q1, a, q2)``             weight one
====  ======================================================================

The legacy families 4a/4d/4e/4f are 5a (with ``S`` in place of
``<sbar>``), 5d, 5e and 5f.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

from .automaton import Wfsa
from .grammar import Rule, Wcfg, useful_rule_ids
from .symbols import EPSILON, SBAR

GENERAL_FAMILIES = ("5a", "5b", "5c", "5d", "5e", "5f", "5g")
LEGACY_FAMILIES = ("4a", "4d", "4e", "4f")


class Triplet(NamedTuple):
    left: object
    mid: object
    right: object

    def __str__(self):
        return f"[{self.left},{self.mid},{self.right}]"


class IncompatibleInputs(ValueError):
    """Grammar and automaton do not share a semiring, or their symbols clash."""


class TrimmedGrammarError(ValueError):
    pass


@dataclass
class IntersectionGrammar:
    grammar: Wcfg
    provenance: dict
    source_refs: dict
    construction: str
    source_grammar: Wcfg
    source_automaton: Wfsa
    trimmed: bool = False
    _index: dict | None = field(default=None, repr=False, compare=False)

    @property
    def start(self):
        return self.grammar.start

    def family(self, rid: int) -> str:
        return self.provenance[rid]

    def lookup(self, key) -> Rule | None:
        """Find the rule identified by a family-specific key (see :func:`rule_key`)."""
        if self._index is None:
            self._index = {rule_key(self, r): r for r in self.grammar.rules}
        return self._index.get(key)


def rule_key(Gc: IntersectionGrammar, r: Rule) -> tuple:
    fam = Gc.provenance[r.id]
    ref = Gc.source_refs[r.id]
    if fam in ("5a", "4a"):
        return (fam, ref[1], ref[2])
    if fam == "5b":
        return (fam, r.lhs.left, r.rhs[0].right, r.lhs.right)
    if fam == "5c":
        return (fam, r.lhs.left, r.lhs.right)
    if fam in ("5d", "4d"):
        return (fam, ref[1], (r.lhs.left,) + tuple(c.right for c in r.rhs))
    if fam in ("5e", "4e"):
        return (fam, ref[1], r.lhs.left)
    if fam in ("5f", "4f"):
        return (fam, ref[1])
    if fam == "5g":
        return (fam, r.lhs.mid, r.lhs.left, r.rhs[0].right, r.lhs.right)
    raise ValueError(f"unknown family {fam!r}")


def fresh_start(G: Wcfg) -> str:
    name = f"{G.start}'"
    taken = {str(s) for s in G.nonterminals | G.alphabet}
    while name in taken:
        name += "'"
    return name


def _check_inputs(G: Wcfg, A: Wfsa) -> list:
    if G.semiring is not A.semiring:
        raise IncompatibleInputs(f"grammar is over {G.semiring.name} but automaton is over {A.semiring.name}")
    clash = A.alphabet & G.nonterminals
    if clash:
        raise IncompatibleInputs(f"automaton labels are grammar nonterminals: {sorted(map(str, clash))}")
    return sorted(G.alphabet | A.alphabet)


class _Emitter:
    def __init__(self, semiring):
        self.sr = semiring
        self.rules: list[Rule] = []
        self.provenance: dict = {}
        self.source_refs: dict = {}

    def emit(self, family, lhs, rhs, weight, ref=None):
        rid = len(self.rules)
        self.rules.append(Rule(rid, lhs, tuple(rhs), weight))
        self.provenance[rid] = family
        self.source_refs[rid] = ref


def _emit_shared(em: _Emitter, G: Wcfg, A: Wfsa, legacy: bool):
    Q = A.states
    d, e, f = ("4d", "4e", "4f") if legacy else ("5d", "5e", "5f")
    for r in G.rules:
        if r.is_epsilon:
            continue
        for qs in itertools.product(Q, repeat=len(r.rhs) + 1):
            lhs = Triplet(qs[0], r.lhs, qs[-1])
            rhs = [Triplet(qs[m], sym, qs[m + 1]) for m, sym in enumerate(r.rhs)]
            em.emit(d, lhs, rhs, r.weight, ("rule", r.id))
    for r in G.rules:
        if r.is_epsilon:
            for q in Q:
                em.emit(e, Triplet(q, r.lhs, q), (), r.weight, ("rule", r.id))
    for arc in A.arcs:
        rhs = () if arc.is_epsilon else (arc.label,)
        em.emit(f, Triplet(arc.source, arc.label, arc.target), rhs, arc.weight, ("arc", arc.id))


def _universe(G: Wcfg, A: Wfsa, sigma, start, with_sbar: bool) -> set:
    mids = list(G.nonterminals) + list(sigma) + [EPSILON]
    nts = {start} | {Triplet(p, m, q) for p in A.states for m in mids for q in A.states}
    if with_sbar:
        nts |= {Triplet(p, SBAR, q) for p in A.initial_states for q in A.states}
    return nts


def intersect_general(G: Wcfg, A: Wfsa) -> IntersectionGrammar:
    """Untrimmed intersection grammar that also accounts for epsilon arcs."""
    sigma = _check_inputs(G, A)
    sr = G.semiring
    start = fresh_start(G)
    em = _Emitter(sr)
    Q, I, F = A.states, A.initial_states, A.final_states
    for qi in I:
        for qf in F:
            em.emit("5a", start, [Triplet(qi, SBAR, qf)], sr.times(A.initial[qi], A.final[qf]), ("init_final", qi, qf))
    for qi in I:
        for q0 in Q:
            for q1 in Q:
                em.emit("5b", Triplet(qi, SBAR, q1), [Triplet(qi, SBAR, q0), Triplet(q0, EPSILON, q1)], sr.one)
    for qi in I:
        for q0 in Q:
            em.emit("5c", Triplet(qi, SBAR, q0), [Triplet(qi, G.start, q0)], sr.one)
    _emit_shared(em, G, A, legacy=False)
    for a in sigma:
        for q0, q1, q2 in itertools.product(Q, repeat=3):
            em.emit("5g", Triplet(q0, a, q2), [Triplet(q0, EPSILON, q1), Triplet(q1, a, q2)], sr.one)
    grammar = Wcfg(sr, start, tuple(em.rules), frozenset(_universe(G, A, sigma, start, True)), frozenset(sigma))
    return IntersectionGrammar(grammar, em.provenance, em.source_refs, "general", G, A)


def intersect_legacy(G: Wcfg, A: Wfsa) -> IntersectionGrammar:
    """Untrimmed classical construction; paths through epsilon arcs are lost."""
    sigma = _check_inputs(G, A)
    sr = G.semiring
    start = fresh_start(G)
    em = _Emitter(sr)
    for qi in A.initial_states:
        for qf in A.final_states:
            em.emit("4a", start, [Triplet(qi, G.start, qf)], sr.times(A.initial[qi], A.final[qf]), ("init_final", qi, qf))
    _emit_shared(em, G, A, legacy=True)
    grammar = Wcfg(sr, start, tuple(em.rules), frozenset(_universe(G, A, sigma, start, False)), frozenset(sigma))
    return IntersectionGrammar(grammar, em.provenance, em.source_refs, "legacy", G, A)


def intersect(G: Wcfg, A: Wfsa, legacy: bool = False, trimmed: bool = True) -> IntersectionGrammar:
    Gc = intersect_legacy(G, A) if legacy else intersect_general(G, A)
    return trim(Gc) if trimmed else Gc


def trim(Gc: IntersectionGrammar) -> IntersectionGrammar:
    """Drop rules that mention unproductive or unreachable nonterminals.

    Rule ids are preserved, so derivations of the trimmed grammar are
    derivations of the untrimmed one.
    """
    keep = useful_rule_ids(Gc.grammar)
    g = Gc.grammar.restrict(keep)
    return IntersectionGrammar(
        g,
        {rid: Gc.provenance[rid] for rid in keep},
        {rid: Gc.source_refs[rid] for rid in keep},
        Gc.construction,
        Gc.source_grammar,
        Gc.source_automaton,
        trimmed=True,
    )


def rule_family_counts(Gc: IntersectionGrammar) -> dict:
    """Number of emitted rules per family. Only meaningful before trimming."""
    if Gc.trimmed:
        raise TrimmedGrammarError("family counts are schema-determined only for untrimmed output")
    fams = LEGACY_FAMILIES if Gc.construction == "legacy" else GENERAL_FAMILIES
    counts = Counter(Gc.provenance.values())
    return {f: counts.get(f, 0) for f in fams}


def closed_form_counts(G: Wcfg, A: Wfsa, legacy: bool = False) -> dict:
    """Family sizes predicted from the sizes of the inputs alone."""
    nQ, nI, nF = len(A.states), len(A.initial_states), len(A.final_states)
    sigma = len(G.alphabet | A.alphabet)
    d = sum(nQ ** (len(r.rhs) + 1) for r in G.rules if r.rhs)
    e = sum(1 for r in G.rules if not r.rhs) * nQ
    f = len(A.arcs)
    if legacy:
        return {"4a": nI * nF, "4d": d, "4e": e, "4f": f}
    return {
        "5a": nI * nF,
        "5b": nI * nQ * nQ,
        "5c": nI * nQ,
        "5d": d,
        "5e": e,
        "5f": f,
        "5g": sigma * nQ ** 3,
    }


def size_bound_5d(G: Wcfg, A: Wfsa) -> int:
    """``|R| * |Q| ** (1 + longest rhs)``, the asymptotic bound on family 5d."""
    return len(G.rules) * len(A.states) ** (1 + G.longest_rhs)


# provenance sidecar ---------------------------------------------------------------


def format_source_ref(ref) -> str:
    if ref is None:
        return "-"
    kind = ref[0]
    if kind == "init_final":
        return f"init_final:{ref[1]}:{ref[2]}"
    return f"{kind}:{ref[1]}"


def parse_source_ref(text: str):
    if text == "-":
        return None
    kind, _, rest = text.partition(":")
    if kind == "init_final":
        qi, qf = rest.split(":")
        return (kind, qi, qf)
    if kind in ("rule", "arc"):
        return (kind, int(rest))
    raise ValueError(f"bad source reference {text!r}")


def dump_provenance(Gc: IntersectionGrammar) -> str:
    """One line per rule, in serialization order: ``index family sourceRef``."""
    lines = [
        f"{i} {Gc.provenance[r.id]} {format_source_ref(Gc.source_refs[r.id])}"
        for i, r in enumerate(Gc.grammar.rules)
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_provenance(text: str) -> dict:
    """Map rule index to ``(family, source_ref)``."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"provenance line {lineno}: expected 'index family sourceRef'")
        out[int(parts[0])] = (parts[1], parse_source_ref(parts[2]))
    return out
