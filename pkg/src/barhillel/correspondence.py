"""Derivations of the generalized intersection grammar as (tree, path) pairs.

:func:`to_pair` maps a derivation of the generalized output to the pair of
a derivation of the input grammar and a path of the input automaton;
:func:`from_pair` inverts it. The checkers enumerate both sides within
size bounds and test that the map is a weight- and yield-preserving
bijection, and that string weights factor as ``L_G(y) * L_A(y)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .automaton import (
    Path,
    PathError,
    Wfsa,
    automaton_string_weight,
    enumerate_paths,
    is_full_path,
    path_states,
    path_weight,
    path_yield,
)
from .grammar import (
    Derivation,
    MalformedDerivation,
    Tree,
    Wcfg,
    check_derivation,
    derivation_size,
    derivation_weight,
    derivation_yield,
    enumerate_derivations,
    grammar_string_weight_truncated,
    symbol_text,
)
from .intersection import IntersectionGrammar, Triplet, intersect_general, intersect_legacy, trim
from .semiring import DivergenceError
from .symbols import EPSILON, as_string


class ProvenanceError(ValueError):
    """The derivation does not have the shape the generalized construction produces."""


class YieldMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class JoinPair:
    """A derivation and a path with the same yield; weight is their product."""

    tree: Tree
    path: Path
    weight: object

    @property
    def key(self):
        return (self.tree, self.path)

    def __eq__(self, other):
        return isinstance(other, JoinPair) and self.key == other.key

    def __hash__(self):
        return hash(self.key)


def make_pair(G: Wcfg, A: Wfsa, tree: Tree, path: Path) -> JoinPair:
    ty, py = derivation_yield(G, tree), path_yield(A, path)
    if ty != py:
        raise YieldMismatch(f"tree yields {' '.join(ty)!r} but path yields {' '.join(py)!r}")
    return JoinPair(tree, path, G.semiring.times(derivation_weight(G, tree), path_weight(A, path)))


# derivation -> pair ------------------------------------------------------------------


def _require_general(Gc: IntersectionGrammar):
    if Gc.construction != "general":
        raise ValueError("the pair correspondence is defined only for the generalized construction")


def _family(Gc, node):
    try:
        return Gc.provenance[node.rule]
    except KeyError:
        raise ProvenanceError(f"rule {node.rule} has no provenance") from None


def _eps_arc(Gc, node) -> int:
    if not isinstance(node, Derivation) or _family(Gc, node) != "5f":
        raise ProvenanceError("expected an epsilon-arc rule")
    aid = Gc.source_refs[node.rule][1]
    if not Gc.source_automaton.arcs[aid].is_epsilon:
        raise ProvenanceError(f"arc {aid} is not an epsilon arc")
    return aid


def _psi(Gc: IntersectionGrammar, node: Derivation):
    """Subderivation rooted at a non-<sbar> triplet -> (subtree, arc tuple)."""
    fam = _family(Gc, node)
    lhs = Gc.grammar.rule(node.rule).lhs
    ref = Gc.source_refs[node.rule]
    if fam == "5f":
        arc = Gc.source_automaton.arcs[ref[1]]
        if arc.is_epsilon:
            raise ProvenanceError("epsilon arc outside a 5g or 5b rule")
        return arc.label, (arc.id,)
    if fam == "5e":
        return Derivation(ref[1], (EPSILON,)), ()
    if fam == "5g":
        aid = _eps_arc(Gc, node.children[0])
        tree, arcs = _psi(Gc, node.children[1])
        return tree, (aid,) + arcs
    if fam == "5d":
        kids, arcs = [], ()
        for child in node.children:
            t, a = _psi(Gc, child)
            kids.append(t)
            arcs += a
        return Derivation(ref[1], tuple(kids)), arcs
    raise ProvenanceError(f"family {fam} cannot occur below triplet {symbol_text(lhs)}")


def _xi(Gc: IntersectionGrammar, node: Derivation):
    """Subderivation rooted at an <sbar> triplet -> (tree, arc tuple)."""
    fam = _family(Gc, node)
    if fam == "5b":
        tree, arcs = _xi(Gc, node.children[0])
        return tree, arcs + (_eps_arc(Gc, node.children[1]),)
    if fam == "5c":
        return _psi(Gc, node.children[0])
    raise ProvenanceError(f"family {fam} cannot occur below an <sbar> triplet")


def to_pair(Gc: IntersectionGrammar, d: Derivation) -> JoinPair:
    _require_general(Gc)
    check_derivation(Gc.grammar, d)
    if _family(Gc, d) != "5a":
        raise ProvenanceError("a full derivation starts with a 5a rule")
    _, qi, _qf = Gc.source_refs[d.rule]
    tree, arcs = _xi(Gc, d.children[0])
    path = Path(arcs, None if arcs else qi)
    return make_pair(Gc.source_grammar, Gc.source_automaton, tree, path)


def reconstruct_path(Gc: IntersectionGrammar, d: Derivation) -> Path:
    """Read the automaton path off the 5f rules at the leaves, left to right."""
    A = Gc.source_automaton
    arcs = []
    stack = [d]
    while stack:
        node = stack.pop()
        if isinstance(node, str):
            continue
        if Gc.provenance.get(node.rule) in ("5f", "4f"):
            arcs.append(Gc.source_refs[node.rule][1])
        stack.extend(reversed(node.children))
    lhs = Gc.grammar.rule(d.rule).lhs
    if isinstance(lhs, Triplet):
        first, last = lhs.left, lhs.right
    else:
        _, first, last = Gc.source_refs[d.rule]
    path = Path(tuple(arcs), None if arcs else first)
    start, end = path_states(A, path)
    if (start, end) != (first, last):
        raise PathError(f"recovered path runs {start}->{end}, expected {first}->{last}")
    return path


# pair -> derivation -----------------------------------------------------------------


def from_pair(Gc: IntersectionGrammar, pair: JoinPair) -> Derivation:
    """The unique derivation of ``Gc`` that :func:`to_pair` maps to ``pair``."""
    _require_general(Gc)
    G, A = Gc.source_grammar, Gc.source_automaton
    tree, path = pair.tree, pair.path
    if derivation_yield(G, tree) != path_yield(A, path):
        raise YieldMismatch("tree and path yields differ")
    if isinstance(tree, str) or G.rule(tree.rule).lhs != G.start:
        raise MalformedDerivation("tree must be rooted at the start symbol")
    if not is_full_path(A, path):
        raise PathError("path must run from an initial to a final state")
    qi, qf = path_states(A, path)
    arcs = [A.arcs[i] for i in path.arcs]
    cut = len(arcs)
    while cut and arcs[cut - 1].is_epsilon:
        cut -= 1

    def need(key):
        r = Gc.lookup(key)
        if r is None:
            raise ProvenanceError(f"intersection grammar has no rule for {key}")
        return r.id

    def eps_node(arc):
        return Derivation(need(("5f", arc.id)), (EPSILON,))

    pos = 0
    state = qi

    def terminal(a):
        nonlocal pos, state
        run = []
        while pos < cut and arcs[pos].is_epsilon:
            run.append(arcs[pos])
            pos += 1
        if pos >= cut or arcs[pos].label != a:
            raise YieldMismatch(f"path does not supply terminal {a!r} here")
        last = arcs[pos]
        pos += 1
        node = Derivation(need(("5f", last.id)), (a,))
        for e in reversed(run):
            node = Derivation(need(("5g", a, e.source, e.target, last.target)), (eps_node(e), node))
        state = last.target
        return node

    def build(t: Derivation):
        nonlocal state
        r = G.rule(t.rule)
        if r.is_epsilon:
            return Derivation(need(("5e", r.id, state)), (EPSILON,))
        states = [state]
        kids = []
        for sym, child in zip(r.rhs, t.children):
            kids.append(build(child) if sym in G.nonterminals else terminal(sym))
            states.append(state)
        return Derivation(need(("5d", r.id, tuple(states))), tuple(kids))

    node = build(tree)
    if pos != cut:
        raise YieldMismatch("path has arcs left over after the tree's yield")
    node = Derivation(need(("5c", qi, state)), (node,))
    for e in arcs[cut:]:
        node = Derivation(need(("5b", qi, e.source, e.target)), (node, eps_node(e)))
    return Derivation(need(("5a", qi, qf)), (node,))


# bounded join and checkers -----------------------------------------------------------


def bounded_join(G: Wcfg, A: Wfsa, max_tree_nodes: int, max_path_arcs: int) -> list[JoinPair]:
    """Every (derivation, full path) pair with equal yield within the bounds."""
    if max_tree_nodes < 1 or max_path_arcs < 0:
        return []
    by_yield: dict = {}
    for p in enumerate_paths(A, max_path_arcs, full_only=True):
        by_yield.setdefault(path_yield(A, p), []).append(p)
    out = []
    for t in enumerate_derivations(G, G.start, max_tree_nodes):
        for p in by_yield.get(derivation_yield(G, t), ()):
            out.append(make_pair(G, A, t, p))
    return out


def outer_bound(max_tree_nodes: int, max_path_arcs: int) -> int:
    """Largest intersection derivation a pair within the inner bounds can map to.

    Every arc costs one 5f node plus at most one 5g or 5b node; the 5c and
    5a wrappers add two more.
    """
    return max_tree_nodes + 2 * max_path_arcs + 2


_TREE_FAMILIES = frozenset({"5d", "5e"})


class _ImageEnumerator:
    """Derivations of a generalized output grouped by the size of their image.

    ``exact(X, t, p)`` lists the derivations rooted at ``X`` with exactly
    ``t`` 5d/5e nodes (nodes of the projected tree) and ``p`` 5f nodes
    (arcs of the projected path). Every rule with two or more children
    gives each child a positive share, and the only weight-one unit rules
    (5a, 5c) do not form cycles, so the recursion terminates.
    """

    def __init__(self, Gc: IntersectionGrammar):
        self.Gc = Gc
        self.G = Gc.grammar
        self.memo: dict = {}

    def cost(self, r):
        fam = self.Gc.provenance[r.id]
        return (1 if fam in _TREE_FAMILIES else 0, 1 if fam == "5f" else 0)

    def exact(self, X, t, p):
        key = (X, t, p)
        if key in self.memo:
            if self.memo[key] is None:
                raise RecursionError(f"cost-free cycle through {symbol_text(X)}")
            return self.memo[key]
        self.memo[key] = None
        out = []
        for r in self.G.rules_for(X):
            ct, cp = self.cost(r)
            if ct > t or cp > p:
                continue
            if not r.rhs:
                if (ct, cp) == (t, p):
                    out.append(Derivation(r.id, (EPSILON,)))
                continue
            for kids in self._fill(r.rhs, 0, t - ct, p - cp):
                out.append(Derivation(r.id, kids))
        self.memo[key] = out
        return out

    def _fill(self, rhs, k, t, p):
        sym = rhs[k]
        if sym not in self.G.nonterminals:
            if k + 1 == len(rhs):
                if (t, p) == (0, 0):
                    yield (sym,)
                return
            for rest in self._fill(rhs, k + 1, t, p):
                yield (sym,) + rest
            return
        if k + 1 == len(rhs):
            for d in self.exact(sym, t, p):
                yield (d,)
            return
        for t0 in range(t + 1):
            for p0 in range(p + 1):
                if t0 + p0 == 0:
                    continue
                tails = list(self._fill(rhs, k + 1, t - t0, p - p0))
                if not tails:
                    continue
                for d in self.exact(sym, t0, p0):
                    for rest in tails:
                        yield (d,) + rest

    def within(self, max_tree_nodes, max_path_arcs):
        out = []
        for t in range(max_tree_nodes + 1):
            for p in range(max_path_arcs + 1):
                out.extend(self.exact(self.G.start, t, p))
        return out


@dataclass
class BijectionReport:
    checked: int = 0
    join_pairs: int = 0
    well_defined: bool = True
    injective: bool = True
    surjective_within_bounds: bool = True
    weight_preserving: bool = True
    yield_preserving: bool = True
    round_trip: bool = True
    counterexamples: list = field(default_factory=list)

    FLAGS = ("well_defined", "injective", "surjective_within_bounds", "weight_preserving", "yield_preserving", "round_trip")

    @property
    def ok(self) -> bool:
        return all(getattr(self, f) for f in self.FLAGS)

    def fail(self, flag: str, message: str):
        setattr(self, flag, False)
        self.counterexamples.append(f"{flag}: {message}")

    def to_line(self, seed=0) -> str:
        flags = " ".join(f"{f}:{str(getattr(self, f)).lower()}" for f in self.FLAGS)
        return f"{seed} checked:{self.checked} join_pairs:{self.join_pairs} {flags}"

    def to_text(self) -> str:
        lines = [
            f"derivations checked: {self.checked}",
            f"join pairs within bounds: {self.join_pairs}",
        ]
        lines += [f"  {f}: {'yes' if getattr(self, f) else 'NO'}" for f in self.FLAGS]
        lines += [f"  counterexample: {c}" for c in self.counterexamples]
        return "\n".join(lines)


def _describe(Gc, d):
    from .grammar import to_leftmost_sequence

    return "rules " + " ".join(map(str, to_leftmost_sequence(Gc.grammar, d)))


def check_strong_equivalence(
    G: Wcfg, A: Wfsa, max_tree_nodes: int = 6, max_path_arcs: int = 6, max_counterexamples: int = 20
) -> BijectionReport:
    """Test the derivation/pair bijection on everything within the bounds.

    Enumerates the derivations of the trimmed generalized output whose
    images have at most ``max_tree_nodes`` tree nodes and ``max_path_arcs``
    arcs. All of them lie within :func:`outer_bound` nodes, which is
    checked, so every join pair within the bounds must have a preimage
    among them.
    """
    Gc = trim(intersect_general(G, A))
    sr = G.semiring
    report = BijectionReport()
    limit = outer_bound(max_tree_nodes, max_path_arcs)
    images: dict = {}

    def fail(flag, msg):
        if len(report.counterexamples) < max_counterexamples:
            report.fail(flag, msg)
        else:
            setattr(report, flag, False)

    for d in _ImageEnumerator(Gc).within(max_tree_nodes, max_path_arcs):
        if derivation_size(d) > limit:
            fail("surjective_within_bounds", f"{_describe(Gc, d)} exceeds the {limit}-node bound")
        report.checked += 1
        try:
            pair = to_pair(Gc, d)
            recovered = reconstruct_path(Gc, d)
        except (ValueError, MalformedDerivation) as e:
            fail("well_defined", f"{_describe(Gc, d)}: {e}")
            continue
        if recovered != pair.path:
            fail("well_defined", f"{_describe(Gc, d)}: leaf traversal gives {recovered.arcs}, recursion gives {pair.path.arcs}")
        if not is_full_path(A, pair.path) or G.rule(pair.tree.rule).lhs != G.start:
            fail("well_defined", f"{_describe(Gc, d)}: image is not a derivation/path pair")
        if derivation_yield(Gc.grammar, d) != derivation_yield(G, pair.tree):
            fail("yield_preserving", _describe(Gc, d))
        if not sr.eq(derivation_weight(Gc.grammar, d), pair.weight):
            fail("weight_preserving", f"{_describe(Gc, d)}: {sr.format(derivation_weight(Gc.grammar, d))} != {sr.format(pair.weight)}")
        if pair.key in images:
            fail("injective", f"{_describe(Gc, d)} and {_describe(Gc, images[pair.key][0])} map to the same pair")
        images[pair.key] = (d, derivation_weight(Gc.grammar, d))
        try:
            back = from_pair(Gc, pair)
        except ValueError as e:
            fail("round_trip", f"{_describe(Gc, d)}: {e}")
            continue
        if back != d:
            fail("round_trip", f"{_describe(Gc, d)} comes back as {_describe(Gc, back)}")

    joins = bounded_join(G, A, max_tree_nodes, max_path_arcs)
    report.join_pairs = len(joins)
    for p in joins:
        if p.key not in images:
            fail("surjective_within_bounds", f"pair with path {p.path.arcs} has no preimage within {limit} nodes")
            continue
        # to_pair(d) has the key of p and from_pair of it was compared with d
        # above, so both round trips hold for p unless they were flagged there.
        if not sr.eq(images[p.key][1], p.weight):
            fail("weight_preserving", f"pair with path {p.path.arcs}: join weight differs from its preimage")
    return report


CONVERGENCE_MARGIN = 1e-3


@dataclass
class WeakEntry:
    string: tuple
    intersection: object
    product: object
    converged: bool
    status: str  # "pass", "fail" or "undefined"
    note: str = ""


@dataclass
class WeakReport:
    semiring: object
    entries: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(e.status == "pass" for e in self.entries)

    def to_text(self) -> str:
        sr = self.semiring
        lines = []
        for e in self.entries:
            s = " ".join(e.string) or "<eps>"
            val = lambda v: "-" if v is None else sr.format(v)
            lines.append(f"{e.status:9s} {s!r}: intersection {val(e.intersection)} vs product {val(e.product)}{'  ' + e.note if e.note else ''}")
        return "\n".join(lines)


def check_weak_equivalence(
    G: Wcfg, A: Wfsa, strings, tol: float = 1e-6, max_nodes: int = 120, legacy: bool = False
) -> WeakReport:
    """Compare ``L_Gc(y)`` with ``L_G(y) * L_A(y)`` for each string.

    Both truncated sums must converge with strata below ``tol / 1000``, so
    that the truncation error cannot by itself push the two sides ``tol``
    apart; otherwise the entry is reported as undefined.
    """
    Gc = trim(intersect_legacy(G, A) if legacy else intersect_general(G, A))
    sr = G.semiring
    report = WeakReport(sr)
    inner = tol * CONVERGENCE_MARGIN
    for y in strings:
        y = as_string(y)
        lhs, lhs_ok = grammar_string_weight_truncated(Gc.grammar, y, max_nodes, inner)
        g, g_ok = grammar_string_weight_truncated(G, y, max_nodes, inner)
        try:
            a = automaton_string_weight(A, y)
        except DivergenceError as e:
            report.entries.append(WeakEntry(y, lhs, None, lhs_ok, "undefined", str(e)))
            continue
        rhs = sr.times(g, a)
        converged = lhs_ok and g_ok
        if sr.name == "real":
            same = abs(lhs - rhs) <= tol * max(1.0, abs(rhs))
        else:
            same = sr.eq(lhs, rhs)
        if same:
            status = "pass" if converged else "undefined"
        else:
            status = "fail" if converged else "undefined"
        note = "" if converged else "truncated sums did not converge"
        report.entries.append(WeakEntry(y, lhs, rhs, converged, status, note))
    return report
