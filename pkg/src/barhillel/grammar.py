"""Weighted context-free grammars and their derivations.

Derivations are ordered trees. Internal nodes are :class:`Derivation`
objects labeled by a rule id; leaves are plain strings (a terminal, or
:data:`~barhillel.symbols.EPSILON` under an epsilon rule). A bare leaf is
itself a valid size-0 subderivation.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Hashable, Iterable, Sequence, Union

import numpy as np

from .semiring import Semiring, get_semiring
from .symbols import EPSILON, ParseError, as_string, check_symbol, content_lines, resolve_semiring

Symbol = Hashable


@dataclass(frozen=True)
class Rule:
    id: int
    lhs: Symbol
    rhs: tuple
    weight: object

    @property
    def is_epsilon(self) -> bool:
        return not self.rhs


@dataclass(frozen=True)
class Derivation:
    rule: int
    children: tuple

    def __repr__(self):
        return f"D({self.rule}, {list(self.children)!r})"


Tree = Union[Derivation, str]


class MalformedDerivation(ValueError):
    pass


@dataclass
class Wcfg:
    semiring: Semiring
    start: Symbol
    rules: tuple[Rule, ...] = ()
    nonterminals: frozenset = field(default_factory=frozenset)
    alphabet: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        self.rules = tuple(self.rules)
        self.nonterminals = frozenset(self.nonterminals) | {self.start} | {r.lhs for r in self.rules}
        rhs_terms = {s for r in self.rules for s in r.rhs if s not in self.nonterminals}
        self.alphabet = frozenset(self.alphabet) | rhs_terms
        if self.nonterminals & self.alphabet:
            raise ValueError(f"symbols used as both terminal and nonterminal: {sorted(map(str, self.nonterminals & self.alphabet))}")
        self._by_id = {r.id: r for r in self.rules}
        if len(self._by_id) != len(self.rules):
            raise ValueError("duplicate rule ids")
        self._by_lhs = defaultdict(list)
        for r in self.rules:
            if self.semiring.is_zero(r.weight):
                raise ValueError(f"rule {r.id} has zero weight")
            self._by_lhs[r.lhs].append(r)

    @classmethod
    def build(cls, semiring, start, rules: Iterable[tuple], nonterminals=(), alphabet=()) -> Wcfg:
        """Build from ``(lhs, rhs, weight)`` triples; ids follow list order."""
        sr = get_semiring(semiring)
        rs = []
        for i, item in enumerate(rules):
            lhs, rhs = item[0], tuple(item[1])
            w = sr.one if len(item) < 3 or item[2] is None else sr.check(item[2])
            rs.append(Rule(i, lhs, rhs, w))
        return cls(sr, start, tuple(rs), frozenset(nonterminals), frozenset(alphabet))

    def rule(self, rid: int) -> Rule:
        try:
            return self._by_id[rid]
        except KeyError:
            raise MalformedDerivation(f"unknown rule id {rid!r}") from None

    def rules_for(self, lhs) -> list[Rule]:
        return self._by_lhs.get(lhs, [])

    def is_nonterminal(self, sym) -> bool:
        return sym in self.nonterminals

    @property
    def longest_rhs(self) -> int:
        return max((len(r.rhs) for r in self.rules), default=0)

    def restrict(self, keep_ids: Iterable[int]) -> Wcfg:
        """Same grammar with only the rules in ``keep_ids`` (ids preserved)."""
        keep = set(keep_ids)
        rules = tuple(r for r in self.rules if r.id in keep)
        nts = {self.start} | {r.lhs for r in rules} | {s for r in rules for s in r.rhs if s in self.nonterminals}
        return Wcfg(self.semiring, self.start, rules, frozenset(nts), frozenset(self.alphabet))


# tree views -------------------------------------------------------------------------


def derivation_root(G: Wcfg, t: Tree):
    return t if isinstance(t, str) else G.rule(t.rule).lhs


def check_derivation(G: Wcfg, t: Tree) -> None:
    """Raise MalformedDerivation unless ``t`` matches the rules of ``G``."""
    if isinstance(t, str):
        if t != EPSILON and t not in G.alphabet:
            raise MalformedDerivation(f"leaf {t!r} is not a terminal")
        return
    stack = [t]
    while stack:
        node = stack.pop()
        r = G.rule(node.rule)
        if r.is_epsilon:
            if node.children != (EPSILON,):
                raise MalformedDerivation(f"epsilon rule {r.id} must have a single epsilon leaf")
            continue
        if len(node.children) != len(r.rhs):
            raise MalformedDerivation(f"rule {r.id} expects {len(r.rhs)} children, got {len(node.children)}")
        for sym, child in zip(r.rhs, node.children):
            if sym in G.nonterminals:
                if not isinstance(child, Derivation) or G.rule(child.rule).lhs != sym:
                    raise MalformedDerivation(f"rule {r.id}: child for {sym!r} has the wrong root")
                stack.append(child)
            elif child != sym:
                raise MalformedDerivation(f"rule {r.id}: expected terminal leaf {sym!r}, got {child!r}")


def iter_nodes(t: Tree):
    """Internal nodes in pre-order."""
    if isinstance(t, str):
        return
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(c for c in reversed(node.children) if isinstance(c, Derivation))


def derivation_size(t: Tree) -> int:
    return sum(1 for _ in iter_nodes(t))


def leaves(t: Tree) -> list[str]:
    if isinstance(t, str):
        return [t]
    out = []
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, str):
            out.append(node)
        else:
            stack.extend(reversed(node.children))
    return out


def derivation_yield(G: Wcfg, t: Tree) -> tuple[str, ...]:
    check_derivation(G, t)
    return tuple(x for x in leaves(t) if x != EPSILON)


def derivation_weight(G: Wcfg, t: Tree):
    check_derivation(G, t)
    sr = G.semiring
    return sr.product(G.rule(n.rule).weight for n in iter_nodes(t))


def to_leftmost_sequence(G: Wcfg, t: Tree) -> list[int]:
    """Rule ids in the order a leftmost rewriting applies them."""
    if isinstance(t, str):
        raise MalformedDerivation("a bare leaf has no rule sequence")
    check_derivation(G, t)
    return [n.rule for n in iter_nodes(t)]


def from_leftmost_sequence(G: Wcfg, seq: Sequence[int], root=None) -> Derivation:
    """Rebuild the tree whose leftmost rule sequence is ``seq``."""
    seq = list(seq)
    if not seq:
        raise MalformedDerivation("empty rule sequence")
    pos = 0

    def build(expected):
        nonlocal pos
        if pos >= len(seq):
            raise MalformedDerivation("rule sequence ended before the derivation was complete")
        r = G.rule(seq[pos])
        pos += 1
        if expected is not None and r.lhs != expected:
            raise MalformedDerivation(f"rule {r.id} rewrites {r.lhs!r}, but {expected!r} is leftmost")
        if r.is_epsilon:
            return Derivation(r.id, (EPSILON,))
        return Derivation(r.id, tuple(build(s) if s in G.nonterminals else s for s in r.rhs))

    t = build(root)
    if pos != len(seq):
        raise MalformedDerivation(f"{len(seq) - pos} rules left over after the derivation was complete")
    return t


# enumeration -----------------------------------------------------------------------


def minimal_sizes(G: Wcfg) -> dict:
    """Fewest rule applications needed to derive a terminal string from each nonterminal."""
    best = {X: math.inf for X in G.nonterminals}
    changed = True
    while changed:
        changed = False
        for r in G.rules:
            size = 1 + sum(best[s] for s in r.rhs if s in G.nonterminals)
            if size < best[r.lhs]:
                best[r.lhs] = size
                changed = True
    return best


class _Enumerator:
    def __init__(self, G: Wcfg, y: tuple | None):
        self.G = G
        self.y = y
        self.min = minimal_sizes(G)
        self.exact = lru_cache(maxsize=None)(self._exact)
        self.span = lru_cache(maxsize=None)(self._span)

    # yield-agnostic: trees rooted at X with exactly n nodes

    def _exact(self, X, n):
        out = []
        for r in self.G.rules_for(X):
            if r.is_epsilon:
                if n == 1:
                    out.append(Derivation(r.id, (EPSILON,)))
                continue
            for kids in self._fill(r.rhs, 0, n - 1):
                out.append(Derivation(r.id, kids))
        return out

    def _rest_min(self, rhs, k):
        return sum(self.min[s] for s in rhs[k:] if s in self.G.nonterminals)

    def _fill(self, rhs, k, budget):
        if k == len(rhs):
            if budget == 0:
                yield ()
            return
        sym = rhs[k]
        if sym not in self.G.nonterminals:
            for rest in self._fill(rhs, k + 1, budget):
                yield (sym,) + rest
            return
        rest_min = self._rest_min(rhs, k + 1)
        lo = self.min[sym]
        if lo == math.inf or rest_min == math.inf:
            return
        for s in range(lo, budget - rest_min + 1):
            subs = self.exact(sym, s)
            if not subs:
                continue
            for rest in list(self._fill(rhs, k + 1, budget - s)):
                for t in subs:
                    yield (t,) + rest

    # yield-restricted: trees rooted at X covering y[i:j] with exactly n nodes

    def _span(self, X, i, j, n):
        out = []
        for r in self.G.rules_for(X):
            if r.is_epsilon:
                if n == 1 and i == j:
                    out.append(Derivation(r.id, (EPSILON,)))
                continue
            for kids in self._fill_span(r.rhs, 0, i, j, n - 1):
                out.append(Derivation(r.id, kids))
        return out

    def _fill_span(self, rhs, k, i, j, budget):
        if k == len(rhs):
            if budget == 0 and i == j:
                yield ()
            return
        sym = rhs[k]
        if sym not in self.G.nonterminals:
            if i < j and self.y[i] == sym:
                for rest in self._fill_span(rhs, k + 1, i + 1, j, budget):
                    yield (sym,) + rest
            return
        rest_min = self._rest_min(rhs, k + 1)
        lo = self.min[sym]
        if lo == math.inf or rest_min == math.inf:
            return
        for m in range(i, j + 1):
            for s in range(lo, budget - rest_min + 1):
                subs = self.span(sym, i, m, s)
                if not subs:
                    continue
                for rest in list(self._fill_span(rhs, k + 1, m, j, budget - s)):
                    for t in subs:
                        yield (t,) + rest


def enumerate_derivations(G: Wcfg, root, max_nodes: int, yield_filter=None) -> list[Derivation]:
    """All subderivations rooted at ``root`` with at most ``max_nodes`` rule applications.

    Ordered by size, then by rule order. With ``yield_filter`` only
    derivations of that string are returned.
    """
    if root not in G.nonterminals:
        raise KeyError(f"unknown nonterminal {root!r}")
    if max_nodes < 1:
        return []
    y = None if yield_filter is None else as_string(yield_filter)
    en = _Enumerator(G, y)
    out = []
    for n in range(1, max_nodes + 1):
        out.extend(en.exact(root, n) if y is None else en.span(root, 0, len(y), n))
    return out


# weights of strings ----------------------------------------------------------------------


def inside_by_size(G: Wcfg, y, max_nodes: int, root=None) -> list:
    """Per-size sums of derivation weights for ``y``.

    Entry ``n`` is the semiring sum of the weights of all derivations of
    ``y`` rooted at ``root`` (default: the start symbol) with exactly ``n``
    rule applications, for ``0 <= n <= max_nodes``.
    """
    sr = G.semiring
    y = as_string(y)
    root = G.start if root is None else root
    L = len(y)
    size = max_nodes + 1
    nts = G.nonterminals
    weights = {r.id: sr.to_float(r.weight) for r in G.rules}
    unit = sr.vunit(size)
    chart: dict = {}
    for _ in range(size + 1):
        new: dict = {}
        for r in G.rules:
            if r.is_epsilon:
                for i in range(L + 1):
                    _accumulate(sr, new, (r.lhs, i, i), sr.vscale(weights[r.id], sr.vshift(unit)))
                continue
            for i in range(L + 1):
                partial = {i: unit}
                for sym in r.rhs:
                    nxt: dict = {}
                    for p, vec in partial.items():
                        if sym not in nts:
                            if p < L and y[p] == sym:
                                _accumulate(sr, nxt, p + 1, vec)
                            continue
                        for q in range(p, L + 1):
                            c = chart.get((sym, p, q))
                            if c is not None:
                                _accumulate(sr, nxt, q, sr.vconv(vec, c))
                    partial = nxt
                    if not partial:
                        break
                for j, vec in partial.items():
                    _accumulate(sr, new, (r.lhs, i, j), sr.vscale(weights[r.id], sr.vshift(vec)))
        if _same_chart(new, chart):
            break
        chart = new
    top = chart.get((root, 0, L))
    if top is None:
        return [sr.zero] * size
    return [sr.from_float(x) for x in top]


def _accumulate(sr, table, key, vec):
    old = table.get(key)
    table[key] = vec if old is None else sr.vadd(old, vec)


def _same_chart(a, b):
    if a.keys() != b.keys():
        return False
    return all(np.array_equal(a[k], b[k]) for k in a)


def grammar_string_weight_truncated(G: Wcfg, y, max_nodes: int, tol: float = 1e-9):
    """Truncated ``L_G(y)`` and a convergence flag.

    Sums derivations with at most ``max_nodes`` rule applications. The sum
    is reported as converged when the last two size strata are negligible:
    below ``tol`` for the real semiring, and not changing the total for the
    idempotent semirings.
    """
    if max_nodes < 1:
        raise ValueError("max_nodes must be >= 1")
    sr = G.semiring
    strata = inside_by_size(G, y, max_nodes)
    total = sr.sum(strata)
    tail = strata[-2:]
    if sr.name == "real":
        converged = all(abs(s) < tol for s in tail)
    else:
        head = sr.sum(strata[:-2])
        converged = sr.eq(head, total)
    return total, converged


def support_test(G: Wcfg, y, max_nodes: int) -> bool:
    """True if some derivation of ``y`` has at most ``max_nodes`` nodes."""
    return bool(enumerate_derivations(G, G.start, max_nodes, y))


# trimming ---------------------------------------------------------------------------


def productive_nonterminals(G: Wcfg) -> set:
    productive: set = set()
    changed = True
    while changed:
        changed = False
        for r in G.rules:
            if r.lhs not in productive and all(s in productive or s not in G.nonterminals for s in r.rhs):
                productive.add(r.lhs)
                changed = True
    return productive


def useful_rule_ids(G: Wcfg) -> list[int]:
    """Ids of rules that occur in at least one derivation from the start symbol."""
    productive = productive_nonterminals(G)
    good = [r for r in G.rules if r.lhs in productive and all(s in productive or s not in G.nonterminals for s in r.rhs)]
    by_lhs = defaultdict(list)
    for r in good:
        by_lhs[r.lhs].append(r)
    reachable = set()
    if G.start in productive:
        reachable.add(G.start)
        stack = [G.start]
        while stack:
            X = stack.pop()
            for r in by_lhs[X]:
                for s in r.rhs:
                    if s in G.nonterminals and s not in reachable:
                        reachable.add(s)
                        stack.append(s)
    return [r.id for r in good if r.lhs in reachable]


# text format -----------------------------------------------------------------------


def symbol_text(sym) -> str:
    if isinstance(sym, tuple):
        return "[" + ",".join(symbol_text(s) for s in sym) + "]"
    return str(sym)


def parse_wcfg(text: str, semiring=None) -> Wcfg:
    lines = content_lines(text)
    header = None
    if lines and lines[0][1][0] == "semiring":
        lineno, toks = lines.pop(0)
        if len(toks) != 2:
            raise ParseError(f"line {lineno}: expected 'semiring NAME'")
        header = toks[1]
    sr = resolve_semiring(header, semiring)
    start = None
    raw = []
    for lineno, toks in lines:
        try:
            if toks[0] == "start":
                if len(toks) != 2 or start is not None:
                    raise ParseError("expected a single 'start NAME' line")
                start = check_symbol(toks[1])
            elif toks[0] == "rule":
                raw.append(_parse_rule(sr, toks))
            elif toks[0] == "semiring":
                raise ParseError("semiring header must be the first line")
            else:
                raise ParseError(f"unknown directive {toks[0]!r}")
        except (ParseError, ValueError) as e:
            raise ParseError(f"line {lineno}: {e}") from None
    if start is None:
        if not raw:
            raise ParseError("grammar has neither a start line nor rules")
        start = raw[0][0]
    try:
        return Wcfg.build(sr, start, raw)
    except ValueError as e:
        raise ParseError(str(e)) from None


def _parse_rule(sr, toks):
    if len(toks) < 3 or toks[2] != "->":
        raise ParseError("expected 'rule LHS -> RHS... [: WEIGHT]'")
    body = toks[3:]
    w = sr.one
    if ":" in body:
        k = body.index(":")
        if k != len(body) - 2:
            raise ParseError("weight must be a single token after ':'")
        w = sr.parse(body[k + 1])
        body = body[:k]
    lhs = check_symbol(toks[1])
    if not body:
        raise ParseError("empty right-hand side; write <eps>")
    if EPSILON in body:
        if len(body) != 1:
            raise ParseError("<eps> may not appear alongside other symbols")
        body = []
    return lhs, tuple(check_symbol(s) for s in body), w


def dump_wcfg(G: Wcfg) -> str:
    sr = G.semiring
    out = [f"semiring {sr.name}", f"start {symbol_text(G.start)}"]
    for r in G.rules:
        rhs = " ".join(symbol_text(s) for s in r.rhs) if r.rhs else EPSILON
        out.append(f"rule {symbol_text(r.lhs)} -> {rhs} : {sr.format(r.weight)}")
    return "\n".join(out) + "\n"
