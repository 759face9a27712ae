"""Graphviz DOT renderings of automata, grammars and derivation trees."""
from __future__ import annotations

from .automaton import Wfsa
from .grammar import Derivation, Wcfg, symbol_text
from .symbols import EPSILON


def _q(s) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def automaton_dot(A: Wfsa) -> str:
    sr = A.semiring
    lines = ["digraph wfsa {", "  rankdir=LR;"]
    for q in A.states:
        attrs = [f"label={_q(q)}"]
        if q in A.final:
            attrs.append("shape=doublecircle")
        else:
            attrs.append("shape=circle")
        if q in A.initial:
            attrs.append(f"xlabel={_q('start/' + sr.format(A.initial[q]))}")
        lines.append(f"  {_q(q)} [{', '.join(attrs)}];")
    for arc in A.arcs:
        label = "ε" if arc.is_epsilon else arc.label
        lines.append(f"  {_q(arc.source)} -> {_q(arc.target)} [label={_q(f'{label}/{sr.format(arc.weight)}')}, arc={arc.id}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def grammar_dot(G: Wcfg) -> str:
    """Dependency graph: an edge from each rule's LHS to each RHS symbol."""
    lines = ["digraph wcfg {"]
    seen = set()
    for r in G.rules:
        for sym in r.rhs or (EPSILON,):
            edge = (symbol_text(r.lhs), symbol_text(sym))
            if edge not in seen:
                seen.add(edge)
                lines.append(f"  {_q(edge[0])} -> {_q(edge[1])};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def derivation_dot(G: Wcfg, t: Derivation, families: dict | None = None) -> str:
    """Tree with leaves in left-to-right order; ``families`` maps rule id to a tag."""
    lines = ["digraph derivation {", "  ordering=out;", "  node [shape=plaintext];"]
    counter = 0

    def visit(node):
        nonlocal counter
        name = f"n{counter}"
        counter += 1
        if isinstance(node, str):
            label = "ε" if node == EPSILON else node
            lines.append(f"  {name} [label={_q(label)}, leaf=true];")
            return name
        r = G.rule(node.rule)
        attrs = [f"label={_q(symbol_text(r.lhs))}", f"rule={node.rule}"]
        if families and node.rule in families:
            attrs.append(f"family={_q(families[node.rule])}")
        lines.append(f"  {name} [{', '.join(attrs)}];")
        for child in node.children:
            lines.append(f"  {name} -> {visit(child)};")
        return name

    visit(t)
    lines.append("}")
    return "\n".join(lines) + "\n"
