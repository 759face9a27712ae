"""Small random grammar/automaton pairs for property tests."""
from __future__ import annotations

import random

from .automaton import Wfsa, epsilon_closure
from .grammar import Wcfg
from .semiring import BOOLEAN, REAL, DivergenceError, get_semiring
from .symbols import EPSILON

NONTERMINALS = ("S", "X", "Y")
TERMINALS = ("a", "b")


def random_instance(seed: int, semiring="real", epsilon_prob: float = 0.3, allow_epsilon: bool = True):
    """Return ``(G, A)`` drawn from a seeded generator.

    Sizes: at most 3 states, 2 terminals, 3 nonterminals, 6 rules with
    right-hand sides of length at most 2. Weights are uniform in (0.1, 0.9)
    and rounded to three decimals. Automata whose epsilon cycles have real
    weight >= 1 are redrawn. The draw is made over the reals and then
    mapped: the boolean semiring turns every weight into true, the tropical
    semiring reads the same numbers as costs. So one seed gives the same
    structure under every semiring.
    """
    sr = get_semiring(semiring)
    rng = random.Random(seed)
    while True:
        G, A = _draw(rng, epsilon_prob if allow_epsilon else 0.0)
        try:
            epsilon_closure(A)
        except DivergenceError:
            continue
        return _convert_grammar(G, sr), _convert_automaton(A, sr)


def _w(rng):
    return round(rng.uniform(0.1, 0.9), 3)


def _draw(rng, epsilon_prob):
    nts = NONTERMINALS[: rng.randint(1, 3)]
    sigma = TERMINALS[: rng.randint(1, 2)]
    symbols = nts + sigma
    rules = []
    for i in range(rng.randint(1, 6)):
        lhs = "S" if i == 0 else rng.choice(nts)
        rhs = tuple(rng.choice(symbols) for _ in range(rng.randint(0, 2)))
        rules.append((lhs, rhs, _w(rng)))
    G = Wcfg.build(REAL, "S", rules, nonterminals=nts)

    states = [f"q{i}" for i in range(rng.randint(1, 3))]
    A = Wfsa(REAL)
    for q in states:
        A.add_state(q)
    initial = rng.sample(states, rng.randint(1, len(states)))
    final = rng.sample(states, rng.randint(1, len(states)))
    for q in states:
        if q in initial:
            A.set_initial(q, _w(rng))
        if q in final:
            A.set_final(q, _w(rng))
    for _ in range(rng.randint(1, 5)):
        label = EPSILON if rng.random() < epsilon_prob else rng.choice(sigma)
        A.add_arc(rng.choice(states), label, _w(rng), rng.choice(states))
    return G, A


def _map(sr, x):
    return True if sr is BOOLEAN else x


def _convert_grammar(G: Wcfg, sr) -> Wcfg:
    if sr is REAL:
        return G
    rules = [(r.lhs, r.rhs, _map(sr, r.weight)) for r in G.rules]
    return Wcfg.build(sr, G.start, rules, nonterminals=G.nonterminals)


def _convert_automaton(A: Wfsa, sr) -> Wfsa:
    if sr is REAL:
        return A
    B = Wfsa(sr)
    for q in A.states:
        B.add_state(q)
    for q in A.states:
        if q in A.initial:
            B.set_initial(q, _map(sr, A.initial[q]))
        if q in A.final:
            B.set_final(q, _map(sr, A.final[q]))
    for arc in A.arcs:
        B.add_arc(arc.source, arc.label, _map(sr, arc.weight), arc.target)
    return B
