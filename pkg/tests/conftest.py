from __future__ import annotations

from pathlib import Path

import pytest

from barhillel.automaton import parse_wfsa
from barhillel.grammar import parse_wcfg

FIXTURES = Path(__file__).parent / "fixtures"


def load_wfsa(name, semiring=None):
    return parse_wfsa((FIXTURES / name).read_text(), semiring)


def load_wcfg(name, semiring=None):
    return parse_wcfg((FIXTURES / name).read_text(), semiring)


@pytest.fixture
def cyclists():
    return load_wcfg("cyclists.wcfg"), load_wfsa("cyclists.wfsa")


@pytest.fixture
def case1():
    return load_wcfg("ab.wcfg"), load_wfsa("case1.wfsa")


@pytest.fixture
def case2():
    return load_wcfg("ab.wcfg"), load_wfsa("case2.wfsa")


def build(Gc, spec):
    """Intersection derivation from nested ``(key, child, ...)`` specs.

    Keys are those understood by ``IntersectionGrammar.lookup``; a terminal
    or epsilon leaf is filled in from the rule itself.
    """
    from barhillel.grammar import Derivation
    from barhillel.symbols import EPSILON

    key, *kids = spec
    r = Gc.lookup(key)
    assert r is not None, f"no rule for {key}"
    if not r.rhs:
        return Derivation(r.id, (EPSILON,))
    out = []
    it = iter(kids)
    for sym in r.rhs:
        out.append(build(Gc, next(it)) if sym in Gc.grammar.nonterminals else sym)
    return Derivation(r.id, tuple(out))


def cyclists_derivation_spec():
    # rule ids in cyclists.wcfg: 0 S, 1 NP->Adj N, 2 NP->Adj NP, 3 N, 4 Adj->many, 5 Adj->eps, 6 Det
    det = (("5d", 6, ("q0", "q1")), (("5f", 0),))
    many = (("5d", 4, ("q1", "q2")), (("5g", "many", "q1", "q2", "q2"), (("5f", 1),), (("5f", 2),)))
    inner = (
        ("5d", 1, ("q2", "q2", "q3")),
        (("5e", 5, "q2"),),
        (("5d", 3, ("q2", "q3")), (("5f", 3),)),
    )
    np_ = (("5d", 2, ("q1", "q2", "q3")), many, inner)
    s = (("5d", 0, ("q0", "q1", "q3")), det, np_)
    sbar = (("5c", "q0", "q3"), s)
    for _ in range(2):
        sbar = (("5b", "q0", "q3", "q3"), sbar, (("5f", 4),))
    return (("5a", "q0", "q3"), sbar)
