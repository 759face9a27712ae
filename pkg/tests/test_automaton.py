from __future__ import annotations

import itertools
import random

import pytest

from barhillel.automaton import (
    Path,
    PathError,
    Wfsa,
    automaton_string_weight,
    concat_paths,
    dump_wfsa,
    enumerate_paths,
    epsilon_closure,
    is_full_path,
    parse_wfsa,
    path_weight,
    path_yield,
)
from barhillel.generate import random_instance
from barhillel.semiring import BOOLEAN, REAL, TROPICAL, DivergenceError
from barhillel.symbols import EPSILON, ParseError, SemiringConflict

from .conftest import load_wfsa

# The, eps, many, cyclists, then the final epsilon loop twice
CYCLISTS_PATH = Path((0, 1, 2, 3, 4, 4))


def random_acyclic_eps(seed, sr=REAL):
    """Random automaton whose epsilon arcs only go from lower to higher states."""
    rng = random.Random(seed)
    n = rng.randint(1, 4)
    states = [f"q{i}" for i in range(n)]
    A = Wfsa(sr)
    for q in states:
        A.add_state(q)
    for q in rng.sample(states, rng.randint(1, n)):
        A.set_initial(q, round(rng.uniform(0.1, 0.9), 3))
    for q in rng.sample(states, rng.randint(1, n)):
        A.set_final(q, round(rng.uniform(0.1, 0.9), 3))
    for _ in range(rng.randint(1, 7)):
        i, j = rng.randrange(n), rng.randrange(n)
        w = round(rng.uniform(0.1, 0.9), 3)
        if rng.random() < 0.4 and i != j:
            i, j = min(i, j), max(i, j)
            A.add_arc(states[i], EPSILON, w, states[j])
        else:
            A.add_arc(states[i], rng.choice("ab"), w, states[j])
    return A


def path_sum(A, y, max_arcs):
    sr = A.semiring
    return sr.sum(path_weight(A, p) for p in enumerate_paths(A, max_arcs, y, full_only=True))


def test_cyclists_path_yield_and_weight():
    A = load_wfsa("cyclists.wfsa")
    assert path_yield(A, CYCLISTS_PATH) == ("The", "many", "cyclists")
    expected = 1 * 2 * 0.3 * 0.75 * 1 * 0.6 * 0.6 * 1
    assert REAL.eq(path_weight(A, CYCLISTS_PATH), expected)
    assert REAL.eq(path_weight(A, CYCLISTS_PATH), 0.162)
    assert REAL.eq(path_weight(A, CYCLISTS_PATH, as_subpath=True), 0.162)
    assert is_full_path(A, CYCLISTS_PATH)


def test_length_zero_paths():
    A = load_wfsa("cyclists.wfsa")
    empty = Path((), "q2")
    assert path_yield(A, empty) == ()
    assert path_weight(A, empty, as_subpath=True) == REAL.one
    with pytest.raises(PathError):
        path_weight(A, empty)
    B = Wfsa.build(REAL, ["p"], [], initial={"p": 0.5}, final={"p": 0.4})
    assert REAL.eq(path_weight(B, Path((), "p")), 0.2)


def test_malformed_paths():
    A = load_wfsa("cyclists.wfsa")
    with pytest.raises(PathError):
        path_yield(A, Path((0, 2)))
    with pytest.raises(PathError):
        path_yield(A, Path((99,)))
    with pytest.raises(PathError):
        path_weight(A, Path((1, 2)))


def test_case1_path():
    A = load_wfsa("case1.wfsa")
    assert path_yield(A, Path((0, 1, 2))) == ("a", "b")
    paths = enumerate_paths(A, 3, "a b", full_only=True)
    assert paths == [Path((0, 1, 2))]


def test_enumerate_case2_loop_counts():
    A = load_wfsa("case2.wfsa")
    paths = enumerate_paths(A, 4, ("a", "b"), full_only=True)
    assert len(paths) == 3
    assert sorted(len(p) for p in paths) == [2, 3, 4]


def test_enumerate_empty_when_no_state_is_both_initial_and_final():
    A = load_wfsa("cyclists.wfsa")
    assert enumerate_paths(A, 0, full_only=True) == []
    with pytest.raises(ValueError):
        enumerate_paths(A, -1)


def test_enumerate_is_sorted_and_complete():
    A = load_wfsa("cyclists.wfsa")
    paths = enumerate_paths(A, 3)
    assert [p.arcs for p in paths] == sorted(p.arcs for p in paths)
    # brute force: every arc sequence of length <= 3 that chains
    expect = 0
    for n in range(1, 4):
        for seq in itertools.product(range(len(A.arcs)), repeat=n):
            try:
                path_yield(A, Path(seq))
            except PathError:
                continue
            expect += 1
    assert len(paths) == expect + len(A.states)


def test_concatenation():
    A = load_wfsa("cyclists.wfsa")
    left, right = Path((0, 1)), Path((2, 3, 4))
    whole = concat_paths(A, left, right)
    assert path_yield(A, whole) == path_yield(A, left) + path_yield(A, right)
    assert REAL.eq(
        path_weight(A, whole, as_subpath=True),
        path_weight(A, left, as_subpath=True) * path_weight(A, right, as_subpath=True),
    )
    assert concat_paths(A, Path((), "q0"), left) == left
    with pytest.raises(PathError):
        concat_paths(A, right, left)


def test_closure_examples():
    E = epsilon_closure(load_wfsa("case2.wfsa"))
    assert REAL.eq(E["q1"]["q1"], 1.5)
    E = epsilon_closure(load_wfsa("cyclists.wfsa"))
    assert REAL.eq(E["q3"]["q3"], 2.5)
    assert REAL.eq(E["q1"]["q2"], 0.3)
    A = Wfsa.build(REAL, ["p", "q"], [("p", "a", 0.5, "q")])
    E = epsilon_closure(A)
    assert E == {"p": {"p": 1.0, "q": 0.0}, "q": {"p": 0.0, "q": 1.0}}


def test_closure_divergence():
    A = Wfsa.build(REAL, ["p", "q"], [("p", EPSILON, 0.5, "q"), ("q", EPSILON, 2.0, "p")])
    with pytest.raises(DivergenceError):
        epsilon_closure(A)
    T = Wfsa.build(TROPICAL, ["p"], [("p", EPSILON, -1.0, "p")])
    with pytest.raises(DivergenceError):
        automaton_string_weight(T, "")


def test_string_weight_examples():
    assert REAL.eq(automaton_string_weight(load_wfsa("case2.wfsa"), "a b"), 1.5)
    A = load_wfsa("cyclists.wfsa")
    assert REAL.eq(automaton_string_weight(A, "The many cyclists"), 2 * 0.3 * 0.75 * 1 * REAL.star(0.6))
    assert REAL.eq(automaton_string_weight(A, "The many cyclists"), 1.125)
    assert automaton_string_weight(A, "cyclists The") == 0.0
    assert automaton_string_weight(A, "unknown") == 0.0


@pytest.mark.parametrize("seed", range(100))
def test_closure_matches_path_enumeration_without_eps_cycles(seed):
    A = random_acyclic_eps(seed)
    n = len(A.states)
    for length in range(3):
        for y in itertools.product("ab", repeat=length):
            bound = length + (length + 1) * (n - 1)
            assert REAL.eq(automaton_string_weight(A, y), path_sum(A, y, bound))


def test_fixture_closure_matches_path_enumeration():
    A = load_wfsa("case1.wfsa")
    assert REAL.eq(automaton_string_weight(A, "a b"), path_sum(A, "a b", 6))
    A = load_wfsa("case2.wfsa")
    sums = [path_sum(A, "a b", k) for k in range(2, 40)]
    assert all(a <= b for a, b in zip(sums, sums[1:]))
    assert abs(sums[-1] - 1.5) < 1e-12
    A = load_wfsa("cyclists.wfsa")
    sums = [path_sum(A, "The many cyclists", k) for k in range(4, 60)]
    assert all(a <= b for a, b in zip(sums, sums[1:]))
    assert abs(sums[-1] - 1.125) < 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_closure_fixed_point(seed):
    _, A = random_instance(seed)
    E = epsilon_closure(A)
    step = {p: {q: 0.0 for q in A.states} for p in A.states}
    for arc in A.arcs:
        if arc.is_epsilon:
            step[arc.source][arc.target] += arc.weight
    for p in A.states:
        for q in A.states:
            rhs = (1.0 if p == q else 0.0) + sum(step[p][r] * E[r][q] for r in A.states)
            assert REAL.eq(E[p][q], rhs)


@pytest.mark.parametrize("seed", range(30))
def test_boolean_is_support_of_real(seed):
    _, R = random_instance(seed, "real")
    _, B = random_instance(seed, "boolean")
    for length in range(4):
        for y in itertools.product("ab", repeat=length):
            assert automaton_string_weight(B, y) == (automaton_string_weight(R, y) > 0)


def test_parse_fixture_and_round_trip():
    A = load_wfsa("cyclists.wfsa")
    assert A.semiring is REAL
    assert A.initial == {"q0": 1.0} and A.final == {"q3": 1.0}
    assert len(A.arcs) == 5 and A.alphabet == {"The", "many", "cyclists"}
    B = parse_wfsa(dump_wfsa(A))
    assert B.states == A.states and B.arcs == A.arcs
    assert B.initial == A.initial and B.final == A.final


def test_duplicate_arcs_are_distinct():
    A = Wfsa.build(REAL, ["p"], [("p", "a", 0.5, "p"), ("p", "a", 0.5, "p")], initial={"p": None}, final={"p": None})
    assert len(enumerate_paths(A, 1, "a", full_only=True)) == 2
    assert REAL.eq(automaton_string_weight(A, "a"), 1.0)


@pytest.mark.parametrize(
    "text",
    [
        "state p initial\narc p q a 1",
        "state p\narc p p a 0",
        "state p\narc p p <sbar> 1",
        "state p\nstate p",
        "state p bogus",
        "state p\nfrobnicate",
        "state p\nsemiring real",
        "semiring log\nstate p",
    ],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_wfsa(text)


def test_semiring_header_conflict():
    with pytest.raises(SemiringConflict):
        parse_wfsa("semiring real\nstate p", "tropical")
    A = parse_wfsa("state p initial\narc p p a", BOOLEAN)
    assert A.semiring is BOOLEAN and A.arcs[0].weight is True
