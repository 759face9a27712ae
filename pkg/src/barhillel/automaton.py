"""Weighted finite-state automata whose arcs may be labeled with epsilon."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

from .semiring import DIVERGENT, DivergenceError, Semiring, get_semiring
from .symbols import EPSILON, ParseError, as_string, check_symbol, content_lines, resolve_semiring

State = Hashable


@dataclass(frozen=True)
class Arc:
    id: int
    source: State
    label: str
    weight: object
    target: State

    @property
    def is_epsilon(self) -> bool:
        return self.label == EPSILON


@dataclass(frozen=True)
class Path:
    """A sequence of arc ids. ``anchor`` names the state of a length-0 path."""

    arcs: tuple[int, ...] = ()
    anchor: State | None = None

    def __post_init__(self):
        if self.arcs and self.anchor is not None:
            object.__setattr__(self, "anchor", None)

    def __len__(self):
        return len(self.arcs)


class PathError(ValueError):
    pass


@dataclass
class Wfsa:
    semiring: Semiring
    states: list = field(default_factory=list)
    arcs: list[Arc] = field(default_factory=list)
    initial: dict = field(default_factory=dict)
    final: dict = field(default_factory=dict)
    alphabet: set = field(default_factory=set)

    @classmethod
    def build(cls, semiring, states: Iterable, arcs: Iterable[tuple], initial=None, final=None, alphabet=()):
        """Construct from ``(source, label, weight, target)`` tuples.

        ``initial`` and ``final`` map states to weights; states listed there
        with weight ``None`` get the semiring's one.
        """
        sr = get_semiring(semiring)
        a = cls(sr)
        for q in states:
            a.add_state(q)
        for q, w in (initial or {}).items():
            a.add_state(q)
            a.set_initial(q, sr.one if w is None else w)
        for q, w in (final or {}).items():
            a.add_state(q)
            a.set_final(q, sr.one if w is None else w)
        for src, label, w, dst in arcs:
            a.add_arc(src, label, w, dst)
        a.alphabet.update(alphabet)
        return a

    def add_state(self, q):
        if q not in self._state_set():
            self.states.append(q)
            self._states_cache = None

    def _state_set(self):
        cache = getattr(self, "_states_cache", None)
        if cache is None or len(cache) != len(self.states):
            cache = self._states_cache = set(self.states)
        return cache

    def set_initial(self, q, w):
        w = self.semiring.check(w)
        if self.semiring.is_zero(w):
            self.initial.pop(q, None)
        else:
            self.initial[q] = w

    def set_final(self, q, w):
        w = self.semiring.check(w)
        if self.semiring.is_zero(w):
            self.final.pop(q, None)
        else:
            self.final[q] = w

    def add_arc(self, source, label, w, target) -> Arc:
        for q in (source, target):
            if q not in self._state_set():
                raise ValueError(f"arc endpoint {q!r} is not a declared state")
        w = self.semiring.check(w)
        if self.semiring.is_zero(w):
            raise ValueError(f"arc {source}->{target} has zero weight")
        if label != EPSILON:
            check_symbol(label)
            self.alphabet.add(label)
        arc = Arc(len(self.arcs), source, label, w, target)
        self.arcs.append(arc)
        return arc

    @property
    def initial_states(self) -> list:
        return [q for q in self.states if q in self.initial]

    @property
    def final_states(self) -> list:
        return [q for q in self.states if q in self.final]

    def lam(self, q):
        return self.initial.get(q, self.semiring.zero)

    def rho(self, q):
        return self.final.get(q, self.semiring.zero)

    @property
    def has_epsilon_arcs(self) -> bool:
        return any(a.is_epsilon for a in self.arcs)

    def arcs_from(self, q) -> list[Arc]:
        index = getattr(self, "_out_cache", None)
        if index is None or index[0] != len(self.arcs):
            by_src = defaultdict(list)
            for arc in self.arcs:
                by_src[arc.source].append(arc)
            index = self._out_cache = (len(self.arcs), by_src)
        return index[1].get(q, [])


# paths -----------------------------------------------------------------------


def path_states(A: Wfsa, pi: Path) -> tuple:
    """First and last state of ``pi``; raises PathError if arcs do not chain."""
    if not pi.arcs:
        if pi.anchor is None:
            raise PathError("length-0 path needs an anchor state")
        return pi.anchor, pi.anchor
    try:
        arcs = [A.arcs[i] for i in pi.arcs]
    except (IndexError, TypeError):
        raise PathError(f"unknown arc id in {pi.arcs}") from None
    for prev, nxt in zip(arcs, arcs[1:]):
        if prev.target != nxt.source:
            raise PathError(f"arcs {prev.id} and {nxt.id} are not adjacent")
    return arcs[0].source, arcs[-1].target


def is_full_path(A: Wfsa, pi: Path) -> bool:
    first, last = path_states(A, pi)
    return first in A.initial and last in A.final


def path_yield(A: Wfsa, pi: Path) -> tuple[str, ...]:
    path_states(A, pi)
    return tuple(A.arcs[i].label for i in pi.arcs if A.arcs[i].label != EPSILON)


def path_weight(A: Wfsa, pi: Path, as_subpath: bool = False):
    first, last = path_states(A, pi)
    sr = A.semiring
    w = sr.product(A.arcs[i].weight for i in pi.arcs)
    if as_subpath:
        return w
    if first not in A.initial or last not in A.final:
        raise PathError("not a full path: must start in an initial state and end in a final state")
    return sr.times(sr.times(A.initial[first], w), A.final[last])


def concat_paths(A: Wfsa, left: Path, right: Path) -> Path:
    if not left.arcs:
        if right.arcs:
            if A.arcs[right.arcs[0]].source != left.anchor:
                raise PathError("paths do not meet")
            return right
        if left.anchor != right.anchor:
            raise PathError("paths do not meet")
        return left
    if not right.arcs:
        if A.arcs[left.arcs[-1]].target != right.anchor:
            raise PathError("paths do not meet")
        return left
    out = Path(left.arcs + right.arcs)
    path_states(A, out)
    return out


def enumerate_paths(A: Wfsa, max_arcs: int, yield_filter=None, full_only: bool = False) -> list[Path]:
    """All well-formed paths with at most ``max_arcs`` arcs.

    Sorted lexicographically by arc-id sequence; length-0 paths come first,
    in state order.
    """
    if max_arcs < 0:
        raise ValueError("max_arcs must be >= 0")
    target = None if yield_filter is None else as_string(yield_filter)
    starts = A.initial_states if full_only else list(A.states)
    order = {q: i for i, q in enumerate(A.states)}
    found: list[tuple] = []

    def accept(end, consumed):
        if target is not None and consumed != len(target):
            return False
        return not full_only or end in A.final

    def walk(q, arcs, consumed):
        if len(arcs) == max_arcs:
            return
        for arc in A.arcs_from(q):
            if arc.label == EPSILON:
                step = consumed
            elif target is None:
                step = consumed
            elif consumed < len(target) and target[consumed] == arc.label:
                step = consumed + 1
            else:
                continue
            ext = arcs + (arc.id,)
            if accept(arc.target, step):
                found.append((ext, -1, None))
            walk(arc.target, ext, step)

    for q in starts:
        if accept(q, 0):
            found.append(((), order[q], q))
        walk(q, (), 0)

    found.sort(key=lambda item: (item[0], item[1]))
    return [Path(arcs, anchor) for arcs, _, anchor in found]


# exact string weights ------------------------------------------------------------


def epsilon_closure(A: Wfsa) -> dict:
    """All-pairs epsilon closure ``E[p][q]``, including the empty subpath.

    Uses pivot elimination with the semiring star at each pivot. Raises
    DivergenceError if a pivot's star diverges.
    """
    sr = A.semiring
    states = list(A.states)
    n = len(states)
    idx = {q: i for i, q in enumerate(states)}
    m = [[sr.zero] * n for _ in range(n)]
    for arc in A.arcs:
        if arc.is_epsilon:
            i, j = idx[arc.source], idx[arc.target]
            m[i][j] = sr.plus(m[i][j], arc.weight)
    for k in range(n):
        s = sr.star(m[k][k])
        if s is DIVERGENT:
            raise DivergenceError(f"epsilon cycle through {states[k]!r} has weight {sr.format(m[k][k])}")
        col = [sr.times(m[i][k], s) for i in range(n)]
        row = m[k][:]
        nxt = [r[:] for r in m]
        for i in range(n):
            if sr.is_zero(col[i]):
                continue
            for j in range(n):
                if sr.is_zero(row[j]):
                    continue
                nxt[i][j] = sr.plus(nxt[i][j], sr.times(col[i], row[j]))
        m = nxt
    for i in range(n):
        m[i][i] = sr.plus(sr.one, m[i][i])
    return {p: {q: m[idx[p]][idx[q]] for q in states} for p in states}


def symbol_matrix(A: Wfsa, symbol: str) -> dict:
    sr = A.semiring
    out: dict = defaultdict(dict)
    for arc in A.arcs:
        if arc.label == symbol:
            row = out[arc.source]
            row[arc.target] = sr.plus(row.get(arc.target, sr.zero), arc.weight)
    return out


def automaton_string_weight(A: Wfsa, y, closure: dict | None = None):
    """Sum of the weights of all full paths yielding ``y``."""
    sr = A.semiring
    y = as_string(y)
    E = epsilon_closure(A) if closure is None else closure

    def through_closure(vec):
        out = {}
        for p, w in vec.items():
            for q, e in E[p].items():
                if not sr.is_zero(e):
                    out[q] = sr.plus(out.get(q, sr.zero), sr.times(w, e))
        return out

    vec = through_closure(dict(A.initial))
    for sym in y:
        if sym not in A.alphabet:
            return sr.zero
        M = symbol_matrix(A, sym)
        step = {}
        for p, w in vec.items():
            for q, a in M.get(p, {}).items():
                step[q] = sr.plus(step.get(q, sr.zero), sr.times(w, a))
        vec = through_closure(step)
    return sr.sum(sr.times(w, A.final[q]) for q, w in vec.items() if q in A.final)


# text format -----------------------------------------------------------------------


def parse_wfsa(text: str, semiring=None) -> Wfsa:
    """Parse the line-based automaton format.

    ``semiring`` overrides a missing header and must agree with a present one.
    """
    lines = content_lines(text)
    header = None
    if lines and lines[0][1][0] == "semiring":
        lineno, toks = lines.pop(0)
        if len(toks) != 2:
            raise ParseError(f"line {lineno}: expected 'semiring NAME'")
        header = toks[1]
    sr = resolve_semiring(header, semiring)
    A = Wfsa(sr)
    declared = set()
    arc_lines = []
    for lineno, toks in lines:
        kind = toks[0]
        try:
            if kind == "state":
                _parse_state_line(A, toks, declared)
            elif kind == "arc":
                if len(toks) not in (4, 5):
                    raise ParseError("expected 'arc SRC DST LABEL [WEIGHT]'")
                arc_lines.append((lineno, toks))
            elif kind == "semiring":
                raise ParseError("semiring header must be the first line")
            else:
                raise ParseError(f"unknown directive {kind!r}")
        except (ParseError, ValueError) as e:
            raise ParseError(f"line {lineno}: {e}") from None
    for lineno, toks in arc_lines:
        src, dst, label = toks[1:4]
        try:
            w = sr.parse(toks[4]) if len(toks) == 5 else sr.one
            for q in (src, dst):
                if q not in declared:
                    raise ParseError(f"state {q!r} used by an arc has no 'state' line")
            A.add_arc(src, label, w, dst)
        except (ParseError, ValueError) as e:
            raise ParseError(f"line {lineno}: {e}") from None
    return A


def _parse_state_line(A: Wfsa, toks: Sequence[str], declared: set):
    if len(toks) < 2:
        raise ParseError("expected 'state NAME [initial [W]] [final [W]]'")
    name = toks[1]
    if name in declared:
        raise ParseError(f"state {name!r} declared twice")
    declared.add(name)
    A.add_state(name)
    sr = A.semiring
    rest = list(toks[2:])
    while rest:
        marker = rest.pop(0)
        if marker not in ("initial", "final"):
            raise ParseError(f"unexpected token {marker!r} in state line")
        w = sr.one
        if rest and rest[0] not in ("initial", "final"):
            w = sr.parse(rest.pop(0))
        (A.set_initial if marker == "initial" else A.set_final)(name, w)


def dump_wfsa(A: Wfsa) -> str:
    sr = A.semiring
    out = [f"semiring {sr.name}"]
    for q in A.states:
        parts = ["state", str(q)]
        if q in A.initial:
            parts += ["initial", sr.format(A.initial[q])]
        if q in A.final:
            parts += ["final", sr.format(A.final[q])]
        out.append(" ".join(parts))
    for arc in A.arcs:
        out.append(f"arc {arc.source} {arc.target} {arc.label} {sr.format(arc.weight)}")
    return "\n".join(out) + "\n"
