"""Commutative semirings with a partial Kleene star.

Three closed instances are provided: ``BOOLEAN``, ``REAL`` and ``TROPICAL``.
Models (automata, grammars) store raw carrier values together with a
:class:`Semiring`; :class:`Weight` pairs a value with its semiring for
callers who want checked arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

REL_TOL = 1e-9
ABS_TOL = 1e-12


class SemiringMismatch(TypeError):
    """Raised when weights from different semirings are combined."""


class DivergenceError(ArithmeticError):
    """Raised when an infinite sum that a computation depends on diverges."""


class _Divergent:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "DIVERGENT"

    def __bool__(self):
        return False


#: Outcome of :meth:`Semiring.star` when the geometric series has no value.
DIVERGENT = _Divergent()


class Semiring:
    """Interface shared by the three concrete semirings.

    Subclasses provide the scalar operations on raw carrier values and a
    handful of vectorised operations (numpy float arrays) used by the
    size-stratified inside computation in :mod:`barhillel.grammar`.
    """

    name: str
    zero: Any
    one: Any

    def plus(self, a, b):
        raise NotImplementedError

    def times(self, a, b):
        raise NotImplementedError

    def star(self, a):
        raise NotImplementedError

    def eq(self, a, b) -> bool:
        return a == b

    def is_zero(self, a) -> bool:
        return self.eq(a, self.zero)

    def parse(self, token: str):
        raise NotImplementedError

    def format(self, value) -> str:
        raise NotImplementedError

    def check(self, value):
        """Return ``value`` coerced into the carrier, or raise ValueError."""
        raise NotImplementedError

    def sum(self, values):
        total = self.zero
        for v in values:
            total = self.plus(total, v)
        return total

    def product(self, values):
        total = self.one
        for v in values:
            total = self.times(total, v)
        return total

    # vectorised helpers; vectors are float arrays indexed by derivation size

    _vzero: float
    _vone: float

    def to_float(self, value) -> float:
        return float(value)

    def from_float(self, x: float):
        return float(x)

    def vzeros(self, n: int) -> np.ndarray:
        return np.full(n, self._vzero)

    def vunit(self, n: int, weight=None) -> np.ndarray:
        v = self.vzeros(n)
        v[0] = self._vone if weight is None else self.to_float(weight)
        return v

    def vadd(self, a, b):
        raise NotImplementedError

    def vscale(self, weight, a):
        raise NotImplementedError

    def vconv(self, a, b):
        raise NotImplementedError

    def vshift(self, a, k: int = 1):
        out = self.vzeros(len(a))
        if k < len(a):
            out[k:] = a[: len(a) - k]
        return out

    def __repr__(self):
        return f"<{self.name} semiring>"

    def __reduce__(self):
        return (get_semiring, (self.name,))


class BooleanSemiring(Semiring):
    name = "boolean"
    zero = False
    one = True
    _vzero = 0.0
    _vone = 1.0

    def plus(self, a, b):
        return a or b

    def times(self, a, b):
        return a and b

    def star(self, a):
        return True

    def parse(self, token):
        t = token.lower()
        if t in ("1", "true", "1.0"):
            return True
        if t in ("0", "false", "0.0"):
            return False
        raise ValueError(f"not a boolean weight: {token!r}")

    def format(self, value):
        return "1" if value else "0"

    def check(self, value):
        if value in (0, 1):
            return bool(value)
        raise ValueError(f"not a boolean weight: {value!r}")

    def to_float(self, value):
        return 1.0 if value else 0.0

    def from_float(self, x):
        return bool(x > 0)

    def vadd(self, a, b):
        return np.maximum(a, b)

    def vscale(self, weight, a):
        return a if weight else self.vzeros(len(a))

    def vconv(self, a, b):
        n = len(a)
        return (np.convolve(a, b)[:n] > 0).astype(float)


class RealSemiring(Semiring):
    name = "real"
    zero = 0.0
    one = 1.0
    _vzero = 0.0
    _vone = 1.0

    def plus(self, a, b):
        return a + b

    def times(self, a, b):
        return a * b

    def star(self, a):
        if a >= 1:
            return DIVERGENT
        return 1.0 / (1.0 - a)

    def eq(self, a, b):
        return math.isclose(a, b, rel_tol=REL_TOL, abs_tol=ABS_TOL)

    def parse(self, token):
        return self.check(float(token))

    def format(self, value):
        return repr(float(value))

    def check(self, value):
        value = float(value)
        if not value >= 0 or math.isinf(value):
            raise ValueError(f"real weights must be finite and nonnegative, got {value!r}")
        return value

    def vadd(self, a, b):
        return a + b

    def vscale(self, weight, a):
        return weight * a

    def vconv(self, a, b):
        return np.convolve(a, b)[: len(a)]


class TropicalSemiring(Semiring):
    name = "tropical"
    zero = math.inf
    one = 0.0
    _vzero = math.inf
    _vone = 0.0

    def plus(self, a, b):
        return min(a, b)

    def times(self, a, b):
        return a + b

    def star(self, a):
        if a < 0:
            return DIVERGENT
        return 0.0

    def eq(self, a, b):
        if math.isinf(a) or math.isinf(b):
            return a == b
        return math.isclose(a, b, rel_tol=REL_TOL, abs_tol=ABS_TOL)

    def parse(self, token):
        return self.check(float(token))

    def format(self, value):
        return "inf" if math.isinf(value) else repr(float(value))

    def check(self, value):
        value = float(value)
        if math.isnan(value) or value == -math.inf:
            raise ValueError(f"not a tropical weight: {value!r}")
        return value

    def vadd(self, a, b):
        return np.minimum(a, b)

    def vscale(self, weight, a):
        return weight + a

    def vconv(self, a, b):
        n = len(a)
        out = self.vzeros(n)
        for i in np.flatnonzero(np.isfinite(a)):
            out[i:] = np.minimum(out[i:], a[i] + b[: n - i])
        return out


BOOLEAN = BooleanSemiring()
REAL = RealSemiring()
TROPICAL = TropicalSemiring()

SEMIRINGS = {s.name: s for s in (BOOLEAN, REAL, TROPICAL)}


def get_semiring(name: str | Semiring) -> Semiring:
    if isinstance(name, Semiring):
        return name
    try:
        return SEMIRINGS[name]
    except KeyError:
        raise ValueError(f"unknown semiring {name!r}; expected one of {sorted(SEMIRINGS)}") from None


@dataclass(frozen=True)
class Weight:
    """A carrier value tagged with its semiring."""

    semiring: Semiring
    value: Any

    def _check(self, other: Weight):
        if not isinstance(other, Weight):
            return NotImplemented
        if other.semiring is not self.semiring:
            raise SemiringMismatch(f"cannot combine {self.semiring.name} and {other.semiring.name} weights")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Weight(self.semiring, self.semiring.plus(self.value, other.value))

    def __mul__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Weight(self.semiring, self.semiring.times(self.value, other.value))

    def star(self):
        s = self.semiring.star(self.value)
        return DIVERGENT if s is DIVERGENT else Weight(self.semiring, s)

    def __eq__(self, other):
        if not isinstance(other, Weight):
            return NotImplemented
        return self.semiring is other.semiring and self.semiring.eq(self.value, other.value)

    def __hash__(self):
        return hash(self.semiring.name)

    def __repr__(self):
        return f"Weight({self.semiring.name}, {self.semiring.format(self.value)})"

    @classmethod
    def zero(cls, semiring) -> Weight:
        s = get_semiring(semiring)
        return cls(s, s.zero)

    @classmethod
    def one(cls, semiring) -> Weight:
        s = get_semiring(semiring)
        return cls(s, s.one)


def weight(semiring, value) -> Weight:
    s = get_semiring(semiring)
    return Weight(s, s.check(value))


def plus(a: Weight, b: Weight) -> Weight:
    return a + b


def times(a: Weight, b: Weight) -> Weight:
    return a * b


def star(a: Weight):
    """Kleene star of ``a``, or :data:`DIVERGENT` when the series has no value."""
    return a.star()
