"""Reserved tokens and helpers shared by the text formats."""
from __future__ import annotations

from .semiring import REAL, get_semiring

EPSILON = "<eps>"
SBAR = "<sbar>"
RESERVED = frozenset({EPSILON, SBAR})


class ParseError(ValueError):
    pass


class SemiringConflict(ValueError):
    pass


def check_symbol(sym: str) -> str:
    if not isinstance(sym, str) or not sym or sym in RESERVED or any(c.isspace() for c in sym) or "#" in sym:
        raise ValueError(f"illegal symbol {sym!r}")
    return sym


def as_string(y) -> tuple[str, ...]:
    """Normalise a string argument to a tuple of symbols.

    A Python ``str`` is split on whitespace; any other iterable is taken
    symbol by symbol.
    """
    if isinstance(y, str):
        return tuple(y.split())
    return tuple(y)


def content_lines(text: str) -> list[tuple[int, list[str]]]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line.split()))
    return out


def resolve_semiring(header, override):
    if header is not None:
        try:
            sr = get_semiring(header)
        except ValueError as e:
            raise ParseError(str(e)) from None
        if override is not None and get_semiring(override) is not sr:
            raise SemiringConflict(f"file declares {sr.name} but {get_semiring(override).name} was requested")
        return sr
    return REAL if override is None else get_semiring(override)
