"""Input validation helpers shared by the mechanisms and the CLI.

Everything that enters a mechanism is converted to the exact rational type
:data:`Q` so that price comparisons and tie-breaks are exact.  ``Q`` is
``gmpy2.mpq`` when gmpy2 is importable (several times faster on the long
denominators the unrounded mechanism produces) and :class:`fractions.Fraction`
otherwise.  The two compare, hash and mix with each other transparently.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational, Real
from typing import Iterable

try:
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    Q = Fraction


class InvalidInputError(ValueError):
    """Raised when a speed, size or instance field is malformed."""


def as_fraction(value, name: str = "value") -> Q:
    """Convert ``value`` to an exact rational of type :data:`Q`.

    Accepts ints, Fractions, ``"p/q"`` or decimal strings, and floats (taken
    at their exact binary value).  Booleans are rejected.
    """
    if isinstance(value, bool):
        raise InvalidInputError(f"{name}: booleans are not numbers")
    if type(value) is Q:
        return value
    if isinstance(value, Rational):
        return Q(value.numerator, value.denominator)
    if isinstance(value, str):
        try:
            return Q(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError(f"{name}: cannot parse {value!r} as a rational") from exc
    if isinstance(value, Real):
        f = float(value)
        if f != f or f in (float("inf"), float("-inf")):
            raise InvalidInputError(f"{name}: {value!r} is not finite")
        return Q(f)
    raise InvalidInputError(f"{name}: unsupported type {type(value).__name__}")


def check_positive(value, name: str = "value") -> Q:
    x = as_fraction(value, name)
    if x <= 0:
        raise InvalidInputError(f"{name} must be positive, got {x}")
    return x


def check_speeds(speeds: Iterable, name: str = "speeds") -> tuple[Q, ...]:
    """Validate a non-empty sequence of machine speeds."""
    out = tuple(check_positive(s, f"{name}[{i}]") for i, s in enumerate(_as_list(speeds)))
    if not out:
        raise InvalidInputError(f"{name}: at least one machine is required")
    return out


def check_sizes(sizes: Iterable, name: str = "sizes") -> tuple[Q, ...]:
    """Validate a (possibly empty) sequence of job sizes."""
    return tuple(check_positive(p, f"{name}[{i}]") for i, p in enumerate(_as_list(sizes)))


def _as_list(values) -> list:
    # numpy arrays and other array-likes
    if hasattr(values, "tolist"):
        values = values.tolist()
    if isinstance(values, (str, bytes)):
        raise InvalidInputError("expected a sequence of numbers, got a string")
    return list(values)


def is_rational(x) -> bool:
    """True for non-integer exact rationals (Fraction or mpq), the values we render as strings."""
    return isinstance(x, Rational) and not isinstance(x, int)


def fraction_str(x) -> str:
    """Render a rational as ``"p/q"`` (or ``"p"`` when integral)."""
    x = Fraction(int(x.numerator), int(x.denominator)) if isinstance(x, Rational) else Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"
