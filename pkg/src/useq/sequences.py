"""Exact terms of the sequence U(n) = r*U(n-1) + U(n-2), U(0) = b - r*a, U(1) = a.

All scalars are :class:`fractions.Fraction`.  Negative indices follow the
backward recurrence ``U(n) = U(n+2) - r*U(n+1)``.

Internally both evaluators work on integers: with ``r = p/q`` and ``D`` the
common denominator of the two seeds, ``D * q**k * U(n)`` (k tracking |n|) satisfies an
integer recurrence, and the final value is a single fraction.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

from .errors import UsageError

RationalLike = Union[Fraction, int, str]

_RATIONAL_RE = re.compile(r"\s*([+-]?\d+)(?:/(\d+))?\s*$")


def parse_rational(text: str) -> Fraction:
    """Parse ``p`` or ``p/q`` (optionally signed).  Decimals are rejected."""
    match = _RATIONAL_RE.match(text)
    if not match:
        raise UsageError(f"not a rational number: {text!r} (expected p or p/q)")
    num, den = match.groups()
    if den is not None and int(den) == 0:
        raise UsageError(f"zero denominator in {text!r}")
    return Fraction(int(num), int(den) if den is not None else 1)


def as_rational(value: RationalLike) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def format_rational(value: Fraction) -> str:
    """Decimal integer when integral, else ``p/q``."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class SequenceParams:
    a: Fraction
    b: Fraction
    r: Fraction

    def __post_init__(self):
        for name in ("a", "b", "r"):
            object.__setattr__(self, name, as_rational(getattr(self, name)))

    @property
    def u0(self) -> Fraction:
        return self.b - self.r * self.a

    @property
    def u1(self) -> Fraction:
        return self.a

    def __str__(self):
        return f"(a={format_rational(self.a)}, b={format_rational(self.b)}, r={format_rational(self.r)})"


class Family(enum.Enum):
    FIBONACCI = "fibonacci"
    LUCAS = "lucas"
    PELL = "pell"
    PELL_LUCAS = "pell-lucas"
    GENERALIZED_FIBONACCI = "generalized-fibonacci"
    GENERALIZED_PELL = "generalized-pell"
    CUSTOM = "custom"


_NAMED = {
    Family.FIBONACCI: (1, 1, 1),
    Family.LUCAS: (1, 3, 1),
    Family.PELL: (1, 2, 2),
    Family.PELL_LUCAS: (2, 6, 2),
}


def resolve(family: Family | str, a: RationalLike | None = None,
            b: RationalLike | None = None, r: RationalLike | None = None) -> SequenceParams:
    """Map a family tag to its ``(a, b, r)`` parameters.

    Named families ignore nothing silently: passing ``a``/``b``/``r`` to one of
    them is an error.  The generalized families take ``a`` and ``b``; ``CUSTOM``
    takes all three.
    """
    family = Family(family)
    given = {"a": a, "b": b, "r": r}
    if family in _NAMED:
        extra = [k for k, v in given.items() if v is not None]
        if extra:
            raise UsageError(f"{family.value} has fixed parameters; unexpected {', '.join(extra)}")
        return SequenceParams(*_NAMED[family])
    if family is Family.GENERALIZED_FIBONACCI:
        fixed_r = 1
    elif family is Family.GENERALIZED_PELL:
        fixed_r = 2
    else:
        fixed_r = None
    if fixed_r is not None:
        if r is not None:
            raise UsageError(f"{family.value} fixes r={fixed_r}")
        r = fixed_r
    missing = [k for k, v in (("a", a), ("b", b), ("r", r)) if v is None]
    if missing:
        raise UsageError(f"{family.value} requires {', '.join(missing)}")
    return SequenceParams(a, b, r)


FIBONACCI = resolve(Family.FIBONACCI)
LUCAS = resolve(Family.LUCAS)
PELL = resolve(Family.PELL)
PELL_LUCAS = resolve(Family.PELL_LUCAS)


def _integer_form(params: SequenceParams):
    p, q = params.r.numerator, params.r.denominator
    u0, u1 = params.u0, params.u1
    den = math.lcm(u0.denominator, u1.denominator)
    w0 = u0.numerator * (den // u0.denominator)
    w1 = u1.numerator * (den // u1.denominator)
    return p, q, den, w0, w1


def term(params: SequenceParams, n: int) -> Fraction:
    """U(n) by stepping the recurrence |n| times with two rolling values."""
    p, q, den, w0, w1 = _integer_form(params)
    if n >= 0:
        # W(k) = den * q**k * U(k);  W(k+2) = p*W(k+1) + q^2*W(k)
        if n == 0:
            return Fraction(w0, den)
        prev, cur = w0, w1 * q
        if q != 1:
            qq = q * q
            for _ in range(n - 1):
                prev, cur = cur, p * cur + qq * prev
        elif p != 1:
            for _ in range(n - 1):
                prev, cur = cur, p * cur + prev
        else:
            for _ in range(n - 1):
                prev, cur = cur, cur + prev
        return Fraction(cur, den * q ** n)
    # S(j) = den * q**(j+1) * U(-j), S(-1) = den*U(1), S(0) = den*q*U(0);
    # S(j) = q^2*S(j-2) - p*S(j-1)
    k = -n
    before, prev = w1, w0 * q
    qq = q * q
    for _ in range(k):
        before, prev = prev, qq * before - p * prev
    return Fraction(prev, den * q ** (k + 1))


def iter_terms(params: SequenceParams, start: int = 0) -> Iterator[Fraction]:
    """Yield U(start), U(start+1), ... indefinitely, one recurrence step each."""
    prev, cur = term(params, start), term(params, start + 1)
    r = params.r
    while True:
        yield prev
        prev, cur = cur, r * cur + prev


def term_range(params: SequenceParams, lo: int, hi: int) -> list[Fraction]:
    """``[U(lo), ..., U(hi)]`` computed in one forward pass."""
    if lo > hi:
        raise UsageError(f"empty range: lo={lo} > hi={hi}")
    out = []
    for value in iter_terms(params, lo):
        out.append(value)
        if len(out) == hi - lo + 1:
            return out
    return out  # pragma: no cover


# 2x2 symmetric matrices [[x, y], [y, z]] stored as (x, y, z).  The step
# matrix and its inverse are symmetric and all their powers commute, so
# products stay symmetric.


def _sym_mul(s, t):
    x1, y1, z1 = s
    x2, y2, z2 = t
    yy = y1 * y2
    return (x1 * x2 + yy, x1 * y2 + y1 * z2, yy + z1 * z2)


def _sym_square(s):
    x, y, z = s
    yy = y * y
    return (x * x + yy, y * (x + z), yy + z * z)


def _sym_pow(s, k: int):
    result = (1, 0, 1)
    while k:
        if k & 1:
            result = _sym_mul(result, s)
        k >>= 1
        if k:
            s = _sym_square(s)
    return result


def term_fast(params: SequenceParams, n: int) -> Fraction:
    """U(n) in O(log |n|) matrix products.

    Powers the integer matrix ``q*[[r, 1], [1, 0]]`` (or ``q`` times its inverse
    ``[[0, 1], [1, -r]]`` for negative ``n``; the determinant is -1 so the
    inverse always exists) and rescales once at the end.
    """
    p, q, den, w0, w1 = _integer_form(params)
    k = abs(n)
    step = (p, q, 0) if n >= 0 else (0, q, -p)
    # [U(n+1), U(n)]^T = M^n [U(1), U(0)]^T; only the bottom row is needed
    _, y, z = _sym_pow(step, k)
    return Fraction(y * w1 + z * w0, den * q ** k)
