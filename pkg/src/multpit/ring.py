"""Exact scalars and truncated power series in a formal parameter eps.

Two scalar rings are supported:

* the rationals, represented by :class:`fractions.Fraction` (plain ``int``
  values are accepted wherever a rational is expected), and
* prime fields, represented by :class:`Fp`.

:class:`EpsSeries` is the ring F[eps]/(eps^K).  It carries approximate
("border") computations: a value ``f + eps*g`` is stored as the coefficient
list ``(f, g, ...)`` truncated after K terms.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Any, Iterable, Sequence, Union

# Mersenne prime 2^61 - 1.
DEFAULT_PRIME = (1 << 61) - 1

Scalar = Union[Fraction, "Fp"]

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class RingError(ValueError):
    """Raised when values from incompatible rings are combined."""


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin; exact for every n < 3.3e24."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class Fp:
    """Residue modulo a prime.

    The modulus is trusted; use :func:`check_prime` once at the boundary
    rather than on every construction.
    """

    __slots__ = ("value", "modulus")

    def __init__(self, value: int, modulus: int):
        self.value = value % modulus
        self.modulus = modulus

    def _coerce(self, other):
        if isinstance(other, Fp):
            if other.modulus != self.modulus:
                raise RingError(
                    f"modulus mismatch: {self.modulus} vs {other.modulus}")
            return other.value
        if isinstance(other, int):
            return other
        if isinstance(other, Fraction):
            return reduce_rational(other, self.modulus)
        return None

    def __add__(self, other):
        v = self._coerce(other)
        if v is None:
            return NotImplemented
        return Fp(self.value + v, self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        if v is None:
            return NotImplemented
        return Fp(self.value - v, self.modulus)

    def __rsub__(self, other):
        v = self._coerce(other)
        if v is None:
            return NotImplemented
        return Fp(v - self.value, self.modulus)

    def __mul__(self, other):
        v = self._coerce(other)
        if v is None:
            return NotImplemented
        return Fp(self.value * v, self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return Fp(-self.value, self.modulus)

    def __pos__(self):
        return self

    def inverse(self) -> "Fp":
        if self.value == 0:
            raise ZeroDivisionError("inverse of zero in F_p")
        return Fp(pow(self.value, -1, self.modulus), self.modulus)

    def __truediv__(self, other):
        v = self._coerce(other)
        if v is None:
            return NotImplemented
        return self * Fp(v, self.modulus).inverse()

    def __rtruediv__(self, other):
        v = self._coerce(other)
        if v is None:
            return NotImplemented
        return Fp(v, self.modulus) * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return Fp(pow(self.value, e, self.modulus), self.modulus)

    def __eq__(self, other):
        if isinstance(other, Fp):
            return self.modulus == other.modulus and self.value == other.value
        if isinstance(other, (int, Fraction)):
            try:
                return self.value == reduce_rational(Fraction(other), self.modulus)
            except RingError:
                return False
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.modulus))

    def __bool__(self):
        return self.value != 0

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"Fp({self.value}, {self.modulus})"

    def __str__(self):
        return str(self.value)


def check_prime(p: int) -> int:
    if not isinstance(p, int) or not is_prime(p):
        raise RingError(f"{p!r} is not a prime")
    return p


def reduce_rational(q: Fraction | int, p: int) -> int:
    """Image of a rational in F_p; the denominator must be a unit mod p."""
    if isinstance(q, int):
        return q % p
    den = q.denominator % p
    if den == 0:
        raise RingError(f"denominator of {q} vanishes modulo {p}")
    return q.numerator * pow(den, -1, p) % p


def to_field(x, p: int):
    """Map a rational (or a series over the rationals) into F_p."""
    if isinstance(x, Fp):
        if x.modulus != p:
            raise RingError(f"modulus mismatch: {x.modulus} vs {p}")
        return x
    if isinstance(x, EpsSeries):
        return EpsSeries([to_field(c, p) for c in x.coeffs])
    return Fp(reduce_rational(x, p), p)


def _norm_coeff(c):
    if isinstance(c, bool):
        raise TypeError("bool is not a ring element")
    if isinstance(c, int):
        return Fraction(c)
    return c


def _is_zero(c) -> bool:
    return c == 0


class EpsSeries:
    """Truncated power series sum_{j<K} c_j eps^j.

    Binary operations between series of different truncation orders produce
    a result truncated to the smaller order.  Scalars are lifted to constant
    series of the other operand's order.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Any]):
        cs = tuple(_norm_coeff(c) for c in coeffs)
        if not cs:
            raise ValueError("truncation order K must be at least 1")
        self.coeffs = cs

    @classmethod
    def constant(cls, value, K: int) -> "EpsSeries":
        value = _norm_coeff(value)
        return cls([value] + [value * 0] * (K - 1))

    @classmethod
    def eps(cls, K: int, scale=1) -> "EpsSeries":
        """The series ``scale * eps`` (zero when K == 1)."""
        cs = [Fraction(0)] * K
        if K > 1:
            cs[1] = _norm_coeff(scale)
        return cls(cs)

    @property
    def K(self) -> int:
        return len(self.coeffs)

    def coeff(self, j: int):
        if not 0 <= j < len(self.coeffs):
            raise IndexError(
                f"coefficient of eps^{j} is not tracked (K={len(self.coeffs)})")
        return self.coeffs[j]

    def order(self):
        """Leading eps-power, or math.inf for the zero series."""
        for j, c in enumerate(self.coeffs):
            if not _is_zero(c):
                return j
        return math.inf

    def truncate(self, K: int) -> "EpsSeries":
        if K < 1:
            raise ValueError("truncation order K must be at least 1")
        if K > len(self.coeffs):
            raise ValueError("cannot extend a truncated series")
        return EpsSeries(self.coeffs[:K])

    def is_zero(self) -> bool:
        return all(_is_zero(c) for c in self.coeffs)

    def _lift(self, other):
        if isinstance(other, EpsSeries):
            return other
        if isinstance(other, (int, Fraction, Fp)):
            return EpsSeries.constant(other, len(self.coeffs))
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return EpsSeries(a + b for a, b in zip(self.coeffs, o.coeffs))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return EpsSeries(a - b for a, b in zip(self.coeffs, o.coeffs))

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return EpsSeries(-a for a in self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Fp)):
            return EpsSeries(a * other for a in self.coeffs)
        if not isinstance(other, EpsSeries):
            return NotImplemented
        a, b = self.coeffs, other.coeffs
        K = min(len(a), len(b))
        out = []
        for j in range(K):
            acc = a[0] * b[j]
            for i in range(1, j + 1):
                acc = acc + a[i] * b[j - i]
            out.append(acc)
        return EpsSeries(out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, Fp)):
            return EpsSeries(other * a for a in self.coeffs)
        return NotImplemented

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative powers are not supported")
        result = EpsSeries.constant(self.coeffs[0] ** 0, len(self.coeffs))
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, EpsSeries):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction, Fp)):
            return self.coeffs[0] == other and all(
                _is_zero(c) for c in self.coeffs[1:])
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __bool__(self):
        return not self.is_zero()

    def __repr__(self):
        return f"EpsSeries({format_literal(self)!r})"


def eps_arith(a: EpsSeries, b: EpsSeries, op: str) -> EpsSeries:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def eps_order(a: EpsSeries):
    return a.order()


def coeff_at(a: EpsSeries, j: int):
    return a.coeff(j)


def ring_tag(x) -> tuple:
    """Identify the ring a value lives in, for homogeneity checks."""
    if isinstance(x, bool):
        raise RingError("bool is not a ring element")
    if isinstance(x, (int, Fraction)):
        return ("Q",)
    if isinstance(x, Fp):
        return ("Fp", x.modulus)
    if isinstance(x, EpsSeries):
        base = {ring_tag(c) for c in x.coeffs}
        # Fp absorbs rationals, so a mixed series lives over F_p.
        fields = sorted(t for t in base if t[0] == "Fp")
        if len(fields) > 1:
            raise RingError("series mixes coefficient moduli")
        return ("eps", x.K, fields[0] if fields else ("Q",))
    return ("other", type(x).__name__)


# -- literal syntax ---------------------------------------------------------

_SCALAR_RE = re.compile(r"^[+-]?\d+(?:/\d+)?$")


def parse_scalar(tok: str) -> Fraction:
    tok = tok.strip()
    if not _SCALAR_RE.match(tok):
        raise ValueError(f"malformed scalar literal {tok!r}")
    if "/" in tok and int(tok.split("/")[1]) == 0:
        raise ValueError(f"zero denominator in {tok!r}")
    return Fraction(tok)


def parse_literal(tok: str):
    """Parse ``-17``, ``3/4`` or a ``;``-separated eps-series like ``1;0;-2``."""
    tok = tok.strip()
    if ";" in tok:
        return EpsSeries(parse_scalar(t) for t in tok.split(";"))
    return parse_scalar(tok)


def format_scalar(x) -> str:
    if isinstance(x, Fp):
        return str(x.value)
    q = Fraction(x)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def format_literal(x) -> str:
    if isinstance(x, EpsSeries):
        if x.K == 1:
            return format_scalar(x.coeffs[0])
        return ";".join(format_scalar(c) for c in x.coeffs)
    return format_scalar(x)


def pad_series(values: Sequence, K: int) -> list:
    """Lift every value to a series of order exactly K (zero-extending)."""
    out = []
    for v in values:
        if isinstance(v, EpsSeries):
            cs = list(v.coeffs[:K]) + [Fraction(0)] * (K - v.K)
            out.append(EpsSeries(cs))
        else:
            out.append(EpsSeries.constant(v, K))
    return out
