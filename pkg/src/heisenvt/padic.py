"""Exact p-adic arithmetic at finite precision and the Prüfer dual Q_p/Z_p.

Elements of Z_p are handled as residues modulo p^n.  Characters of Z_p are
classes in Q_p/Z_p, stored canonically as ``a / p^K`` with ``p`` not dividing
``a`` (or ``K = 0`` for the trivial class).  Phases stay exact rationals until
a single complex exponential at the very end.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

Rational = Union[int, Fraction]


class PrecisionError(ValueError):
    """A residue is known to too few p-adic digits for the requested pairing."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def check_prime(p) -> int:
    """Validate ``p`` as an odd prime and return it as an int."""
    if isinstance(p, bool) or not isinstance(p, int) or p <= 2 or not is_prime(p):
        raise ValueError("p must be an odd prime")
    return p


def _split(r: Rational, p: int) -> tuple[int, int]:
    """Return (a, K) with r = a / p^K; reject denominators with other primes."""
    r = Fraction(r)
    den = r.denominator
    k = 0
    while den % p == 0:
        den //= p
        k += 1
    if den != 1:
        raise ValueError(f"denominator of {r} is not a power of {p}")
    return r.numerator, k


def valuation(r: Rational, p: int) -> Union[int, float]:
    """p-adic valuation of a rational number; ``math.inf`` for zero."""
    r = Fraction(r)
    if r == 0:
        return math.inf
    v = 0
    num, den = r.numerator, r.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def pnorm(r: Rational, p: int) -> Fraction:
    v = valuation(r, p)
    if v == math.inf:
        return Fraction(0)
    return Fraction(p) ** (-v)


def residue_valuation(t: int, p: int, n: int) -> int:
    """Valuation of a residue mod p^n, capped at ``n`` (the zero coset)."""
    t %= p**n
    if t == 0:
        return n
    v = 0
    while t % p == 0:
        t //= p
        v += 1
    return v


def fractional_part(r: Rational, p: int) -> Fraction:
    """The p-adic fractional part {r}_p, an exact rational in [0, 1).

    Only rationals whose denominator is a power of ``p`` are accepted; for
    those the negative-power digit tail equals ``(a mod p^K) / p^K``.
    """
    a, k = _split(r, p)
    if k == 0:
        return Fraction(0)
    return Fraction(a % p**k, p**k)


@dataclass(frozen=True)
class Residue:
    """An element of Z/p^n, i.e. a p-adic integer known to ``level`` digits."""

    p: int
    level: int
    value: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        object.__setattr__(self, "value", self.value % self.p**self.level)

    def __add__(self, other: "Residue") -> "Residue":
        lvl = min(self.level, other.level)
        return Residue(self.p, lvl, self.value + other.value)

    def __neg__(self) -> "Residue":
        return Residue(self.p, self.level, -self.value)

    def __mul__(self, other: "Residue") -> "Residue":
        lvl = min(self.level, other.level)
        return Residue(self.p, lvl, self.value * other.value)


@dataclass(frozen=True)
class DualScalar:
    """A class in Q_p/Z_p, canonically ``numer / p^denom_exp``.

    The trivial class is ``(K=0, a=0)``.  Its norm is reported as 1, which
    plays the part of the representative "1" for the trivial character.
    """

    p: int
    denom_exp: int
    numer: int

    def __post_init__(self):
        k, a = self.denom_exp, self.numer
        if k < 0:
            raise ValueError("denom_exp must be nonnegative")
        if k == 0:
            if a != 0:
                raise ValueError("trivial class must have numer 0")
        elif not (0 < a < self.p**k) or a % self.p == 0:
            raise ValueError(f"non-canonical dual scalar {a}/{self.p}^{k}")

    @classmethod
    def trivial(cls, p: int) -> "DualScalar":
        return cls(p, 0, 0)

    @classmethod
    def from_fraction(cls, r: Rational, p: int) -> "DualScalar":
        """Class of the rational ``r`` modulo Z_p (denominator a power of p)."""
        a, k = _split(r, p)
        a %= p**k
        while k > 0 and a % p == 0:
            a //= p
            k -= 1
        if a == 0:
            k = 0
        return cls(p, k, a)

    @property
    def is_trivial(self) -> bool:
        return self.denom_exp == 0

    @property
    def norm(self) -> int:
        return self.p**self.denom_exp

    def as_fraction(self) -> Fraction:
        return Fraction(self.numer, self.p**self.denom_exp)

    def numer_at(self, n: int) -> int:
        """Numerator over the common denominator p^n."""
        if self.denom_exp > n:
            raise PrecisionError(
                f"class {self} needs {self.denom_exp} digits, only {n} available")
        return self.numer * self.p ** (n - self.denom_exp)

    def __add__(self, other: "DualScalar") -> "DualScalar":
        return DualScalar.from_fraction(self.as_fraction() + other.as_fraction(), self.p)

    def __neg__(self) -> "DualScalar":
        return DualScalar.from_fraction(-self.as_fraction(), self.p)

    def __sub__(self, other: "DualScalar") -> "DualScalar":
        return self + (-other)

    def scale(self, h: int) -> "DualScalar":
        """The class of ``self * h`` for an integer (or residue value) ``h``."""
        return DualScalar.from_fraction(self.as_fraction() * h, self.p)

    def reduce(self, m: int) -> "DualScalar":
        """Canonical representative modulo p^{-m} Z_p (kills digits p^-1..p^-m)."""
        if m <= 0 or self.denom_exp <= m:
            return self if m <= 0 else DualScalar.trivial(self.p)
        keep = self.p ** (self.denom_exp - m)
        return DualScalar.from_fraction(Fraction(self.numer % keep, self.p**self.denom_exp), self.p)

    def sort_key(self) -> tuple:
        return (self.denom_exp, self.numer)

    def __str__(self) -> str:
        if self.is_trivial:
            return "0"
        return f"{self.numer}/{self.p}^{self.denom_exp}"

    @classmethod
    def parse(cls, text: str, p: int) -> "DualScalar":
        """Inverse of ``str``: accepts ``"0"``, ``"a/p^K"`` or a plain fraction."""
        text = text.strip()
        if "^" in text:
            num, rest = text.split("/")
            base, k = rest.split("^")
            if int(base) != p:
                raise ValueError(f"dual scalar {text!r} is not over p={p}")
            return cls.from_fraction(Fraction(int(num), p ** int(k)), p)
        return cls.from_fraction(Fraction(text), p)


def dual_norm(lam: DualScalar) -> int:
    return lam.norm


def dual_reduce(xi: DualScalar, m: int) -> DualScalar:
    return xi.reduce(m)


def dual_add(a: DualScalar, b: DualScalar) -> DualScalar:
    return a + b


def dual_scale(lam: DualScalar, h: Union[int, Residue]) -> DualScalar:
    if isinstance(h, Residue):
        if h.level < lam.denom_exp:
            raise PrecisionError(f"residue level {h.level} too low for {lam}")
        h = h.value
    return lam.scale(h)


def dual_pair(xi: Sequence[DualScalar], u: Sequence[Union[int, Residue]],
              level: int | None = None) -> Fraction:
    """The exact phase {xi . u}_p in [0, 1).

    ``u`` is a sequence of residues, or of ints together with their ``level``.
    """
    if len(xi) != len(u):
        raise ValueError("dimension mismatch in dual_pair")
    total = Fraction(0)
    for s, ui in zip(xi, u):
        if isinstance(ui, Residue):
            lvl, val = ui.level, ui.value
        else:
            lvl, val = level, ui
        if s.is_trivial:
            continue
        if lvl is None or lvl < s.denom_exp:
            raise PrecisionError(f"residue level {lvl} below denominator exponent of {s}")
        total += s.as_fraction() * val
    return total - math.floor(total)


def phase_to_complex(phase: Fraction) -> complex:
    return cmath.exp(2j * math.pi * float(phase))


def character_value(xi: Sequence[DualScalar], u: Sequence[Union[int, Residue]],
                    level: int | None = None) -> complex:
    return phase_to_complex(dual_pair(xi, u, level))


def dual_classes(p: int, k_max: int, m: int = 0) -> Iterator[DualScalar]:
    """All classes with denominator exponent <= k_max, taken modulo p^{-m}Z_p.

    These are exactly ``a / p^k_max`` with ``0 <= a < p^(k_max - m)``; the
    order is by (denominator exponent, numerator).
    """
    if k_max <= m:
        yield DualScalar.trivial(p)
        return
    out = sorted((DualScalar.from_fraction(Fraction(a, p**k_max), p)
                  for a in range(p ** (k_max - m))), key=DualScalar.sort_key)
    yield from out


def roots_of_unity(q: int):
    """exp(2 pi i k / q) for k in [0, q), the only place phases become floats."""
    import numpy as np

    return np.exp(2j * np.pi * np.arange(q) / q)


def flat_index(vec: Iterable[int], base: int) -> int:
    """Mixed-radix flattening sum_i vec[i] * base^i."""
    idx = 0
    for i, c in enumerate(vec):
        idx += (c % base) * base**i
    return idx


def unflatten(idx: int, base: int, length: int) -> tuple[int, ...]:
    out = []
    for _ in range(length):
        idx, r = divmod(idx, base)
        out.append(r)
    return tuple(out)
