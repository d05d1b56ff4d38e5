"""The Heisenberg group H_d(Z_p) truncated at level n.

Points are triples ``(x, y, z)`` with ``x, y`` in (Z/p^n)^d and ``z`` in
Z/p^n, multiplied by ``(x, y, z) * (x', y', z') = (x+x', y+y', z+z'+x.y')``.

Lie algebra vectors ``(a, b, c)`` use the matrix entries as coordinates, so
``exp(a, b, c) = (a, b, c + a.b/2)`` and the BCH product is
``U * V = U + V + [U, V]/2`` with ``[U, V] = (0, 0, a_U.b_V - a_V.b_U)``.

The quotient H_d(Z/p^n) is enumerated in a fixed mixed-radix order::

    index = flat(x) + q^d * flat(y) + q^(2d) * z,   flat(v) = sum_i v_i q^i

with ``q = p^n``.  ``Quotient`` holds the coordinate arrays in that order and
the vectorized group law used by every dense code path.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .padic import check_prime, flat_index, residue_valuation, unflatten

# int64 products x*y must not overflow before reduction
_MAX_MODULUS = 2**31


def _dot(u: Sequence[int], v: Sequence[int]) -> int:
    return sum(a * b for a, b in zip(u, v))


@dataclass(frozen=True)
class GroupElement:
    p: int
    n: int
    x: tuple[int, ...]
    y: tuple[int, ...]
    z: int

    def __post_init__(self):
        q = self.p**self.n
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same dimension")
        object.__setattr__(self, "x", tuple(int(c) % q for c in self.x))
        object.__setattr__(self, "y", tuple(int(c) % q for c in self.y))
        object.__setattr__(self, "z", int(self.z) % q)

    @property
    def d(self) -> int:
        return len(self.x)

    @property
    def modulus(self) -> int:
        return self.p**self.n

    def reduce(self, n: int) -> "GroupElement":
        if n > self.n:
            raise ValueError("cannot raise the level of a truncated element")
        return GroupElement(self.p, n, self.x, self.y, self.z)


@dataclass(frozen=True)
class LieVector:
    """A vector (a, b, c) of the Heisenberg Lie algebra over Z/p^n."""

    p: int
    n: int
    a: tuple[int, ...]
    b: tuple[int, ...]
    c: int

    def __post_init__(self):
        q = self.p**self.n
        object.__setattr__(self, "a", tuple(int(v) % q for v in self.a))
        object.__setattr__(self, "b", tuple(int(v) % q for v in self.b))
        object.__setattr__(self, "c", int(self.c) % q)

    def scaled(self, t: int) -> "LieVector":
        return LieVector(self.p, self.n, tuple(t * v for v in self.a),
                         tuple(t * v for v in self.b), t * self.c)


class GroupNorm(NamedTuple):
    """p-adic norm of a truncated element; ``at_most`` marks the zero coset."""

    value: Fraction
    at_most: bool


def identity(p: int, d: int, n: int) -> GroupElement:
    return GroupElement(p, n, (0,) * d, (0,) * d, 0)


def _same_level(g: GroupElement, h: GroupElement) -> None:
    if g.p != h.p or g.n != h.n or g.d != h.d:
        raise ValueError(f"level mismatch: (p={g.p}, n={g.n}, d={g.d}) vs "
                         f"(p={h.p}, n={h.n}, d={h.d})")


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    _same_level(g, h)
    return GroupElement(
        g.p, g.n,
        tuple(a + b for a, b in zip(g.x, h.x)),
        tuple(a + b for a, b in zip(g.y, h.y)),
        g.z + h.z + _dot(g.x, h.y),
    )


def inverse(g: GroupElement) -> GroupElement:
    return GroupElement(g.p, g.n, tuple(-a for a in g.x), tuple(-b for b in g.y),
                        -g.z + _dot(g.x, g.y))


def _half(p: int, n: int) -> int:
    check_prime(p)
    return pow(2, -1, p**n)


def bracket(u: LieVector, v: LieVector) -> LieVector:
    return LieVector(u.p, u.n, (0,) * len(u.a), (0,) * len(u.a),
                     _dot(u.a, v.b) - _dot(v.a, u.b))


def bch_star(u: LieVector, v: LieVector) -> LieVector:
    half = _half(u.p, u.n)
    br = bracket(u, v)
    return LieVector(u.p, u.n,
                     tuple(a + b for a, b in zip(u.a, v.a)),
                     tuple(a + b for a, b in zip(u.b, v.b)),
                     u.c + v.c + half * br.c)


def exp_map(u: LieVector) -> GroupElement:
    half = _half(u.p, u.n)
    return GroupElement(u.p, u.n, u.a, u.b, u.c + half * _dot(u.a, u.b))


def log_map(g: GroupElement) -> LieVector:
    half = _half(g.p, g.n)
    return LieVector(g.p, g.n, g.x, g.y, g.z - half * _dot(g.x, g.y))


def one_parameter(v: LieVector, t: int) -> GroupElement:
    """exp(t V), the one-parameter subgroup through V."""
    return exp_map(v.scaled(t))


def group_norm(g: GroupElement) -> GroupNorm:
    """max(|x|, |y|, |z|) read off the residues.

    Elements whose residues all vanish only have norm at most p^-n; they are
    reported with ``at_most=True``.
    """
    vals = [residue_valuation(c, g.p, g.n) for c in (*g.x, *g.y, g.z)]
    j = min(vals)
    return GroupNorm(Fraction(1, g.p**j), j == g.n)


def vilenkin_norm(g: GroupElement) -> Fraction:
    """|g|_G = |G_j| = p^{-j(2d+1)} for g in G_j minus G_{j+1}, by direct membership."""
    coords = (*g.x, *g.y, g.z)
    j = 0
    while j < g.n and all(c % g.p ** (j + 1) == 0 for c in coords):
        j += 1
    return Fraction(1, g.p ** (j * (2 * g.d + 1)))


def enumerate_quotient(p: int, d: int, n: int) -> Iterator[GroupElement]:
    """All p^{n(2d+1)} elements of H_d(Z/p^n) in the documented index order."""
    q = p**n
    for idx in range(q ** (2 * d + 1)):
        yield element_at(p, d, n, idx)


def element_at(p: int, d: int, n: int, idx: int) -> GroupElement:
    q = p**n
    x = unflatten(idx % q**d, q, d)
    y = unflatten((idx // q**d) % q**d, q, d)
    z = idx // q ** (2 * d)
    return GroupElement(p, n, x, y, z)


def element_index(g: GroupElement) -> int:
    q = g.modulus
    return flat_index(g.x, q) + q**g.d * flat_index(g.y, q) + q ** (2 * g.d) * g.z


class Quotient:
    """Coordinate arrays and the vectorized group law on H_d(Z/p^n)."""

    def __init__(self, p: int, d: int, n: int):
        self.p = check_prime(p)
        if d < 1:
            raise ValueError("d must be at least 1")
        if n < 0:
            raise ValueError("n must be nonnegative")
        self.d = d
        self.n = n
        self.q = p**n
        if self.q >= _MAX_MODULUS:
            raise ValueError("modulus too large for the vectorized path")
        self.size = self.q ** (2 * d + 1)
        idx = np.arange(self.size, dtype=np.int64)
        q = self.q
        self.x = np.stack([(idx // q**i) % q for i in range(d)], axis=1)
        self.y = np.stack([(idx // q ** (d + i)) % q for i in range(d)], axis=1)
        self.z = idx // q ** (2 * d)

    def __repr__(self) -> str:
        return f"Quotient(p={self.p}, d={self.d}, n={self.n})"

    def index(self, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Linear index of coordinate arrays (last axis of x, y holds the d components)."""
        q = self.q
        x = np.asarray(x) % q
        y = np.asarray(y) % q
        z = np.asarray(z) % q
        weights = q ** np.arange(self.d, dtype=np.int64)
        return (x @ weights) + q**self.d * (y @ weights) + q ** (2 * self.d) * z

    def multiply(self, x1, y1, z1, x2, y2, z2):
        """Vectorized group law; inputs broadcast against each other."""
        q = self.q
        x1, y1, x2, y2 = (np.asarray(a) % q for a in (x1, y1, x2, y2))
        dot = np.sum(x1 * y2, axis=-1) % q
        return (x1 + x2) % q, (y1 + y2) % q, (np.asarray(z1) + np.asarray(z2) + dot) % q

    def inverse(self, x, y, z):
        q = self.q
        x = np.asarray(x) % q
        y = np.asarray(y) % q
        return (-x) % q, (-y) % q, (-np.asarray(z) + np.sum(x * y, axis=-1)) % q

    def right_translate_index(self, x, y, z) -> np.ndarray:
        """index(g * h) for every g in the quotient, with h = (x, y, z) fixed."""
        hx = np.asarray(x, dtype=np.int64).reshape(1, self.d)
        hy = np.asarray(y, dtype=np.int64).reshape(1, self.d)
        return self.index(*self.multiply(self.x, self.y, self.z, hx, hy, np.int64(z)))

    def left_translate_index(self, x, y, z) -> np.ndarray:
        """index(h * g) for every g in the quotient."""
        hx = np.asarray(x, dtype=np.int64).reshape(1, self.d)
        hy = np.asarray(y, dtype=np.int64).reshape(1, self.d)
        return self.index(*self.multiply(hx, hy, np.int64(z), self.x, self.y, self.z))

    def one_parameter_inverse(self, v: LieVector, t: np.ndarray):
        """Coordinates of exp(t V)^{-1} for an array of t values."""
        q = self.q
        t = np.asarray(t, dtype=np.int64) % q
        a = np.asarray(v.a, dtype=np.int64) % q
        b = np.asarray(v.b, dtype=np.int64) % q
        half = pow(2, -1, q) if q > 1 else 0
        ab = int(np.dot(a, b)) % q
        ex = (t[:, None] * a[None, :]) % q
        ey = (t[:, None] * b[None, :]) % q
        ez = (t * (v.c % q) + ((t * t) % q) * ab % q * half) % q
        return self.inverse(ex, ey, ez)

    def valuations(self) -> np.ndarray:
        """Minimal coordinate valuation of every element (n for the identity)."""
        allc = np.concatenate([self.x, self.y, self.z[:, None]], axis=1)
        out = np.full(self.size, self.n, dtype=np.int64)
        for j in range(self.n - 1, -1, -1):
            step = self.p ** (j + 1)
            mask = np.any(allc % step != 0, axis=1)
            out[mask] = j
        return out

    def lift_index(self, finer: "Quotient") -> np.ndarray:
        """For each element of the finer quotient, the index of its image here."""
        if finer.p != self.p or finer.d != self.d or finer.n < self.n:
            raise ValueError("lift requires a finer quotient over the same group")
        return self.index(finer.x, finer.y, finer.z)


@lru_cache(maxsize=16)
def quotient(p: int, d: int, n: int) -> Quotient:
    return Quotient(p, d, n)


class LevelFunction:
    """A complex function on H_d(Z/p^n), stored in the quotient's index order."""

    def __init__(self, p: int, d: int, n: int, data):
        self.p = check_prime(p)
        self.d = d
        self.n = n
        data = np.asarray(data, dtype=complex)
        expected = (p**n) ** (2 * d + 1)
        if data.shape != (expected,):
            raise ValueError(f"level-{n} function needs {expected} values, got {data.shape}")
        self.data = data

    @property
    def quotient(self) -> Quotient:
        return quotient(self.p, self.d, self.n)

    def __call__(self, g: GroupElement) -> complex:
        return complex(self.data[element_index(g)])

    def lift(self, n: int) -> "LevelFunction":
        """The same function viewed at a finer level."""
        idx = self.quotient.lift_index(quotient(self.p, self.d, n))
        return LevelFunction(self.p, self.d, n, self.data[idx])

    def left_translate(self, g: GroupElement) -> "LevelFunction":
        """(L_g f)(h) = f(g^{-1} h)."""
        gi = inverse(g)
        idx = self.quotient.left_translate_index(gi.x, gi.y, gi.z)
        return LevelFunction(self.p, self.d, self.n, self.data[idx])

    def norm(self) -> float:
        return float(np.sqrt(np.mean(np.abs(self.data) ** 2)))

    @classmethod
    def from_callable(cls, p: int, d: int, n: int, fn) -> "LevelFunction":
        return cls(p, d, n, [fn(g) for g in enumerate_quotient(p, d, n)])


def haar_average(f: LevelFunction) -> complex:
    """Integral against normalised Haar measure; exact for level-n functions."""
    return complex(np.mean(f.data))
