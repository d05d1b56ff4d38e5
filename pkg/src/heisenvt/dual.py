"""Unitary dual of H_d(Z_p): labels, explicit representations, characters.

A class is labelled by ``(xi, eta, lam)`` with ``lam`` in Q_p/Z_p and
``(xi, eta)`` taken modulo p^{-m} Z_p^{2d}, where ``|lam|_p = p^m``.  The
representation acts on functions of ``u`` in (Z/p^m)^d by

    pi(x, y, z) phi(u) = e^{2 pi i {xi.x + eta.y + lam (z + u.y)}} phi(u + x)

and in the indicator basis ``phi_h`` its matrix is

    M[h', h](g) = (pi(g) phi_h, phi_h')
               = e^{2 pi i {xi.x + eta.y + lam (z + h'.y)}} [x = h - h' mod p^m].

Rows are indexed by ``h'`` and columns by ``h``, both in the flat order
``sum_i h_i p^(m i)``, so that ``M(g1) @ M(g2) == M(g1 * g2)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .group import GroupElement, Quotient, quotient
from .padic import (DualScalar, PrecisionError, check_prime, dual_pair, dual_classes,
                    phase_to_complex, roots_of_unity, unflatten)


@dataclass(frozen=True)
class RepLabel:
    xi: tuple[DualScalar, ...]
    eta: tuple[DualScalar, ...]
    lam: DualScalar

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(self.xi))
        object.__setattr__(self, "eta", tuple(self.eta))
        if len(self.xi) != len(self.eta) or not self.xi:
            raise ValueError("xi and eta must be nonempty and of equal length")
        m = self.lam.denom_exp
        for s in (*self.xi, *self.eta):
            if s.p != self.lam.p:
                raise ValueError("label components over different primes")
            if s.reduce(m) != s:
                raise ValueError(f"component {s} is not reduced modulo p^-{m}Z_p for lambda={self.lam}")

    @classmethod
    def trivial(cls, p: int, d: int) -> "RepLabel":
        t = DualScalar.trivial(p)
        return cls((t,) * d, (t,) * d, t)

    @property
    def p(self) -> int:
        return self.lam.p

    @property
    def d(self) -> int:
        return len(self.xi)

    @property
    def m(self) -> int:
        """log_p |lam|_p, zero for the trivial central character."""
        return self.lam.denom_exp

    @property
    def dim(self) -> int:
        return self.lam.norm**self.d

    @property
    def level(self) -> int:
        """log_p of the label norm; the matrix coefficients live at this level."""
        return max(s.denom_exp for s in (*self.xi, *self.eta, self.lam))

    @property
    def norm(self) -> int:
        return self.p**self.level

    @property
    def is_trivial(self) -> bool:
        return self.level == 0

    def basis(self) -> list[tuple[int, ...]]:
        """The indices h of (Z/p^m)^d in flat order."""
        pm = self.p**self.m
        return [unflatten(i, pm, self.d) for i in range(self.dim)]

    def sort_key(self) -> tuple:
        return (self.lam.norm, self.lam.numer,
                tuple(s.as_fraction() for s in self.xi),
                tuple(s.as_fraction() for s in self.eta))

    def to_json(self) -> dict:
        return {"xi": [str(s) for s in self.xi], "eta": [str(s) for s in self.eta],
                "lambda": str(self.lam), "dim": self.dim}

    @classmethod
    def from_json(cls, obj: dict, p: int) -> "RepLabel":
        label = cls(tuple(DualScalar.parse(s, p) for s in obj["xi"]),
                    tuple(DualScalar.parse(s, p) for s in obj["eta"]),
                    DualScalar.parse(obj["lambda"], p))
        if "dim" in obj and int(obj["dim"]) != label.dim:
            raise ValueError(f"label dim {obj['dim']} inconsistent with lambda")
        return label

    def __str__(self) -> str:
        xs = ",".join(map(str, self.xi))
        es = ",".join(map(str, self.eta))
        return f"(xi=[{xs}],eta=[{es}],lambda={self.lam})"


def iter_dual(p: int, d: int, n: int) -> Iterator[RepLabel]:
    """Labels with norm at most p^n, lambda by norm then numerator, then (xi, eta)."""
    check_prime(p)
    if n < 0:
        raise ValueError("n must be nonnegative")
    lams = sorted(dual_classes(p, n), key=lambda s: (s.norm, s.numer))
    for lam in lams:
        comps = sorted(dual_classes(p, n, lam.denom_exp), key=DualScalar.as_fraction)
        for combo in itertools.product(comps, repeat=2 * d):
            yield RepLabel(combo[:d], combo[d:], lam)


def enumerate_dual(p: int, d: int, n: int) -> list[RepLabel]:
    return list(iter_dual(p, d, n))


def dual_shell(p: int, d: int, j: int) -> list[RepLabel]:
    """Labels of norm exactly p^j."""
    return [lab for lab in iter_dual(p, d, j) if lab.level == j]


def verify_peter_weyl(p: int, d: int, n: int) -> tuple[int, int]:
    """(sum of squared dimensions over the ball B(n), |H_d(Z/p^n)|), both exact."""
    total = sum(lab.dim**2 for lab in iter_dual(p, d, n))
    return total, p ** (n * (2 * d + 1))


def _check_level(label: RepLabel, n: int) -> None:
    if n < label.level:
        raise PrecisionError(
            f"label {label} needs group elements known to {label.level} digits, got {n}")


def rep_matrix(label: RepLabel, g: GroupElement) -> np.ndarray:
    """Matrix of pi_label(g) in the phi_h basis, from exact rational phases."""
    _check_level(label, g.n)
    pm = label.p**label.m
    base = dual_pair(label.xi, g.x, g.n) + dual_pair(label.eta, g.y, g.n)
    out = np.zeros((label.dim, label.dim), dtype=complex)
    for row, hp in enumerate(label.basis()):
        col = sum(((hp[i] + g.x[i]) % pm) * pm**i for i in range(label.d))
        central = label.lam.as_fraction() * (g.z + sum(a * b for a, b in zip(hp, g.y)))
        phase = base + central
        out[row, col] = phase_to_complex(phase - math.floor(phase))
    return out


def character_value(label: RepLabel, g: GroupElement) -> complex:
    return complex(np.trace(rep_matrix(label, g)))


class CoefficientLayout:
    """Sparse description of all matrix coefficients of a label on a quotient.

    ``M[b, a](g)`` equals ``omega[phase[b, g]]`` when ``a == col[b, g]`` and
    vanishes otherwise; ``omega`` are the q-th roots of unity, q = p^n.
    """

    def __init__(self, label: RepLabel, quot: Quotient):
        _check_level(label, quot.n)
        self.label = label
        self.quotient = quot
        n, q = quot.n, quot.q
        pm = label.p**label.m
        self.omega = roots_of_unity(q)
        xi = np.array([s.numer_at(n) for s in label.xi], dtype=np.int64)
        eta = np.array([s.numer_at(n) for s in label.eta], dtype=np.int64)
        lam = label.lam.numer_at(n)
        base = (quot.x @ xi + quot.y @ eta + lam * quot.z) % q
        hs = np.array(label.basis(), dtype=np.int64).reshape(label.dim, label.d)
        self.h = hs
        hy = (hs @ quot.y.T) % q                      # (dim, N)
        self.phase = (base[None, :] + lam * hy) % q
        weights = pm ** np.arange(label.d, dtype=np.int64)
        self.col = (((hs[:, None, :] + quot.x[None, :, :]) % pm) @ weights)

    def dense(self) -> np.ndarray:
        """All coefficients as an array of shape (dim, dim, N)."""
        dim, size = self.label.dim, self.quotient.size
        out = np.zeros((dim, dim, size), dtype=complex)
        rows = np.repeat(np.arange(dim), size)
        cols = self.col.ravel()
        pts = np.tile(np.arange(size), dim)
        out[rows, cols, pts] = self.omega[self.phase.ravel()]
        return out

    def row_functions(self, row: int) -> np.ndarray:
        """Row ``row`` of the coefficient matrix, shape (dim, N)."""
        dim, size = self.label.dim, self.quotient.size
        out = np.zeros((dim, size), dtype=complex)
        out[self.col[row], np.arange(size)] = self.omega[self.phase[row]]
        return out


def matrix_coefficients(label: RepLabel, n: int) -> np.ndarray:
    return CoefficientLayout(label, quotient(label.p, label.d, n)).dense()


def rep_matrices(label: RepLabel, quot: Quotient, x, y, z) -> np.ndarray:
    """pi_label at a batch of points given by coordinate arrays, shape (k, dim, dim)."""
    _check_level(label, quot.n)
    q, n = quot.q, quot.n
    pm = label.p**label.m
    x = np.asarray(x, dtype=np.int64).reshape(-1, label.d) % q
    y = np.asarray(y, dtype=np.int64).reshape(-1, label.d) % q
    z = np.asarray(z, dtype=np.int64).reshape(-1) % q
    xi = np.array([s.numer_at(n) for s in label.xi], dtype=np.int64)
    eta = np.array([s.numer_at(n) for s in label.eta], dtype=np.int64)
    lam = label.lam.numer_at(n)
    hs = np.array(label.basis(), dtype=np.int64).reshape(label.dim, label.d)
    base = (x @ xi + y @ eta + lam * z) % q                     # (k,)
    phase = (base[:, None] + lam * ((y @ hs.T) % q)) % q       # (k, dim)
    weights = pm ** np.arange(label.d, dtype=np.int64)
    col = ((hs[None, :, :] + x[:, None, :]) % pm) @ weights    # (k, dim)
    k = x.shape[0]
    out = np.zeros((k, label.dim, label.dim), dtype=complex)
    kk = np.repeat(np.arange(k), label.dim)
    rows = np.tile(np.arange(label.dim), k)
    out[kk, rows, col.ravel()] = roots_of_unity(q)[phase.ravel()]
    return out


def label_lookup(labels: Sequence[RepLabel]) -> dict[RepLabel, int]:
    return {lab: i for i, lab in enumerate(labels)}


def count_dual(p: int, d: int, n: int) -> int:
    """Number of labels in B(n): sum over |lam| = p^m of p^{2d(n-m)}."""
    total = p ** (2 * d * n)
    for m in range(1, n + 1):
        total += (p**m - p ** (m - 1)) * p ** (2 * d * (n - m))
    return total
