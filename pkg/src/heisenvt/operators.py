"""Vladimirov-Taibleson operators on H_d(Z_p) and their symbols.

Two kinds of terms are supported:

* directional terms, the one-dimensional jump integral along ``exp(tV)``::

      d_V f(g) = c_front(a, 1) sum_{t != 0 mod p^n} p^-n |t|^-(a+1) (f(g * exp(tV)^-1) - f(g))

* the full operator on the whole group, with ``|h|`` the max-coordinate norm::

      D f(g) = c_front(a, 2d+1) sum_{h != e} p^-n(2d+1) |h|^-(a+2d+1) (f(g * h^-1) - f(g))

Both sums are exact for functions of level at most n.  Integer exponents
keep all constants as exact fractions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy import sparse

from .dual import RepLabel, rep_matrices
from .group import LevelFunction, LieVector, quotient
from .padic import DualScalar, PrecisionError, check_prime, residue_valuation

Number = Union[Fraction, float]


def exact_exponent(alpha) -> Number:
    """Fractions for rational input (ints, integral floats), floats otherwise."""
    if isinstance(alpha, bool):
        raise ValueError("alpha must be a positive real")
    if isinstance(alpha, (int, Fraction)):
        out: Number = Fraction(alpha)
    elif isinstance(alpha, float) and alpha.is_integer():
        out = Fraction(int(alpha))
    else:
        out = float(alpha)
    if not out > 0 or (isinstance(out, float) and not math.isfinite(out)):
        raise ValueError("alpha must be a positive real")
    return out


def _ppow(p: int, e: Number) -> Number:
    if isinstance(e, int) or (isinstance(e, Fraction) and e.denominator == 1):
        return Fraction(p) ** int(e)
    return float(p) ** float(e)


def vt_constants(alpha, dim: int, p: int) -> tuple[Number, Number]:
    """(c_front, c_sub) for exponent ``alpha`` in dimension ``dim``."""
    check_prime(p)
    a = exact_exponent(alpha)
    if dim < 1:
        raise ValueError("dim must be at least 1")
    denom = 1 - _ppow(p, -(a + dim))
    return (1 - _ppow(p, a)) / denom, (1 - _ppow(p, -dim)) / denom


def scalar_symbol(w: DualScalar, alpha) -> Number:
    """s_a(w): zero on the trivial class, else |w|^a - c_sub(a, 1)."""
    if w.is_trivial:
        return Fraction(0) if isinstance(exact_exponent(alpha), Fraction) else 0.0
    return _ppow(w.p, exact_exponent(alpha) * w.denom_exp) - vt_constants(alpha, 1, w.p)[1]


def rep_weight(label: RepLabel) -> Number:
    """Eigenvalue of the shifted full operator of order one on ``label``."""
    if label.is_trivial:
        return vt_constants(1, 2 * label.d + 1, label.p)[1]
    return Fraction(label.norm)


# ---------------------------------------------------------------------------
# operator specifications


@dataclass(frozen=True)
class Direction:
    """Integer coordinates (a, b, c) of a Lie algebra vector, free of level."""

    a: tuple[int, ...]
    b: tuple[int, ...]
    c: int = 0

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(int(v) for v in self.a))
        object.__setattr__(self, "b", tuple(int(v) for v in self.b))
        object.__setattr__(self, "c", int(self.c))
        if len(self.a) != len(self.b):
            raise ValueError("direction components a and b differ in length")

    @property
    def d(self) -> int:
        return len(self.a)

    def at(self, p: int, n: int) -> LieVector:
        return LieVector(p, n, self.a, self.b, self.c)

    def is_zero_mod(self, p: int) -> bool:
        return all(v % p == 0 for v in (*self.a, *self.b, self.c))

    @classmethod
    def basis(cls, d: int, kind: str, k: int = 0) -> "Direction":
        zero = [0] * d
        unit = [1 if i == k else 0 for i in range(d)]
        if kind == "X":
            return cls(unit, zero, 0)
        if kind == "Y":
            return cls(zero, unit, 0)
        if kind == "Z":
            return cls(zero, zero, 1)
        raise ValueError(f"unknown basis direction {kind!r}")

    def to_json(self) -> dict:
        return {"a": list(self.a), "b": list(self.b), "c": self.c}

    @classmethod
    def from_json(cls, obj: dict) -> "Direction":
        try:
            return cls(obj["a"], obj["b"], obj.get("c", 0))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"direction V needs integer lists 'a' and 'b': {exc}") from None


@dataclass(frozen=True)
class OperatorTerm:
    kind: str
    alpha: Number
    direction: Direction | None = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", exact_exponent(self.alpha))
        if self.kind == "directional":
            if self.direction is None or all(
                    v == 0 for v in (*self.direction.a, *self.direction.b, self.direction.c)):
                raise ValueError("directional term needs a nonzero direction V")
        elif self.kind == "full_vt":
            if self.direction is not None:
                raise ValueError("full_vt term takes no direction")
        else:
            raise ValueError(f"unknown term kind {self.kind!r}")

    def to_json(self) -> dict:
        out = {"kind": self.kind, "alpha": _num_json(self.alpha)}
        if self.direction is not None:
            out["V"] = self.direction.to_json()
        return out


def _num_json(x: Number):
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    return float(x)


def _rank_mod_p(rows: Sequence[Sequence[int]], p: int) -> int:
    mat = [[v % p for v in row] for row in rows]
    rank = 0
    cols = len(mat[0]) if mat else 0
    for col in range(cols):
        piv = next((r for r in range(rank, len(mat)) if mat[r][col]), None)
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        inv = pow(mat[rank][col], -1, p)
        mat[rank] = [(v * inv) % p for v in mat[rank]]
        for r in range(len(mat)):
            if r != rank and mat[r][col]:
                f = mat[r][col]
                mat[r] = [(u - f * v) % p for u, v in zip(mat[r], mat[rank])]
        rank += 1
    return rank


@dataclass(frozen=True)
class OperatorSpec:
    terms: tuple[OperatorTerm, ...] = ()
    name: str = "custom"
    # direction families that must be independent modulo p, checked by validate()
    families: tuple[tuple[tuple[int, ...], ...], ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        dims = {t.direction.d for t in self.terms if t.direction is not None}
        if len(dims) > 1:
            raise ValueError("directions of different dimensions in one operator")

    @property
    def d(self) -> int | None:
        for t in self.terms:
            if t.direction is not None:
                return t.direction.d
        return None

    def validate(self, p: int, d: int | None = None) -> None:
        check_prime(p)
        if d is not None and self.d is not None and self.d != d:
            raise ValueError(f"operator directions have dimension {self.d}, group has d={d}")
        for fam in self.families:
            if _rank_mod_p(fam, p) < len(fam):
                raise ValueError(f"directions {fam} are not linearly independent mod {p}")

    # named constructors

    @classmethod
    def sublaplacian(cls, d: int, alpha=1, beta=None, V=None, W=None) -> "OperatorSpec":
        alphas = _per_direction(alpha, d, "alpha")
        betas = _per_direction(alpha if beta is None else beta, d, "beta")
        vs = _family(V, d, "X")
        ws = _family(W, d, "Y")
        terms = [OperatorTerm("directional", a, Direction(v, [0] * d, 0)) for a, v in zip(alphas, vs)]
        terms += [OperatorTerm("directional", b, Direction([0] * d, w, 0)) for b, w in zip(betas, ws)]
        standard = V is None and W is None and len(set(alphas + betas)) == 1
        name = f"sublaplacian:alpha={_num_json(alphas[0])}" if standard else "sublaplacian"
        return cls(tuple(terms), name, (tuple(vs), tuple(ws)))

    @classmethod
    def laplacian(cls, d: int, alpha=1, beta=None, gamma=None, V=None, W=None) -> "OperatorSpec":
        sub = cls.sublaplacian(d, alpha, beta, V, W)
        g = alpha if gamma is None else gamma
        if isinstance(g, (list, tuple)):
            raise ValueError("gamma must be a single positive real")
        terms = sub.terms + (OperatorTerm("directional", g, Direction.basis(d, "Z")),)
        name = f"laplacian:alpha={_num_json(exact_exponent(g))}" if sub.name != "sublaplacian" \
            and exact_exponent(g) == sub.terms[0].alpha else "laplacian"
        return cls(terms, name, sub.families)

    @classmethod
    def vt(cls, alpha=1) -> "OperatorSpec":
        term = OperatorTerm("full_vt", alpha)
        return cls((term,), f"vt:alpha={_num_json(term.alpha)}")

    @classmethod
    def directional(cls, direction: Direction, alpha=1) -> "OperatorSpec":
        return cls((OperatorTerm("directional", alpha, direction),), "directional")

    @classmethod
    def zero(cls) -> "OperatorSpec":
        return cls((), "zero")

    @classmethod
    def parse(cls, text: str, d: int) -> "OperatorSpec":
        """Shorthand ``name[:key=value,...]`` with names sublaplacian, laplacian, vt, zero."""
        name, _, rest = text.strip().partition(":")
        params = {}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, eq, value = item.partition("=")
            if not eq:
                raise ValueError(f"spec parameter {item!r} is not key=value")
            try:
                params[key.strip()] = Fraction(value.strip()) if "." not in value else float(value)
            except ValueError:
                raise ValueError(f"spec parameter {key.strip()!r} is not a number") from None
        allowed = {"sublaplacian": {"alpha", "beta"}, "laplacian": {"alpha", "beta", "gamma", "s"},
                   "vt": {"alpha"}, "zero": set()}
        if name not in allowed:
            raise ValueError(f"unknown operator {name!r}")
        extra = set(params) - allowed[name]
        if extra:
            raise ValueError(f"unknown parameter {sorted(extra)[0]!r} for {name}")
        if name == "sublaplacian":
            return cls.sublaplacian(d, params.get("alpha", 1), params.get("beta"))
        if name == "laplacian":
            a = params.get("s", params.get("alpha", 1))
            return cls.laplacian(d, a, params.get("beta"), params.get("gamma"))
        if name == "vt":
            return cls.vt(params.get("alpha", 1))
        return cls.zero()

    def to_json(self) -> dict:
        return {"name": self.name, "terms": [t.to_json() for t in self.terms]}

    @classmethod
    def from_json(cls, obj, d: int) -> "OperatorSpec":
        if isinstance(obj, str):
            return cls.parse(obj, d)
        if not isinstance(obj, dict):
            raise ValueError("spec must be a string or an object")
        for short in ("sublaplacian", "laplacian", "vt"):
            if short in obj:
                params = obj[short] or {}
                if not isinstance(params, dict):
                    raise ValueError(f"spec.{short} must be an object")
                if short == "vt":
                    return cls.vt(params.get("alpha", 1))
                fn = cls.sublaplacian if short == "sublaplacian" else cls.laplacian
                kwargs = {k: params[k] for k in params if k in ("alpha", "beta", "gamma")}
                if "V" in params or "W" in params:
                    kwargs["V"], kwargs["W"] = params.get("V"), params.get("W")
                return fn(d, **kwargs)
        if "terms" not in obj:
            raise ValueError("spec needs 'terms' or a named shorthand")
        terms = []
        for i, t in enumerate(obj["terms"]):
            if not isinstance(t, dict) or "kind" not in t:
                raise ValueError(f"spec.terms[{i}].kind is missing")
            try:
                alpha = t.get("alpha", 1)
                direction = Direction.from_json(t["V"]) if "V" in t else None
                terms.append(OperatorTerm(t["kind"], alpha, direction))
            except ValueError as exc:
                raise ValueError(f"spec.terms[{i}]: {exc}") from None
        return cls(tuple(terms), obj.get("name", "custom"))


def _per_direction(value, d: int, what: str) -> list:
    vals = list(value) if isinstance(value, (list, tuple)) else [value] * d
    if len(vals) != d:
        raise ValueError(f"{what} needs {d} entries")
    return [exact_exponent(v) for v in vals]


def _family(vectors, d: int, kind: str) -> list[tuple[int, ...]]:
    if vectors is None:
        return [tuple(1 if i == k else 0 for i in range(d)) for k in range(d)]
    out = []
    for vec in vectors:
        if isinstance(vec, Direction):
            other, own = (vec.b, vec.a) if kind == "X" else (vec.a, vec.b)
            if any(other) or vec.c:
                raise ValueError(f"direction {vec} is not in the span of the {kind} generators")
            vec = own
        elif isinstance(vec, dict):
            return _family([Direction.from_json(v) for v in vectors], d, kind)
        vec = tuple(int(v) for v in vec)
        if len(vec) != d:
            raise ValueError(f"{kind}-direction {vec} must have {d} coordinates")
        out.append(vec)
    if len(out) != d:
        raise ValueError(f"need exactly {d} {kind}-directions")
    return out


# ---------------------------------------------------------------------------
# quadrature and application


class QuadratureTable:
    """Weights p^-n |t|^-(a+1) on the nonzero residues t mod p^n."""

    def __init__(self, p: int, n: int, alpha):
        self.p, self.n = check_prime(p), n
        self.alpha = exact_exponent(alpha)
        q = p**n
        vals = [residue_valuation(t, p, n) for t in range(q)]
        self.exact = [0 if t == 0 else _ppow(p, -n) * _ppow(p, (self.alpha + 1) * vals[t])
                      for t in range(q)]
        self.weights = np.array([float(w) for w in self.exact])

    def total(self) -> Number:
        return sum(self.exact[1:])


@lru_cache(maxsize=64)
def _directional_table(p: int, d: int, n: int, direction: Direction, alpha: Number):
    """(neighbor indices (q-1, N), weights (q-1,), c_front) for one directional term."""
    quot = quotient(p, d, n)
    q = quot.q
    ts = np.arange(1, q, dtype=np.int64)
    if ts.size == 0:
        return np.zeros((0, quot.size), dtype=np.int64), np.zeros(0), 0.0
    ix, iy, iz = quot.one_parameter_inverse(direction.at(p, n), ts)
    nbr = np.empty((ts.size, quot.size), dtype=np.int64)
    for k in range(ts.size):
        nbr[k] = quot.right_translate_index(ix[k], iy[k], iz[k])
    w = QuadratureTable(p, n, alpha).weights[1:]
    return nbr, w, float(vt_constants(alpha, 1, p)[0])


@lru_cache(maxsize=16)
def _coset_maps(p: int, d: int, n: int):
    """For j = 0..n, the index of each element's reduction to level j."""
    fine = quotient(p, d, n)
    return [quotient(p, d, j).lift_index(fine) for j in range(n + 1)]


@lru_cache(maxsize=16)
def _coset_sum_matrices(p: int, d: int, n: int):
    """Sparse 0/1 matrices summing a level-n function over each coset modulo p^j."""
    maps = _coset_maps(p, d, n)
    size = maps[0].size
    cols = np.arange(size)
    return [sparse.csr_matrix((np.ones(size), (idx, cols)), shape=(p ** (j * (2 * d + 1)), size))
            for j, idx in enumerate(maps)]


def _full_vt_weights(p: int, d: int, n: int, alpha: Number):
    """Per valuation shell j < n: (weight of each h in the shell, number of such h)."""
    dim = 2 * d + 1
    out = []
    for j in range(n):
        w = _ppow(p, -n * dim) * _ppow(p, j * (alpha + dim))
        count = p ** ((n - j) * dim) - p ** ((n - j - 1) * dim)
        out.append((w, count))
    return out


def _apply_full_vt(p, d, n, alpha, data: np.ndarray) -> np.ndarray:
    # summing f(g h^-1) over h in the congruence subgroup G_j is summing f over
    # the coset of g modulo p^j, so each norm shell reduces to coset sums
    maps = _coset_maps(p, d, n)
    summers = _coset_sum_matrices(p, d, n)
    c_front = float(vt_constants(alpha, 2 * d + 1, p)[0])
    flat = data.reshape(data.shape[0], -1)
    sums = [np.asarray(summers[j] @ flat)[maps[j]] for j in range(n + 1)]
    out = np.zeros(flat.shape, dtype=complex)
    for j, (w, count) in enumerate(_full_vt_weights(p, d, n, alpha)):
        out += float(w) * (sums[j] - sums[j + 1] - count * flat)
    return (c_front * out).reshape(data.shape)


def _as_array(f, p: int | None, d: int | None, n: int | None):
    if isinstance(f, LevelFunction):
        return f.data, f.p, f.d, f.n, True
    if p is None or d is None or n is None:
        raise ValueError("raw arrays need explicit p, d, n")
    return np.asarray(f, dtype=complex), p, d, n, False


def apply_operator(spec: OperatorSpec, f, p: int | None = None, d: int | None = None,
                   n: int | None = None, precision: int | None = None, points=None):
    """Apply ``spec`` to a level function, or to an (N,) or (N, k) array at (p, d, n).

    ``precision`` is the number of p-adic digits to which the direction
    vectors are known; it must cover the level of f.  For raw arrays,
    ``points`` restricts the output to the given element indices.
    """
    data, p, d, n, wrap = _as_array(f, p, d, n)
    spec.validate(p, d)
    if precision is not None and precision < n:
        raise PrecisionError(f"directions known to {precision} digits, function has level {n}")
    size = (p**n) ** (2 * d + 1)
    if data.shape[0] != size:
        raise ValueError(f"array of length {data.shape[0]} is not a level-{n} function")
    if wrap and points is not None:
        raise ValueError("points are only supported for raw arrays")
    pts = np.arange(size) if points is None else np.asarray(points, dtype=np.int64)
    here = data[pts]
    out = np.zeros_like(here, dtype=complex)
    for term in spec.terms:
        if term.kind == "directional":
            nbr, w, c = _directional_table(p, d, n, term.direction, term.alpha)
            acc = np.zeros_like(out)
            for k in range(w.size):
                acc += w[k] * data[nbr[k][pts]]
            out += c * (acc - w.sum() * here)
        else:
            out += _apply_full_vt(p, d, n, term.alpha, data)[pts]
    return LevelFunction(p, d, n, out) if wrap else out


def operator_matrix(spec: OperatorSpec, p: int, d: int, n: int) -> np.ndarray:
    """Dense matrix of ``spec`` in the delta basis, assembled entry by entry."""
    spec.validate(p, d)
    quot = quotient(p, d, n)
    size = quot.size
    mat = np.zeros((size, size))
    rows = np.arange(size)
    for term in spec.terms:
        if term.kind == "directional":
            nbr, w, c = _directional_table(p, d, n, term.direction, term.alpha)
            for k in range(w.size):
                np.add.at(mat, (rows, nbr[k]), c * w[k])
            mat[rows, rows] -= c * w.sum()
        else:
            maps = _coset_maps(p, d, n)
            c = float(vt_constants(term.alpha, 2 * d + 1, p)[0])
            for j, (w, count) in enumerate(_full_vt_weights(p, d, n, term.alpha)):
                same_j = maps[j][:, None] == maps[j][None, :]
                same_next = maps[j + 1][:, None] == maps[j + 1][None, :]
                mat += c * float(w) * (same_j.astype(float) - same_next)
                mat[rows, rows] -= c * float(w) * count
    return mat


def operator_symbol(spec: OperatorSpec, label: RepLabel, chunk: int = 4096) -> np.ndarray:
    """sigma(label) = (T pi)(e), so that T pi = pi sigma and (Tf)^ = sigma f^.

    Each term contributes ``c sum_s w(s) (pi(s^-1) - I)``, the value at the
    identity of the operator applied to the matrix coefficients; the sum runs
    over the label's own level, where the quadrature is already exact.
    """
    p, d = label.p, label.d
    spec.validate(p, d)
    n = max(label.level, 1)
    quot = quotient(p, d, n)
    eye = np.eye(label.dim)
    sigma = np.zeros((label.dim, label.dim), dtype=complex)
    for term in spec.terms:
        if term.kind == "directional":
            ts = np.arange(1, quot.q, dtype=np.int64)
            x, y, z = quot.one_parameter_inverse(term.direction.at(p, n), ts)
            reps = rep_matrices(label, quot, x, y, z)
            w = QuadratureTable(p, n, term.alpha).weights[1:]
            c = float(vt_constants(term.alpha, 1, p)[0])
            sigma += c * (np.einsum("k,kab->ab", w, reps) - w.sum() * eye)
        else:
            c = float(vt_constants(term.alpha, 2 * d + 1, p)[0])
            vals = quot.valuations()
            dim = 2 * d + 1
            weight = np.array([0.0 if v == n else float(_ppow(p, -n * dim) * _ppow(p, v * (term.alpha + dim)))
                               for v in range(n + 1)])[vals]
            ix, iy, iz = quot.inverse(quot.x, quot.y, quot.z)
            for lo in range(0, quot.size, chunk):
                sl = slice(lo, lo + chunk)
                reps = rep_matrices(label, quot, ix[sl], iy[sl], iz[sl])
                sigma += c * np.einsum("k,kab->ab", weight[sl], reps)
            sigma -= c * weight.sum() * eye
    return sigma


def apply_noninvariant_vt(i: int, alpha, f: LevelFunction) -> LevelFunction:
    """Jump integral along the vector field e_{y_i} + x_i e_z on Z_p^{2d+1}.

    Uses plain additive coordinates, (x, y, z) -> (x, y + t e_i, z + t x_i),
    with the same normalising constant as the directional operators.
    """
    p, d, n = f.p, f.d, f.n
    if not 0 <= i < d:
        raise ValueError(f"axis index {i} outside 0..{d - 1}")
    q = p**n
    idx = np.arange(f.data.size, dtype=np.int64)
    x_i = (idx // q**i) % q
    y_i = (idx // q ** (d + i)) % q
    z = idx // q ** (2 * d)
    rest = idx - y_i * q ** (d + i) - z * q ** (2 * d)
    table = QuadratureTable(p, n, alpha)
    acc = np.zeros_like(f.data)
    for t in range(1, q):
        moved = rest + ((y_i + t) % q) * q ** (d + i) + ((z + t * x_i) % q) * q ** (2 * d)
        acc += table.weights[t] * (f.data[moved] - f.data)
    c = float(vt_constants(alpha, 1, p)[0])
    return LevelFunction(p, d, n, c * acc)


def spec_dumps(spec: OperatorSpec) -> str:
    return json.dumps(spec.to_json(), sort_keys=True)
