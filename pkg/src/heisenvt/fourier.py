"""Group Fourier transform on H_d(Z/p^n) and its file formats.

``forward_transform`` computes ``f^(pi) = mean_g f(g) pi(g)^*`` for every
label of the ball B(n); ``inverse_transform`` sums
``d_pi Tr[pi(g) F(pi)]``.  Both are dense direct sums over B(n) using the
sparse coefficient layout (one nonzero per row of pi(g)).
"""

from __future__ import annotations

import json
import struct
from typing import Iterable

import numpy as np

from .dual import CoefficientLayout, RepLabel, iter_dual, rep_matrices
from .group import LevelFunction, quotient
from .operators import rep_weight
from .padic import check_prime, roots_of_unity


class FourierCoefficients:
    """Matrix-valued coefficients keyed by the labels of B(n), in dual order."""

    def __init__(self, p: int, d: int, n: int, blocks: dict[RepLabel, np.ndarray]):
        self.p, self.d, self.n = p, d, n
        self.blocks = blocks

    def __getitem__(self, label: RepLabel) -> np.ndarray:
        return self.blocks[label]

    def __iter__(self):
        return iter(self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def items(self):
        return self.blocks.items()

    @classmethod
    def zeros(cls, p: int, d: int, n: int) -> "FourierCoefficients":
        return cls(p, d, n, {lab: np.zeros((lab.dim, lab.dim), dtype=complex)
                             for lab in iter_dual(p, d, n)})

    def hs_norm(self) -> float:
        """sqrt(sum d_pi ||F(pi)||_HS^2), the Plancherel side."""
        return float(np.sqrt(sum(lab.dim * np.sum(np.abs(m) ** 2)
                                 for lab, m in self.blocks.items())))


def forward_transform(f: LevelFunction) -> FourierCoefficients:
    quot = f.quotient
    size = quot.size
    blocks = {}
    for label in iter_dual(f.p, f.d, f.n):
        lay = CoefficientLayout(label, quot)
        dim = label.dim
        # f^[a, b] = mean_g f(g) conj(M[b, a](g)), nonzero only for a = col[b, g]
        vals = f.data[None, :] * np.conj(lay.omega[lay.phase])
        idx = (lay.col * dim + np.arange(dim)[:, None]).ravel()
        re = np.bincount(idx, weights=vals.real.ravel(), minlength=dim * dim)
        im = np.bincount(idx, weights=vals.imag.ravel(), minlength=dim * dim)
        blocks[label] = ((re + 1j * im) / size).reshape(dim, dim)
    return FourierCoefficients(f.p, f.d, f.n, blocks)


def inverse_transform(coeffs: FourierCoefficients) -> LevelFunction:
    quot = quotient(coeffs.p, coeffs.d, coeffs.n)
    out = np.zeros(quot.size, dtype=complex)
    for label, mat in coeffs.items():
        if not np.any(mat):
            continue
        lay = CoefficientLayout(label, quot)
        dim = label.dim
        # Tr[M(g) F] = sum_b M[b, col[b, g]](g) F[col[b, g], b]
        picked = mat[lay.col, np.arange(dim)[:, None]]
        out += dim * np.sum(lay.omega[lay.phase] * picked, axis=0)
    return LevelFunction(coeffs.p, coeffs.d, coeffs.n, out)


def sobolev_norm(f: LevelFunction, s: float) -> float:
    coeffs = forward_transform(f)
    total = 0.0
    for label, mat in coeffs.items():
        w = float(rep_weight(label))
        total += label.dim * w ** (2 * s) * float(np.sum(np.abs(mat) ** 2))
    return float(np.sqrt(total))


def abelian_transform(f: LevelFunction) -> np.ndarray:
    """Fourier transform of f as a function on (Z/p^n)^{2d+1}.

    Returns an array indexed ``[alpha_1..alpha_d, beta_1..beta_d, gamma]`` by
    the numerators of the frequencies over p^n, with the normalised
    convention ``F(w) = mean_u f(u) e^{-2 pi i {w.u}}``.
    """
    q, d = f.p**f.n, f.d
    arr = f.data.reshape((q,) * (2 * d + 1))
    arr = arr.transpose(tuple(range(2 * d, -1, -1)))
    return np.fft.fftn(arr) / f.data.size


def fourier_kernel(f: LevelFunction, label: RepLabel) -> np.ndarray:
    """Kernel K(u, v) on (Z/p^n)^d x (Z/p^n)^d representing f^(label).

    K(u, v) = sum_alpha F(alpha + xi, lam v + eta, lam) e^{2 pi i {alpha.(u - v)}},
    with ``F`` the abelian transform.  Rows index u and columns v, both in
    flat order.
    """
    q, d, n = f.p**f.n, f.d, f.n
    side = q**d
    if label.level > n:
        return np.zeros((side, side), dtype=complex)
    big = abelian_transform(f)
    pts = np.array([[(i // q**k) % q for k in range(d)] for i in range(side)], dtype=np.int64)
    xi = np.array([s.numer_at(n) for s in label.xi], dtype=np.int64)
    eta = np.array([s.numer_at(n) for s in label.eta], dtype=np.int64)
    lam = label.lam.numer_at(n)
    omega = roots_of_unity(q)
    # G[v, alpha] = F(alpha + xi, lam v + eta, lam)
    a_idx = (pts + xi[None, :]) % q                      # alpha + xi for each alpha
    b_idx = (lam * pts + eta[None, :]) % q               # lam v + eta for each v
    index = tuple(a_idx[None, :, k] for k in range(d)) + \
        tuple(b_idx[:, None, k] for k in range(d)) + (np.full((1, 1), lam % q),)
    g = big[index]                                       # (v, alpha)
    chars = omega[(pts @ pts.T) % q]                     # e^{2 pi i alpha.u}, symmetric
    # K[u, v] = sum_alpha G[v, alpha] chi_alpha(u) conj(chi_alpha(v))
    return np.einsum("va,au,av->uv", g, chars, np.conj(chars))


def kernel_to_matrix(kernel: np.ndarray, label: RepLabel, n: int) -> np.ndarray:
    """Matrix <K phi_h, phi_h'> of the integral operator in the phi_h basis."""
    p, d, m = label.p, label.d, label.m
    q = p**n
    side = q**d
    pm = p**m
    pts = np.array([[(i // q**k) % q for k in range(d)] for i in range(side)], dtype=np.int64)
    cls = ((pts % pm) @ (pm ** np.arange(d, dtype=np.int64)))
    ind = np.zeros((label.dim, side))
    ind[cls, np.arange(side)] = pm ** (d / 2)
    return ind @ kernel @ ind.T / side**2


def translate_coefficients(coeffs: FourierCoefficients, g) -> FourierCoefficients:
    """Coefficients of the left translate L_g f: F(pi) pi(g)^*."""
    quot = quotient(coeffs.p, coeffs.d, coeffs.n)
    out = {}
    for label, mat in coeffs.items():
        rep = rep_matrices(label, quot, g.x, g.y, g.z)[0]
        out[label] = mat @ rep.conj().T
    return FourierCoefficients(coeffs.p, coeffs.d, coeffs.n, out)


# ---------------------------------------------------------------------------
# file formats

_MAGIC = b"HVTF"


def level_function_to_json(f: LevelFunction) -> dict:
    return {"p": f.p, "d": f.d, "n": f.n, "order": "x + q^d y + q^(2d) z",
            "data": [[float(v.real), float(v.imag)] for v in f.data]}


def level_function_from_json(obj: dict) -> LevelFunction:
    for key in ("p", "d", "n", "data"):
        if key not in obj:
            raise ValueError(f"level function file is missing field {key!r}")
    data = [complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
            for v in obj["data"]]
    return LevelFunction(check_prime(int(obj["p"])), int(obj["d"]), int(obj["n"]), data)


def level_function_to_bytes(f: LevelFunction) -> bytes:
    """Raw format: magic, three little-endian uint32 (p, d, n), complex128 LE data."""
    return _MAGIC + struct.pack("<III", f.p, f.d, f.n) + f.data.astype("<c16").tobytes()


def level_function_from_bytes(raw: bytes) -> LevelFunction:
    if raw[:4] != _MAGIC:
        raise ValueError("raw level function must start with the HVTF header")
    p, d, n = struct.unpack("<III", raw[4:16])
    data = np.frombuffer(raw[16:], dtype="<c16")
    return LevelFunction(check_prime(p), d, n, data.astype(complex))


def coefficients_to_json(coeffs: FourierCoefficients) -> dict:
    return {
        "p": coeffs.p, "d": coeffs.d, "n": coeffs.n,
        "coefficients": [
            {"label": lab.to_json(),
             "matrix": [[[float(v.real), float(v.imag)] for v in row] for row in mat]}
            for lab, mat in coeffs.items()
        ],
    }


def coefficients_from_json(obj: dict) -> FourierCoefficients:
    for key in ("p", "d", "n", "coefficients"):
        if key not in obj:
            raise ValueError(f"coefficient file is missing field {key!r}")
    p, d, n = check_prime(int(obj["p"])), int(obj["d"]), int(obj["n"])
    result = FourierCoefficients.zeros(p, d, n)
    for entry in obj["coefficients"]:
        label = RepLabel.from_json(entry["label"], p)
        if label not in result.blocks:
            raise ValueError(f"label {label} lies outside B({n})")
        mat = np.array([[complex(v[0], v[1]) for v in row] for row in entry["matrix"]])
        if mat.shape != (label.dim, label.dim):
            raise ValueError(f"matrix for {label} has shape {mat.shape}")
        result.blocks[label] = mat
    return result


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def random_level_function(p: int, d: int, n: int, rng: np.random.Generator) -> LevelFunction:
    size = (p**n) ** (2 * d + 1)
    return LevelFunction(p, d, n, rng.standard_normal(size) + 1j * rng.standard_normal(size))


def basis_matrix(p: int, d: int, n: int, labels: Iterable[RepLabel] | None = None) -> np.ndarray:
    """Columns sqrt(d_pi) M[h', h] over all labels of B(n), shape (N, N)."""
    quot = quotient(p, d, n)
    cols = []
    for label in labels if labels is not None else iter_dual(p, d, n):
        dense = CoefficientLayout(label, quot).dense()
        cols.append(np.sqrt(label.dim) * dense.reshape(label.dim**2, quot.size))
    return np.concatenate(cols, axis=0).T
