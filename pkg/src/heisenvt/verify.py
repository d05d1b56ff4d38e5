"""Invariant suite behind ``heisenvt verify``.

Each check returns a record ``{name, p, n, value, tol, ok, seconds}``.
Checks that need the dense delta-basis matrix run only at levels inside the
dense budget; the others run at every level up to ``n_max``.
"""

from __future__ import annotations

import time
from fractions import Fraction

import numpy as np

from .dual import CoefficientLayout, RepLabel, count_dual, iter_dual, rep_matrices, verify_peter_weyl
from .fourier import basis_matrix, forward_transform, inverse_transform, random_level_function
from .group import quotient
from .operators import (OperatorSpec, apply_noninvariant_vt, apply_operator, operator_matrix,
                        vt_constants)
from .padic import DualScalar
from .spectral import (DENSE_BUDGET, block_results, closed_form_spectrum, compare_spectra,
                       hypoellipticity_scan, match_multisets, oracle_spectrum)

# Schur Gram matrices are N x N; keep them small
_GRAM_LIMIT = 800


def _record(name, p, n, value, tol, ok=None, started=None, **extra):
    rec = {"name": name, "p": p, "n": n, "value": value, "tol": tol,
           "ok": bool(value <= tol) if ok is None else bool(ok)}
    if started is not None:
        rec["seconds"] = round(time.perf_counter() - started, 3)
    rec.update(extra)
    return rec


def check_peter_weyl(p, d, n):
    t = time.perf_counter()
    total, order = verify_peter_weyl(p, d, n)
    count = sum(1 for _ in iter_dual(p, d, n))
    ok = total == order and count == count_dual(p, d, n)
    return _record("peter_weyl", p, n, abs(total - order), 0, ok, t, sum_dim_squared=total, order=order)


def rep_law_errors(p, d, n=1):
    """Largest unitarity and homomorphism errors over B(n) and all pairs at level n."""
    quot = quotient(p, d, n)
    unit = hom = 0.0
    gx, gy, gz = quot.x, quot.y, quot.z
    px, py, pz = quot.multiply(gx[:, None, :], gy[:, None, :], gz[:, None], gx[None], gy[None], gz[None])
    prod_idx = quot.index(px, py, pz)
    for label in iter_dual(p, d, n):
        reps = rep_matrices(label, quot, gx, gy, gz)
        eye = np.eye(label.dim)
        unit = max(unit, float(np.abs(np.einsum("kab,kcb->kac", reps, reps.conj()) - eye).max()))
        lhs = np.einsum("iab,jbc->ijac", reps, reps)
        hom = max(hom, float(np.abs(lhs - reps[prod_idx]).max()))
    return unit, hom


def check_rep_laws(p, d):
    t = time.perf_counter()
    unit, hom = rep_law_errors(p, d, 1)
    return _record("rep_laws_level1", p, 1, max(unit, hom), 1e-12, None, t,
                   unitarity=unit, homomorphism=hom)


def schur_gram_error(p, d, n):
    basis = basis_matrix(p, d, n)
    gram = basis.conj().T @ basis / basis.shape[0]
    return float(np.abs(gram - np.eye(gram.shape[0])).max())


def check_schur(p, d, n):
    t = time.perf_counter()
    return _record("schur_orthonormality", p, n, schur_gram_error(p, d, n), 1e-12, None, t)


def fourier_errors(p, d, n, samples, seed=0):
    rng = np.random.default_rng(seed)
    rt = pl = 0.0
    for _ in range(samples):
        f = random_level_function(p, d, n, rng)
        coeffs = forward_transform(f)
        rt = max(rt, float(np.abs(inverse_transform(coeffs).data - f.data).max()))
        pl = max(pl, abs(f.norm() ** 2 - coeffs.hs_norm() ** 2))
    return rt, pl


def check_fourier(p, d, n, samples):
    t = time.perf_counter()
    rt, pl = fourier_errors(p, d, n, samples)
    return _record("fourier_inversion_plancherel", p, n, max(rt, pl), 1e-10, None, t,
                   round_trip=rt, plancherel=pl, samples=samples)


def vt_eigen_error(p, d, n, all_rows=True):
    """Largest deviation of D^1 M from (|label| - c_sub) M over coefficients in B(n)."""
    quot = quotient(p, d, n)
    spec = OperatorSpec.vt(1)
    c_sub = vt_constants(1, 2 * d + 1, p)[1]
    err = 0.0
    for label in iter_dual(p, d, n):
        lay = CoefficientLayout(label, quot)
        rows = range(label.dim) if all_rows else [0]
        funcs = np.concatenate([lay.row_functions(r) for r in rows]).T
        value = 0.0 if label.is_trivial else float(Fraction(label.norm) - c_sub)
        image = apply_operator(spec, funcs, p, d, n)
        err = max(err, float(np.abs(image - value * funcs).max()))
    return err


def check_vt_eigen(p, d, n):
    t = time.perf_counter()
    full = p ** (n * (2 * d + 1)) <= DENSE_BUDGET
    return _record("vt_eigenvalues", p, n, vt_eigen_error(p, d, n, full), 1e-10, None, t,
                   coefficients="all" if full else "first row of each label")


def structural_errors(spec, p, d, n):
    """(left-invariance, Hermitian) errors of the dense matrix, sweeping level-1 translations."""
    mat = operator_matrix(spec, p, d, n)
    quot = quotient(p, d, n)
    coarse = quotient(p, d, 1)
    inv = 0.0
    for k in range(coarse.size):
        perm = quot.left_translate_index(coarse.x[k], coarse.y[k], coarse.z[k])
        inv = max(inv, float(np.abs(mat[np.ix_(perm, perm)] - mat).max()))
    herm = float(np.abs(mat - mat.conj().T).max())
    return inv, herm


def check_structure(spec, p, d, n):
    t = time.perf_counter()
    inv, herm = structural_errors(spec, p, d, n)
    return _record("left_invariance_hermitian", p, n, max(inv, herm), 1e-12, None, t,
                   left_invariance=inv, hermitian=herm)


def check_spectra(spec, p, d, n, workers):
    t = time.perf_counter()
    blocks = block_results(spec, p, d, n, workers)
    oracle = oracle_spectrum(spec, p, d, n, blocks=blocks)
    closed = closed_form_spectrum(spec, p, d, n)
    cmp = compare_spectra(closed, oracle)
    residual = max(r.block.residual for r in blocks)
    herm = max(r.block.hermitian_error for r in blocks)
    out = [
        _record("generic_blocks_closed_form", p, n, len(cmp.generic_failures), 0, cmp.ok, t,
                generic_blocks=cmp.generic_blocks, degenerate_blocks=len(cmp.degenerate),
                printed_form=cmp.printed_form),
        _record("block_invariance", p, n, max(residual, herm), 1e-12, None, None,
                residual=residual, hermitian=herm),
        _record("completeness", p, n, abs(oracle.sorted_values().size - p ** (n * (2 * d + 1))), 0),
    ]
    if p ** (n * (2 * d + 1)) <= DENSE_BUDGET:
        t = time.perf_counter()
        dense = oracle_spectrum(spec, p, d, n, "dense")
        ok, gap = match_multisets(dense.sorted_values(), oracle.sorted_values())
        trace = float(np.trace(operator_matrix(spec, p, d, n)))
        rel = abs(trace - float(oracle.sorted_values().sum())) / max(1.0, abs(trace))
        out.append(_record("dense_vs_block", p, n, gap, 1e-9, ok, t))
        out.append(_record("trace_identity", p, n, rel, 1e-8))
    return out


def degenerate_block(p, d=1):
    t = DualScalar.trivial(p)
    return RepLabel((t,) * d, (t,) * d, DualScalar.from_fraction(Fraction(1, p), p))


def check_degenerate(spec, p, d):
    t = time.perf_counter()
    label = degenerate_block(p, d)
    blocks = [r for r in block_results(spec, p, d, 1) if r.block.label == label
              and r.block.h_prime == (0,) * d]
    res = blocks[0]
    ok, _ = match_multisets(res.eigenvalues, res.closed)
    # flagged degenerate and visibly different from the closed-form values
    good = (not res.block.generic) and not ok
    return _record("degenerate_block_flagged", p, 1, 0 if good else 1, 0, good, t,
                   oracle=[round(float(v), 12) for v in res.eigenvalues],
                   closed=[round(v, 12) for v in res.closed])


def check_noninvariant(p, d, n, samples, seed=0):
    t = time.perf_counter()
    rng = np.random.default_rng(seed)
    err = 0.0
    for _ in range(samples):
        f = random_level_function(p, d, n, rng)
        for i in range(d):
            spec = OperatorSpec.directional(_y_direction(d, i), 1)
            err = max(err, float(np.abs(apply_noninvariant_vt(i, 1, f).data
                                        - apply_operator(spec, f).data).max()))
    return _record("noninvariant_equivalence", p, n, err, 1e-12, None, t, samples=samples)


def _y_direction(d, i):
    from .operators import Direction
    return Direction.basis(d, "Y", i)


def check_hypoellipticity(p, d, n_max):
    t = time.perf_counter()
    sub = hypoellipticity_scan(OperatorSpec.sublaplacian(d, 1), p, d, n_max)
    lap = hypoellipticity_scan(OperatorSpec.laplacian(d, 1), p, d, n_max)
    ok = sub.hypoelliptic and lap.hypoelliptic
    return _record("hypoellipticity_scan", p, n_max, 0 if ok else 1, 0, ok, t,
                   sublaplacian=sub.to_json(), laplacian=lap.to_json())


def run_suite(primes, d=1, n_max=2, workers=None) -> list[dict]:
    spec = OperatorSpec.sublaplacian(d, 1)
    results = []
    for p in primes:
        results.append(check_rep_laws(p, d))
        results.append(check_degenerate(spec, p, d))
        for n in range(1, n_max + 1):
            size = p ** (n * (2 * d + 1))
            results.append(check_peter_weyl(p, d, n))
            if size <= _GRAM_LIMIT:
                results.append(check_schur(p, d, n))
            results.append(check_fourier(p, d, n, 20 if size <= DENSE_BUDGET else 3))
            results.append(check_vt_eigen(p, d, n))
            if size <= DENSE_BUDGET:
                results.append(check_structure(spec, p, d, n))
            results.extend(check_spectra(spec, p, d, n, workers))
            results.append(check_noninvariant(p, d, n, 10 if size <= DENSE_BUDGET else 3))
        results.append(check_hypoellipticity(p, d, n_max))
    return results
