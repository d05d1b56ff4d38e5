"""Spectrum of sub-Laplacian type operators, block by block.

For a label (xi, eta, lam) with |lam| = p^m and h' in (Z/p^m)^d, the span of
row h' of the coefficient matrix is invariant.  Its orthonormal tau-basis is

    e_tau(x, y, z) = e^{2 pi i {lam (z + h'.y) + (xi + tau).x + eta.y}},  |tau| <= p^m.

X-directions act diagonally on e_tau, the center acts by the scalar
s(lam), and a Y-direction W acts by multiplication with the potential
x -> s(W.(lam (x + h') + eta)).  When every such potential is constant in x
the block is diagonal with the closed-form eigenvalues; otherwise the block
is degenerate and only the numerical oracle gives its spectrum.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .dual import RepLabel, dual_shell, iter_dual
from .group import GroupElement, quotient
from .linalg import hermitian_eigenvalues
from .operators import (Number, OperatorSpec, apply_operator, operator_matrix, operator_symbol,
                        scalar_symbol, vt_constants)
from .padic import DualScalar, PrecisionError, dual_classes, roots_of_unity

DENSE_BUDGET = 5000


def _tol(v: float) -> float:
    return 1e-9 * max(1.0, abs(v))


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("HEISENVT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError("HEISENVT_THREADS must be an integer") from None
    return 1


def _pmap(fn, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# closed form


def _linear_dual(coeffs: Sequence[int], classes: Sequence[DualScalar]) -> DualScalar:
    total = DualScalar.trivial(classes[0].p)
    for c, s in zip(coeffs, classes):
        total = total + s.scale(c)
    return total


def _term_roles(spec: OperatorSpec):
    """Split a spec into X-, Y- and Z-aligned directional terms."""
    xs, ys, zs = [], [], []
    for term in spec.terms:
        v = term.direction
        if term.kind != "directional":
            raise ValueError("the closed form covers directional terms only")
        if not any(v.b) and not v.c and any(v.a):
            xs.append((v.a, term.alpha))
        elif not any(v.a) and not v.c and any(v.b):
            ys.append((v.b, term.alpha))
        elif not any(v.a) and not any(v.b):
            zs.append((v.c, term.alpha))
        else:
            raise ValueError(f"direction {v} mixes X, Y and Z components")
    return xs, ys, zs


def tau_classes(label: RepLabel) -> list[tuple[DualScalar, ...]]:
    """The tau with |tau| <= |lam| in dual enumeration order (flat over components)."""
    comps = sorted(dual_classes(label.p, label.m), key=DualScalar.as_fraction)
    return [tuple(reversed(c)) for c in itertools.product(comps, repeat=label.d)]


def _hprime_list(label: RepLabel) -> list[tuple[int, ...]]:
    return label.basis()


def _check_tau(label: RepLabel, tau: Sequence[DualScalar]) -> None:
    if len(tau) != label.d or any(t.denom_exp > label.m for t in tau):
        raise ValueError(f"tau {tuple(map(str, tau))} outside |tau| <= |lambda| for {label}")


def closed_form_eigenvalue(spec: OperatorSpec, label: RepLabel, h_prime: Sequence[int],
                           tau: Sequence[DualScalar]) -> Number:
    _check_tau(label, tau)
    xs, ys, zs = _term_roles(spec)
    shifted = [label.xi[i] + tau[i] for i in range(label.d)]
    centre = [label.lam.scale(h_prime[i]) + label.eta[i] for i in range(label.d)]
    total: Number = Fraction(0)
    for v, a in xs:
        total += scalar_symbol(_linear_dual(v, shifted), a)
    for w, b in ys:
        total += scalar_symbol(_linear_dual(w, centre), b)
    for c, g in zs:
        total += scalar_symbol(label.lam.scale(c), g)
    return total


def printed_variants(spec: OperatorSpec, label: RepLabel, h_prime, tau) -> dict[str, float] | None:
    """The two printed un-branched forms, defined when every argument is nontrivial.

    ``per_direction`` subtracts c_sub once per direction (2d times in total),
    ``two_only`` subtracts it twice.
    """
    xs, ys, zs = _term_roles(spec)
    if zs or not xs or not ys:
        return None
    alphas = {a for _, a in xs} | {b for _, b in ys}
    if len(alphas) != 1:
        return None
    alpha = alphas.pop()
    shifted = [label.xi[i] + tau[i] for i in range(label.d)]
    centre = [label.lam.scale(h_prime[i]) + label.eta[i] for i in range(label.d)]
    args = [_linear_dual(v, shifted) for v, _ in xs] + [_linear_dual(w, centre) for w, _ in ys]
    if any(a.is_trivial for a in args):
        return None
    base = sum(float(a.norm) ** float(alpha) for a in args)
    c = float(vt_constants(alpha, 1, label.p)[1])
    return {"per_direction": base - len(args) * c, "two_only": base - 2 * c}


def genericity_predicate(label: RepLabel, h_prime: Sequence[int], spec: OperatorSpec) -> bool:
    """Every Y-potential x -> W.(lam (x + h') + eta) has constant norm over x."""
    _, ys, _ = _term_roles(spec)
    pm = label.p**label.m
    for w, _ in ys:
        norms = set()
        for x in itertools.product(range(pm), repeat=label.d):
            arg = [label.lam.scale(x[i] + h_prime[i]) + label.eta[i] for i in range(label.d)]
            norms.add(_linear_dual(w, arg).denom_exp)
            if len(norms) > 1:
                return False
    return True


def eigenfunction_value(label: RepLabel, h_prime: Sequence[int], tau: Sequence[DualScalar],
                        g: GroupElement) -> complex:
    _check_tau(label, tau)
    if g.n < label.level:
        raise PrecisionError(f"label {label} needs {label.level} digits, element has {g.n}")
    phase = label.lam.as_fraction() * (g.z + sum(a * b for a, b in zip(h_prime, g.y)))
    for i in range(label.d):
        phase += (label.xi[i] + tau[i]).as_fraction() * g.x[i] + label.eta[i].as_fraction() * g.y[i]
    phase -= math.floor(phase)
    return complex(np.exp(2j * np.pi * float(phase)))


def eigenfunction_array(label: RepLabel, h_prime: Sequence[int], taus, n: int) -> np.ndarray:
    """Columns e_tau sampled on the whole level-n quotient, shape (N, len(taus))."""
    quot = quotient(label.p, label.d, n)
    q = quot.q
    if n < label.level:
        raise PrecisionError(f"label {label} needs level {label.level}, got {n}")
    lam = label.lam.numer_at(n)
    eta = np.array([s.numer_at(n) for s in label.eta], dtype=np.int64)
    hp = np.array(h_prime, dtype=np.int64)
    base = (lam * (quot.z + quot.y @ hp) + quot.y @ eta) % q
    cols = []
    for tau in taus:
        shift = np.array([(label.xi[i] + tau[i]).numer_at(n) for i in range(label.d)], dtype=np.int64)
        cols.append((base + quot.x @ shift) % q)
    return roots_of_unity(q)[np.stack(cols, axis=1)]


# ---------------------------------------------------------------------------
# blocks


@dataclass
class SubrepBlock:
    label: RepLabel
    h_prime: tuple[int, ...]
    taus: list[tuple[DualScalar, ...]]
    matrix: np.ndarray
    residual: float
    generic: bool

    @property
    def hermitian_error(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max(initial=0.0))


def restrict_to_block(spec: OperatorSpec, label: RepLabel, h_prime: Sequence[int],
                      n: int | None = None, full: bool = False) -> SubrepBlock:
    """Matrix of ``spec`` on the span of row h' in the tau-basis.

    The operator is applied to the sampled basis on the level-n quotient
    (default: the label's own level, where the quadrature is already exact)
    and projected back with Haar inner products.  ``residual`` is the largest
    sup-norm of the component that leaves the block.

    Every basis function is e^{2 pi i lam z} times a function of (x, y), and
    all terms commute with central translations, so by default the image is
    evaluated only on the slice z = 0; ``full=True`` evaluates it everywhere.
    """
    n = max(label.level, 1) if n is None else n
    h_prime = tuple(int(v) for v in h_prime)
    taus = tau_classes(label)
    basis = eigenfunction_array(label, h_prime, taus, n)
    quot = quotient(label.p, label.d, n)
    points = None if full else np.flatnonzero(quot.z == 0)
    image = apply_operator(spec, basis, label.p, label.d, n, points=points)
    sampled = basis if points is None else basis[points]
    mat = sampled.conj().T @ image / sampled.shape[0]
    residual = float(np.abs(image - sampled @ mat).max(initial=0.0))
    return SubrepBlock(label, h_prime, taus, mat, residual,
                       genericity_predicate(label, h_prime, spec) if _closed_ok(spec) else False)


def _closed_ok(spec: OperatorSpec) -> bool:
    try:
        _term_roles(spec)
    except ValueError:
        return False
    return True


# ---------------------------------------------------------------------------
# reports


@dataclass
class SpectrumRecord:
    value: float
    label: str
    h_prime: tuple[int, ...]
    tag: str
    generic: bool

    def provenance(self) -> str:
        return f"{self.label}|h'={list(self.h_prime)}|{self.tag}"


@dataclass
class SpectrumReport:
    p: int
    d: int
    n: int
    spec: OperatorSpec
    mode: str
    records: list[SpectrumRecord] = field(default_factory=list)
    values: np.ndarray | None = None

    def sorted_values(self) -> np.ndarray:
        if self.values is not None:
            return np.sort(self.values)
        return np.sort(np.array([r.value for r in self.records]))

    def entries(self) -> list[dict]:
        if self.records:
            recs = sorted(self.records, key=lambda r: (r.value, r.provenance()))
            items = [(r.value, r.provenance(), r.generic) for r in recs]
        else:
            items = [(float(v), None, None) for v in self.sorted_values()]
        out: list[dict] = []
        for value, prov, generic in items:
            if out and abs(value - out[-1]["_first"]) <= _tol(out[-1]["_first"]):
                e = out[-1]
                e["mult"] += 1
            else:
                e = {"_first": value, "value": value, "mult": 1, "labels": []}
                if generic is not None:
                    e["generic"] = True
                out.append(e)
            if prov is not None:
                e["labels"].append(prov)
                e["generic"] = e["generic"] and bool(generic)
        for e in out:
            e["value"] = _round(e.pop("_first"))
        return out

    def to_json(self) -> dict:
        return {"version": __version__, "p": self.p, "d": self.d, "n": self.n,
                "spec": self.spec.to_json(), "mode": self.mode,
                "total": int(self.sorted_values().size), "entries": self.entries()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["version", "mode", "label", "h_prime", "basis", "value", "generic"])
        if self.records:
            for r in sorted(self.records, key=lambda r: (r.label, r.h_prime, r.tag)):
                writer.writerow([__version__, self.mode, r.label, " ".join(map(str, r.h_prime)),
                                 r.tag, _round(r.value), r.generic])
        else:
            for i, v in enumerate(self.sorted_values()):
                writer.writerow([__version__, self.mode, "", "", f"#{i}", _round(float(v)), ""])
        return buf.getvalue()


def _round(v: float) -> float:
    r = float(f"{v:.12g}")
    return 0.0 if r == 0 else r


def closed_form_spectrum(spec: OperatorSpec, p: int, d: int, n: int) -> SpectrumReport:
    spec.validate(p, d)
    report = SpectrumReport(p, d, n, spec, "closed")
    for label in iter_dual(p, d, n):
        taus = tau_classes(label)
        for hp in _hprime_list(label):
            generic = genericity_predicate(label, hp, spec)
            for tau in taus:
                value = float(closed_form_eigenvalue(spec, label, hp, tau))
                tag = "tau=" + ",".join(map(str, tau))
                report.records.append(SpectrumRecord(value, str(label), hp, tag, generic))
    return report


@dataclass
class BlockResult:
    block: SubrepBlock
    eigenvalues: np.ndarray
    closed: list[float] | None


def block_results(spec: OperatorSpec, p: int, d: int, n: int,
                  workers: int | None = None) -> list[BlockResult]:
    spec.validate(p, d)
    closed_ok = _closed_ok(spec)
    items = [(label, hp) for label in iter_dual(p, d, n) for hp in _hprime_list(label)]

    def work(item):
        label, hp = item
        block = restrict_to_block(spec, label, hp)
        vals = hermitian_eigenvalues(block.matrix)
        closed = None
        if closed_ok:
            closed = sorted(float(closed_form_eigenvalue(spec, label, hp, t)) for t in block.taus)
        return BlockResult(block, vals, closed)

    return _pmap(work, items, worker_count(workers))


def oracle_spectrum(spec: OperatorSpec, p: int, d: int, n: int, mode: str = "block",
                    budget: int = DENSE_BUDGET, workers: int | None = None,
                    blocks: list[BlockResult] | None = None) -> SpectrumReport:
    spec.validate(p, d)
    if mode == "dense":
        size = p ** (n * (2 * d + 1))
        if size > budget:
            raise ValueError(f"dense mode needs {size} dimensions, budget is {budget}")
        mat = operator_matrix(spec, p, d, n)
        # LAPACK here keeps this path independent of the Jacobi block solver
        return SpectrumReport(p, d, n, spec, "dense", values=np.linalg.eigvalsh(mat))
    if mode != "block":
        raise ValueError(f"mode must be 'dense' or 'block', got {mode!r}")
    report = SpectrumReport(p, d, n, spec, "block")
    for res in blocks if blocks is not None else block_results(spec, p, d, n, workers):
        for i, v in enumerate(res.eigenvalues):
            report.records.append(SpectrumRecord(float(v), str(res.block.label), res.block.h_prime,
                                                 f"#{i}", res.block.generic))
    return report


def match_multisets(a: Iterable[float], b: Iterable[float]) -> tuple[bool, float]:
    """Greedy pairing of sorted multisets; returns (all paired, largest gap)."""
    xs, ys = np.sort(np.asarray(list(a), float)), np.sort(np.asarray(list(b), float))
    if xs.size != ys.size:
        return False, math.inf
    gaps = np.abs(xs - ys)
    ok = all(g <= _tol(max(abs(x), abs(y))) for g, x, y in zip(gaps, xs, ys))
    return ok, float(gaps.max(initial=0.0))


@dataclass
class Comparison:
    ok: bool
    total_match: bool
    max_gap: float
    generic_blocks: int
    generic_failures: list[dict]
    degenerate: list[dict]
    printed_form: dict

    def to_json(self) -> dict:
        return {"ok": self.ok, "multiset_match": self.total_match, "max_gap": self.max_gap,
                "generic_blocks": self.generic_blocks, "generic_failures": self.generic_failures,
                "degenerate_blocks": self.degenerate, "printed_form": self.printed_form}


def compare_spectra(closed: SpectrumReport, oracle: SpectrumReport,
                    tol: float | None = None) -> Comparison:
    """Match closed-form and oracle spectra overall and block by block.

    Generic blocks must agree; degenerate blocks are listed with both
    multisets and never counted as agreement.
    """
    total_match, gap = match_multisets(closed.sorted_values(), oracle.sorted_values())
    if tol is not None:
        total_match = gap <= tol
    by_block: dict[tuple, dict[str, list]] = {}
    for rep, key in ((closed, "closed"), (oracle, "oracle")):
        for r in rep.records:
            entry = by_block.setdefault((r.label, r.h_prime), {"closed": [], "oracle": [], "generic": r.generic})
            entry[key].append(r.value)
    failures, degenerate = [], []
    generic_count = 0
    for (label, hp), entry in sorted(by_block.items()):
        ok, bgap = match_multisets(entry["closed"], entry["oracle"])
        if tol is not None and math.isfinite(bgap):
            ok = bgap <= tol
        summary = {"label": label, "h_prime": list(hp),
                   "closed": [_round(v) for v in sorted(entry["closed"])],
                   "oracle": [_round(v) for v in sorted(entry["oracle"])], "match": ok}
        if entry["generic"]:
            generic_count += 1
            if not ok:
                failures.append(summary)
        else:
            degenerate.append(summary)
    printed = _printed_form_support(closed, oracle)
    return Comparison(not failures, total_match, gap, generic_count, failures, degenerate, printed)


def _printed_form_support(closed: SpectrumReport, oracle: SpectrumReport) -> dict:
    """Which printed constant (-2 c_sub or -2d c_sub) the oracle spectrum supports."""
    spec, d = closed.spec, closed.d
    counts = {"per_direction": 0, "two_only": 0, "checked": 0}
    if not oracle.records:
        return counts
    oracle_blocks: dict[tuple, list[float]] = {}
    for r in oracle.records:
        oracle_blocks.setdefault((r.label, r.h_prime), []).append(r.value)
    labels = {str(lab): lab for lab in iter_dual(closed.p, d, closed.n)}
    try:
        _term_roles(spec)
    except ValueError:
        return counts
    for r in closed.records:
        if not r.generic:
            continue
        label = labels[r.label]
        tau = tuple(DualScalar.parse(s, closed.p) for s in r.tag[4:].split(","))
        forms = printed_variants(spec, label, r.h_prime, tau)
        if forms is None:
            continue
        counts["checked"] += 1
        vals = oracle_blocks.get((r.label, r.h_prime), [])
        for key, v in forms.items():
            if any(abs(v - o) <= _tol(v) for o in vals):
                counts[key] += 1
    counts["distinguishable"] = d > 1
    return counts


# ---------------------------------------------------------------------------
# hypoellipticity


@dataclass
class EllipticityReport:
    p: int
    d: int
    spec: OperatorSpec
    shells: list[dict]
    inf_order: float | None
    op_order: float | None
    c_inf: float | None
    c_op: float | None
    hypoelliptic: bool

    def to_json(self) -> dict:
        return {"version": __version__, "p": self.p, "d": self.d, "spec": self.spec.to_json(),
                "shells": self.shells,
                "inf_order": None if self.inf_order is None else _round(self.inf_order),
                "op_order": None if self.op_order is None else _round(self.op_order),
                "C_inf": None if self.c_inf is None else _round(self.c_inf),
                "C_op": None if self.c_op is None else _round(self.c_op),
                "status": "hypoelliptic growth detected" if self.hypoelliptic
                else "not hypoelliptic detected"}


def _fit(js: Sequence[int], values: Sequence[float], p: int) -> tuple[float, float] | None:
    """Least-squares line through (j, log_p value): (slope, p^intercept)."""
    if any(v <= 1e-12 for v in values):
        return None
    slope, icept = np.polyfit(np.asarray(js, float), np.log(values) / np.log(p), 1)
    return float(slope), float(p**icept)


def hypoellipticity_scan(spec: OperatorSpec, p: int, d: int, n_max: int,
                         workers: int | None = None) -> EllipticityReport:
    spec.validate(p, d)
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    shells = []
    for j in range(1, n_max + 1):
        labels = dual_shell(p, d, j)
        if not labels:
            raise ValueError(f"shell {j} is empty")
        svals = _pmap(lambda lab: np.linalg.svd(operator_symbol(spec, lab), compute_uv=False),
                      labels, worker_count(workers))
        low = min(float(s.min()) for s in svals)
        high = max(float(s.max()) for s in svals)
        shells.append({"j": j, "labels": len(labels), "min_inf": _round(low), "max_op": _round(high)})
    js = [s["j"] for s in shells]
    inf_fit = _fit(js, [s["min_inf"] for s in shells], p)
    op_fit = _fit(js, [s["max_op"] for s in shells], p)
    hypo = inf_fit is not None and inf_fit[0] > 0
    return EllipticityReport(p, d, spec, shells,
                             None if inf_fit is None else inf_fit[0],
                             None if op_fit is None else op_fit[0],
                             None if inf_fit is None else inf_fit[1],
                             None if op_fit is None else op_fit[1], hypo)


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=1)
