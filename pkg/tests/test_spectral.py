import csv
import io
from fractions import Fraction

import numpy as np
import pytest

from heisenvt.dual import RepLabel, iter_dual
from heisenvt.group import element_at
from heisenvt.operators import OperatorSpec, apply_operator
from heisenvt.padic import DualScalar
from heisenvt.spectral import (closed_form_eigenvalue, closed_form_spectrum, compare_spectra,
                               eigenfunction_array, eigenfunction_value, genericity_predicate,
                               hypoellipticity_scan, oracle_spectrum, restrict_to_block, tau_classes)

SUB = OperatorSpec.sublaplacian(1, 1)


def _ds(frac, p=3):
    return DualScalar.from_fraction(Fraction(frac), p)


WORKED = RepLabel((_ds(0),), (_ds("1/9"),), _ds("1/3"))


def test_closed_form_values():
    assert closed_form_eigenvalue(SUB, WORKED, (0,), (_ds("1/3"),)) == Fraction(21, 2)
    assert closed_form_eigenvalue(SUB, WORKED, (0,), (_ds(0),)) == Fraction(33, 4)
    trivial = RepLabel((_ds(0),), (_ds(0),), _ds(0))
    assert closed_form_eigenvalue(SUB, trivial, (0,), (_ds(0),)) == 0
    char = RepLabel((_ds("1/3"),), (_ds("2/3"),), _ds(0))
    assert closed_form_eigenvalue(SUB, char, (0,), (_ds(0),)) == Fraction(9, 2)
    with pytest.raises(ValueError, match="outside"):
        closed_form_eigenvalue(SUB, WORKED, (0,), (_ds("1/9"),))


def test_eigenfunctions():
    taus = tau_classes(WORKED)
    assert len(taus) == WORKED.dim
    e = element_at(3, 1, 2, 0)
    assert eigenfunction_value(WORKED, (0,), taus[1], e) == 1
    basis = eigenfunction_array(WORKED, (0,), taus, 2)
    assert np.abs(basis.conj().T @ basis / basis.shape[0] - np.eye(3)).max() < 1e-13
    g = element_at(3, 1, 2, 500)
    k = taus.index((_ds("1/3"),))
    assert abs(basis[500, k] - eigenfunction_value(WORKED, (0,), taus[k], g)) < 1e-13
    image = apply_operator(SUB, basis[:, k], 3, 1, 2)
    assert np.abs(image - 10.5 * basis[:, k]).max() < 1e-12


def test_generic_block_is_diagonal():
    block = restrict_to_block(SUB, WORKED, (0,))
    assert block.generic
    closed = [float(closed_form_eigenvalue(SUB, WORKED, (0,), t)) for t in block.taus]
    assert np.abs(block.matrix - np.diag(closed)).max() < 1e-12


def test_slice_restriction_matches_full_evaluation():
    for label in list(iter_dual(3, 1, 2))[::7]:
        for hp in label.basis():
            fast = restrict_to_block(SUB, label, hp)
            full = restrict_to_block(SUB, label, hp, full=True)
            assert np.abs(fast.matrix - full.matrix).max() < 1e-12
            assert fast.residual < 1e-12


def test_degenerate_predicate():
    label = RepLabel((_ds(0),), (_ds(0),), _ds("1/3"))
    assert not genericity_predicate(label, (0,), SUB)
    assert genericity_predicate(WORKED, (0,), SUB)


def test_completeness_and_reports():
    oracle = oracle_spectrum(SUB, 3, 1, 1)
    closed = closed_form_spectrum(SUB, 3, 1, 1)
    assert oracle.sorted_values().size == closed.sorted_values().size == 27
    doc = oracle.to_json()
    assert doc["total"] == 27 == sum(e["mult"] for e in doc["entries"])
    assert doc["entries"][0]["value"] == 0.0
    rows = list(csv.reader(io.StringIO(closed.to_csv())))
    assert rows[0][:3] == ["version", "mode", "label"] and len(rows) == 28
    dense = oracle_spectrum(SUB, 3, 1, 1, "dense")
    assert dense.to_json()["total"] == 27
    with pytest.raises(ValueError, match="budget"):
        oracle_spectrum(SUB, 3, 1, 2, "dense", budget=100)


def test_two_dimensional_printed_form():
    spec = OperatorSpec.sublaplacian(2, 1)
    cmp = compare_spectra(closed_form_spectrum(spec, 3, 2, 1), oracle_spectrum(spec, 3, 2, 1))
    assert cmp.ok and cmp.generic_blocks > 0
    form = cmp.printed_form
    assert form["distinguishable"]
    assert form["per_direction"] == form["checked"] > 0
    assert form["two_only"] == 0


def test_zero_operator_is_not_hypoelliptic():
    report = hypoellipticity_scan(OperatorSpec.zero(), 3, 1, 2)
    assert not report.hypoelliptic and report.inf_order is None
    assert report.to_json()["status"] == "not hypoelliptic detected"


def test_laplacian_shell_minima():
    report = hypoellipticity_scan(OperatorSpec.laplacian(1, 1), 3, 1, 3)
    assert [s["min_inf"] for s in report.shells] == pytest.approx([3**j - 0.75 for j in (1, 2, 3)])
    assert report.hypoelliptic
