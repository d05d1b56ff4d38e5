import itertools
from fractions import Fraction

import numpy as np
import pytest

from heisenvt.dual import (CoefficientLayout, RepLabel, character_value, count_dual, dual_shell,
                           iter_dual, rep_matrices, rep_matrix)
from heisenvt.group import element_at, inverse, multiply, quotient
from heisenvt.padic import DualScalar, PrecisionError


def brute_labels(p, d, n):
    """Reduced triples built from all classes a / p^n, independent of iter_dual."""
    classes = [DualScalar.from_fraction(Fraction(a, p**n), p) for a in range(p**n)]
    out = set()
    for lam in classes:
        m = lam.denom_exp
        for comps in itertools.product(classes, repeat=2 * d):
            red = tuple(c.reduce(m) for c in comps)
            out.add((red[:d], red[d:], lam))
    return out


@pytest.mark.parametrize("p,d,n,count", [(3, 1, 1, 11), (3, 1, 2, 105), (5, 1, 1, 29), (3, 2, 1, 83)])
def test_label_census(p, d, n, count):
    labels = list(iter_dual(p, d, n))
    assert len(labels) == count == count_dual(p, d, n)
    assert {(lab.xi, lab.eta, lab.lam) for lab in labels} == brute_labels(p, d, n)
    assert len(set(labels)) == len(labels)


def test_label_validation_and_json():
    lam = DualScalar(3, 1, 1)
    with pytest.raises(ValueError, match="not reduced"):
        RepLabel((DualScalar(3, 1, 2),), (DualScalar.trivial(3),), lam)
    lab = RepLabel((DualScalar(3, 2, 1),), (DualScalar.trivial(3),), DualScalar.trivial(3))
    assert lab.dim == 1 and lab.norm == 9 and lab.level == 2
    for label in iter_dual(3, 1, 2):
        assert RepLabel.from_json(label.to_json(), 3) == label


def test_shell_sizes():
    assert len(dual_shell(3, 1, 1)) == 10
    assert len(dual_shell(3, 1, 2)) == 94


def test_layout_matches_exact_matrices():
    quot = quotient(3, 1, 2)
    rng = np.random.default_rng(3)
    for label in iter_dual(3, 1, 2):
        dense = CoefficientLayout(label, quot).dense()
        for k in rng.integers(0, quot.size, 4):
            g = element_at(3, 1, 2, int(k))
            assert np.abs(dense[:, :, k] - rep_matrix(label, g)).max() < 1e-13
            batch = rep_matrices(label, quot, quot.x[k], quot.y[k], quot.z[k])[0]
            assert np.abs(batch - dense[:, :, k]).max() < 1e-13


def test_characters_are_class_functions_and_orthonormal():
    quot = quotient(3, 1, 1)
    labels = list(iter_dual(3, 1, 1))
    table = np.array([[character_value(lab, element_at(3, 1, 1, k)) for k in range(quot.size)]
                      for lab in labels])
    gram = table @ table.conj().T / quot.size
    assert np.abs(gram - np.eye(len(labels))).max() < 1e-12
    g, h = element_at(3, 1, 1, 5), element_at(3, 1, 1, 22)
    for lab in labels:
        conj = multiply(multiply(h, g), inverse(h))
        assert abs(character_value(lab, conj) - character_value(lab, g)) < 1e-12


def test_precision_error():
    lab = RepLabel((DualScalar.trivial(3),), (DualScalar.trivial(3),), DualScalar(3, 2, 1))
    with pytest.raises(PrecisionError):
        rep_matrix(lab, element_at(3, 1, 1, 4))
    with pytest.raises(PrecisionError):
        CoefficientLayout(lab, quotient(3, 1, 1))
