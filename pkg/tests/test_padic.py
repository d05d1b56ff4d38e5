from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from heisenvt.padic import (DualScalar, PrecisionError, Residue, check_prime, dual_classes, dual_pair,
                            flat_index, fractional_part, pnorm, residue_valuation, unflatten, valuation)

primes = st.sampled_from([3, 5, 7])


def p_fractions(p):
    return st.builds(lambda a, k: Fraction(a, p**k), st.integers(-10**6, 10**6), st.integers(0, 6))


@pytest.mark.parametrize("bad", [2, 4, 9, 1, 0, -3, 3.0, True])
def test_check_prime_rejects(bad):
    with pytest.raises(ValueError, match="p must be an odd prime"):
        check_prime(bad)


def test_valuation_and_norm():
    assert valuation(Fraction(18), 3) == 2
    assert valuation(Fraction(1, 27), 3) == -3
    assert pnorm(Fraction(2, 9), 3) == 9
    assert pnorm(0, 3) == 0
    assert residue_valuation(0, 3, 4) == 4
    assert residue_valuation(54, 3, 4) == 3


@given(primes, st.data())
def test_valuation_is_multiplicative(p, data):
    a = data.draw(p_fractions(p).filter(lambda r: r != 0))
    b = data.draw(p_fractions(p).filter(lambda r: r != 0))
    assert valuation(a * b, p) == valuation(a, p) + valuation(b, p)
    assert pnorm(a + b, p) <= max(pnorm(a, p), pnorm(b, p))


@given(primes, st.data())
def test_fractional_part_is_additive_mod_one(p, data):
    a, b = data.draw(p_fractions(p)), data.draw(p_fractions(p))
    s = fractional_part(a, p) + fractional_part(b, p)
    assert 0 <= fractional_part(a, p) < 1
    assert fractional_part(a + b, p) == s - int(s)


def test_fractional_part_rejects_other_denominators():
    with pytest.raises(ValueError):
        fractional_part(Fraction(1, 6), 3)


@given(primes, st.data())
def test_dual_scalar_canonical_and_round_trip(p, data):
    r = data.draw(p_fractions(p))
    s = DualScalar.from_fraction(r, p)
    assert (s.as_fraction() - r).denominator == 1
    assert DualScalar.parse(str(s), p) == s
    assert s + (-s) == DualScalar.trivial(p)
    if not s.is_trivial:
        assert s.numer % p != 0 and s.norm == p**s.denom_exp


def test_dual_scalar_invariants():
    with pytest.raises(ValueError):
        DualScalar(3, 2, 3)
    with pytest.raises(ValueError):
        DualScalar(3, 0, 1)
    assert DualScalar.trivial(3).norm == 1
    assert str(DualScalar(3, 2, 7)) == "7/3^2"


@given(primes, st.integers(0, 4), st.data())
def test_reduce_is_idempotent_and_bounded(p, m, data):
    s = DualScalar.from_fraction(data.draw(p_fractions(p)), p)
    r = s.reduce(m)
    assert r.reduce(m) == r
    assert (s - r).denom_exp <= m
    assert r.denom_exp == 0 or r.denom_exp > m


def test_dual_pair_precision_and_additivity():
    xi = (DualScalar(3, 2, 1),)
    assert dual_pair(xi, (4,), 2) == Fraction(4, 9)
    assert dual_pair(xi, (Residue(3, 2, 13),)) == Fraction(4, 9)
    with pytest.raises(PrecisionError):
        dual_pair(xi, (1,), 1)
    a, b = dual_pair(xi, (5,), 2), dual_pair(xi, (7,), 2)
    assert (a + b - dual_pair(xi, (12,), 2)).denominator == 1


def test_dual_classes_count():
    assert len(list(dual_classes(3, 2))) == 9
    assert len(list(dual_classes(5, 2, 1))) == 5
    assert list(dual_classes(3, 1, 1)) == [DualScalar.trivial(3)]


@given(st.integers(0, 3**6 - 1))
def test_flat_index_round_trip(i):
    assert flat_index(unflatten(i, 9, 3), 9) == i
