from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from medianscape.errors import ValidationError
from medianscape.medians import (count_threshold, decreasing_rearrangement, gamma_median, product_error,
                                 pth_mean_via_medians)
from oracles import dyadic_masses, median_oracle


def test_small_examples():
    u = [3.0, 1.0, 2.0, 5.0]
    assert gamma_median(u, 0.5) == 3.0
    assert gamma_median(u, 0.25) == 5.0
    assert gamma_median(u, 0.9) == 1.0
    # weighted: {u > 1} has mass 3 of 4, {u > 2} mass 1 of 4
    assert gamma_median([1.0, 2.0, 5.0], 0.5, [1.0, 2.0, 1.0]) == 2.0
    assert gamma_median([1.0, 2.0, 5.0], 0.25, [1.0, 2.0, 1.0]) == 5.0


def test_threshold_boundary_is_strict():
    # mass{u > 0} = 2 of 4 is not < 0.5 * 4, so level 0 does not qualify at gamma = 1/2
    assert gamma_median([0.0, 0.0, 1.0, 2.0], 0.5) == 1.0
    assert gamma_median([0.0, 0.0, 1.0, 2.0], 0.5 + 1e-15) == 0.0


@given(st.floats(1e-6, 1 - 1e-6), st.integers(1, 10**6))
def test_count_threshold_exact(gamma, m):
    j = count_threshold(gamma, m)
    exact = Fraction(gamma) * m
    assert j >= 1
    assert Fraction(j) >= exact
    assert j == 1 or Fraction(j - 1) < exact


@given(st.floats(1e-8, 1.0), st.floats(1.0, 1e12))
def test_two_product(a, b):
    p, e = product_error(a, b)
    assert Fraction(p) + Fraction(e) == Fraction(a) * Fraction(b)


@pytest.mark.parametrize("seed", range(20))
def test_matches_level_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 30))
    u = rng.integers(-5, 6, n).astype(float)
    m = dyadic_masses(rng, n)
    for g in (0.1, 0.25, 0.5, 0.7, 0.99, float(rng.uniform(0.01, 0.99))):
        assert gamma_median(u, g, m) == median_oracle(u, m, g)
        assert gamma_median(u, g) == median_oracle(u, np.ones(n), g)


def test_rejects_bad_input():
    with pytest.raises(ValidationError):
        gamma_median([1.0], 0.0)
    with pytest.raises(ValidationError):
        gamma_median([1.0], 1.0)
    with pytest.raises(ValidationError):
        gamma_median([], 0.5)
    with pytest.raises(ValidationError):
        pth_mean_via_medians([1.0], 0.0)


def test_rearrangement_recovers_medians():
    rng = np.random.default_rng(3)
    u = rng.integers(0, 7, 25).astype(float)
    m = dyadic_masses(rng, 25)
    v = decreasing_rearrangement(u, m)
    M = m.sum()
    for g in (0.1, 0.3, 0.5, 0.8):
        # the rearrangement at gamma*M, taken from the right, is the median
        assert v(g * M * (1 + 1e-12)) == gamma_median(u, g, m)
    assert np.all(np.diff(v.levels) < 0)


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.0])
def test_pth_mean_identity(p):
    rng = np.random.default_rng(int(p * 10))
    for _ in range(20):
        n = int(rng.integers(1, 50))
        u = rng.standard_normal(n)
        m = rng.uniform(0.1, 10.0, n)
        lhs, rhs = pth_mean_via_medians(u, p, m)
        assert rhs == pytest.approx(lhs, rel=1e-12)
