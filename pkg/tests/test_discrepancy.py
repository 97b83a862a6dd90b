"""Exact star discrepancy, orbits, Koksma and Gordon grids."""
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpgordon.contfrac import expand, synthesize_liouville
from qpgordon.discrepancy import (PointSet, gordon_grid, koksma_defect, orbit_discrepancy_bound,
                                  rotation_orbit, star_discrepancy, star_discrepancy_bruteforce,
                                  star_discrepancy_float, truncated_koksma)
from qpgordon.errors import DeltaTooLarge, EmptySet, InsufficientDepth, UnboundedVariation
from qpgordon.periodic_fn import log_envelope, maryland, sawtooth

GOLDEN = expand("surd:(sqrt(5)-1)/2", 40)

points = st.lists(st.fractions(min_value=0, max_value=Fraction(999, 1000)), min_size=1,
                  max_size=40)


@given(points)
def test_sorted_formula_matches_bruteforce(pts):
    assert star_discrepancy(pts) == star_discrepancy_bruteforce(pts)


@given(points)
def test_float_kernel_matches_exact(pts):
    x = np.array([float(p) for p in pts])
    assert star_discrepancy_float(x) == pytest.approx(float(star_discrepancy(pts)), abs=1e-12)


@given(points)
def test_order_independent_and_bounds(pts):
    n = len(pts)
    d = star_discrepancy(pts)
    assert Fraction(1, 2 * n) <= d <= 1
    assert star_discrepancy(list(reversed(pts))) == d


def test_equispaced_midpoints():
    n = 17
    assert star_discrepancy([Fraction(2 * i + 1, 2 * n) for i in range(n)]) == Fraction(1, 2 * n)


def test_empty_raises():
    with pytest.raises(EmptySet):
        star_discrepancy([])


def test_orbit_exact_bound_golden():
    for k in range(2, 12):
        q = GOLDEN.q(k)
        ps = rotation_orbit(Fraction(1, 7), GOLDEN, q)
        assert star_discrepancy(ps) + ps.error_bound <= Fraction(2, q)


def test_orbit_bound_dominates_enumeration():
    cf = synthesize_liouville(1.5, digit_budget=10 ** 4)
    for x in (Fraction(1, 7), Fraction(5, 11), Fraction(2, 13)):
        for k in (1, 2):
            ps = rotation_orbit(x, cf, cf.q(k))
            assert orbit_discrepancy_bound(x, cf, k) >= star_discrepancy(ps)
    # golden orbits move too far relative to 1/q for the order-preserving bound
    with pytest.raises(InsufficientDepth):
        orbit_discrepancy_bound(0, GOLDEN, 6)


def test_orbit_depth_check():
    shallow = expand("surd:(sqrt(5)-1)/2", 5)
    with pytest.raises(InsufficientDepth):
        rotation_orbit(0, shallow, 10 ** 6, tol=Fraction(1, 10 ** 12))


def test_koksma_exact_sawtooth():
    ps = rotation_orbit(0, GOLDEN, 21)
    rep = koksma_defect(sawtooth(), PointSet(ps.values))
    assert rep.exact and rep.passed
    assert rep.variation == 2


def test_koksma_rejects_unbounded():
    with pytest.raises(UnboundedVariation):
        koksma_defect(maryland(1), [Fraction(1, 3)])


def test_gordon_grid_delta_guard():
    with pytest.raises(DeltaTooLarge):
        gordon_grid(0, GOLDEN, 5, 0, Fraction(1, 10))
    rep = gordon_grid(0, GOLDEN, 5, 0, Fraction(1, 10), strict=False)
    assert not rep.precondition_ok
    assert len(rep.points) == GOLDEN.q(5) - 1


def test_gordon_grid_bound():
    k = 8
    q = GOLDEN.q(k)
    for s in range(q):
        rep = gordon_grid(Fraction(2, 9), GOLDEN, k, s, Fraction(1, 20 * q))
        assert rep.passed


def test_truncated_koksma_maryland():
    ps = rotation_orbit(0, GOLDEN, 34)
    rep = truncated_koksma(log_envelope(maryland(1)), 2, ps)
    assert rep.clamped_ok and rep.containment_ok
    assert rep.markov_bound > 0
