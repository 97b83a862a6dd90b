"""Finite boxes: eigenvalues, eigenvectors, decay fits and the regime scan."""
from fractions import Fraction
import math
import warnings

import numpy as np
import pytest

from qpgordon.contfrac import expand, synthesize_liouville
from qpgordon.errors import DegeneracyWarning, NotAnEigenvalue, SingularPhase
from qpgordon.periodic_fn import almost_mathieu, constant, maryland, random_piecewise
from qpgordon.spectrum import (BoxOperator, build_box, decay_fit, eigenvalues, eigenvector,
                               gordon_candidates, regime_beta, regime_scan)

GOLDEN = expand("surd:(sqrt(5)-1)/2", 60)


@pytest.mark.parametrize("N", [1, 10, 50])
def test_free_box_closed_form(N):
    ev = eigenvalues(build_box(constant(0), 0, GOLDEN, N))
    j = np.arange(1, 2 * N + 2)
    assert np.allclose(ev, np.sort(2 * np.cos(j * np.pi / (2 * N + 2))), atol=1e-10)


def test_matches_dense_solver():
    rng = np.random.default_rng(0)
    op = build_box(random_piecewise(rng), Fraction(1, 3), GOLDEN, 30)
    assert np.allclose(eigenvalues(op), np.linalg.eigvalsh(op.dense()), atol=1e-10)


def test_interval_count_exact():
    op = build_box(almost_mathieu(1), Fraction(1, 7), GOLDEN, 40)
    all_ev = eigenvalues(op)
    part = eigenvalues(op, (-1.0, 0.5))
    assert len(part) == int(np.sum((all_ev >= -1.0) & (all_ev < 0.5)))


def test_from_diagonal_validation():
    with pytest.raises(ValueError):
        BoxOperator.from_diagonal([0.0, 1.0])
    with pytest.raises(ValueError):
        BoxOperator.from_diagonal([0.0, np.inf, 1.0])


def test_singular_site_raises():
    with pytest.raises(SingularPhase):
        build_box(maryland(1), Fraction(1, 2), GOLDEN, 3)


def test_eigenvector_residual_and_rayleigh():
    op = build_box(almost_mathieu(2), Fraction(3, 20), GOLDEN, 100)
    ev = eigenvalues(op)
    pair = eigenvector(op, ev[len(ev) // 2])
    assert pair.residual <= 1e-8 * (2 + np.max(np.abs(op.diagonal)))
    assert np.linalg.norm(pair.vector) == pytest.approx(1.0)
    assert pair.energy == pytest.approx(ev[len(ev) // 2], abs=1e-10)


def test_not_an_eigenvalue():
    op = build_box(constant(0), 0, GOLDEN, 5)
    with pytest.raises(NotAnEigenvalue):
        eigenvector(op, 0.123, max_iter=5)


def test_degeneracy_warning():
    # a high barrier splits the box into two identical halves (splitting ~1e-12)
    d = np.array([0.0, 0.0, 1e12, 0.0, 0.0])
    op = BoxOperator.from_diagonal(d)
    ev = eigenvalues(op)
    with pytest.warns(DegeneracyWarning):
        eigenvector(op, ev[0])


def test_decay_fit_synthetic():
    n = np.arange(-200, 201)
    psi = np.exp(-0.7 * np.abs(n))
    rate, r2 = decay_fit(psi)
    assert rate == pytest.approx(0.7, rel=1e-10)
    assert r2 == pytest.approx(1.0)


def test_localized_decay_matches_lyapunov():
    # supercritical almost Mathieu: eigenvectors decay at about L = log 2
    op = build_box(almost_mathieu(2), Fraction(3, 20), GOLDEN, 300)
    ev = eigenvalues(op)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneracyWarning)
        pair = eigenvector(op, ev[len(ev) // 2])
    assert pair.decay_rate == pytest.approx(math.log(2), abs=0.1)


def test_regime_beta_skips_small_q():
    cf = synthesize_liouville(1.5, digit_budget=10 ** 4)
    assert regime_beta(cf) == pytest.approx(1.5, abs=0.01)
    assert regime_beta(GOLDEN) < 0.4


def test_regime_scan_labels():
    cf = synthesize_liouville(1.5, digit_budget=10 ** 4)
    rows = regime_scan(almost_mathieu(2), Fraction(3, 20), cf, [0.0, 1.0], 60, n_lyap=256,
                       phases=16)
    assert {r.label for r in rows} == {"GORDON"}
    assert gordon_candidates(rows)
    rows = regime_scan(almost_mathieu(2), Fraction(3, 20), GOLDEN, [0.0], 60, n_lyap=256,
                       phases=16, jobs=2)
    assert rows[0].label == "LOCALIZED-SIDE"
    rows = regime_scan(constant(0), 0, GOLDEN, [0.5], 20, n_lyap=2048, phases=8)
    assert rows[0].label == "SUBCRITICAL"
