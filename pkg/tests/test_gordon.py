"""Gordon-lemma machinery: blocks, telescoping identities, gaps, verdicts."""
from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpgordon.contfrac import expand, synthesize_liouville
from qpgordon.errors import RangeTooSmall
from qpgordon.gordon import (HYPOTHESIS_BETA, INCONCLUSIVE_SMALL_Q, GordonConfig,
                             PotentialSequence, gordon_gap, no_decay_witness, potential_sequence,
                             repetition_defect, sl2_margins, summability_check,
                             telescopic_margin, telescoping_identity_check, transfer_block,
                             verdict)
from qpgordon.periodic_fn import almost_mathieu, constant, maryland

GOLDEN = expand("surd:(sqrt(5)-1)/2", 80)


def _seq(values, n_min):
    return PotentialSequence.from_values(values, n_min=n_min)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 24), st.floats(-4, 4), st.integers(0, 2 ** 31))
def test_identities_random(q, E, seed):
    rng = np.random.default_rng(seed)
    V = _seq(rng.uniform(-2, 2, size=3 * q), -q)
    assert telescoping_identity_check(V, E, q).max_relative < 1e-10


def test_identities_periodic_potential_vanish():
    q = 7
    base = np.random.default_rng(1).uniform(-1, 1, q)
    V = _seq(np.tile(base, 3), -q)
    res = telescoping_identity_check(V, 0.3, q)
    assert res.residual_minus < 1e-12 and res.residual_plus < 1e-12
    fwd, bwd = repetition_defect(V, q)
    assert fwd == 0 and bwd == 0


def test_transfer_block_inverse_and_det():
    V = _seq(np.random.default_rng(2).uniform(-2, 2, 30), -10)
    M = transfer_block(V, 0.5, 12, -4).to_array()
    Minv = transfer_block(V, 0.5, -4, 12).to_array()
    assert np.allclose(M @ Minv, np.eye(2), atol=1e-9)
    assert transfer_block(V, 0.5, 12, -4).det() == pytest.approx(1.0, abs=1e-9)


def test_transfer_block_single_step():
    V = _seq([0.25, -1.0], 0)
    M = transfer_block(V, 2.0, 1, 0).to_array()
    assert np.allclose(M, [[1.75, -1.0], [1.0, 0.0]])


def test_range_guard():
    V = _seq([0.0] * 5, 0)
    with pytest.raises(RangeTooSmall):
        telescoping_identity_check(V, 0.0, 3)


def test_telescopic_margin_free_hyperbolic():
    # V = 0, E = 3: blocks grow like e^{L s}, so the margin tends to L with O(1/q) bias
    q = 256
    V = _seq(np.zeros(3 * q), -q)
    lp, lm = telescopic_margin(V, 3.0, q)
    L = math.log((3 + math.sqrt(5)) / 2)
    assert lp == pytest.approx(L, abs=0.02)
    assert lm == pytest.approx(L, abs=0.02)


def test_sl2_margins_nonnegative():
    rng = np.random.default_rng(3)
    a, b, c = rng.normal(size=(3, 500))
    a = np.where(np.abs(a) < 0.1, 0.1, a)
    d = (1 + b * c) / a
    mats = np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)
    m1, m2 = sl2_margins(mats, 24)
    assert m1.min() >= -1e-9 and m2.min() >= -1e-9


def test_potential_sequence_precision_and_errors():
    V = potential_sequence(almost_mathieu(2), Fraction(3, 20), GOLDEN, -10, 20, precision=128)
    assert V.covers(-10, 20)
    direct = 4 * math.cos(2 * math.pi * (0.15 + 7 * float(GOLDEN.stand_in())))
    assert float(V(7)) == pytest.approx(direct, abs=1e-12)
    assert max(V.errors) < 1e-15


def test_gap_and_witness_on_liouville():
    cf = synthesize_liouville(1.5, digit_budget=10 ** 4)
    f = almost_mathieu(2)
    q = cf.q(2)
    V = potential_sequence(f, Fraction(3, 20), cf, -q, 2 * q, precision=1500)
    fwd, bwd = repetition_defect(V, q)
    assert max(fwd, bwd) <= math.exp(-1.4 * q)
    gap = gordon_gap(V, 0.1, q, 1.5, 0.75, precision=1500)
    assert gap.gap1 <= gap.threshold
    w = no_decay_witness(V, 0.1, q, precision=1500)
    assert w.minimum >= 0.5


def test_verdict_golden_hypothesis_fails():
    rep = verdict(almost_mathieu(2), Fraction(3, 20), GOLDEN, 0.0, GordonConfig(q_list=(3, 5)))
    assert rep.verdict == HYPOTHESIS_BETA
    assert rep.exit_code == 2
    d = rep.to_dict()
    assert d["records"][0]["q"] == 3 and "passed" in d["records"][0]


def test_verdict_small_q_inconclusive():
    cf = synthesize_liouville(1.5, digit_budget=10 ** 4)
    rep = verdict(almost_mathieu(2), Fraction(3, 20), cf, 0.1, GordonConfig(q_list=(3, 94)))
    assert rep.verdict == INCONCLUSIVE_SMALL_Q
    assert rep.exit_code == 3
    big = rep.records[-1]
    assert big.q == 94 and big.passed
    assert rep.q_min_passing == 94


def test_summability_maryland():
    rows = summability_check(maryland(1), 0.1, GOLDEN, j_max=10)
    assert len(rows) == 10
    assert all(r.partial_sum >= 0 for r in rows)
    sums = [r.partial_sum for r in rows]
    assert sums == sorted(sums)


def test_from_values_constant_seq():
    V = PotentialSequence.from_values([1, 1, 1], n_min=-1)
    assert V(-1) == 1 and not V.covers(-2, 0)
    _ = constant(0)
