"""Periodic functions: families, variation calculus, quadrature, tails."""
from fractions import Fraction
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpgordon.errors import SpecError
from qpgordon.periodic_fn import (_markov_tail, almost_mathieu, bounded_factor, clamp, constant,
                                  cosine, diff_exceedance_measure, evaluate, from_table,
                                  integrate, log_envelope, maryland, mean_log, one_plus_abs,
                                  parse_potential, random_piecewise, sawtooth, semi_variation,
                                  steps, tan_monotone, total_variation, truncate,
                                  variation_by_refinement)


@pytest.mark.parametrize("text, name", [
    ("saw", "saw"), ("const:3/2", "const:3/2"), ("cos:2", "cos:2"), ("amo:lambda=2", "amo:2"),
    ("maryland:1", "maryland:1"), ("tanmono:lambda=1/2", "tanmono:1/2"),
])
def test_parse_names(text, name):
    assert parse_potential(text).name == name


@pytest.mark.parametrize("text", ["wobble", "cos:x", "steps:[]"])
def test_parse_errors(text):
    with pytest.raises(SpecError):
        parse_potential(text)


def test_family_values():
    x = np.linspace(0.01, 0.99, 8)
    assert np.allclose(cosine(2)(x), 2 * np.cos(2 * np.pi * x))
    assert np.allclose(almost_mathieu(2)(x), 4 * np.cos(2 * np.pi * x))
    assert np.allclose(maryland(1)(x), np.tan(np.pi * x))
    assert np.allclose(sawtooth()(x), x)


def test_evaluate_matches_float():
    f = maryland(1)
    for x in (Fraction(1, 7), Fraction(3, 10)):
        assert abs(float(evaluate(f, x)) - math.tan(math.pi * float(x))) < 1e-12


@pytest.mark.parametrize("f, exact", [
    (sawtooth(), Fraction(2)),
    (cosine(1), 4),
    (constant(5), 0),
    (steps([(Fraction(0), Fraction(1)), (Fraction(1, 2), Fraction(-1))]), 4),
])
def test_total_variation_exact(f, exact):
    v = total_variation(f)
    assert v.exact_flag
    assert abs(float(v.lower) - float(exact)) < 1e-25
    # refinement sums are lower bounds converging to the exact value
    assert variation_by_refinement(f, 2 ** 12) <= float(exact) + 1e-9
    assert variation_by_refinement(f, 2 ** 12) >= float(exact) - 1e-2


def test_maryland_infinite_variation():
    assert math.isinf(float(total_variation(maryland(1)).lower))
    assert float(total_variation(clamp(maryland(1), -3, 3)).lower) == pytest.approx(12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.lists(st.integers(-30, 30), min_size=3, max_size=3, unique=True))
def test_clamp_additivity(seed, bs):
    f = random_piecewise(np.random.default_rng(seed))
    B1, B2, B3 = sorted(Fraction(b, 4) for b in bs)
    v = lambda lo, hi: total_variation(clamp(f, lo, hi)).lower  # noqa: E731
    assert v(B1, B3) == v(B1, B2) + v(B2, B3)


def test_semi_variation_maryland():
    sv = semi_variation(maryland(1))
    # Var [tan]_B = 4B for every B >= 1
    assert float(sv.exact) == pytest.approx(4.0)
    assert float(sv.value) == pytest.approx(4.0)


def test_log_variation_counterexample():
    # 2 cos(2 pi x) at B = 1: Var [log(1+|f|)]_{0,1} exceeds 2 log 2 * 1 * V(1+|f|)
    f = cosine(2)
    V = float(semi_variation(one_plus_abs(f)).exact)
    lhs = float(total_variation(clamp(log_envelope(f), 0, 1)).lower)
    assert V == pytest.approx(8 / 3)
    assert lhs == pytest.approx(4.0)
    assert lhs > 2 * math.log(2) * V


def test_bounded_factor_range():
    g = bounded_factor(maryland(1))
    x = np.linspace(0, 1, 1001, endpoint=False)
    y = g(x)
    assert np.all(np.abs(y) <= 1)
    assert np.allclose(y[1:10], np.tan(np.pi * x[1:10]) / (1 + np.abs(np.tan(np.pi * x[1:10]))))


@pytest.mark.parametrize("f, exact", [
    (sawtooth(), 0.5),
    (cosine(3), 0.0),
    (constant(Fraction(2, 3)), 2 / 3),
])
def test_integrate(f, exact):
    assert integrate(f).value == pytest.approx(exact, abs=1e-10)


def test_mean_log_maryland_closed_form():
    # int log(1 + |tan(pi x)|) dx = pi/4 + log(2)/2 - ... ; oracle by mpmath quad
    with mpmath.workdps(30):
        oracle = 2 * mpmath.quad(lambda x: mpmath.log1p(mpmath.tan(mpmath.pi * x)), [0, 0.25, 0.5])
    assert mean_log(maryland(1)).value == pytest.approx(float(oracle), abs=1e-9)


def test_mean_log_cos_oracle():
    with mpmath.workdps(30):
        oracle = mpmath.quad(lambda x: mpmath.log1p(abs(2 * mpmath.cos(2 * mpmath.pi * x))),
                             [0, 0.25, 0.5, 0.75, 1])
    assert mean_log(cosine(2)).value == pytest.approx(float(oracle), abs=1e-9)


def _tail_oracle_maryland(B):
    # |{x : log(1+|tan pi x|) > B}| = 1 - 2 atan(e^B - 1)/pi and the integral of h over it
    t = math.exp(B) - 1
    with mpmath.workdps(60):
        a = mpmath.atan(t) / mpmath.pi
        return float(2 * mpmath.quad(lambda x: mpmath.log1p(mpmath.tan(mpmath.pi * x)), [a, 0.5]))


@pytest.mark.parametrize("B", [0.5, 2.0, 8.0, 30.0])
def test_markov_tail_against_closed_form(B):
    got = _markov_tail(maryland(1), B)
    assert got == pytest.approx(_tail_oracle_maryland(B), rel=1e-6)


def test_markov_tail_bounded_is_zero():
    assert _markov_tail(cosine(1), 2.0) == 0.0


def test_truncate_is_symmetric_clamp():
    f = maryland(1)
    x = np.linspace(0.01, 0.99, 98)
    assert np.allclose(truncate(f, 2)(x), np.clip(np.tan(np.pi * x), -2, 2))


def test_from_table_roundtrip(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("x,value,kind\n0,0,linear\n1/2,1,linear\n")
    f = from_table(p)
    assert float(total_variation(f).lower) == 2
    assert f(np.array([0.25]))[0] == pytest.approx(0.5)


def test_exceedance_sawtooth():
    rep = diff_exceedance_measure(sawtooth(), 0.01, 50.0, samples=10 ** 5)
    # only the jump contributes: measure = delta
    assert rep.measure == pytest.approx(0.01, abs=5 * rep.sigma + 1e-3)
    assert rep.passed and "monotone" in rep.bounds


def test_tan_monotone_single_branch():
    f = tan_monotone(1)
    x = np.linspace(0.05, 0.95, 50)
    assert np.all(np.diff(f(x)) > 0)
