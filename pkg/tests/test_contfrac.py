"""Continued fractions: grammar, certified expansion, convergent identities."""
from fractions import Fraction
import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpgordon.contfrac import (ContinuedFraction, beta_estimate, choose_convergent, convergents,
                               expand, nearest_integer_distance, parse_frequency, phase,
                               synthesize_liouville)
from qpgordon.errors import (InsufficientDepth, PrecisionExhausted, RationalInput, SpecError)


def _mp_quotients(x, depth):
    # oracle: Gauss map in 400-digit floating point
    out = []
    with mpmath.workdps(400):
        x = mpmath.mpf(x)
        for _ in range(depth):
            y = 1 / x
            a = int(mpmath.floor(y))
            out.append(a)
            x = y - a
    return out


@given(st.lists(st.integers(1, 10 ** 6), min_size=1, max_size=50))
def test_determinant_identity(qs):
    conv = convergents(qs)
    for k in range(1, len(conv)):
        (p0, q0), (p1, q1) = conv[k - 1], conv[k]
        assert p1 * q0 - p0 * q1 == (-1) ** (k - 1)


@given(st.fractions(min_value=Fraction(1, 10 ** 6), max_value=Fraction(999999, 10 ** 6)))
def test_rational_roundtrip(x):
    cf = expand(x, depth=200, allow_rational=True)
    assert cf.terminated
    assert cf.stand_in() == x


def test_rational_raises_without_flag():
    with pytest.raises(RationalInput) as exc:
        expand("rat:3/7", 10)
    assert exc.value.prefix is not None


@pytest.mark.parametrize("spec, value", [
    ("surd:(sqrt(5)-1)/2", (math.sqrt(5) - 1) / 2),
    ("surd:sqrt(2)-1", math.sqrt(2) - 1),
    ("surd:(sqrt(7)-2)/3", (math.sqrt(7) - 2) / 3),
])
def test_surd_against_mp_oracle(spec, value):
    with mpmath.workdps(400):
        a = {"surd:(sqrt(5)-1)/2": (mpmath.sqrt(5) - 1) / 2,
             "surd:sqrt(2)-1": mpmath.sqrt(2) - 1,
             "surd:(sqrt(7)-2)/3": (mpmath.sqrt(7) - 2) / 3}[spec]
    cf = expand(spec, 60)
    assert list(cf.quotients) == _mp_quotients(a, 60)
    lo, hi = cf.alpha_interval()
    assert float(lo) <= value <= float(hi) + 1e-16


def test_decimal_precision_exhausted():
    with pytest.raises(PrecisionExhausted) as exc:
        expand("dec:0.6180339887", 40)
    prefix = exc.value.prefix
    assert 0 < prefix.depth < 40
    assert prefix.quotients == (1,) * prefix.depth


def test_decimal_radius_override():
    cf = expand("dec:0.5,radius=0", 5, allow_rational=True)
    assert cf.terminated and cf.stand_in() == Fraction(1, 2)


@pytest.mark.parametrize("text, col", [
    ("surd:(sqrt(5)-1/2", None), ("dec:0.1.2", 4), ("golden", 0), ("cf:[1,0,2]", 3),
    ("foo:1", 0),
])
def test_grammar_errors(text, col):
    with pytest.raises(SpecError) as exc:
        expand(text, 5)
    if col is not None:
        assert exc.value.position == col
    assert "^" in str(exc.value)


def test_cf_spec_and_depth():
    cf = expand("cf:[2, 3, 4]")
    assert cf.quotients == (2, 3, 4)
    with pytest.raises(InsufficientDepth):
        expand("cf:[2,3]", 5)


def test_liouville_growth():
    cf = synthesize_liouville(1.5, digit_budget=10 ** 4)
    assert cf.quotients[0] == 3
    with mpmath.workdps(100):
        for k in range(1, cf.depth):
            assert cf.q(k + 1) >= mpmath.exp(mpmath.mpf(1.5) * cf.q(k))
    assert cf.note.startswith("stopped")
    assert cf.next_quotient_lower == 10 ** 10 ** 4
    assert "ContinuedFraction" in repr(cf)
    est = beta_estimate(cf)
    assert est.beta_hat >= 1.5


def test_liouville_nonpositive_warns():
    with pytest.warns(UserWarning):
        cf = synthesize_liouville(0.0, depth=4)
    assert cf.quotients == (1, 1, 1, 1)


def test_beta_golden_decays():
    est = beta_estimate(expand("surd:(sqrt(5)-1)/2", 30))
    vals = [v for _, v in est.per_k_values]
    assert vals[-1] < 0.001
    assert est.beta_hat == max(vals)


def test_phase_error_and_value():
    cf = expand("surd:(sqrt(5)-1)/2", 40)
    pt = phase(Fraction(1, 3), cf, 1000)
    with mpmath.workdps(60):
        exact = (mpmath.mpf(1) / 3 + 1000 * (mpmath.sqrt(5) - 1) / 2) % 1
        got = mpmath.mpf(pt.value.numerator) / pt.value.denominator
        assert abs(got - exact) <= mpmath.mpf(pt.error_bound.numerator) / pt.error_bound.denominator
    with pytest.raises(InsufficientDepth):
        phase(0, cf, 10 ** 20, tol=Fraction(1, 10 ** 12))


def test_choose_convergent():
    cf = expand("surd:(sqrt(5)-1)/2", 40)
    K = choose_convergent(cf, 1000, Fraction(1, 10 ** 9))
    assert 1000 * cf.approximation_error(K) <= Fraction(1, 10 ** 9)
    assert K == 0 or 1000 * cf.approximation_error(K - 1) > Fraction(1, 10 ** 9)


def test_nearest_integer_distance_enclosure():
    cf = expand("surd:(sqrt(5)-1)/2", 40)
    with mpmath.workdps(60):
        a = (mpmath.sqrt(5) - 1) / 2
        for k in range(1, 20):
            lo, hi, sign, point = nearest_integer_distance(cf, k)
            d = cf.q(k) * a - cf.p(k)
            assert mpmath.mpf(lo.numerator) / lo.denominator <= abs(d)
            assert abs(d) <= mpmath.mpf(hi.numerator) / hi.denominator
            assert mpmath.sign(d) == sign
            # point comes from the depth-40 stand-in
            tol = cf.q(k) * cf.approximation_error()
            assert abs(abs(d) - mpmath.mpf(point.numerator) / point.denominator) <= \
                mpmath.mpf(tol.numerator) / tol.denominator
    with pytest.raises(InsufficientDepth):
        nearest_integer_distance(cf, 40)


def test_invalid_quotients():
    with pytest.raises(ValueError):
        ContinuedFraction((1, 0))


@settings(max_examples=30)
@given(st.integers(2, 40))
def test_parse_frequency_kinds(n):
    assert parse_frequency(f"rat:1/{n}").kind == "rat"
    assert parse_frequency(f"cf:[{n},1]").payload == (n, 1)
