"""Exact continued-fraction arithmetic for rotation numbers.

Frequencies are always normalised into (0, 1) (``a_0 = 0``).  Convergents
are indexed so that ``(p_0, q_0) = (0, 1)`` and ``(p_1, q_1) = (1, a_1)``.

Every orbit point ``x + n*alpha`` used elsewhere in the package is computed
from a rational stand-in ``p_K/q_K`` together with the certified error
``|n| / (q_K q_{K+1})``.  When ``q_{K+1}`` lies beyond the computed depth it
is replaced by the lower bound ``a_{K+1}^{low} q_K + q_{K-1}``, where
``a_{K+1}^{low}`` is :attr:`ContinuedFraction.next_quotient_lower` (1 unless
the construction of the frequency tells us more).
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .errors import (
    InsufficientDepth,
    PrecisionExhausted,
    RationalInput,
    SpecError,
)

__all__ = [
    "ContinuedFraction",
    "CirclePoint",
    "BetaEstimate",
    "convergents",
    "expand",
    "parse_frequency",
    "beta_estimate",
    "synthesize_liouville",
    "phase",
    "nearest_integer_distance",
    "choose_convergent",
]


def convergents(quotients_or_cf) -> list[tuple[int, int]]:
    """Return ``[(p_0, q_0), ..., (p_K, q_K)]`` for quotients ``a_1..a_K``."""
    quotients = getattr(quotients_or_cf, "quotients", quotients_or_cf)
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    out = [(p, q)]
    for a in quotients:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        out.append((p, q))
    return out


@dataclass(frozen=True)
class ContinuedFraction:
    """Partial quotients ``a_1..a_K`` of a frequency in (0, 1).

    Attributes
    ----------
    quotients : tuple of int
        Positive partial quotients; ``a_0 = 0`` is implicit.
    source : str
        How the frequency was specified.
    terminated : bool
        True when the frequency is the rational ``p_K/q_K`` itself.
    next_quotient_lower : int
        Certified lower bound for the first quotient beyond ``quotients``.
    note : str
        Free-form remark (e.g. why a synthesis stopped early).
    """

    quotients: tuple
    source: str = "cf"
    terminated: bool = False
    next_quotient_lower: int = field(default=1, repr=False)
    note: str = ""
    convergents: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        quotients = tuple(int(a) for a in self.quotients)
        if any(a < 1 for a in quotients):
            raise ValueError("partial quotients must be positive integers")
        object.__setattr__(self, "quotients", quotients)
        conv = tuple(convergents(quotients))
        for k in range(1, len(conv)):
            (p, q), (pp, qp) = conv[k], conv[k - 1]
            if p * qp - pp * q != (-1) ** (k - 1):
                raise AssertionError(f"determinant identity broken at k={k}")
        object.__setattr__(self, "convergents", conv)

    @property
    def depth(self) -> int:
        return len(self.quotients)

    def p(self, k: int) -> int:
        return self.convergents[k][0]

    def q(self, k: int) -> int:
        return self.convergents[k][1]

    @property
    def denominators(self) -> list[int]:
        return [q for _, q in self.convergents]

    def q_next_lower(self, k: int) -> int:
        """``q_{k+1}`` if known, else its certified lower bound."""
        if k < self.depth:
            return self.q(k + 1)
        if k > self.depth:
            raise InsufficientDepth(f"q_{k} not available (depth {self.depth})")
        q_prev = self.q(k - 1) if k >= 1 else 0
        return self.next_quotient_lower * self.q(k) + q_prev

    def stand_in(self, k: int | None = None) -> Fraction:
        k = self.depth if k is None else k
        p, q = self.convergents[k]
        return Fraction(p, q)

    def approximation_error(self, k: int | None = None) -> Fraction:
        """Upper bound for ``|alpha - p_k/q_k|``."""
        k = self.depth if k is None else k
        if self.terminated and k == self.depth:
            return Fraction(0)
        return Fraction(1, self.q(k) * self.q_next_lower(k))

    def alpha_interval(self) -> tuple[Fraction, Fraction]:
        """Rational enclosure of alpha using the sign pattern of convergents."""
        x = self.stand_in()
        err = self.approximation_error()
        if err == 0:
            return x, x
        # alpha - p_K/q_K has sign (-1)^K
        return (x, x + err) if self.depth % 2 == 0 else (x - err, x)

    def __float__(self):
        return float(self.stand_in())

    def extend(self, more: Sequence[int]) -> "ContinuedFraction":
        return ContinuedFraction(self.quotients + tuple(more), source=self.source)


@dataclass(frozen=True)
class CirclePoint:
    """A point of the circle R/Z as an exact rational plus an error radius."""

    value: Fraction
    error_bound: Fraction = Fraction(0)

    def __post_init__(self):
        if not (0 <= self.value < 1):
            raise ValueError(f"circle point {self.value} outside [0,1)")
        if not (0 <= self.error_bound < Fraction(1, 4)):
            raise ValueError("error bound must lie in [0, 1/4)")

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class BetaEstimate:
    """Finite-depth proxy for ``limsup log(q_{k+1}) / q_k``.

    ``per_k_values`` pairs each index ``k >= k_min`` with
    ``log(q_{k+1}) / q_k``; ``beta_hat`` is their maximum.  Nothing here
    certifies the limsup.
    """

    per_k_values: tuple
    beta_hat: float
    k_min: int

    def value_at(self, k: int) -> float:
        for kk, v in self.per_k_values:
            if kk == k:
                return v
        raise KeyError(k)


# --------------------------------------------------------------------------
# expansion
# --------------------------------------------------------------------------

def _expand_rational(x: Fraction, depth: int):
    a0 = math.floor(x)
    x -= a0
    quotients = []
    while len(quotients) < depth:
        if x == 0:
            return quotients, True
        y = 1 / x
        a = math.floor(y)
        quotients.append(a)
        x = y - a
    return quotients, x == 0


def _expand_interval(lo: Fraction, hi: Fraction, depth: int):
    """Quotients shared by every number in ``[lo, hi]``."""
    a0 = math.floor(lo)
    if math.floor(hi) != a0:
        return [], False
    lo, hi = lo - a0, hi - a0
    quotients = []
    while len(quotients) < depth:
        if lo <= 0:
            return quotients, False
        ylo, yhi = 1 / hi, 1 / lo
        a = math.floor(ylo)
        if math.floor(yhi) != a:
            return quotients, False
        quotients.append(a)
        lo, hi = ylo - a, yhi - a
    return quotients, True


def _surd_floor(P: int, D: int, Q: int, r: int) -> int:
    # floor((P + sqrt D)/Q) for non-square D, r = isqrt(D)
    if Q > 0:
        return (P + r) // Q
    return -((P + r) // -Q) - 1


def _expand_surd(a: int, b: int, d: int, c: int, depth: int):
    """Exact expansion of ``(a + b sqrt d)/c`` (d not a perfect square)."""
    sigma = 1 if b > 0 else -1
    P, D, Q = a * sigma, b * b * d, c * sigma
    P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
    r = math.isqrt(D)
    a0 = _surd_floor(P, D, Q, r)
    P -= a0 * Q
    # x = (P + sqrt D)/Q in (0,1); the next complete quotient is 1/x
    quotients = []
    # 1/x = Q/(P + sqrt D) = (sqrt D - P) Q / (D - P^2)
    P, Q = -P, (D - P * P) // Q
    while len(quotients) < depth:
        ak = _surd_floor(P, D, Q, r)
        quotients.append(ak)
        P = ak * Q - P
        Q = (D - P * P) // Q
    return quotients


_SURD_TOKEN = re.compile(r"\s*(?:(\d+)|(sqrt)|([()+\-*/]))")


def _parse_surd(text: str, offset: int, full: str):
    """Parse ``(a + b*sqrt(d))/c``-style input into integers (a, b, d, c)."""
    tokens = []
    pos = 0
    while pos < len(text):
        m = _SURD_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise SpecError("unexpected character in surd", full, offset + pos)
        tok = m.group(1) or m.group(2) or m.group(3)
        tokens.append((tok, offset + m.start(m.lastindex)))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    tokens.append(("$", offset + len(text)))
    i = 0

    def peek():
        return tokens[i][0]

    def take(expected=None):
        nonlocal i
        tok, where = tokens[i]
        if expected is not None and tok != expected:
            raise SpecError(f"expected {expected!r}", full, where)
        i += 1
        return tok, where

    def integer():
        tok, where = take()
        if not tok.isdigit():
            raise SpecError("expected integer", full, where)
        return int(tok)

    state = {"a": 0, "b": 0, "d": None}

    def term(sign):
        if peek() == "sqrt":
            coef = 1
        else:
            coef = integer()
            if peek() != "*":
                state["a"] += sign * coef
                return
            take("*")
        take("sqrt")
        take("(")
        _, where = tokens[i]
        d = integer()
        take(")")
        if state["d"] not in (None, d):
            raise SpecError("only one square root allowed", full, where)
        state["d"] = d
        state["b"] += sign * coef

    def expr():
        sign = 1
        if peek() in "+-":
            sign = -1 if take()[0] == "-" else 1
        term(sign)
        while peek() in ("+", "-"):
            sign = -1 if take()[0] == "-" else 1
            term(sign)

    if peek() == "(":
        take("(")
        expr()
        take(")")
    else:
        expr()
    c = 1
    if peek() == "/":
        take("/")
        c = integer()
        if c == 0:
            raise SpecError("division by zero", full, tokens[i - 1][1])
    tok, where = tokens[i]
    if tok != "$":
        raise SpecError("trailing input", full, where)
    return state["a"], state["b"], state["d"] or 0, c


def _parse_kv(body: str, offset: int, full: str) -> dict:
    out = {}
    pos = 0
    for part in body.split(","):
        if "=" not in part:
            raise SpecError("expected key=value", full, offset + pos)
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
        pos += len(part) + 1
    return out


@dataclass(frozen=True)
class _FrequencySpec:
    kind: str
    payload: object
    text: str


def parse_frequency(text: str) -> _FrequencySpec:
    """Parse the frequency grammar.

    ``dec:<digits>[,radius=<r>]``, ``surd:(a+b*sqrt(d))/c``,
    ``cf:[a1,a2,...]``, ``liouville:beta=<x>,depth=<k>,budget=<digits>[,a1=<a>]``
    and ``rat:<p>/<q>``.
    """
    if ":" not in text:
        raise SpecError("missing '<kind>:' prefix", text, 0)
    kind, body = text.split(":", 1)
    off = len(kind) + 1
    kind = kind.strip()
    if kind == "dec":
        digits, _, rest = body.partition(",")
        m = re.fullmatch(r"\s*([+-]?\d*)(?:\.(\d*))?\s*", digits)
        if not m or not (m.group(1) or m.group(2)):
            raise SpecError("malformed decimal", text, off)
        frac_digits = m.group(2) or ""
        value = Fraction(digits.strip())
        radius = Fraction(5, 10 ** (len(frac_digits) + 1))
        if rest:
            kv = _parse_kv(rest, off + len(digits) + 1, text)
            if "radius" in kv:
                radius = Fraction(kv["radius"])
        return _FrequencySpec("dec", (value, radius), text)
    if kind == "surd":
        return _FrequencySpec("surd", _parse_surd(body, off, text), text)
    if kind == "cf":
        m = re.fullmatch(r"\s*\[([\d,\s]*)\]\s*", body)
        if not m:
            raise SpecError("expected cf:[a1,a2,...]", text, off)
        items = [s for s in m.group(1).split(",") if s.strip()]
        quots = [int(s) for s in items]
        if not quots or any(a < 1 for a in quots):
            raise SpecError("quotients must be positive", text, off)
        return _FrequencySpec("cf", tuple(quots), text)
    if kind == "liouville":
        kv = _parse_kv(body, off, text)
        try:
            args = dict(
                beta_target=float(kv["beta"]),
                depth=int(kv.get("depth", 8)),
                digit_budget=int(kv.get("budget", 10_000)),
                a1=int(kv.get("a1", 3)),
            )
        except (KeyError, ValueError) as exc:
            raise SpecError(f"bad liouville spec ({exc})", text, off) from None
        return _FrequencySpec("liouville", args, text)
    if kind == "rat":
        try:
            return _FrequencySpec("rat", Fraction(body.strip()), text)
        except (ValueError, ZeroDivisionError):
            raise SpecError("malformed rational", text, off) from None
    raise SpecError(f"unknown frequency kind {kind!r}", text, 0)


def expand(alpha_spec, depth: int | None = None, *, allow_rational: bool = False
           ) -> ContinuedFraction:
    """Certified continued-fraction expansion of a frequency.

    Parameters
    ----------
    alpha_spec : str, Fraction or ContinuedFraction
        Frequency description (see :func:`parse_frequency`).  A bare
        :class:`~fractions.Fraction` is treated as exact rational input.
    depth : int, optional
        Number of quotients requested.  Defaults to 30, or to the full list
        for ``cf:`` and to the synthesis depth for ``liouville:``.
    allow_rational : bool
        Return a ``terminated`` expansion instead of raising
        :class:`RationalInput`.

    Raises
    ------
    PrecisionExhausted
        The decimal radius straddles a quotient boundary before ``depth``.
    RationalInput
        The expansion terminates.
    """
    if isinstance(alpha_spec, ContinuedFraction):
        if depth is None or depth == alpha_spec.depth:
            return alpha_spec
        if depth > alpha_spec.depth:
            raise InsufficientDepth(f"only {alpha_spec.depth} quotients known")
        return ContinuedFraction(alpha_spec.quotients[:depth], source=alpha_spec.source)
    if isinstance(alpha_spec, (Fraction, int)):
        spec = _FrequencySpec("rat", Fraction(alpha_spec), f"rat:{alpha_spec}")
    else:
        spec = parse_frequency(str(alpha_spec))

    if spec.kind == "liouville":
        args = dict(spec.payload)
        if depth is not None:
            args["depth"] = depth
        return synthesize_liouville(**args)
    if spec.kind == "cf":
        quots = spec.payload
        if depth is None:
            depth = len(quots)
        if depth > len(quots):
            raise InsufficientDepth(f"only {len(quots)} quotients given")
        return ContinuedFraction(quots[:depth], source=spec.text)
    depth = 30 if depth is None else depth
    if spec.kind == "surd":
        a, b, d, c = spec.payload
        r = math.isqrt(d) if d > 0 else 0
        if b == 0 or d == 0 or r * r == d:
            x = Fraction(a + b * r, c)
            return _finish_rational(x, depth, spec.text, allow_rational)
        quots = _expand_surd(a, b, d, c, depth)
        return ContinuedFraction(quots, source=spec.text)
    if spec.kind == "rat":
        return _finish_rational(spec.payload, depth, spec.text, allow_rational)
    value, radius = spec.payload
    if radius == 0:
        return _finish_rational(value, depth, spec.text, allow_rational)
    quots, complete = _expand_interval(value - radius, value + radius, depth)
    if not complete:
        prefix = ContinuedFraction(quots, source=spec.text)
        raise PrecisionExhausted(
            f"input radius {radius} certifies only {len(quots)} of {depth} quotients",
            prefix,
        )
    return ContinuedFraction(quots, source=spec.text)


def _finish_rational(x: Fraction, depth, text, allow_rational):
    quots, terminated = _expand_rational(x, depth)
    cf = ContinuedFraction(quots, source=text, terminated=terminated)
    if terminated and not allow_rational:
        raise RationalInput(f"{text} is rational: expansion stops after {len(quots)} quotients", cf)
    return cf


# --------------------------------------------------------------------------
# Liouvilleness
# --------------------------------------------------------------------------

def beta_estimate(cf: ContinuedFraction, k_min: int = 1) -> BetaEstimate:
    """Per-index values ``log(q_{k+1})/q_k`` for ``k_min <= k < K``.

    A finite-depth stand-in for the limsup defining the Liouville exponent;
    it is a heuristic, not a bound in either direction.
    """
    if cf.depth < k_min + 1:
        raise InsufficientDepth(
            f"need convergents up to q_{k_min + 1}, have depth {cf.depth}"
        )
    values = tuple(
        (k, math.log(cf.q(k + 1)) / cf.q(k)) for k in range(k_min, cf.depth)
    )
    return BetaEstimate(values, max(v for _, v in values), k_min)


def _digit_count(n: int) -> int:
    return len(str(n)) if n < 10 ** 4000 else int(math.log10(n)) + 1


def synthesize_liouville(beta_target: float, depth: int = 8, digit_budget: int = 10_000,
                         a1: int = 3) -> ContinuedFraction:
    """Build a frequency with ``log(q_{k+1})/q_k`` just above ``beta_target``.

    Uses ``a_{k+1} = ceil(exp(beta q_k) / q_k)`` so that
    ``q_{k+1} >= exp(beta q_k)``.  Synthesis stops once the next quotient
    would carry more than ``digit_budget`` decimal digits; the stop is
    recorded in ``note`` and in ``next_quotient_lower = 10**digit_budget``,
    which is a valid lower bound for the quotient the rule would produce.
    """
    if beta_target <= 0:
        warnings.warn("beta_target <= 0 needs no synthesis; returning all-ones quotients",
                      stacklevel=2)
        return ContinuedFraction((1,) * depth, source=f"liouville:beta={beta_target}")
    source = f"liouville:beta={beta_target},depth={depth},budget={digit_budget},a1={a1}"
    quotients = [a1]
    q_prev, q = 1, a1
    note = ""
    lower = 1
    while len(quotients) < depth:
        # decimal digits of exp(beta q)/q
        est = beta_target * q / math.log(10) - math.log10(q)
        if est > digit_budget + 2:
            note = f"stopped at depth {len(quotients)}: next quotient has ~{est:.3g} digits"
            lower = 10 ** digit_budget
            break
        with mpmath.workdps(int(est) + 30):
            a = int(mpmath.ceil(mpmath.exp(mpmath.mpf(beta_target) * q) / q))
        if _digit_count(a) > digit_budget:
            note = f"stopped at depth {len(quotients)}: next quotient has {_digit_count(a)} digits"
            lower = 10 ** digit_budget
            break
        quotients.append(a)
        q_prev, q = q, a * q + q_prev
    return ContinuedFraction(quotients, source=source, next_quotient_lower=lower, note=note)


# --------------------------------------------------------------------------
# circle rotation
# --------------------------------------------------------------------------

def choose_convergent(cf: ContinuedFraction, n_max: int, tol, max_denominator: int | None = None
                      ) -> int:
    """Smallest index K whose stand-in error ``n_max/(q_K q_{K+1})`` is within tol.

    With ``max_denominator`` the search is restricted to ``q_K <= max_denominator``
    and the deepest admissible K is returned if none meets tol.
    """
    tol = Fraction(tol)
    best = None
    for k in range(cf.depth + 1):
        if max_denominator is not None and cf.q(k) > max_denominator:
            break
        best = k
        if n_max * cf.approximation_error(k) <= tol:
            return k
    if best is None:
        raise InsufficientDepth("no admissible convergent")
    return best


def phase(x0, cf: ContinuedFraction, n: int, tol=Fraction(1, 10 ** 12), k: int | None = None
          ) -> CirclePoint:
    """Certified orbit point ``x0 + n*alpha (mod 1)``.

    The value uses the deepest convergent (or ``k``) as stand-in for alpha;
    ``error_bound = |n| |alpha - p_k/q_k|``.
    """
    x0 = Fraction(x0)
    k = cf.depth if k is None else k
    err = abs(n) * cf.approximation_error(k)
    if err > Fraction(tol):
        raise InsufficientDepth(
            f"phase error {float(err):.3g} exceeds tol {float(tol):.3g} at n={n}"
        )
    value = (x0 + n * cf.stand_in(k)) % 1
    return CirclePoint(value, err)


def nearest_integer_distance(cf: ContinuedFraction, k: int):
    """Enclosure of ``||q_k alpha||`` and its sign.

    Returns ``(lo, hi, sign, point)`` with ``lo = 1/(q_{k+1}+q_k)``,
    ``hi = 1/q_{k+1}``, ``sign = (-1)^k`` (the sign of ``q_k alpha - p_k``) and
    ``point`` an exact value from the deepest stand-in (``None`` when
    ``k+1`` is the deepest index).
    """
    if k + 1 > cf.depth:
        raise InsufficientDepth(f"need q_{k + 1}; depth is {cf.depth}")
    q_next = cf.q(k + 1)
    lo = Fraction(1, q_next + cf.q(k))
    hi = Fraction(1, q_next)
    point = None
    if cf.depth > k + 1 or cf.terminated:
        point = abs(cf.q(k) * cf.stand_in() - cf.p(k))
    return lo, hi, (-1) ** k, point
