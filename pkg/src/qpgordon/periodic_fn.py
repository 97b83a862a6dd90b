"""1-periodic extended-real functions and their variation calculus.

A :class:`PeriodicFunction` carries two evaluators (vectorised float and
arbitrary precision) and, for the built-in families, a *piece structure*:
breakpoints ``0 = b_0 < b_1 < ... < b_m < 1`` with the point value
``f(b_i)`` and the one-sided limits ``f(b_i+)`` and ``f(b_{i+1}-)``.  On each
open piece the function is continuous and monotone, so

    Var f = sum_i |f(b_i+) - f(b_i)| + |f(b_{i+1}-) - f(b_i+)| + |f(b_{i+1}) - f(b_{i+1}-)|

with ``b_{m+1} = 1`` and ``f(1) = f(0)``.  Monotone post-compositions
(clamping, ``f/(1+|f|)``) act on the structure directly; ``|f|``-type maps
split pieces at zero crossings first.  Finite values are kept as
:class:`~fractions.Fraction` whenever the family parameters are rational,
so clamp additivity holds exactly.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from .errors import BadBounds, DivergentIntegral, SpecError

__all__ = [
    "Piece",
    "PeriodicFunction",
    "VariationEstimate",
    "SemiVariation",
    "ExceedanceReport",
    "QuadResult",
    "constant",
    "sawtooth",
    "cosine",
    "almost_mathieu",
    "maryland",
    "tan_monotone",
    "steps",
    "from_table",
    "random_piecewise",
    "parse_potential",
    "evaluate",
    "clamp",
    "truncate",
    "truncate_literal",
    "total_variation",
    "variation_by_refinement",
    "semi_variation",
    "log_envelope",
    "one_plus_abs",
    "compose_monotone",
    "compose_unimodal",
    "bounded_factor",
    "mean_log",
    "integrate",
    "diff_exceedance_measure",
]

INF = float("inf")
MP_DPS = 50


# --------------------------------------------------------------------------
# extended-real helpers: Fraction for exact values, mpf otherwise, float inf
# --------------------------------------------------------------------------

def _mp(v):
    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    return mpmath.mpf(v)


def _isinf(v) -> bool:
    return not isinstance(v, Fraction) and mpmath.isinf(v)


def _sub(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a - b
    if _isinf(a) or _isinf(b):
        if _isinf(a) and _isinf(b) and (a > 0) == (b > 0):
            return Fraction(0)
        return INF if (a if _isinf(a) else -b) > 0 else -INF
    with mpmath.workdps(MP_DPS):
        return _mp(a) - _mp(b)


def _absdiff(a, b):
    d = _sub(a, b)
    if isinstance(d, float):
        return INF
    return abs(d)


def _lt(a, b) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a < b
    with mpmath.workdps(MP_DPS):
        return _mp(a) < _mp(b)


def _add(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    if _isinf(a) or _isinf(b):
        return INF
    with mpmath.workdps(MP_DPS):
        return _mp(a) + _mp(b)


def _clampval(v, lo, hi):
    if lo is not None and not _lt(lo, v):
        return lo
    if hi is not None and not _lt(v, hi):
        return hi
    return v


def _to_float(v) -> float:
    if isinstance(v, Fraction):
        return v.numerator / v.denominator
    return float(v)


def _sign(v) -> int:
    if isinstance(v, Fraction):
        return (v > 0) - (v < 0)
    return int(mpmath.sign(v))


def _exact(v):
    """Canonicalise a bound: rationals become Fractions, infinities float."""
    if v is None:
        return None
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, float):
        if math.isinf(v):
            return v
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    if mpmath.isinf(v):
        return INF if v > 0 else -INF
    return v


# --------------------------------------------------------------------------
# types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Piece:
    """Monotone continuous piece ``(start, next start)``.

    ``value`` is ``f(start)``, ``right`` is ``f(start+)`` and ``left`` is the
    limit at the right end of the piece.
    """

    start: Fraction
    value: object
    right: object
    left: object


@dataclass(frozen=True)
class PeriodicFunction:
    """A 1-periodic map ``R -> [-inf, +inf)`` (``+inf`` for envelopes only).

    Parameters
    ----------
    name : str
        Family identifier with parameters.
    f_np : callable
        Vectorised float evaluator on ``[0, 1)``.
    f_mp : callable
        Arbitrary-precision evaluator on ``[0, 1)`` (mpf in, mpf out).
    pieces : tuple of Piece, optional
        Monotone structure; enables exact variation.
    singular_points : tuple of Fraction
        Points where the value or a one-sided limit is infinite.
    lipschitz : float, optional
        Global Lipschitz constant when finite (used for phase allowances).
    upper_singular : bool
        True when the function may take the value ``+inf``.
    f_q : callable, optional
        Exact evaluator ``Fraction -> Fraction`` (rational families only).
    meta : dict
        Family data; ``meta["integral"]`` is the exact mean when known.
    """

    name: str
    f_np: Callable
    f_mp: Callable
    pieces: tuple | None = None
    singular_points: tuple = ()
    lipschitz: float | None = None
    upper_singular: bool = False
    f_q: Callable | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, x):
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        return self.f_np(x)

    def at(self, x):
        """Arbitrary-precision value at ``x`` (Fraction, mpf or float)."""
        return evaluate(self, x)

    @property
    def bounded(self) -> bool:
        if self.pieces is None:
            return False
        return not any(_isinf(v) for p in self.pieces for v in (p.value, p.right, p.left))

    def sup_abs(self):
        """``sup |f|`` from the piece structure (exact for monotone pieces)."""
        if self.pieces is None:
            raise ValueError("no piece structure")
        best = Fraction(0)
        for p in self.pieces:
            for v in (p.value, p.right, p.left):
                if _isinf(v):
                    return INF
                if _lt(best, abs(v)):
                    best = abs(v)
        return best

    def kinks(self) -> list:
        """Finite absolute values where ``B -> Var [f]_B`` can change slope."""
        out = set()
        for p in self.pieces or ():
            for v in (p.value, p.right, p.left):
                if not _isinf(v):
                    out.add(abs(v) if isinstance(v, Fraction) else abs(_mp(v)))
        return sorted(out, key=_to_float)

    def with_name(self, name):
        return replace(self, name=name)


@dataclass(frozen=True)
class VariationEstimate:
    lower: object
    exact_flag: bool
    partitions_used: int

    def __float__(self):
        return _to_float(self.lower)


@dataclass(frozen=True)
class SemiVariation:
    """``sup_{B>=1} Var[f]_B / B``.

    ``value``/``maximizer`` come from the dyadic grid ``B = 1, 2, ..., B_max``;
    ``dyadic_slack_bound = 2*value`` bounds the true sup restricted to
    ``B <= B_max``.  ``exact`` is the true sup over all ``B >= 1`` when the
    piece structure is available (the ratio is monotone between kinks of
    ``B -> Var[f]_B``).
    """

    value: object
    maximizer: object
    dyadic_slack_bound: object
    exact: object = None
    exact_maximizer: object = None
    table: tuple = ()


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    shells: int = 0

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class ExceedanceReport:
    measure: float
    sigma: float
    samples: int
    bounds: dict
    margins: dict

    @property
    def passed(self) -> bool:
        return all(m >= 0 for m in self.margins.values())


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

def evaluate(f: PeriodicFunction, x):
    """``f(x mod 1)`` in arbitrary precision; ``-inf`` at singular points."""
    if hasattr(x, "value") and hasattr(x, "error_bound"):
        x = x.value
    if isinstance(x, (int, Fraction)):
        x = Fraction(x) % 1
        for s in f.singular_points:
            if x == s:
                with mpmath.workdps(MP_DPS):
                    return f.f_mp(_mp(x))
        with mpmath.workdps(MP_DPS):
            return f.f_mp(_mp(x))
    with mpmath.workdps(MP_DPS):
        x = mpmath.mpf(x)
        return f.f_mp(x - mpmath.floor(x))


# --------------------------------------------------------------------------
# built-in families
# --------------------------------------------------------------------------

def _frac(v) -> Fraction:
    return Fraction(str(v)) if isinstance(v, float) else Fraction(v)


def constant(c=0) -> PeriodicFunction:
    c = _frac(c)
    cf = float(c)
    return PeriodicFunction(
        f"const:{c}",
        lambda x: np.full(np.shape(x), cf),
        lambda x: _mp(c),
        pieces=(Piece(Fraction(0), c, c, c),),
        lipschitz=0.0,
        f_q=lambda x: c,
        meta={"integral": c},
    )


def sawtooth() -> PeriodicFunction:
    return PeriodicFunction(
        "saw",
        lambda x: np.array(x, dtype=float),
        lambda x: x,
        pieces=(Piece(Fraction(0), Fraction(0), Fraction(0), Fraction(1)),),
        f_q=lambda x: Fraction(x) % 1,
        meta={"integral": Fraction(1, 2)},
    )


def cosine(lam=1) -> PeriodicFunction:
    """``lam * cos(2 pi x)``."""
    lam = _frac(lam)
    lf = float(lam)
    return PeriodicFunction(
        f"cos:{lam}",
        lambda x: lf * np.cos(2 * np.pi * x),
        lambda x: _mp(lam) * mpmath.cos(2 * mpmath.pi * x),
        pieces=(Piece(Fraction(0), lam, lam, -lam), Piece(Fraction(1, 2), -lam, -lam, lam)),
        lipschitz=2 * math.pi * abs(lf),
        meta={"integral": Fraction(0)},
    )


def almost_mathieu(lam=1) -> PeriodicFunction:
    """Almost Mathieu potential ``2 lam cos(2 pi x)``."""
    f = cosine(2 * _frac(lam))
    return f.with_name(f"amo:{_frac(lam)}")


def _tan_np(shift):
    def f(x):
        x = np.asarray(x, dtype=float)
        y = np.tan(np.pi * (x - shift))
        return np.where(x == (0.5 + shift) % 1.0, -np.inf, y)
    return f


def maryland(lam=1) -> PeriodicFunction:
    """Maryland potential ``lam * tan(pi x)``; value ``-inf`` at ``x = 1/2``."""
    lam = _frac(lam)
    lf = float(lam)
    s = _sign(lam)
    half = Fraction(1, 2)
    base = _tan_np(0.0)

    def f_mp(x):
        if x == mpmath.mpf(1) / 2:
            return mpmath.mpf("-inf")
        return _mp(lam) * mpmath.tan(mpmath.pi * x)

    if s == 0:
        return constant(0)
    return PeriodicFunction(
        f"maryland:{lam}",
        lambda x: np.where(x == 0.5, -np.inf, lf * base(x)),
        f_mp,
        pieces=(Piece(Fraction(0), Fraction(0), Fraction(0), s * INF),
                Piece(half, -INF, -s * INF, Fraction(0))),
        singular_points=(half,),
    )


def tan_monotone(lam=1) -> PeriodicFunction:
    """``lam * tan(pi (x - 1/2))``: monotone on ``[0, 1)``, ``-inf`` at 0."""
    lam = _frac(lam)
    lf = float(lam)
    s = _sign(lam)

    def f_np(x):
        x = np.asarray(x, dtype=float)
        y = lf * np.tan(np.pi * (x - 0.5))
        return np.where(x == 0.0, -np.inf, y)

    def f_mp(x):
        if x == 0:
            return mpmath.mpf("-inf")
        return _mp(lam) * mpmath.tan(mpmath.pi * (x - mpmath.mpf(1) / 2))

    if s == 0:
        return constant(0)
    return PeriodicFunction(
        f"tanmono:{lam}",
        f_np,
        f_mp,
        pieces=(Piece(Fraction(0), -INF, -s * INF, s * INF),),
        singular_points=(Fraction(0),),
    )


def _pieces_from_table(xs, vs, kinds):
    """Build piece list from sorted breakpoints, values and piece kinds."""
    n = len(xs)
    pieces = []
    for i in range(n):
        v = vs[i]
        nxt = vs[(i + 1) % n]
        if kinds[i] == "linear":
            pieces.append(Piece(xs[i], v, v, nxt))
        else:
            pieces.append(Piece(xs[i], v, v, v))
    if xs[0] != 0:
        # the last piece wraps through 0: split it there
        last = pieces[-1]
        x_last, x_first = xs[-1], xs[0]
        if kinds[-1] == "linear":
            t = (1 - x_last) / (1 - x_last + x_first)
            v0 = last.right + t * (last.left - last.right)
        else:
            v0 = last.right
        pieces[-1] = Piece(last.start, last.value, last.right, v0)
        pieces.insert(0, Piece(Fraction(0), v0, v0, last.left))
    return tuple(pieces)


def _table_evaluators(xs, vs, kinds):
    n = len(xs)
    xs_f = np.array([float(x) for x in xs])
    # extended breakpoints so a point below xs[0] uses the wrapped last piece
    ext_x = np.concatenate([xs_f, [xs_f[0] + 1.0]])
    vs_f = np.array([float(v) for v in vs] + [float(vs[0])])
    lin = np.array([k == "linear" for k in kinds])

    def f_np(x):
        x = np.asarray(x, dtype=float)
        xx = np.where(x < xs_f[0], x + 1.0, x)
        i = np.clip(np.searchsorted(ext_x, xx, side="right") - 1, 0, n - 1)
        t = (xx - ext_x[i]) / (ext_x[i + 1] - ext_x[i])
        v = vs_f[i] + np.where(lin[i], t * (vs_f[i + 1] - vs_f[i]), 0.0)
        return v

    def f_mp(x):
        xf = Fraction(str(mpmath.nstr(x, MP_DPS)))
        if xf < xs[0]:
            xf += 1
        i = max(j for j in range(n) if xs[j] <= xf) if xf >= xs[0] else n - 1
        if kinds[i] != "linear":
            return _mp(vs[i])
        x1 = xs[i + 1] if i + 1 < n else xs[0] + 1
        t = (_mp(xf) - _mp(xs[i])) / _mp(x1 - xs[i])
        return _mp(vs[i]) + t * (_mp(vs[(i + 1) % n]) - _mp(vs[i]))

    return f_np, f_mp


def _table(name, rows):
    rows = sorted((Fraction(x) % 1, Fraction(v), k) for x, v, k in rows)
    xs = [r[0] for r in rows]
    if len(set(xs)) != len(xs):
        raise ValueError("duplicate breakpoints")
    vs = [r[1] for r in rows]
    kinds = [r[2] for r in rows]
    f_np, f_mp = _table_evaluators(xs, vs, kinds)
    lip = None
    if all(k == "linear" for k in kinds):
        n = len(xs)
        lip = max(
            abs(float(vs[(i + 1) % n] - vs[i]))
            / float((xs[i + 1] if i + 1 < n else xs[0] + 1) - xs[i])
            for i in range(n)
        )
    elif len(set(vs)) == 1:
        lip = 0.0
    n = len(xs)

    def f_q(x):
        x = Fraction(x) % 1
        if x < xs[0]:
            x += 1
        i = max(j for j in range(n) if xs[j] <= x)
        if kinds[i] != "linear":
            return vs[i]
        x1 = xs[i + 1] if i + 1 < n else xs[0] + 1
        return vs[i] + (x - xs[i]) / (x1 - xs[i]) * (vs[(i + 1) % n] - vs[i])

    integral = Fraction(0)
    for i in range(n):
        x1 = xs[i + 1] if i + 1 < n else xs[0] + 1
        v1 = vs[(i + 1) % n] if kinds[i] == "linear" else vs[i]
        integral += (x1 - xs[i]) * (vs[i] + v1) / 2
    return PeriodicFunction(name, f_np, f_mp, pieces=_pieces_from_table(xs, vs, kinds),
                            lipschitz=lip, f_q=f_q, meta={"integral": integral})


def steps(pairs: Sequence[tuple]) -> PeriodicFunction:
    """Step function equal to ``v_i`` on ``[x_i, x_{i+1})`` (cyclically)."""
    rows = [(x, v, "const") for x, v in pairs]
    return _table("steps:" + ",".join(f"({x},{v})" for x, v, _ in rows), rows)


def from_table(path_or_rows, name=None) -> PeriodicFunction:
    """Piecewise-monotone table: rows ``x, value, direction``.

    ``direction`` is ``const`` (constant on ``[x_i, x_{i+1})``) or
    ``linear`` (linear from ``v_i`` to ``v_{i+1}``, wrapping to ``v_0``).
    """
    if isinstance(path_or_rows, (str, bytes)) or hasattr(path_or_rows, "__fspath__"):
        with open(path_or_rows, newline="") as fh:
            rows = []
            for rec in csv.reader(fh):
                if not rec or rec[0].strip().startswith("#") or rec[0].strip() == "x":
                    continue
                kind = rec[2].strip() if len(rec) > 2 else "const"
                if kind not in ("const", "linear"):
                    raise SpecError(f"unknown direction {kind!r}", ",".join(rec), 0)
                rows.append((Fraction(rec[0].strip()), Fraction(rec[1].strip()), kind))
        name = name or f"table:{path_or_rows}"
    else:
        rows = list(path_or_rows)
        name = name or "table"
    return _table(name, rows)


def random_piecewise(rng: np.random.Generator, n_pieces: int = 5, denom: int = 64,
                     scale: int = 8) -> PeriodicFunction:
    """Random rational piecewise-linear/constant function (test fixture)."""
    xs = sorted(set(int(v) for v in rng.integers(0, denom, size=n_pieces)))
    rows = []
    for x in xs:
        v = Fraction(int(rng.integers(-scale * 4, scale * 4 + 1)), 4)
        rows.append((Fraction(x, denom), v, "linear" if rng.random() < 0.5 else "const"))
    return from_table(rows, name="random")


def parse_potential(text: str) -> PeriodicFunction:
    """Parse the potential grammar.

    ``const:<c>``, ``saw``, ``cos:[lambda=]<l>``, ``amo:[lambda=]<l>``,
    ``maryland:[lambda=]<l>``, ``tanmono:[lambda=]<l>``,
    ``steps:[(x0,v0),(x1,v1),...]``, ``table:<path>``.
    """
    kind, _, body = text.partition(":")
    kind = kind.strip()
    off = len(kind) + 1

    def number(b, key="lambda"):
        b = b.strip()
        if b.startswith(key + "="):
            b = b[len(key) + 1:]
        try:
            return Fraction(b)
        except (ValueError, ZeroDivisionError):
            raise SpecError(f"expected a number for {kind}", text, off) from None

    if kind == "saw":
        return sawtooth()
    if kind == "const":
        return constant(number(body or "0", "c"))
    if kind in ("cos", "amo", "maryland", "tanmono"):
        lam = number(body or "1")
        return {"cos": cosine, "amo": almost_mathieu, "maryland": maryland,
                "tanmono": tan_monotone}[kind](lam)
    if kind == "steps":
        pairs = re.findall(r"\(\s*([^,()]+)\s*,\s*([^,()]+)\s*\)", body)
        if not pairs:
            raise SpecError("expected steps:[(x0,v0),...]", text, off)
        try:
            return steps([(Fraction(a.strip()), Fraction(b.strip())) for a, b in pairs])
        except ValueError as exc:
            raise SpecError(str(exc), text, off) from None
    if kind == "table":
        return from_table(body.strip())
    raise SpecError(f"unknown potential kind {kind!r}", text, 0)


# --------------------------------------------------------------------------
# transforms
# --------------------------------------------------------------------------

def _map_monotone(f: PeriodicFunction, phi, phi_np, phi_mp, name, **kw) -> PeriodicFunction:
    kw.setdefault("f_q", None)
    kw.setdefault("meta", {})
    pieces = None
    if f.pieces is not None:
        pieces = tuple(Piece(p.start, phi(p.value), phi(p.right), phi(p.left)) for p in f.pieces)
    return replace(
        f,
        name=name,
        f_np=lambda x: phi_np(f.f_np(x)),
        f_mp=lambda x: phi_mp(f.f_mp(x)),
        pieces=pieces,
        **kw,
    )


def clamp(f: PeriodicFunction, B1=-INF, B2=INF) -> PeriodicFunction:
    """``[f]_{B1,B2}``: pointwise median of ``B1``, ``f`` and ``B2``."""
    B1, B2 = _exact(B1), _exact(B2)
    if not _lt(B1, B2):
        raise BadBounds(f"need B1 < B2, got {B1} >= {B2}")
    lo = None if _isinf(B1) else B1
    hi = None if _isinf(B2) else B2
    lo_f = -np.inf if lo is None else _to_float(lo)
    hi_f = np.inf if hi is None else _to_float(hi)

    def phi_mp(v):
        if lo is not None and v <= _mp(lo):
            return _mp(lo)
        if hi is not None and v >= _mp(hi):
            return _mp(hi)
        return v

    finite = lo is not None and hi is not None
    lip = f.lipschitz
    f_q = None
    if f.f_q is not None:
        f_q = lambda x: _clampval(f.f_q(x), lo, hi)  # noqa: E731
    return _map_monotone(
        f,
        lambda v: _clampval(v, lo, hi),
        lambda y: np.clip(y, lo_f, hi_f),
        phi_mp,
        f"[{f.name}]_{{{B1},{B2}}}",
        singular_points=() if finite else f.singular_points,
        upper_singular=f.upper_singular and hi is None,
        lipschitz=lip,
        f_q=f_q,
    )


def truncate(f: PeriodicFunction, B) -> PeriodicFunction:
    """``[f]_B = [f]_{-B,B}``."""
    B = _exact(B)
    return clamp(f, -B, B)


def truncate_literal(f: PeriodicFunction, B) -> PeriodicFunction:
    """Literal piecewise rule: ``f`` where ``|f| <= B`` and ``B`` elsewhere.

    Unlike :func:`truncate`, values below ``-B`` are sent to ``+B``.  No
    piece structure is kept because the map is not monotone.
    """
    Bf = _to_float(_exact(B))
    Bm = _mp(_exact(B))

    def f_np(x):
        y = f.f_np(x)
        return np.where(np.abs(y) <= Bf, y, Bf)

    def f_mp(x):
        y = f.f_mp(x)
        return y if abs(y) <= Bm else Bm

    return replace(f, name=f"literal[{f.name}]_{B}", f_np=f_np, f_mp=f_mp, pieces=None,
                   singular_points=(), lipschitz=None, f_q=None, meta={})


def _find_zero(f: PeriodicFunction, a: Fraction, b: Fraction, increasing: bool) -> Fraction:
    lo, hi = _mp(a), _mp(b)
    with mpmath.workdps(MP_DPS):
        for _ in range(120):
            mid = (lo + hi) / 2
            v = f.f_mp(mid)
            if (v < 0) == increasing:
                lo = mid
            else:
                hi = mid
    return Fraction(str(mpmath.nstr((lo + hi) / 2, 40)))


def _split_at_zeros(f: PeriodicFunction) -> tuple:
    out = []
    pieces = f.pieces
    for i, p in enumerate(pieces):
        end = pieces[i + 1].start if i + 1 < len(pieces) else Fraction(1)
        sr = (1 if p.right > 0 else -1) if _isinf(p.right) else _sign(p.right)
        sl = (1 if p.left > 0 else -1) if _isinf(p.left) else _sign(p.left)
        if sr * sl < 0:
            z = _find_zero(f, p.start, end, increasing=sr < 0)
            out.append(Piece(p.start, p.value, p.right, Fraction(0)))
            out.append(Piece(z, Fraction(0), Fraction(0), p.left))
        else:
            out.append(p)
    return tuple(out)


def _map_unimodal(f: PeriodicFunction, psi, psi_np, psi_mp, name, upper) -> PeriodicFunction:
    pieces = None
    if f.pieces is not None:
        pieces = tuple(Piece(p.start, psi(p.value), psi(p.right), psi(p.left))
                       for p in _split_at_zeros(f))
    return replace(
        f,
        name=name,
        f_np=lambda x: psi_np(f.f_np(x)),
        f_mp=lambda x: psi_mp(f.f_mp(x)),
        pieces=pieces,
        upper_singular=upper,
        lipschitz=None,
        f_q=None,
        meta={},
    )


def compose_monotone(f: PeriodicFunction, phi, phi_np, phi_mp, name) -> PeriodicFunction:
    """``phi o f`` for a monotone ``phi`` (structure mapped pointwise)."""
    return _map_monotone(f, phi, phi_np, phi_mp, name, singular_points=f.singular_points,
                         lipschitz=None)


def compose_unimodal(f: PeriodicFunction, psi, psi_np, psi_mp, name, upper=False
                     ) -> PeriodicFunction:
    """``psi o f`` for ``psi`` monotone on each side of 0.

    Pieces crossing zero are split at the crossing (located by bisection)
    before ``psi`` is applied to values and limits.
    """
    return _map_unimodal(f, psi, psi_np, psi_mp, name, upper)


def one_plus_abs(f: PeriodicFunction) -> PeriodicFunction:
    """``F = 1 + |f|`` (``+inf`` where ``f = -inf``)."""

    def psi(v):
        if _isinf(v):
            return INF
        return 1 + abs(v)

    return _map_unimodal(
        f, psi, lambda y: 1.0 + np.abs(y), lambda y: 1 + abs(y), f"1+|{f.name}|",
        upper=bool(f.singular_points) or f.upper_singular,
    )


def log_envelope(f: PeriodicFunction) -> PeriodicFunction:
    """``log(1 + |f|)``; ``f = -inf`` maps to ``+inf`` (upper-singular)."""

    def psi(v):
        if _isinf(v):
            return INF
        if v == 0:
            return Fraction(0)
        with mpmath.workdps(MP_DPS):
            return mpmath.log1p(abs(_mp(v)))

    return _map_unimodal(
        f, psi, lambda y: np.log1p(np.abs(y)), lambda y: mpmath.log1p(abs(y)),
        f"log(1+|{f.name}|)", upper=bool(f.singular_points) or f.upper_singular,
    )


def bounded_factor(f: PeriodicFunction) -> PeriodicFunction:
    """``f / (1 + |f|)`` with value ``-1`` at singular points."""

    def phi(v):
        if _isinf(v):
            return Fraction(1) if v > 0 else Fraction(-1)
        if isinstance(v, Fraction):
            return v / (1 + abs(v))
        with mpmath.workdps(MP_DPS):
            return v / (1 + abs(v))

    def phi_np(y):
        with np.errstate(invalid="ignore"):
            r = y / (1.0 + np.abs(y))
        return np.where(np.isinf(y), np.sign(y), r)

    def phi_mp(y):
        if mpmath.isinf(y):
            return mpmath.mpf(mpmath.sign(y))
        return y / (1 + abs(y))

    return _map_monotone(f, phi, phi_np, phi_mp, f"{f.name}/(1+|{f.name}|)",
                         singular_points=(), upper_singular=False, lipschitz=None)


# --------------------------------------------------------------------------
# variation
# --------------------------------------------------------------------------

def _structural_variation(pieces) -> object:
    total = Fraction(0)
    m = len(pieces)
    for i, p in enumerate(pieces):
        nxt = pieces[(i + 1) % m].value
        for a, b in ((p.value, p.right), (p.right, p.left), (p.left, nxt)):
            total = _add(total, _absdiff(a, b))
            if _isinf(total):
                return INF
    return total


def variation_by_refinement(f: PeriodicFunction, n_points: int) -> float:
    """``sum |f(x_{j+1}) - f(x_j)|`` over the uniform grid ``j/n`` (with ``f(1)=f(0)``)."""
    x = np.arange(n_points + 1, dtype=float) / n_points
    x[-1] = 0.0
    y = f.f_np(x)
    with np.errstate(invalid="ignore"):
        d = np.abs(np.diff(y))
    d = np.where(np.isnan(d), 0.0, d)
    return float(np.sum(d))


def total_variation(f: PeriodicFunction, max_refinement: int = 2 ** 20) -> VariationEstimate:
    """Total variation over one period, ``Var f`` with ``x_n = 1`` included.

    Exact (``exact_flag=True``) when the piece structure is known; otherwise
    the largest uniform-dyadic-partition sum up to ``max_refinement`` points,
    which is a lower bound.
    """
    if f.pieces is not None:
        return VariationEstimate(_structural_variation(f.pieces), True, len(f.pieces))
    best, n, used = 0.0, 2, 0
    while n <= max_refinement:
        best = max(best, variation_by_refinement(f, n))
        used += 1
        n *= 2
    return VariationEstimate(best, False, used)


def _var_clamped(f: PeriodicFunction, lo, hi):
    return _structural_variation(clamp(f, lo, hi).pieces)


def semi_variation(f: PeriodicFunction, B_max=2 ** 10) -> SemiVariation:
    """``V(f) = sup_{B>=1} Var[f]_B / B`` (dyadic proxy plus exact sup)."""
    table = []
    B = 1
    best, best_B = None, None
    while B <= B_max:
        v = total_variation(truncate(f, B)).lower
        r = v / B if isinstance(v, Fraction) else _mp(v) / B
        table.append((B, v, r))
        if best is None or _lt(best, r):
            best, best_B = r, B
        B *= 2
    exact = exact_B = None
    if f.pieces is not None:
        cands = [Fraction(1)] + [k for k in f.kinks() if not _lt(k, 1)]
        exact, exact_B = None, None
        for c in cands:
            c = _exact(c)
            r = _var_clamped(f, -c, c)
            r = r / c if isinstance(r, Fraction) and isinstance(c, Fraction) else _mp(r) / _mp(c)
            if exact is None or _lt(exact, r):
                exact, exact_B = r, c
        # slope of B -> Var[f]_B beyond the last kink
        top = max([Fraction(1)] + [_exact(c) for c in cands], key=_to_float)
        K = Fraction(math.ceil(_to_float(top)) + 1)
        v1, v2 = _var_clamped(f, -K, K), _var_clamped(f, -2 * K, 2 * K)
        slope = _sub(v2, v1)
        slope = slope / K if isinstance(slope, Fraction) else _mp(slope) / _mp(K)
        if _lt(exact, slope):
            exact, exact_B = slope, INF
    return SemiVariation(best, best_B, 2 * best, exact, exact_B, tuple(table))


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

_GL = {n: np.polynomial.legendre.leggauss(n) for n in (10, 20)}


def _gl(g, a, b, n):
    t, w = _GL[n]
    x = 0.5 * (b - a) * t + 0.5 * (a + b)
    return 0.5 * (b - a) * float(np.dot(w, g(x)))


def _adaptive(g, a, b, tol, depth=0):
    coarse, fine = _gl(g, a, b, 10), _gl(g, a, b, 20)
    err = abs(fine - coarse)
    if err <= tol or depth > 40 or b - a < 1e-14:
        return fine, err
    m = 0.5 * (a + b)
    v1, e1 = _adaptive(g, a, m, tol / 2, depth + 1)
    v2, e2 = _adaptive(g, m, b, tol / 2, depth + 1)
    return v1 + v2, e1 + e2


def _gl_mp(g, a, b, n):
    t, w = _GL[n]
    total = 0.0
    for ti, wi in zip(t, w):
        x = (b - a) * mpmath.mpf(float(ti)) / 2 + (a + b) / 2
        total += float(wi) * float(g(x))
    return float((b - a) / 2) * total


def _shells(g_mp, s, width, direction, tol, max_shells=200):
    """Geometric shells ``[s + w/2^{j+1}, s + w/2^j]`` towards a singular point."""
    total, err = 0.0, 0.0
    prev = None
    grow = 0
    for j in range(max_shells):
        lo = width / mpmath.mpf(2) ** (j + 1)
        hi = width / mpmath.mpf(2) ** j
        a, b = (s + lo, s + hi) if direction > 0 else (s - hi, s - lo)
        c20, c10 = _gl_mp(g_mp, a, b, 20), _gl_mp(g_mp, a, b, 10)
        total += c20
        err += abs(c20 - c10)
        if abs(c20) < tol / 10 and j > 2:
            return total, err + abs(c20), j + 1
        if prev is not None and abs(c20) >= abs(prev) * 0.999:
            grow += 1
            if grow > 40:
                break
        else:
            grow = 0
        prev = c20
    raise DivergentIntegral("shell contributions near a singular point do not shrink")


def integrate(f: PeriodicFunction, tol: float = 1e-10, transform=None) -> QuadResult:
    """Adaptive Gauss-Legendre integral of ``transform(f)`` over one period.

    Pieces adjacent to singular points are integrated with geometric shells.
    """
    g_np = f.f_np if transform is None else (lambda x: transform(f.f_np(x)))
    g_mp = f.f_mp if transform is None else (lambda x: transform(f.f_mp(x)))
    sing = set(f.singular_points) | {Fraction(1) for s in f.singular_points if s == 0}
    cuts = sorted({Fraction(0), Fraction(1)} | {p.start for p in (f.pieces or ())} | sing)
    total, err, shells = 0.0, 0.0, 0
    with mpmath.workdps(MP_DPS):
        for a, b in zip(cuts[:-1], cuts[1:]):
            sa, sb = a in sing, b in sing
            if not (sa or sb):
                v, e = _adaptive(g_np, float(a), float(b), tol / len(cuts))
                total += v
                err += e
                continue
            m = (a + b) / 2
            if sa:
                v, e, n = _shells(g_mp, _mp(a), _mp(m - a), +1, tol / len(cuts))
                total, err, shells = total + v, err + e, shells + n
            else:
                v, e = _adaptive(g_np, float(a), float(m), tol / len(cuts))
                total, err = total + v, err + e
            if sb:
                v, e, n = _shells(g_mp, _mp(b), _mp(b - m), -1, tol / len(cuts))
                total, err, shells = total + v, err + e, shells + n
            else:
                v, e = _adaptive(g_np, float(m), float(b), tol / len(cuts))
                total, err = total + v, err + e
    return QuadResult(total, err, shells)


def mean_log(f: PeriodicFunction, tol: float = 1e-10) -> QuadResult:
    """``int_0^1 log(1 + |f(x)|) dx`` with shells at singular points.

    Raises
    ------
    DivergentIntegral
        When shell contributions stop shrinking.
    """

    def tr(y):
        if isinstance(y, np.ndarray):
            return np.log1p(np.abs(y))
        return mpmath.log1p(abs(y))

    return integrate(f, tol, tr)


def _level_distance(h_mp, s, direction, extent, B):
    """Largest ``d <= extent`` with ``h(s + direction*d') > B`` for all ``d' < d``.

    Assumes ``h`` increases towards the singular point ``s``.
    """
    if h_mp(s + direction * extent) > B:
        return extent
    lo, hi = mpmath.mpf(0), extent
    # bracket in log scale first: d* can be far below float resolution
    while h_mp(s + direction * hi / 2) <= B:
        hi = hi / 2
        if hi < mpmath.mpf(2) ** (-mpmath.mp.prec + 8):
            return mpmath.mpf(0)
    lo = hi / 2
    for _ in range(60):
        mid = (lo + hi) / 2
        if h_mp(s + direction * mid) > B:
            lo = mid
        else:
            hi = mid
    return lo


def _markov_tail(f: PeriodicFunction, B: float, tol=1e-9) -> float:
    """``int_{log(1+|f|) > B} log(1+|f|)``.

    Near each singular point the level set ``{h > B}`` is located by
    bisection in arbitrary precision and integrated with shells; the rest
    of the circle is integrated in floats.  Beyond ``B = 700`` the tail is
    below float range and 0.0 is returned.
    """
    B = float(B)
    if f.bounded:
        if math.log1p(_to_float(f.sup_abs())) <= B:
            return 0.0
    if B > 700:
        return 0.0

    def g_np(x):
        h = np.log1p(np.abs(f.f_np(x)))
        return np.where(h > B, h, 0.0)

    def h_mp(x):
        return mpmath.log1p(abs(f.f_mp(x - mpmath.floor(x))))

    sing = sorted(set(f.singular_points))
    total = 0.0
    excl = []
    bits = 80 + int(2 * B / math.log(2))
    with mpmath.workprec(bits):
        for i, s in enumerate(sing):
            prev = sing[i - 1] - (1 if i == 0 else 0)
            nxt = sing[(i + 1) % len(sing)] + (1 if i == len(sing) - 1 else 0)
            for direction, gap in ((+1, nxt - s), (-1, s - prev)):
                ext = _mp(gap) / 2
                d = _level_distance(h_mp, _mp(s), direction, ext, B)
                if d > 0:
                    v, _, _ = _shells(h_mp, _mp(s), d, direction, tol * float(d) * (B + 1))
                    total += v
                w = max(float(d), 1e-9)
                excl.append((float(s) - w, float(s)) if direction < 0 else (float(s), float(s) + w))
    # float part over the complement of the excluded neighbourhoods (mod 1)
    segs = []
    for a, b in excl:
        for sh in (-1.0, 0.0, 1.0):
            segs.append((a + sh, b + sh))
    segs.sort()
    cur = 0.0
    cuts = sorted({0.0, 1.0} | {float(p.start) for p in (f.pieces or ())})
    for a, b in segs + [(1.0, 1.0)]:
        lo, hi = cur, min(max(a, cur), 1.0)
        if hi > lo:
            inner = [c for c in cuts if lo < c < hi]
            pts = [lo] + inner + [hi]
            for u, v in zip(pts[:-1], pts[1:]):
                total += _adaptive(g_np, u, v, tol / 8)[0]
        cur = max(cur, min(b, 1.0))
    return total


# --------------------------------------------------------------------------
# finite differences
# --------------------------------------------------------------------------

def _is_monotone_on_period(f: PeriodicFunction) -> bool:
    if f.pieces is None:
        return False
    seq = []
    for p in f.pieces:
        seq.extend([p.value, p.right, p.left])
    inc = all(not _lt(b, a) for a, b in zip(seq, seq[1:]))
    dec = all(not _lt(a, b) for a, b in zip(seq, seq[1:]))
    return inc or dec


def diff_exceedance_measure(f: PeriodicFunction, delta: float, A: float, B_opt: float | None = None,
                            samples: int = 10 ** 6, seed: int | None = 0) -> ExceedanceReport:
    """Estimate ``|{x : |f(x+delta) - f(x)| > A delta}|`` and the applicable bounds.

    Bounds reported: ``monotone`` (monotone ``f`` with ``|f| <= B``),
    ``bounded_variation`` and ``semi_bounded`` (truncation
    at ``e^{B_opt}`` plus a Markov tail).  Each margin is
    ``bound - (measure - 3 sigma)``; the estimate uses ``samples`` uniform
    random points (``seed=None`` gives a midpoint grid).
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0,1)")
    if seed is None:
        x = (np.arange(samples) + 0.5) / samples
    else:
        x = np.random.default_rng(seed).random(samples)
    with np.errstate(invalid="ignore"):
        d = np.abs(f(x + delta) - f(x))
    hit = np.where(np.isnan(d), False, d > A * delta)
    p = float(np.mean(hit))
    sigma = math.sqrt(max(p * (1 - p), 1.0 / samples) / samples)
    bounds = {}
    var = total_variation(f) if f.pieces is not None else None
    if var is not None and not _isinf(var.lower) and _is_monotone_on_period(f):
        B = _to_float(f.sup_abs())
        bounds["monotone"] = 2 * delta + 6 * B / A
    if var is not None and not _isinf(var.lower):
        bounds["bounded_variation"] = 4 * delta + 6 * _to_float(var.lower) / A
    if B_opt is not None and f.pieces is not None:
        eB = math.exp(B_opt)
        vt = _to_float(total_variation(truncate(f, Fraction(eB))).lower)
        tail = _markov_tail(f, B_opt)
        bounds["semi_bounded"] = 4 * delta + 6 * eB * vt / A + 2.0 / B_opt * tail
    margins = {k: b - (p - 3 * sigma) for k, b in bounds.items()}
    return ExceedanceReport(p, sigma, samples, bounds, margins)
