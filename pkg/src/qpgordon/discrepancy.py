"""Star discrepancy, Koksma checks and punctured Gordon grids.

All discrepancies are computed exactly in rational arithmetic from the
sorted-points formula

    D*_n = max_i max(i/n - x_(i), x_(i) - (i-1)/n).

Orbit points come from rational stand-ins for alpha (see
:mod:`qpgordon.contfrac`); moving every point by at most ``eps`` changes
``D*`` by at most ``eps``, so certified comparisons add the phase error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .contfrac import ContinuedFraction, CirclePoint
from .errors import DeltaTooLarge, EmptySet, InsufficientDepth, UnboundedVariation
from .periodic_fn import (
    PeriodicFunction,
    _isinf,
    _to_float,
    integrate,
    total_variation,
    truncate,
)

__all__ = [
    "PointSet",
    "star_discrepancy",
    "star_discrepancy_float",
    "star_discrepancy_bruteforce",
    "rotation_orbit",
    "orbit_discrepancy_bound",
    "KoksmaReport",
    "koksma_defect",
    "TruncatedKoksmaReport",
    "truncated_koksma",
    "GridReport",
    "gordon_grid",
]


@dataclass(frozen=True)
class PointSet:
    """Finite point set in ``[0, 1)`` with a common error radius.

    ``values`` are exact rationals; every true point lies within
    ``error_bound`` of its value (circle metric).
    """

    values: tuple
    error_bound: Fraction = Fraction(0)
    provenance: str = ""

    def __post_init__(self):
        vals = tuple(Fraction(v.value if isinstance(v, CirclePoint) else v) for v in self.values)
        if any(not (0 <= v < 1) for v in vals):
            raise ValueError("points must lie in [0, 1)")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_points(cls, points: Iterable, provenance: str = "") -> "PointSet":
        pts = list(points)
        err = max((p.error_bound for p in pts if isinstance(p, CirclePoint)), default=Fraction(0))
        return cls(tuple(pts), err, provenance)

    def __len__(self):
        return len(self.values)

    def as_float(self) -> np.ndarray:
        return np.array([v.numerator / v.denominator for v in self.values])


def _values(ps) -> list:
    if isinstance(ps, PointSet):
        return list(ps.values)
    return [Fraction(v.value if isinstance(v, CirclePoint) else v) for v in ps]


def star_discrepancy(ps) -> Fraction:
    """Exact ``D*_n`` of a point set (order-independent).

    Raises
    ------
    EmptySet
        If the set is empty.
    """
    xs = sorted(_values(ps))
    n = len(xs)
    if n == 0:
        raise EmptySet("star discrepancy of an empty set")
    best = Fraction(0)
    for i, x in enumerate(xs, start=1):
        best = max(best, Fraction(i, n) - x, x - Fraction(i - 1, n))
    return best


def star_discrepancy_float(x) -> float:
    """Float ``D*_n`` through the compiled kernel (for scans)."""
    x = np.sort(np.mod(np.asarray(x, dtype=float), 1.0))
    if len(x) == 0:
        raise EmptySet("star discrepancy of an empty set")
    return kernels.star_discrepancy_sorted(x)


def star_discrepancy_bruteforce(ps) -> Fraction:
    """Oracle: ``sup_t |#{x < t}/n - t|`` over the critical values of ``t``.

    The supremum is attained or approached at ``t = x_i`` (from the left,
    i.e. the count excludes ``x_i``), as ``t -> x_i+``, and at ``t = 1``.
    """
    xs = _values(ps)
    n = len(xs)
    if n == 0:
        raise EmptySet("star discrepancy of an empty set")
    best = Fraction(0)
    ts = set(xs) | {Fraction(1)}
    for t in ts:
        below = sum(1 for x in xs if x < t)
        at_or_below = sum(1 for x in xs if x <= t)
        if t > 0:
            best = max(best, abs(Fraction(below, n) - t))
        if t < 1:
            best = max(best, abs(Fraction(at_or_below, n) - t))
    return best


def rotation_orbit(x, cf: ContinuedFraction, n: int, stride: int = 1, tol=Fraction(1, 10 ** 12),
                   start: int = 0) -> PointSet:
    """Orbit ``x + (start + j*stride) alpha mod 1``, ``j = 0..n-1``.

    Uses the deepest convergent as stand-in; each point's error is at most
    ``|index| |alpha - p_K/q_K|``.

    Raises
    ------
    InsufficientDepth
        When the largest index exceeds ``tol``.
    """
    x = Fraction(x) % 1
    K = cf.depth
    p, q = cf.convergents[K]
    n_max = max(abs(start), abs(start + (n - 1) * stride))
    err = n_max * cf.approximation_error(K)
    if err > Fraction(tol):
        raise InsufficientDepth(f"orbit phase error {float(err):.3g} exceeds tol {float(tol):.3g}")
    # x + i p/q = (x*q + i*p)/q, reduced exactly
    base = x * q
    vals = [((base + (start + j * stride) * p) / q) % 1 for j in range(n)]
    return PointSet(tuple(vals), err, f"orbit x={x} n={n} stride={stride} K={K}")


def orbit_discrepancy_bound(x, cf: ContinuedFraction, k: int) -> Fraction:
    """Certified upper bound for ``D*`` of ``{x + j alpha}_{j<q_k}`` without enumeration.

    With ``alpha = p_k/q_k + theta`` the points are ``c + r/q + eps_r`` with
    ``c = x mod 1/q`` and ``eps = j theta``, ``0 <= j < q``.  If the
    perturbation keeps the cyclic order and never wraps, the sorted formula
    gives ``D* = max(1/q - c - min eps, c + max eps)``.  ``|theta|`` is
    bounded by the convergent error and its sign is ``(-1)^k``.
    """
    x = Fraction(x) % 1
    q = cf.q(k)
    theta_max = cf.approximation_error(k)
    spread = (q - 1) * theta_max
    c = x % Fraction(1, q)
    if 2 * spread >= Fraction(1, q):
        raise InsufficientDepth("perturbation may reorder the orbit")
    if k % 2 == 0:  # theta >= 0
        if c + Fraction(q - 1, q) + spread >= 1:
            raise InsufficientDepth("orbit may wrap through 0")
        return max(Fraction(1, q) - c, c + spread)
    if c - spread < 0:
        raise InsufficientDepth("orbit may wrap through 0")
    return max(Fraction(1, q) - c + spread, c)


# --------------------------------------------------------------------------
# Koksma
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class KoksmaReport:
    defect: object
    bound: object
    variation: object
    discrepancy: Fraction
    allowance: float
    exact: bool

    @property
    def margin(self):
        if self.exact:
            return self.bound - self.defect
        return _to_float(self.bound) + self.allowance - _to_float(self.defect)

    @property
    def passed(self) -> bool:
        return self.margin >= 0


def koksma_defect(f: PeriodicFunction, ps, integral=None) -> KoksmaReport:
    """``|int f - mean_ps f|`` against ``Var(f) D*(ps)``.

    Exact rational arithmetic is used when ``f`` has an exact evaluator and
    an exact integral; otherwise float means.  The allowance
    ``Lip(f) * error_bound`` covers the stand-in phase error (0 for exact
    points).

    Raises
    ------
    UnboundedVariation
        If ``Var f`` is infinite or unknown.
    """
    if not isinstance(ps, PointSet):
        ps = PointSet(tuple(ps))
    var = total_variation(f)
    if not var.exact_flag or _isinf(var.lower):
        raise UnboundedVariation(f"Var {f.name} is not finite/certified")
    D = star_discrepancy(ps)
    if integral is None:
        integral = f.meta.get("integral")
        if integral is None:
            integral = integrate(f).value
    exact = (f.f_q is not None and isinstance(integral, Fraction) and isinstance(var.lower, Fraction)
             and ps.error_bound == 0)
    if exact:
        mean = sum((f.f_q(v) for v in ps.values), Fraction(0)) / len(ps)
        defect = abs(integral - mean)
        return KoksmaReport(defect, var.lower * D, var.lower, D, 0.0, True)
    mean = float(np.mean(f(ps.as_float())))
    defect = abs(_to_float(integral) - mean)
    allowance = 1e-13 * max(1.0, abs(mean))
    if ps.error_bound:
        lip = f.lipschitz if f.lipschitz is not None else math.inf
        allowance += lip * float(ps.error_bound)
    return KoksmaReport(defect, _to_float(var.lower) * float(D), var.lower, D, allowance, False)


@dataclass(frozen=True)
class TruncatedKoksmaReport:
    clamped_integral: float
    variation: float
    discrepancy: Fraction
    bound: float
    max_clamped_mean: float
    clamped_ok: bool
    exceeding_phases: tuple
    containment_ok: bool
    markov_bound: float

    @property
    def passed(self) -> bool:
        return self.clamped_ok and self.containment_ok


def truncated_koksma(h: PeriodicFunction, B, ps, phases=None, n_phases: int = 64
                     ) -> TruncatedKoksmaReport:
    """Check ``mean [h]_B(x + r_j) <= int [h]_B + 2 D Var[h]_B`` over base phases.

    For each phase where the untruncated mean exceeds the right-hand side,
    some ``h(x + r_j)`` must exceed ``B``.  Also reports the measure bound
    ``(n/B) int_{h > B} h``.
    """
    if not isinstance(ps, PointSet):
        ps = PointSet(tuple(ps))
    hB = truncate(h, B)
    V = _to_float(total_variation(hB).lower)
    D = star_discrepancy(ps)
    I_B = integrate(hB, 1e-11).value
    bound = I_B + 2 * float(D) * V
    if phases is None:
        phases = (np.arange(n_phases) + 0.5) / n_phases
    r = ps.as_float()
    X = np.mod(np.asarray(phases, dtype=float)[:, None] + r[None, :], 1.0)
    vals_B = hB(X)
    means_B = vals_B.mean(axis=1)
    slack = 1e-12 * max(1.0, abs(bound))
    clamped_ok = bool(np.all(means_B <= bound + slack))
    raw = h(X)
    means = raw.mean(axis=1)
    over = np.nonzero(means > bound + slack)[0]
    containment_ok = bool(np.all(np.any(raw[over] > float(B), axis=1))) if len(over) else True
    Bf = float(B)

    def tail(y):
        if isinstance(y, np.ndarray):
            return np.where(y > Bf, y, 0.0)
        return y if y > Bf else 0

    n = len(ps)
    markov = n / Bf * integrate(h, 1e-10, tail).value if Bf > 0 else math.inf
    return TruncatedKoksmaReport(I_B, V, D, bound, float(means_B.max()), clamped_ok,
                                 tuple(float(phases[i]) for i in over), containment_ok, markov)


# --------------------------------------------------------------------------
# Gordon grids
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GridReport:
    points: PointSet
    discrepancy: Fraction
    bound: Fraction
    precondition_ok: bool

    @property
    def certified_discrepancy(self) -> Fraction:
        return self.discrepancy + self.points.error_bound

    @property
    def passed(self) -> bool:
        return self.certified_discrepancy <= self.bound


def gordon_grid(x, cf: ContinuedFraction, k: int, s: int, delta, strict: bool = True) -> GridReport:
    """Punctured shifted orbit ``R_s`` and its exact discrepancy.

    ``R_s = {x + j alpha}_{0<=j<s} U {x + j alpha + delta}_{s<j<=q_k-1}``
    (``q_k - 1`` points).  The bound checked is ``3/q_k``.

    Parameters
    ----------
    strict : bool
        Enforce ``|delta| < 1/(10 q_k)``; with ``strict=False`` the condition
        is only reported in ``precondition_ok``.

    Raises
    ------
    DeltaTooLarge
        In strict mode when ``|delta| >= 1/(10 q_k)``.
    """
    q = cf.q(k)
    delta = Fraction(delta)
    if not 0 <= s <= q - 1:
        raise ValueError(f"s must lie in [0, {q - 1}]")
    pre = abs(delta) < Fraction(1, 10 * q)
    if strict and not pre:
        raise DeltaTooLarge(f"|delta| = {float(abs(delta)):.3g} >= 1/(10 q_k)")
    orbit = rotation_orbit(x, cf, q, tol=Fraction(1, 4 * q))
    vals = [orbit.values[j] for j in range(s)]
    vals += [(orbit.values[j] + delta) % 1 for j in range(s + 1, q)]
    ps = PointSet(tuple(vals), orbit.error_bound, f"R_s k={k} s={s} delta={delta}")
    return GridReport(ps, star_discrepancy(ps), Fraction(3, q), pre)
