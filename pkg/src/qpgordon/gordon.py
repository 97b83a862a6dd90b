"""The quantitative Gordon criterion at finite scales.

A potential sequence ``V(n) = f(x + n alpha)`` defines one-step transfer
matrices ``A_n(E) = [[E - V(n), -1], [1, 0]]`` and blocks
``M_{n,k} = A_{n-1} ... A_k`` (for ``k > n`` the inverse convention
``M_{n,k} = M_{k,n}^{-1}``).  Along a convergent denominator ``q`` this
module measures

* repetition defects ``max_s |V(s) - V(s +- q)|``,
* telescopic margins (split block norms around each site),
* the two telescoping identities behind Gordon's lemma,
* the gap norms ``||M_{-q} - M_q^{-1}||`` and ``||(M_{2q} - M_q^2) v|| / ||M_q v||``,
* the no-decay witness ``min_v max(||M_{-q} v||, ||M_q v||, ||M_{2q} v||)``,

and assembles them into a per-``(x, E)`` verdict that only speaks about the
scales actually tested.

Blocks are evaluated in arbitrary precision (mpmath); the telescoping
differences are of size ``e^{-beta q}`` and need ``beta q / log 2`` extra bits.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from . import kernels
from .cocycle import MatrixFunction, lyapunov, orbit_offsets, schrodinger
from .contfrac import ContinuedFraction, beta_estimate, nearest_integer_distance
from .errors import (
    DepthInsufficient,
    InsufficientDepth,
    PrecisionLoss,
    RangeTooSmall,
    SingularPhase,
)
from .periodic_fn import PeriodicFunction, _markov_tail, mean_log

__all__ = [
    "P_MATRIX",
    "PotentialSequence",
    "TransferBlock",
    "GordonConfig",
    "GordonRecord",
    "GordonReport",
    "IdentityResiduals",
    "GapResult",
    "WitnessResult",
    "SummabilityRow",
    "PsExceedance",
    "potential_sequence",
    "repetition_defect",
    "transfer_block",
    "telescopic_margin",
    "telescoping_identity_check",
    "gordon_gap",
    "no_decay_witness",
    "sl2_margins",
    "ps_product",
    "ps_exceedance",
    "summability_check",
    "verdict",
    "SATISFIED",
    "HYPOTHESIS_BETA",
    "INCONCLUSIVE_SMALL_Q",
]

#: ``A_n = [[E - V(n), -1], [1, 0]]`` differs between two sites by ``(V' - V) P``.
P_MATRIX = ((-1, 0), (0, 0))

SATISFIED = "CRITERION_SATISFIED_AT_TESTED_SCALES"
HYPOTHESIS_BETA = "HYPOTHESIS_FAILED(β>λ)"
INCONCLUSIVE_SMALL_Q = "INCONCLUSIVE(q too small)"


# --------------------------------------------------------------------------
# 2x2 arithmetic on tuples (works for floats and mpf alike)
# --------------------------------------------------------------------------

_I = (1, 0, 0, 1)


def _mul(X, Y):
    a, b, c, d = X
    e, f, g, h = Y
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def _sub(X, Y):
    return tuple(x - y for x, y in zip(X, Y))


def _scale(X, t):
    return tuple(x * t for x in X)


def _norm(X):
    a, b, c, d = X
    if all(isinstance(v, float) for v in X):
        return 0.5 * (math.hypot(a + d, b - c) + math.hypot(a - d, b + c))
    return (mpmath.hypot(a + d, b - c) + mpmath.hypot(a - d, b + c)) / 2


def _log(v) -> float:
    return float(mpmath.log(v)) if v > 0 else -math.inf


def _to_np(X) -> np.ndarray:
    return np.array([[float(X[0]), float(X[1])], [float(X[2]), float(X[3])]])


# --------------------------------------------------------------------------
# potential sequences
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialSequence:
    """``V(n) = f(x + n alpha)`` for ``n_min <= n <= n_max``.

    ``values`` are mpf at ``precision`` bits; ``errors[i]`` bounds the value
    error caused by the rational stand-in for alpha.
    """

    f: PeriodicFunction
    x: Fraction
    cf: ContinuedFraction
    n_min: int
    n_max: int
    values: tuple
    errors: tuple
    phase_error: Fraction
    precision: int
    singular_hits: tuple = ()

    def covers(self, lo: int, hi: int) -> bool:
        return self.n_min <= lo and hi <= self.n_max

    def require(self, lo: int, hi: int):
        if not self.covers(lo, hi):
            raise RangeTooSmall(
                f"need V on [{lo}, {hi}], have [{self.n_min}, {self.n_max}]")

    def __call__(self, n: int):
        if not self.n_min <= n <= self.n_max:
            raise RangeTooSmall(f"V({n}) outside [{self.n_min}, {self.n_max}]")
        return self.values[n - self.n_min]

    def as_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    @classmethod
    def from_values(cls, values: Sequence, n_min: int = 0, precision: int = 53,
                    name: str = "table") -> "PotentialSequence":
        """Wrap an explicit table (tests and toy models)."""
        from .periodic_fn import constant

        with mpmath.workprec(precision):
            vals = tuple(mpmath.mpf(v) if not isinstance(v, Fraction)
                         else mpmath.mpf(v.numerator) / v.denominator for v in values)
        return cls(constant(0).with_name(name), Fraction(0), None, n_min, n_min + len(vals) - 1,
                   vals, (0.0,) * len(vals), Fraction(0), precision)


def potential_sequence(f: PeriodicFunction, x, cf: ContinuedFraction, n_min: int, n_max: int,
                       tol=Fraction(1, 10 ** 20), precision: int = 256) -> PotentialSequence:
    """Evaluate ``f`` along the orbit of ``x`` under rotation by ``alpha``.

    Phases are exact rationals ``x + n p_K/q_K`` with the deepest convergent;
    the phase error is ``|n| |alpha - p_K/q_K|``.

    Raises
    ------
    DepthInsufficient
        The phase error exceeds ``tol`` somewhere in the range.
    SingularPhase
        Some phase lies within its error of a singular point of ``f``.
    """
    x = Fraction(x)
    tol = Fraction(tol)
    K = cf.depth
    p, q = cf.convergents[K]
    err_unit = cf.approximation_error(K)
    n_abs = max(abs(n_min), abs(n_max))
    if n_abs * err_unit > tol:
        raise DepthInsufficient(
            f"phase error {float(n_abs * err_unit):.3g} exceeds tol {float(tol):.3g}")
    phases = [(x + Fraction(n * p, q)) % 1 for n in range(n_min, n_max + 1)]
    hits = []
    for i, ph in enumerate(phases):
        e = abs(n_min + i) * err_unit
        for s in f.singular_points:
            d = abs(ph - Fraction(s))
            if min(d, 1 - d) <= e:
                hits.append(n_min + i)
    if hits:
        raise SingularPhase(f"{len(hits)} orbit sites hit a singular point", hits)
    vals, errs = [], []
    with mpmath.workprec(precision):
        for i, ph in enumerate(phases):
            y = mpmath.mpf(ph.numerator) / ph.denominator
            v = f.f_mp(y)
            vals.append(v)
            e = abs(n_min + i) * err_unit
            if e == 0:
                errs.append(0.0)
            elif f.lipschitz is not None:
                errs.append(float(f.lipschitz) * float(e))
            else:
                em = mpmath.mpf(e.numerator) / e.denominator
                lo, hi = f.f_mp((y - em) % 1), f.f_mp((y + em) % 1)
                errs.append(float(max(abs(lo - v), abs(hi - v))))
    return PotentialSequence(f, x, cf, n_min, n_max, tuple(vals), tuple(errs),
                             max(abs(n_min), abs(n_max)) * err_unit, precision)


def repetition_defect(V: PotentialSequence, q: int):
    """``(max_{1<=s<q} |V(s) - V(s+q)|, max_{1<=s<q} |V(s) - V(s-q)|)``.

    Returned as mpf (the values can be far below float range for large q).
    """
    V.require(1 - q, 2 * q - 1)
    fwd = max((abs(V(s) - V(s + q)) for s in range(1, q)), default=mpmath.mpf(0))
    bwd = max((abs(V(s) - V(s - q)) for s in range(1, q)), default=mpmath.mpf(0))
    return fwd, bwd


# --------------------------------------------------------------------------
# transfer blocks
# --------------------------------------------------------------------------

class _Blocks:
    """Unscaled blocks ``M_{n,k}`` from a potential sequence at one energy."""

    def __init__(self, V: PotentialSequence, E, precision: int):
        self.V = V
        self.prec = precision
        self.float = precision <= 53
        if self.float:
            self.E = float(E)
        else:
            with mpmath.workprec(precision):
                self.E = mpmath.mpf(E)

    def w(self, n):
        v = self.V(n)
        return self.E - float(v) if self.float else self.E - v

    def A(self, n):
        return (self.w(n), -1, 1, 0)

    def Ainv(self, n):
        return (0, 1, -1, self.w(n))

    def block(self, n: int, k: int):
        """``A_{n-1} ... A_k`` for ``k <= n``; ``A_n^{-1} ... A_{k-1}^{-1}`` for ``k > n``."""
        R = _I
        if k <= n:
            for j in range(k, n):
                R = _mul(self.A(j), R)
        else:
            for j in range(k - 1, n - 1, -1):
                R = _mul(self.Ainv(j), R)
        return R


class _prec:
    """``mpmath.workprec`` that is a no-op for float runs."""

    def __init__(self, precision: int):
        self.cm = mpmath.workprec(precision) if precision > 53 else None

    def __enter__(self):
        if self.cm is not None:
            self.cm.__enter__()

    def __exit__(self, *exc):
        if self.cm is not None:
            return self.cm.__exit__(*exc)
        return False


@dataclass(frozen=True)
class TransferBlock:
    """``M_{n,k}(E)`` in scaled form ``exp(log_scale) * matrix``."""

    n: int
    k: int
    E: float
    matrix: tuple
    log_scale: float
    precision: int

    def to_mp(self):
        with mpmath.workprec(max(self.precision, 53)):
            t = mpmath.exp(self.log_scale)
            return mpmath.matrix([[self.matrix[0] * t, self.matrix[1] * t],
                                  [self.matrix[2] * t, self.matrix[3] * t]])

    def to_array(self) -> np.ndarray:
        return _to_np(self.matrix) * math.exp(self.log_scale)

    def lognorm(self) -> float:
        with _prec(self.precision):
            return self.log_scale + _log(_norm(self.matrix))

    def det(self):
        a, b, c, d = self.matrix
        with _prec(self.precision):
            return (a * d - b * c) * (mpmath.exp(2 * self.log_scale) if self.precision > 53
                                      else math.exp(2 * self.log_scale))


def transfer_block(V: PotentialSequence, E, n: int, k: int, precision: int | None = None
                   ) -> TransferBlock:
    """``M_{n,k}(E)``; for ``k > n`` the product of single-step inverses.

    Raises
    ------
    RangeTooSmall
        ``V`` does not cover ``[min(k, n), max(k, n))``.
    """
    precision = V.precision if precision is None else precision
    lo, hi = min(k, n), max(k, n)
    if hi > lo:
        V.require(lo, hi - 1)
    bl = _Blocks(V, E, precision)
    with _prec(precision):
        R = bl.block(n, k)
        mx = max(abs(v) for v in R)
        e = 0 if mx == 0 else int(math.floor(float(mpmath.log(mx, 2)))) + 1
        if precision > 53:
            R = tuple(mpmath.ldexp(v, -e) for v in R)
        else:
            R = tuple(math.ldexp(float(v), -e) for v in R)
    return TransferBlock(n, k, float(E), R, e * math.log(2), precision)


# --------------------------------------------------------------------------
# telescopic margins
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Tables:
    """Per-site log-norms for the split products (``s = 0..q-1``).

    ``plus_a[s] = log||M_{2q,q+s+1}||``, ``plus_b[s] = log||M_{s,0}||``,
    ``minus_a[s] = log||M_{-q,-q+s+1}||``, ``minus_b[s] = log||M_{s,q}||``.
    """

    plus_a: np.ndarray
    plus_b: np.ndarray
    minus_a: np.ndarray
    minus_b: np.ndarray


def _tables(V: PotentialSequence, E, q: int, precision: int = 64) -> _Tables:
    V.require(-q, 2 * q - 1)
    bl = _Blocks(V, E, max(precision, 54))
    pa, pb, ma, mb = (np.empty(q) for _ in range(4))
    with mpmath.workprec(max(precision, 54)):
        T = _I
        for s in range(q - 1, -1, -1):
            pa[s] = _log(_norm(T))
            T = _mul(T, bl.A(q + s))
        U = _I
        for s in range(q):
            pb[s] = _log(_norm(U))
            U = _mul(bl.A(s), U)
        # ||M_{-q,-q+s+1}|| = ||A_{-q+s} ... A_{-q}|| (inverse has the same norm)
        R = _I
        for s in range(q):
            R = _mul(bl.A(-q + s), R)
            ma[s] = _log(_norm(R))
        # ||M_{s,q}|| = ||A_{q-1} ... A_s||
        W = _I
        for s in range(q - 1, -1, -1):
            W = _mul(W, bl.A(s))
            mb[s] = _log(_norm(W))
    return _Tables(pa, pb, ma, mb)


def telescopic_margin(V: PotentialSequence, E, q: int, precision: int = 64):
    """``(lambda_plus, lambda_minus)``: split-product growth rates along ``q``.

    ``lambda_plus = (1/q) max_s log(||M_{2q,q+s+1}|| ||M_{s,0}||)`` and
    ``lambda_minus = (1/q) max_s log(||M_{-q,-q+s+1}|| ||M_{s,q}||)``, the
    pair of factors that appears in each telescoping identity.  Prefix and
    suffix products are shared, so the cost is ``O(q)`` matrix products.
    """
    t = _tables(V, E, q, precision)
    return (float(np.max(t.plus_a + t.plus_b)) / q, float(np.max(t.minus_a + t.minus_b)) / q)


# --------------------------------------------------------------------------
# telescoping identities
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityResiduals:
    """Entrywise residuals of the two telescoping identities.

    ``relative*`` divide by the largest entry of any matrix that enters the
    identity (left side blocks and right side summands).
    """

    residual_minus: float
    residual_plus: float
    relative_minus: float
    relative_plus: float

    @property
    def max_relative(self) -> float:
        return max(self.relative_minus, self.relative_plus)


def _pmul(X):
    # P X with P = [[-1, 0], [0, 0]]
    return (-X[0], -X[1], 0 * X[2], 0 * X[3])


def telescoping_identity_check(V: PotentialSequence, E, q: int, precision: int = 53
                               ) -> IdentityResiduals:
    """Evaluate both sides of the two telescoping identities.

    ``M_{-q} - M_q^{-1} = sum_s (V(s) - V(s-q)) M_{-q,-q+s+1} P M_{s,q}`` and
    ``M_{2q} - M_q^2 = sum_s (V(s+q) - V(s)) M_{2q,q+s+1} P M_{s,0} M_q``,
    summed over ``0 <= s < q``.  Every block is formed independently by
    brute force, so agreement tests the algebra and the block conventions.
    """
    V.require(-q, 2 * q - 1)
    bl = _Blocks(V, E, precision)
    with _prec(precision):
        Mq = bl.block(q, 0)
        Mq_inv = bl.block(0, q)
        Mmq = bl.block(-q, 0)
        M2q = bl.block(2 * q, 0)

        def dv(a, b):
            va, vb = V(a), V(b)
            return float(va) - float(vb) if bl.float else va - vb

        lhs1 = _sub(Mmq, Mq_inv)
        rhs1 = (0, 0, 0, 0)
        scale1 = max(abs(v) for v in Mmq + Mq_inv)
        for s in range(q):
            term = _mul(bl.block(-q, -q + s + 1), _pmul(bl.block(s, q)))
            scale1 = max(scale1, max(abs(v) for v in term))
            rhs1 = tuple(r + dv(s, s - q) * t for r, t in zip(rhs1, term))
        lhs2 = _sub(M2q, _mul(Mq, Mq))
        rhs2 = (0, 0, 0, 0)
        scale2 = max(abs(v) for v in M2q + _mul(Mq, Mq))
        for s in range(q):
            term = _mul(bl.block(2 * q, q + s + 1), _mul(_pmul(bl.block(s, 0)), Mq))
            scale2 = max(scale2, max(abs(v) for v in term))
            rhs2 = tuple(r + dv(s + q, s) * t for r, t in zip(rhs2, term))
        r1 = float(max(abs(a - b) for a, b in zip(lhs1, rhs1)))
        r2 = float(max(abs(a - b) for a, b in zip(lhs2, rhs2)))
        s1, s2 = float(scale1) or 1.0, float(scale2) or 1.0
    return IdentityResiduals(r1, r2, r1 / s1, r2 / s2)


# --------------------------------------------------------------------------
# gaps and the no-decay witness
# --------------------------------------------------------------------------

def _directions(count: int) -> np.ndarray:
    th = np.pi * np.arange(count) / count
    return np.stack([np.cos(th), np.sin(th)])


def _apply(X: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.linalg.norm(X @ v, axis=0)


@dataclass(frozen=True)
class _Core:
    """Float images (common power-of-two scale removed where needed)."""

    Mq: np.ndarray
    Mmq: np.ndarray
    M2q: np.ndarray
    D1: np.ndarray  # M_{-q} - M_q^{-1}
    D2: np.ndarray  # M_{2q} - M_q^2
    trace: float


def _core(V: PotentialSequence, E, q: int, precision: int) -> _Core:
    V.require(-q, 2 * q - 1)
    bl = _Blocks(V, E, precision)
    with _prec(precision):
        Mq = bl.block(q, 0)
        Mmq = bl.block(-q, 0)
        M2q = bl.block(2 * q, q)
        M2q = _mul(M2q, Mq)
        D1 = _sub(Mmq, bl.block(0, q))
        D2 = _sub(M2q, _mul(Mq, Mq))
        tr = Mq[0] + Mq[3]
    return _Core(_to_np(Mq), _to_np(Mmq), _to_np(M2q), _to_np(D1), _to_np(D2), float(tr))


@dataclass(frozen=True)
class GapResult:
    gap1: float
    gap2_ratio: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.gap1 <= self.threshold and self.gap2_ratio <= self.threshold


def _gap2_ratio(c: _Core, count: int) -> float:
    v = _directions(count)
    den = _apply(c.Mq, v)
    return float(np.max(_apply(c.D2, v) / den))


def gordon_gap(V: PotentialSequence, E, q: int, beta_hat: float, lambda_hat: float,
               directions: int = 360, precision: int | None = None) -> GapResult:
    """Gap norms and the threshold ``q exp(-(beta_hat - lambda_hat) q)``.

    ``gap1 = ||M_{-q} - M_q^{-1}||``; ``gap2_ratio`` is the largest
    ``||(M_{2q} - M_q^2) v|| / ||M_q v||`` over ``directions`` unit vectors.
    """
    c = _core(V, E, q, V.precision if precision is None else precision)
    thr = q * math.exp(-(beta_hat - lambda_hat) * q)
    return GapResult(float(np.linalg.norm(c.D1, 2)), _gap2_ratio(c, directions), thr)


@dataclass(frozen=True)
class WitnessResult:
    """Minimum over unit ``v`` of ``max(||M_{-q}v||, ||M_q v||, ||M_{2q}v||)``.

    ``margin_trace`` is the minimum of ``||M_q v|| + ||M_{-q} v|| + gap1 - |tr M_q|``
    and ``margin_ch`` the minimum of
    ``||M_{2q} v|| - (1 - |tr M_q| ||M_q v|| - ||(M_{2q} - M_q^2) v||)``; both
    must be non-negative.
    """

    minimum: float
    trace: float
    margin_trace: float
    margin_ch: float
    directions_used: int
    argmin_angle: float


def _witness_scan(c: _Core, count: int):
    v = _directions(count)
    nq, nmq, n2q = _apply(c.Mq, v), _apply(c.Mmq, v), _apply(c.M2q, v)
    m = np.maximum(np.maximum(nq, nmq), n2q)
    i = int(np.argmin(m))
    gap1 = float(np.linalg.norm(c.D1, 2))
    tr = abs(c.trace)
    mt = float(np.min(nq + nmq + gap1 - tr))
    mc = float(np.min(n2q - (1.0 - tr * nq - _apply(c.D2, v))))
    return float(m[i]), mt, mc, float(np.pi * i / count)


def no_decay_witness(V: PotentialSequence, E, q: int, directions: int = 360,
                     precision: int | None = None, refine: bool = True) -> WitnessResult:
    """No-decay witness with the trace and Cayley-Hamilton margins.

    With ``refine`` the direction grid doubles until the minimum changes by
    less than 1% (at most six doublings).
    """
    c = _core(V, E, q, V.precision if precision is None else precision)
    count = directions
    best, mt, mc, ang = _witness_scan(c, count)
    if refine:
        for _ in range(6):
            nb, nmt, nmc, nang = _witness_scan(c, 2 * count)
            count *= 2
            stable = abs(nb - best) <= 0.01 * abs(best)
            best, mt, mc, ang = nb, nmt, nmc, nang
            if stable:
                break
    return WitnessResult(best, c.trace, mt, mc, count, ang)


def sl2_margins(mats: np.ndarray, directions: int = 36):
    """Margins of the unconditional ``SL(2)`` inequalities.

    For each matrix ``M`` (shape ``(m, 2, 2)``, det 1) and unit ``v`` returns
    ``||M^2 v|| - (1 - |tr M| ||M v||)`` and ``||M v|| + ||M^{-1} v|| - |tr M|``,
    each of shape ``(m, directions)``.
    """
    mats = np.asarray(mats, dtype=float)
    v = _directions(directions)
    a, b, c, d = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1]
    inv = np.stack([np.stack([d, -b], -1), np.stack([-c, a], -1)], -2)
    tr = np.abs(a + d)[:, None]
    Mv = np.linalg.norm(mats @ v, axis=1)
    M2v = np.linalg.norm(mats @ mats @ v, axis=1)
    Miv = np.linalg.norm(inv @ v, axis=1)
    return M2v - (1.0 - tr * Mv), Mv + Miv - tr


# --------------------------------------------------------------------------
# P_s products
# --------------------------------------------------------------------------

def _as_matrix_function(M, E) -> MatrixFunction:
    if isinstance(M, MatrixFunction):
        return M
    if isinstance(M, PeriodicFunction):
        return schrodinger(M, E)
    raise TypeError("expected a PeriodicFunction or a MatrixFunction")


def _ps_logs(M: MatrixFunction, x: np.ndarray, offs: np.ndarray, delta: float, s: int) -> np.ndarray:
    """``log P_s`` for a batch of phases ``x``; ``offs[j] = {j alpha}``, ``j < q``."""
    q = len(offs)
    n = q - 2
    # r_i = offs[i] for i < s, offs[i+1] + delta for i >= s   (i = 0..q-2)
    idx = np.arange(q - 1)
    r = np.where(idx < s, offs[np.minimum(idx, q - 1)], offs[np.minimum(idx + 1, q - 1)] + delta)
    split = min(s, n - 1)
    mats = M.eval_np(x[:, None] + r[None, :n])  # (P, n, 2, 2)

    def lognorm(seg):
        if seg.shape[1] == 0:
            return np.zeros(seg.shape[0])
        ln, _, _ = kernels.chain_generic(seg[..., 0, 0], seg[..., 0, 1], seg[..., 1, 0],
                                         seg[..., 1, 1], np.array([seg.shape[1]]))
        return ln[:, 0]

    return lognorm(mats[:, split + 1:n]) + lognorm(mats[:, :split + 1])


def ps_product(M, x, cf: ContinuedFraction, k: int, s: int, delta, E=0.0) -> float:
    """``(1/n) log P_s(x)`` over the punctured grid ``R_s`` with ``n = q_k - 2``.

    ``r_0, ..., r_{q_k-2}`` enumerate ``R_s`` in orbit order and
    ``P_s(x) = ||prod_{j=n-1}^{s+1} M(x + r_j)|| ||prod_{j=s}^{0} M(x + r_j)||``.
    ``M`` is a :class:`MatrixFunction` or a potential (Schrodinger cocycle at
    ``E``).  For ``s > n - 1`` the split index is clamped to ``n - 1``.
    """
    Mf = _as_matrix_function(M, E)
    q = cf.q(k)
    if q < 3:
        raise RangeTooSmall("P_s needs q_k >= 3")
    if not 0 <= s <= q - 1:
        raise ValueError(f"s must lie in [0, {q - 1}]")
    offs = orbit_offsets(cf, q)
    val = _ps_logs(Mf, np.array([float(Fraction(x))]), offs, float(delta), s)
    return float(val[0]) / (q - 2)


@dataclass(frozen=True)
class PsExceedance:
    """Fraction of a phase grid where some ``(1/n) log P_s`` exceeds ``L + 2 eps``."""

    fraction: float
    markov_bound: float
    max_value: float
    L_hat: float
    epsilon: float
    n_phases: int

    @property
    def passed(self) -> bool:
        return self.fraction <= self.markov_bound


def ps_exceedance(M, f: PeriodicFunction, cf: ContinuedFraction, k: int, delta, B: float,
                  epsilon: float, L_hat: float, n_phases: int = 1000, E=0.0) -> PsExceedance:
    """Exceedance set of ``max_s P_s`` versus ``(2 q_k / B) int_{F > e^B} log F``.

    ``F = 1 + |f|``; the grid is the midpoint grid of ``n_phases`` points.
    """
    Mf = _as_matrix_function(M, E)
    q = cf.q(k)
    n = q - 2
    offs = orbit_offsets(cf, q)
    x = (np.arange(n_phases) + 0.5) / n_phases
    best = np.full(n_phases, -np.inf)
    for s in range(q):
        best = np.maximum(best, _ps_logs(Mf, x, offs, float(delta), s) / n)
    frac = float(np.mean(best > L_hat + 2 * epsilon))
    bound = 2 * q / B * _markov_tail(f, B)
    return PsExceedance(frac, bound, float(np.max(best)), L_hat, epsilon, n_phases)


# --------------------------------------------------------------------------
# summability
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SummabilityRow:
    """Tail integral at ``e^{eps q_j / 10}`` and the growth check for one ``j``.

    ``q_next`` is exact when known, otherwise a certified lower bound
    (``q_next_exact`` False).
    """

    j: int
    q: int
    threshold_log: float
    tail: float
    partial_sum: float
    log_q_next: float
    q_next_exact: bool
    growth_ok: bool


def summability_check(f: PeriodicFunction, epsilon: float, cf: ContinuedFraction,
                      j_max: int | None = None, beta_prime: float = 1.0) -> tuple:
    """Per-``j`` tail integrals and the ``q_{j+1} >= e^{beta' q_j}`` check.

    Raises
    ------
    DivergentIntegral
        ``int log(1 + |f|)`` is infinite.
    """
    mean_log(f)
    j_max = cf.depth if j_max is None else j_max
    rows = []
    total = 0.0
    for j in range(1, j_max + 1):
        q = cf.q(j)
        thr = epsilon * q / 10
        tail = _markov_tail(f, thr)
        total += tail
        exact = j + 1 <= cf.depth
        q_next = cf.q(j + 1) if exact else cf.q_next_lower(j)
        lq = math.log(q_next)
        rows.append(SummabilityRow(j, q, thr, tail, total, lq, exact, lq >= beta_prime * q))
    return tuple(rows)


# --------------------------------------------------------------------------
# verdict
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GordonConfig:
    """Settings for :func:`verdict`.

    ``q_list`` holds convergent denominators.  ``beta_hat=None`` uses the
    measured ``log(q_{k+1}) / q_k`` at each tested ``q``; the overall
    ``beta_hat`` is their maximum over ``q >= q_min`` (over all ``q`` when
    none qualifies).  ``B`` and ``A``
    default to ``eps q / 10`` and ``exp(eps q / 5)``.  Failures at
    ``q < q_min`` make the run inconclusive rather than failed.
    """

    q_list: tuple
    epsilon: float = 0.1
    beta_hat: float | None = None
    lambda_budget: float | None = None
    B: float | None = None
    A: float | None = None
    directions: int = 360
    precision: int | None = None
    n_lyap: int = 1024
    lyap_phases: int = 64
    q_min: int = 8


@dataclass(frozen=True)
class GordonRecord:
    """All measured quantities and pass flags for one denominator ``q``."""

    q: int
    k: int
    beta_q: float
    defect_fwd: float
    defect_bwd: float
    beta_rep: float
    defect_threshold: float
    lambda_plus: float
    lambda_minus: float
    lambda_hat: float
    lambda_threshold: float
    gap1: float
    gap2_ratio: float
    gap_threshold: float
    gap1_identity_bound: float
    gap2_identity_bound: float
    trace: float
    witness: float
    witness_directions: int
    margin_trace: float
    margin_ch: float
    B: float
    A_log: float
    delta_lo: float | None
    delta_hi: float | None
    precision: int
    repetition_ok: bool
    telescopic_ok: bool
    telescopic_vs_L_ok: bool
    gap_ok: bool
    witness_ok: bool

    @property
    def hypotheses_ok(self) -> bool:
        return self.repetition_ok and self.telescopic_ok

    @property
    def passed(self) -> bool:
        return self.hypotheses_ok and self.gap_ok and self.witness_ok

    def first_failure(self) -> str | None:
        for name in ("repetition", "telescopic", "gap", "witness"):
            if not getattr(self, f"{name}_ok"):
                return name
        return None


@dataclass(frozen=True)
class GordonReport:
    potential: str
    alpha: str
    x: str
    E: float
    epsilon: float
    L_hat: float
    beta_hat: float
    records: tuple
    verdict: str
    q_min_passing: int | None

    @property
    def exit_code(self) -> int:
        if self.verdict == SATISFIED:
            return 0
        if self.verdict.startswith("HYPOTHESIS_FAILED"):
            return 2
        return 3

    def to_dict(self) -> dict:
        d = asdict(self)
        d["records"] = [asdict(r) | {"passed": r.passed} for r in self.records]
        d["exit_code"] = self.exit_code
        return d


def _auto_precision(V: PotentialSequence, E: float, q: int, beta: float) -> int:
    vmax = max(float(abs(v)) for v in V.values)
    growth = 2 * q * math.log(2 + abs(E) + vmax)
    return 256 + math.ceil((beta * q + 2 * growth) / math.log(2))


def _k_of(cf: ContinuedFraction, q: int) -> int:
    for k in range(cf.depth + 1):
        if cf.q(k) == q:
            return k
    raise ValueError(f"{q} is not a convergent denominator")


def _beta_at(cf: ContinuedFraction, k: int) -> float:
    nxt = cf.q(k + 1) if k + 1 <= cf.depth else cf.q_next_lower(k)
    return math.log(nxt) / cf.q(k)


def _identity_bounds(V: PotentialSequence, q: int, t: _Tables):
    """Triangle-inequality bounds on the gaps from the identities (``||P|| = 1``)."""
    g1 = g2 = 0.0
    for s in range(q):
        d1 = float(abs(V(s) - V(s - q)))
        d2 = float(abs(V(s + q) - V(s)))
        if d1 > 0:
            g1 += d1 * math.exp(t.minus_a[s] + t.minus_b[s])
        if d2 > 0:
            g2 += d2 * math.exp(t.plus_a[s] + t.plus_b[s])
    return g1, g2


def _log_defect(d) -> float:
    return float(mpmath.log(d)) if d > 0 else -math.inf


def verdict(f: PeriodicFunction, x, cf: ContinuedFraction, E: float, cfg: GordonConfig
            ) -> GordonReport:
    """Run every check at each ``q`` in ``cfg.q_list`` and classify.

    Verdicts: :data:`SATISFIED` when every tested ``q`` passes;
    :data:`HYPOTHESIS_BETA` when the measured ``beta_hat`` does not exceed
    ``L_hat(E)``; ``HYPOTHESIS_FAILED(<check>)`` when repetition or
    telescoping fails at some ``q >= q_min``; ``INCONCLUSIVE(...)``
    otherwise.  The identity bounds on the gaps are asserted on every run.

    Raises
    ------
    PrecisionLoss
        A gap exceeds its identity bound (rounding has swamped the result).
    """
    E = float(E)
    x = Fraction(x)
    q_list = tuple(sorted(int(q) for q in cfg.q_list))
    ks = [_k_of(cf, q) for q in q_list]
    betas = [_beta_at(cf, k) for k in ks]
    # small denominators say nothing about the limsup
    tail = [b for q, b in zip(q_list, betas) if q >= cfg.q_min] or betas
    beta_hat = cfg.beta_hat if cfg.beta_hat is not None else max(tail)
    L = lyapunov(schrodinger(f, E), cfg.n_lyap, cfg.lyap_phases, cf, keep_per_phase=False).value
    eps = cfg.epsilon
    records = []
    q_max = q_list[-1]
    V0 = potential_sequence(f, x, cf, -q_max, 2 * q_max, precision=64)
    prec = cfg.precision or _auto_precision(V0, E, q_max, beta_hat)
    V = potential_sequence(f, x, cf, -q_max, 2 * q_max, precision=prec)
    for q, k, bq in zip(q_list, ks, betas):
        b = cfg.beta_hat if cfg.beta_hat is not None else bq
        fwd, bwd = repetition_defect(V, q)
        dmax = max(fwd, bwd)
        beta_rep = -_log_defect(dmax) / q
        dthr = math.exp(-(b - eps) * q)
        t = _tables(V, E, q)
        lp = float(np.max(t.plus_a + t.plus_b)) / q
        lm = float(np.max(t.minus_a + t.minus_b)) / q
        lam = max(lp, lm)
        lam_thr = b - eps if cfg.lambda_budget is None else min(b - eps, cfg.lambda_budget)
        c = _core(V, E, q, prec)
        gap1 = float(np.linalg.norm(c.D1, 2))
        gap2 = _gap2_ratio(c, cfg.directions)
        gthr = q * math.exp(-(b - lam) * q)
        g1b, g2b = _identity_bounds(V, q, t)
        slack = 1e-6
        if gap1 > g1b * (1 + slack) + 2.0 ** (-prec / 2) or gap2 > g2b * (1 + slack) + 2.0 ** (-prec / 2):
            raise PrecisionLoss(f"gap exceeds its identity bound at q={q}")
        w = no_decay_witness(V, E, q, cfg.directions, prec)
        try:
            dlo, dhi, _, _ = nearest_integer_distance(cf, k)
            dlo, dhi = float(dlo), float(dhi)
        except InsufficientDepth:
            dlo = dhi = None
        B = cfg.B if cfg.B is not None else eps * q / 10
        A_log = math.log(cfg.A) if cfg.A is not None else eps * q / 5
        records.append(GordonRecord(
            q=q, k=k, beta_q=b, defect_fwd=float(fwd), defect_bwd=float(bwd), beta_rep=beta_rep,
            defect_threshold=dthr, lambda_plus=lp, lambda_minus=lm, lambda_hat=lam,
            lambda_threshold=lam_thr, gap1=gap1, gap2_ratio=gap2, gap_threshold=gthr,
            gap1_identity_bound=g1b, gap2_identity_bound=g2b, trace=c.trace, witness=w.minimum,
            witness_directions=w.directions_used, margin_trace=w.margin_trace,
            margin_ch=w.margin_ch, B=B, A_log=A_log, delta_lo=dlo, delta_hi=dhi, precision=prec,
            repetition_ok=bool(dmax <= dthr), telescopic_ok=bool(lam < lam_thr),
            telescopic_vs_L_ok=bool(lam <= L + eps), gap_ok=bool(gap1 <= gthr and gap2 <= gthr),
            witness_ok=bool(w.minimum >= 0.5)))
    q_pass = None
    for r in reversed(records):
        if not r.passed:
            break
        q_pass = r.q
    if beta_hat <= L:
        v = HYPOTHESIS_BETA
    elif all(r.passed for r in records):
        v = SATISFIED
    else:
        big = [r for r in records if not r.passed and r.q >= cfg.q_min]
        if not big:
            v = INCONCLUSIVE_SMALL_Q
        else:
            which = big[0].first_failure()
            if which in ("repetition", "telescopic"):
                v = f"HYPOTHESIS_FAILED({which})"
            else:
                v = f"INCONCLUSIVE({which} at q={big[0].q})"
    return GordonReport(f.name, cf.source, str(x), E, eps, L, beta_hat, tuple(records), v, q_pass)
