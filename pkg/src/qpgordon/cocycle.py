"""Matrix cocycles over circle rotations.

Products ``M_n(x) = M(x + (n-1) alpha) ... M(x)`` are kept in scaled form
``exp(log_scale) * matrix`` with the largest entry of ``matrix`` in
``[1/2, 2]``; rescaling is by powers of two, so it is exact in floating
point.  Float runs go through :mod:`qpgordon.kernels`; higher precision
runs use mpmath.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from . import kernels
from .contfrac import ContinuedFraction
from .discrepancy import PointSet, star_discrepancy_float
from .errors import InsufficientDepth, PrecisionLoss, SingularPhase, UnboundedEntries
from .periodic_fn import (
    PeriodicFunction,
    _isinf,
    compose_monotone,
    compose_unimodal,
    constant,
    one_plus_abs,
    total_variation,
)

__all__ = [
    "MatrixFunction",
    "ScaledProduct",
    "LyapunovEstimate",
    "UniformBoundConfig",
    "UniformBoundReport",
    "schrodinger",
    "factorize",
    "constant_matrix",
    "orbit_offsets",
    "orbit_phases_exact",
    "product",
    "log_norms",
    "lyapunov",
    "opnorm",
    "build_uniform_config",
    "uniform_upper_margin",
    "subadditive_uniform_margin",
]


def opnorm(m) -> float:
    """Largest singular value of a 2x2 matrix (closed form)."""
    a, b, c, d = (m[0][0], m[0][1], m[1][0], m[1][1]) if not isinstance(m, np.ndarray) or m.ndim == 2 \
        else m
    return 0.5 * (math.hypot(a + d, b - c) + math.hypot(a - d, b + c))


def _opnorm_mp(m):
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    return (mpmath.hypot(a + d, b - c) + mpmath.hypot(a - d, b + c)) / 2


# --------------------------------------------------------------------------
# matrix functions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MatrixFunction:
    """1-periodic ``N x N`` matrix function.

    ``kind`` selects the evaluation path: ``schrodinger`` (``S^{f,E}``),
    ``factorized`` (``G = S/(1+|f|)``), ``constant`` or ``generic``
    (``entries`` evaluated one by one).
    """

    N: int
    kind: str
    f: PeriodicFunction | None = None
    E: float | None = None
    entries: tuple | None = None
    const: tuple | None = None
    bounded_flags: tuple = ()
    name: str = ""

    @property
    def bounded_variation(self) -> bool:
        return bool(self.bounded_flags) and all(self.bounded_flags)

    @property
    def singular_points(self) -> tuple:
        if self.kind == "schrodinger" and self.f is not None:
            return tuple(self.f.singular_points)
        return ()

    def eval_np(self, x) -> np.ndarray:
        """Values at float phases, shape ``x.shape + (N, N)``."""
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        if self.kind == "constant":
            return np.broadcast_to(np.array(self.const, dtype=float), x.shape + (self.N, self.N)).copy()
        if self.kind in ("schrodinger", "factorized"):
            v = self.f(x)
            out = np.empty(x.shape + (2, 2))
            if self.kind == "schrodinger":
                out[..., 0, 0] = self.E - v
                out[..., 0, 1] = -1.0
                out[..., 1, 0] = 1.0
                out[..., 1, 1] = 0.0
                return out
            F = 1.0 + np.abs(v)
            sing = np.isinf(v)
            with np.errstate(invalid="ignore"):
                out[..., 0, 0] = np.where(sing, 1.0, (self.E - v) / F)
            out[..., 0, 1] = np.where(sing, 0.0, -1.0 / F)
            out[..., 1, 0] = np.where(sing, 0.0, 1.0 / F)
            out[..., 1, 1] = 0.0
            return out
        out = np.empty(x.shape + (self.N, self.N))
        for i in range(self.N):
            for j in range(self.N):
                out[..., i, j] = self.entries[i][j](x)
        return out

    def eval_mp(self, x):
        """Value at one arbitrary-precision phase as an mpmath matrix."""
        x = mpmath.mpf(x)
        x = x - mpmath.floor(x)
        if self.kind == "constant":
            return mpmath.matrix([[mpmath.mpf(v) for v in row] for row in self.const])
        if self.kind in ("schrodinger", "factorized"):
            v = self.f.f_mp(x)
            E = mpmath.mpf(self.E)
            if self.kind == "schrodinger":
                if mpmath.isinf(v):
                    raise SingularPhase(f"f = -inf at phase {x}", ())
                return mpmath.matrix([[E - v, -1], [1, 0]])
            if mpmath.isinf(v):
                return mpmath.matrix([[1, 0], [0, 0]])
            F = 1 + abs(v)
            return mpmath.matrix([[(E - v) / F, -1 / F], [1 / F, 0]])
        return mpmath.matrix([[self.entries[i][j].f_mp(x) for j in range(self.N)]
                              for i in range(self.N)])

    def entry_functions(self) -> tuple:
        """Entries as :class:`PeriodicFunction` objects (for variation checks)."""
        if self.entries is not None:
            return self.entries
        if self.kind == "constant":
            return tuple(tuple(constant(Fraction(v)) for v in row) for row in self.const)
        raise ValueError("no entry functions")


def _entry_const(v) -> PeriodicFunction:
    return constant(Fraction(v))


def schrodinger(f: PeriodicFunction, E) -> MatrixFunction:
    """``S^{f,E}(x) = [[E - f(x), -1], [1, 0]]``."""
    E = float(E)
    Eq = Fraction(E)

    def phi(v):
        if _isinf(v):
            return -v
        return Eq - v if isinstance(v, Fraction) else mpmath.mpf(E) - v

    e00 = compose_monotone(f, phi, lambda y: E - y, lambda y: mpmath.mpf(E) - y, f"E-{f.name}")
    entries = ((e00, _entry_const(-1)), (_entry_const(1), _entry_const(0)))
    v = total_variation(e00)
    flags = (v.exact_flag and not _isinf(v.lower), True, True, True)
    return MatrixFunction(2, "schrodinger", f=f, E=E, entries=entries, bounded_flags=flags,
                          name=f"S[{f.name},E={E}]")


def _g_entries(f: PeriodicFunction, E: float):
    Eq = Fraction(E)
    mE = mpmath.mpf(E)

    def g00(v):
        if _isinf(v):
            return Fraction(1) if v < 0 else Fraction(-1)
        if isinstance(v, Fraction):
            return (Eq - v) / (1 + abs(v))
        return (mE - v) / (1 + abs(v))

    def g00_np(y):
        with np.errstate(invalid="ignore"):
            r = (E - y) / (1.0 + np.abs(y))
        return np.where(np.isinf(y), -np.sign(y), r)

    def g00_mp(y):
        if mpmath.isinf(y):
            return -mpmath.sign(y)
        return (mE - y) / (1 + abs(y))

    def inv(sign):
        def psi(v):
            if _isinf(v):
                return Fraction(0)
            if isinstance(v, Fraction):
                return sign / (1 + abs(v))
            return sign / (1 + abs(v))

        def psi_np(y):
            return np.where(np.isinf(y), 0.0, sign / (1.0 + np.abs(y)))

        def psi_mp(y):
            if mpmath.isinf(y):
                return mpmath.mpf(0)
            return sign / (1 + abs(y))

        return psi, psi_np, psi_mp

    e00 = compose_unimodal(f, g00, g00_np, g00_mp, f"({E}-{f.name})/F")
    e01 = compose_unimodal(f, *inv(-1), f"-1/F")
    e10 = compose_unimodal(f, *inv(1), f"1/F")
    return ((e00, e01), (e10, _entry_const(0)))


def factorize(f: PeriodicFunction):
    """``S^{f,E} = F G(., E)`` with ``F = 1 + |f|`` independent of E.

    Returns
    -------
    F : PeriodicFunction
    G_builder : callable
        ``E -> MatrixFunction`` for ``G(x, E) = S^{f,E}(x) / F(x)``; at
        ``f = -inf`` the limit ``G = [[1, 0], [0, 0]]`` is used.
    """
    F = one_plus_abs(f)

    def G_builder(E) -> MatrixFunction:
        E = float(E)
        entries = _g_entries(f, E)
        flags = []
        for row in entries:
            for e in row:
                v = total_variation(e)
                flags.append(bool(v.exact_flag and not _isinf(v.lower)))
        return MatrixFunction(2, "factorized", f=f, E=E, entries=entries,
                              bounded_flags=tuple(flags), name=f"G[{f.name},E={E}]")

    return F, G_builder


def constant_matrix(m) -> MatrixFunction:
    m = np.asarray(m, dtype=float)
    return MatrixFunction(m.shape[0], "constant", const=tuple(map(tuple, m.tolist())),
                          bounded_flags=(True,) * m.size, name="const")


# --------------------------------------------------------------------------
# orbits and products
# --------------------------------------------------------------------------

def _stand_in_index(cf: ContinuedFraction, n_max: int, tol) -> int:
    """Smallest convergent index with ``n_max |alpha - p/q| <= tol``."""
    tol = Fraction(tol)
    for k in range(1, cf.depth + 1):
        if n_max * cf.approximation_error(k) <= tol:
            return k
    if n_max * cf.approximation_error(cf.depth) > Fraction(1, 10 ** 6):
        raise InsufficientDepth(f"depth {cf.depth} cannot place {n_max} orbit points")
    return cf.depth


def orbit_offsets(cf: ContinuedFraction, n: int, start: int = 0, stride: int = 1,
                  tol=Fraction(1, 2 ** 60)) -> np.ndarray:
    """Float ``{(start + j*stride) alpha}``, ``j < n``, exact up to final rounding.

    The residues ``(i p_K) mod q_K`` are computed in integers, so there is
    no drift with ``j``; the stand-in error is at most ``tol``.
    """
    n_max = max(abs(start), abs(start + (n - 1) * stride), 1)
    K = _stand_in_index(cf, n_max, tol)
    p, q = cf.convergents[K]
    out = np.empty(n)
    for j in range(n):
        r = ((start + j * stride) * p) % q
        out[j] = r / q
    return out


def orbit_phases_exact(x, cf: ContinuedFraction, n: int, start: int = 0) -> list:
    """Exact rational phases ``x + i p_K/q_K mod 1`` for ``i = start..start+n-1``."""
    x = Fraction(x)
    p, q = cf.convergents[cf.depth]
    return [(x + Fraction(i * p, q)) % 1 for i in range(start, start + n)]


@dataclass(frozen=True)
class ScaledProduct:
    """``exp(log_scale) * matrix`` with ``max |matrix_ij|`` in ``[1/2, 2]``."""

    matrix: object
    log_scale: object
    steps: int
    precision: int = 53

    def lognorm(self) -> float:
        if isinstance(self.matrix, np.ndarray):
            return float(self.log_scale) + math.log(opnorm(self.matrix))
        with mpmath.workprec(self.precision):
            return self.log_scale + mpmath.log(_opnorm_mp(self.matrix))

    def det(self):
        """Determinant of the represented product.

        Relative accuracy is about ``2^-precision * ||M||^2``: the scaled
        matrix is near-singular when the product grows.
        """
        m = self.matrix
        if isinstance(m, np.ndarray):
            return math.exp(2 * float(self.log_scale)) * (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
        with mpmath.workprec(self.precision):
            return mpmath.exp(2 * self.log_scale) * (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    def to_array(self) -> np.ndarray:
        m = self.matrix
        if not isinstance(m, np.ndarray):
            m = np.array(m.tolist(), dtype=float)
        return m * math.exp(float(self.log_scale))


def _check_singular(M: MatrixFunction, phases: np.ndarray, guard: float):
    pts = M.singular_points
    if not pts:
        return
    bad = np.zeros(phases.shape, dtype=bool)
    for s in pts:
        d = np.abs(np.mod(phases - float(s) + 0.5, 1.0) - 0.5)
        bad |= d <= guard
    if np.any(bad):
        idx = np.argwhere(bad)
        raise SingularPhase(f"{len(idx)} orbit points within {guard:g} of a singular point",
                            [tuple(int(v) for v in i) for i in idx[:20]])


def _renorm_mp(m, ls):
    mx = max(abs(m[i, j]) for i in range(m.rows) for j in range(m.cols))
    if mx == 0:
        return m, ls
    if mx > 2 or mx < mpmath.mpf(1) / 2:
        e = int(mpmath.floor(mpmath.log(mx, 2))) + 1
        m = m * mpmath.ldexp(1, -e)
        ls += e * mpmath.log(2)
    return m, ls


def product(M: MatrixFunction, x, cf: ContinuedFraction, n: int, precision: int = 53,
            guard: float = 1e-15, start: int = 0) -> ScaledProduct:
    """Scaled ``M_n(x) = M(x + (start+n-1) alpha) ... M(x + start alpha)``.

    Raises
    ------
    SingularPhase
        An orbit point lies within ``guard`` of a singular point.
    """
    if precision <= 53:
        offs = orbit_offsets(cf, n, start=start)
        phases = np.mod(float(Fraction(x)) + offs, 1.0)
        _check_singular(M, phases, guard)
        _, fin, ls = _chain(M, phases[None, :], np.array([n]))
        m = fin[0].reshape(2, 2) if M.N == 2 else fin[0]
        return ScaledProduct(m, float(ls[0]), n)
    with mpmath.workprec(precision):
        phases = orbit_phases_exact(x, cf, n, start)
        _check_singular(M, np.array([float(p) for p in phases]), guard)
        m = mpmath.eye(M.N)
        ls = mpmath.mpf(0)
        for ph in phases:
            m = M.eval_mp(mpmath.mpf(ph.numerator) / ph.denominator) * m
            m, ls = _renorm_mp(m, ls)
        return ScaledProduct(m, ls, n, precision)


def _chain(M: MatrixFunction, phases: np.ndarray, checkpoints: np.ndarray):
    """Log-norms at checkpoints for a batch of phase rows ``(P, n)``."""
    if M.N != 2:
        return _chain_nd(M, phases, checkpoints)
    if M.kind in ("schrodinger", "factorized"):
        v = M.f(phases)
        if M.kind == "factorized":
            if np.any(np.isinf(v)):
                a = M.eval_np(phases)
                return kernels.chain_generic(a[..., 0, 0], a[..., 0, 1], a[..., 1, 0],
                                             a[..., 1, 1], checkpoints)
            logF = np.cumsum(np.log1p(np.abs(v)), axis=1)
            out, fin, ls = kernels.chain_schrodinger(M.E - v, checkpoints)
            corr = np.zeros((phases.shape[0], len(checkpoints)))
            for i, c in enumerate(checkpoints):
                if c > 0:
                    corr[:, i] = logF[:, c - 1]
            total = logF[:, -1] if phases.shape[1] else np.zeros(phases.shape[0])
            return out - corr, fin, ls - total
        if np.any(np.isinf(v)):
            raise SingularPhase("f = -inf on the orbit", ())
        return kernels.chain_schrodinger(M.E - v, checkpoints)
    a = M.eval_np(phases)
    return kernels.chain_generic(a[..., 0, 0], a[..., 0, 1], a[..., 1, 0], a[..., 1, 1], checkpoints)


def _chain_nd(M, phases, checkpoints):
    P, n = phases.shape
    a = M.eval_np(phases)
    out = np.zeros((P, len(checkpoints)))
    fin = np.empty((P, M.N, M.N))
    ls_all = np.empty(P)
    for p in range(P):
        m = np.eye(M.N)
        ls = 0.0
        ci = 0
        while ci < len(checkpoints) and checkpoints[ci] == 0:
            ci += 1
        for j in range(n):
            m = a[p, j] @ m
            mx = np.max(np.abs(m))
            if mx > 2 or (0 < mx < 0.5):
                e = math.frexp(mx)[1]
                m = np.ldexp(m, -e)
                ls += e * math.log(2)
            while ci < len(checkpoints) and checkpoints[ci] == j + 1:
                out[p, ci] = ls + math.log(np.linalg.norm(m, 2))
                ci += 1
        fin[p] = m
        ls_all[p] = ls
    return out, fin.reshape(P, -1), ls_all


def log_norms(M: MatrixFunction, base_phases, cf: ContinuedFraction, checkpoints,
              stride: int = 1, guard: float = 1e-15) -> np.ndarray:
    """``log ||M_c(x)||`` for every base phase ``x`` and checkpoint ``c``.

    Returns an array of shape ``(len(base_phases), len(checkpoints))``.
    ``stride`` runs the cocycle over ``x -> x + stride*alpha``.
    """
    cps = np.asarray(sorted(int(c) for c in checkpoints), dtype=np.int64)
    n = int(cps[-1]) if len(cps) else 0
    offs = orbit_offsets(cf, max(n, 1), stride=stride)[:n]
    base = np.asarray(base_phases, dtype=float)
    phases = np.mod(base[:, None] + offs[None, :], 1.0)
    _check_singular(M, phases, guard)
    out, _, _ = _chain(M, phases, cps)
    return out


# --------------------------------------------------------------------------
# Lyapunov exponents
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LyapunovEstimate:
    """Phase average of ``(1/n) log ||M_n(x)||`` (an upper-biased proxy for L).

    ``monotone_chain`` lists ``(m, average)`` at ``m = n/4, n/2, n``;
    ``discrepancy`` is the float ``D*`` of the phase set.
    """

    value: float
    n_used: int
    phase_count: int
    per_phase_values: np.ndarray | None
    monotone_chain: tuple
    discrepancy: float

    @property
    def differenced(self) -> float:
        """``(log||M_n|| - log||M_{n/2}||) / (n/2)`` averaged over phases.

        Cancels the ``O(1/n)`` bias of the raw estimator for uniformly
        hyperbolic cocycles; reported alongside, not as the estimate.
        """
        (m1, a1), (m2, a2) = self.monotone_chain[-2], self.monotone_chain[-1]
        return (a2 * m2 - a1 * m1) / (m2 - m1)


def _phase_array(phases) -> np.ndarray:
    if isinstance(phases, PointSet):
        return phases.as_float()
    if isinstance(phases, int):
        return (np.arange(phases) + 0.5) / phases
    return np.asarray(phases, dtype=float)


def lyapunov(M: MatrixFunction, n: int, phases, cf: ContinuedFraction,
             keep_per_phase: bool = True) -> LyapunovEstimate:
    """``L-hat = mean_x (1/n) log ||M_n(x)||`` over the given base phases.

    ``phases`` is a :class:`PointSet`, an array, or a count (midpoint grid).
    """
    x = _phase_array(phases)
    chain = sorted({max(1, n // 4), max(1, n // 2), n})
    ln = log_norms(M, x, cf, chain)
    avgs = tuple((m, float(np.mean(ln[:, i])) / m) for i, m in enumerate(chain))
    per = ln[:, -1] / n if keep_per_phase else None
    return LyapunovEstimate(avgs[-1][1], n, len(x), per, avgs, star_discrepancy_float(x))


# --------------------------------------------------------------------------
# uniform upper bound
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformBoundConfig:
    """Measured block-decomposition ledger.

    ``C1`` bounds every ``g_m`` from above; ``C2`` is a sampled value of
    ``Var [g_{m0}]_A`` (a lower bound for the true variation);
    ``D_k`` is the uniform-in-x discrepancy bound ``2 D*`` of the stride-
    ``m0`` orbit at ``k = k0`` (translation at most doubles ``D*``).
    """

    epsilon: float
    m0: int
    A: float
    k0: int
    C1: float
    C2: float
    D_k: float
    L_hat: float
    mean_gap: float
    trunc_gap: float
    ledger: dict = field(default_factory=dict)

    @property
    def ledger_ok(self) -> bool:
        return all(self.ledger.values())


@dataclass(frozen=True)
class UniformBoundReport:
    config: UniformBoundConfig | None
    chain: tuple
    margins: tuple
    profile: np.ndarray
    L_hat: float
    epsilon: float

    @property
    def best_margin(self) -> float:
        return min(self.margins)

    @property
    def passed(self) -> bool:
        ok = self.best_margin <= self.epsilon
        return ok and (self.config is None or self.config.ledger_ok)


def _require_bounded(M: MatrixFunction):
    if not M.bounded_variation:
        raise UnboundedEntries(
            f"{M.name}: some entry is not of bounded variation; factorize first"
        )


def _doubling(n_max: int) -> list:
    out, m = [], 1
    while m <= n_max:
        out.append(m)
        m *= 2
    return out


def build_uniform_config(M: MatrixFunction, cf: ContinuedFraction, epsilon: float,
                         n_max: int = 2 ** 14, grid: int = 512, sup_grid: int = 2 ** 16,
                         var_grid: int = 4096, k_max: int = 2 ** 20, m0_max: int = 2 ** 10,
                         g_table=None) -> UniformBoundConfig:
    """Search ``m0`` over powers of two and measure the proof's constants.

    Conditions recorded in ``ledger``: ``A > C1``; mean of ``g_{m0}`` within
    ``eps/4`` of ``L-hat``; truncation gap ``<= eps/4``; ``D_k < eps/(4 C2)``
    for every tested ``k >= k0`` (up to ``k_max``); ``k0 > 4 C1/eps``.
    """
    _require_bounded(M)
    x = (np.arange(grid) + 0.5) / grid
    chain = _doubling(n_max)
    if g_table is None:
        g_table = log_norms(M, x, cf, chain) / np.array(chain)[None, :]
    means = g_table.mean(axis=0)
    L_hat = float(means.min())
    xs = (np.arange(sup_grid) + 0.5) / sup_grid
    mats = M.eval_np(xs)
    single = 0.5 * (np.hypot(mats[:, 0, 0] + mats[:, 1, 1], mats[:, 0, 1] - mats[:, 1, 0])
                    + np.hypot(mats[:, 0, 0] - mats[:, 1, 1], mats[:, 0, 1] + mats[:, 1, 0]))
    with np.errstate(divide="ignore"):
        C1 = float(max(np.max(np.log(single)), np.max(g_table)))
    best = None
    for i, m0 in enumerate(chain):
        if m0 > m0_max:
            break
        mean_gap = float(means[i] - L_hat)
        if mean_gap >= epsilon / 4 and best is not None:
            continue
        g = g_table[:, i]
        A = max(C1, 0.0) + 1.0
        while float(np.mean(np.maximum(-A - g, 0.0))) > epsilon / 4:
            A *= 2
        trunc_gap = float(np.mean(np.maximum(-A - g, 0.0)))
        xv = np.arange(var_grid) / var_grid
        gv = np.clip(log_norms(M, xv, cf, [m0])[:, 0] / m0, -A, A)
        C2 = float(np.sum(np.abs(np.diff(np.append(gv, gv[0])))))
        # uniform discrepancy of the stride-m0 orbit along k
        offs = orbit_offsets(cf, k_max, stride=m0)
        ks = _doubling(k_max)
        Dk = np.array([2 * star_discrepancy_float(offs[:k]) for k in ks])
        target = epsilon / (4 * C2) if C2 > 0 else math.inf
        k_min_c1 = math.floor(4 * C1 / epsilon) + 1 if C1 > 0 else 1
        k0 = None
        for idx in range(len(ks)):
            if ks[idx] >= k_min_c1 and np.all(Dk[idx:] < target):
                k0 = ks[idx]
                break
        ledger = {
            "A>C1": A > C1,
            "mean_gap<eps/4": mean_gap < epsilon / 4,
            "trunc_gap<=eps/4": trunc_gap <= epsilon / 4,
            "D_k<eps/(4C2)": k0 is not None,
            "k0>4C1/eps": k0 is not None and k0 > 4 * C1 / epsilon,
        }
        cfg = UniformBoundConfig(epsilon, m0, A, k0 or -1, C1, C2,
                                 float(Dk[ks.index(k0)]) if k0 else float(Dk[-1]),
                                 L_hat, mean_gap, trunc_gap, ledger)
        if cfg.ledger_ok:
            return cfg
        if best is None or (cfg.ledger["mean_gap<eps/4"] and not best.ledger["mean_gap<eps/4"]):
            best = cfg
    return best


def uniform_upper_margin(M: MatrixFunction, cfg: UniformBoundConfig | float, n: int, x_grid,
                         cf: ContinuedFraction) -> UniformBoundReport:
    """``max_x (1/m) log ||M_m(x)|| - L-hat`` along the doubling chain ``m <= n``.

    ``L-hat`` is the minimum over the chain of the phase means (the
    infimum structure of the Lyapunov exponent).  ``cfg`` may be a plain
    epsilon, in which case the ledger is built here.

    Raises
    ------
    UnboundedEntries
        If some entry of ``M`` is not of bounded variation.
    """
    _require_bounded(M)
    x = _phase_array(x_grid)
    chain = _doubling(n)
    g = log_norms(M, x, cf, chain) / np.array(chain)[None, :]
    if not isinstance(cfg, UniformBoundConfig):
        eps = float(cfg)
        cfg = build_uniform_config(M, cf, eps, n_max=n, grid=len(x), g_table=g) \
            if np.allclose(x, (np.arange(len(x)) + 0.5) / len(x)) else \
            build_uniform_config(M, cf, eps, n_max=n, grid=len(x))
    return _margin_report(g, chain, cfg, cfg.epsilon)


def _margin_report(g, chain, cfg, eps):
    means = g.mean(axis=0)
    L_hat = float(means.min())
    margins = tuple(float(np.max(g[:, i]) - L_hat) for i in range(len(chain)))
    return UniformBoundReport(cfg, tuple(chain), margins, g[:, -1], L_hat, eps)


def subadditive_uniform_margin(g: Callable, epsilon: float, n: int, x_grid) -> UniformBoundReport:
    """Margin for a user-supplied scalar cocycle ``g(m, x) = (1/m) g_m(x)``.

    Only the margin along the doubling chain is computed; the ledger is
    left to the caller (it depends on bounds only the caller knows).
    """
    x = _phase_array(x_grid)
    chain = _doubling(n)
    table = np.stack([np.asarray(g(m, x), dtype=float) for m in chain], axis=1)
    return _margin_report(table, chain, None, epsilon)
