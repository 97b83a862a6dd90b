"""Finite-box diagnostics for ``H(x) psi(n) = psi(n+1) + psi(n-1) + f(x + n alpha) psi(n)``.

The operator is restricted to ``[-N, N]`` with Dirichlet boundary, which
gives a symmetric tridiagonal matrix with unit off-diagonal.  Eigenvalues
come from Sturm-count bisection, eigenvectors from inverse iteration, and
a regime scan compares ``L-hat(E)`` with ``beta-hat(alpha)``.  Box
eigenvalues are only candidate energies for the infinite operator.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .cocycle import lyapunov, schrodinger
from .contfrac import ContinuedFraction, beta_estimate
from .errors import DegeneracyWarning, NotAnEigenvalue
from .gordon import potential_sequence
from .periodic_fn import PeriodicFunction

__all__ = [
    "BoxOperator",
    "EigenPair",
    "RegimeRow",
    "build_box",
    "eigenvalues",
    "eigenvector",
    "decay_fit",
    "regime_beta",
    "regime_scan",
    "gordon_candidates",
]


@dataclass(frozen=True)
class BoxOperator:
    """``H`` on ``[-N, N]``: ``diagonal[i] = V(i - N)``, off-diagonal 1."""

    N: int
    diagonal: np.ndarray
    label: str = ""

    @property
    def size(self) -> int:
        return 2 * self.N + 1

    @property
    def off2(self) -> np.ndarray:
        return np.ones(self.size - 1)

    def bounds(self) -> tuple[float, float]:
        """Gershgorin enclosure of the spectrum."""
        return float(np.min(self.diagonal)) - 2.0, float(np.max(self.diagonal)) + 2.0

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diagonal * v
        out[1:] += v[:-1]
        out[:-1] += v[1:]
        return out

    def dense(self) -> np.ndarray:
        return np.diag(self.diagonal) + np.eye(self.size, k=1) + np.eye(self.size, k=-1)

    def count_below(self, E) -> np.ndarray:
        """Number of eigenvalues strictly below each energy (Sturm count)."""
        return kernels.sturm_counts(self.diagonal, self.off2, E)

    @classmethod
    def from_diagonal(cls, diagonal, label: str = "table") -> "BoxOperator":
        d = np.asarray(diagonal, dtype=float)
        if d.size % 2 == 0:
            raise ValueError("box size must be odd (2N+1)")
        if not np.all(np.isfinite(d)):
            raise ValueError("diagonal must be finite")
        return cls((d.size - 1) // 2, d, label)


@dataclass(frozen=True)
class EigenPair:
    """Normalised eigenvector with residual ``||H psi - E psi||`` and decay fit."""

    energy: float
    vector: np.ndarray
    residual: float
    decay_rate: float
    decay_goodness: float
    center: int


def build_box(f: PeriodicFunction, x, cf: ContinuedFraction, N: int,
              tol=Fraction(1, 10 ** 12)) -> BoxOperator:
    """Truncation of ``H(x)`` to ``[-N, N]``.

    Raises
    ------
    SingularPhase
        Some site of the box hits a singular point of ``f``.
    """
    V = potential_sequence(f, x, cf, -N, N, tol=tol, precision=53)
    return BoxOperator(N, V.as_float(), f"{f.name} x={x} alpha={cf.source} N={N}")


def eigenvalues(op: BoxOperator, interval: tuple | None = None, tol: float = 1e-12) -> np.ndarray:
    """All eigenvalues in ``[a, b)`` to absolute tolerance ``tol``.

    The count is exact: it is the difference of Sturm counts at the ends.
    """
    glo, ghi = op.bounds()
    a, b = (glo, ghi + 1e-9) if interval is None else (float(interval[0]), float(interval[1]))
    if not a < b:
        raise ValueError("interval must be nonempty")
    lo, hi = max(a, glo - 1.0), min(b, ghi + 1.0)
    if lo >= hi:
        return np.empty(0)
    k_lo, k_hi = (int(c) for c in op.count_below(np.array([a, b])))
    scale = max(1.0, abs(lo) + abs(hi))
    return kernels.bisect_eigenvalues(op.diagonal, op.off2, lo, hi, k_lo, k_hi, tol / scale)


def decay_fit(psi: np.ndarray, center: int | None = None, floor: float = 1e-300):
    """Least-squares decay rate of ``log |psi|`` against distance from the centre.

    The central 10% of sites (around the maximum) and the outer 5% at each
    end are excluded, as are entries below ``floor``.  When fewer than 8
    sites survive, the central exclusion is dropped.

    Returns
    -------
    rate, goodness : float
        ``rate = -slope`` and the coefficient of determination ``R^2``.
    """
    psi = np.abs(np.asarray(psi, dtype=float))
    n = psi.size
    c = int(np.argmax(psi)) if center is None else center
    idx = np.arange(n)
    dist = np.abs(idx - c)
    edge = (idx >= int(0.05 * n)) & (idx < n - int(0.05 * n))
    ok = edge & (psi > floor)
    sel = ok & (dist >= max(1, int(0.05 * n)))
    if sel.sum() < 8:
        sel = ok & (dist >= 1)
    if sel.sum() < 2:
        return 0.0, 0.0
    xs, ys = dist[sel].astype(float), np.log(psi[sel])
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    pred = A @ coef
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum((ys - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(-coef[0]), r2


def eigenvector(op: BoxOperator, E: float, tol: float = 1e-10, max_iter: int = 400,
                seed: int = 0) -> EigenPair:
    """Inverse iteration at the computed eigenvalue ``E``.

    Iterates until the residual meets ``1e-8 (2 + max|V|)`` and the vector
    is stable entrywise in relative terms (so that exponentially small
    tails are resolved down to the float floor).  The returned energy is
    the Rayleigh quotient.

    Raises
    ------
    NotAnEigenvalue
        The residual target is not reached.

    Warns
    -----
    DegeneracyWarning
        Another eigenvalue lies within ``max(1e-8, 100 tol)`` of ``E``.
    """
    target = 1e-8 * (2.0 + float(np.max(np.abs(op.diagonal))))
    width = max(1e-8, 100 * tol)
    near = op.count_below(np.array([E + width])) - op.count_below(np.array([E - width]))
    if int(near[0]) > 1:
        warnings.warn(f"{int(near[0])} eigenvalues within {width:g} of E={E}", DegeneracyWarning,
                      stacklevel=2)
    ones = op.off2
    shifted = op.diagonal - E
    b = np.random.default_rng(seed).standard_normal(op.size)
    b /= np.linalg.norm(b)
    best = (math.inf, b, E)
    for _ in range(max_iter):
        y = kernels.tridiag_solve(ones, shifted, ones, b)
        nrm = np.linalg.norm(y)
        if not np.isfinite(nrm) or nrm == 0:
            break
        y /= nrm
        if float(y @ b) < 0:
            y = -y
        rq = float(y @ op.matvec(y))
        res = float(np.linalg.norm(op.matvec(y) - rq * y))
        if res < best[0] or res <= target:
            best = (res, y, rq)
        # elementwise convergence resolves the tails down to the float floor
        settled = np.all(np.abs(y - b) <= 1e-6 * np.abs(y) + 1e-300)
        b = y
        if res <= target and settled:
            break
    res, y, rq = best
    if res > target:
        raise NotAnEigenvalue(f"residual {res:.3g} above {target:.3g} at E={E}")
    c = int(np.argmax(np.abs(y)))
    rate, good = decay_fit(y, c)
    return EigenPair(rq, y, res, rate, good, c - op.N)


# --------------------------------------------------------------------------
# regime scan
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RegimeRow:
    E: float
    L_hat: float
    beta_hat: float
    label: str
    nearest_eigenvalue: float
    distance: float


def regime_beta(cf: ContinuedFraction, q_floor: int = 8) -> float:
    """``max log(q_{k+1}) / q_k`` over indices with ``q_k >= q_floor``.

    Small denominators carry no information about the limsup and are
    skipped; when no index qualifies, all are used.
    """
    est = beta_estimate(cf)
    vals = [v for k, v in est.per_k_values if cf.q(k) >= q_floor]
    return max(vals) if vals else est.beta_hat


def regime_scan(f: PeriodicFunction, x, cf: ContinuedFraction, E_grid, N: int, n_lyap: int = 1024,
                phases=64, subcritical_tol: float = 0.05, jobs: int = 1, beta_hat: float | None = None
                ) -> tuple:
    """Label energies by ``L-hat(E)`` against ``beta-hat``.

    ``SUBCRITICAL`` when ``L-hat < subcritical_tol``, ``GORDON`` when
    ``L-hat < beta-hat``, ``LOCALIZED-SIDE`` otherwise.  Each row also
    records the nearest eigenvalue of the ``[-N, N]`` box.
    """
    beta = regime_beta(cf) if beta_hat is None else beta_hat
    op = build_box(f, x, cf, N)
    ev = eigenvalues(op)
    grid = [float(E) for E in E_grid]

    def one(E):
        return lyapunov(schrodinger(f, E), n_lyap, phases, cf, keep_per_phase=False).value

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            Ls = list(ex.map(one, grid))
    else:
        Ls = [one(E) for E in grid]
    rows = []
    for E, L in zip(grid, Ls):
        if L < subcritical_tol:
            label = "SUBCRITICAL"
        elif L < beta:
            label = "GORDON"
        else:
            label = "LOCALIZED-SIDE"
        i = int(np.argmin(np.abs(ev - E)))
        rows.append(RegimeRow(E, L, beta, label, float(ev[i]), float(abs(ev[i] - E))))
    return tuple(rows)


def gordon_candidates(rows) -> list:
    """Distinct box eigenvalues nearest to ``GORDON``-labelled grid energies."""
    return sorted({r.nearest_eigenvalue for r in rows if r.label == "GORDON"})
