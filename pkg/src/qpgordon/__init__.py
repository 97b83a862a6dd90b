"""Finite-scale verification of the arithmetic Gordon criterion.

Quasiperiodic Schrodinger operators
``(H(x) psi)(n) = psi(n+1) + psi(n-1) + f(x + n alpha) psi(n)``
are studied through certified continued fractions (:mod:`.contfrac`),
periodic functions of bounded or semi-bounded variation
(:mod:`.periodic_fn`), exact star discrepancies (:mod:`.discrepancy`),
scaled cocycle products and Lyapunov exponents (:mod:`.cocycle`), the
repetition/telescoping checks of Gordon's lemma (:mod:`.gordon`) and
finite-box spectra (:mod:`.spectrum`).  :mod:`.cli` ties them together.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("qpgordon")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.1.0"

from .errors import QPGordonError  # noqa: E402
from .kernels import BACKEND  # noqa: E402

__all__ = ["__version__", "BACKEND", "QPGordonError"]
