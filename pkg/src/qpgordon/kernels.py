"""Kernel backend selection.

The compiled extension ``qpgordon._core`` is used when it imports and the
environment variable ``QPGORDON_PURE_PYTHON`` is unset; otherwise the numpy
fallback :mod:`qpgordon._pycore` is used.  ``BACKEND`` names the choice.
"""
from __future__ import annotations

import os

from . import _pycore

BACKEND = "python"
_impl = _pycore
if not os.environ.get("QPGORDON_PURE_PYTHON"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pycore

chain_generic = _impl.chain_generic
chain_schrodinger = _impl.chain_schrodinger
sturm_counts = _impl.sturm_counts
bisect_eigenvalues = _impl.bisect_eigenvalues
tridiag_solve = _impl.tridiag_solve
star_discrepancy_sorted = _impl.star_discrepancy_sorted

__all__ = [
    "BACKEND",
    "chain_generic",
    "chain_schrodinger",
    "sturm_counts",
    "bisect_eigenvalues",
    "tridiag_solve",
    "star_discrepancy_sorted",
]
