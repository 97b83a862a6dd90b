"""The compiled kernels and the numpy fallback agree."""
import numpy as np
import pytest

from qpgordon import _pycore, kernels

_core = pytest.importorskip("qpgordon._core")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def _eq(a, b, tol):
    if isinstance(a, tuple):
        return all(_eq(x, y, tol) for x, y in zip(a, b))
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=tol, atol=tol)


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


def test_chain_schrodinger(rng):
    w = 3 - 4 * np.cos(2 * np.pi * rng.random((5, 300)))
    cps = np.array([1, 75, 150, 300])
    assert _eq(_core.chain_schrodinger(w, cps), _pycore.chain_schrodinger(w, cps), 1e-12)


def test_chain_generic(rng):
    a, b, c, d = rng.normal(size=(4, 4, 200))
    cps = np.array([50, 200])
    assert _eq(_core.chain_generic(a, b, c, d, cps), _pycore.chain_generic(a, b, c, d, cps), 1e-12)


def test_chain_matches_direct_product(rng):
    w = rng.normal(size=(1, 30))
    out = _pycore.chain_schrodinger(w, np.array([30]))[0]
    M = np.eye(2)
    for v in w[0]:
        M = np.array([[v, -1.0], [1.0, 0.0]]) @ M
    assert out[0, 0] == pytest.approx(np.log(np.linalg.norm(M, 2)), rel=1e-12)


def test_sturm_and_bisection(rng):
    diag = rng.normal(size=101)
    off2 = np.ones(100)
    E = np.linspace(-4, 4, 33)
    counts = _core.sturm_counts(diag, off2, E)
    assert np.array_equal(counts, _pycore.sturm_counts(diag, off2, E))
    H = np.diag(diag) + np.eye(101, k=1) + np.eye(101, k=-1)
    ev = np.linalg.eigvalsh(H)
    assert np.array_equal(counts, np.searchsorted(ev, E))
    got_c = _core.bisect_eigenvalues(diag, off2, -5, 5, 0, 101, 1e-14)
    got_p = _pycore.bisect_eigenvalues(diag, off2, -5, 5, 0, 101, 1e-14)
    assert np.allclose(got_c, ev, atol=1e-11)
    assert np.allclose(got_p, ev, atol=1e-11)


def test_tridiag_solve(rng):
    n = 64
    sub, sup = rng.normal(size=n - 1), rng.normal(size=n - 1)
    diag = 4 + rng.random(n)
    rhs = rng.normal(size=n)
    A = np.diag(diag) + np.diag(sub, -1) + np.diag(sup, 1)
    x = np.linalg.solve(A, rhs)
    assert np.allclose(_core.tridiag_solve(sub, diag, sup, rhs), x)
    assert np.allclose(_pycore.tridiag_solve(sub, diag, sup, rhs), x)


def test_star_discrepancy_sorted(rng):
    x = np.sort(rng.random(1000))
    assert _core.star_discrepancy_sorted(x) == pytest.approx(_pycore.star_discrepancy_sorted(x),
                                                             abs=1e-15)


def test_pure_python_switch(monkeypatch):
    import importlib
    monkeypatch.setenv("QPGORDON_PURE_PYTHON", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("QPGORDON_PURE_PYTHON")
        importlib.reload(kernels)


_SCRIPT = """
import json
from fractions import Fraction
from qpgordon import BACKEND
from qpgordon.cocycle import lyapunov, schrodinger
from qpgordon.contfrac import expand
from qpgordon.periodic_fn import almost_mathieu
from qpgordon.spectrum import build_box, eigenvalues
cf = expand("surd:(sqrt(5)-1)/2", 60)
f = almost_mathieu(2)
ev = eigenvalues(build_box(f, Fraction(3, 20), cf, 40)).tolist()
L = lyapunov(schrodinger(f, 0.3), 512, 16, cf).value
print(json.dumps({"backend": BACKEND, "ev": ev, "L": L}))
"""


def test_public_api_same_under_both_backends():
    import json
    import os
    import subprocess
    import sys

    runs = {}
    for flag in ("", "1"):
        env = dict(os.environ)
        env.pop("QPGORDON_PURE_PYTHON", None)
        if flag:
            env["QPGORDON_PURE_PYTHON"] = flag
        out = subprocess.run([sys.executable, "-c", _SCRIPT], env=env, capture_output=True,
                             text=True, check=True).stdout
        data = json.loads(out)
        runs[data["backend"]] = data
    assert set(runs) == {"cython", "python"}
    assert np.allclose(runs["cython"]["ev"], runs["python"]["ev"], atol=1e-11)
    assert runs["cython"]["L"] == pytest.approx(runs["python"]["L"], rel=1e-12)
