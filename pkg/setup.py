"""Build script for the optional Cython kernels.

Set QPGORDON_NO_EXT=1 to skip compilation; the package then runs on the
pure-Python/numpy fallback in ``qpgordon._pycore``.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("QPGORDON_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "qpgordon._core",
                    ["src/qpgordon/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules)
