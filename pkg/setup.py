"""Build script: compiles the optional fast kernels.

The package works without the extension (a pure-Python/numpy fallback is
selected at import time), so a failed compile only costs speed.
"""

import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if not os.path.exists("src/planarloops/_fastpath.pyx"):
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "planarloops._fastpath",
                ["src/planarloops/_fastpath.pyx"],
                # -fcx-limited-range keeps complex multiplies inline instead
                # of the inf/nan-correct libgcc call; the kernels never feed
                # them infinities (the density guard raises first).
                extra_compile_args=["-O3", "-fcx-limited-range"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
