"""Build script for the optional compiled kernels.

The package works without the extensions (a numpy fallback is selected at
import time), so a failed compile downgrades to a pure-Python install
instead of aborting.
"""

import numpy
from setuptools import Extension, setup

extensions = [
    Extension(
        name="edflow._kernels._tree",
        sources=["src/edflow/_kernels/_tree.pyx"],
    ),
    Extension(
        name="edflow._kernels._cd",
        sources=["src/edflow/_kernels/_cd.pyx"],
    ),
]

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"edflow: skipping compiled kernels ({exc}); pure-Python fallback will be used")
    ext_modules = []

setup(ext_modules=ext_modules, include_dirs=[numpy.get_include()])
