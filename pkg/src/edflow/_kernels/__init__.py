"""Backend selection for the hot kernels.

The compiled Cython extensions are preferred; the numpy fallbacks keep the
package functional (and the algorithms readable) when they are missing.
Set EDFLOW_PURE_PYTHON=1 to force the fallback, e.g. for benchmarking.
"""

from __future__ import annotations

import os

from . import py_cd, py_tree

if os.environ.get("EDFLOW_PURE_PYTHON"):
    BACKEND = "python"
    build_tree = py_tree.build_tree
    cd_gram_solve = py_cd.cd_gram_solve
else:
    try:
        from ._cd import cd_gram_solve
        from ._tree import build_tree

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - build-environment dependent
        BACKEND = "python"
        build_tree = py_tree.build_tree
        cd_gram_solve = py_cd.cd_gram_solve

__all__ = ["BACKEND", "build_tree", "cd_gram_solve", "py_cd", "py_tree"]
