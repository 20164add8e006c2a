#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallbacks.

Times one boosting-tree build and one penalized coordinate-descent solve
on synthetic data shaped like the production problem (n rows x 54
features), then a small end-to-end fit of each model family.

Usage: python benchmarks/bench_kernels.py [--rows 130000] [--trees 20]
"""

import argparse
import time

import numpy as np

from edflow import gbm, glm
from edflow._kernels import py_cd, py_tree

try:
    from edflow._kernels import _cd, _tree

    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False


def timed(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_tree(n, p, max_depth):
    rng = np.random.default_rng(0)
    X = np.asfortranarray(rng.normal(size=(n, p)))
    y = rng.poisson(np.exp(1.5 + 0.3 * X[:, 0] - 0.2 * X[:, 1])).astype(float)
    order = np.empty((p, n), dtype=np.int32)
    vals = np.empty((p, n))
    for j in range(p):
        order[j] = np.argsort(X[:, j], kind="stable")
        vals[j] = X[order[j], j]
    residual = y - y.mean()

    rows = [("tree build", f"{n}x{p}, depth {max_depth}")]
    t_py, ref = timed(py_tree.build_tree, X, order, vals, residual, max_depth, 20, repeat=1)
    rows.append(("  python", f"{t_py * 1e3:10.1f} ms"))
    if HAVE_COMPILED:
        t_cy, fast = timed(_tree.build_tree, X, order, vals, residual, max_depth, 20)
        agree = np.array_equal(ref["feature"], fast["feature"])
        rows.append(("  cython", f"{t_cy * 1e3:10.1f} ms  ({t_py / t_cy:5.1f}x, same splits: {agree})"))
    return rows


def bench_cd(n, p):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(n, p))
    w = np.exp(rng.normal(1.0, 0.3, n))
    z = rng.normal(3.0, 1.0, n)
    A = (X * w[:, None]).T @ X / n
    b = X.T @ (w * z) / n
    c = (X * w[:, None]).sum(axis=0) / n
    wbar = float(w.sum()) / n
    z0 = float(w @ z) / n

    rows = [("coordinate descent", f"gram {p}x{p}, lam1=0.01")]
    t_py, _ = timed(lambda: py_cd.cd_gram_solve(A, b, c, wbar, z0, 0.0, np.zeros(p), 0.01, 0.005, 2000, 1e-12))
    rows.append(("  python", f"{t_py * 1e3:10.2f} ms"))
    if HAVE_COMPILED:
        t_cy, _ = timed(lambda: _cd.cd_gram_solve(A, b, c, wbar, z0, 0.0, np.zeros(p), 0.01, 0.005, 2000, 1e-12))
        rows.append(("  cython", f"{t_cy * 1e3:10.2f} ms  ({t_py / t_cy:5.1f}x)"))
    return rows


def bench_fits(n, p, trees):
    rng = np.random.default_rng(2)
    X = rng.normal(size=(n, p))
    y = rng.poisson(np.exp(1.5 + 0.3 * X[:, 0] - 0.2 * X[:, 1])).astype(float)

    rows = [("model fits", f"{n}x{p}")]
    spec = gbm.GbmSpec(n_trees=trees, max_depth=3)
    backends = [("python", py_tree.build_tree, py_cd.cd_gram_solve)]
    if HAVE_COMPILED:
        backends.append(("cython", _tree.build_tree, _cd.cd_gram_solve))
    for name, tree_fn, cd_fn in backends:
        # gbm/glm bind the kernel at import; rebind for the comparison
        gbm.build_tree = tree_fn
        glm.cd_gram_solve = cd_fn
        t0 = time.perf_counter()
        gbm.fit(X, y, spec, seed=0)
        t_gbm = time.perf_counter() - t0
        t0 = time.perf_counter()
        glm.fit(X, y, glm.GlmSpec("lasso", lam=0.01))
        t_glm = time.perf_counter() - t0
        rows.append((f"  {name}", f"gbm[{trees} trees] {t_gbm:7.2f} s   glm-lasso {t_glm:6.2f} s"))
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=130_000)
    ap.add_argument("--features", type=int, default=54)
    ap.add_argument("--depth", type=int, default=3)
    ap.add_argument("--trees", type=int, default=20)
    args = ap.parse_args()

    if not HAVE_COMPILED:
        print("compiled kernels unavailable; timing the fallback only\n")

    for rows in (
        bench_tree(args.rows, args.features, args.depth),
        bench_cd(args.rows, args.features),
        bench_fits(args.rows, args.features, args.trees),
    ):
        for left, right in rows:
            print(f"{left:<22}{right}")
        print()


if __name__ == "__main__":
    main()
