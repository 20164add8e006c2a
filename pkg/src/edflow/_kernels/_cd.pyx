# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cyclic coordinate descent on the IRLS Gram system.

Mirrors py_cd.cd_gram_solve; see that module for the objective.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def cd_gram_solve(cnp.ndarray[cnp.float64_t, ndim=2] A,
                  cnp.ndarray[cnp.float64_t, ndim=1] b,
                  cnp.ndarray[cnp.float64_t, ndim=1] c,
                  double wbar, double z0,
                  double beta0,
                  cnp.ndarray[cnp.float64_t, ndim=1] beta,
                  double lam1, double lam2,
                  int max_passes, double tol):
    cdef int p = beta.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] q_arr = A @ beta

    cdef double[:, ::1] Av = np.ascontiguousarray(A)
    cdef double[::1] bv = b
    cdef double[::1] cv = c
    cdef double[::1] betav = beta
    cdef double[::1] qv = q_arr

    cdef int sweep, j, k
    cdef double delta, denom, rho, target, d, new_beta0, cdotb

    for sweep in range(1, max_passes + 1):
        delta = 0.0
        for j in range(p):
            denom = Av[j, j] + lam2
            if denom <= 0.0:
                target = 0.0
            else:
                rho = bv[j] - cv[j] * beta0 - qv[j] + Av[j, j] * betav[j]
                if rho > lam1:
                    target = (rho - lam1) / denom
                elif rho < -lam1:
                    target = (rho + lam1) / denom
                else:
                    target = 0.0
            d = target - betav[j]
            if d != 0.0:
                for k in range(p):
                    qv[k] += Av[k, j] * d
                betav[j] = target
                if d < 0.0:
                    d = -d
                if d > delta:
                    delta = d
        cdotb = 0.0
        for k in range(p):
            cdotb += cv[k] * betav[k]
        new_beta0 = (z0 - cdotb) / wbar
        d = new_beta0 - beta0
        if d < 0.0:
            d = -d
        if d > delta:
            delta = d
        beta0 = new_beta0
        if delta < tol:
            return beta0, beta, sweep
    return beta0, beta, max_passes
