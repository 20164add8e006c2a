"""Pure-numpy cyclic coordinate descent; reference implementation of _cd.pyx.

Solves the penalized weighted least-squares subproblem of one IRLS step
in Gram form:

    min over (b0, beta) of
    (1/2n) sum_i w_i (z_i - b0 - x_i . beta)^2
      + lam1 * ||beta||_1 + lam2/2 * ||beta||_2^2

given A = X'WX/n, b = X'Wz/n, c = X'w/n, wbar = sum(w)/n, z0 = sum(wz)/n.
The intercept is unpenalized. Soft-thresholding update per coordinate,
running A@beta maintained incrementally.
"""

from __future__ import annotations

def cd_gram_solve(A, b, c, wbar, z0, beta0, beta, lam1, lam2, max_passes, tol):
    """Returns (beta0, beta, passes); beta is modified in place."""
    p = beta.shape[0]
    q = A @ beta
    for sweep in range(1, max_passes + 1):
        delta = 0.0
        for j in range(p):
            denom = A[j, j] + lam2
            if denom <= 0.0:
                target = 0.0
            else:
                rho = b[j] - c[j] * beta0 - q[j] + A[j, j] * beta[j]
                if rho > lam1:
                    target = (rho - lam1) / denom
                elif rho < -lam1:
                    target = (rho + lam1) / denom
                else:
                    target = 0.0
            d = target - beta[j]
            if d != 0.0:
                q += A[:, j] * d
                beta[j] = target
                delta = max(delta, abs(d))
        new_beta0 = (z0 - c @ beta) / wbar
        delta = max(delta, abs(new_beta0 - beta0))
        beta0 = new_beta0
        if delta < tol:
            return beta0, beta, sweep
    return beta0, beta, max_passes
