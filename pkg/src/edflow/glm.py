"""Poisson regression with optional L1/L2/elastic-net penalties.

The fit maximizes the Poisson log-likelihood under a log link, minus the
penalty lam * (l1_ratio * ||b||_1 + (1 - l1_ratio)/2 * ||b||_2^2) with the
intercept unpenalized. Internally the likelihood term is scaled by 1/n
(the glmnet convention) so one lam grid is meaningful across sample sizes.

Solver: iteratively reweighted least squares with working response
z = eta + (y - mu)/mu and weights mu, each subproblem solved by cyclic
coordinate descent with soft-thresholding on the standardized design. A
step-halving guard keeps the penalized objective non-increasing across
outer iterations.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace

import numpy as np

from ._kernels import cd_gram_solve
from .features import FEATURE_ORDER_VERSION

PENALTIES = ("none", "lasso", "ridge", "elasticnet")

_ZERO_TARGET_EPS = 1e-8
_MU_FLOOR = 1e-10
_ETA_CLIP = 30.0


@dataclass(frozen=True)
class GlmSpec:
    penalty: str = "none"
    lam: float = 0.0
    l1_ratio: float = 0.5
    max_iter: int = 100
    tol: float = 1e-8

    def __post_init__(self):
        if self.penalty not in PENALTIES:
            raise ValueError(f"penalty must be one of {PENALTIES}, got {self.penalty!r}")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if not 0.0 <= self.l1_ratio <= 1.0:
            raise ValueError("l1_ratio must be in [0, 1]")
        if self.max_iter < 1 or self.tol <= 0:
            raise ValueError("max_iter must be >= 1 and tol > 0")

    def mix(self) -> tuple[float, float]:
        """(lam1, lam2): L1 and L2 penalty strengths implied by the spec."""
        if self.penalty == "none" or self.lam == 0.0:
            return 0.0, 0.0
        alpha = {"lasso": 1.0, "ridge": 0.0, "elasticnet": self.l1_ratio}[self.penalty]
        return self.lam * alpha, self.lam * (1.0 - alpha)


@dataclass
class GlmModel:
    intercept: float
    coefficients: np.ndarray
    spec: GlmSpec
    train_deviance: float
    n_iter: int
    converged: bool = True
    #: penalized objective after each IRLS iteration (diagnostic, not serialized)
    objective_path: np.ndarray | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "family": "glm",
                "spec": {
                    "penalty": self.spec.penalty,
                    "lambda": self.spec.lam,
                    "l1_ratio": self.spec.l1_ratio,
                    "max_iter": self.spec.max_iter,
                    "tol": self.spec.tol,
                },
                "intercept": self.intercept,
                "coefficients": [float(c) for c in self.coefficients],
                "feature_order_version": FEATURE_ORDER_VERSION,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GlmModel":
        doc = json.loads(text)
        if doc.get("family") != "glm":
            raise ValueError(f"not a glm document: family={doc.get('family')!r}")
        spec = GlmSpec(
            penalty=doc["spec"]["penalty"],
            lam=doc["spec"]["lambda"],
            l1_ratio=doc["spec"]["l1_ratio"],
            max_iter=doc["spec"]["max_iter"],
            tol=doc["spec"]["tol"],
        )
        return cls(
            intercept=doc["intercept"],
            coefficients=np.array(doc["coefficients"], dtype=float),
            spec=spec,
            train_deviance=float("nan"),
            n_iter=0,
        )


def poisson_deviance(y: np.ndarray, mu: np.ndarray) -> float:
    """2 * sum(y*log(y/mu) - (y - mu)), with the y=0 terms reducing to 2*mu."""
    mu = np.maximum(mu, _MU_FLOOR)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(y > 0, y * np.log(y / mu), 0.0)
    return float(2.0 * np.sum(term - (y - mu)))


def _penalized_objective(eta, y, beta, lam1, lam2) -> float:
    """mean(mu - y*eta) + penalties; the minimized objective up to a constant."""
    mu = np.exp(eta)
    return float(
        np.mean(mu - y * eta)
        + lam1 * np.abs(beta).sum()
        + lam2 / 2.0 * float(beta @ beta)
    )


class _Standardizer:
    def __init__(self, X: np.ndarray):
        self.mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0
        self.scale = scale

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale

    def destandardize(self, beta0: float, beta: np.ndarray) -> tuple[float, np.ndarray]:
        coef = beta / self.scale
        return beta0 - float(coef @ self.mean), coef


def _validate(X, y, spec):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise ValueError("X and y must be finite")
    if (y < 0).any():
        raise ValueError("y must be non-negative counts")
    if spec.penalty == "none" and X.shape[0] < X.shape[1] + 1:
        raise ValueError(
            f"unpenalized fit needs n >= p+1 = {X.shape[1] + 1}, got n = {X.shape[0]}"
        )
    return X, y


def fit(X, y, spec: GlmSpec = GlmSpec()) -> GlmModel:
    """Fit one Poisson GLM; see the module docstring for the objective."""
    X, y = _validate(X, y, spec)
    if float(y.sum()) == 0.0:
        warnings.warn("all-zero target: returning the boundary intercept-only model")
        return GlmModel(
            intercept=float(np.log(_ZERO_TARGET_EPS)),
            coefficients=np.zeros(X.shape[1]),
            spec=spec,
            train_deviance=poisson_deviance(y, np.full_like(y, _ZERO_TARGET_EPS)),
            n_iter=0,
            converged=True,
        )
    std = _Standardizer(X)
    Xs = np.asfortranarray(std.transform(X))
    state = _irls(Xs, y, spec)
    intercept, coef = std.destandardize(state["beta0"], state["beta"])
    if not state["converged"]:
        warnings.warn(
            f"IRLS did not converge in {spec.max_iter} iterations "
            f"(relative deviance change {state['last_change']:.2e})"
        )
    return GlmModel(
        intercept=intercept,
        coefficients=coef,
        spec=spec,
        train_deviance=state["deviance"],
        n_iter=state["n_iter"],
        converged=state["converged"],
        objective_path=state["objective_path"],
    )


def fit_path(X, y, spec: GlmSpec, lambdas) -> list[GlmModel]:
    """Fit one model per lam, sharing standardization and warm starts.

    lambdas are visited from largest to smallest (the cheap direction for
    warm starts); the returned list is aligned with the input order.
    """
    X, y = _validate(X, y, spec)
    std = _Standardizer(X)
    Xs = np.asfortranarray(std.transform(X))
    order = np.argsort(lambdas)[::-1]
    models: list[GlmModel | None] = [None] * len(lambdas)
    warm = None
    for idx in order:
        sub = replace(spec, lam=float(lambdas[idx]))
        state = _irls(Xs, y, sub, warm=warm)
        warm = (state["beta0"], state["beta"].copy())
        intercept, coef = std.destandardize(state["beta0"], state["beta"])
        models[idx] = GlmModel(
            intercept=intercept,
            coefficients=coef,
            spec=sub,
            train_deviance=state["deviance"],
            n_iter=state["n_iter"],
            converged=state["converged"],
        )
    return models


def _irls(Xs, y, spec, warm=None):
    n, p = Xs.shape
    lam1, lam2 = spec.mix()
    if warm is None:
        beta0 = float(np.log(max(y.mean(), _ZERO_TARGET_EPS)))
        beta = np.zeros(p)
    else:
        beta0, beta = warm[0], warm[1].copy()

    xw_buf = np.empty_like(Xs, order="F")
    eta = np.clip(beta0 + Xs @ beta, -_ETA_CLIP, _ETA_CLIP)
    objective = _penalized_objective(eta, y, beta, lam1, lam2)
    objective_path = [objective]
    deviance = poisson_deviance(y, np.exp(eta))
    converged = False
    last_change = np.inf
    it = 0

    for it in range(1, spec.max_iter + 1):
        mu = np.maximum(np.exp(eta), _MU_FLOOR)
        w = mu
        z = eta + (y - mu) / mu

        np.multiply(Xs, w[:, None], out=xw_buf)
        A = (xw_buf.T @ Xs) / n
        b = (Xs.T @ (w * z)) / n
        c = xw_buf.sum(axis=0) / n
        wbar = float(w.sum()) / n
        z0 = float(w @ z) / n

        prev_beta0, prev_beta = beta0, beta.copy()
        beta0, beta, _ = cd_gram_solve(
            A, b, c, wbar, z0, beta0, beta,
            lam1, lam2, 10_000, max(spec.tol * 1e-2, 1e-13),
        )

        # step-halve back toward the previous iterate if the penalized
        # objective rose (IRLS is not globally monotone for Poisson)
        stalled = False
        for _ in range(40):
            eta = np.clip(beta0 + Xs @ beta, -_ETA_CLIP, _ETA_CLIP)
            new_objective = _penalized_objective(eta, y, beta, lam1, lam2)
            if new_objective <= objective + 1e-14:
                break
            beta = 0.5 * (beta + prev_beta)
            beta0 = 0.5 * (beta0 + prev_beta0)
        else:
            beta0, beta = prev_beta0, prev_beta
            eta = np.clip(beta0 + Xs @ beta, -_ETA_CLIP, _ETA_CLIP)
            new_objective = objective
            stalled = True
        objective = new_objective
        objective_path.append(objective)

        new_deviance = poisson_deviance(y, np.exp(eta))
        # denominator floored at 1 so a perfect fit (deviance -> 0) converges
        last_change = abs(deviance - new_deviance) / max(abs(deviance), 1.0)
        deviance = new_deviance
        if stalled or last_change < spec.tol:
            converged = True
            break

    return {
        "beta0": beta0,
        "beta": beta,
        "deviance": deviance,
        "n_iter": it,
        "converged": converged,
        "last_change": last_change,
        "objective_path": np.array(objective_path),
    }


def predict(model: GlmModel, x) -> float:
    """Expected count exp(intercept + x . coefficients) for one feature vector."""
    x = np.asarray(x, dtype=float)
    eta = model.intercept + float(x @ model.coefficients)
    if not np.isfinite(eta):
        raise ValueError("non-finite linear predictor")
    return float(np.exp(eta))


def predict_matrix(model: GlmModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    eta = model.intercept + X @ model.coefficients
    if not np.isfinite(eta).all():
        raise ValueError("non-finite linear predictor")
    return np.exp(eta)
