"""Logistic regression by iteratively reweighted least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..errors import FitError, ParameterError
from ..synthdata import expit

MAX_ITER = 50
COEF_TOL = 1e-8
SEPARATION_BOUND = 30.0
RIDGE_SCALE = 1e-8
COND_LIMIT = 1e12


@dataclass(frozen=True)
class LogisticFit:
    coef: NDArray            # intercept first
    probs: NDArray
    converged: bool
    separated: bool
    n_iter: int
    loglik_path: tuple

    @property
    def flagged(self) -> bool:
        return self.separated or not self.converged

    def predict(self, F: NDArray) -> NDArray:
        F = np.asarray(F, dtype=float).reshape(len(F), -1)
        return expit(self.coef[0] + F @ self.coef[1:])


def _loglik(eta: NDArray, A: NDArray) -> float:
    # sum A*eta - log(1 + e^eta), stable
    return float(np.sum(A * eta - np.logaddexp(0.0, eta)))


def ridge_solve(G: NDArray, r: NDArray) -> NDArray:
    """Solve G x = r, adding 1e-8 * trace/q to the diagonal if G is near-singular."""
    q = G.shape[0]
    if np.linalg.cond(G) > COND_LIMIT:
        G = G + np.eye(q) * RIDGE_SCALE * max(np.trace(G), 1.0) / q
    try:
        return np.linalg.solve(G, r)
    except np.linalg.LinAlgError as exc:
        raise FitError(f"weighted Gram matrix is singular after ridge: {exc}") from exc


def fit_logistic(F: NDArray, A: NDArray, max_iter: int = MAX_ITER, tol: float = COEF_TOL) -> LogisticFit:
    """Maximum-likelihood logistic regression of A on F with an intercept.

    Newton/IRLS steps are halved whenever the log-likelihood would drop, so
    the log-likelihood path is non-decreasing. Separation (no convergence and
    a coefficient beyond +-30) is flagged, not raised.
    """
    A = np.asarray(A, dtype=float)
    F = np.asarray(F, dtype=float).reshape(len(A), -1)
    n = len(A)
    if n == 0 or A.min() == A.max():
        raise ParameterError("logistic fit needs both treatment arms")
    D = np.column_stack([np.ones(n), F])
    coef = np.zeros(D.shape[1])
    coef[0] = np.log(A.mean() / (1.0 - A.mean()))
    eta = D @ coef
    ll = _loglik(eta, A)
    path = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = expit(eta)
        w = p * (1.0 - p)
        step = ridge_solve(D.T @ (D * w[:, None]), D.T @ (A - p))
        t = 1.0
        while True:
            cand = coef + t * step
            eta_c = D @ cand
            ll_c = _loglik(eta_c, A)
            if ll_c >= ll - 1e-12 * abs(ll) or t < 1e-10:
                break
            t *= 0.5
        change = np.max(np.abs(cand - coef))
        if ll_c >= ll:
            coef, eta, ll = cand, eta_c, ll_c
        path.append(ll)
        if change < tol:
            converged = True
            break
    probs = expit(eta)
    # separation often "converges" on a flat likelihood with saturated fits
    saturated = bool(np.any(np.minimum(probs, 1.0 - probs) < 1e-10))
    separated = bool(np.any(np.abs(coef) > SEPARATION_BOUND)) and (saturated or not converged)
    return LogisticFit(coef, probs, converged, separated, it, tuple(path))
