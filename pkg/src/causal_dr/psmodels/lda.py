"""Two-class linear discriminant analysis with a pooled covariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..errors import FitError, ParameterError
from ..synthdata import expit
from .logistic import COND_LIMIT, RIDGE_SCALE


@dataclass(frozen=True)
class LdaFit:
    mean0: NDArray
    mean1: NDArray
    cov: NDArray
    prior1: float
    ridged: bool

    def log_odds(self, F: NDArray) -> NDArray:
        F = np.asarray(F, dtype=float).reshape(len(F), -1)
        if F.shape[1] == 0:
            return np.full(len(F), np.log(self.prior1 / (1 - self.prior1)))
        sol = np.linalg.solve(self.cov, self.mean1 - self.mean0)
        centre = 0.5 * (self.mean0 + self.mean1)
        return (F - centre) @ sol + np.log(self.prior1 / (1.0 - self.prior1))

    def predict(self, F: NDArray) -> NDArray:
        return expit(self.log_odds(F))


def fit_lda_model(F: NDArray, A: NDArray) -> LdaFit:
    """Class means, pooled within-class covariance (divisor n - 2), empirical priors."""
    A = np.asarray(A, dtype=float)
    F = np.asarray(F, dtype=float).reshape(len(A), -1)
    t = A == 1
    n1, n0 = int(t.sum()), int((~t).sum())
    if n1 < 2 or n0 < 2:
        raise ParameterError(f"LDA needs >= 2 rows per arm, got {n0}/{n1}")
    m1 = F[t].mean(axis=0)
    m0 = F[~t].mean(axis=0)
    R = np.vstack([F[t] - m1, F[~t] - m0])
    q = F.shape[1]
    cov = R.T @ R / (n1 + n0 - 2)
    ridged = False
    if q and np.linalg.cond(cov) > COND_LIMIT:
        cov = cov + np.eye(q) * RIDGE_SCALE * max(np.trace(cov), 1.0) / q
        ridged = True
        if np.linalg.cond(cov) > 1.0 / np.finfo(float).eps:
            raise FitError("pooled covariance is singular after ridge")
    return LdaFit(m0, m1, cov, n1 / (n1 + n0), ridged)


def fit_lda(F: NDArray, A: NDArray) -> NDArray:
    """In-sample posterior P(A = 1 | F)."""
    return fit_lda_model(F, A).predict(F)
