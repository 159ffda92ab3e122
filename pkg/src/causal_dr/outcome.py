"""Linear outcome regression and potential-outcome predictions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import FitError, ParameterError
from .psmodels.features import Regime

# zero-based covariate columns kept by each regime (X6, X7 dropped when misspecified)
OUTCOME_COLUMNS = {
    Regime.CORRECT: (0, 1, 2, 3, 4, 5, 6, 7, 8),
    Regime.MISSPECIFIED: (0, 1, 2, 3, 4, 7, 8),
}
RIDGE_SCALE = 1e-10


def _columns(X: NDArray, regime) -> tuple:
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != 9:
        raise ParameterError(f"expected n x 9 covariates, got shape {X.shape}")
    return OUTCOME_COLUMNS[Regime.parse(regime)]


def build_outcome_features(X: NDArray, A: NDArray, regime: Regime | str) -> NDArray:
    """Columns: intercept, A, then the regime's covariates in index order."""
    cols = _columns(X, regime)
    X = np.asarray(X, dtype=float)
    A = np.asarray(A, dtype=float)
    if A.shape != (X.shape[0],):
        raise ParameterError("A must be a vector with one entry per row of X")
    return np.column_stack([np.ones(len(A)), A, X[:, list(cols)]])


def design_with_treatment(Z: NDArray, A: NDArray) -> NDArray:
    """Generic design for arbitrary covariate matrices: intercept, A, Z."""
    Z = np.asarray(Z, dtype=float).reshape(len(A), -1)
    return np.column_stack([np.ones(len(A)), np.asarray(A, dtype=float), Z])


@dataclass(frozen=True)
class OlsFit:
    coef: NDArray
    se: NDArray
    sigma2: float
    ridged: bool


def fit_ols_full(D: NDArray, Y: NDArray) -> OlsFit:
    """Least squares via a thin QR factorization; conventional coefficient SEs.

    A rank-deficient design falls back to the normal equations with
    ``1e-10 * trace / k`` added to the diagonal.
    """
    D = np.asarray(D, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n, k = D.shape
    if n <= k:
        raise ParameterError(f"need more rows than columns, got {n} x {k}")
    Q, R = np.linalg.qr(D)
    diag = np.abs(np.diag(R))
    ridged = bool(diag.min() <= 1e-10 * max(diag.max(), 1.0))
    if not ridged:
        coef = np.linalg.solve(R, Q.T @ Y)
        Rinv = np.linalg.inv(R)
        XtX_inv = Rinv @ Rinv.T
    else:
        G = D.T @ D
        G = G + np.eye(k) * RIDGE_SCALE * max(np.trace(G), 1.0) / k
        try:
            XtX_inv = np.linalg.inv(G)
        except np.linalg.LinAlgError as exc:
            raise FitError(f"outcome design is rank deficient: {exc}") from exc
        if not np.all(np.isfinite(XtX_inv)):
            raise FitError("outcome design is rank deficient")
        coef = XtX_inv @ (D.T @ Y)
    resid = Y - D @ coef
    sigma2 = float(resid @ resid / (n - k))
    se = np.sqrt(np.maximum(np.diag(XtX_inv), 0.0) * sigma2)
    return OlsFit(coef, se, sigma2, ridged)


def fit_ols(D: NDArray, Y: NDArray) -> NDArray:
    return fit_ols_full(D, Y).coef


@dataclass(frozen=True)
class PotentialPredictions:
    """Predicted outcomes with treatment forced to 1 (``mu1``) and to 0 (``mu0``)."""

    mu1: NDArray
    mu0: NDArray
    coef_tau: float
    coef_tau_se: float = float("nan")

    def __post_init__(self):
        mu1 = np.asarray(self.mu1, dtype=float)
        mu0 = np.asarray(self.mu0, dtype=float)
        if mu1.shape != mu0.shape or mu1.ndim != 1:
            raise ParameterError("mu1 and mu0 must be vectors of equal length")
        object.__setattr__(self, "mu1", mu1)
        object.__setattr__(self, "mu0", mu0)

    def at(self, A: NDArray) -> NDArray:
        """Prediction at the observed treatment."""
        A = np.asarray(A, dtype=float)
        return A * self.mu1 + (1 - A) * self.mu0


def predict_from_design(coef: NDArray, D_treated: NDArray, D_control: NDArray, se: float = float("nan")) -> PotentialPredictions:
    coef = np.asarray(coef, dtype=float)
    if coef.shape != (D_treated.shape[1],):
        raise ParameterError(f"coef has length {coef.size}, design has {D_treated.shape[1]} columns")
    return PotentialPredictions(D_treated @ coef, D_control @ coef, float(coef[1]), se)


def predict_potentials(coef: NDArray, X: NDArray, regime: Regime | str, se: float = float("nan")) -> PotentialPredictions:
    n = np.asarray(X).shape[0]
    D1 = build_outcome_features(X, np.ones(n), regime)
    D0 = build_outcome_features(X, np.zeros(n), regime)
    return predict_from_design(coef, D1, D0, se)


def fit_outcome(X: NDArray, A: NDArray, Y: NDArray, regime: Regime | str) -> PotentialPredictions:
    """Fit the regime's linear model and predict both potential outcomes."""
    fit = fit_ols_full(build_outcome_features(X, A, regime), Y)
    return predict_potentials(fit.coef, X, regime, float(fit.se[1]))
