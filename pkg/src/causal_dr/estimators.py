"""Average treatment effect estimators: outcome regression, IPW and AIPW.

Identification rests on consistency/SUTVA, conditional exchangeability given
the covariates, and positivity. None of these can be checked here; they are
preconditions on the data the caller supplies.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import NDArray

from .errors import ContractError, ParameterError
from .outcome import PotentialPredictions
from .psmodels import PropensityFit

Z_975 = 1.959963984540054


class Method(str, Enum):
    RSM = "RSM"
    IPW = "IPW"
    AIPW = "AIPW"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ParameterError(f"unknown estimator {value!r}; expected RSM, IPW or AIPW") from None


@dataclass(frozen=True)
class EffectEstimate:
    tau_hat: float
    se: float
    ci_low: float
    ci_high: float
    method: Method
    ps_model: str | None = None
    flagged: bool = False

    def __post_init__(self):
        method = Method.parse(self.method)
        object.__setattr__(self, "method", method)
        if method is Method.RSM and self.ps_model is not None:
            raise ParameterError("RSM estimates carry no PS model")
        if method is not Method.RSM and self.ps_model is None:
            raise ParameterError(f"{method.value} estimates need a PS model")

    @property
    def width(self) -> float:
        return self.ci_high - self.ci_low


def wald_interval(tau_hat: float, se: float, level: float = 0.95) -> tuple[float, float]:
    """tau_hat -/+ z * se."""
    if se < 0:
        raise ParameterError(f"se must be >= 0, got {se}")
    if level == 0.95:
        z = Z_975
    else:
        from scipy.stats import norm
        z = float(norm.ppf(0.5 + level / 2))
    return tau_hat - z * se, tau_hat + z * se


def _scores(ps) -> tuple[NDArray, str | None]:
    if isinstance(ps, PropensityFit):
        e = ps.scores
        name = ps.learner.name if ps.learner is not None else "custom"
    else:
        e = np.asarray(ps, dtype=float)
        name = "custom"
    if np.any(~np.isfinite(e)) or np.any(e <= 0) or np.any(e >= 1):
        raise ContractError("propensity scores must lie strictly inside (0, 1)")
    return e, name


def _check_arms(Y, A, n_expected=None):
    Y = np.asarray(Y, dtype=float)
    A = np.asarray(A, dtype=float)
    if Y.shape != A.shape or Y.ndim != 1:
        raise ParameterError("Y and A must be vectors of equal length")
    if n_expected is not None and len(Y) != n_expected:
        raise ParameterError("inputs are not aligned")
    if not np.all((A == 0) | (A == 1)):
        raise ParameterError("A must be binary")
    if A.min() == A.max():
        raise ContractError("both treatment arms must be non-empty")
    return Y, A


def _from_contributions(psi: NDArray, method: Method, ps_model) -> EffectEstimate:
    n = len(psi)
    tau = float(np.mean(psi))
    se = float(np.std(psi, ddof=1) / np.sqrt(n))
    lo, hi = wald_interval(tau, se)
    return EffectEstimate(tau, se, lo, hi, method, ps_model)


def estimate_rsm(preds: PotentialPredictions, se: float | None = None) -> EffectEstimate:
    """Mean of mu1 - mu0. The SE is the OLS SE of the treatment coefficient."""
    if len(preds.mu1) < 2:
        raise ParameterError("RSM needs n >= 2")
    tau = float(np.mean(preds.mu1 - preds.mu0))
    if se is None:
        se = preds.coef_tau_se
    se = float(se) if np.isfinite(se) else 0.0
    lo, hi = wald_interval(tau, se)
    return EffectEstimate(tau, se, lo, hi, Method.RSM, None)


def ipw_contributions(Y, A, e) -> NDArray:
    return A * Y / e - (1 - A) * Y / (1 - e)


def estimate_ipw(Y, A, ps) -> EffectEstimate:
    """Horvitz-Thompson IPW with plug-in SE sd(summands)/sqrt(n)."""
    Y, A = _check_arms(Y, A)
    e, name = _scores(ps)
    if e.shape != Y.shape:
        raise ParameterError("scores are not aligned with Y")
    return _from_contributions(ipw_contributions(Y, A, e), Method.IPW, name)


def aipw_contributions(Y, A, e, mu1, mu0) -> NDArray:
    """Per-subject estimating function in the weighted-residual-free form:

    IPW summand minus (A - e) / (e (1 - e)) * ((1 - e) mu1 + e mu0).
    """
    ipw = A * Y / e - (1 - A) * Y / (1 - e)
    return ipw - (A - e) / (e * (1 - e)) * ((1 - e) * mu1 + e * mu0)


def aipw_contributions_canonical(Y, A, e, mu1, mu0) -> NDArray:
    """mu1 - mu0 + A (Y - mu1) / e - (1 - A) (Y - mu0) / (1 - e)."""
    return mu1 - mu0 + A * (Y - mu1) / e - (1 - A) * (Y - mu0) / (1 - e)


def estimate_aipw(Y, A, ps, preds: PotentialPredictions) -> EffectEstimate:
    Y, A = _check_arms(Y, A)
    e, name = _scores(ps)
    if e.shape != Y.shape or preds.mu1.shape != Y.shape:
        raise ParameterError("scores / predictions are not aligned with Y")
    psi = aipw_contributions(Y, A, e, preds.mu1, preds.mu0)
    return _from_contributions(psi, Method.AIPW, name)
