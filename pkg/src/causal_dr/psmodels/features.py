"""Propensity-score design matrices under the correct and misspecified regimes."""

from __future__ import annotations

from enum import Enum

import numpy as np
from numpy.typing import NDArray

from ..errors import ParameterError


class Regime(str, Enum):
    CORRECT = "correct"
    MISSPECIFIED = "misspecified"

    @classmethod
    def parse(cls, value) -> "Regime":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ParameterError(f"unknown regime {value!r}; expected correct/misspecified") from None


# zero-based column indices
PS_KEPT_COLUMNS = (0, 1, 2, 3, 4, 5, 6)
PS_INTERACTIONS = ((0, 1), (0, 2))


def build_ps_features(X: NDArray, regime: Regime | str) -> NDArray:
    """Feature matrix handed to every propensity learner.

    Correct: X unchanged. Misspecified: X1..X7 followed by X1*X2 and X1*X3
    (X8 and X9 dropped), still nine columns.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != 9:
        raise ParameterError(f"expected n x 9 covariates, got shape {X.shape}")
    if Regime.parse(regime) is Regime.CORRECT:
        return X.copy()
    products = [X[:, j] * X[:, k] for j, k in PS_INTERACTIONS]
    return np.column_stack([X[:, list(PS_KEPT_COLUMNS)], *products])
