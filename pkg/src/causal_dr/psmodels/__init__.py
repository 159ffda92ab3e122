"""Propensity-score learners and truncation.

Four learners are available (LR, RF, LDA, SVM), all implemented in this
package. Every learner returns in-sample treatment probabilities, which are
clamped to ``[0.025, 0.975]`` before they reach an estimator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Mapping

import numpy as np
from numpy.typing import NDArray

from ..errors import ParameterError
from .features import PS_INTERACTIONS, PS_KEPT_COLUMNS, Regime, build_ps_features
from .forest import forest_probabilities
from .lda import LdaFit, fit_lda, fit_lda_model
from .logistic import LogisticFit, fit_logistic
from .svm import SvmFit, fit_svm, fit_svm_model

LOWER_DEFAULT = 0.025
UPPER_DEFAULT = 0.975


class LearnerKind(str, Enum):
    LR = "LR"
    RF = "RF"
    LDA = "LDA"
    SVM = "SVM"

    @classmethod
    def parse(cls, value) -> "LearnerKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ParameterError(f"unknown PS learner {value!r}; expected one of LR, RF, LDA, SVM") from None


_DEFAULT_HYPER = {
    LearnerKind.LR: {},
    LearnerKind.LDA: {},
    LearnerKind.RF: {"n_trees": 500, "mtry": None, "min_node_size": 5, "oob": True},
    LearnerKind.SVM: {"cost": 1.0, "kernel": "rbf", "gamma": None, "tol": 1e-3, "max_iter": 100_000},
}


def _check_hyper(kind: LearnerKind, hyper: dict) -> None:
    unknown = set(hyper) - set(_DEFAULT_HYPER[kind])
    if unknown:
        raise ParameterError(f"unknown {kind.value} hyperparameters: {sorted(unknown)}")
    if kind is LearnerKind.RF:
        if int(hyper["n_trees"]) < 1:
            raise ParameterError("RF n_trees must be >= 1")
        if int(hyper["min_node_size"]) < 1:
            raise ParameterError("RF min_node_size must be >= 1")
        if hyper["mtry"] is not None and int(hyper["mtry"]) < 1:
            raise ParameterError("RF mtry must be >= 1")
    if kind is LearnerKind.SVM:
        if float(hyper["cost"]) <= 0:
            raise ParameterError("SVM cost must be > 0")
        if hyper["kernel"] not in ("rbf", "linear"):
            raise ParameterError(f"SVM kernel must be rbf or linear, got {hyper['kernel']!r}")
        if hyper["gamma"] is not None and float(hyper["gamma"]) <= 0:
            raise ParameterError("SVM gamma must be > 0")


@dataclass(frozen=True)
class PsLearner:
    """A learner kind plus its validated hyperparameters."""

    kind: LearnerKind
    hyperparams: Mapping = field(default_factory=dict)

    def __post_init__(self):
        kind = LearnerKind.parse(self.kind)
        merged = dict(_DEFAULT_HYPER[kind])
        merged.update(dict(self.hyperparams))
        _check_hyper(kind, merged)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "hyperparams", MappingProxyType(merged))

    @property
    def name(self) -> str:
        return self.kind.value

    def __reduce__(self):
        # mappingproxy does not pickle; rebuild from a plain dict in worker processes
        return (PsLearner, (self.kind, dict(self.hyperparams)))

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.hyperparams.items()))))

    def __eq__(self, other):
        return (
            isinstance(other, PsLearner)
            and self.kind is other.kind
            and dict(self.hyperparams) == dict(other.hyperparams)
        )


def default_learners() -> list[PsLearner]:
    return [PsLearner(k) for k in (LearnerKind.LR, LearnerKind.RF, LearnerKind.LDA, LearnerKind.SVM)]


@dataclass(frozen=True)
class PropensityFit:
    scores: NDArray
    learner: PsLearner | None = None
    lower: float = LOWER_DEFAULT
    upper: float = UPPER_DEFAULT
    flagged: bool = False

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        if not self.lower < self.upper:
            raise ParameterError("truncation bounds need lower < upper")
        if np.any(scores < self.lower) or np.any(scores > self.upper):
            raise ParameterError("PropensityFit scores must lie inside the truncation bounds")
        object.__setattr__(self, "scores", scores)


def truncate(scores, lower: float = LOWER_DEFAULT, upper: float = UPPER_DEFAULT) -> NDArray:
    """Clamp scores elementwise to ``[lower, upper]``."""
    if not 0 < lower < upper < 1:
        raise ParameterError(f"need 0 < lower < upper < 1, got {lower}, {upper}")
    return np.clip(np.asarray(scores, dtype=float), lower, upper)


def fit_random_forest(F: NDArray, A: NDArray, seed: int, **hyper) -> NDArray:
    """Forest vote shares for the training rows (out-of-bag by default)."""
    h = dict(_DEFAULT_HYPER[LearnerKind.RF])
    h.update(hyper)
    return forest_probabilities(F, A, int(seed), **h)


def raw_scores(F: NDArray, A: NDArray, learner: PsLearner, seed=None) -> tuple[NDArray, bool]:
    """Untruncated in-sample probabilities and a flag for a troubled fit."""
    h = dict(learner.hyperparams)
    kind = learner.kind
    if kind is LearnerKind.LR:
        fit = fit_logistic(F, A)
        return fit.probs, fit.flagged
    if kind is LearnerKind.LDA:
        return fit_lda(F, A), False
    if kind is LearnerKind.RF:
        if seed is None:
            raise ParameterError("RF needs a seed")
        return forest_probabilities(F, A, int(seed), **h), False
    fit = fit_svm_model(F, A, **h)
    return fit.predict(F), fit.flagged


def fit_propensity(
    F: NDArray,
    A: NDArray,
    learner: PsLearner,
    seed=None,
    lower: float = LOWER_DEFAULT,
    upper: float = UPPER_DEFAULT,
) -> PropensityFit:
    """Fit ``learner`` on (F, A) and return truncated in-sample scores."""
    probs, flagged = raw_scores(F, A, learner, seed)
    return PropensityFit(truncate(probs, lower, upper), learner, lower, upper, flagged)


__all__ = [
    "LOWER_DEFAULT", "UPPER_DEFAULT", "LearnerKind", "PsLearner", "PropensityFit",
    "Regime", "build_ps_features", "PS_KEPT_COLUMNS", "PS_INTERACTIONS",
    "default_learners", "truncate", "raw_scores", "fit_propensity",
    "fit_logistic", "LogisticFit", "fit_lda", "fit_lda_model", "LdaFit",
    "forest_probabilities", "fit_random_forest", "fit_svm", "fit_svm_model", "SvmFit",
]
