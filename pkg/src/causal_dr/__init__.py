"""Doubly robust and weighting estimators of average treatment effects.

Typical use::

    from causal_dr import DgpParams, make_dataset, PsLearner, fit_propensity
    from causal_dr import build_ps_features, fit_outcome, estimate_aipw

    data = make_dataset(200, DgpParams(rho=0.2), seed=1)
    ps = fit_propensity(build_ps_features(data.X, "correct"), data.A, PsLearner("LR"))
    preds = fit_outcome(data.X, data.A, data.Y, "correct")
    estimate_aipw(data.Y, data.A, ps, preds)
"""

from .errors import (
    CausalDRError, ContractError, DataError, DegenerateDesignError, FitError, ParameterError,
)
from .estimators import (
    EffectEstimate, Method, estimate_aipw, estimate_ipw, estimate_rsm, wald_interval,
)
from .outcome import (
    PotentialPredictions, build_outcome_features, fit_ols, fit_outcome, predict_potentials,
)
from .psmodels import (
    LearnerKind, PropensityFit, PsLearner, Regime, build_ps_features, default_learners,
    fit_lda, fit_logistic, fit_propensity, fit_random_forest, fit_svm, truncate,
)
from .realdata import AnalysisSpec, analyze, load_csv, prepare, standardize, test_hypothesis
from .simharness import ScenarioSpec, run_grid, run_replicate, run_scenario
from .synthdata import DgpParams, Dataset, gen_covariates, gen_outcome, gen_treatment, make_dataset

__version__ = "0.1.0"
