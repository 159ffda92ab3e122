"""Run configuration: TOML file plus command-line overrides.

Every key has a default equal to the benchmark settings except the seed,
which must be given explicitly. ``dump_config`` writes the fully resolved
configuration; parsing that text back yields an equal ``RunConfig``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ParameterError
from .estimators import Method
from .psmodels import LOWER_DEFAULT, UPPER_DEFAULT, LearnerKind, PsLearner
from .realdata import AnalysisSpec, Test
from .synthdata import BETA_DEFAULT, GAMMA_DEFAULT, TAU_DEFAULT, DgpParams

OUT_ENV = "CAUSAL_DR_OUT"


class UsageError(ParameterError):
    """Bad configuration key or value; maps to exit status 1."""


_TOP_KEYS = {"mode", "seed", "workers", "out", "estimators", "grid", "dgp", "ps", "analysis"}
_GRID_KEYS = {"scenarios", "n", "rho", "B"}
_DGP_KEYS = {"beta0", "beta", "alpha0", "gamma", "tau", "noise_sd"}
_PS_KEYS = {"learners", "lower", "upper", *(k.value for k in LearnerKind)}
_ANALYSIS_KEYS = {"csv", "outcome", "treatment", "covariates", "quadratic", "standardize",
                  "test", "bootstrap_B", "ci"}


@dataclass(frozen=True)
class RunConfig:
    mode: str = "simulate"
    seed: int | None = None
    workers: int = 1
    out: str = "results"
    estimators: tuple[str, ...] = ("IPW", "AIPW", "RSM")
    scenarios: tuple[int, ...] = (1, 2, 3, 4)
    n_values: tuple[int, ...] = (200, 1000)
    rho_values: tuple[float, ...] = (0.2, 0.7)
    B: int = 1000
    dgp: DgpParams = field(default_factory=DgpParams)
    learners: tuple[PsLearner, ...] = ()
    lower: float = LOWER_DEFAULT
    upper: float = UPPER_DEFAULT
    analysis_csv: str | None = None
    analysis: AnalysisSpec | None = None

    @property
    def methods(self) -> tuple[Method, ...]:
        return tuple(Method.parse(e) for e in self.estimators)


def _check_keys(table: dict, allowed: set, where: str) -> None:
    for key in table:
        if key not in allowed:
            raise UsageError(f"unknown config key {where}{key!r}")


def _int_list(value, name) -> tuple[int, ...]:
    if isinstance(value, (int, str)):
        value = [value]
    try:
        return tuple(int(v) for v in value)
    except (TypeError, ValueError):
        raise UsageError(f"{name} must be a list of integers, got {value!r}") from None


def _parse_learners(ps: dict) -> tuple[PsLearner, ...]:
    names = ps.get("learners", ["LR", "RF", "LDA", "SVM"])
    if isinstance(names, str):
        names = [names]
    learners = []
    for name in names:
        try:
            kind = LearnerKind.parse(name)
        except ParameterError as exc:
            raise UsageError(f"ps.learners: {exc}") from None
        hyper = ps.get(kind.value, {})
        if not isinstance(hyper, dict):
            raise UsageError(f"ps.{kind.value} must be a table")
        try:
            learners.append(PsLearner(kind, hyper))
        except ParameterError as exc:
            raise UsageError(f"ps.{kind.value}: {exc}") from None
    if len({lr.kind for lr in learners}) != len(learners):
        raise UsageError(f"ps.learners lists a learner twice: {names}")
    return tuple(learners)


def config_from_dict(raw: dict, overrides: dict | None = None) -> RunConfig:
    """Validate a raw table (as loaded from TOML) and apply flag overrides."""
    raw = dict(raw)
    _check_keys(raw, _TOP_KEYS, "")
    grid = dict(raw.get("grid", {}))
    dgp = dict(raw.get("dgp", {}))
    ps = dict(raw.get("ps", {}))
    analysis = raw.get("analysis")
    _check_keys(grid, _GRID_KEYS, "grid.")
    _check_keys(dgp, _DGP_KEYS, "dgp.")
    _check_keys(ps, _PS_KEYS, "ps.")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    mode = str(overrides.get("mode", raw.get("mode", "simulate"))).lower()
    if mode not in ("simulate", "analyze"):
        raise UsageError(f"mode must be simulate or analyze, got {mode!r}")
    seed = overrides.get("seed", raw.get("seed"))
    if seed is None:
        raise UsageError("a seed is required (config key 'seed' or --seed)")
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise UsageError(f"seed must be an integer, got {seed!r}") from None
    if not 0 <= seed < 2**63:
        raise UsageError(f"seed must be an non-negative 63-bit integer, got {seed}")

    estimators = raw.get("estimators", ["IPW", "AIPW", "RSM"])
    if isinstance(estimators, str):
        estimators = [estimators]
    try:
        estimators = tuple(Method.parse(e).value for e in estimators)
    except ParameterError as exc:
        raise UsageError(f"estimators: {exc}") from None
    if not estimators:
        raise UsageError("estimators must not be empty")

    scenarios = _int_list(overrides.get("scenarios", grid.get("scenarios", [1, 2, 3, 4])), "grid.scenarios")
    if not scenarios or any(s not in (1, 2, 3, 4) for s in scenarios):
        raise UsageError(f"grid.scenarios must be a non-empty subset of 1-4, got {list(scenarios)}")
    n_values = _int_list(grid.get("n", [200, 1000]), "grid.n")
    rho_values = tuple(float(r) for r in grid.get("rho", [0.2, 0.7]))
    B = int(overrides.get("B", grid.get("B", 1000)))
    if mode == "simulate":
        if not n_values or not rho_values:
            raise UsageError("the simulation grid must not be empty")
        if B < 2:
            raise UsageError(f"grid.B must be >= 2, got {B}")
        if any(n < 11 for n in n_values):
            raise UsageError(f"grid.n values must be >= 11, got {list(n_values)}")

    try:
        params = DgpParams(
            beta0=float(dgp.get("beta0", 0.0)), beta=tuple(dgp.get("beta", BETA_DEFAULT)),
            alpha0=float(dgp.get("alpha0", 0.0)), gamma=tuple(dgp.get("gamma", GAMMA_DEFAULT)),
            tau=float(dgp.get("tau", TAU_DEFAULT)), noise_sd=float(dgp.get("noise_sd", 1.0)),
        )
        for r in rho_values:
            params.with_rho(r)
    except ParameterError as exc:
        raise UsageError(f"dgp: {exc}") from None

    learners = _parse_learners(ps)
    lower = float(ps.get("lower", LOWER_DEFAULT))
    upper = float(ps.get("upper", UPPER_DEFAULT))
    if not 0 < lower < upper < 1:
        raise UsageError(f"ps bounds need 0 < lower < upper < 1, got {lower}, {upper}")
    if not learners and any(e != "RSM" for e in estimators):
        raise UsageError("IPW/AIPW need at least one PS learner")

    workers = int(overrides.get("workers", raw.get("workers", 1)))
    if workers < 1:
        raise UsageError(f"workers must be >= 1, got {workers}")
    out = overrides.get("out", raw.get("out")) or os.environ.get(OUT_ENV) or "results"

    analysis_csv, spec = None, None
    if analysis is not None:
        if not isinstance(analysis, dict):
            raise UsageError("analysis must be a table")
        _check_keys(analysis, _ANALYSIS_KEYS, "analysis.")
        for key in ("outcome", "treatment", "covariates"):
            if key not in analysis:
                raise UsageError(f"analysis.{key} is required")
        analysis_csv = analysis.get("csv")
        try:
            spec = AnalysisSpec(
                outcome_column=str(analysis["outcome"]),
                treatment_column=str(analysis["treatment"]),
                covariate_columns=tuple(analysis["covariates"]),
                quadratic_columns=tuple(analysis.get("quadratic", ())),
                standardize=bool(analysis.get("standardize", True)),
                test=Test.parse(analysis.get("test", "two_sided")),
                bootstrap_B=int(overrides.get("bootstrap_B", analysis.get("bootstrap_B", 1000))),
                ps_bounds=(lower, upper),
                ci_method=str(analysis.get("ci", "normal")),
            )
        except ParameterError as exc:
            raise UsageError(f"analysis: {exc}") from None
    if mode == "analyze" and (spec is None or not analysis_csv):
        raise UsageError("analyze mode needs an [analysis] table with a csv path")

    return RunConfig(
        mode=mode, seed=seed, workers=workers, out=str(out), estimators=estimators,
        scenarios=tuple(sorted(set(scenarios))), n_values=n_values, rho_values=rho_values, B=B,
        dgp=params, learners=learners, lower=lower, upper=upper,
        analysis_csv=analysis_csv, analysis=spec,
    )


def parse_config(path=None, overrides: dict | None = None) -> RunConfig:
    raw = {}
    if path is not None:
        path = Path(path)
        try:
            raw = tomllib.loads(path.read_text())
        except FileNotFoundError:
            raise UsageError(f"config file {path} not found") from None
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"config file {path}: {exc}") from None
    return config_from_dict(raw, overrides)


def config_to_dict(cfg: RunConfig) -> dict:
    ps: dict = {"learners": [lr.name for lr in cfg.learners], "lower": cfg.lower, "upper": cfg.upper}
    for lr in cfg.learners:
        hyper = {k: v for k, v in lr.hyperparams.items() if v is not None}
        if hyper:
            ps[lr.name] = hyper
    d = cfg.dgp
    raw = {
        "mode": cfg.mode, "seed": cfg.seed, "workers": cfg.workers, "out": cfg.out,
        "estimators": list(cfg.estimators),
        "grid": {"scenarios": list(cfg.scenarios), "n": list(cfg.n_values),
                 "rho": list(cfg.rho_values), "B": cfg.B},
        "dgp": {"beta0": d.beta0, "beta": list(d.beta), "alpha0": d.alpha0, "gamma": list(d.gamma),
                "tau": d.tau, "noise_sd": d.noise_sd},
        "ps": ps,
    }
    if cfg.analysis is not None:
        a = cfg.analysis
        table = {
            "outcome": a.outcome_column, "treatment": a.treatment_column,
            "covariates": list(a.covariate_columns), "quadratic": list(a.quadratic_columns),
            "standardize": a.standardize, "test": a.test.value, "bootstrap_B": a.bootstrap_B,
            "ci": a.ci_method,
        }
        if cfg.analysis_csv:
            table["csv"] = cfg.analysis_csv
        raw["analysis"] = table
    return raw


def dump_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, **changes)
