"""Analysis of a user-supplied observational dataset.

Pipeline: read a CSV, drop rows with a missing outcome or treatment, code
two-level text columns as 0/1, z-score continuous columns (optionally adding
squared terms), then estimate the effect with RSM and with IPW and AIPW over
each PS learner. Standard errors come from a nonparametric bootstrap that
refits every nuisance model inside each resample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from scipy.special import ndtr

from .errors import DataError, DegenerateDesignError, ParameterError
from .estimators import Method, Z_975, estimate_aipw, estimate_ipw, estimate_rsm
from .outcome import design_with_treatment, fit_ols_full, predict_from_design
from .psmodels import LOWER_DEFAULT, UPPER_DEFAULT, PsLearner, default_learners, fit_propensity
from .seeding import STREAM_BOOTSTRAP, STREAM_FIT, derive_seed, draw_u64, make_rng
from .synthdata import Dataset

MAX_RESAMPLE_REDRAWS = 100
_TRUE_TOKENS = {"1", "1.0", "true", "yes", "y", "t"}
_FALSE_TOKENS = {"0", "0.0", "false", "no", "n", "f"}


class Test(str, Enum):
    ONE_SIDED_GREATER = "one_sided_greater"
    TWO_SIDED = "two_sided"

    __test__ = False

    @classmethod
    def parse(cls, value) -> "Test":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "_")
        aliases = {"onesidedgreater": "one_sided_greater", "greater": "one_sided_greater",
                   "twosided": "two_sided", "two": "two_sided"}
        key = aliases.get(key.replace("_", ""), key)
        try:
            return cls(key)
        except ValueError:
            raise ParameterError(f"unknown test {value!r}; expected one_sided_greater or two_sided") from None


@dataclass(frozen=True)
class AnalysisSpec:
    outcome_column: str
    treatment_column: str
    covariate_columns: tuple[str, ...]
    quadratic_columns: tuple[str, ...] = ()
    standardize: bool = True
    test: Test = Test.TWO_SIDED
    bootstrap_B: int = 1000
    ps_bounds: tuple[float, float] = (LOWER_DEFAULT, UPPER_DEFAULT)
    ci_method: str = "normal"

    def __post_init__(self):
        object.__setattr__(self, "covariate_columns", tuple(self.covariate_columns))
        object.__setattr__(self, "quadratic_columns", tuple(self.quadratic_columns))
        object.__setattr__(self, "ps_bounds", tuple(float(b) for b in self.ps_bounds))
        object.__setattr__(self, "test", Test.parse(self.test))
        names = [self.outcome_column, self.treatment_column, *self.covariate_columns]
        if len(set(names)) != len(names):
            raise ParameterError(f"analysis columns must be distinct: {names}")
        if not self.covariate_columns:
            raise ParameterError("at least one covariate column is required")
        missing = set(self.quadratic_columns) - set(self.covariate_columns)
        if missing:
            raise ParameterError(f"quadratic columns must be covariates: {sorted(missing)}")
        if self.bootstrap_B < 100:
            raise ParameterError(f"bootstrap_B must be >= 100, got {self.bootstrap_B}")
        lo, hi = self.ps_bounds
        if not 0 < lo < hi < 1:
            raise ParameterError(f"ps_bounds need 0 < lower < upper < 1, got {self.ps_bounds}")
        if self.ci_method not in ("normal", "percentile"):
            raise ParameterError(f"ci_method must be normal or percentile, got {self.ci_method!r}")


@dataclass
class LoadedData:
    """Parsed analysis columns plus bookkeeping from the load step."""

    frame: pd.DataFrame
    binary_columns: frozenset
    dropped: int
    n_rows_read: int
    codings: dict = field(default_factory=dict)

    @property
    def report(self) -> str:
        return f"dropped: {self.dropped}"


def _is_missing(raw: pd.Series) -> pd.Series:
    return raw.isna() | (raw.astype(str).str.strip().isin(["", "NA", "NaN", "nan", "."]))


def _code_binary_text(raw: pd.Series, name: str) -> tuple[pd.Series, dict] | None:
    """Code a two-level text column as 0/1, or return None if it is not one."""
    levels = sorted(set(raw.astype(str).str.strip()))
    if len(levels) > 2:
        return None
    lower = [lv.lower() for lv in levels]
    if all(lv in _TRUE_TOKENS | _FALSE_TOKENS for lv in lower):
        mapping = {lv: (1.0 if lv.lower() in _TRUE_TOKENS else 0.0) for lv in levels}
    else:
        mapping = {lv: float(i) for i, lv in enumerate(levels)}
    return raw.astype(str).str.strip().map(mapping), mapping


def load_csv(path, spec: AnalysisSpec) -> LoadedData:
    """Read the analysis columns from ``path``.

    Rows with a missing outcome or treatment are dropped and counted. A
    missing or unparseable covariate cell raises DataError naming the data
    row (1-based, header excluded) and the column.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise DataError(f"{path}: cannot parse CSV: {exc}") from exc
    needed = [spec.outcome_column, spec.treatment_column, *spec.covariate_columns]
    absent = [c for c in needed if c not in raw.columns]
    if absent:
        raise DataError(f"{path}: missing column(s) {absent}; header has {list(raw.columns)}")
    n_read = len(raw)
    keep = ~(_is_missing(raw[spec.outcome_column]) | _is_missing(raw[spec.treatment_column]))
    raw = raw[keep]
    dropped = int(n_read - keep.sum())
    frame = pd.DataFrame(index=raw.index)
    binary, codings = set(), {}
    for col in needed:
        series = raw[col]
        miss = _is_missing(series)
        if miss.any():
            row = int(miss[miss].index[0]) + 1
            raise DataError(f"{path}: missing value at row {row}, column {col!r}")
        numeric = pd.to_numeric(series.str.strip(), errors="coerce")
        if numeric.isna().any():
            coded = _code_binary_text(series, col)
            if coded is None:
                bad = numeric.isna()
                row = int(bad[bad].index[0]) + 1
                raise DataError(
                    f"{path}: unparseable value {series[bad].iloc[0]!r} at row {row}, column {col!r}"
                )
            numeric, codings[col] = coded
        frame[col] = numeric.astype(float)
        if set(np.unique(frame[col])) <= {0.0, 1.0}:
            binary.add(col)
    treat = frame[spec.treatment_column]
    bad = ~treat.isin([0.0, 1.0])
    if bad.any():
        row = int(bad[bad].index[0]) + 1
        raise DataError(
            f"{path}: non-binary treatment value {treat[bad].iloc[0]!r} at row {row}, "
            f"column {spec.treatment_column!r}"
        )
    return LoadedData(frame.reset_index(drop=True), frozenset(binary), dropped, n_read, codings)


@dataclass(frozen=True)
class ScalingRecord:
    means: dict
    sds: dict
    quadratic: tuple


def _zscore(x: pd.Series, name: str) -> tuple[pd.Series, float, float]:
    mu, sd = float(x.mean()), float(x.std(ddof=1))
    if not sd > 0:
        raise DataError(f"column {name!r} has zero variance and cannot be standardized")
    return (x - mu) / sd, mu, sd


def quadratic_name(col: str) -> str:
    return f"{col}^2"


def standardize(data: LoadedData, spec: AnalysisSpec) -> tuple[LoadedData, ScalingRecord]:
    """Z-score continuous covariates and the outcome (divisor n - 1).

    Binary columns are left alone. Each quadratic column is the square of the
    already standardized base column, then standardized itself. With
    ``spec.standardize`` false only the quadratic terms are added.
    Applying the function twice gives the same result as applying it once.
    """
    frame = data.frame.copy()
    means, sds = {}, {}
    targets = [spec.outcome_column, *spec.covariate_columns] if spec.standardize else []
    for col in targets:
        if col in data.binary_columns:
            continue
        frame[col], means[col], sds[col] = _zscore(frame[col], col)
    for col in spec.quadratic_columns:
        sq = frame[col] ** 2
        name = quadratic_name(col)
        if spec.standardize:
            frame[name], means[name], sds[name] = _zscore(sq, name)
        else:
            frame[name] = sq
    out = LoadedData(frame, data.binary_columns, data.dropped, data.n_rows_read, data.codings)
    return out, ScalingRecord(means, sds, tuple(quadratic_name(c) for c in spec.quadratic_columns))


def design_columns(spec: AnalysisSpec) -> list[str]:
    return [*spec.covariate_columns, *(quadratic_name(c) for c in spec.quadratic_columns)]


def to_dataset(data: LoadedData, spec: AnalysisSpec) -> Dataset:
    cols = design_columns(spec)
    missing = [c for c in cols if c not in data.frame.columns]
    if missing:
        raise ParameterError(f"columns {missing} not present; run standardize() first")
    return Dataset(
        data.frame[cols].to_numpy(float),
        data.frame[spec.treatment_column].to_numpy(float),
        data.frame[spec.outcome_column].to_numpy(float),
    )


def prepare(path, spec: AnalysisSpec) -> tuple[Dataset, LoadedData, ScalingRecord]:
    loaded = load_csv(path, spec)
    scaled, record = standardize(loaded, spec)
    return to_dataset(scaled, spec), scaled, record


def test_hypothesis(tau_hat: float, se: float, test: Test | str) -> float:
    """Normal-approximation p-value of z = tau_hat / se."""
    return hypothesis_p_value(tau_hat, se, test)[0]


test_hypothesis.__test__ = False  # keep pytest from collecting this helper


def hypothesis_p_value(tau_hat: float, se: float, test: Test | str) -> tuple[float, bool]:
    """p-value and a flag that is True when se == 0 made the test degenerate."""
    test = Test.parse(test)
    if se < 0 or not np.isfinite(se):
        raise ParameterError(f"se must be a finite non-negative number, got {se}")
    if se == 0:
        if test is Test.ONE_SIDED_GREATER:
            return (0.0 if tau_hat > 0 else 1.0), True
        return (1.0 if tau_hat == 0 else 0.0), True
    z = tau_hat / se
    if test is Test.ONE_SIDED_GREATER:
        return float(ndtr(-z)), False
    return float(min(1.0, 2.0 * ndtr(-abs(z)))), False


def _estimate_all(
    data: Dataset, learners: Sequence[PsLearner], fit_seeds: Sequence[int], bounds,
) -> NDArray:
    """Point estimates in the canonical order IPW x L, AIPW x L, RSM."""
    D = design_with_treatment(data.X, data.A)
    ols = fit_ols_full(D, data.Y)
    n = data.n
    preds = predict_from_design(
        ols.coef, design_with_treatment(data.X, np.ones(n)), design_with_treatment(data.X, np.zeros(n)),
        float(ols.se[1]),
    )
    ipw, aipw = [], []
    for lr, s in zip(learners, fit_seeds):
        ps = fit_propensity(data.X, data.A, lr, s, *bounds)
        ipw.append(estimate_ipw(data.Y, data.A, ps).tau_hat)
        aipw.append(estimate_aipw(data.Y, data.A, ps, preds).tau_hat)
    return np.array(ipw + aipw + [estimate_rsm(preds).tau_hat])


@dataclass(frozen=True)
class EstimateRow:
    estimator: Method
    ps_model: str | None
    tau_hat: float
    se: float
    ci_low: float
    ci_high: float
    p_value: float
    degenerate: bool = False


@dataclass
class AnalysisResult:
    rows: list[EstimateRow]
    n_treated: int
    n_control: int
    bootstrap_B: int
    redraws: int
    test: Test
    bootstrap_estimates: NDArray = field(repr=False, default=None)

    def get(self, estimator, ps_model=None) -> EstimateRow:
        est = Method.parse(estimator)
        for row in self.rows:
            if row.estimator is est and row.ps_model == ps_model:
                return row
        raise KeyError((est, ps_model))

    def joint_se(self, i: int, j: int) -> float:
        """Bootstrap SE of the difference between rows ``i`` and ``j``."""
        diff = self.bootstrap_estimates[:, i] - self.bootstrap_estimates[:, j]
        return float(np.std(diff, ddof=1))


def analyze(
    data: Dataset,
    spec: AnalysisSpec,
    learners: Sequence[PsLearner] | None = None,
    seed: int = 0,
    reuse_nuisance: bool = False,
) -> AnalysisResult:
    """Nine-way analysis (with the four default learners) with bootstrap inference.

    ``reuse_nuisance`` keeps the full-sample propensity scores and outcome
    predictions fixed across resamples instead of refitting them. It exists
    only to demonstrate that refitting matters and is off by default.
    """
    learners = list(learners) if learners is not None else default_learners()
    n1 = int(data.A.sum())
    n0 = data.n - n1
    if n1 == 0 or n0 == 0:
        raise ParameterError("both treatment arms must be non-empty")
    fit_seeds = [draw_u64(make_rng(derive_seed(STREAM_FIT, seed, lr.name))) for lr in learners]
    point = _estimate_all(data, learners, fit_seeds, spec.ps_bounds)
    if reuse_nuisance:
        fixed = _full_sample_nuisance(data, learners, fit_seeds, spec.ps_bounds)
    B = spec.bootstrap_B
    boot = np.empty((B, len(point)))
    redraws = 0
    for b in range(B):
        for attempt in range(MAX_RESAMPLE_REDRAWS):
            rng = make_rng(derive_seed(STREAM_BOOTSTRAP, seed, b, attempt))
            rows = rng.integers(0, data.n, data.n)
            if 0 < data.A[rows].sum() < data.n:
                break
            redraws += 1
        else:
            raise DegenerateDesignError(f"bootstrap resample {b} kept producing an empty arm")
        if reuse_nuisance:
            boot[b] = _estimate_fixed(data, rows, learners, fixed)
        else:
            boot[b] = _estimate_all(data.take(rows), learners, fit_seeds, spec.ps_bounds)
    keys = [(Method.IPW, lr.name) for lr in learners] + [(Method.AIPW, lr.name) for lr in learners] + [(Method.RSM, None)]
    rows_out = []
    for k, (method, ps_model) in enumerate(keys):
        se = float(np.std(boot[:, k], ddof=1))
        if spec.ci_method == "percentile":
            lo, hi = (float(v) for v in np.quantile(boot[:, k], [0.025, 0.975]))
        else:
            lo, hi = point[k] - Z_975 * se, point[k] + Z_975 * se
        p, degenerate = hypothesis_p_value(float(point[k]), se, spec.test)
        rows_out.append(EstimateRow(method, ps_model, float(point[k]), se, lo, hi, p, degenerate))
    return AnalysisResult(rows_out, n1, n0, B, redraws, spec.test, boot)


def _full_sample_nuisance(data, learners, fit_seeds, bounds):
    D = design_with_treatment(data.X, data.A)
    coef = fit_ols_full(D, data.Y).coef
    n = data.n
    preds = predict_from_design(coef, design_with_treatment(data.X, np.ones(n)), design_with_treatment(data.X, np.zeros(n)))
    scores = [fit_propensity(data.X, data.A, lr, s, *bounds).scores for lr, s in zip(learners, fit_seeds)]
    return preds, scores


def _estimate_fixed(data, rows, learners, fixed):
    preds, scores = fixed
    Y, A = data.Y[rows], data.A[rows]
    mu1, mu0 = preds.mu1[rows], preds.mu0[rows]
    from .outcome import PotentialPredictions

    sub = PotentialPredictions(mu1, mu0, preds.coef_tau)
    ipw = [estimate_ipw(Y, A, e[rows]).tau_hat for e in scores]
    aipw = [estimate_aipw(Y, A, e[rows], sub).tau_hat for e in scores]
    return np.array(ipw + aipw + [float(np.mean(mu1 - mu0))])


def result_rows(result: AnalysisResult) -> list[dict]:
    """Rows for ``analysis.csv``."""
    return [
        {
            "estimator": r.estimator.value, "ps_model": r.ps_model or "--", "tau_hat": r.tau_hat,
            "se": r.se, "ci_low": r.ci_low, "ci_high": r.ci_high, "p_value": r.p_value,
        }
        for r in result.rows
    ]


def forest_rows(result: AnalysisResult) -> list[dict]:
    """Plot-ready rows for a forest plot: one line per estimator, top to bottom."""
    out = []
    for pos, r in enumerate(result.rows):
        label = r.estimator.value if r.ps_model is None else f"{r.ps_model} & {r.estimator.value}"
        out.append({
            "position": pos + 1, "label": label, "estimator": r.estimator.value,
            "ps_model": r.ps_model or "--", "estimate": r.tau_hat, "lower": r.ci_low,
            "upper": r.ci_high, "significant": int(r.ci_low > 0 or r.ci_high < 0),
        })
    return out
