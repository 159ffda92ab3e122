"""Monte Carlo harness: the 4 specification regimes x sample size x correlation.

Scenario ids follow the usual 2x2 layout:

    1  correct PS,       correct outcome
    2  misspecified PS,  correct outcome
    3  correct PS,       misspecified outcome
    4  misspecified PS,  misspecified outcome

Seeds. Data for replicate ``r`` of an ``(n, rho)`` cell come from the stream
``(DATA, master_seed, n, rho, r)`` and are shared by all four scenarios; the
seed of a stochastic learner depends on ``(n, rho, r, ps_regime, learner)``
only. Scenarios that share a PS regime therefore produce identical IPW
estimates, and scenarios that share an outcome regime identical RSM estimates.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ParameterError
from .estimators import EffectEstimate, Method, estimate_aipw, estimate_ipw, estimate_rsm
from .outcome import fit_outcome
from .psmodels import LOWER_DEFAULT, UPPER_DEFAULT, PsLearner, Regime, build_ps_features, fit_propensity
from .seeding import STREAM_DATA, STREAM_FIT, derive_seed, draw_u64, make_rng
from .synthdata import DgpParams, make_dataset

SCENARIO_REGIMES = {
    1: (Regime.CORRECT, Regime.CORRECT),
    2: (Regime.MISSPECIFIED, Regime.CORRECT),
    3: (Regime.CORRECT, Regime.MISSPECIFIED),
    4: (Regime.MISSPECIFIED, Regime.MISSPECIFIED),
}


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_id: int
    n: int
    rho: float

    def __post_init__(self):
        if self.scenario_id not in SCENARIO_REGIMES:
            raise ParameterError(f"scenario_id must be 1-4, got {self.scenario_id}")
        if self.n < 11:
            raise ParameterError(f"n must be >= 11, got {self.n}")
        if not abs(self.rho) < 1:
            raise ParameterError(f"|rho| must be < 1, got {self.rho}")

    @property
    def ps_regime(self) -> Regime:
        return SCENARIO_REGIMES[self.scenario_id][0]

    @property
    def outcome_regime(self) -> Regime:
        return SCENARIO_REGIMES[self.scenario_id][1]


@dataclass(frozen=True)
class ReplicateRecord:
    replicate_index: int
    seed: tuple
    estimates: tuple[EffectEstimate, ...]
    redraw_count: int

    def lookup(self, method, ps_model=None) -> EffectEstimate:
        method = Method.parse(method)
        for est in self.estimates:
            if est.method is method and est.ps_model == ps_model:
                return est
        raise KeyError((method, ps_model))


@dataclass(frozen=True)
class MetricsSummary:
    estimator: Method
    ps_model: str | None
    mean: float
    bias: float
    abias: float
    rmse: float
    se: float
    width: float
    n_replicates: int
    n_flagged: int = 0


def estimator_keys(learners: Sequence[PsLearner]) -> list[tuple[Method, str | None]]:
    """Row order of a scenario block: IPW per learner, AIPW per learner, RSM."""
    names = [lr.name for lr in learners]
    return [(Method.IPW, m) for m in names] + [(Method.AIPW, m) for m in names] + [(Method.RSM, None)]


def _check_learners(learners: Sequence[PsLearner]) -> list[PsLearner]:
    learners = list(learners)
    names = [lr.name for lr in learners]
    if len(set(names)) != len(names):
        raise ParameterError(f"duplicate learner kinds: {names}")
    return learners


def _data_key(master_seed: int, n: int, rho: float, r: int) -> tuple:
    return (STREAM_DATA, master_seed, n, rho, r)


def _cell_replicate(
    n: int,
    rho: float,
    params: DgpParams,
    learners: Sequence[PsLearner],
    r: int,
    master_seed: int,
    scenario_ids: Iterable[int],
    bounds: tuple[float, float] = (LOWER_DEFAULT, UPPER_DEFAULT),
) -> dict[int, ReplicateRecord]:
    """One data replicate of an (n, rho) cell evaluated under several scenarios.

    Each PS regime and each outcome regime is fitted once and reused by all
    scenarios that need it.
    """
    scenario_ids = list(scenario_ids)
    key = _data_key(master_seed, n, rho, r)
    data = make_dataset(n, params.with_rho(rho), key)
    ps_fits: dict[Regime, dict] = {}
    out_fits = {}
    for sid in scenario_ids:
        ps_reg, out_reg = SCENARIO_REGIMES[sid]
        if ps_reg not in ps_fits:
            F = build_ps_features(data.X, ps_reg)
            fits = {}
            for lr in learners:
                seed = draw_u64(make_rng(derive_seed(STREAM_FIT, master_seed, n, rho, r, ps_reg.value, lr.name)))
                fits[lr.name] = fit_propensity(F, data.A, lr, seed, *bounds)
            ps_fits[ps_reg] = fits
        if out_reg not in out_fits:
            out_fits[out_reg] = fit_outcome(data.X, data.A, data.Y, out_reg)
    records = {}
    for sid in scenario_ids:
        ps_reg, out_reg = SCENARIO_REGIMES[sid]
        preds = out_fits[out_reg]
        ipw, aipw = [], []
        for lr in learners:
            ps = ps_fits[ps_reg][lr.name]
            e_ipw = estimate_ipw(data.Y, data.A, ps)
            e_aipw = estimate_aipw(data.Y, data.A, ps, preds)
            if ps.flagged:
                e_ipw = _with_flag(e_ipw)
                e_aipw = _with_flag(e_aipw)
            ipw.append(e_ipw)
            aipw.append(e_aipw)
        estimates = tuple(ipw + aipw + [estimate_rsm(preds)])
        records[sid] = ReplicateRecord(r, key, estimates, data.redraws)
    return records


def _with_flag(est: EffectEstimate) -> EffectEstimate:
    return EffectEstimate(est.tau_hat, est.se, est.ci_low, est.ci_high, est.method, est.ps_model, True)


def run_replicate(
    spec: ScenarioSpec,
    params: DgpParams,
    learners: Sequence[PsLearner],
    replicate_index: int,
    master_seed: int,
    bounds: tuple[float, float] = (LOWER_DEFAULT, UPPER_DEFAULT),
) -> ReplicateRecord:
    """Generate one dataset and compute RSM plus IPW and AIPW per learner."""
    learners = _check_learners(learners)
    return _cell_replicate(
        spec.n, spec.rho, params, learners, replicate_index, master_seed, [spec.scenario_id], bounds
    )[spec.scenario_id]


def summarize(tau_hats, widths, tau: float, method, ps_model=None, n_flagged: int = 0) -> MetricsSummary:
    """Bias = mean - tau, ABias, RMSE, SE (divisor B - 1), mean CI width."""
    t = np.asarray(tau_hats, dtype=float)
    B = len(t)
    if B < 2:
        raise ParameterError(f"need at least 2 replicates, got {B}")
    err = t - tau
    return MetricsSummary(
        estimator=Method.parse(method),
        ps_model=ps_model,
        mean=float(t.mean()),
        bias=float(err.mean()),
        abias=float(np.abs(err).mean()),
        rmse=float(math.sqrt(np.mean(err ** 2))),
        se=float(t.std(ddof=1)),
        width=float(np.mean(widths)),
        n_replicates=B,
        n_flagged=int(n_flagged),
    )


def summarize_records(records: Sequence[ReplicateRecord], learners, tau: float) -> list[MetricsSummary]:
    records = sorted(records, key=lambda rec: rec.replicate_index)
    out = []
    for method, ps_model in estimator_keys(learners):
        ests = [rec.lookup(method, ps_model) for rec in records]
        out.append(summarize(
            [e.tau_hat for e in ests], [e.width for e in ests], tau, method, ps_model,
            sum(e.flagged for e in ests),
        ))
    return out


def _cell_chunk(args):
    n, rho, params, learners, indices, master_seed, scenario_ids, bounds = args
    return [
        (r, _cell_replicate(n, rho, params, learners, r, master_seed, scenario_ids, bounds))
        for r in indices
    ]


def run_cell(
    n: int,
    rho: float,
    params: DgpParams,
    learners: Sequence[PsLearner],
    B: int,
    master_seed: int,
    scenario_ids: Iterable[int] = (1, 2, 3, 4),
    workers: int = 1,
    bounds: tuple[float, float] = (LOWER_DEFAULT, UPPER_DEFAULT),
) -> dict[int, list[ReplicateRecord]]:
    """All B replicates of one (n, rho) cell, for each requested scenario.

    Work is split into contiguous replicate blocks; results are merged by
    replicate index, so the worker count never changes the output.
    """
    if B < 2:
        raise ParameterError(f"B must be >= 2, got {B}")
    learners = _check_learners(learners)
    scenario_ids = sorted(set(scenario_ids))
    for sid in scenario_ids:
        ScenarioSpec(sid, n, rho)
    workers = max(1, int(workers))
    per = math.ceil(B / workers)
    blocks = [list(range(s, min(B, s + per))) for s in range(0, B, per)]
    jobs = [(n, rho, params, learners, blk, master_seed, scenario_ids, bounds) for blk in blocks]
    if workers == 1:
        results = [_cell_chunk(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_chunk, jobs))
    flat = sorted((item for chunk in results for item in chunk), key=lambda it: it[0])
    return {sid: [recs[sid] for _, recs in flat] for sid in scenario_ids}


def run_scenario(
    spec: ScenarioSpec,
    params: DgpParams,
    learners: Sequence[PsLearner],
    B: int = 1000,
    master_seed: int = 0,
    workers: int = 1,
    bounds: tuple[float, float] = (LOWER_DEFAULT, UPPER_DEFAULT),
) -> list[MetricsSummary]:
    records = run_cell(spec.n, spec.rho, params, learners, B, master_seed, [spec.scenario_id], workers, bounds)
    return summarize_records(records[spec.scenario_id], learners, params.tau)


@dataclass
class GridResult:
    """Summary rows and per-replicate rows of a grid run, in canonical order."""

    summary: list[dict] = field(default_factory=list)
    replicates: list[dict] = field(default_factory=list)

    def find(self, scenario_id: int, n: int, rho: float, estimator, ps_model=None) -> dict:
        est = Method.parse(estimator).value
        ps = ps_model if ps_model is not None else "--"
        for row in self.summary:
            if (row["scenario_id"], row["n"], row["rho"], row["estimator"], row["ps_model"]) == (
                scenario_id, n, float(rho), est, ps,
            ):
                return row
        raise KeyError((scenario_id, n, rho, est, ps))


def run_grid(
    scenario_ids: Iterable[int] = (1, 2, 3, 4),
    n_values: Iterable[int] = (200, 1000),
    rho_values: Iterable[float] = (0.2, 0.7),
    B: int = 1000,
    master_seed: int = 0,
    learners: Sequence[PsLearner] | None = None,
    params: DgpParams | None = None,
    workers: int = 1,
    bounds: tuple[float, float] = (LOWER_DEFAULT, UPPER_DEFAULT),
    progress: Callable[[str], None] | None = None,
    estimators: Iterable = ("IPW", "AIPW", "RSM"),
) -> GridResult:
    """Run every scenario x n x rho cell and collect summary and replicate rows."""
    from .psmodels import default_learners

    learners = _check_learners(learners if learners is not None else default_learners())
    params = params or DgpParams()
    scenario_ids = sorted(set(scenario_ids))
    keep = {Method.parse(e) for e in estimators}
    result = GridResult()
    for n in n_values:
        for rho in rho_values:
            records = run_cell(n, rho, params, learners, B, master_seed, scenario_ids, workers, bounds)
            for sid in scenario_ids:
                for s in summarize_records(records[sid], learners, params.tau):
                    if s.estimator not in keep:
                        continue
                    result.summary.append({
                        "scenario_id": sid, "n": int(n), "rho": float(rho),
                        "ps_model": s.ps_model or "--", "estimator": s.estimator.value,
                        "mean": s.mean, "bias": s.bias, "abias": s.abias, "rmse": s.rmse,
                        "se": s.se, "width": s.width, "n_replicates": s.n_replicates,
                    })
                for rec in records[sid]:
                    for e in rec.estimates:
                        if e.method not in keep:
                            continue
                        result.replicates.append({
                            "scenario_id": sid, "n": int(n), "rho": float(rho),
                            "replicate": rec.replicate_index, "ps_model": e.ps_model or "--",
                            "estimator": e.method.value, "tau_hat": e.tau_hat, "se": e.se,
                            "ci_low": e.ci_low, "ci_high": e.ci_high,
                            "flags": ("fit_flagged" if e.flagged else "")
                            + (";" if e.flagged and rec.redraw_count else "")
                            + (f"redraws={rec.redraw_count}" if rec.redraw_count else ""),
                        })
                if progress is not None:
                    progress(f"scenario {sid} n={n} rho={rho}: {B} replicates done")
    return result
