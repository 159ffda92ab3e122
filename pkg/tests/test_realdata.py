import numpy as np
import pandas as pd
import pytest

from causal_dr.errors import DataError, ParameterError
from causal_dr.psmodels import PsLearner
from causal_dr.realdata import (
    AnalysisSpec, Test, analyze, forest_rows, hypothesis_p_value, load_csv, prepare,
    result_rows, standardize, test_hypothesis as p_value,
)
from causal_dr.synthdata import Dataset

LR = [PsLearner("LR")]


def _spec(**kw):
    base = dict(outcome_column="y", treatment_column="t", covariate_columns=("age", "wt"), bootstrap_B=100)
    base.update(kw)
    return AnalysisSpec(**base)


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_drops_missing_outcome(tmp_path):
    p = _write(tmp_path, "y,t,age,wt\n1.0,1,30,70\n,0,40,80\n2.0,0,50,90\n")
    data = load_csv(p, _spec())
    assert data.report == "dropped: 1"
    assert len(data.frame) == 2 and data.n_rows_read == 3


def test_non_binary_treatment(tmp_path):
    p = _write(tmp_path, "y,t,age,wt\n1.0,1,30,70\n2.0,2,40,80\n")
    with pytest.raises(DataError, match="row 2.*'t'"):
        load_csv(p, _spec())


def test_missing_covariate_names_cell(tmp_path):
    p = _write(tmp_path, "y,t,age,wt\n1.0,1,30,70\n2.0,0,,80\n")
    with pytest.raises(DataError, match="row 2, column 'age'"):
        load_csv(p, _spec())


def test_unparseable_cell(tmp_path):
    p = _write(tmp_path, "y,t,age,wt\n1.0,1,30,70\n2.0,0,a,80\n3.0,0,b,80\n4.0,1,c,80\n")
    with pytest.raises(DataError, match="column 'age'"):
        load_csv(p, _spec())


def test_missing_column(tmp_path):
    p = _write(tmp_path, "y,t,age\n1.0,1,30\n")
    with pytest.raises(DataError, match="wt"):
        load_csv(p, _spec())


def test_text_binary_coding(tmp_path):
    p = _write(tmp_path, "y,t,age,wt\n1,yes,30,M\n2,no,40,F\n3,yes,41,F\n")
    data = load_csv(p, _spec())
    assert list(data.frame["t"]) == [1.0, 0.0, 1.0]
    assert set(data.frame["wt"]) == {0.0, 1.0} and "wt" in data.binary_columns


def test_zscore_example(tmp_path):
    p = _write(tmp_path, "y,t,age,wt\n1,1,1,0\n2,0,2,1\n3,1,3,0\n")
    scaled, rec = standardize(load_csv(p, _spec()), _spec())
    np.testing.assert_allclose(scaled.frame["age"], [-1.0, 0.0, 1.0])
    np.testing.assert_allclose(scaled.frame["y"], [-1.0, 0.0, 1.0])
    assert list(scaled.frame["wt"]) == [0.0, 1.0, 0.0]  # binary left alone
    assert rec.sds["age"] == pytest.approx(1.0)


def test_standardize_idempotent(tmp_path):
    rng = np.random.default_rng(0)
    df = pd.DataFrame({"y": rng.normal(size=20), "t": rng.integers(0, 2, 20),
                       "age": rng.normal(40, 8, 20), "wt": rng.normal(70, 9, 20)})
    p = tmp_path / "d.csv"
    df.to_csv(p, index=False)
    spec = _spec(quadratic_columns=("age",))
    once, _ = standardize(load_csv(p, spec), spec)
    twice, _ = standardize(once, spec)
    np.testing.assert_allclose(once.frame.to_numpy(), twice.frame.to_numpy(), atol=1e-12)
    sq = once.frame["age^2"]
    assert sq.mean() == pytest.approx(0, abs=1e-12) and sq.std(ddof=1) == pytest.approx(1)


def test_spec_validation():
    with pytest.raises(ParameterError):
        _spec(bootstrap_B=50)
    with pytest.raises(ParameterError):
        _spec(covariate_columns=("y",))
    with pytest.raises(ParameterError):
        _spec(quadratic_columns=("height",))
    with pytest.raises(ParameterError):
        _spec(test="TMLE")


@pytest.mark.parametrize(
    "tau,se,test,expected",
    [
        (1.959963984540054, 1.0, "two_sided", 0.05),
        (1.6448536269514722, 1.0, "one_sided_greater", 0.05),
        (0.0, 1.0, "two_sided", 1.0),
        (-3.0, 1.0, "one_sided_greater", 0.9986501019683699),
    ],
)
def test_p_values(tau, se, test, expected):
    assert p_value(tau, se, test) == pytest.approx(expected, abs=1e-9)


def test_p_value_degenerate():
    assert hypothesis_p_value(1.0, 0.0, Test.TWO_SIDED) == (0.0, True)
    assert hypothesis_p_value(0.0, 0.0, Test.TWO_SIDED) == (1.0, True)


def _toy(n=120, seed=0, effect=1.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 3))
    A = (rng.random(n) < 1 / (1 + np.exp(-0.5 * X[:, 0]))).astype(float)
    Y = effect * A + X @ np.array([1.0, -0.5, 0.3]) + rng.standard_normal(n)
    return Dataset(X, A, Y)


def test_rsm_zero_on_constant_outcome():
    d = _toy()
    flat = Dataset(d.X, d.A, np.full(d.n, 3.0))
    res = analyze(flat, _spec(), LR, seed=1)
    assert res.get("RSM").tau_hat == pytest.approx(0.0, abs=1e-10)
    assert res.get("IPW", "LR").tau_hat != 0.0


def test_analysis_shape_and_determinism():
    d = _toy()
    a = analyze(d, _spec(), LR, seed=4)
    b = analyze(d, _spec(), LR, seed=4)
    assert [r.estimator.value for r in a.rows] == ["IPW", "AIPW", "RSM"]
    assert a.rows == b.rows
    np.testing.assert_array_equal(a.bootstrap_estimates, b.bootstrap_estimates)
    assert a.n_treated + a.n_control == d.n
    for r in a.rows:
        assert r.ci_low < r.tau_hat < r.ci_high and 0 <= r.p_value <= 1


def test_refit_differs_from_reuse():
    d = _toy(seed=2)
    refit = analyze(d, _spec(), LR, seed=3)
    reuse = analyze(d, _spec(), LR, seed=3, reuse_nuisance=True)
    assert [r.tau_hat for r in refit.rows] == [r.tau_hat for r in reuse.rows]
    assert not np.allclose(refit.bootstrap_estimates, reuse.bootstrap_estimates)


def test_percentile_interval():
    res = analyze(_toy(), _spec(ci_method="percentile"), LR, seed=0)
    r = res.get("AIPW", "LR")
    assert r.ci_low == pytest.approx(np.quantile(res.bootstrap_estimates[:, 1], 0.025))


def test_rows_and_forest():
    res = analyze(_toy(effect=3.0), _spec(), LR, seed=0)
    rows = result_rows(res)
    assert rows[-1]["ps_model"] == "--"
    fr = forest_rows(res)
    assert fr[0]["label"] == "LR & IPW" and all(f["significant"] == 1 for f in fr)


def test_empty_arm_rejected():
    d = _toy()
    with pytest.raises(ParameterError):
        analyze(Dataset(d.X, np.ones(d.n), d.Y), _spec(), LR)


def _actg_like(tmp_path, seed=0):
    """A synthetic file with the column layout of the ACTG 175 subset."""
    rng = np.random.default_rng(seed)
    n = 660
    t = np.r_[np.ones(321), np.zeros(333), rng.integers(0, 2, 6)].astype(int)
    order = rng.permutation(n)
    df = pd.DataFrame({
        "cd420": np.round(rng.normal(350, 120, n)).astype(object),
        "treat": t,
        "age": rng.integers(18, 70, n), "wtkg": np.round(rng.normal(75, 13, n), 1),
        "cd40": np.round(rng.normal(350, 110, n)), "cd80": np.round(rng.normal(980, 450, n)),
        "gender": rng.choice(["M", "F"], n), "race": rng.integers(0, 2, n),
        "karnof": rng.choice([70, 80, 90, 100], n),
    })
    df.loc[654:, "cd420"] = ""  # the last six rows lack an outcome
    df = df.iloc[order].reset_index(drop=True)
    p = tmp_path / "actg.csv"
    df.to_csv(p, index=False)
    return p


def test_actg_shaped_fixture(tmp_path):
    p = _actg_like(tmp_path)
    spec = AnalysisSpec("cd420", "treat", ("age", "wtkg", "cd40", "cd80", "gender", "race", "karnof"),
                        quadratic_columns=("age", "cd40"), bootstrap_B=100)
    data, loaded, _ = prepare(p, spec)
    assert loaded.report == "dropped: 6"
    assert data.n == 654
    assert (int(data.A.sum()), int(data.n - data.A.sum())) == (321, 333)
    assert data.X.shape == (654, 9)
    assert "gender" in loaded.binary_columns
