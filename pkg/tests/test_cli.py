import numpy as np
import pandas as pd
import pytest

from causal_dr import report
from causal_dr.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, SNAPSHOT, main
from causal_dr.config import UsageError, config_from_dict, dump_config, parse_config
from causal_dr.errors import DataError
from causal_dr.psmodels import default_learners
from causal_dr.synthdata import DgpParams

# ---------------------------------------------------------------- config


def test_defaults_with_seed_only():
    cfg = config_from_dict({"seed": 1})
    assert cfg.scenarios == (1, 2, 3, 4)
    assert cfg.n_values == (200, 1000) and cfg.rho_values == (0.2, 0.7) and cfg.B == 1000
    assert cfg.dgp == DgpParams()
    assert list(cfg.learners) == default_learners()
    assert (cfg.lower, cfg.upper) == (0.025, 0.975)
    assert cfg.estimators == ("IPW", "AIPW", "RSM")


def test_seed_required():
    with pytest.raises(UsageError, match="seed"):
        config_from_dict({})


@pytest.mark.parametrize(
    "raw",
    [
        {"seed": 1, "estimators": ["TMLE"]},
        {"seed": 1, "colour": "red"},
        {"seed": 1, "grid": {"scenarios": [5]}},
        {"seed": 1, "ps": {"learners": ["XGB"]}},
        {"seed": 1, "ps": {"RF": {"n_trees": 0}}},
        {"seed": 1, "ps": {"lower": 0.9, "upper": 0.1}},
        {"seed": 1, "dgp": {"beta": [1.0, 2.0]}},
        {"seed": 1, "grid": {"rho": [1.2]}},
        {"seed": -1},
        {"seed": 1, "mode": "analyze"},
    ],
)
def test_bad_configs(raw):
    with pytest.raises(UsageError):
        config_from_dict(raw)


def test_roundtrip(tmp_path):
    raw = {
        "seed": 7, "workers": 2, "grid": {"scenarios": [2, 4], "n": [300], "rho": [0.5], "B": 40},
        "ps": {"learners": ["LR", "RF"], "RF": {"n_trees": 50}},
        "analysis": {"csv": "x.csv", "outcome": "y", "treatment": "t", "covariates": ["a", "b"],
                     "quadratic": ["a"], "bootstrap_B": 200, "test": "one_sided_greater"},
    }
    cfg = config_from_dict(raw)
    p = tmp_path / "c.toml"
    p.write_text(dump_config(cfg))
    again = parse_config(p)
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)


def test_overrides_win(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("seed = 3\n[grid]\nB = 50\n")
    cfg = parse_config(p, {"seed": 9, "B": 10, "scenarios": [3]})
    assert (cfg.seed, cfg.B, cfg.scenarios) == (9, 10, (3,))


def test_env_default_out(monkeypatch):
    monkeypatch.setenv("CAUSAL_DR_OUT", "/tmp/elsewhere")
    assert config_from_dict({"seed": 1}).out == "/tmp/elsewhere"


# ---------------------------------------------------------------- report helpers


def test_boxplot_quartiles():
    s = report.boxplot_stats([1, 2, 3, 4, 5])
    assert (s["q1"], s["median"], s["q3"]) == (2.0, 3.0, 4.0)
    assert s["outliers"] == ""
    s = report.boxplot_stats([1, 2, 3, 4, 100])
    assert s["outliers"] == "100.0" and s["whisker_high"] == 4.0


def test_csv_roundtrip(tmp_path):
    rows = [{"estimator": "IPW", "ps_model": "LR", "tau_hat": 0.1 + 0.2, "se": 1e-17,
             "ci_low": -1.0, "ci_high": 2.0, "p_value": 0.5}]
    p = tmp_path / "a.csv"
    report.write_csv(p, rows, report.ANALYSIS_COLUMNS)
    assert report.read_csv(p, report.ANALYSIS_COLUMNS) == rows


def test_empty_replicates_file(tmp_path):
    p = tmp_path / "replicates.csv"
    p.write_text("")
    with pytest.raises(DataError):
        report.read_csv(p, report.REPLICATE_COLUMNS)


# ---------------------------------------------------------------- end to end

SMALL = '''seed = {seed}
[grid]
scenarios = [1, 3]
n = [200]
rho = [0.2]
B = 4
[ps]
learners = ["LR", "RF", "LDA", "SVM"]
[ps.RF]
n_trees = 20
'''


def _config(tmp_path, seed=5):
    p = tmp_path / f"cfg{seed}.toml"
    p.write_text(SMALL.format(seed=seed))
    return p


def test_simulate_and_report(tmp_path):
    out = tmp_path / "res"
    assert main(["simulate", "--config", str(_config(tmp_path)), "--out", str(out)]) == EXIT_OK
    for name in ("summary.csv", "replicates.csv", "summary.md", SNAPSHOT):
        assert (out / name).exists()
    summary = pd.read_csv(out / "summary.csv")
    assert len(summary) == 2 * 9
    reps = pd.read_csv(out / "replicates.csv")
    assert len(reps) == 2 * 9 * 4
    assert main(["report", str(out)]) == EXIT_OK
    box = pd.read_csv(out / "boxplots.csv")
    assert len(box) == 2 * 9 and (box["count"] == 4).all()


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cfg = str(_config(tmp_path))
    main(["simulate", "--config", cfg, "--out", str(a)])
    main(["simulate", "--config", cfg, "--out", str(b), "--workers", "2"])
    assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()
    assert (a / "replicates.csv").read_bytes() == (b / "replicates.csv").read_bytes()


def test_overwrite_guard(tmp_path):
    out = str(tmp_path / "res")
    assert main(["simulate", "--config", str(_config(tmp_path, 5)), "--out", out]) == EXIT_OK
    assert main(["simulate", "--config", str(_config(tmp_path, 6)), "--out", out]) == EXIT_USAGE
    assert main(["simulate", "--config", str(_config(tmp_path, 6)), "--out", out, "--force"]) == EXIT_OK
    assert parse_config(tmp_path / "res" / SNAPSHOT).seed == 6


def test_usage_errors(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path / "x")]) == EXIT_USAGE  # no seed
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_USAGE
    bad = tmp_path / "bad.toml"
    bad.write_text('seed = 1\nestimators = ["TMLE"]\n')
    assert main(["simulate", "--config", str(bad)]) == EXIT_USAGE
    assert "TMLE" in capsys.readouterr().err


def test_report_on_empty_dir_is_runtime_error(tmp_path):
    (tmp_path / "summary.csv").write_text("")
    (tmp_path / "replicates.csv").write_text("")
    assert main(["report", str(tmp_path)]) == EXIT_RUNTIME


def test_analyze_command(tmp_path):
    rng = np.random.default_rng(0)
    n = 150
    x = rng.standard_normal((n, 2))
    t = (rng.random(n) < 0.5).astype(int)
    y = 1.5 * t + x[:, 0] + rng.standard_normal(n)
    csv = tmp_path / "d.csv"
    pd.DataFrame({"y": y, "t": t, "a": x[:, 0], "b": x[:, 1]}).to_csv(csv, index=False)
    cfg = tmp_path / "an.toml"
    cfg.write_text(
        f'seed = 2\nout = "{tmp_path / "an"}"\n[ps]\nlearners = ["LR", "LDA"]\n'
        f'[analysis]\ncsv = "{csv}"\noutcome = "y"\ntreatment = "t"\ncovariates = ["a", "b"]\n'
        'bootstrap_B = 100\n'
    )
    assert main(["analyze", "--config", str(cfg)]) == EXIT_OK
    res = pd.read_csv(tmp_path / "an" / "analysis.csv")
    assert list(res["estimator"]) == ["IPW", "IPW", "AIPW", "AIPW", "RSM"]
    assert (res["ci_low"] < res["tau_hat"]).all()
    forest = pd.read_csv(tmp_path / "an" / "forest.csv")
    assert len(forest) == 5
