"""
Analysing a CSV file with bootstrap inference
=============================================

Writes a small randomized trial to CSV, with one row missing its outcome
and a text-coded sex column, then runs the full analysis pipeline: load,
standardize, estimate, bootstrap, and produce forest-plot rows.
"""

import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

from causal_dr import AnalysisSpec, PsLearner, analyze, prepare
from causal_dr.realdata import forest_rows

rng = np.random.default_rng(175)
n = 301
frame = pd.DataFrame({
    "age": rng.integers(18, 70, n),
    "weight": rng.normal(75, 12, n).round(1),
    "sex": rng.choice(["F", "M"], n),
    "treat": rng.integers(0, 2, n),
})
frame["cd4"] = (300 + 40 * frame["treat"] + 2 * (frame["age"] - 40) + rng.normal(0, 60, n)).round()
frame["cd4"] = frame["cd4"].astype(object)
frame.loc[17, "cd4"] = ""  # one participant without a follow-up measurement

path = Path(tempfile.mkdtemp()) / "trial.csv"
frame.to_csv(path, index=False)

spec = AnalysisSpec(
    outcome_column="cd4", treatment_column="treat",
    covariate_columns=("age", "weight", "sex"), quadratic_columns=("age",),
    test="one_sided_greater", bootstrap_B=200,
)
data, loaded, scaling = prepare(path, spec)
print(f"{loaded.report}; analysing {data.n} rows; 'sex' coded as {loaded.codings['sex']}")

learners = [PsLearner("LR"), PsLearner("RF", {"n_trees": 100}), PsLearner("LDA")]
result = analyze(data, spec, learners, seed=1)

# Effects are on the standardized outcome scale.
sd = scaling.sds["cd4"]
print(f"\n{'':<12}{'effect':>9}{'(cd4 units)':>13}{'p (greater)':>13}")
for row in forest_rows(result):
    p = result.rows[row["position"] - 1].p_value
    print(f"{row['label']:<12}{row['estimate']:>9.3f}{row['estimate'] * sd:>13.1f}{p:>13.4f}")
print(f"\nresamples redrawn because an arm was empty: {result.redraws}")
