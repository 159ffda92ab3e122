"""
How the propensity learners differ
==================================

Fit each learner once on the misspecified feature set, then look at the
spread of raw scores and at how much truncation to [0.025, 0.975] changes.
"""

import numpy as np

from causal_dr import DgpParams, build_ps_features, default_learners, make_dataset, truncate
from causal_dr.psmodels import raw_scores
from causal_dr.synthdata import treatment_probability

params = DgpParams(rho=0.7)
data = make_dataset(500, params, seed=5)
truth = treatment_probability(data.X, params)
F = build_ps_features(data.X, "misspecified")
print("misspecified features: X1..X7, X1*X2, X1*X3 (X8 and X9 left out)\n")

print(f"{'learner':<8}{'min':>8}{'max':>8}{'clipped':>9}{'corr w/ truth':>15}")
for learner in default_learners():
    probs, flagged = raw_scores(F, data.A, learner, seed=3)
    clipped = np.mean(truncate(probs) != probs)
    corr = np.corrcoef(probs, truth)[0, 1]
    note = "  (fit flagged)" if flagged else ""
    print(f"{learner.name:<8}{probs.min():>8.3f}{probs.max():>8.3f}{clipped:>9.1%}{corr:>15.3f}{note}")
