"""
How many samples are enough?
============================

Sample-complexity helpers for the chance-constrained setting: uniform
estimation error, sample counts certifying feasibility at a relaxed
level, the confidence attached to a fixed sample size, and a Monte Carlo
harness estimating how often sample feasibility transfers to the truth.
"""

import numpy as np

from stepopt import (
    dkw_sample_size,
    feasibility_confidence,
    feasibility_sample_size,
    monte_carlo_feasibility,
    s_lower_bound,
)
from stepopt.problems import norm_opt_draw

# uniform error: estimate every violation probability within 0.05, except
# with probability 0.05
print("uniform estimation:", dkw_sample_size(0.05, 0.05), "samples")

# certifying feasibility at level alpha needs many more samples than the
# sharper root saves
for alpha, s, beta in ((0.05, 5, 0.05), (0.1, 5, 0.05), (0.01, 2, 0.1)):
    simple = feasibility_sample_size(alpha, s, beta)
    sharp = feasibility_sample_size(alpha, s, beta, exact=True)
    print("alpha=%-5g s=%d beta=%-5g -> %d samples (sharp root %d)"
          % (alpha, s, beta, simple, sharp))

# fixing the sample size instead: confidence grows quickly with N
print("\nconfidence that sample feasibility at s=5 implies level 0.1:")
for N in (200, 400, 689, 1500):
    conf = feasibility_confidence(0.1, 5, N)
    note = " (vacuous)" if conf < 0 else ""
    print("  N=%-5d confidence=%.5f%s" % (N, conf, note))

# conversely, certifying level 0.05 on 2000 samples needs a budget above
# half of alpha*N, with stated confidence
floor, conf = s_lower_bound(0.5, 0.05, 2000)
print("\nbudget floor nu*alpha*N = %.1f at confidence %.4f" % (floor, conf))

# empirical transfer on the norm-design family: a mildly conservative
# design passes essentially always
draw = norm_opt_draw(10, 1, b=10.0)
rate = monte_carlo_feasibility(draw, 0.5 * np.ones(10), alpha=0.1, s=5,
                               N=689, trials=50, seed=3, holdout=20000)
print("\nMonte Carlo transfer rate over 50 trials: %.2f" % rate)
