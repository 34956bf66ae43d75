"""
Three notions of stationarity on one small instance
===================================================

The built-in two-variable instance separates the optimality checks: at
x = (1, 1) the binary-selection conditions hold with multipliers (1, 1)
while both the classical and the projection-based conditions fail, so a
point can look optimal to the weaker test and be nothing of the sort.
"""

import numpy as np

from stepopt import (
    GridSpec,
    PrimalDualPoint,
    check_bkkt,
    check_kkt,
    check_tau_stationary,
    grid_search,
    make_counterexample,
)

prob = make_counterexample()
x = np.array([1.0, 1.0])
print("constraint row at x:", prob.G(x), " objective:", prob.f(x))

# the binary check keeps both samples enforced and recovers multipliers
bk = check_bkkt(prob, x, y=np.array([1, 1]), s=1)
print("\nbinary-selection check: satisfied=%s residual=%.2e" % (bk.satisfied, bk.residual))
print("recovered multipliers:", bk.witness_W)

# the classical check fails: the objective gradient does not vanish
kk = check_kkt(prob, x, s=1)
print("classical check:        satisfied=%s residual=%.2f" % (kk.satisfied, kk.residual))

# the projection-based check fails too, for every step size: pushing both
# samples up by tau*W leaves two positive columns, and budget 1 cannot
# keep both, so G(x) is never a fixed point of the projection
for tau in (0.1, 0.75, 2.0):
    rep = check_tau_stationary(prob, PrimalDualPoint(x, bk.witness_W), tau, s=1)
    print("projection check tau=%-4g satisfied=%s (%s)" % (tau, rep.satisfied, rep.reason))

# a coarse grid shows how much objective the weak point leaves on the
# table: the best budget-respecting value is 0, attained near x0 = 2
grid = GridSpec(lower=[0.0, 0.0], upper=[5.0, 5.0], points_per_dim=501)
best_x, best_f = grid_search(prob, 1, grid)
print("\ngrid optimum: f=%.6f at x=%s  (vs f=%.1f at the weak point)"
      % (best_f, best_x, prob.f(x)))
print("classical check there: satisfied=%s"
      % check_kkt(prob, np.array([2.0, 4.0]), s=1).satisfied)
