"""
Solving a sampled norm-design program with the smoothing Newton loop
====================================================================

Minimize a regularized linear objective over nonnegative designs while at
most a fraction alpha of sampled quadratic constraints may be violated.
The run below prints the iteration trace, verifies the returned point with
the independent stationarity check, and reports the step-size headroom.
"""

import math

import numpy as np

from stepopt import (
    SolverConfig,
    check_tau_stationary,
    make_norm_opt,
    max_stationary_tau,
    quadratic_rate_ratios,
    solve,
)

K, M, N = 10, 1, 100
alpha = 0.05
s = math.ceil(alpha * N)
prob = make_norm_opt(K, M, N, b=14.0, seed=17)

res = solve(prob, SolverConfig(s=s))
print("status: %s after %d iterations" % (res.status, res.iterations))
print("objective: %.9f" % prob.f(res.point.x))

# clamped columns sit on the constraint boundary within round-off, so
# count violations above the solver's stopping tolerance
tol = 1e-9 * K * M * N
viol = int(np.count_nonzero(prob.G(res.point.x).max(axis=0) > tol))
print("violating columns: %d (budget %d)" % (viol, s))

print("\n iter   residual       step   mu         direction")
for rec in res.trace:
    print(" %4d   %10.3e   %.4f   %.2e   %s"
          % (rec.iter, rec.residual, rec.step, rec.mu, rec.direction_kind))
print(" final  %10.3e" % res.final_residual)

# successive residuals shrink roughly quadratically near the end
print("\nresidual ratio r_next / r^2 per iteration:")
for it, ratio in quadratic_rate_ratios(res.trace, res.final_residual):
    print("  after iter %d: %.3g" % (it, ratio))

# the independent check agrees, and the stationarity certificate survives
# step sizes far beyond the default 0.75
rep = check_tau_stationary(prob, res.point, 0.75, s, tol=1e-6)
tau_star = max_stationary_tau(prob, res.point.x, s, ztol=1e-8)
print("\nindependent check: satisfied=%s residual=%.2e" % (rep.satisfied, rep.residual))
print("stationary up to tau = %.1f" % tau_star)
