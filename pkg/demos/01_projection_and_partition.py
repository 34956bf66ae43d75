"""
Counting violating columns and projecting onto the budget set
=============================================================

A constraint sample matrix violates wherever a column has a positive
entry.  This walks through classifying columns, listing the candidate
clamp sets at a budget, and computing every nearest matrix that meets
the budget.
"""

import numpy as np

from stepopt import candidate_sets, column_partition, project_step, step_norm

# a small matrix with one tie: columns 0 and 1 both peak at 2, column 2
# peaks exactly at zero, column 3 is strictly negative
Z = np.array([[2.0, 2.0, 0.0, -1.0],
              [0.0, -1.0, -2.0, -3.0]])

print("Z =")
print(Z)
print("violating columns:", step_norm(Z))

part = column_partition(Z)
print("positive:", part.positive, " zero:", part.zero, " negative:", part.negative)
print("positive-part column norms:", part.pos_norms)

# budget 1 forces one of the two tied positive columns to be clamped;
# the family records both choices (each set also carries the zero-max column)
fam = candidate_sets(Z, 1)
print("\ncandidate clamp sets at budget 1:", fam.sets)

for P in project_step(Z, 1):
    print("\nnearest matrix, distance %.6f:" % np.linalg.norm(P - Z))
    print(P)

# on random data the tie disappears and the projection is unique
rng = np.random.default_rng(7)
R = rng.uniform(-2.0, 2.0, size=(3, 6))
members = project_step(R, 2)
print("\nrandom 3x6 at budget 2: %d violating column(s) before, %d minimizer(s)"
      % (step_norm(R), len(members)))
print("violations after projection:", step_norm(members[0]))
