"""Evasive sets from random algebraic curves.

Computes the degree schedule for lines in the plane, samples random curves of
that degree over F_q, and verifies each zero locus against every line.

    python demos/evasive_construction.py
"""
import numpy as np

from evasets import EvasiveParams, chow_dim, construct_evasive, degree_schedule, is_evasive, moment_curve, slice_bound
from evasets import field_of_order

print("calculators")
print(f"  chow_dim(2,1,3) = {chow_dim(2, 1, 3)}   chow_dim(1,1,3) = {chow_dim(1, 1, 3)}")
print(f"  slice_bound(1,1,2,3,5) = {slice_bound(1, 1, 2, 3, 5)}")
s = degree_schedule(2, 1, 1)
print(f"  schedule for lines in the plane: degrees {s.degrees}, r = {s.r_value}")

q = 49
params = EvasiveParams(2, 1, 1, s.r_value + 1, q)
rng = np.random.default_rng(5)
print(f"\nrandom curves of degree {s.degrees[0]} over F_{q}, checked against every line with r = {params.r}")
for trial in range(5):
    cand, _, verdict, chart, _ = construct_evasive(params, rng, verify_r=params.r)
    print(f"  trial {trial}: {len(cand):3d} points, max on a line {verdict.max_intersection}, evasive {verdict.evasive}")

F = field_of_order(13)
v = is_evasive(moment_curve(F, 2), EvasiveParams(2, 1, 1, 3, 13))
print(f"\nparabola over F_13: max points on a line {v.max_intersection}, evasive {v.evasive}")
