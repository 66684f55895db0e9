"""No-three-in-line sets in the affine plane.

Counts collinear triples in random point sets, compares them with the
guaranteed minimum, then finds the largest triple-free subset of a random
sample of AG(2, q) for a few densities.

    python demos/collinear_triples_and_alpha.py
"""
import numpy as np

from evasets import collinear_triple_hypergraph, count_collinear_triples, field_of_order, max_independent_set_exact, moment_curve
from evasets.geom import random_subset, supersat_lower_bound

q = 7
F = field_of_order(q)
rng = np.random.default_rng(1)

print(f"collinear triples in random subsets of F_{q}^2")
for size in (8, 15, 25, 40, 49):
    P = random_subset(F, 2, rng, size=size)
    print(f"  m={size:2d}  triples={count_collinear_triples(P):5d}  guaranteed>={supersat_lower_bound(size, q):8.1f}")

curve = set(moment_curve(F, 2).points)
print(f"\nlargest triple-free subset of S_p in F_{q}^2 (exact branch and bound)")
for p in (0.3, 0.6, 1.0):
    S = random_subset(F, 2, rng, p=p)
    alpha, best = max_independent_set_exact(collinear_triple_hypergraph(S))
    on_curve = len(curve & set(S.points))
    print(f"  p={p:.1f}  |S|={len(S):2d}  parabola points={on_curve:2d}  alpha={alpha:2d}  cap 2q={2 * q}")
