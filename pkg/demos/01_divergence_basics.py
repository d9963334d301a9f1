"""Renyi divergences on small discrete distributions.

Walks through the basic behavior of the divergence primitives: growth in
the order, the max-log-ratio limit, asymmetry, and the symmetrized form
the rest of the library is built on.
"""

import numpy as np

from pmixed import INFINITY, Distribution, renyi_divergence, symmetric_renyi

peaked = Distribution([0.70, 0.15, 0.10, 0.05])
broad = Distribution([0.25, 0.25, 0.25, 0.25])

print("peaked:", peaked.probs)
print("broad: ", broad.probs)
print()

print("divergence grows with the order and is capped by the max-order limit:")
for alpha in (1.5, 2, 3, 5, 10, INFINITY):
    print(f"  D_{alpha:<4} (peaked || broad) = {renyi_divergence(peaked, broad, alpha):.6f}")
print()

print("the two directions differ, the symmetrized form takes the larger one:")
forward = renyi_divergence(peaked, broad, 3)
backward = renyi_divergence(broad, peaked, 3)
print(f"  forward  {forward:.6f}")
print(f"  backward {backward:.6f}")
print(f"  symmetric {symmetric_renyi(peaked, broad, 3):.6f}")
print()

print("mass outside the second argument's support makes the divergence infinite:")
spiky = Distribution([1.0, 0.0, 0.0, 0.0])
print("  D_2 (uniform || point mass) =", renyi_divergence(broad, spiky, 2))
print()

print("identical inputs give exactly zero at every order:")
rng = np.random.default_rng(0)
same = Distribution(rng.dirichlet(np.ones(6)))
print("  D_2 =", renyi_divergence(same, same, 2),
      " D_inf =", renyi_divergence(same, same, INFINITY))
