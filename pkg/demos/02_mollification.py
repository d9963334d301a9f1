"""Projecting a private distribution toward a public one.

The projection slides along the mixture path between the public and the
private distribution and stops at the largest mixing weight that keeps the
symmetric divergence from the public distribution inside the ball of
radius beta * alpha.  A bigger ball admits more private signal.
"""

import numpy as np

from pmixed import Distribution, mollifier_membership, solve_lambda, symmetric_renyi

alpha = 3
private = Distribution([0.82, 0.08, 0.06, 0.04])   # confident private prediction
public = Distribution([0.30, 0.30, 0.25, 0.15])    # hedged public prediction

print("symmetric divergence between the raw pair:",
      f"{symmetric_renyi(private, public, alpha):.4f} nats")
print()
print(f"{'radius beta':>12} {'weight':>8} {'divergence':>11} {'ball bound':>11}")
for beta in (0.0, 0.001, 0.01, 0.05, 0.2, 1.0):
    result = solve_lambda(private, public, alpha, beta)
    used = symmetric_renyi(result.projected, public, alpha)
    print(f"{beta:>12} {result.mixing_weight:>8.4f} {used:>11.6f} {beta * alpha:>11.4f}")
print()

beta = 0.05
result = solve_lambda(private, public, alpha, beta)
print(f"projection at beta = {beta}: {np.round(result.projected.probs, 4)}")
print("inside the ball:", mollifier_membership(result.projected, public, alpha, beta))
print("top token preserved:",
      int(np.argmax(result.projected.probs)) == int(np.argmax(private.probs)))
print()

print("nudging the weight past the solution leaves the ball:")
from pmixed import mix  # noqa: E402

bumped = mix(private, public, min(1.0, result.mixing_weight + 2e-6))
print("membership after the nudge:",
      mollifier_membership(bumped, public, alpha, beta))
