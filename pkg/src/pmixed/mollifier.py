"""Projection of a private distribution toward a public reference.

The projection moves along the mixing path ``lam * p + (1 - lam) * p0`` and
keeps the largest mixing weight for which the symmetric Renyi divergence
from the public distribution stays within the ball of radius
``beta * alpha``.  The constraint is monotone in the weight, so the weight
is found by bisection, and the solver only ever returns weights it has
verified feasible: the divergence bound is never exceeded by solver error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .divergence import Distribution, _matched, _symmetric_arrays, check_order

DEFAULT_LAMBDA_TOL = 1e-6
MAX_BISECTION_STEPS = 100


@dataclass(frozen=True)
class MollificationResult:
    """Mixing weight and projected distribution for one ensemble member."""

    mixing_weight: float
    projected: Distribution


def _check_finite_order(alpha) -> float:
    a = check_order(alpha)
    if math.isinf(a):
        raise ValueError("mollification requires a finite divergence order")
    return a


def _check_radius(beta) -> float:
    b = float(beta)
    if math.isnan(b) or b < 0.0:
        raise ValueError(f"mollifier radius must be nonnegative, got {beta!r}")
    return b


def _mix_arrays(p: np.ndarray, q: np.ndarray, lam: float) -> np.ndarray:
    return lam * p + (1.0 - lam) * q


def mix(p, p0, lam) -> Distribution:
    """Entrywise convex combination ``lam * p + (1 - lam) * p0``.

    ``lam = 0`` returns ``p0`` exactly and ``lam = 1`` returns ``p`` exactly.
    """
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"mixing weight must lie in [0, 1], got {lam!r}")
    pa, qa = _matched(p, p0)
    return Distribution._already_normalized(_mix_arrays(pa, qa, lam))


def mollifier_membership(pbar, p0, alpha, beta) -> bool:
    """Whether ``pbar`` lies within symmetric divergence ``beta * alpha`` of ``p0``."""
    a = _check_finite_order(alpha)
    b = _check_radius(beta)
    pa, qa = _matched(pbar, p0)
    return _symmetric_arrays(pa, qa, a) <= b * a


def solve_lambda(p, p0, alpha, beta, tol: float = DEFAULT_LAMBDA_TOL) -> MollificationResult:
    """Largest mixing weight whose mixture stays inside the radius-``beta`` ball.

    The symmetric divergence of the mixture from ``p0`` is monotonically
    nondecreasing in the weight, so bisection applies.  The search keeps the
    feasible endpoint of the bracket and returns it once the bracket is
    narrower than ``tol``; weight 0 reproduces ``p0`` with divergence
    exactly 0, so a solution always exists, and if the full weight 1 is
    already feasible no search is performed.

    Args:
      p: private distribution to project.
      p0: public reference distribution.
      alpha: finite divergence order.
      beta: nonnegative ball radius; the divergence bound is ``beta * alpha``.
      tol: absolute tolerance on the returned weight.

    Returns:
      A :class:`MollificationResult` whose projected distribution satisfies
      the divergence bound.
    """
    a = _check_finite_order(alpha)
    b = _check_radius(beta)
    if not float(tol) > 0.0:
        raise ValueError(f"tolerance must be positive, got {tol!r}")
    pa, qa = _matched(p, p0)
    radius = b * a

    def feasible(lam: float) -> bool:
        return _symmetric_arrays(_mix_arrays(pa, qa, lam), qa, a) <= radius

    if feasible(1.0):
        return MollificationResult(1.0, Distribution._already_normalized(_mix_arrays(pa, qa, 1.0)))

    lo, hi = 0.0, 1.0  # lam = 0 is feasible: the mixture is p0 bitwise
    for _ in range(MAX_BISECTION_STEPS):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return MollificationResult(lo, Distribution._already_normalized(_mix_arrays(pa, qa, lo)))
