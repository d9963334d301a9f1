"""Renyi-DP accounting for the private prediction protocol.

The accounting pipeline, in the order a session uses it:

1. ``solve_beta_star`` picks the largest mollifier radius whose amplified
   per-query loss fits the per-query budget ``eps_g / T``.
2. ``subsampled_eps`` evaluates the Poisson-subsampling amplification of the
   per-query loss at that radius; this value is charged per answered query.
3. ``compose`` adds up the per-query charges over the ``T`` interaction
   rounds, and ``rdp_to_dp`` converts the composed Renyi guarantee into an
   approximate-DP statement for reporting.

All losses are in nats.  Orders are restricted to integers >= 2 because the
amplification bound is only stated for those; non-integer orders are
rejected rather than approximated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

# exp() overflows around 709; switch to shifted log forms above this
_EXP_ARG_LIMIT = 700.0


class EpsMode(Enum):
    """How the per-query loss entering the amplification bound is evaluated.

    PAPER_FAITHFUL evaluates it at the full ensemble size N, recovering the
    closed-form radius bound when there is no subsampling.  CONSERVATIVE
    takes the worst case over every subset size the subsampling could
    realize, which is sound regardless of the drawn subset, and is the
    default.
    """

    PAPER_FAITHFUL = "paper-faithful"
    CONSERVATIVE = "conservative"


class BudgetExhaustedError(RuntimeError):
    """A query arrived after the session's query budget was spent."""

    def __init__(self, message: str, records=None):
        super().__init__(message)
        self.records = records


def check_integer_order(alpha) -> int:
    """Validate an accounting order: an integer (or integral float) >= 2."""
    if isinstance(alpha, float) and not alpha.is_integer():
        raise ValueError(f"accounting order must be an integer >= 2, got {alpha!r}")
    a = int(alpha)
    if a < 2:
        raise ValueError(f"accounting order must be an integer >= 2, got {alpha!r}")
    return a


def _check_radius(beta) -> float:
    b = float(beta)
    if math.isnan(b) or b < 0.0:
        raise ValueError(f"radius must be nonnegative, got {beta!r}")
    return b


def _log1p_scaled_expm1(scale: float, x: float) -> float:
    """log(1 + scale * (e**x - 1)) without overflow, for scale >= 1, x >= 0."""
    if x <= _EXP_ARG_LIMIT:
        return math.log1p(scale * math.expm1(x))
    # log(scale*e**x + 1 - scale) = x + log(scale) + log1p((1-scale)*e**-x/scale)
    return x + math.log(scale) + math.log1p((1.0 - scale) * math.exp(-x) / scale)


@dataclass(frozen=True)
class PrivacyParams:
    """Global privacy configuration of one prediction session.

    Attributes:
      eps_g: total Renyi privacy budget, in nats.
      delta: failure probability used when converting to approximate DP.
      T: maximum number of answered queries.
      alpha: Renyi order, an integer >= 2.
      q: Poisson subsampling probability for ensemble members.
      N: ensemble size.
    """

    eps_g: float
    delta: float
    T: int
    alpha: int
    q: float
    N: int

    def __post_init__(self):
        if not self.eps_g > 0.0:
            raise ValueError(f"eps_g must be positive, got {self.eps_g!r}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"T must be a positive integer, got {self.T!r}")
        object.__setattr__(self, "T", int(self.T))
        object.__setattr__(self, "alpha", check_integer_order(self.alpha))
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"q must lie in (0, 1], got {self.q!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))


def beta_max(N: int, eps_g: float, T: int, alpha: int) -> float:
    """Largest mollifier radius keeping each unsubsampled answer within eps_g/T.

    For a single-model ensemble the radius is ``eps_g / (T * alpha)``;
    otherwise it is ``log(N * e**((alpha-1) * eps_g / T) + 1 - N)`` divided
    by ``4 * (alpha - 1) * alpha``.  The logarithm's argument is always at
    least 1, so the result is nonnegative.
    """
    a = check_integer_order(alpha)
    if int(N) != N or N < 1:
        raise ValueError(f"ensemble size must be a positive integer, got {N!r}")
    if not eps_g > 0.0:
        raise ValueError(f"eps_g must be positive, got {eps_g!r}")
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T!r}")
    if N == 1:
        return eps_g / (T * a)
    return _log1p_scaled_expm1(float(N), (a - 1) * eps_g / T) / (4.0 * (a - 1) * a)


def per_query_eps(beta: float, alpha: int, subset_size: int) -> float:
    """Renyi loss of one averaged release over ``subset_size`` selected models.

    An empty subset answers from the public model alone and costs nothing.
    A singleton subset costs the full ball radius ``beta * alpha``; larger
    subsets dilute the single differing member in the average, costing
    ``log((s - 1 + e**((alpha-1) * 4 * beta * alpha)) / s) / (alpha - 1)``.
    """
    a = check_integer_order(alpha)
    b = _check_radius(beta)
    s = int(subset_size)
    if s != subset_size or s < 0:
        raise ValueError(f"subset size must be a nonnegative integer, got {subset_size!r}")
    if s == 0:
        return 0.0
    if s == 1:
        return b * a
    y = (a - 1) * 4.0 * b * a
    if y <= _EXP_ARG_LIMIT:
        return math.log1p(math.expm1(y) / s) / (a - 1)
    return (y - math.log(s) + math.log1p((s - 1) * math.exp(-y))) / (a - 1)


def base_eps_for_order(beta: float, k: int, N: int, mode: EpsMode) -> float:
    """Per-query loss at order ``k`` fed into the subsampling amplification.

    PAPER_FAITHFUL evaluates at subset size ``N``; CONSERVATIVE maximizes
    over every size the subsample could realize.
    """
    k = check_integer_order(k)
    if int(N) != N or N < 1:
        raise ValueError(f"ensemble size must be a positive integer, got {N!r}")
    if mode is EpsMode.PAPER_FAITHFUL:
        return per_query_eps(beta, k, N)
    if mode is EpsMode.CONSERVATIVE:
        return max(per_query_eps(beta, k, s) for s in range(1, N + 1))
    raise ValueError(f"unknown mode {mode!r}")


def subsampled_eps(q: float, alpha: int, eps_fn) -> float:
    """Amplified loss of a mechanism run on a Poisson-``q`` subsample.

    ``eps_fn`` must return the mechanism's loss at every integer order
    ``k`` in ``{2, ..., alpha}``.  The bound is

      log((1-q)**(alpha-1) * (1 + (alpha-1) q)
          + sum_{k=2}^{alpha} C(alpha, k) (1-q)**(alpha-k) q**k
            e**((k-1) eps_fn(k))) / (alpha - 1)

    evaluated in log space.  At ``q = 1`` only the ``k = alpha`` term
    survives and the bound reduces to ``eps_fn(alpha)`` exactly.
    """
    a = check_integer_order(alpha)
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q!r}")

    def base(k: int) -> float:
        val = float(eps_fn(k))
        if math.isnan(val) or val < 0.0:
            raise ValueError(f"loss at order {k} must be nonnegative, got {val!r}")
        return val

    if q == 1.0:
        return base(a)
    log1mq = math.log1p(-q)
    logq = math.log(q)
    terms = [(a - 1) * log1mq + math.log1p((a - 1) * q)]
    for k in range(2, a + 1):
        terms.append(
            math.log(math.comb(a, k))
            + (a - k) * log1mq
            + k * logq
            + (k - 1) * base(k)
        )
    shift = max(terms)
    if math.isinf(shift):
        return math.inf
    total = shift + math.log(math.fsum(math.exp(t - shift) for t in terms))
    return max(total / (a - 1), 0.0)


def solve_beta_star(
    params: PrivacyParams,
    mode: EpsMode = EpsMode.CONSERVATIVE,
    tol: float = 1e-9,
) -> float:
    """Largest radius whose amplified per-query loss fits within eps_g / T.

    The amplified loss is monotone in the radius, so the radius is found by
    bisection on a bracket grown by doubling; the feasible endpoint is kept
    throughout, so the returned radius never overspends the budget.  ``tol``
    bounds the slack left on the loss constraint at the returned radius.
    """
    if not float(tol) > 0.0:
        raise ValueError(f"tolerance must be positive, got {tol!r}")
    target = params.eps_g / params.T

    def amplified(beta: float) -> float:
        return subsampled_eps(
            params.q,
            params.alpha,
            lambda k: base_eps_for_order(beta, k, params.N, mode),
        )

    lo, lo_val = 0.0, 0.0
    hi = 1.0
    for _ in range(200):
        hi_val = amplified(hi)
        if hi_val > target:
            break
        lo, lo_val = hi, hi_val
        hi *= 2.0
    else:
        raise RuntimeError("failed to bracket the radius; budget is effectively unbounded")

    for _ in range(200):
        if target - lo_val <= tol and hi - lo <= 1e-12 * max(hi, 1.0):
            break
        mid = 0.5 * (lo + hi)
        mid_val = amplified(mid)
        if mid_val <= target:
            lo, lo_val = mid, mid_val
        else:
            hi = mid
    return lo


def compose(per_query: float, T: int) -> float:
    """Total loss of ``T`` sequential rounds each costing ``per_query``."""
    if per_query < 0.0:
        raise ValueError(f"per-query loss must be nonnegative, got {per_query!r}")
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T!r}")
    return T * per_query


def rdp_to_dp(alpha: int, eps: float, delta: float) -> float:
    """Approximate-DP epsilon implied by an (alpha, eps) Renyi guarantee."""
    a = check_integer_order(alpha)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    if eps < 0.0:
        raise ValueError(f"eps must be nonnegative, got {eps!r}")
    return eps + math.log((a - 1) / a) - (math.log(delta) + math.log(a)) / (a - 1)


def beta_infinite_order(N: int, eps_g: float, T: int, alpha: float) -> float:
    """Radius from the pure-DP (max-divergence) analysis, scaled to order alpha.

    Diagnostic companion to :func:`beta_max`: the max-divergence argument
    yields ``log(N * e**(eps_g / T) + 1 - N) / (2 * alpha)``.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"ensemble size must be a positive integer, got {N!r}")
    a = float(alpha)
    if not a > 1.0:
        raise ValueError(f"order must be > 1, got {alpha!r}")
    if not eps_g > 0.0:
        raise ValueError(f"eps_g must be positive, got {eps_g!r}")
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T!r}")
    return _log1p_scaled_expm1(float(N), eps_g / T) / (2.0 * a)


def beta_infinite_order_lower(N: int, eps_g: float, T: int, alpha: float):
    """Matching lower bound of the max-divergence analysis, when defined.

    Returns ``log(N - (N-1) * e**(eps_g / T)) / (2 * alpha)`` if the log
    argument is positive and ``None`` otherwise (the bound is then vacuous).
    The upper bound of :func:`beta_infinite_order` always dominates it.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"ensemble size must be a positive integer, got {N!r}")
    a = float(alpha)
    if not a > 1.0:
        raise ValueError(f"order must be > 1, got {alpha!r}")
    arg = N - (N - 1) * math.exp(eps_g / T) if eps_g / T <= _EXP_ARG_LIMIT else -math.inf
    if arg <= 0.0:
        return None
    return math.log(arg) / (2.0 * a)


@dataclass
class AccountantLedger:
    """Per-session spend record enforcing the ``T``-query interaction limit.

    A ledger belongs to exactly one session and is charged sequentially;
    concurrent sessions must each own their own ledger.
    """

    params: PrivacyParams
    per_query_eps: float
    queries_answered: int = field(default=0)

    def __post_init__(self):
        if self.per_query_eps < 0.0:
            raise ValueError(
                f"per-query loss must be nonnegative, got {self.per_query_eps!r}"
            )
        if self.params.T * self.per_query_eps > self.params.eps_g + 1e-12:
            raise ValueError(
                "per-query loss times query budget exceeds the global budget"
            )
        if not 0 <= self.queries_answered <= self.params.T:
            raise ValueError(f"queries_answered out of range: {self.queries_answered!r}")

    @property
    def spent(self) -> float:
        return self.queries_answered * self.per_query_eps

    @property
    def remaining_queries(self) -> int:
        return self.params.T - self.queries_answered

    def charge(self) -> "AccountantLedger":
        """Record one answered query; refuses once the budget is exhausted."""
        if self.queries_answered >= self.params.T:
            raise BudgetExhaustedError(
                f"query budget exhausted: {self.params.T} queries already answered"
            )
        self.queries_answered += 1
        return self


def accountant_record(
    params: PrivacyParams,
    mode: EpsMode = EpsMode.CONSERVATIVE,
    tol: float = 1e-9,
) -> dict:
    """Full accounting summary for one parameter set, ready for reporting."""
    beta_star = solve_beta_star(params, mode, tol)
    per_query = subsampled_eps(
        params.q, params.alpha, lambda k: base_eps_for_order(beta_star, k, params.N, mode)
    )
    composed = compose(per_query, params.T)
    return {
        "eps_g": params.eps_g,
        "delta": params.delta,
        "T": params.T,
        "alpha": params.alpha,
        "q": params.q,
        "N": params.N,
        "mode": mode.value,
        "beta_star": beta_star,
        "per_query_eps": per_query,
        "composed_eps": composed,
        "dp_eps": rdp_to_dp(params.alpha, composed, params.delta),
    }
