"""n-coin constant mean market (weighted geometric mean of reserves)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleTradeError, InvalidInputError

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class MeanTradeOutcome:
    coin_in: int
    coin_out: int
    amount_in: float
    amount_out: float
    k_before: float
    k_after: float


@dataclass
class ConstantMeanMarket:
    reserves: np.ndarray
    weights: np.ndarray
    gammas: np.ndarray

    def __post_init__(self):
        self.reserves = np.array(self.reserves, dtype=float)
        self.weights = np.array(self.weights, dtype=float)
        n = self.reserves.shape[0]
        gammas = np.asarray(self.gammas, dtype=float)
        self.gammas = np.full(n, float(gammas)) if gammas.ndim == 0 else gammas.copy()
        if self.reserves.ndim != 1 or n < 2:
            raise InvalidInputError("need at least two coins")
        if self.weights.shape != (n,) or self.gammas.shape != (n,):
            raise InvalidInputError("reserves, weights and gammas must have equal length")
        if not np.all(self.reserves > 0):
            raise InvalidInputError("reserves must be positive")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > WEIGHT_TOL:
            raise InvalidInputError(f"weights must be nonnegative and sum to 1, got {self.weights}")
        if not np.all((self.gammas > 0) & (self.gammas <= 1)):
            raise InvalidInputError("gammas must lie in (0, 1]")

    @property
    def n(self) -> int:
        return self.reserves.shape[0]

    @property
    def log_k(self) -> float:
        return float(np.dot(self.weights, np.log(self.reserves)))

    @property
    def k(self) -> float:
        return math.exp(self.log_k)

    def copy(self) -> ConstantMeanMarket:
        return ConstantMeanMarket(self.reserves.copy(), self.weights.copy(), self.gammas.copy())

    def marginal_price(self, j: int, l: int) -> float:
        """Fee-free price of coin ``l`` in units of coin ``j``."""
        return (self.weights[l] * self.reserves[j]) / (self.weights[j] * self.reserves[l])


def _check_pair(market, j, l, delta_in):
    n = market.n
    if not (0 <= j < n and 0 <= l < n):
        raise InvalidInputError(f"coin index out of range for n={n}")
    if j == l:
        raise InvalidInputError("input and output coins must differ")
    if not (delta_in > 0 and math.isfinite(delta_in)):
        raise InvalidInputError(f"delta_in must be positive, got {delta_in!r}")
    if market.weights[l] == 0:
        raise InvalidInputError("output coin has zero weight; the trade is undetermined")


def quote_mean_trade(market: ConstantMeanMarket, j: int, l: int, delta_in: float) -> float:
    """Amount of coin ``l`` received for tendering ``delta_in`` of coin ``j``.

    Uses the closed form ``R_l * (1 - (R_j / (R_j + g*d)) ** (w_j / w_l))``,
    evaluated through ``expm1``/``log1p``; falls back to bisection if that
    loses the strict bounds ``0 < out < R_l``.
    """
    _check_pair(market, j, l, delta_in)
    r_j, r_l = market.reserves[j], market.reserves[l]
    ratio = market.weights[j] / market.weights[l]
    out = -r_l * math.expm1(-ratio * math.log1p(market.gammas[j] * delta_in / r_j))
    if not (0 < out < r_l) and market.weights[j] > 0:
        out = quote_mean_trade_bisect(market, j, l, delta_in)
    return float(out)


def quote_mean_trade_bisect(market: ConstantMeanMarket, j: int, l: int, delta_in: float,
                            rel_tol: float = 1e-14) -> float:
    """Solve the invariant equation for the output amount by bisection.

    Works in log space on the two coins that change, so it is independent of
    the closed form used by :func:`quote_mean_trade`.
    """
    _check_pair(market, j, l, delta_in)
    w, r = market.weights, market.reserves
    target = w[j] * math.log(r[j]) + w[l] * math.log(r[l])
    gain = w[j] * math.log(r[j] + market.gammas[j] * delta_in)

    def excess(out):
        # > 0 while the invariant is still above k, so more can be withdrawn
        return gain + w[l] * math.log(r[l] - out) - target

    lo, hi = 0.0, float(r[l])
    while hi - lo > rel_tol * r[l]:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def execute_mean_trade(market: ConstantMeanMarket, j: int, l: int,
                       delta_in: float) -> tuple[ConstantMeanMarket, MeanTradeOutcome]:
    """Return the post-trade market and the trade record; ``market`` is not modified."""
    _check_pair(market, j, l, delta_in)
    w, r = market.weights, market.reserves
    new_reserves = r.copy()
    new_reserves[j] += delta_in
    # remaining reserve computed directly, then rounded up until the invariant holds in floats
    remaining = r[l] * math.exp(-(w[j] / w[l]) * math.log1p(market.gammas[j] * delta_in / r[j]))
    new_l = remaining
    target = w[j] * math.log(r[j]) + w[l] * math.log(r[l])
    gain = w[j] * math.log(new_reserves[j])
    for _ in range(64):
        deficit = target - gain - w[l] * math.log(new_l) if new_l > 0 else 0.0
        if not deficit > 0 or new_l >= r[l]:
            break
        new_l = math.nextafter(new_l * math.exp(deficit / w[l]), math.inf)
    out = float(r[l] - new_l)
    new_reserves[l] = new_l
    if not (new_reserves[l] > 0 and out > 0):
        raise InfeasibleTradeError(f"trade would deplete reserve of coin {l}")
    updated = ConstantMeanMarket(new_reserves, market.weights, market.gammas)
    return updated, MeanTradeOutcome(j, l, delta_in, out, market.k, updated.k)
