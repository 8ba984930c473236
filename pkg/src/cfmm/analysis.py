"""Closed-form quantities for constant product markets and their oracles."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .amm_core import ConstantProductMarket, Direction, execute_trade, quote_alpha_for_beta
from .errors import InvalidInputError

MANIPULATION_K = 1.0 / (32.0 * math.sqrt(2.0))


# -- manipulation cost ------------------------------------------------------

def manipulation_cost(r_beta: float, epsilon: float) -> float:
    """Per-period beta an attacker spends to hold the pool price at ``(1+eps) * m_p``.

    No-fee pool, infinitely liquid reference. Evaluated as ``(s-1)**2 / s``
    with ``s = sqrt(1+eps)`` to keep precision for small ``eps``.
    """
    if epsilon < 0 or not math.isfinite(epsilon):
        raise InvalidInputError(f"epsilon must be nonnegative, got {epsilon!r}")
    if r_beta <= 0:
        raise InvalidInputError("r_beta must be positive")
    if epsilon == 0:
        return 0.0
    s = math.sqrt(1.0 + epsilon)
    d = epsilon / (1.0 + s)  # s - 1 without cancellation
    return r_beta * d * d / s


def manipulation_lower_bound(r_beta: float, epsilon: float, k: float = MANIPULATION_K) -> float:
    return k * r_beta * min(epsilon ** 2, math.sqrt(epsilon))


# -- liquidity provider returns ---------------------------------------------

@dataclass(frozen=True)
class PricePath:
    times: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        prices = np.asarray(self.prices, dtype=float)
        if times.shape != prices.shape or times.ndim != 1 or times.size == 0:
            raise InvalidInputError("times and prices must be equal-length 1-d sequences")
        if np.any(np.diff(times) <= 0):
            raise InvalidInputError("times must be strictly increasing")
        if np.any(prices <= 0):
            raise InvalidInputError("prices must be positive")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "prices", prices)

    @classmethod
    def from_prices(cls, prices) -> PricePath:
        prices = np.asarray(prices, dtype=float)
        return cls(np.arange(prices.size, dtype=float), prices)


def lp_relative_gain(path: PricePath) -> float:
    """Total relative gain of a no-fee pool that is arbitraged to the reference each step."""
    return math.sqrt(path.prices[-1] / path.prices[0])


def lp_step_gains(path: PricePath) -> np.ndarray:
    """Per-step relative returns ``sqrt(m_t / m_{t-1})``; their product is the total gain."""
    return np.sqrt(path.prices[1:] / path.prices[:-1])


def lp_portfolio_value(k: float, m_final: float) -> float:
    """Reserve value ``m * R_alpha + R_beta`` of an arbitraged no-fee pool."""
    return 2.0 * math.sqrt(k * m_final)


def hold_value(k: float, m_initial: float, m_final: float) -> float:
    """Value at ``m_final`` of the initial reserves kept outside the pool."""
    return math.sqrt(k / m_initial) * (m_final + m_initial)


# -- geometric Brownian motion ------------------------------------------------

@dataclass(frozen=True)
class GbmParams:
    mu: float
    sigma: float
    horizon: float
    m_initial: float = 1.0

    def __post_init__(self):
        if self.sigma < 0:
            raise InvalidInputError("sigma must be nonnegative")
        if not self.horizon > 0:
            raise InvalidInputError("horizon must be positive")
        if not self.m_initial > 0:
            raise InvalidInputError("initial price must be positive")


def gbm_expected_portfolio_value(k: float, params: GbmParams) -> float:
    """``E[2 sqrt(k m_T)]`` when the reference price follows GBM from ``m_initial``."""
    t = params.horizon
    return 2.0 * math.sqrt(k * params.m_initial) * math.exp(t * (4 * params.mu - params.sigma ** 2) / 8)


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    std_error: float
    n_paths: int


def sample_terminal_prices(params: GbmParams, n_paths: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(n_paths)
    t = params.horizon
    return params.m_initial * np.exp((params.mu - 0.5 * params.sigma ** 2) * t
                                     + params.sigma * math.sqrt(t) * z)


def monte_carlo_portfolio_value(k: float, params: GbmParams, n_paths: int,
                                seed: int = 0) -> MonteCarloEstimate:
    """Estimate ``E[P_V]`` by sampling the terminal GBM price exactly."""
    if n_paths < 1:
        raise InvalidInputError("n_paths must be at least 1")
    rng = np.random.default_rng(seed)
    values = 2.0 * np.sqrt(k * sample_terminal_prices(params, n_paths, rng))
    mean = float(np.sum(values) / n_paths)  # numpy sums pairwise
    se = float(np.std(values, ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
    return MonteCarloEstimate(mean, se, n_paths)


# -- price gap between a small and a large pool --------------------------------

@dataclass(frozen=True)
class PriceGap:
    leading_order: float
    exact: float


def price_gap(r_alpha: float, r_alpha_prime: float, m_u: float, gamma: float,
              delta_alpha: float) -> PriceGap:
    """Extra beta paid for ``delta_alpha`` in the smaller of two pools at the same price.

    ``exact`` is the difference of the two beta costs; ``leading_order`` is
    ``m_u / gamma * delta_alpha**2 * (1/R - 1/R')``.
    """
    if not 0 < r_alpha < r_alpha_prime:
        raise InvalidInputError("need 0 < r_alpha < r_alpha_prime")
    if not (m_u > 0 and 0 < gamma <= 1 and 0 < delta_alpha < r_alpha):
        raise InvalidInputError("need m_u > 0, 0 < gamma <= 1 and 0 < delta_alpha < r_alpha")
    leading = m_u / gamma * delta_alpha ** 2 * (1.0 / r_alpha - 1.0 / r_alpha_prime)
    # cost(R) = m_u * d / (gamma * (1 - d/R)); differencing directly cancels badly
    u, v = delta_alpha / r_alpha, delta_alpha / r_alpha_prime
    u_minus_v = delta_alpha * (r_alpha_prime - r_alpha) / (r_alpha * r_alpha_prime)
    exact = m_u * delta_alpha / gamma * u_minus_v / ((1 - u) * (1 - v))
    return PriceGap(leading, exact)


# -- split versus aggregate trades ----------------------------------------------

def split_trade_deficit(market: ConstantProductMarket, delta_a1: float, delta_a2: float) -> float:
    """Beta lost by selling ``delta_a1`` then ``delta_a2`` alpha instead of their sum at once."""
    if not (delta_a1 > 0 and delta_a2 > 0):
        raise InvalidInputError("both trade sizes must be positive")
    aggregate = quote_alpha_for_beta(market, delta_a1 + delta_a2)
    staged = market.copy()
    first = execute_trade(staged, Direction.ALPHA_FOR_BETA, delta_a1).amount_out
    second = execute_trade(staged, Direction.ALPHA_FOR_BETA, delta_a2).amount_out
    return aggregate - (first + second)
