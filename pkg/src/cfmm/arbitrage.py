"""Optimal arbitrage against an infinitely liquid reference market.

Profits are always measured in coin beta. For the constant product market
the reference price ``m_p`` is the price of alpha in beta; for the constant
mean market ``prices[i]`` is the price of coin ``i`` in a common numeraire.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .amm_core import ConstantProductMarket, Direction, execute_trade, marginal_price
from .errors import ConvergenceError, InvalidInputError
from .mean_market import ConstantMeanMarket

MAX_ITER = 200
DERIV_TOL = 1e-10
XTOL_REL = 1e-12
BAND_TOL = 1e-12


@dataclass(frozen=True)
class ReferencePriceQuote:
    m_p: float

    def __post_init__(self):
        if not (self.m_p > 0 and math.isfinite(self.m_p)):
            raise InvalidInputError(f"reference price must be positive, got {self.m_p!r}")


@dataclass(frozen=True)
class PenaltySpec:
    """Convex trade penalty.

    ``none``: no penalty. ``quadratic``: ``rho_alpha/2 * da**2 + rho_beta/2 * db**2``.
    ``market_impact``: ``m_p * eta / (xi + 1) * da ** (xi + 1)``, the slippage
    of a reference price that moves as ``m_p * (1 - eta * t**xi)``.
    """

    kind: str = "none"
    rho_alpha: float = 0.0
    rho_beta: float = 0.0
    eta: float = 0.0
    xi: float = 1.0

    def __post_init__(self):
        if self.kind not in ("none", "quadratic", "market_impact"):
            raise InvalidInputError(f"unknown penalty kind {self.kind!r}")
        if self.rho_alpha < 0 or self.rho_beta < 0:
            raise InvalidInputError("rho must be nonnegative")
        if self.eta < 0 or not self.xi > 0:
            raise InvalidInputError("market impact needs eta >= 0 and xi > 0")

    @classmethod
    def quadratic(cls, rho_alpha: float, rho_beta: Optional[float] = None) -> PenaltySpec:
        return cls("quadratic", rho_alpha, rho_alpha if rho_beta is None else rho_beta)

    @classmethod
    def market_impact(cls, eta: float, xi: float) -> PenaltySpec:
        return cls("market_impact", eta=eta, xi=xi)

    def kernel_args(self):
        if self.kind == "quadratic":
            return self.rho_alpha, self.rho_beta, 0.0, 1.0
        if self.kind == "market_impact":
            return 0.0, 0.0, self.eta, self.xi
        return 0.0, 0.0, 0.0, 1.0

    def value(self, m_p: float, delta_alpha: float, delta_beta: float) -> float:
        if self.kind == "quadratic":
            return 0.5 * (self.rho_alpha * delta_alpha ** 2 + self.rho_beta * delta_beta ** 2)
        if self.kind == "market_impact":
            return m_p * self.eta / (self.xi + 1.0) * delta_alpha ** (self.xi + 1.0)
        return 0.0


NO_PENALTY = PenaltySpec()


@dataclass(frozen=True)
class ArbitrageSolution:
    """Optimal one-directional arbitrage against the pool.

    ``direction`` names the pool leg: ``BETA_FOR_ALPHA`` means beta is tendered
    to the pool and alpha sold at the reference; ``None`` means no trade.
    ``profit`` is ``m_p * delta_alpha - delta_beta`` (or its mirror) before
    penalties; ``objective`` subtracts the penalty.
    """

    delta_alpha: float
    delta_beta: float
    profit: float
    direction: Optional[Direction] = None
    objective: float = 0.0
    converged: bool = True
    kkt_residual: float = 0.0
    iterations: int = 0

    @property
    def trades(self) -> bool:
        return self.direction is not None


ZERO_TRADE = ArbitrageSolution(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class NoArbitrageCheck:
    holds: bool
    lower: float
    upper: float
    m_u: float


def check_no_arbitrage(market: ConstantProductMarket, quote: ReferencePriceQuote,
                       tol: float = BAND_TOL) -> NoArbitrageCheck:
    """Test ``gamma * m_p <= m_u <= m_p / gamma`` with relative slack ``tol``."""
    m_u = marginal_price(market)
    lo = market.gamma * quote.m_p
    hi = quote.m_p / market.gamma
    return NoArbitrageCheck(lo * (1 - tol) <= m_u <= hi * (1 + tol), lo, hi, m_u)


def solve_riskless_cpmm(market: ConstantProductMarket, quote: ReferencePriceQuote) -> ArbitrageSolution:
    """Closed-form optimal arbitrage with no penalty.

    Buying alpha from the pool pays when ``m_u < gamma * m_p``; the optimum
    takes the pool to ``R_alpha = sqrt(k / (gamma * m_p))`` and earns
    ``(sqrt(m_p * R_alpha) - sqrt(R_beta / gamma)) ** 2``. The opposite side is
    the mirror image.
    """
    if check_no_arbitrage(market, quote).holds:
        return ZERO_TRADE
    ra, rb, g, m_p = market.reserve_alpha, market.reserve_beta, market.gamma, quote.m_p
    k = ra * rb
    if rb < g * m_p * ra:
        da = ra - math.sqrt(k / (g * m_p))
        db = (k / (ra - da) - rb) / g
        profit = (math.sqrt(m_p * ra) - math.sqrt(rb / g)) ** 2
        direction = Direction.BETA_FOR_ALPHA
    else:
        db = rb - math.sqrt(k * m_p / g)
        da = (k / (rb - db) - ra) / g
        profit = (math.sqrt(rb) - math.sqrt(m_p * ra / g)) ** 2
        direction = Direction.ALPHA_FOR_BETA
    if not (da > 0 and db > 0 and profit > 0):
        return ZERO_TRADE
    return ArbitrageSolution(da, db, profit, direction, profit)


def _side_solution(market, m_p, side, penalty):
    ra, rb, g = market.reserve_alpha, market.reserve_beta, market.gamma
    rho_a, rho_b, eta, xi = penalty.kernel_args()
    x, deriv, iters, status = _kernels.penalized_alpha(
        ra, rb, g, m_p, side, rho_a, rho_b, eta, xi, MAX_ITER, DERIV_TOL, XTOL_REL)
    if status == _kernels.STATUS_MAXITER:
        raise ConvergenceError(f"penalized arbitrage did not converge in {MAX_ITER} iterations",
                               best=x, residual=abs(deriv))
    if status == _kernels.STATUS_ZERO or x <= 0:
        return None
    if side == _kernels.BUY_ALPHA:
        db = rb * x / (g * (ra - x))
        profit = m_p * x - db
        direction = Direction.BETA_FOR_ALPHA
    else:
        db = rb * g * x / (ra + g * x)
        profit = db - m_p * x
        direction = Direction.ALPHA_FOR_BETA
    objective = profit - penalty.value(m_p, x, db)
    if not objective > 0:
        return None
    return ArbitrageSolution(x, db, profit, direction, objective, True, abs(deriv), iters)


def solve_penalized_cpmm(market: ConstantProductMarket, quote: ReferencePriceQuote,
                         penalty: PenaltySpec = NO_PENALTY) -> ArbitrageSolution:
    """Maximize trading profit minus a convex penalty, both sides independently.

    Each side is a concave scalar problem in the alpha amount, solved by
    bisection on its analytic derivative. At most one side can pay.
    """
    best = ZERO_TRADE
    for side in (_kernels.BUY_ALPHA, _kernels.SELL_ALPHA):
        sol = _side_solution(market, quote.m_p, side, penalty)
        if sol is not None and sol.objective > best.objective:
            best = sol
    return best


def apply_solution(market: ConstantProductMarket, sol: ArbitrageSolution):
    """Execute the pool leg of ``sol`` on ``market``; returns the TradeOutcome or None."""
    if sol.direction is None:
        return None
    if sol.direction is Direction.BETA_FOR_ALPHA:
        return execute_trade(market, sol.direction, sol.delta_beta)
    return execute_trade(market, sol.direction, sol.delta_alpha)


# ---------------------------------------------------------------------------
# constant mean markets


@dataclass(frozen=True)
class MeanPenalty:
    """Separable quadratic penalty ``sum rho_in/2 * tendered**2 + rho_out/2 * withdrawn**2``."""

    rho_in: np.ndarray
    rho_out: np.ndarray

    def value(self, tendered, withdrawn) -> float:
        return float(0.5 * (np.dot(self.rho_in, np.square(tendered))
                            + np.dot(self.rho_out, np.square(withdrawn))))


@dataclass(frozen=True)
class MeanArbitrageSolution:
    """``deltas[i]``: coin i bought externally and tendered to the pool.

    ``lambdas[i, j]``: coin j withdrawn from the pool against coin i tendered.
    Column sums of ``lambdas`` are the total withdrawals per coin.
    """

    deltas: np.ndarray
    lambdas: np.ndarray
    profit: float
    objective: float
    post_reserves: np.ndarray
    multiplier: float
    kkt_residual: float
    constraint_gap: float
    iterations: int


def mean_objective(prices, deltas, lambdas) -> float:
    """Value withdrawn minus value tendered, at reference prices."""
    prices = np.asarray(prices, dtype=float)
    return float(np.sum(lambdas @ prices) - np.dot(deltas, prices))


def mean_post_reserves(market: ConstantMeanMarket, deltas, lambdas) -> np.ndarray:
    return market.reserves + market.gammas * deltas - np.asarray(lambdas).sum(axis=0)


def _kkt_residual(market, prices, x, nu, rho_in, rho_out):
    # stationarity of the Lagrangian per coin, scaled by the coin price
    worst = 0.0
    for i in range(market.n):
        w, r, g, m = market.weights[i], market.reserves[i], market.gammas[i], prices[i]
        if w == 0:
            continue
        marginal = nu * w / x[i]
        if x[i] > r * (1 + 1e-14):
            resid = marginal - (m / g + rho_in[i] * (x[i] - r) / g ** 2)
        elif x[i] < r * (1 - 1e-14):
            resid = marginal - (m - rho_out[i] * (r - x[i]))
        else:
            # no trade: marginal must sit inside [m, m / g]
            resid = max(m - marginal, marginal - m / g, 0.0)
        worst = max(worst, abs(resid) / m)
    return worst


def solve_constant_mean(market: ConstantMeanMarket, prices, penalty: Optional[MeanPenalty] = None,
                        max_iter: int = 400) -> MeanArbitrageSolution:
    """Optimal arbitrage on a constant mean market, via its Lagrangian dual.

    The relaxed problem (geometric mean >= k) only depends on the net change
    of each reserve. For a fixed multiplier ``nu`` the Lagrangian separates by
    coin with a closed-form maximizer, and the constraint value is monotone
    in ``nu``, so bisection on ``log nu`` finds the KKT point.
    """
    prices = np.asarray(prices, dtype=float)
    n = market.n
    if prices.shape != (n,) or not np.all(prices > 0):
        raise InvalidInputError("prices must be a positive vector, one per coin")
    if penalty is None:
        rho_in = np.zeros(n)
        rho_out = np.zeros(n)
    else:
        rho_in = np.asarray(penalty.rho_in, dtype=float) * np.ones(n)
        rho_out = np.asarray(penalty.rho_out, dtype=float) * np.ones(n)
        if np.any(rho_in < 0) or np.any(rho_out < 0):
            raise InvalidInputError("penalty coefficients must be nonnegative")
    x = np.empty(n)
    nu, slack, iters = _kernels.mean_dual_solve(
        market.reserves, market.weights, market.gammas, prices, rho_in, rho_out,
        market.log_k, max_iter, x)

    z = x - market.reserves
    deltas = np.where(z > 0, z / market.gammas, 0.0)
    withdrawn = np.where(z < 0, -z, 0.0)
    lambdas = np.zeros((n, n))
    paid = deltas * prices
    if paid.sum() > 0:
        lambdas = np.outer(paid / paid.sum(), withdrawn)
    profit = mean_objective(prices, deltas, lambdas)
    objective = profit - (penalty.value(deltas, withdrawn) if penalty is not None else 0.0)

    if not objective > 0:
        deltas = np.zeros(n)
        lambdas = np.zeros((n, n))
        x = market.reserves.copy()
        profit = objective = 0.0
    gap = float(np.dot(market.weights, np.log(x)) - market.log_k)
    resid = _kkt_residual(market, prices, x, nu, rho_in, rho_out)
    if iters >= max_iter and resid > 1e-6:
        raise ConvergenceError("constant mean dual bisection did not converge", residual=resid)
    return MeanArbitrageSolution(deltas, lambdas, profit, objective, x, nu, resid, gap, iters)
