"""Agent specifications and their per-step actions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..amm_core import (
    ConstantProductMarket,
    Direction,
    LiquidityLedger,
    add_liquidity,
    alpha_required,
    beta_cost_of_alpha,
    execute_trade,
    quote_alpha_for_beta,
    remove_liquidity,
)
from ..arbitrage import PenaltySpec, ReferencePriceQuote, apply_solution, solve_penalized_cpmm
from ..errors import InfeasibleTradeError, InvalidInputError
from .markowitz import EwmaEstimator, markowitz_solve


@dataclass
class ReferenceMarket:
    """External price of alpha in beta with power-law impact and log-normal drift."""

    m_p: float
    kappa: float = 0.0
    xi: float = 0.0
    mu: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if not self.m_p > 0:
            raise InvalidInputError("reference price must be positive")
        if self.kappa < 0 or self.xi < 0 or self.sigma < 0:
            raise InvalidInputError("kappa, xi and sigma must be nonnegative")

    def apply_impact(self, delta_alpha: float, buy: bool) -> float:
        """Move the price after ``delta_alpha`` alpha is bought (up) or sold (down).

        A sale never takes the price below half its pre-trade value.
        """
        move = self.kappa * delta_alpha ** (1.0 + self.xi)
        if buy:
            self.m_p += move
        else:
            self.m_p = max(self.m_p - move, 0.5 * self.m_p)
        return self.m_p

    def apply_noise(self, x: float) -> float:
        self.m_p *= math.exp(self.sigma * x + self.mu)
        return self.m_p

    def copy(self) -> ReferenceMarket:
        return ReferenceMarket(self.m_p, self.kappa, self.xi, self.mu, self.sigma)


@dataclass
class Wallet:
    alpha: float = 0.0
    beta: float = 0.0
    uni: float = 0.0

    def value(self, m_p: float, uni_price: float) -> float:
        return m_p * self.alpha + self.beta + uni_price * self.uni


@dataclass(frozen=True)
class TradeRecord:
    agent: str
    venue: str          # "pool", "reference", "mint" or "burn"
    direction: str      # what the agent received: "alpha", "beta" or "uni"
    alpha: float        # signed change of the agent's alpha
    beta: float         # signed change of the agent's beta
    uni: float = 0.0


@dataclass(frozen=True)
class SizeDistribution:
    kind: str = "fixed"
    value: float = 1.0
    mean_log: float = 0.0
    sigma_log: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fixed", "lognormal"):
            raise InvalidInputError(f"unknown size distribution {self.kind!r}")
        if self.kind == "fixed" and self.value < 0:
            raise InvalidInputError("fixed trade size must be nonnegative")
        if self.sigma_log < 0:
            raise InvalidInputError("sigma_log must be nonnegative")

    def draw(self, rng: np.random.Generator) -> float:
        if self.kind == "fixed":
            return self.value
        return float(rng.lognormal(self.mean_log, self.sigma_log))


@dataclass(frozen=True)
class Arbitrageur:
    name: str
    rho_alpha: float = 0.0
    rho_beta: float = 0.0

    def __post_init__(self):
        if self.rho_alpha < 0 or self.rho_beta < 0:
            raise InvalidInputError("arbitrageur rho must be nonnegative")


@dataclass(frozen=True)
class InitialLP:
    name: str
    alpha_amount: float
    beta_amount: float

    def __post_init__(self):
        if not (self.alpha_amount > 0 and self.beta_amount > 0):
            raise InvalidInputError("initial liquidity must be positive")


@dataclass(frozen=True)
class RationalLP:
    name: str
    risk_aversion: float
    alpha_amount: float = 0.0
    beta_amount: float = 0.0
    ewma_decay: float = 0.9
    rebalance_threshold: float = 0.01
    min_history: int = 2

    def __post_init__(self):
        if not self.risk_aversion > 0:
            raise InvalidInputError("risk_aversion must be positive")
        if not 0 < self.ewma_decay < 1:
            raise InvalidInputError("ewma_decay must lie in (0, 1)")
        if self.alpha_amount < 0 or self.beta_amount < 0:
            raise InvalidInputError("holdings must be nonnegative")


@dataclass(frozen=True)
class Trader:
    name: str
    size: SizeDistribution = field(default_factory=SizeDistribution)
    max_premium: float = 0.01
    direction_prob: float = 0.5  # probability the trader buys alpha

    def __post_init__(self):
        if self.max_premium < 0:
            raise InvalidInputError("max_premium must be nonnegative")
        if not 0 <= self.direction_prob <= 1:
            raise InvalidInputError("direction_prob must lie in [0, 1]")


AgentSpec = Union[Arbitrageur, InitialLP, RationalLP, Trader]


def uni_price(market: ConstantProductMarket, ledger: LiquidityLedger, m_p: float) -> float:
    """Reference value of one UNI token: its burn-equivalent basket at ``m_p``."""
    if ledger.uni_supply <= 0:
        return 0.0
    return (m_p * market.reserve_alpha + market.reserve_beta) / ledger.uni_supply


# -- actions ---------------------------------------------------------------------


def arbitrageur_act(agent: Arbitrageur, market: ConstantProductMarket,
                    reference: ReferenceMarket, wallet: Optional[Wallet] = None) -> list:
    """Trade the pool against the reference when the penalized problem says it pays.

    The hedge leg fills at the pre-impact reference price, then moves it.
    """
    penalty = PenaltySpec.quadratic(agent.rho_alpha, agent.rho_beta)
    sol = solve_penalized_cpmm(market, ReferencePriceQuote(reference.m_p), penalty)
    if not sol.trades:
        return []
    try:
        outcome = apply_solution(market, sol)
    except InfeasibleTradeError:
        return []
    m_p = reference.m_p
    if sol.direction is Direction.BETA_FOR_ALPHA:
        got_alpha = outcome.amount_out
        legs = [TradeRecord(agent.name, "pool", "alpha", got_alpha, -outcome.amount_in),
                TradeRecord(agent.name, "reference", "beta", -got_alpha, m_p * got_alpha)]
        reference.apply_impact(got_alpha, buy=False)
    else:
        paid_alpha = outcome.amount_in
        legs = [TradeRecord(agent.name, "reference", "alpha", paid_alpha, -m_p * paid_alpha),
                TradeRecord(agent.name, "pool", "beta", -paid_alpha, outcome.amount_out)]
        reference.apply_impact(paid_alpha, buy=True)
    if wallet is not None:
        for leg in legs:
            wallet.alpha += leg.alpha
            wallet.beta += leg.beta
    return legs


def trader_act(agent: Trader, market: ConstantProductMarket, reference: ReferenceMarket,
               rng: np.random.Generator, wallet: Optional[Wallet] = None) -> list:
    """Draw a side and an alpha size; trade on the pool if it is not too dear.

    Consumes one uniform draw for the side, then the size draw (none for a
    fixed size). Buying is accepted when the pool's beta cost is at most
    ``(1 + max_premium)`` times the reference cost; selling when the pool's
    proceeds times ``(1 + max_premium)`` reach the reference proceeds.
    """
    buy = rng.random() < agent.direction_prob
    size = agent.size.draw(rng)
    if not size > 0:
        return []
    reference_value = reference.m_p * size
    scale = 1.0 + agent.max_premium
    try:
        if buy:
            cost = beta_cost_of_alpha(market, size)
            if not (math.isfinite(cost) and cost <= scale * reference_value):
                return []
            outcome = execute_trade(market, Direction.BETA_FOR_ALPHA, cost)
            leg = TradeRecord(agent.name, "pool", "alpha", outcome.amount_out, -cost)
        else:
            proceeds = quote_alpha_for_beta(market, size)
            if not proceeds * scale >= reference_value:
                return []
            outcome = execute_trade(market, Direction.ALPHA_FOR_BETA, size)
            leg = TradeRecord(agent.name, "pool", "beta", -size, outcome.amount_out)
    except InfeasibleTradeError:
        return []
    if wallet is not None:
        wallet.alpha += leg.alpha
        wallet.beta += leg.beta
    return [leg]


def _pool_trade(market, wallet, name, direction, amount_in):
    outcome = execute_trade(market, direction, amount_in)
    if direction is Direction.BETA_FOR_ALPHA:
        rec = TradeRecord(name, "pool", "alpha", outcome.amount_out, -amount_in)
    else:
        rec = TradeRecord(name, "pool", "beta", -amount_in, outcome.amount_out)
    wallet.alpha += rec.alpha
    wallet.beta += rec.beta
    return rec


def rational_lp_act(agent: RationalLP, market: ConstantProductMarket, ledger: LiquidityLedger,
                    reference: ReferenceMarket, history: EwmaEstimator, wallet: Wallet) -> list:
    """Rebalance (alpha, beta, UNI) toward the mean-variance target weights.

    Order of operations: burn surplus UNI, swap on the pool toward the alpha
    needed for holdings plus any mint, then mint with what the wallet allows.
    Every leg goes through the pool, so fees and slippage apply.
    """
    if history.count < agent.min_history:
        return []
    m_p = reference.m_p
    p_uni = uni_price(market, ledger, m_p)
    prices = np.array([m_p, 1.0, p_uni])
    holdings = np.array([wallet.alpha, wallet.beta, wallet.uni])
    value = float(prices @ holdings)
    if not value > 0 or not p_uni > 0:
        return []
    target = markowitz_solve(history.mean, history.cov, agent.risk_aversion)
    if np.max(np.abs(prices * holdings / value - target)) < agent.rebalance_threshold:
        return []

    logs = []
    target_uni = target[2] * value / p_uni
    surplus = wallet.uni - target_uni
    if surplus > 0 and ledger.uni_supply - surplus > 0:
        out_a, out_b = remove_liquidity(market, ledger, agent.name, surplus)
        wallet.uni -= surplus
        wallet.alpha += out_a
        wallet.beta += out_b
        logs.append(TradeRecord(agent.name, "burn", "alpha", out_a, out_b, -surplus))

    mint_uni = max(target_uni - wallet.uni, 0.0)
    need_alpha = mint_uni / ledger.uni_supply * market.reserve_alpha if mint_uni > 0 else 0.0
    want_alpha = target[0] * value / m_p + need_alpha
    try:
        gap = wallet.alpha - want_alpha
        if gap > 1e-12 * max(wallet.alpha, 1.0):
            logs.append(_pool_trade(market, wallet, agent.name, Direction.ALPHA_FOR_BETA, gap))
        elif -gap > 1e-12 * max(want_alpha, 1.0) and wallet.beta > 0:
            cost = min(beta_cost_of_alpha(market, -gap), wallet.beta)
            logs.append(_pool_trade(market, wallet, agent.name, Direction.BETA_FOR_ALPHA, cost))
    except InfeasibleTradeError:
        pass

    if mint_uni > 0:
        need_beta = mint_uni / ledger.uni_supply * market.reserve_beta
        deposit_beta = min(need_beta, wallet.beta,
                           wallet.alpha * market.reserve_beta / market.reserve_alpha)
        if deposit_beta > 0:
            dep_alpha = alpha_required(market, deposit_beta)
            minted = add_liquidity(market, ledger, agent.name, deposit_beta)
            wallet.alpha -= dep_alpha
            wallet.beta -= deposit_beta
            wallet.uni += minted
            logs.append(TradeRecord(agent.name, "mint", "uni", -dep_alpha, -deposit_beta, minted))
    return logs
