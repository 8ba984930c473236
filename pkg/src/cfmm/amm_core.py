"""Two-coin constant product market: quotes, trades, and liquidity tokens.

Prices are quoted as units of coin beta per unit of coin alpha. A trade
tendering ``d`` coins must satisfy ``(R_out - out) * (R_in + gamma * d) = k``;
the pool then keeps the full ``d``, so ``k`` grows whenever ``gamma < 1``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from . import _kernels
from .errors import InfeasibleTradeError, InsufficientBalanceError, InvalidInputError

REL_TOL = 1e-12


class Direction(str, enum.Enum):
    BETA_FOR_ALPHA = "beta_for_alpha"  # tender beta, receive alpha
    ALPHA_FOR_BETA = "alpha_for_beta"  # tender alpha, receive beta


@dataclass
class ConstantProductMarket:
    reserve_alpha: float
    reserve_beta: float
    gamma: float = 0.997

    def __post_init__(self):
        if not (self.reserve_alpha > 0 and self.reserve_beta > 0):
            raise InvalidInputError("reserves must be positive")
        if not 0 < self.gamma <= 1:
            raise InvalidInputError(f"gamma must lie in (0, 1], got {self.gamma}")
        self.reserve_alpha = float(self.reserve_alpha)
        self.reserve_beta = float(self.reserve_beta)
        self.gamma = float(self.gamma)

    @property
    def k(self) -> float:
        return self.reserve_alpha * self.reserve_beta

    def copy(self) -> ConstantProductMarket:
        return ConstantProductMarket(self.reserve_alpha, self.reserve_beta, self.gamma)

    # convenience wrappers around the module-level operations
    def quote_beta_for_alpha(self, delta_beta: float) -> float:
        return quote_beta_for_alpha(self, delta_beta)

    def quote_alpha_for_beta(self, delta_alpha: float) -> float:
        return quote_alpha_for_beta(self, delta_alpha)

    def execute(self, direction: Direction, amount_in: float) -> TradeOutcome:
        return execute_trade(self, direction, amount_in)

    @property
    def price(self) -> float:
        return marginal_price(self)


@dataclass(frozen=True)
class TradeOutcome:
    amount_in: float
    amount_out: float
    direction: Direction
    k_before: float
    k_after: float


def _check_amount(amount, name):
    if not (amount > 0 and math.isfinite(amount)):
        raise InvalidInputError(f"{name} must be a positive finite number, got {amount!r}")


def quote_beta_for_alpha(market: ConstantProductMarket, delta_beta: float) -> float:
    """Alpha received for tendering ``delta_beta`` coins beta."""
    _check_amount(delta_beta, "delta_beta")
    return _kernels.cp_out(market.reserve_beta, market.reserve_alpha, market.gamma, delta_beta)


def quote_alpha_for_beta(market: ConstantProductMarket, delta_alpha: float) -> float:
    """Beta received for tendering ``delta_alpha`` coins alpha."""
    _check_amount(delta_alpha, "delta_alpha")
    return _kernels.cp_out(market.reserve_alpha, market.reserve_beta, market.gamma, delta_alpha)


def beta_cost_of_alpha(market: ConstantProductMarket, delta_alpha: float) -> float:
    """Beta that must be tendered to receive exactly ``delta_alpha``.

    Returns ``inf`` when the request would empty (or overdraw) the alpha reserve.
    """
    _check_amount(delta_alpha, "delta_alpha")
    return _kernels.cp_in_for_out(market.reserve_beta, market.reserve_alpha, market.gamma, delta_alpha)


def alpha_cost_of_beta(market: ConstantProductMarket, delta_beta: float) -> float:
    """Alpha that must be tendered to receive exactly ``delta_beta``."""
    _check_amount(delta_beta, "delta_beta")
    return _kernels.cp_in_for_out(market.reserve_alpha, market.reserve_beta, market.gamma, delta_beta)


def _settle(r_in, r_out, gamma, amount_in, k_before):
    # remaining output reserve, rounded up until the float product is no lower than k
    out = _kernels.cp_out(r_in, r_out, gamma, amount_in)
    new_in = r_in + amount_in
    new_out = max(r_out - out, r_out * (r_in / (r_in + gamma * amount_in)))
    while new_out * new_in < k_before and new_out < r_out:
        new_out = math.nextafter(new_out, math.inf)
    return r_out - new_out, new_in, new_out


def execute_trade(market: ConstantProductMarket, direction: Direction, amount_in: float) -> TradeOutcome:
    """Apply a trade to ``market`` in place.

    Raises InfeasibleTradeError, leaving the market untouched, if the output
    reserve would not stay strictly positive. Rounding favours the pool, so
    ``k`` never decreases in floating point.
    """
    direction = Direction(direction)
    _check_amount(amount_in, "amount_in")
    k_before = market.k
    if direction is Direction.BETA_FOR_ALPHA:
        out, new_beta, new_alpha = _settle(market.reserve_beta, market.reserve_alpha,
                                           market.gamma, amount_in, k_before)
        if not (new_alpha > 0 and out > 0):
            raise InfeasibleTradeError("trade would deplete the alpha reserve")
    else:
        out, new_alpha, new_beta = _settle(market.reserve_alpha, market.reserve_beta,
                                           market.gamma, amount_in, k_before)
        if not (new_beta > 0 and out > 0):
            raise InfeasibleTradeError("trade would deplete the beta reserve")
    market.reserve_alpha = new_alpha
    market.reserve_beta = new_beta
    return TradeOutcome(amount_in, out, direction, k_before, market.k)


def marginal_price(market: ConstantProductMarket) -> float:
    """Fee-free price of alpha in beta, ``R_beta / R_alpha``."""
    return market.reserve_beta / market.reserve_alpha


def marginal_price_with_fee(market: ConstantProductMarket) -> float:
    """Price of an infinitesimal alpha purchase once the fee is paid."""
    return marginal_price(market) / market.gamma


def marginal_cost_change(market: ConstantProductMarket) -> float:
    """Second derivative of beta cost with respect to alpha bought, at zero."""
    return 2.0 * marginal_price(market) / (market.gamma * market.reserve_alpha)


@dataclass
class LiquidityLedger:
    uni_supply: float = 0.0
    balances: dict = field(default_factory=dict)

    def balance(self, agent) -> float:
        return self.balances.get(agent, 0.0)

    def mint(self, agent, amount: float) -> None:
        self.uni_supply += amount
        self.balances[agent] = self.balances.get(agent, 0.0) + amount

    def burn(self, agent, amount: float) -> None:
        held = self.balances.get(agent, 0.0)
        if amount > held * (1 + REL_TOL):
            raise InsufficientBalanceError(f"{agent!r} holds {held} UNI, cannot burn {amount}")
        amount = min(amount, held)
        self.balances[agent] = held - amount
        if amount >= self.uni_supply:
            self.uni_supply = 0.0
        else:
            self.uni_supply -= amount

    def copy(self) -> LiquidityLedger:
        return LiquidityLedger(self.uni_supply, dict(self.balances))


def add_liquidity(market: ConstantProductMarket, ledger: LiquidityLedger, agent, delta_beta: float) -> float:
    """Deposit ``delta_beta`` beta plus the proportional alpha; return UNI minted.

    The alpha required is ``R_alpha * delta_beta / R_beta`` at the pre-deposit
    reserves. Against an empty ledger the mint equals ``delta_beta``.
    """
    _check_amount(delta_beta, "delta_beta")
    frac = delta_beta / market.reserve_beta
    minted = delta_beta if ledger.uni_supply == 0 else frac * ledger.uni_supply
    market.reserve_alpha += frac * market.reserve_alpha
    market.reserve_beta += delta_beta
    ledger.mint(agent, minted)
    return minted


def alpha_required(market: ConstantProductMarket, delta_beta: float) -> float:
    """Alpha that must accompany a ``delta_beta`` deposit."""
    return market.reserve_alpha * delta_beta / market.reserve_beta


def remove_liquidity(market: ConstantProductMarket, ledger: LiquidityLedger, agent,
                     delta_uni: float) -> tuple[float, float]:
    """Burn ``delta_uni`` tokens and pay out the pro-rata share of both reserves.

    Burning the whole supply empties the pool; the market object then holds
    zero reserves and will reject further trades.
    """
    _check_amount(delta_uni, "delta_uni")
    if ledger.uni_supply <= 0:
        raise InsufficientBalanceError("no liquidity tokens outstanding")
    if delta_uni > ledger.balance(agent) * (1 + REL_TOL):
        raise InsufficientBalanceError(
            f"{agent!r} holds {ledger.balance(agent)} UNI, cannot burn {delta_uni}")
    supply = ledger.uni_supply
    if delta_uni >= supply:
        out_alpha, out_beta = market.reserve_alpha, market.reserve_beta
        market.reserve_alpha = 0.0
        market.reserve_beta = 0.0
    else:
        frac = delta_uni / supply
        out_alpha = frac * market.reserve_alpha
        out_beta = frac * market.reserve_beta
        market.reserve_alpha -= out_alpha
        market.reserve_beta -= out_beta
    ledger.burn(agent, delta_uni)
    return out_alpha, out_beta
