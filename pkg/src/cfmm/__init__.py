"""Constant function market makers: mechanics, arbitrage, analytics, simulation."""
from ._kernels import BACKEND
from .amm_core import (
    ConstantProductMarket,
    Direction,
    LiquidityLedger,
    TradeOutcome,
    add_liquidity,
    alpha_cost_of_beta,
    alpha_required,
    beta_cost_of_alpha,
    execute_trade,
    marginal_cost_change,
    marginal_price,
    marginal_price_with_fee,
    quote_alpha_for_beta,
    quote_beta_for_alpha,
    remove_liquidity,
)
from .errors import (
    CfmmError,
    ConvergenceError,
    InfeasibleTradeError,
    InsufficientBalanceError,
    InvalidInputError,
)
from .mean_market import ConstantMeanMarket, execute_mean_trade, quote_mean_trade

__version__ = "0.1.0"
