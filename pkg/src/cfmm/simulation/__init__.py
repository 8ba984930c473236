"""Agent-based simulation of a constant product pool against a reference market."""
from .agents import (
    Arbitrageur,
    InitialLP,
    RationalLP,
    ReferenceMarket,
    SizeDistribution,
    Trader,
    TradeRecord,
    Wallet,
    arbitrageur_act,
    rational_lp_act,
    trader_act,
    uni_price,
)
from .markowitz import EwmaEstimator, markowitz_objective, markowitz_solve
from .runner import (
    ORDERING_POLICIES,
    SimulationConfig,
    SimulationResult,
    TimeStepRecord,
    band_fraction,
    initial_lp_utility,
    initial_state,
    run_simulation,
    step_simulation,
)
