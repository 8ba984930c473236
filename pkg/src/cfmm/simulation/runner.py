"""Discrete-time simulation loop and its per-step records."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..amm_core import ConstantProductMarket, LiquidityLedger, add_liquidity, alpha_required
from ..errors import InvalidInputError
from .agents import (
    Arbitrageur,
    InitialLP,
    RationalLP,
    ReferenceMarket,
    Trader,
    Wallet,
    arbitrageur_act,
    rational_lp_act,
    trader_act,
    uni_price,
)
from .markowitz import EwmaEstimator

ORDERING_POLICIES = ("fixed_order", "shuffle_per_step", "arbitrageur_last")
BAND_TOL = 1e-9
MAX_SEED = 2 ** 64 - 1


@dataclass
class SimulationConfig:
    steps: int
    seed: int
    reference: ReferenceMarket
    agents: tuple
    gamma: float = 0.997
    ordering_policy: str = "arbitrageur_last"

    def validate(self) -> None:
        if not isinstance(self.steps, (int, np.integer)) or self.steps < 0:
            raise InvalidInputError(f"steps must be a nonnegative integer, got {self.steps!r}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed <= MAX_SEED:
            raise InvalidInputError("seed must be an unsigned 64-bit integer")
        if not 0 < self.gamma <= 1:
            raise InvalidInputError("gamma must lie in (0, 1]")
        if self.ordering_policy not in ORDERING_POLICIES:
            raise InvalidInputError(f"ordering_policy must be one of {ORDERING_POLICIES}")
        if not any(isinstance(a, InitialLP) for a in self.agents):
            raise InvalidInputError("at least one InitialLP is required to seed the pool")
        names = [a.name for a in self.agents]
        if len(set(names)) != len(names):
            raise InvalidInputError("agent names must be unique")


@dataclass(frozen=True)
class TimeStepRecord:
    """State at the end of a step, after the reference price noise.

    ``m_p_pre`` is the reference price before the noise update, i.e. the
    price the pool last traded against.
    """

    step: int
    m_p: float
    m_p_pre: float
    m_u: float
    gamma: float
    reserve_alpha: float
    reserve_beta: float
    k: float
    uni_supply: float
    holdings: dict
    utilities: dict
    trades: tuple = ()

    @property
    def band(self) -> tuple:
        return self.gamma * self.m_p, self.m_p / self.gamma

    @property
    def band_pre(self) -> tuple:
        return self.gamma * self.m_p_pre, self.m_p_pre / self.gamma

    def in_band_pre(self, tol: float = BAND_TOL) -> bool:
        lo, hi = self.band_pre
        return lo * (1 - tol) <= self.m_u <= hi * (1 + tol)


@dataclass
class SimulationResult:
    """Records from one run plus each agent's passive-hold baseline ``(alpha, beta)``."""

    config: SimulationConfig
    records: list
    baselines: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def __iter__(self):
        return iter(self.records)


@dataclass
class SimulationState:
    market: ConstantProductMarket
    ledger: LiquidityLedger
    reference: ReferenceMarket
    wallets: dict
    baselines: dict
    estimators: dict
    rng: np.random.Generator


def _action_order(agents, policy, rng):
    if policy == "fixed_order":
        return list(agents)
    if policy == "shuffle_per_step":
        return [agents[i] for i in rng.permutation(len(agents))]
    return ([a for a in agents if not isinstance(a, Arbitrageur)]
            + [a for a in agents if isinstance(a, Arbitrageur)])


def initial_state(config: SimulationConfig) -> SimulationState:
    """Seed the pool from the InitialLPs in list order and open every wallet."""
    config.validate()
    market = None
    ledger = LiquidityLedger()
    wallets, baselines, estimators = {}, {}, {}
    for agent in config.agents:
        if not isinstance(agent, InitialLP):
            continue
        if market is None:
            market = ConstantProductMarket(agent.alpha_amount, agent.beta_amount, config.gamma)
            ledger.mint(agent.name, agent.beta_amount)
            deposit = (agent.alpha_amount, agent.beta_amount)
        else:
            # later LPs deposit at the pool ratio; their alpha figure is not used
            dep_alpha = alpha_required(market, agent.beta_amount)
            add_liquidity(market, ledger, agent.name, agent.beta_amount)
            deposit = (dep_alpha, agent.beta_amount)
        wallets[agent.name] = Wallet(uni=ledger.balance(agent.name))
        baselines[agent.name] = deposit
    for agent in config.agents:
        if isinstance(agent, InitialLP):
            continue
        if isinstance(agent, RationalLP):
            wallets[agent.name] = Wallet(agent.alpha_amount, agent.beta_amount)
            baselines[agent.name] = (agent.alpha_amount, agent.beta_amount)
            estimators[agent.name] = EwmaEstimator(3, agent.ewma_decay)
        else:
            wallets[agent.name] = Wallet()
            baselines[agent.name] = (0.0, 0.0)
    rng = np.random.Generator(np.random.PCG64(int(config.seed)))
    state = SimulationState(market, ledger, config.reference.copy(), wallets, baselines,
                            estimators, rng)
    _observe_prices(state)
    return state


def _observe_prices(state):
    m_p = state.reference.m_p
    p = np.array([m_p, 1.0, uni_price(state.market, state.ledger, m_p)])
    for est in state.estimators.values():
        est.observe(p)


def _record(state, step, m_p_pre, trades, gamma):
    market, ledger, m_p = state.market, state.ledger, state.reference.m_p
    p_uni = uni_price(market, ledger, m_p)
    holdings, utilities = {}, {}
    for name, w in state.wallets.items():
        holdings[name] = (float(w.alpha), float(w.beta), float(w.uni))
        a0, b0 = state.baselines[name]
        utilities[name] = float(w.value(m_p, p_uni) - (m_p * a0 + b0))
    return TimeStepRecord(step, m_p, m_p_pre, market.reserve_beta / market.reserve_alpha, gamma,
                          market.reserve_alpha, market.reserve_beta, market.k, ledger.uni_supply,
                          holdings, utilities, tuple(trades))


def step_simulation(state: SimulationState, config: SimulationConfig, step: int) -> TimeStepRecord:
    """Advance one step: agents act, then the reference price takes its noise draw."""
    trades = []
    for agent in _action_order(config.agents, config.ordering_policy, state.rng):
        wallet = state.wallets[agent.name]
        if isinstance(agent, Arbitrageur):
            trades += arbitrageur_act(agent, state.market, state.reference, wallet)
        elif isinstance(agent, Trader):
            trades += trader_act(agent, state.market, state.reference, state.rng, wallet)
        elif isinstance(agent, RationalLP):
            trades += rational_lp_act(agent, state.market, state.ledger, state.reference,
                                      state.estimators[agent.name], wallet)
    m_p_pre = state.reference.m_p
    state.reference.apply_noise(state.rng.standard_normal())
    _observe_prices(state)
    return _record(state, step, m_p_pre, trades, config.gamma)


def run_simulation(config: SimulationConfig) -> SimulationResult:
    """Run ``config.steps`` steps; the result holds ``steps + 1`` records (step 0 first).

    All randomness comes from one PCG64 stream seeded by ``config.seed`` and
    consumed in a fixed order each step: the shuffle permutation (only under
    ``shuffle_per_step``), trader draws in acting order, then the noise draw.
    """
    state = initial_state(config)
    records = [_record(state, 0, state.reference.m_p, (), config.gamma)]
    for step in range(1, config.steps + 1):
        records.append(step_simulation(state, config, step))
    return SimulationResult(config, records, dict(state.baselines))


def initial_lp_utility(result: SimulationResult, agent: str) -> np.ndarray:
    """Burn value of the agent's UNI minus its deposit held passively, per step.

    Recomputed from the recorded reserves, supply and holdings.
    """
    a0, b0 = result.baselines[agent]
    out = np.empty(len(result.records))
    for i, rec in enumerate(result.records):
        uni = rec.holdings[agent][2]
        basket = (rec.m_p * rec.reserve_alpha + rec.reserve_beta) * uni / rec.uni_supply
        out[i] = basket - (rec.m_p * a0 + b0)
    return out


def band_fraction(records, tol: float = BAND_TOL, skip_initial: bool = True) -> Optional[float]:
    """Fraction of records whose pool price sits in the pre-noise no-arbitrage band."""
    rows = [r for r in records if not (skip_initial and r.step == 0)]
    if not rows:
        return None
    return sum(r.in_band_pre(tol) for r in rows) / len(rows)
