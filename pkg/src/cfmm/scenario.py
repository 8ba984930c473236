"""YAML scenario documents: schema, line-aware validation, and conversion.

A scenario mirrors :class:`~cfmm.simulation.SimulationConfig` plus an
``output`` block. Unknown keys are errors. Example::

    seed: 7
    steps: 1000
    gamma: 0.997
    ordering_policy: arbitrageur_last
    reference: {m_p: 1.0, sigma: 0.01}
    agents:
      - {type: initial_lp, name: lp, alpha: 1000, beta: 1000}
      - {type: arbitrageur, name: arb, rho_alpha: 1.0e-8, rho_beta: 1.0e-8}
    output: {directory: out, record_every: 1}
"""
from __future__ import annotations

from typing import Annotated, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .simulation import (
    Arbitrageur,
    InitialLP,
    RationalLP,
    ReferenceMarket,
    SimulationConfig,
    SizeDistribution,
    Trader,
)


class ScenarioError(Exception):
    """Scenario failed to parse or validate; ``problems`` holds ``(line, message)`` pairs."""

    def __init__(self, path, problems):
        self.path = path
        self.problems = problems
        super().__init__("\n".join(f"{path}:{line}: {msg}" if line else f"{path}: {msg}"
                                   for line, msg in problems))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ReferenceSpec(_Strict):
    m_p: float = Field(1.0, gt=0)
    kappa: float = Field(0.0, ge=0)
    xi: float = Field(0.0, ge=0)
    mu: float = 0.0
    sigma: float = Field(0.0, ge=0)


class SizeSpec(_Strict):
    kind: Literal["fixed", "lognormal"] = "fixed"
    value: float = Field(1.0, ge=0)
    mean_log: float = 0.0
    sigma_log: float = Field(1.0, ge=0)


class ArbitrageurSpec(_Strict):
    type: Literal["arbitrageur"]
    name: str
    rho_alpha: float = Field(0.0, ge=0)
    rho_beta: float = Field(0.0, ge=0)


class InitialLPSpec(_Strict):
    type: Literal["initial_lp"]
    name: str
    alpha: float = Field(gt=0)
    beta: float = Field(gt=0)


class RationalLPSpec(_Strict):
    type: Literal["rational_lp"]
    name: str
    risk_aversion: float = Field(gt=0)
    alpha: float = Field(0.0, ge=0)
    beta: float = Field(0.0, ge=0)
    ewma_decay: float = Field(0.9, gt=0, lt=1)
    rebalance_threshold: float = Field(0.01, ge=0)
    min_history: int = Field(2, ge=1)


class TraderSpec(_Strict):
    type: Literal["trader"]
    name: str
    size: SizeSpec = SizeSpec()
    max_premium: float = Field(0.01, ge=0)
    direction_prob: float = Field(0.5, ge=0, le=1)


AgentEntry = Annotated[
    Union[ArbitrageurSpec, InitialLPSpec, RationalLPSpec, TraderSpec],
    Field(discriminator="type"),
]


class OutputSpec(_Strict):
    directory: str = "out"
    record_every: int = Field(1, ge=1)


class Scenario(_Strict):
    seed: int = Field(ge=0, le=2 ** 64 - 1)
    steps: int = Field(ge=0)
    gamma: float = Field(0.997, gt=0, le=1)
    ordering_policy: Literal["fixed_order", "shuffle_per_step", "arbitrageur_last"] = "arbitrageur_last"
    reference: ReferenceSpec = ReferenceSpec()
    agents: List[AgentEntry] = Field(min_length=1)
    output: OutputSpec = OutputSpec()

    def to_config(self, seed: Optional[int] = None, steps: Optional[int] = None) -> SimulationConfig:
        agents = []
        for a in self.agents:
            if a.type == "arbitrageur":
                agents.append(Arbitrageur(a.name, a.rho_alpha, a.rho_beta))
            elif a.type == "initial_lp":
                agents.append(InitialLP(a.name, a.alpha, a.beta))
            elif a.type == "rational_lp":
                agents.append(RationalLP(a.name, a.risk_aversion, a.alpha, a.beta, a.ewma_decay,
                                         a.rebalance_threshold, a.min_history))
            else:
                size = SizeDistribution(a.size.kind, a.size.value, a.size.mean_log, a.size.sigma_log)
                agents.append(Trader(a.name, size, a.max_premium, a.direction_prob))
        ref = self.reference
        cfg = SimulationConfig(
            steps=self.steps if steps is None else steps,
            seed=self.seed if seed is None else seed,
            reference=ReferenceMarket(ref.m_p, ref.kappa, ref.xi, ref.mu, ref.sigma),
            agents=tuple(agents),
            gamma=self.gamma,
            ordering_policy=self.ordering_policy,
        )
        cfg.validate()
        return cfg


def scenario_from_config(config: SimulationConfig, output: Optional[OutputSpec] = None) -> Scenario:
    agents = []
    for a in config.agents:
        if isinstance(a, Arbitrageur):
            agents.append(ArbitrageurSpec(type="arbitrageur", name=a.name, rho_alpha=a.rho_alpha,
                                          rho_beta=a.rho_beta))
        elif isinstance(a, InitialLP):
            agents.append(InitialLPSpec(type="initial_lp", name=a.name, alpha=a.alpha_amount,
                                        beta=a.beta_amount))
        elif isinstance(a, RationalLP):
            agents.append(RationalLPSpec(type="rational_lp", name=a.name,
                                         risk_aversion=a.risk_aversion, alpha=a.alpha_amount,
                                         beta=a.beta_amount, ewma_decay=a.ewma_decay,
                                         rebalance_threshold=a.rebalance_threshold,
                                         min_history=a.min_history))
        else:
            s = a.size
            agents.append(TraderSpec(type="trader", name=a.name,
                                     size=SizeSpec(kind=s.kind, value=s.value, mean_log=s.mean_log,
                                                   sigma_log=s.sigma_log),
                                     max_premium=a.max_premium, direction_prob=a.direction_prob))
    r = config.reference
    return Scenario(seed=config.seed, steps=config.steps, gamma=config.gamma,
                    ordering_policy=config.ordering_policy,
                    reference=ReferenceSpec(m_p=r.m_p, kappa=r.kappa, xi=r.xi, mu=r.mu, sigma=r.sigma),
                    agents=agents, output=output or OutputSpec())


def dump_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario.model_dump(mode="json"), sort_keys=False)


# -- line-aware loading ------------------------------------------------------------


def _node_line(root, loc):
    """Best line (1-based) for a pydantic error location inside a composed YAML tree."""
    node = root
    line = node.start_mark.line + 1 if node is not None else None
    for part in loc:
        if isinstance(node, yaml.MappingNode) and isinstance(part, str):
            for key, value in node.value:
                if key.value == part:
                    line = key.start_mark.line + 1
                    node = value
                    break
            else:
                # discriminator tags and missing keys: stay on the enclosing mapping
                continue
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int):
            if 0 <= part < len(node.value):
                node = node.value[part]
                line = node.start_mark.line + 1
        else:
            break
    return line


def parse_scenario(text: str, path: str = "<scenario>") -> Scenario:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ScenarioError(path, [(line, f"YAML syntax error: {getattr(exc, 'problem', exc)}")]) from None
    if not isinstance(data, dict):
        raise ScenarioError(path, [(1, "scenario must be a mapping")])
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        problems = []
        for err in exc.errors():
            loc = err["loc"]
            where = ".".join(str(p) for p in loc)
            msg = "unknown key" if err["type"] == "extra_forbidden" else err["msg"]
            problems.append((_node_line(root, loc), f"{where}: {msg}"))
        raise ScenarioError(path, problems) from None


def load_scenario(path) -> Scenario:
    path = str(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(path, [(None, f"cannot read scenario: {exc.strerror}")]) from None
    return parse_scenario(text, path)
