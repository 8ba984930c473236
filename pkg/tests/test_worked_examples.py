"""Worked examples with frozen expected values, each checked against its own oracle."""
import math

import numpy as np
import pytest

from cfmm import ConstantMeanMarket, ConstantProductMarket, LiquidityLedger, execute_mean_trade
from cfmm.amm_core import (
    Direction,
    add_liquidity,
    alpha_required,
    execute_trade,
    marginal_cost_change,
    marginal_price,
    marginal_price_with_fee,
    quote_alpha_for_beta,
    quote_beta_for_alpha,
    remove_liquidity,
)
from cfmm.analysis import (
    GbmParams,
    PricePath,
    gbm_expected_portfolio_value,
    lp_portfolio_value,
    lp_relative_gain,
    monte_carlo_portfolio_value,
    price_gap,
    split_trade_deficit,
)
from cfmm.arbitrage import (
    PenaltySpec,
    ReferencePriceQuote,
    check_no_arbitrage,
    solve_penalized_cpmm,
    solve_riskless_cpmm,
)
from cfmm.simulation import (
    Arbitrageur,
    InitialLP,
    ReferenceMarket,
    SimulationConfig,
    SizeDistribution,
    Trader,
    arbitrageur_act,
    initial_lp_utility,
    markowitz_solve,
    run_simulation,
    trader_act,
)


def bisect_out(r_in, r_out, g, d, tol=1e-12):
    """Solve (r_out - x)(r_in + g d) = r_in r_out for x by bisection."""
    lo, hi = 0.0, r_out
    while hi - lo > tol * r_out:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if (r_out - mid) * (r_in + g * d) > r_in * r_out else (lo, mid)
    return 0.5 * (lo + hi)


@pytest.mark.parametrize("g, d, expected", [(1.0, 100.0, 50.0), (0.997, 100.0, 9970 / 199.7)])
def test_quotes(g, d, expected):
    m = ConstantProductMarket(100.0, 100.0, g)
    assert bisect_out(100, 100, g, d) == pytest.approx(expected, abs=1e-9)
    assert quote_beta_for_alpha(m, d) == pytest.approx(expected, rel=1e-12)
    assert quote_alpha_for_beta(m, d) == pytest.approx(expected, rel=1e-12)
    assert quote_beta_for_alpha(m, 1e-12) == pytest.approx(1e-12 * g, rel=1e-9)


def test_execute_example():
    m = ConstantProductMarket(100.0, 100.0, 1.0)
    out = execute_trade(m, Direction.BETA_FOR_ALPHA, 100.0)
    assert (m.reserve_alpha, m.reserve_beta) == (50.0, 200.0)
    assert out.k_after == out.k_before == 10000.0
    m = ConstantProductMarket(100.0, 100.0, 0.997)
    out = execute_trade(m, Direction.BETA_FOR_ALPHA, 1e-3)
    assert out.k_after > out.k_before


def test_prices_examples():
    m = ConstantProductMarket(100.0, 200.0, 1.0)
    assert marginal_price(m) == 2.0
    assert marginal_cost_change(m) == pytest.approx(0.04)
    assert marginal_cost_change(ConstantProductMarket(200.0, 400.0, 1.0)) == pytest.approx(0.02)
    assert marginal_cost_change(ConstantProductMarket(100.0, 200.0, 0.5)) == pytest.approx(0.08)
    assert marginal_price_with_fee(ConstantProductMarket(5.0, 5.0, 0.997)) == pytest.approx(1.003009, abs=1e-6)


def test_liquidity_examples():
    m = ConstantProductMarket(30.0, 100.0)
    led = LiquidityLedger()
    led.mint("lp", 100.0)
    assert alpha_required(m, 10.0) == pytest.approx(0.1 * 30.0)
    assert add_liquidity(m, led, "x", 10.0) == pytest.approx(10.0)
    m = ConstantProductMarket(30.0, 100.0)
    led = LiquidityLedger()
    led.mint("lp", 100.0)
    add_liquidity(m, led, "lp", 100.0)
    assert (m.reserve_alpha, m.reserve_beta, led.uni_supply) == (60.0, 200.0, 200.0)
    m = ConstantProductMarket(50.0, 200.0)
    led = LiquidityLedger()
    led.mint("lp", 100.0)
    assert remove_liquidity(m, led, "lp", 10.0) == pytest.approx((5.0, 20.0))


def test_mean_market_shadows_product_market():
    rng = np.random.default_rng(11)
    cp = ConstantProductMarket(120.0, 80.0, 0.997)
    mean = ConstantMeanMarket([120.0, 80.0], [0.5, 0.5], 0.997)
    for _ in range(200):
        coin = int(rng.integers(2))
        d = float(rng.uniform(0.1, 20))
        if coin == 0:
            execute_trade(cp, Direction.ALPHA_FOR_BETA, d)
            mean, _ = execute_mean_trade(mean, 0, 1, d)
        else:
            execute_trade(cp, Direction.BETA_FOR_ALPHA, d)
            mean, _ = execute_mean_trade(mean, 1, 0, d)
        np.testing.assert_allclose(mean.reserves, [cp.reserve_alpha, cp.reserve_beta], rtol=1e-12)
        assert mean.k == pytest.approx(math.sqrt(cp.k), rel=1e-12)


def test_riskless_example_against_fine_grid():
    # profit m_p x - 100 x / (100 - x) on [0, 100) with step 1e-5
    best = -np.inf
    for start in range(0, 100):
        x = start + np.arange(0, 1, 1e-5)
        x = x[x < 100]
        best = max(best, float(np.max(4 * x - 100 * x / (100 - x))))
    sol = solve_riskless_cpmm(ConstantProductMarket(100.0, 100.0, 1.0), ReferencePriceQuote(4.0))
    assert best == pytest.approx(100.0, abs=1e-8)
    assert sol.profit == pytest.approx(best, abs=1e-8)
    assert (sol.delta_alpha, sol.delta_beta) == pytest.approx((50.0, 100.0))


def test_band_examples():
    assert not check_no_arbitrage(ConstantProductMarket(1000.0, 1004.0, 0.997), ReferencePriceQuote(1.0)).holds
    assert check_no_arbitrage(ConstantProductMarket(1000.0, 1003.0, 0.997), ReferencePriceQuote(1.0)).holds
    assert not check_no_arbitrage(ConstantProductMarket(1000.0, 1001.0, 1.0), ReferencePriceQuote(1.0)).holds
    assert check_no_arbitrage(ConstantProductMarket(7.0, 7.0, 1.0), ReferencePriceQuote(1.0)).holds


def test_penalized_monotone_in_rho_and_eta():
    m = ConstantProductMarket(100.0, 100.0, 0.997)
    q = ReferencePriceQuote(4.0)
    by_rho = [solve_penalized_cpmm(m, q, PenaltySpec.quadratic(r)).delta_alpha
              for r in np.logspace(-6, 3, 30)]
    by_eta = [solve_penalized_cpmm(m, q, PenaltySpec.market_impact(e, 1.5)).delta_alpha
              for e in np.logspace(-6, 1, 30)]
    for seq in (by_rho, by_eta):
        assert all(b <= a * (1 + 1e-9) for a, b in zip(seq, seq[1:]))
    riskless = solve_riskless_cpmm(m, q).delta_alpha
    assert 0 < by_eta[0] <= riskless and by_rho[-1] < 1e-2


def test_analysis_examples():
    assert lp_relative_gain(PricePath.from_prices([1.0, 2.5, 4.0])) == 2.0
    assert lp_relative_gain(PricePath.from_prices([3.0, 3.0])) == 1.0
    assert lp_portfolio_value(1e4, 1.0) == 200.0
    p = GbmParams(0.1, 0.2, 1.0)
    assert gbm_expected_portfolio_value(1e4, p) == pytest.approx(200 * math.exp(0.045))
    # second form: 2 exp(-T sigma^2 / 8) sqrt(k E[m_T]) with E[m_T] = exp(mu T)
    assert gbm_expected_portfolio_value(1e4, p) == pytest.approx(2 * math.exp(-0.04 / 8) * math.sqrt(1e4 * math.exp(0.1)))
    flat = monte_carlo_portfolio_value(1e4, GbmParams(0.1, 0.0, 2.0), 1000, seed=1)
    assert flat.mean == pytest.approx(200 * math.exp(0.1), rel=1e-14) and flat.std_error < 1e-12
    mc = monte_carlo_portfolio_value(1e4, GbmParams(0.0, 0.5, 1.0), 100_000, seed=3)
    assert abs(mc.mean - gbm_expected_portfolio_value(1e4, GbmParams(0.0, 0.5, 1.0))) < 3 * mc.std_error
    assert mc == monte_carlo_portfolio_value(1e4, GbmParams(0.0, 0.5, 1.0), 100_000, seed=3)


def test_price_gap_scaling():
    g1 = price_gap(100.0, 200.0, 1.0, 1.0, 1.0)
    assert g1.leading_order == pytest.approx(0.005) and g1.exact > 0
    g2 = price_gap(100.0, 200.0, 1.0, 1.0, 0.5)
    assert g2.leading_order == pytest.approx(g1.leading_order / 4)
    assert abs(g1.exact - g1.leading_order) < 10 * (1 / 100) ** 3 * 100
    assert price_gap(100.0, 100.0 + 1e-9, 1.0, 1.0, 1.0).exact == pytest.approx(0.0, abs=1e-12)


def test_split_deficit_examples():
    assert split_trade_deficit(ConstantProductMarket(100.0, 100.0, 0.997), 10.0, 10.0) > 0
    fees = np.linspace(0.0, 0.5, 21)
    deficits = [split_trade_deficit(ConstantProductMarket(100.0, 100.0, 1 - f), 10.0, 10.0) for f in fees]
    assert deficits[0] == pytest.approx(0.0, abs=1e-12)
    assert all(b > a for a, b in zip(deficits, deficits[1:]))


def test_agent_examples():
    m = ConstantProductMarket(100.0, 100.0, 1.0)
    assert arbitrageur_act(Arbitrageur("a"), m, ReferenceMarket(1.0)) == []
    legs = arbitrageur_act(Arbitrageur("a"), m, ReferenceMarket(4.0))
    assert legs[0].alpha == pytest.approx(50.0, rel=1e-9)
    assert marginal_price(m) == pytest.approx(4.0, rel=1e-9)
    rng = np.random.default_rng(0)
    inside = ConstantProductMarket(100.0, 100.1, 0.997)
    for _ in range(20):
        assert trader_act(Trader("t", SizeDistribution("fixed", 1.0), max_premium=0.0), inside,
                          ReferenceMarket(1.0), rng) == []
    assert trader_act(Trader("t", SizeDistribution("fixed", 0.0)), inside, ReferenceMarket(1.0), rng) == []
    assert trader_act(Trader("t", SizeDistribution("fixed", 1.0), max_premium=math.inf), inside,
                      ReferenceMarket(1.0), rng)


def test_markowitz_examples():
    np.testing.assert_array_equal(markowitz_solve(np.array([1.0, 0.0, 0.0]), np.eye(3), 1.0), [1.0, 0.0, 0.0])
    np.testing.assert_allclose(markowitz_solve(np.array([1.0, 0.0, 5.0]), np.eye(3), 1e9), 1 / 3, atol=1e-8)
    mu = np.array([0.03, 0.01, -0.02])
    s = np.array([[0.04, 0.01, 0.0], [0.01, 0.09, 0.02], [0.0, 0.02, 0.16]])
    np.testing.assert_allclose(markowitz_solve(mu, s, 2.0), markowitz_solve(3 * mu, s, 6.0), atol=1e-12)


def test_noise_free_run_enters_band_at_step_one():
    cfg = SimulationConfig(50, 0, ReferenceMarket(2.0, sigma=0.0),
                           (InitialLP("lp", 100.0, 100.0), Arbitrageur("arb", 1e-9, 1e-9)))
    res = run_simulation(cfg)
    assert not res[0].in_band_pre()
    assert all(r.in_band_pre() for r in res.records[1:])


def test_lp_utility_negative_under_drift_without_volume():
    cfg = SimulationConfig(100, 0, ReferenceMarket(1.0, mu=0.01, sigma=0.0),
                           (InitialLP("lp", 100.0, 100.0), Arbitrageur("arb")), gamma=1.0)
    u = initial_lp_utility(run_simulation(cfg), "lp")
    # step 1: the pool was arbitraged at the pre-noise price, so it still holds the deposit
    assert u[0] == 0.0 and u[1] == pytest.approx(0.0, abs=1e-12) and np.all(u[2:] < 0)
    # reserves sit at the pre-noise price m_pre and are valued at the post-noise m
    m, m_pre = math.exp(0.01 * 100), math.exp(0.01 * 99)
    value = m * 100 / math.sqrt(m_pre) + 100 * math.sqrt(m_pre)
    assert u[-1] == pytest.approx(value - (100 * m + 100), rel=1e-9)
