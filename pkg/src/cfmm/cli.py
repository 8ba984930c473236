"""Command-line front end: ``simulate``, ``arbitrage`` and ``analyze``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime or solver failure.

``simulate`` writes two files into the output directory:

``timeseries.csv``
    Header plus one row per recorded step. Columns, in order: ``step, m_p,
    m_u, band_lo, band_hi, R_alpha, R_beta, k, uni_supply``, then
    ``utility_<agent>`` for every agent in scenario order, then ``m_p_pre``
    (the reference price before that step's noise draw). ``m_p`` and the band
    are post-noise. Floats are written with ``repr`` so they round-trip.

``report.json``
    Summary recomputable from the CSV, see :func:`build_report`.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

from . import __version__
from .amm_core import ConstantProductMarket
from .analysis import (
    GbmParams,
    PricePath,
    gbm_expected_portfolio_value,
    hold_value,
    lp_portfolio_value,
    lp_relative_gain,
    lp_step_gains,
    manipulation_cost,
    manipulation_lower_bound,
    monte_carlo_portfolio_value,
    price_gap,
    split_trade_deficit,
)
from .arbitrage import (
    NO_PENALTY,
    PenaltySpec,
    ReferencePriceQuote,
    apply_solution,
    check_no_arbitrage,
    solve_penalized_cpmm,
    solve_riskless_cpmm,
)
from .errors import CfmmError, InvalidInputError
from .scenario import ScenarioError, load_scenario
from .simulation import Arbitrageur, InitialLP, run_simulation
from .simulation.runner import BAND_TOL

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
BASE_COLUMNS = ("step", "m_p", "m_u", "band_lo", "band_hi", "R_alpha", "R_beta", "k", "uni_supply")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x) -> str:
    return repr(float(x)) if not isinstance(x, int) else str(x)


# -- simulate --------------------------------------------------------------------


def timeseries_columns(agent_names) -> list:
    return list(BASE_COLUMNS) + [f"utility_{n}" for n in agent_names] + ["m_p_pre"]


def timeseries_rows(result, record_every: int = 1):
    names = [a.name for a in result.config.agents]
    last = result.records[-1].step
    for rec in result.records:
        if rec.step % record_every and rec.step != last:
            continue
        lo, hi = rec.band
        row = [rec.step, rec.m_p, rec.m_u, lo, hi, rec.reserve_alpha, rec.reserve_beta, rec.k,
               rec.uni_supply]
        row += [rec.utilities[n] for n in names]
        row.append(rec.m_p_pre)
        yield row


def write_timeseries(path, result, record_every: int = 1) -> None:
    names = [a.name for a in result.config.agents]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(timeseries_columns(names))
        for row in timeseries_rows(result, record_every):
            w.writerow([_fmt(v) for v in row])


def read_timeseries(path) -> list:
    """Parse a time-series file back into dicts of floats (``step`` as int)."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: int(v) if k == "step" else float(v) for k, v in r.items()} for r in rows]


def build_report(rows, config, tol: float = BAND_TOL) -> dict:
    """Summary of a run computed only from time-series rows.

    ``band_fraction`` counts rows with ``step >= 1`` whose ``m_u`` lies in
    ``[gamma*m_p_pre, m_p_pre/gamma]`` within relative ``tol``; it is ``None``
    when there are no such rows. ``arbitrageur_profit`` is the summed final
    utility of all arbitrageurs.
    """
    g = config.gamma
    moved = [r for r in rows if r["step"] >= 1]
    inside = sum(g * r["m_p_pre"] * (1 - tol) <= r["m_u"] <= r["m_p_pre"] / g * (1 + tol)
                 for r in moved)
    final = rows[-1]
    utilities = {a.name: final[f"utility_{a.name}"] for a in config.agents}
    return {
        "seed": int(config.seed),
        "steps": int(config.steps),
        "gamma": g,
        "ordering_policy": config.ordering_policy,
        "rows": len(rows),
        "band_tolerance": tol,
        "band_fraction": inside / len(moved) if moved else None,
        "final": {k: final[k] for k in ("step", "m_p", "m_u", "R_alpha", "R_beta", "k", "uni_supply")},
        "final_utilities": utilities,
        "initial_lp_utilities": {a.name: utilities[a.name] for a in config.agents
                                 if isinstance(a, InitialLP)},
        "arbitrageur_profit": math.fsum(utilities[a.name] for a in config.agents
                                        if isinstance(a, Arbitrageur)),
    }


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    try:
        config = scenario.to_config(seed=args.seed, steps=args.steps)
    except InvalidInputError as exc:
        raise UsageError(f"{args.scenario}: {exc}") from None
    out_dir = args.out or scenario.output.directory
    result = run_simulation(config)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "timeseries.csv")
    write_timeseries(csv_path, result, scenario.output.record_every)
    report = build_report(read_timeseries(csv_path), config)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    frac = report["band_fraction"]
    print(f"wrote {csv_path} ({report['rows']} rows); band fraction "
          f"{'n/a' if frac is None else format(frac, '.6f')}")
    return EXIT_OK


# -- arbitrage ---------------------------------------------------------------------


def _penalty_from_args(args) -> PenaltySpec:
    if args.penalty == "none":
        return NO_PENALTY
    if args.penalty == "quadratic":
        ra = args.rho_alpha if args.rho_alpha is not None else args.rho
        rb = args.rho_beta if args.rho_beta is not None else args.rho
        if ra is None and rb is None:
            raise UsageError("--penalty quadratic needs --rho or --rho-alpha/--rho-beta")
        return PenaltySpec.quadratic(ra or 0.0, rb or 0.0)
    if args.eta is None:
        raise UsageError("--penalty impact needs --eta")
    return PenaltySpec.market_impact(args.eta, args.xi)


def cmd_arbitrage(args) -> int:
    try:
        market = ConstantProductMarket(args.ralpha, args.rbeta, args.gamma)
        quote = ReferencePriceQuote(args.mp)
        penalty = _penalty_from_args(args)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None
    band = check_no_arbitrage(market, quote)
    if penalty.kind == "none":
        sol = solve_riskless_cpmm(market, quote)
    else:
        sol = solve_penalized_cpmm(market, quote, penalty)
    after = market.copy()
    apply_solution(after, sol)
    post = check_no_arbitrage(after, quote)
    out = {
        "delta_alpha": sol.delta_alpha,
        "delta_beta": sol.delta_beta,
        "profit": sol.profit,
        "objective": sol.objective,
        "direction": sol.direction.value if sol.direction is not None else None,
        "m_u": band.m_u,
        "band": [band.lower, band.upper],
        "in_band": band.holds,
        "m_u_after": post.m_u,
        "in_band_after": post.holds,
        "penalty": penalty.kind,
    }
    if args.json:
        print(json.dumps(out))
    else:
        for key, val in out.items():
            print(f"{key:14s} {val}")
    return EXIT_OK


# -- analyze -----------------------------------------------------------------------


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _analyze(args) -> dict:
    what = args.what
    if what == "manipulation":
        return {"epsilon": args.eps, "cost": manipulation_cost(args.rbeta, args.eps),
                "lower_bound": manipulation_lower_bound(args.rbeta, args.eps)}
    if what == "lp-returns":
        path = PricePath.from_prices(_floats(args.prices))
        out = {"relative_gain": lp_relative_gain(path),
               "step_gains": lp_step_gains(path).tolist()}
        if args.k is not None:
            out["portfolio_value"] = lp_portfolio_value(args.k, path.prices[-1])
            out["hold_value"] = hold_value(args.k, path.prices[0], path.prices[-1])
        return out
    if what == "gbm":
        params = GbmParams(args.mu, args.sigma, args.horizon, args.m0)
        out = {"expected_value": gbm_expected_portfolio_value(args.k, params)}
        if args.paths:
            mc = monte_carlo_portfolio_value(args.k, params, args.paths, args.seed)
            out.update(mc_mean=mc.mean, mc_std_error=mc.std_error, mc_paths=mc.n_paths)
        return out
    if what == "price-gap":
        gap = price_gap(args.ralpha, args.ralpha_prime, args.m_u, args.gamma, args.dalpha)
        return {"leading_order": gap.leading_order, "exact": gap.exact}
    market = ConstantProductMarket(args.ralpha, args.rbeta, args.gamma)
    return {"deficit": split_trade_deficit(market, args.d1, args.d2)}


def cmd_analyze(args) -> int:
    try:
        out = _analyze(args)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None
    if args.json:
        print(json.dumps(out))
    else:
        for key, val in out.items():
            print(f"{key:16s} {val}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cfmm", description="Constant function market maker toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a YAML scenario")
    s.add_argument("scenario")
    s.add_argument("--seed", type=int)
    s.add_argument("--steps", type=int)
    s.add_argument("--out", help="output directory (overrides the scenario)")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("arbitrage", help="optimal arbitrage against a reference price")
    a.add_argument("--ralpha", type=float, required=True)
    a.add_argument("--rbeta", type=float, required=True)
    a.add_argument("--gamma", type=float, default=0.997)
    a.add_argument("--mp", type=float, required=True)
    a.add_argument("--penalty", choices=("none", "quadratic", "impact"), default="none")
    a.add_argument("--rho", type=float, help="quadratic penalty on both coins")
    a.add_argument("--rho-alpha", type=float)
    a.add_argument("--rho-beta", type=float)
    a.add_argument("--eta", type=float, help="market impact scale")
    a.add_argument("--xi", type=float, default=1.0, help="market impact exponent")
    a.add_argument("--json", action="store_true")
    a.set_defaults(func=cmd_arbitrage)

    z = sub.add_parser("analyze", help="closed-form analyses")
    zs = z.add_subparsers(dest="what", required=True, parser_class=_Parser)
    m = zs.add_parser("manipulation")
    m.add_argument("--rbeta", type=float, required=True)
    m.add_argument("--eps", type=float, required=True)
    r = zs.add_parser("lp-returns")
    r.add_argument("--prices", required=True, help="comma-separated reference prices")
    r.add_argument("--k", type=float)
    g = zs.add_parser("gbm")
    g.add_argument("--k", type=float, required=True)
    g.add_argument("--mu", type=float, required=True)
    g.add_argument("--sigma", type=float, required=True)
    g.add_argument("--horizon", type=float, default=1.0)
    g.add_argument("--m0", type=float, default=1.0)
    g.add_argument("--paths", type=int, default=0, help="also run a Monte Carlo check")
    g.add_argument("--seed", type=int, default=0)
    pg = zs.add_parser("price-gap")
    pg.add_argument("--ralpha", type=float, required=True)
    pg.add_argument("--ralpha-prime", type=float, required=True)
    pg.add_argument("--m-u", type=float, required=True)
    pg.add_argument("--gamma", type=float, default=0.997)
    pg.add_argument("--dalpha", type=float, required=True)
    sp = zs.add_parser("split")
    sp.add_argument("--ralpha", type=float, required=True)
    sp.add_argument("--rbeta", type=float, required=True)
    sp.add_argument("--gamma", type=float, default=0.997)
    sp.add_argument("--d1", type=float, required=True)
    sp.add_argument("--d2", type=float, required=True)
    for q in (m, r, g, pg, sp):
        q.add_argument("--json", action="store_true")
    z.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors, --help, --version
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"cfmm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CfmmError, OSError, ArithmeticError) as exc:
        print(f"cfmm: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
