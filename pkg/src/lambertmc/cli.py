"""Command-line interface: ``lambertmc price | analyze ... | simulate``.

Every command writes CSV (to stdout or ``-o``) preceded by one ``#`` line
recording the resolved parameters, seed and package version. ``--threads``
never changes the output bytes.

Exit codes: 0 success, 2 usage or domain error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys

import numpy as np

from . import __version__
from .analysis import (
    d_bar_gamma_profile,
    d_monotonicity_check,
    regime_of,
    rho_star,
    rho_star_large_T,
    rho_star_raw,
    rho_star_small_T,
    uniform_lower_bounds,
)
from .decomposition import (
    boundary_limits,
    call_decomposition,
    call_thresholds,
    classify_call,
    put_decomposition,
    stock_bounds,
    stock_decomposition,
    stock_price_quadrature,
    stock_ratio_bounds,
    value_decomposition,
)
from .direct import PayoffSpec, price_direct, selling_price
from .errors import ConditionViolated, DomainError, NumericalError
from .hedging import SimGrid, StrategyConfig, simulate, superhedge_initial_wealth
from .market import PRESETS, AgentParams, MarketScenario, load_scenario_file, preset
from .mc import STREAM_PRICE, McConfig, sample_normals
from .taylor import taylor_coefficients, taylor_price

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
MARKET_FLAGS = ("r", "T", "s0", "nu", "eta", "mu", "sigma")
SWEEP_AXES = ("rho", "gamma", "K", "T")

PRICE_COLUMNS = [
    "rho", "p_direct", "p_direct_ci_lo", "p_direct_ci_hi",
    "p_lambert", "p_lambert_ci_lo", "p_lambert_ci_hi",
    "D", "d", "g", "var_direct", "var_lambert", "rho_star_marker",
    "gamma", "T", "K", "condition_violated",
]


class Run:
    """Resolved inputs of one invocation."""

    def __init__(self, args):
        self.args = args
        values = {}
        lam = None
        if args.scenario_file:
            values = load_scenario_file(args.scenario_file)
        if args.preset or not args.scenario_file:
            sc, lam = preset(args.preset or "table1")
            base = {k: getattr(sc, k) for k in MARKET_FLAGS}
            base.update({k: v for k, v in values.items() if k in MARKET_FLAGS})
            values = {**values, **base}
        for k in MARKET_FLAGS:
            v = getattr(args, k)
            if v is not None:
                values[k] = v
        missing = [k for k in MARKET_FLAGS if k not in values]
        if missing:
            raise DomainError(f"missing market parameters: {', '.join(missing)}")
        self.scenario = MarketScenario(**{k: values[k] for k in MARKET_FLAGS})
        lam = args.lam if args.lam is not None else values.get("lambda", lam)
        if lam is None:
            raise DomainError("lambda is required (--lam) when no preset is given")
        gamma = args.gamma if args.gamma is not None else values.get("gamma", 0.5)
        x0 = args.x0 if args.x0 is not None else values.get("x0", 0.0)
        self.agent = AgentParams(gamma=gamma, lam=lam, x0=x0)
        rho = getattr(args, "rho", None)
        self.rho = rho if rho is not None else values.get("rho", 0.0)
        self.mc = McConfig(n_samples=args.samples, seed=args.seed, workers=args.threads)

    def header(self) -> str:
        a = self.args
        parts = [f"lambertmc {__version__}", f"command={a.command}"]
        if getattr(a, "what", None):
            parts.append(f"analysis={a.what}")
        sc, ag = self.scenario, self.agent
        parts += [f"{k}={getattr(sc, k)!r}" for k in MARKET_FLAGS]
        parts += [f"gamma={ag.gamma!r}", f"lambda={ag.lam!r}", f"x0={ag.x0!r}", f"rho={self.rho!r}"]
        for key in ("payoff", "K", "sweep", "T_list", "gamma_list", "rho_list", "strategy", "paths", "steps",
                    "superhedge", "initial_wealth", "no_endowment", "position", "order", "verbatim"):
            v = getattr(a, key, None)
            if v in (None, False):
                continue
            if key == "position" and a.command != "analyze":
                continue
            if isinstance(v, (list, tuple)):
                v = (":" if key == "sweep" else ",").join(str(x) for x in v)
            parts.append(f"{key}={v}")
        parts += [f"seed={a.seed}", f"samples={a.samples}"]
        if a.round is not None:
            parts.append(f"round={a.round}")
        return "# " + " ".join(parts)


def _fmt(v, digits):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if digits is not None:
            return f"{round(v, digits) + 0.0:.{digits}f}"
        return f"{v:.17g}"
    return str(v)


def write_csv(run: Run, columns, rows, out):
    buf = io.StringIO()
    buf.write(run.header() + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c), run.args.round) for c in columns])
    out.write(buf.getvalue())


def sweep_values(run: Run):
    """List of ``(rho, scenario, agent, K)`` points for the requested sweep."""
    a = run.args
    K = getattr(a, "K", None)
    base = (run.rho, run.scenario, run.agent, K)
    if not a.sweep:
        return [base]
    axis, lo, hi, n = a.sweep
    if axis not in SWEEP_AXES:
        raise DomainError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    lo, hi, n = float(lo), float(hi), int(n)
    if n < 2:
        raise DomainError("a sweep needs at least 2 points")
    pts = []
    for v in np.linspace(lo, hi, n):
        v = float(v)
        if axis == "rho":
            pts.append((v, run.scenario, run.agent, K))
        elif axis == "gamma":
            pts.append((run.rho, run.scenario, run.agent.with_(gamma=v), K))
        elif axis == "T":
            pts.append((run.rho, run.scenario.with_(T=v), run.agent, K))
        else:
            pts.append((run.rho, run.scenario, run.agent, v))
    return pts


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# --- price ----------------------------------------------------------------------


def _price_row(rho, sc, ag, K, payoff, mc):
    row = {"rho": rho, "gamma": ag.gamma, "T": sc.T, "K": K, "condition_violated": False}
    z = sample_normals(mc, STREAM_PRICE)
    if payoff == "stock":
        direct = price_direct(sc, ag, rho, PayoffSpec.long_stock(), mc, z)
        dec = stock_decomposition(sc, ag, rho, mc, z)
        row.update(d=dec.d, g=dec.g)
    elif payoff == "call":
        dec = call_decomposition(sc, ag, rho, K, mc, z)
        direct = dec.direct
    else:
        direct = selling_price(sc, ag, rho, PayoffSpec.long_put(K), mc, z)
        try:
            dec = put_decomposition(sc, ag, rho, K, mc, z)
        except ConditionViolated:
            dec = None
            row["condition_violated"] = True
    row.update(p_direct=direct.mean, p_direct_ci_lo=direct.ci99[0], p_direct_ci_hi=direct.ci99[1],
               var_direct=direct.variance)
    if dec is not None:
        lp = dec.price
        row.update(p_lambert=lp.mean, p_lambert_ci_lo=lp.ci99[0], p_lambert_ci_hi=lp.ci99[1],
                   D=dec.D, var_lambert=dec.A.variance)
    return row


def cmd_price(run: Run, out):
    a = run.args
    if a.payoff in ("put", "call") and a.K is None and not (a.sweep and a.sweep[0] == "K"):
        raise DomainError(f"--K is required for payoff {a.payoff}")
    if a.payoff == "stock" and a.sweep and a.sweep[0] == "K":
        raise DomainError("a strike sweep needs an option payoff")
    pts = sweep_values(run)
    if a.payoff == "put" and not a.sweep:
        rho, sc, ag, K = pts[0]
        put_decomposition(sc, ag, rho, K, McConfig(n_samples=2))  # raises before sampling
    rows = [_price_row(rho, sc, ag, K, a.payoff, run.mc) for rho, sc, ag, K in pts]
    if a.sweep and a.sweep[0] == "rho":
        rs = rho_star_raw(run.scenario, run.agent)
        nearest = int(np.argmin([abs(r["rho"] - rs) for r in rows])) if regime_of(rs) == "interior" else -1
        for i, r in enumerate(rows):
            r["rho_star_marker"] = i == nearest
    else:
        for r in rows:
            r["rho_star_marker"] = False
    write_csv(run, PRICE_COLUMNS, rows, out)
    return EXIT_OK


# --- analyze ----------------------------------------------------------------------


def _an_rho_star(run):
    Ts = run.args.T_list or [run.scenario.T]
    rows = []
    for T in Ts:
        sc = run.scenario.with_(T=T)
        rep = rho_star(sc, run.agent)
        approx = rho_star_small_T(sc, run.agent)
        rows.append({
            "T": T, "rho_star": rep.rho_star, "regime": rep.regime, "rho_star_small_T": approx,
            "rel_error_pct": 100.0 * abs(approx - rep.rho_star) / abs(rep.rho_star) if rep.rho_star else math.nan,
            "d_at_star": rep.d_at_star, "identity_gap": rep.identity_gap,
        })
    try:
        lim = rho_star_large_T(run.scenario)
    except DomainError:
        lim = math.nan
    for r in rows:
        r["rho_star_large_T"] = lim
    cols = ["T", "rho_star", "regime", "rho_star_small_T", "rel_error_pct", "rho_star_large_T", "d_at_star",
            "identity_gap"]
    return cols, rows


def _an_ratio_bounds(run):
    gammas = run.args.gamma_list or [run.agent.gamma]
    rhos = run.args.rho_list or [-0.8, -0.4, 0.0, 0.4, 0.8]
    rows = []
    for g in gammas:
        ag = run.agent.with_(gamma=g)
        for rho in rhos:
            lo_e, lo_w, up_w, up_e = stock_ratio_bounds(run.scenario, ag, rho)
            b = stock_bounds(run.scenario, ag, rho)
            p = stock_price_quadrature(run.scenario, ag, rho)
            rows.append({"kind": "point", "gamma": g, "rho": rho, "lower_e": lo_e, "lower_w": lo_w,
                         "D_over_p": b.d / p, "G_over_p": b.g / p, "upper_w": up_w, "upper_e": up_e})
    lo_e, _, _, up_e = stock_ratio_bounds(run.scenario, run.agent, 0.0)
    rows.append({"kind": "summary", "lower_e": lo_e, "upper_e": up_e})
    return ["kind", "gamma", "rho", "lower_e", "lower_w", "D_over_p", "G_over_p", "upper_w", "upper_e"], rows


def _an_gamma_profile(run):
    gammas = run.args.gamma_list or list(np.geomspace(1e-2, 1e2, 9))
    prof = d_bar_gamma_profile(run.scenario, run.agent.lam, run.rho, gammas)
    rows = [{"gamma": g, "d_bar": d, "limit_zero": prof.limit_zero, "decreasing": prof.decreasing}
            for g, d in zip(prof.gammas, prof.d_bar)]
    if run.args.check_decreasing and not prof.decreasing:
        raise NumericalError("d_bar is not strictly decreasing on the gamma grid")
    return ["gamma", "d_bar", "limit_zero", "decreasing"], rows


def _rho_grid(run, default):
    a = run.args
    if a.rho_list:
        return a.rho_list
    if a.sweep:
        axis, lo, hi, n = a.sweep
        if axis != "rho":
            raise DomainError("this analysis sweeps rho only")
        return [float(v) for v in np.linspace(float(lo), float(hi), int(n))]
    return default


def _an_lower_bounds(run):
    p_floor, v_floor = uniform_lower_bounds(run.scenario, run.agent)
    rows = []
    for rho in _rho_grid(run, list(np.linspace(-0.95, 0.95, 39))):
        p = stock_price_quadrature(run.scenario, run.agent, rho)
        rows.append({"rho": rho, "p_quadrature": p, "p_floor": p_floor, "v_floor": v_floor,
                     "above_floor": p >= p_floor})
    return ["rho", "p_quadrature", "p_floor", "v_floor", "above_floor"], rows


def _an_taylor(run):
    tc = taylor_coefficients(run.scenario, run.agent, verbatim=run.args.verbatim)
    rows = []
    for rho in _rho_grid(run, list(np.linspace(-0.95, 0.99, 98))):
        p = stock_price_quadrature(run.scenario, run.agent, rho)
        row = {"rho": rho, "p_quadrature": p}
        for k in range(5):
            row[f"taylor_{k}"] = taylor_price(tc, rho, k)
        row["rel_dev_4"] = abs(row["taylor_4"] - p) / p
        rows.append(row)
    return ["rho", "p_quadrature"] + [f"taylor_{k}" for k in range(5)] + ["rel_dev_4"], rows


def _an_limits(run):
    lim = boundary_limits(run.scenario, run.agent)
    return list(lim), [lim]


def _an_monotonicity(run):
    grid = _rho_grid(run, list(np.linspace(-0.99, 0.99, 201)))
    rep = d_monotonicity_check(run.scenario, run.agent, grid)
    rows = [{"rho_star": rep.rho_star, "regime": rep.regime, "ok": rep.ok, "n_violations": len(rep.violations)}]
    return ["rho_star", "regime", "ok", "n_violations"], rows


def _an_value(run):
    a = run.args
    if a.position == "put" and a.K is None:
        raise DomainError("--K is required for the put position")
    rows = []
    for rho in _rho_grid(run, [run.rho]):
        row = {"rho": rho, "condition_violated": False}
        try:
            v = value_decomposition(run.scenario, run.agent, rho, a.position, run.mc, K=a.K)
        except ConditionViolated:
            row["condition_violated"] = True
            rows.append(row)
            continue
        row.update(V=v.V.mean, V_ci_lo=v.V.ci99[0], V_ci_hi=v.V.ci99[1], V_D=v.V_D, V_A=v.V_A.mean, V_G=v.V_G,
                   underflow=v.underflow)
        rows.append(row)
    return ["rho", "V", "V_ci_lo", "V_ci_hi", "V_D", "V_A", "V_G", "underflow", "condition_violated"], rows


def _an_call_thresholds(run):
    rows = []
    for rho in _rho_grid(run, [run.rho]):
        lo, hi = call_thresholds(run.scenario, run.agent, rho)
        row = {"rho": rho, "K_low": lo, "K_high": hi}
        if run.args.K is not None:
            row.update(K=run.args.K, moneyness=classify_call(run.args.K, lo, hi))
        rows.append(row)
    return ["rho", "K_low", "K_high", "K", "moneyness"], rows


ANALYSES = {
    "rho-star": _an_rho_star,
    "ratio-bounds": _an_ratio_bounds,
    "gamma-profile": _an_gamma_profile,
    "lower-bounds": _an_lower_bounds,
    "taylor": _an_taylor,
    "limits": _an_limits,
    "monotonicity": _an_monotonicity,
    "value": _an_value,
    "call-thresholds": _an_call_thresholds,
}


def cmd_analyze(run: Run, out):
    cols, rows = ANALYSES[run.args.what](run)
    write_csv(run, cols, rows, out)
    return EXIT_OK


# --- simulate --------------------------------------------------------------------


def cmd_simulate(run: Run, out):
    a = run.args
    grid = SimGrid(n_steps=a.steps, n_paths=a.paths, seed=a.seed, workers=a.threads)
    strategy = StrategyConfig(kind=a.strategy)
    pts = sweep_values(run)
    iw_mode = a.initial_wealth if a.initial_wealth is not None else ("auto" if a.superhedge else None)
    rows = []
    term_rows = []
    for rho, sc, ag, _ in pts:
        if iw_mode in (None, ""):
            x0 = ag.x0
        elif iw_mode == "auto":
            x0 = superhedge_initial_wealth(sc, ag, rho, "rho", run.mc)
        elif iw_mode == "auto-rho-star":
            x0 = superhedge_initial_wealth(sc, ag, rho, "rho-star", run.mc)
        else:
            try:
                x0 = float(iw_mode)
            except ValueError:
                raise DomainError(f"--initial-wealth must be auto, auto-rho-star or a number, got {iw_mode!r}")
        o = simulate(sc, ag, rho, strategy, grid, x0, include_endowment=not a.no_endowment,
                     keep_paths=bool(a.terminals_csv))
        eu, sh = o.expected_utility, o.superhedge_prob
        rows.append({
            "rho": rho, "gamma": ag.gamma, "T": sc.T, "initial_wealth": x0,
            "E_D": eu.mean, "E_D_se": eu.std_error, "E_D_ci_lo": eu.ci99[0], "E_D_ci_hi": eu.ci99[1],
            "superhedge_prob": sh.mean, "superhedge_ci_lo": sh.ci99[0], "superhedge_ci_hi": sh.ci99[1],
            "terminal_mean": o.terminal_wealth_summary["mean"], "terminal_std": o.terminal_wealth_summary["std"],
        })
        if a.terminals_csv:
            for i, (x, s) in enumerate(zip(o.x_T, o.s_T)):
                term_rows.append({"rho": rho, "path": i, "X_T": x, "S_T": s})
    cols = ["rho", "gamma", "T", "initial_wealth", "E_D", "E_D_se", "E_D_ci_lo", "E_D_ci_hi", "superhedge_prob",
            "superhedge_ci_lo", "superhedge_ci_hi", "terminal_mean", "terminal_std"]
    write_csv(run, cols, rows, out)
    if a.terminals_csv:
        with open(a.terminals_csv, "w", newline="") as fh:
            write_csv(run, ["rho", "path", "X_T", "S_T"], term_rows, fh)
    return EXIT_OK


# --- parser ----------------------------------------------------------------------


def _common(p):
    g = p.add_argument_group("scenario")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--scenario-file", help="key=value file (r, T, s0, nu, eta, mu, sigma, gamma, lambda, x0, rho)")
    for k in MARKET_FLAGS:
        g.add_argument(f"--{k}", type=float)
    g.add_argument("--gamma", type=float, help="absolute risk aversion")
    g.add_argument("--lam", "--lambda", dest="lam", type=float, help="number of units of the claim")
    g.add_argument("--x0", type=float, help="initial wealth")
    m = p.add_argument_group("run")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--samples", type=int, default=10_000, help="Monte Carlo draws per price")
    m.add_argument("--threads", type=int, default=1, help="worker threads; output is identical for any value")
    m.add_argument("--round", type=int, metavar="DIGITS", help="print reals with this many decimals")
    m.add_argument("-o", "--output", help="write CSV here instead of stdout")


def _sweep(p, axes=SWEEP_AXES):
    p.add_argument("--sweep", nargs=4, metavar=("AXIS", "MIN", "MAX", "N"),
                   help=f"sweep one of {', '.join(axes)} over a linear grid")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lambertmc", description="Indifference prices via Lambert-W decomposition.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="direct and Lambert Monte Carlo prices")
    _common(p)
    _sweep(p)
    p.add_argument("--payoff", choices=("stock", "put", "call"), default="stock")
    p.add_argument("--K", type=float, help="strike")
    p.add_argument("--rho", type=float)

    p = sub.add_parser("analyze", help="closed-form analyses")
    p.add_argument("what", choices=sorted(ANALYSES))
    _common(p)
    _sweep(p, ("rho",))
    p.add_argument("--rho", type=float)
    p.add_argument("--K", type=float)
    p.add_argument("--T-list", dest="T_list", type=_float_list)
    p.add_argument("--gamma-list", type=_float_list)
    p.add_argument("--rho-list", type=_float_list)
    p.add_argument("--position", choices=("stock", "put"), default="stock")
    p.add_argument("--verbatim", action="store_true", help="taylor: use the raw-cumulant coefficient forms")
    p.add_argument("--check-decreasing", action="store_true", help="gamma-profile: exit 3 unless decreasing")

    p = sub.add_parser("simulate", help="hedging backtest")
    _common(p)
    _sweep(p, ("rho", "gamma", "T"))
    p.add_argument("--rho", type=float)
    p.add_argument("--strategy", choices=("deterministic", "merton", "zero"), default="deterministic")
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--superhedge", action="store_true", help="start from -p (see --initial-wealth)")
    p.add_argument("--initial-wealth", help="auto (-p at rho), auto-rho-star (-p at rho*), or a number")
    p.add_argument("--no-endowment", action="store_true", help="exclude lam * S_T from terminal wealth")
    p.add_argument("--terminals-csv", help="also write per-path X_T and S_T here")
    return parser


COMMANDS = {"price": cmd_price, "analyze": cmd_analyze, "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = Run(args)
        if args.output:
            with open(args.output, "w", newline="") as fh:
                return COMMANDS[args.command](run, fh)
        return COMMANDS[args.command](run, sys.stdout)
    except DomainError as exc:
        print(f"lambertmc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, ArithmeticError) as exc:
        print(f"lambertmc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
