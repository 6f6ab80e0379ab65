"""Experiment driver: bound evaluation, power-split optimization, sweeps, simulation.

Exit codes: 0 success, 2 config error, 3 infeasible/unstable configuration,
4 numerical failure.
"""

import argparse
import dataclasses
import json
import math
import sys
import time

import numpy as np

from . import bound as bound_mod
from . import sensing, service, sim
from .errors import (AllPowerToComm, AllPowerToSensing, ConfigError, MgfDiverges,
                     NoFeasibleAlpha, NonPositiveRate, NonProgress, TauTooLow)
from .params import SystemParams, load_params, sensing_noise

SWEEP_VARIABLES = ("D", "W", "alpha", "zeta", "varpi", "epsilon", "d", "rho_bar")
_SENSING_VARS = {"D", "d", "rho_bar"}

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


def _add_common(sub):
    sub.add_argument("--config", default=None, help="parameter file (flat key=value)")
    sub.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override one parameter (repeatable)")
    sub.add_argument("--seed", type=int, default=1)
    sub.add_argument("--out", default=None, help="write CSV output to this file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="isac-aoi",
        description="Peak-AoI violation bounds and simulation for an ISAC V2I link",
    )
    subs = ap.add_subparsers(dest="command", required=True)

    b = subs.add_parser("bound", help="evaluate the PAVP upper bound")
    _add_common(b)

    o = subs.add_parser("optimize", help="optimize the power split alpha")
    _add_common(o)

    s = subs.add_parser("simulate", help="run the discrete-event simulator")
    _add_common(s)
    s.add_argument("--packets", type=int, default=100_000)
    s.add_argument("--gain-mode", choices=[service.PER_PACKET_GAIN, service.PER_ATTEMPT_GAIN],
                   default=service.PER_PACKET_GAIN)
    s.add_argument("--trace", default=None, help="dump per-packet trace CSV to this file")

    w = subs.add_parser("sweep", help="sweep one parameter, emit CSV")
    _add_common(w)
    w.add_argument("--variable", choices=SWEEP_VARIABLES, required=True)
    w.add_argument("--grid", required=True, help="comma-separated grid values")
    w.add_argument("--outputs", choices=["bound", "sim", "both"], default="both")
    w.add_argument("--packets", type=int, default=100_000)
    w.add_argument("--replications", type=int, default=1)
    w.add_argument("--gain-mode", choices=[service.PER_PACKET_GAIN, service.PER_ATTEMPT_GAIN],
                   default=service.PER_PACKET_GAIN)
    return ap


def _load(args) -> SystemParams:
    text = ""
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, val = item.partition("=")
        overrides[key.strip()] = val.strip()
    return load_params(text, overrides=overrides)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return repr(float(x))


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _print_bound(res: bound_mod.BoundResult) -> None:
    rows = [
        ("pavp_bound (clamped)", _fmt(res.clamped)),
        ("pavp_bound (raw)", _fmt(res.pavp_bound)),
        ("theta_star", _fmt(res.theta_star) if not math.isnan(res.theta_star) else "nan"),
        ("alpha", _fmt(res.alpha)),
        ("stable", str(res.stable)),
    ]
    for key, val in res.diagnostics.items():
        rows.append((key, val if isinstance(val, str) else _fmt(val)))
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v}")
    record = {
        "pavp_bound": res.pavp_bound, "pavp_bound_clamped": res.clamped,
        "theta_star": res.theta_star, "alpha": res.alpha, "stable": res.stable,
        "diagnostics": res.diagnostics,
    }
    print(json.dumps(record, default=str))


def cmd_bound(args) -> int:
    p = _load(args)
    if p.theta is not None:
        res = bound_mod.pavp_bound(p.theta, p)
    else:
        res = bound_mod.optimize_theta(p, p.alpha)
    _print_bound(res)
    return EXIT_OK if res.stable else EXIT_INFEASIBLE


def cmd_optimize(args) -> int:
    p = _load(args)
    res = bound_mod.optimize_alpha(p)
    _print_bound(res)
    if args.out:
        lines = ["alpha,pavp_bound,theta_star,stable"]
        for a, r in bound_mod.alpha_grid_results(p):
            theta = "" if math.isnan(r.theta_star) else _fmt(r.theta_star)
            lines.append(f"{_fmt(a)},{_fmt(r.pavp_bound)},{theta},{int(r.stable)}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    p = _load(args)
    stats, trace = sim.run_sim(p, args.packets, args.seed, gain_mode=args.gain_mode,
                               collect_trace=args.trace is not None)
    record = {
        "pavp_hat": stats.pavp_hat, "pavp_ci": list(stats.pavp_ci),
        "n_paoi": stats.n_paoi, "sdp_hat": stats.sdp_hat,
        "mean_attempts": stats.mean_attempts, "mean_deferrals": stats.mean_deferrals,
        "n_packets": stats.n_packets, "seed": args.seed,
    }
    print(json.dumps(record))
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="") as fh:
            sim.dump_trace(trace, fh)
    return EXIT_OK


def _mc_sdp(p: SystemParams, n: int, rng) -> tuple:
    """Monte Carlo detection probability: draw RCS, threshold the echo SNR."""
    rho = rng.exponential(p.rho_bar, size=n)
    ns = sensing_noise(p)
    hits = int(np.count_nonzero(sensing.echo_power(p, 1.0) * rho / ns > p.d))
    return hits / n, sim.wilson_ci(hits, n)


def run_sweep(p: SystemParams, variable: str, grid, outputs: str, packets: int,
              replications: int, seed: int, gain_mode: str = service.PER_PACKET_GAIN):
    """One CSV-ready row dict per grid value. Deterministic given seed."""
    rows = []
    for i, value in enumerate(grid):
        overrides = {variable: value}
        pt = dataclasses.replace(p, **overrides)
        analytic = empirical = ci = None
        if variable in _SENSING_VARS:
            if outputs in ("bound", "both"):
                analytic = sensing.sdp(pt)
            if outputs in ("sim", "both"):
                rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
                empirical, ci = _mc_sdp(pt, packets * replications, rng)
        else:
            if outputs in ("bound", "both"):
                res = bound_mod.optimize_theta(pt, pt.alpha)
                analytic = res.clamped if res.stable else math.inf
            if outputs in ("sim", "both"):
                stats_list = []
                for r in range(replications):
                    ss = np.random.SeedSequence(seed, spawn_key=(i, r))
                    stats, _ = sim.run_sim(pt, packets, ss, gain_mode=gain_mode)
                    stats_list.append(stats)
                empirical, ci, _n = sim.pooled_pavp(stats_list)
        rows.append({"value": value, "analytic": analytic,
                     "empirical": empirical, "ci": ci})
    return rows


def sweep_csv(rows) -> str:
    lines = ["value,analytic,empirical,ci_low,ci_high"]
    for row in rows:
        ci = row["ci"] or (None, None)
        lines.append(",".join([_fmt(row["value"]), _fmt(row["analytic"]),
                               _fmt(row["empirical"]), _fmt(ci[0]), _fmt(ci[1])]))
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    p = _load(args)
    try:
        grid = [float(v) for v in args.grid.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --grid: {exc}") from None
    if not grid:
        raise ConfigError("--grid is empty")
    diffs = [b - a for a, b in zip(grid, grid[1:])]
    if diffs and not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
        raise ConfigError("--grid must be strictly monotone")
    if args.outputs in ("sim", "both") and args.replications < 1:
        raise ConfigError("--replications must be >= 1 when simulation is requested")
    t0 = time.monotonic()
    rows = run_sweep(p, args.variable, grid, args.outputs, args.packets,
                     args.replications, args.seed, args.gain_mode)
    _emit(sweep_csv(rows), args.out)
    print(f"sweep finished in {time.monotonic() - t0:.1f}s", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"bound": cmd_bound, "optimize": cmd_optimize,
                "simulate": cmd_simulate, "sweep": cmd_sweep}
    try:
        return handlers[args.command](args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoFeasibleAlpha, TauTooLow, AllPowerToComm, AllPowerToSensing,
            MgfDiverges, NonProgress, NonPositiveRate) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
