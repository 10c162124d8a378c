"""Command-line front end: timeseries runs, parameter sweeps, plots, chain checks.

Exit codes: 0 success, 2 configuration or parse problem, 3 numeric failure
inside the integrator, 4 chain integrity violation.  Sweep points run
concurrently; RUMORSIM_THREADS caps the worker count.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import (ConfigError, RunConfig, apply_overrides, build_abm_config,
                     format_epsilon, load_config_file, parse_run_config)
from .integrate import IntegrationError, Trajectory, integrate
from .ledger import load_chain, validate_chain
from .models import SirState, initial_bsir_state, initial_sir_state
from .svgplot import PlotError, render_svg_lineplot


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _write_csv(path, header: list[str], rows) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(row) + "\n")


def _thread_count() -> int:
    raw = os.environ.get("RUMORSIM_THREADS")
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        count = int(raw)
    except ValueError as exc:
        raise ConfigError("RUMORSIM_THREADS", f"expected an integer, got {raw!r}") from exc
    if count < 1:
        raise ConfigError("RUMORSIM_THREADS", f"must be >= 1, got {count}")
    return count


def _load_run_config(args) -> RunConfig:
    doc = load_config_file(args.config)
    if args.set:
        doc = apply_overrides(doc, args.set)
    return parse_run_config(doc)


def _csv_path(args, config: RunConfig) -> str:
    if getattr(args, "out", None):
        return args.out
    if config.output.csv:
        return config.output.csv
    raise ConfigError("output.csv", "no output path given (config output.csv or --out)")


def _ode_trajectory(config: RunConfig) -> Trajectory:
    if config.model == "sir":
        return integrate(initial_sir_state(config.pop),
                         config.rates.unenrolled_rates(), config.integrator)
    return integrate(initial_bsir_state(config.pop), config.rates, config.integrator)


def _density_row(t: float, state) -> list[str]:
    if isinstance(state, SirState):
        parts = (0.0, state.ignorant, state.spreader, state.stifler)
    else:
        parts = state.as_tuple()
    return [_fmt(t)] + [_fmt(v) for v in parts]


def cmd_ode(args) -> int:
    config = _load_run_config(args)
    if config.engine != "ode":
        raise ConfigError("engine", f"the ode command needs engine 'ode', got {config.engine!r}")
    trajectory = _ode_trajectory(config)
    path = _csv_path(args, config)
    _write_csv(path, ["t", "i_b", "i_n", "s", "r"],
               (_density_row(t, s) for t, s in zip(trajectory.times, trajectory.states)))
    print(f"wrote {path}")
    svg = args.svg or config.output.svg
    if svg:
        render_svg_lineplot(path, ["s", "r"], svg, x_column="t")
        print(f"wrote {svg}")
    return 0


def cmd_abm(args) -> int:
    config = _load_run_config(args)
    if config.engine != "abm":
        raise ConfigError("engine", f"the abm command needs engine 'abm', got {config.engine!r}")
    abm_config = build_abm_config(config)
    from .abm import Simulation

    sim = Simulation(abm_config)
    trajectory = sim.run()
    path = _csv_path(args, config)
    rows = ([_fmt(t), str(ib), str(iu), str(s), str(r), str(cm), str(bl)]
            for t, ib, iu, s, r, cm, bl in zip(
                trajectory.times, trajectory.n_ib, trajectory.n_in,
                trajectory.n_s, trajectory.n_r, trajectory.c_max, trajectory.blocks))
    _write_csv(path, ["t", "n_ib", "n_in", "n_s", "n_r", "c_max", "blocks"], rows)
    print(f"wrote {path}")
    chain_path = args.chain or config.output.chain
    if chain_path:
        if sim.ledger is None:
            raise ConfigError("output.chain", "chain export requires abm mode 'ledger'")
        from .ledger import save_chain

        save_chain(sim.ledger.chain, chain_path)
        print(f"wrote {chain_path}")
    return 0


def _require_sweep(config: RunConfig):
    if config.sweep is None:
        raise ConfigError("sweep", "this command needs the sweep section")
    if config.engine != "ode":
        raise ConfigError("engine", "sweep commands run on the ode engine")
    if config.model != "bsir":
        raise ConfigError("model", "sweep commands vary enrollment, so model must be 'bsir'")
    return config.sweep


def cmd_sweep_epsilon(args) -> int:
    config = _load_run_config(args)
    sweep = _require_sweep(config)

    def one(eps: float) -> list[list[str]]:
        pop = dataclasses.replace(config.pop, enrollment_ratio=eps)
        trajectory = integrate(initial_bsir_state(pop), config.rates, config.integrator)
        label = format_epsilon(eps)
        return [[label, _fmt(t), _fmt(state.spreader), _fmt(state.stifler)]
                for t, state in zip(trajectory.times, trajectory.states)]

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        blocks = list(pool.map(one, sweep.epsilon_values))
    path = _csv_path(args, config)
    _write_csv(path, ["epsilon", "t", "s", "r"],
               (row for block in blocks for row in block))
    print(f"wrote {path}")
    svg = args.svg or config.output.svg
    if svg:
        render_svg_lineplot(path, ["s"], svg, x_column="t", group_by="epsilon")
        print(f"wrote {svg}")
    return 0


def cmd_grid(args) -> int:
    config = _load_run_config(args)
    sweep = _require_sweep(config)
    if sweep.snapshot_day > config.integrator.t_end:
        raise ConfigError("sweep.snapshot_day",
                          f"snapshot day {sweep.snapshot_day} exceeds t_end "
                          f"{config.integrator.t_end}")
    snap_index = round(sweep.snapshot_day / config.integrator.dt)

    points = [(eps, delta) for eps in sweep.epsilon_values
              for delta in sweep.delta_values]

    def one(point) -> list[str]:
        eps, delta = point
        pop = dataclasses.replace(config.pop, enrollment_ratio=eps)
        rates = dataclasses.replace(config.rates, forget_rate=delta)
        trajectory = integrate(initial_bsir_state(pop), rates, config.integrator)
        state = trajectory.states[snap_index]
        return [format_epsilon(eps), _fmt(delta),
                _fmt(state.spreader), _fmt(state.stifler)]

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        rows = list(pool.map(one, points))
    path = _csv_path(args, config)
    _write_csv(path, ["epsilon", "delta", "s_at_snapshot", "r_at_snapshot"], rows)
    print(f"wrote {path}")
    return 0


def cmd_plot(args) -> int:
    columns = [c for c in args.columns.split(",") if c]
    if not columns:
        raise PlotError("no series columns given")
    render_svg_lineplot(args.csv, columns, args.out, x_column=args.x,
                        group_by=args.group_by, title=args.title)
    print(f"wrote {args.out}")
    return 0


def cmd_ledger_verify(args) -> int:
    try:
        chain = load_chain(args.chain_file)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"cannot load chain: {exc}", file=sys.stderr)
        return 2
    violation = validate_chain(chain)
    if violation is not None:
        print(f"chain invalid: {violation}", file=sys.stderr)
        return 4
    print(f"chain ok: {len(chain)} blocks, "
          f"{sum(len(b.transactions) for b in chain.blocks)} transactions")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rumorsim",
        description="Rumor spreading with and without a blockchain credit ledger.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_command(name: str, func, help_text: str, chain: bool = False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="JSON run configuration")
        p.add_argument("--set", action="append", default=[],
                       metavar="KEY.PATH=VALUE", help="override a config field")
        p.add_argument("--out", help="CSV output path (overrides output.csv)")
        p.add_argument("--svg", help="SVG output path (overrides output.svg)")
        if chain:
            p.add_argument("--chain", help="chain JSON export path (ledger mode)")
        p.set_defaults(func=func)
        return p

    add_run_command("ode", cmd_ode, "integrate the mean-field model to CSV")
    add_run_command("abm", cmd_abm, "run the agent simulation to CSV", chain=True)
    add_run_command("sweep-epsilon", cmd_sweep_epsilon,
                    "rerun the model across enrollment ratios")
    add_run_command("grid", cmd_grid,
                    "snapshot spreader/stifler densities on an epsilon x delta grid")

    p_plot = sub.add_parser("plot", help="draw CSV columns as an SVG line chart")
    p_plot.add_argument("csv", help="input CSV file")
    p_plot.add_argument("--columns", required=True,
                        help="comma-separated series columns")
    p_plot.add_argument("--out", required=True, help="SVG output path")
    p_plot.add_argument("--x", default=None, help="x column (default: first column)")
    p_plot.add_argument("--group-by", default=None,
                        help="split series by this column's values")
    p_plot.add_argument("--title", default=None)
    p_plot.set_defaults(func=cmd_plot)

    p_verify = sub.add_parser("ledger-verify", help="check a chain export for tampering")
    p_verify.add_argument("chain_file")
    p_verify.set_defaults(func=cmd_ledger_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return 2
    except PlotError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"file not found: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
