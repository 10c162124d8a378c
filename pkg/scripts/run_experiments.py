#!/usr/bin/env python3
"""Regenerate every bundled experiment into out/ as CSV tables and SVG plots.

Runs the CLI commands end to end:
  * the enrollment baseline and the fully credulous scenario (timeseries),
  * spreader-density sweeps over the enrollment ratio at sparse and dense
    connectivity,
  * the enrollment x forgetting grid snapshot at day 2,
  * one agent-based run per engine mode, exporting and verifying the ledger
    chain of the contract-driven run.
"""
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from rumorsim.cli import main  # noqa: E402

CONFIGS = REPO / "configs"
OUT = REPO / "out"


def run(*argv: str) -> None:
    print("$ rumorsim " + " ".join(argv))
    code = main(list(argv))
    if code != 0:
        raise SystemExit(f"command failed with exit code {code}")


def main_script() -> None:
    OUT.mkdir(exist_ok=True)

    run("ode", str(CONFIGS / "baseline.json"),
        "--out", str(OUT / "baseline.csv"), "--svg", str(OUT / "baseline.svg"))
    run("ode", str(CONFIGS / "credulous.json"),
        "--out", str(OUT / "credulous.csv"), "--svg", str(OUT / "credulous.svg"))

    run("sweep-epsilon", str(CONFIGS / "sweep.json"),
        "--out", str(OUT / "sweep_k10.csv"), "--svg", str(OUT / "sweep_k10.svg"))
    run("sweep-epsilon", str(CONFIGS / "sweep.json"),
        "--set", "rates.mean_degree=50",
        "--out", str(OUT / "sweep_k50.csv"), "--svg", str(OUT / "sweep_k50.svg"))
    run("plot", str(OUT / "sweep_k10.csv"), "--columns", "r",
        "--x", "t", "--group-by", "epsilon",
        "--out", str(OUT / "sweep_k10_stiflers.svg"),
        "--title", "stifler density by enrollment ratio")

    run("grid", str(CONFIGS / "sweep.json"), "--out", str(OUT / "grid_day2.csv"))

    run("abm", str(CONFIGS / "abm_parametric.json"),
        "--out", str(OUT / "abm_parametric.csv"))
    run("abm", str(CONFIGS / "abm_ledger.json"),
        "--out", str(OUT / "abm_ledger.csv"),
        "--chain", str(OUT / "abm_ledger_chain.json"))
    run("ledger-verify", str(OUT / "abm_ledger_chain.json"))

    print(f"all outputs under {OUT}")


if __name__ == "__main__":
    main_script()
