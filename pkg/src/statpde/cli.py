"""Command-line interface.

Subcommands:

* ``run <config>``: execute the routes described by a flat key=value config
  file and write the report and fields to the output directory.
* ``scenario dump <name>``: print every constant of a catalog scenario.
* ``counterexample``: evaluate the exact two-atom wave-system example that
  rules out one-point propagation for systems.
* ``rates``: empirical KDE convergence-rate study.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Environment overrides: STATPDE_SEED and STATPDE_OUTDIR replace the seed and
output directory from the config file.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from .advect import CflError
from .harness import ConfigError, kde_rate_study, parse_config, run_experiment
from .multipoint import wave_system_counterexample
from .scenarios import SCENARIO_NAMES, build_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text)
        if "STATPDE_SEED" in os.environ:
            cfg = replace(cfg, seed=int(os.environ["STATPDE_SEED"]))
        if "STATPDE_OUTDIR" in os.environ:
            cfg = replace(cfg, outdir=os.environ["STATPDE_OUTDIR"])
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CflError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(report.text, end="")
    return EXIT_OK


def _cmd_scenario(args) -> int:
    if args.action != "dump":
        print(f"error: unknown scenario action {args.action!r}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        scn = build_scenario(args.name)
    except KeyError as exc:
        print(f"config error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    print(scn.describe())
    return EXIT_OK


def _cmd_counterexample(_args) -> int:
    rep = wave_system_counterexample()

    def show(label: str, pair) -> None:
        for ds in (0, 1):
            atoms = ", ".join(f"({u:g},{v:g})->{p:g}" for (u, v), p in sorted(pair[ds].items()))
            print(f"{label} dataset {ds + 1}: {atoms}")

    show("initial law at x=+1,", rep.initial_at_plus1)
    show("initial law at x=-1,", rep.initial_at_minus1)
    show("law at (t,x)=(1,0),", rep.final_at_origin)
    print(f"initial one-point statistics identical: {rep.initial_statistics_equal}")
    print(f"statistics at (1,0) differ: {rep.final_statistics_differ}")
    print(f"mass of (1,1) at (1,0): dataset1 {rep.phi_final(1, (1.0, 1.0)):g}, "
          f"dataset2 {rep.phi_final(2, (1.0, 1.0)):g}")
    return EXIT_OK


def _cmd_rates(args) -> int:
    fit = kde_rate_study(reps=args.reps, seed=args.seed)
    for n, e in zip(fit.sample_counts, fit.errors):
        print(f"N={n:>7d}  sup-grid MSE={e:.6e}")
    print(f"log-log slope: {fit.slope:.4f} (theory -0.8 for a twice-differentiable target)")
    if args.csv:
        rows = ["n,mse"] + [f"{n},{e:.12g}" for n, e in zip(fit.sample_counts, fit.errors)]
        Path(args.csv).write_text("\n".join(rows) + "\n")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="statpde", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config", help="path to a key=value config file")
    p_run.set_defaults(func=_cmd_run)

    p_scn = sub.add_parser("scenario", help="inspect catalog scenarios")
    p_scn.add_argument("action", choices=["dump"])
    p_scn.add_argument("name", help=f"one of: {', '.join(SCENARIO_NAMES)}")
    p_scn.set_defaults(func=_cmd_scenario)

    p_ce = sub.add_parser("counterexample", help="exact two-atom system counterexample")
    p_ce.set_defaults(func=_cmd_counterexample)

    p_rates = sub.add_parser("rates", help="KDE convergence-rate study")
    p_rates.add_argument("--reps", type=int, default=20)
    p_rates.add_argument("--seed", type=int, default=0)
    p_rates.add_argument("--csv", default="", help="optional CSV output path")
    p_rates.set_defaults(func=_cmd_rates)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
