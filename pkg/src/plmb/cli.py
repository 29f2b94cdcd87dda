"""Command-line front end: `plmb run` and `plmb metrics`."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .runner import plot_metrics, recompute_metrics, run_batch, write_metrics_csv
from .scenario import ScenarioConfig, load_config


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plmb", description="Possibilistic multi-sensor multi-target tracking runs."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a Monte Carlo batch and write JSON/CSV outputs")
    run_p.add_argument("--case", choices=["A", "B"], required=True, help="scenario preset")
    run_p.add_argument(
        "--method", choices=["centralized", "distributed"], required=True,
        help="fusion architecture",
    )
    run_p.add_argument("--runs", type=int, default=None, help="number of Monte Carlo runs (default 1)")
    run_p.add_argument("--seed", type=int, default=None, help="root seed for the batch (default 0)")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--config", default=None, help="flat key=value file overriding the preset")
    run_p.add_argument("--plot", action="store_true", help="also write metrics.png")

    met_p = sub.add_parser("metrics", help="recompute the metric table from stored runs")
    met_p.add_argument("--in", dest="in_dir", required=True, help="directory with run_*.json")
    met_p.add_argument("--out", default=None, help="optional CSV path (default: stdout)")
    met_p.add_argument("--plot", action="store_true", help="also write metrics.png next to the runs")
    return parser


def _cmd_run(args) -> int:
    cfg = ScenarioConfig.for_case(args.case)
    if args.config:
        cfg = load_config(args.config, base=cfg)
    # Explicit flags beat the config file; omitted ones leave it untouched.
    overrides = {}
    if args.runs is not None:
        overrides["mc_runs"] = args.runs
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    out = Path(args.out)

    def progress(i, total):
        print(f"run {i + 1}/{total} done", flush=True)

    rows = run_batch(cfg, args.method, out, progress=progress)
    if args.plot:
        plot_metrics(rows, out / "metrics.png")
    tail = rows[-1]
    print(
        f"wrote {out / 'metrics.csv'} (final step: OSPA {tail['ospa_mean']:.2f} m, "
        f"cardinality {tail['card_est_mean']:.2f} vs {tail['card_true_mean']:.2f} true)"
    )
    return 0


def _cmd_metrics(args) -> int:
    rows = recompute_metrics(args.in_dir)
    if args.out:
        write_metrics_csv(rows, args.out)
        print(f"wrote {args.out}")
    else:
        print("step,ospa_mean,ospa2_mean,card_true_mean,card_est_mean")
        for r in rows:
            print(
                f"{r['step']},{r['ospa_mean']:.6f},{r['ospa2_mean']:.6f},"
                f"{r['card_true_mean']:.6f},{r['card_est_mean']:.6f}"
            )
    if args.plot:
        plot_metrics(rows, Path(args.in_dir) / "metrics.png")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "metrics":
        return _cmd_metrics(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
