"""Command-line entry point.

    feelsim --config exp.ini run
    feelsim --config exp.ini sweep --thresholds 0.5,0.6,0.7,0.8
    feelsim allocate --deadline-s 10 --beta 0.3
    feelsim oracle golden

Exit codes: 0 success, 1 configuration or runtime error (including a failed
oracle), 2 infeasible allocation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .channel import dbm_to_watts
from .errors import ConfigError, DomainError
from .oracles import SUITES
from .orchestrator import build_federation, compare_runs, run_simulation
from .resource import ComputeProfile, PowerProfile, RoundBudget, Workload, allocate

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2
DEFAULT_THRESHOLDS = "0.5,0.6,0.7,0.8"

log = logging.getLogger("feelsim")


def _add_global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", type=Path, default=d(None), help="experiment INI file")
    p.add_argument("--out-dir", type=Path, default=d(None), help="output directory (overrides config)")
    p.add_argument("--seed", type=int, default=d(None), help="override master_seed")
    p.add_argument("--quiet", action="store_true", default=d(False), help="only warnings and errors")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="feelsim", description=__doc__.split("\n\n")[0])
    _add_global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one simulation and write metrics.csv")
    _add_global_flags(p, suppress=True)

    p = sub.add_parser("sweep", help="baseline plus one run per threshold")
    _add_global_flags(p, suppress=True)
    p.add_argument("--thresholds", default=DEFAULT_THRESHOLDS, help="comma-separated values in [0, 1]")

    p = sub.add_parser("allocate", help="allocate resources for one worker and print the verdict")
    _add_global_flags(p, suppress=True)
    p.add_argument("--deadline-s", type=float, default=10.0)
    p.add_argument("--bandwidth-hz", type=float, default=1e6)
    p.add_argument("--model-bits", type=float, default=63808.0)
    p.add_argument("--energy-budget-j", type=float, default=10.0)
    p.add_argument("--num-samples", type=int, default=200)
    p.add_argument("--excluded", type=int, default=0)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--phi-cycles-per-sample", type=float, default=1e7)
    p.add_argument("--alpha", type=float, default=2e-28)
    p.add_argument("--f-min-hz", type=float, default=1e8)
    p.add_argument("--f-max-hz", type=float, default=2e9)
    p.add_argument("--p-min-dbm", type=float, default=-10.0)
    p.add_argument("--p-max-dbm", type=float, default=20.0)
    ch = p.add_mutually_exclusive_group(required=True)
    ch.add_argument("--beta", type=float, help="SINR per watt after beamforming")
    ch.add_argument("--channel-gain", type=float, help="|h|^2; beta = gain / noise power")
    p.add_argument("--noise-power-w", type=float, default=1e-6)

    p = sub.add_parser("oracle", help="brute-force cross-check of a numerical kernel")
    _add_global_flags(p, suppress=True)
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--instances", type=int, default=None)
    return parser


def _load_sim(args):
    from .config import load_config

    if args.config is None:
        raise ConfigError("--config is required for this command")
    exp = load_config(args.config)
    sim = exp.to_simulation()
    if args.seed is not None:
        sim = replace(sim, master_seed=args.seed)
    out_dir = args.out_dir if args.out_dir is not None else Path(exp.output.out_dir)
    return sim, out_dir


def cmd_run(args) -> int:
    from .metrics import summary_text, write_metrics_csv

    sim, out_dir = _load_sim(args)
    trace = run_simulation(sim)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(trace, out_dir / "metrics.csv")
    summary = summary_text(trace)
    (out_dir / "summary.txt").write_text(summary + "\n")
    print(summary)
    return EXIT_OK


def _parse_thresholds(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--thresholds: {exc}") from exc
    if not values or any(not 0.0 <= v <= 1.0 for v in values):
        raise ConfigError(f"--thresholds must be values in [0, 1], got {text!r}")
    return values


def cmd_sweep(args) -> int:
    from .metrics import write_sweep

    thresholds = _parse_thresholds(args.thresholds)
    sim, out_dir = _load_sim(args)
    fed = build_federation(sim)
    baseline = run_simulation(replace(sim, exclusion=False), fed)
    runs = [("baseline", None, baseline, compare_runs(baseline, baseline))]
    for th in thresholds:
        cfg = replace(sim, exclusion=True, trainer=replace(sim.trainer, threshold=th))
        trace = run_simulation(cfg, fed)
        cmp = compare_runs(trace, baseline)
        runs.append((f"threshold={th:g}", th, trace, cmp))
        print(f"threshold={th:g}: energy reduction {cmp.energy_reduction_pct:.2f}% "
              f"accuracy delta {cmp.accuracy_delta:+.4f}")
    write_sweep(runs, out_dir)
    return EXIT_OK


def cmd_allocate(args) -> int:
    beta = args.beta if args.beta is not None else args.channel_gain / args.noise_power_w
    budget = RoundBudget(args.deadline_s, args.bandwidth_hz, args.model_bits, args.energy_budget_j)
    work = Workload(args.num_samples, args.excluded, args.epochs)
    cp = ComputeProfile(args.f_min_hz, args.f_max_hz, args.alpha, args.phi_cycles_per_sample)
    pp = PowerProfile(dbm_to_watts(args.p_min_dbm), dbm_to_watts(args.p_max_dbm))
    a = allocate(budget, work, cp, pp, beta)
    print(f"beta            {beta:.9g}")
    print(f"t_up_s          {a.t_up!r}")
    print(f"t_cmp_s         {a.t_cmp!r}")
    print(f"t_up+t_cmp_s    {a.t_up + a.t_cmp!r}")
    print(f"deadline_s      {budget.deadline!r}")
    print(f"f_cmp_hz        {a.f_cmp:.9g}")
    print(f"p_up_w          {a.p_up:.9g}")
    print(f"e_up_J          {a.e_up:.9g}")
    print(f"e_cmp_J         {a.e_cmp:.9g}")
    print(f"total_J         {a.total_energy:.9g}")
    if a.feasible:
        print("feasible        yes")
        return EXIT_OK
    print(f"feasible        no: {' '.join(sorted(map(str, a.violations)))}")
    return EXIT_INFEASIBLE


def cmd_oracle(args) -> int:
    suite = SUITES[args.suite]
    report = suite(args.instances) if args.instances else suite()
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_ERROR


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "allocate": cmd_allocate, "oracle": cmd_oracle}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
