"""Command-line front end.

Subcommands: ``simulate``, ``roc``, ``sweep-n``, ``beam-bench`` and ``psd``.
Every subcommand writes a comma-separated table into ``--out``.  Failures
exit nonzero with a single ``error: <kind>: <message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from .array import ArrayConfig
from .beamformer import BeamProblem, synthesize
from .disturbance import psd
from .scenario_file import PRESETS, ROC_PFA, SWEEP_N, ScenarioError, parse_scenario, preset
from .simulator import Policy, Scenario, run_monte_carlo


class CliError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message)


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.9g}"


def write_table(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise CliError("output", f"cannot write {path}: {exc.strerror or exc}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cogradar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        src = p.add_mutually_exclusive_group()
        src.add_argument("--preset", choices=PRESETS, default=None)
        src.add_argument("--scenario", type=Path, default=None)
        p.add_argument("--seed", type=int)
        p.add_argument("--mc-runs", type=int)
        p.add_argument("--out", type=Path, default=Path("."))
        p.add_argument("--policy", choices=["rl", "omni", "adaptive"])
        p.add_argument("--ntx", type=int)
        p.add_argument("--nrx", type=int)
        p.add_argument("--pfa", type=float)
        p.add_argument("--workers", type=int, default=1)
        return p

    common(sub.add_parser("simulate", help="Monte Carlo run of one scenario"))
    roc = common(sub.add_parser("roc", help="detection frequency versus P_FA"))
    roc.add_argument("--pfa-list", type=_float_list, default=list(ROC_PFA))
    sweep = common(sub.add_parser("sweep-n", help="detection versus array size N_T = N_R"))
    sweep.add_argument("--n-list", type=_int_list, default=list(SWEEP_N))
    bench = common(sub.add_parser("beam-bench", help="ICA runtime and convergence versus N_T"))
    bench.add_argument("--n-list", type=_int_list, default=[4, 8, 16, 32, 64])
    bench.add_argument("--targets", type=_float_list, default=None)
    bench.add_argument("--diagnostics", action="store_true", help="also dump per-iteration tables")
    spec = common(sub.add_parser("psd", help="tabulate the disturbance spectral density"))
    spec.add_argument("--points", type=int, default=512)
    return parser


def load_scenario(args) -> Scenario:
    if args.scenario is not None:
        scenario = parse_scenario(args.scenario)
    else:
        scenario = preset(args.preset or "scenario1")
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.mc_runs is not None:
        changes["mc_runs"] = args.mc_runs
    if args.policy is not None:
        changes["policy"] = Policy.parse(args.policy)
    if args.pfa is not None:
        changes["p_fa"] = args.pfa
    if args.ntx is not None or args.nrx is not None:
        cfg = scenario.cfg
        changes["cfg"] = ArrayConfig(args.ntx or cfg.n_tx, args.nrx or cfg.n_rx, cfg.grid)
    try:
        return scenario.with_(**changes)
    except ValueError as exc:
        raise CliError("scenario", str(exc)) from None


def report_rows(report):
    cfg = report.scenario.cfg
    for k in range(report.scenario.pulses):
        for b, nu in enumerate(cfg.grid):
            yield (k + 1, b, nu, report.detect_freq[k, b], report.pd_hat_mean[k, b],
                   report.reward_mean[k], report.state_mean[k], report.action_mean[k])


REPORT_HEADER = ["pulse", "bin", "nu", "detect_freq", "pd_hat_mean", "reward_mean", "state_mean", "action_mean"]


def cmd_simulate(args, scenario):
    report = run_monte_carlo(scenario, workers=args.workers)
    write_table(args.out / "report.csv", REPORT_HEADER, report_rows(report))


def _target_summary(report):
    """Per bin: detection frequency and mean P_D estimate over the pulses a target is present."""
    sc = report.scenario
    for ev in sc.events:
        b = sc.cfg.bin_index(ev.nu)
        ks = slice(ev.from_pulse - 1, ev.to_pulse)
        yield ev, float(report.detect_freq[ks, b].mean()), float(report.pd_hat_mean[ks, b].mean())


def cmd_roc(args, scenario):
    rows = []
    for p_fa in args.pfa_list:
        report = run_monte_carlo(scenario.with_(p_fa=p_fa), workers=args.workers)
        far = report.false_alarm_rate()
        for ev, det, pd in _target_summary(report):
            rows.append((p_fa, ev.nu, ev.snr_db, ev.from_pulse, ev.to_pulse, det, pd, far))
    write_table(args.out / "roc.csv",
                ["p_fa", "nu", "snr_db", "from_pulse", "to_pulse", "detect_freq", "pd_hat_mean", "false_alarm_rate"],
                rows)


def cmd_sweep_n(args, scenario):
    rows = []
    for n in args.n_list:
        cfg = ArrayConfig(n, n, scenario.cfg.grid)
        report = run_monte_carlo(scenario.with_(cfg=cfg), workers=args.workers)
        for ev, det, pd in _target_summary(report):
            rows.append((n, ev.nu, ev.snr_db, ev.from_pulse, ev.to_pulse, det, pd))
    write_table(args.out / "sweep_n.csv",
                ["n", "nu", "snr_db", "from_pulse", "to_pulse", "detect_freq", "pd_hat_mean"], rows)


def cmd_beam_bench(args, scenario):
    targets = args.targets
    if targets is None:
        targets = sorted(ev.nu for ev in scenario.events if ev.active(1))
    if not targets:
        raise CliError("scenario", "no targets to beamform toward (give --targets)")
    rows = []
    for n in args.n_list:
        cfg = ArrayConfig(n, n, scenario.cfg.grid)
        try:
            problem = BeamProblem(tuple(targets), scenario.total_power, cfg)
        except ValueError as exc:
            raise CliError("scenario", str(exc)) from None
        start = time.perf_counter()
        state = synthesize(problem, max_iters=scenario.ica_max_iters, tol=scenario.ica_tol)
        elapsed = time.perf_counter() - start
        rows.append((n, len(targets), state.iteration, int(state.converged), elapsed,
                     state.min_pattern, state.min_pattern / (scenario.total_power * n), state.kkt_residual))
        if args.diagnostics:
            try:
                state.write_diagnostics(args.out / f"beam_bench_n{n}.csv")
            except OSError as exc:
                raise CliError("output", f"cannot write diagnostics: {exc.strerror or exc}") from None
    write_table(args.out / "beam_bench.csv",
                ["n_tx", "targets", "iterations", "converged", "seconds", "min_pattern",
                 "min_pattern_over_single_target_optimum", "kkt_residual"], rows)


def cmd_psd(args, scenario):
    if args.points < 1:
        raise CliError("usage", "--points must be >= 1")
    nu = -0.5 + np.arange(args.points) / args.points
    values = psd(scenario.disturbance, nu)
    write_table(args.out / "psd.csv", ["nu", "psd"], zip(nu, np.atleast_1d(values)))


COMMANDS = {"simulate": cmd_simulate, "roc": cmd_roc, "sweep-n": cmd_sweep_n,
            "beam-bench": cmd_beam_bench, "psd": cmd_psd}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.workers < 1:
            raise CliError("usage", "--workers must be >= 1")
        scenario = load_scenario(args)
        if not args.out.is_dir():
            try:
                args.out.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise CliError("output", f"cannot create {args.out}: {exc.strerror or exc}") from None
        COMMANDS[args.command](args, scenario)
    except CliError as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return 2
    except ScenarioError as exc:
        print(f"error: scenario: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
