"""Command-line front end: ``vmrock simulate|toy|sweep|adapt|metrics``.

Exit codes: 0 success, 2 invalid input (arguments, scenario file, unknown
preset), 3 simulation divergence (outputs hold the last good samples).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import metrics as mt
from .environment import PresetError
from .scenario import Scenario, load_scenario
from .simulation import ENERGY_COLUMNS, SimResult, simulate
from .textfmt import FormatError
from .toymodel import ToyParams, poincare_convergence, toy_simulate, write_phase_csv

EXIT_OK, EXIT_INPUT, EXIT_DIVERGED = 0, 2, 3
SWEEP_AXES = ("board_height", "knife", "food", "thickness", "k2")
INPUT_ERRORS = (FormatError, PresetError, FileNotFoundError, KeyError, ValueError)


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# output writers


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, (float, np.floating)) else v for v in row])


def write_table(path: Path, columns, data: np.ndarray) -> None:
    header = ",".join(columns)
    if len(data) == 0:
        Path(path).write_text(header + "\n")
        return
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.12g")


def cycle_log(result: SimResult, k2_initial: float) -> list[tuple]:
    """One row per closed cycle: time of the cut-to-raise switch, separation
    and engagement flags, separation error and the k2 in force afterwards."""
    raise_times = [t for t, ph in result.switch_times if ph == 1]
    rows = []
    for j, (rec, e) in enumerate(zip(result.cycles, result.cycle_errors)):
        t = raise_times[j]
        k2 = k2_initial
        for tu, k in result.k2_updates:
            if tu <= t:
                k2 = k
        rows.append((j, float(t), int(rec.separated), int(rec.engaged), float(e), float(k2)))
    return rows


def write_outputs(result: SimResult, out: Path, scenario: Scenario) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    write_table(out / "trace.csv", result.columns, result.trace)
    write_table(out / "energy.csv", ENERGY_COLUMNS, result.energy)
    trace = mt.Trace(result.columns, result.trace)
    cycles = mt.cycle_table(trace) if len(trace) else []
    mt.write_cycle_csv(cycles, out / "metrics.csv")
    readings = mt.thickness_readings(result.cut_paths)
    thick = mt.thickness_stats(readings) if len(readings) and np.all(readings > 0) else None
    summary = {"scenario": scenario.name, "status": result.status, "seed": scenario.run.seed}
    summary.update(mt.summarize(trace, thick, cycles) if len(trace) else {"samples": 0, "cycles": 0})
    summary["max_penetration"] = result.max_penetration
    summary["slices_separated"] = len(result.separation_planes)
    summary["k2_final"] = result.state.k2
    summary["wall_time"] = result.wall_time
    (out / "report.txt").write_text(mt.format_report(summary))
    write_csv(out / "cycles.csv", ["cycle", "t", "separated", "engaged", "e", "k2"], cycle_log(result, scenario.controller.k2))
    return summary


# ---------------------------------------------------------------------------
# commands


def _scenario_from_args(args) -> Scenario:
    if not args.scenario:
        raise InputError("--scenario is required")
    sc = load_scenario(args.scenario)
    overrides = {k: getattr(args, k) for k in ("duration", "dt", "seed") if getattr(args, k) is not None}
    return sc.with_overrides(**overrides).validate() if overrides else sc.validate()


def _out_dir(args, default: str) -> Path:
    return Path(args.out or default)


def run_scenario(scenario: Scenario, out: Path) -> tuple[int, dict]:
    result = simulate(scenario.sim_config())
    summary = write_outputs(result, out, scenario)
    return (EXIT_DIVERGED if result.status == "diverged" else EXIT_OK), summary


def cmd_simulate(args) -> int:
    sc = _scenario_from_args(args)
    code, summary = run_scenario(sc, _out_dir(args, f"out/{sc.name}"))
    _print_summary(summary)
    return code


def cmd_adapt(args) -> int:
    sc = _scenario_from_args(args)
    if not sc.controller.adapt:
        raise InputError(f"scenario {sc.name!r} does not enable adaptation (set adapt = true in [controller])")
    out = _out_dir(args, f"out/{sc.name}")
    result = simulate(sc.sim_config())
    summary = write_outputs(result, out, sc)
    timeline = [(0.0, sc.controller.k2)] + [(t, k) for t, k in result.k2_updates]
    write_csv(out / "k2.csv", ["t", "k2"], timeline)
    _print_summary(summary)
    return EXIT_DIVERGED if result.status == "diverged" else EXIT_OK


def _parse_values(axis: str, raw: str) -> list:
    items = [v.strip() for v in raw.split(",") if v.strip()] if raw else []
    if not items:
        raise InputError("sweep needs at least one value")
    if axis in ("knife", "food"):
        return items
    try:
        return [float(v) for v in items]
    except ValueError as exc:
        raise InputError(f"sweep values for {axis} must be numbers: {raw!r}") from exc


def sweep_scenario(base: Scenario, axis: str, value) -> Scenario:
    """The base scenario with one axis changed. Board heights are offsets
    from the base board; the controller is left untouched."""
    if axis == "board_height":
        return base.with_overrides(board_height=base.environment.board_height + value)
    return base.with_overrides(**{axis: value})


def _sweep_one(job):
    base, axis, value, out = job
    try:
        sc = sweep_scenario(base, axis, value).validate()
        code, summary = run_scenario(sc, out)
        return value, ("ok" if code == EXIT_OK else "diverged"), summary
    except Exception as exc:  # a failed sub-run is recorded, the sweep goes on
        return value, f"failed: {type(exc).__name__}: {exc}", {}


def cmd_sweep(args) -> int:
    if args.axis not in SWEEP_AXES:
        raise InputError(f"unknown sweep axis {args.axis!r}; choose from {list(SWEEP_AXES)}")
    values = _parse_values(args.axis, args.values)
    base = _scenario_from_args(args)
    out = _out_dir(args, f"out/{base.name}_{args.axis}")
    jobs = [(base, args.axis, v, out / f"{args.axis}_{i}") for i, v in enumerate(values)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            results = list(ex.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    rows = []
    for value, status, s in results:
        rows.append((value, status, s.get("f_cut", math.nan), s.get("max_F_peak", math.nan), s.get("mean_work", math.nan),
                     s.get("cut_raise_transitions", 0)))  # fmt: skip
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "comparison.csv", [args.axis, "status", "f_cut", "F_peak", "work", "cut_raise_transitions"], rows)
    for r in rows:
        print(f"{args.axis}={r[0]} status={r[1]} f_cut={r[2]:.4g} F_peak={r[3]:.4g} work={r[4]:.4g}")
    return EXIT_OK


def _parse_ic(text: str) -> tuple[float, float]:
    try:
        x, v = (float(s) for s in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"initial condition must be 'x,xdot', got {text!r}") from exc
    return x, v


def cmd_toy(args) -> int:
    p = ToyParams(args.m, args.c, args.k, args.r1, args.r2, args.x1, args.x2)
    ics = args.ic or [(0.0, 0.0)]
    T = args.duration if args.duration is not None else 60.0
    dt = args.dt if args.dt is not None else 1e-5
    if not (T > 0 and dt > 0):
        raise InputError("toy needs duration > 0 and dt > 0")
    out = _out_dir(args, "out/toy")
    out.mkdir(parents=True, exist_ok=True)
    every = max(1, int(round(args.sample / dt)))
    for i, ic in enumerate(ics):
        write_phase_csv(toy_simulate(p, ic, T, dt, record_every=every), out / f"toy_ic{i}.csv")
    res = poincare_convergence(p, ics, T, dt)
    lines = [f"m = {p.m}", f"c = {p.c}", f"k = {p.k}", f"r1 = {p.r1}", f"r2 = {p.r2}", f"x1 = {p.x1}", f"x2 = {p.x2}"]
    for i, (ic, seq, lim, ok) in enumerate(zip(ics, res.sequences, res.limits, res.converged)):
        lines.append(f"ic{i} = {ic[0]:.6g} {ic[1]:.6g}")
        lines.append(f"ic{i}_crossings = {len(seq)}")
        lines.append(f"ic{i}_limit = {lim:.10g}")
        lines.append(f"ic{i}_converged = {str(ok).lower()}")
        lines.append(f"ic{i}_sequence = " + " ".join(f"{v:.10g}" for v in seq))
    lines.append(f"converged = {str(res.all_converged).lower()}")
    if res.spread is not None:
        lines.append(f"spread = {res.spread:.6g}")
    (out / "poincare.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(l for l in lines if "_sequence" not in l))
    return EXIT_OK


def cmd_metrics(args) -> int:
    path = Path(args.trace) if args.trace else _out_dir(args, ".") / "trace.csv"
    out = _out_dir(args, str(path.parent))
    trace = mt.Trace.from_csv(path)
    cycles = mt.cycle_table(trace) if len(trace) else []
    out.mkdir(parents=True, exist_ok=True)
    mt.write_cycle_csv(cycles, out / "metrics.csv")
    summary = mt.summarize(trace, None, cycles) if len(trace) else {"samples": 0, "cycles": 0}
    (out / "report.txt").write_text(mt.format_report(summary))
    _print_summary(summary)
    return EXIT_OK


def _print_summary(summary: dict) -> None:
    sys.stdout.write(mt.format_report(summary))


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vmrock", description="Virtual-model rocking-cut simulator.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scenario_required=False):
        p.add_argument("--scenario", required=scenario_required, help="scenario file or shipped scenario name")
        p.add_argument("--out", help="output directory")
        p.add_argument("--duration", type=float, help="simulated time in s")
        p.add_argument("--dt", type=float, help="control period in s")
        p.add_argument("--seed", type=int, help="sensor noise seed")

    common(sub.add_parser("simulate", help="run one scenario"), True)
    common(sub.add_parser("adapt", help="run a scenario with k2 adaptation and write the k2 timeline"), True)
    sw = sub.add_parser("sweep", help="run a scenario over one varied axis")
    common(sw, True)
    sw.add_argument("--axis", required=True, help=f"one of {', '.join(SWEEP_AXES)}")
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--jobs", type=int, default=1, help="parallel sub-runs")
    toy = sub.add_parser("toy", help="single-mass switching oscillator")
    common(toy)
    d = ToyParams()
    for name in ("m", "c", "k", "r1", "r2", "x1", "x2"):
        toy.add_argument(f"--{name}", type=float, default=getattr(d, name))
    toy.add_argument("--ic", type=_parse_ic, action="append", help="initial condition 'x,xdot' (repeatable)")
    toy.add_argument("--sample", type=float, default=1e-3, help="phase-plane CSV sample spacing in s")
    met = sub.add_parser("metrics", help="recompute metrics.csv and report.txt from a trace")
    common(met)
    met.add_argument("--trace", help="trace.csv to read (default: <out>/trace.csv)")
    return ap


COMMANDS = {"simulate": cmd_simulate, "adapt": cmd_adapt, "sweep": cmd_sweep, "toy": cmd_toy, "metrics": cmd_metrics}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, mt.MetricsError, *INPUT_ERRORS) as exc:
        print(f"vmrock: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
