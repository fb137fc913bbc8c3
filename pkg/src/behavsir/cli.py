"""Command-line interface.

    behavsir simulate --config scenarios/example1.toml --out out
    behavsir sweep --config scenarios/sweep_fatigue.toml --out out --jobs 4

Exit codes: 0 success, 1 single-peak condition violated (check-single-peak
only), 2 validation error, 3 runtime/numerical error, 4 infeasible policy.
Failures print one JSON line on stderr starting with ``{"error":``.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

from . import io
from .analysis import detect_waves, single_peak_condition, threshold_series
from .errors import InfeasiblePathError, NumericalError, OutOfRangeError, ValidationError
from .integrator import simulate, terminal_summary
from .policy import implement_transmission, reproduction_constraint_check
from .scenario import load_manifest, load_scenario

EXIT_OK = 0
EXIT_CONDITION = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
EXIT_INFEASIBLE = 4

COMMANDS = ("simulate", "waves", "threshold", "check-single-peak", "implement-beta", "sweep")


def _apply_overrides(sc, args):
    sim = sc.sim
    if args.dt is not None:
        sim = replace(sim, dt=args.dt)
    if args.t_max is not None:
        sim = replace(sim, t_max=args.t_max)
    sim.validate()
    return replace(sc, sim=sim)


def _emit(obj):
    print(json.dumps(obj, sort_keys=True))


def _summary_dict(traj):
    s = asdict(terminal_summary(traj))
    s["stopped_early"] = traj.stopped_early
    s["samples"] = len(traj)
    return s


def _write_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run_simulate(sc, out_dir):
    traj = simulate(sc.params, sc.cost, sc.sim)
    d = Path(out_dir) / sc.name
    io.write_trajectory_csv(traj, d / "simulate.csv")
    io.write_plot_script(d / "simulate.gp", "simulate.csv", "simulate", sc.name)
    summary = _summary_dict(traj)
    if sc.analyses.waves:
        summary["wave_count"] = detect_waves(traj).wave_count
    if sc.analyses.single_peak:
        summary["single_peak_condition"] = single_peak_condition(traj).verdict
    if sc.analyses.threshold:
        summary["threshold_crossings"] = threshold_series(traj).crossings
    if sc.analyses.reproduction:
        summary["reproduction_ok_fraction"] = float(reproduction_constraint_check(traj).mean())
    _write_json(d / "simulate.json", summary)
    return summary


def cmd_simulate(sc, args):
    summary = run_simulate(sc, args.out)
    summary["csv"] = str(Path(args.out) / sc.name / "simulate.csv")
    _emit(summary)
    return EXIT_OK


def cmd_waves(sc, args):
    traj = simulate(sc.params, sc.cost, sc.sim)
    report = detect_waves(traj).to_dict()
    d = Path(args.out) / sc.name
    io.write_trajectory_csv(traj, d / "waves.csv")
    io.write_plot_script(d / "waves.gp", "waves.csv", "simulate", sc.name)
    _write_json(d / "waves.json", report)
    _emit(report)
    return EXIT_OK


def cmd_threshold(sc, args):
    traj = simulate(sc.params, sc.cost, sc.sim)
    ts = threshold_series(traj)
    d = Path(args.out) / sc.name
    io.write_threshold_csv(traj, ts, d / "threshold.csv")
    io.write_plot_script(d / "threshold.gp", "threshold.csv", "threshold", sc.name)
    _emit({"crossings": ts.crossings, "csv": str(d / "threshold.csv")})
    return EXIT_OK


def cmd_check_single_peak(sc, args):
    traj = simulate(sc.params, sc.cost, sc.sim)
    res = single_peak_condition(traj)
    d = Path(args.out) / sc.name
    io.write_single_peak_csv(traj, res, d / "check-single-peak.csv")
    io.write_plot_script(d / "check-single-peak.gp", "check-single-peak.csv", "check-single-peak", sc.name)
    _emit({"verdict": res.verdict, "sufficient_verdict": res.sufficient_verdict,
           "violations": int((~res.holds & res.applicable).sum()),
           "wave_count": detect_waves(traj).wave_count})
    return EXIT_OK if res.verdict else EXIT_CONDITION


def cmd_implement_beta(sc, args):
    if sc.policy is None:
        raise ValidationError("policy: section required for implement-beta")
    res = implement_transmission(sc.params, sc.policy, sc.sim, margin=sc.policy_margin)
    d = Path(args.out) / sc.name
    io.write_policy_csv(res, d / "implement-beta.csv")
    io.write_trajectory_csv(res.reduced_traj, d / "implement-beta_reduced.csv")
    io.write_plot_script(d / "implement-beta.gp", "implement-beta.csv", "implement-beta", sc.name)
    summary = {"roundtrip_error": res.roundtrip_error, "warnings": res.warnings,
               "c_tilde_min": float(res.c_tilde.min()), "c_tilde_max": float(res.c_tilde.max()),
               "samples": int(res.t.size)}
    _write_json(d / "implement-beta.json", summary)
    _emit(summary)
    return EXIT_OK


def _sweep_cell(item):
    name, sc, out = item
    try:
        return name, run_simulate(sc, out), None
    except (ValidationError, OutOfRangeError) as exc:
        return name, None, (EXIT_VALIDATION, str(exc))
    except NumericalError as exc:
        return name, None, (EXIT_RUNTIME, str(exc))


def cmd_sweep(args):
    cells = load_manifest(args.config)
    items = []
    for name, sc in cells:
        sc = _apply_overrides(sc, args)
        items.append((name, sc, args.out))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_sweep_cell, items))
    else:
        results = [_sweep_cell(it) for it in items]
    worst = EXIT_OK
    for name, summary, err in sorted(results, key=lambda r: r[0]):
        if err:
            worst = max(worst, err[0])
            _emit({"cell": name, "error": err[1]})
        else:
            _emit({"cell": name, **summary})
    return worst


HANDLERS = {
    "simulate": cmd_simulate,
    "waves": cmd_waves,
    "threshold": cmd_threshold,
    "check-single-peak": cmd_check_single_peak,
    "implement-beta": cmd_implement_beta,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="behavsir", description="Behavioral SIR with time-varying distancing cost")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path,
                       help="scenario file (sweep: manifest file)")
        p.add_argument("--out", default=Path("out"), type=Path, help="output directory")
        p.add_argument("--dt", type=float, default=None, help="override sim.dt")
        p.add_argument("--t-max", dest="t_max", type=float, default=None, help="override sim.t_max")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="parallel cells")
    return ap


def _fail(code, kind, exc):
    line = {"error": kind, "exit_code": code, "message": str(exc)}
    if isinstance(exc, ValidationError):
        line["problems"] = exc.problems
    if isinstance(exc, InfeasiblePathError):
        line["intervals"] = exc.intervals
    print(json.dumps(line), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            return cmd_sweep(args)
        sc = _apply_overrides(load_scenario(args.config), args)
        return HANDLERS[args.command](sc, args)
    except InfeasiblePathError as exc:
        return _fail(EXIT_INFEASIBLE, "infeasible", exc)
    except (ValidationError, OutOfRangeError) as exc:
        return _fail(EXIT_VALIDATION, "validation", exc)
    except FileNotFoundError as exc:
        return _fail(EXIT_VALIDATION, "validation", exc)
    except (NumericalError, OSError) as exc:
        return _fail(EXIT_RUNTIME, "runtime", exc)


if __name__ == "__main__":
    sys.exit(main())
