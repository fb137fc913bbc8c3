"""CSV writers/readers and gnuplot script emission."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .analysis import threshold_series

TRAJECTORY_HEADER = ("t", "S", "I", "R", "c", "epsilon", "I_dot", "Re_behavioral", "c_bar", "headroom")


def fmt(x) -> str:
    """12 significant digits; infinities as ``inf``/``-inf``."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    return "%.12g" % float(x)


def _write_rows(destination, header, columns):
    destination = Path(destination)
    destination.parent.mkdir(parents=True, exist_ok=True)
    with open(destination, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([fmt(v) for v in row])
    return destination


def write_trajectory_csv(traj, destination, thresholds=None):
    """One row per retained sample; jump times appear as two rows (left limit first)."""
    if thresholds is None:
        thresholds = threshold_series(traj)
    with np.errstate(invalid="ignore"):
        headroom = thresholds.c_bar - traj.c
    cols = (traj.t, traj.s, traj.i, traj.r, traj.c, traj.eps, traj.i_dot,
            traj.r_effective(behavioral=True), thresholds.c_bar, headroom)
    return _write_rows(destination, TRAJECTORY_HEADER, cols)


def read_csv(path) -> dict:
    """Columns of a CSV written by this module, as float arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    return {h: data[:, n] for n, h in enumerate(header)}


def write_threshold_csv(traj, thresholds, destination):
    return _write_rows(destination, ("t", "c", "c_bar", "headroom"),
                       (traj.t, traj.c, thresholds.c_bar, thresholds.headroom))


def write_single_peak_csv(traj, result, destination):
    return _write_rows(destination,
                       ("t", "c_dot_over_c2", "eps2_over_eta", "applicable", "holds", "sufficient_holds"),
                       (traj.t, result.lhs, result.rhs, result.applicable, result.holds,
                        result.sufficient_holds))


def write_policy_csv(res, destination):
    return _write_rows(destination, ("t", "beta_tilde", "I", "c_tilde", "feasible", "I_behavioral"),
                       (res.t, res.beta_tilde, res.reduced_traj.i, res.c_tilde, res.feasibility,
                        res.behavioral_traj.i))


_PLOTS = {
    "simulate": [("I", 3, "prevalence I"), ("c", 5, "distancing cost c"), ("epsilon", 6, "exposure")],
    "threshold": [("c and c_bar", (2, 3), "cost")],
    "check-single-peak": [("condition", (2, 3), "c_dot/c^2 vs eps^2/eta")],
    "implement-beta": [("I", (3, 6), "prevalence"), ("c_tilde", 4, "implementing cost")],
}


def write_plot_script(destination, csv_name, command, title=""):
    """Static gnuplot script plotting ``csv_name`` (same directory) into a PNG."""
    destination = Path(destination)
    panels = _PLOTS.get(command, _PLOTS["simulate"])
    lines = [
        f"# {command}: {title}".rstrip(),
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set terminal pngcairo size 900,%d" % (300 * len(panels)),
        f"set output '{Path(csv_name).stem}.png'",
        f"set multiplot layout {len(panels)},1",
        "set xlabel 't (days)'",
    ]
    for label, cols, ylabel in panels:
        lines.append(f"set ylabel '{ylabel}'")
        cols = cols if isinstance(cols, tuple) else (cols,)
        parts = [f"'{csv_name}' using 1:{c} with lines" for c in cols]
        lines.append("plot " + ", ".join(parts))
    lines.append("unset multiplot")
    destination.parent.mkdir(parents=True, exist_ok=True)
    destination.write_text("\n".join(lines) + "\n")
    return destination
