"""Implementing target transmission paths through the distancing cost.

A reduced-form path ``bt(t)`` replaces ``beta*eps`` in the SIR equations.
Inverting the exposure rule gives the cost that induces it,
``c(t) = beta^2 * eta * I(t) / (beta - bt(t))``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .costs import KIND_CONSTANT, KIND_LINEAR, ACT_JUMP, ACT_NONE, Plan, Tabulated
from .errors import InfeasiblePathError, OutOfRangeError, ValidationError
from .integrator import SimConfig, Trajectory, _run, _trajectory, simulate
from .model import EpidemicParams
from .analysis import threshold_values

DEFAULT_MARGIN = 1e-6


@dataclass(frozen=True)
class TransmissionPath:
    """Target effective transmission rate on ``[knots[0].t, t_end]``.

    ``t_end`` defaults to the last knot time.
    """

    knots: tuple
    interpolation: str = "constant_right"
    t_end: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "knots", tuple((float(t), float(b)) for t, b in self.knots))

    @property
    def domain(self):
        end = self.knots[-1][0] if self.t_end is None else self.t_end
        return self.knots[0][0], end

    def problems(self, where="policy"):
        out = []
        if self.interpolation not in ("constant_right", "linear"):
            out.append(f"{where}.interpolation must be 'constant_right' or 'linear', got {self.interpolation!r}")
        k = self.knots
        if not k or (self.interpolation == "linear" and len(k) < 2):
            out.append(f"{where}.knots has too few entries")
            return out
        for n, (t, b) in enumerate(k):
            if not (math.isfinite(t) and math.isfinite(b)):
                out.append(f"{where}.knots[{n}] must be finite")
            elif b < 0:
                out.append(f"{where}.knots[{n}] target rate must be >= 0, got {b}")
        for n in range(1, len(k)):
            a, b = k[n - 1][0], k[n][0]
            dup_ok = self.interpolation == "linear" and a == b and (n < 2 or k[n - 2][0] != a)
            if not (b > a or dup_ok):
                out.append(f"{where}.knots: times out of order: t={b} (knot {n}) after t={a} (knot {n - 1})")
        if k[0][0] > 0:
            out.append(f"{where}.knots must start at t <= 0, got {k[0][0]}")
        if self.t_end is not None and self.t_end < k[-1][0]:
            out.append(f"{where}.t_end={self.t_end} precedes the last knot")
        return out

    def validate(self):
        p = self.problems()
        if p:
            raise ValidationError(p)
        return self

    def value(self, t):
        lo, hi = self.domain
        t = np.asarray(t, dtype=float)
        if np.any(t < lo) or np.any(t > hi):
            raise OutOfRangeError(f"t outside transmission path domain [{lo}, {hi}]")
        ts = np.array([kt for kt, _ in self.knots])
        bs = np.array([kb for _, kb in self.knots])
        j = np.searchsorted(ts, t, side="right") - 1
        if self.interpolation == "constant_right":
            return bs[j]
        # j is the last knot at or before t, so ts[j + 1] > ts[j] below the end
        inner = np.minimum(j, len(ts) - 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = (t - ts[inner]) / (ts[inner + 1] - ts[inner])
        out = bs[inner] + (bs[inner + 1] - bs[inner]) * w
        return np.where(j >= len(ts) - 1, bs[-1], out)

    def infeasible_intervals(self, beta, margin=DEFAULT_MARGIN):
        """Spans where the target reaches ``beta*(1 - margin)``."""
        cap = beta * (1.0 - margin)
        lo, hi = self.domain
        k = self.knots
        spans = []
        for n, (t, b) in enumerate(k):
            t_next = k[n + 1][0] if n + 1 < len(k) else hi
            if self.interpolation == "constant_right":
                bad = b >= cap
            else:
                b_next = k[n + 1][1] if n + 1 < len(k) else b
                bad = b >= cap or b_next >= cap
            if bad:
                if spans and spans[-1][1] >= t:
                    spans[-1] = (spans[-1][0], max(spans[-1][1], t_next))
                else:
                    spans.append((t, t_next))
        return spans


def _reduced_plan(path: TransmissionPath) -> Plan:
    k = path.knots
    rows = []
    if path.interpolation == "constant_right":
        prev = None
        for t, b in k:
            t0 = max(t, 0.0)
            if rows and t0 == 0.0:
                rows[-1] = (0.0, KIND_CONSTANT, b, 0, 0, ACT_NONE, 0.0)
            else:
                act = ACT_NONE if (prev is None or b == prev) else ACT_JUMP
                rows.append((t0, KIND_CONSTANT, b, 0, 0, act, 0.0))
            prev = b
    else:
        ts = np.array([t for t, _ in k])
        bs = np.array([b for _, b in k])
        uniq, first = np.unique(ts, return_index=True)
        last = np.append(first[1:] - 1, len(ts) - 1)
        left, right = bs[first], bs[last]
        for m in range(len(uniq) - 1):
            if uniq[m + 1] <= 0:
                continue
            slope = (left[m + 1] - right[m]) / (uniq[m + 1] - uniq[m])
            t0 = max(uniq[m], 0.0)
            start = right[m] + slope * (t0 - uniq[m])
            act = ACT_JUMP if (uniq[m] > 0 and left[m] != right[m]) else ACT_NONE
            rows.append((t0, KIND_LINEAR, start, slope, 0, act, 0.0))
    arr = np.array(rows, dtype=float).reshape(-1, 7)
    seg_t = arr[:, 0].copy()
    return Plan(c_init=math.nan, seg_t=seg_t, kind=arr[:, 1].astype(np.int64),
                p0=arr[:, 2].copy(), p1=arr[:, 3].copy(), p2=seg_t.copy(),
                act=arr[:, 5].astype(np.int64), val=arr[:, 6].copy(),
                t_domain_end=path.domain[1])


def simulate_reduced(params: EpidemicParams, path: TransmissionPath, cfg: SimConfig) -> Trajectory:
    """SIR dynamics with ``beta*eps`` replaced by the target path; ``c`` is NaN."""
    cfg.validate()
    path.validate()
    if path.domain[1] < cfg.t_max:
        raise OutOfRangeError(f"transmission path ends at {path.domain[1]} before t_max={cfg.t_max}")
    plan = _reduced_plan(path)
    out, stopped = _run(kernels.MODE_REDUCED, params, plan, cfg, plan.node_times)
    return _trajectory(out, params, path, cfg, stopped, reduced=True)


@dataclass
class ImplementationResult:
    reduced_traj: Trajectory
    behavioral_traj: Trajectory
    t: np.ndarray
    beta_tilde: np.ndarray
    c_tilde: np.ndarray
    feasibility: np.ndarray
    roundtrip_error: float
    warnings: list = field(default_factory=list)


def implement_transmission(params: EpidemicParams, path: TransmissionPath, cfg: SimConfig,
                           margin: float = DEFAULT_MARGIN) -> ImplementationResult:
    """Back out the cost path inducing ``path`` and verify it by re-simulation."""
    path.validate()
    bad = path.infeasible_intervals(params.beta, margin)
    if bad:
        raise InfeasiblePathError(bad, params.beta)
    if params.eta <= 0:
        raise ValidationError("eta must be > 0: without an infection cost exposure cannot be steered")

    red_cfg = SimConfig(t_max=cfg.t_max, dt=cfg.dt, output_every=1,
                        stop_when_i_below=cfg.stop_when_i_below)
    red = simulate_reduced(params, path, red_cfg)
    b = params.beta
    bt = red.transmission
    feasible = bt < b * (1.0 - margin)
    c_tilde = b * b * params.eta * red.i / (b - bt)

    notes = []
    if np.any(c_tilde <= 0):
        raise ValidationError("implementing cost is not positive (prevalence reached zero)")
    if params.c_lower is not None and np.any(c_tilde < params.c_lower):
        first = float(red.t[np.argmax(c_tilde < params.c_lower)])
        notes.append(f"implementing cost falls below c_lower={params.c_lower} (first at t={first:.6g})")
        for msg in notes:
            warnings.warn(msg, RuntimeWarning, stacklevel=2)

    table = Tabulated(knots=tuple(zip(red.t.tolist(), c_tilde.tolist())), interpolation="linear")
    beh_params = params.with_(c0=None, c_lower=float(c_tilde.min()))
    beh_cfg = SimConfig(t_max=red.t_end, dt=cfg.dt, output_every=1, stop_when_i_below=0.0)
    beh = simulate(beh_params, table, beh_cfg)
    if beh.t.shape != red.t.shape or np.any(beh.t != red.t):
        raise RuntimeError("behavioral and reduced grids differ")
    live = red.i > 0
    err = float(np.max(np.abs(beh.i[live] - red.i[live]) / red.i[live])) if np.any(live) else 0.0
    return ImplementationResult(reduced_traj=red, behavioral_traj=beh, t=red.t.copy(),
                                beta_tilde=bt.copy(), c_tilde=c_tilde, feasibility=feasible,
                                roundtrip_error=err, warnings=notes)


def reproduction_constraint_check(traj: Trajectory, params: EpidemicParams = None) -> np.ndarray:
    """Per-sample ``c <= c_bar``: the reproduction number stays at or below one."""
    params = params or traj.params
    return traj.c <= threshold_values(traj.s, traj.i, params)
