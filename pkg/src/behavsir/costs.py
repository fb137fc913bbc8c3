"""Distancing-cost laws ``c(t)``.

Costs are piecewise continuously differentiable with finitely many
right-continuous jumps. Between jumps the slope is given by the active
law, which may depend on time, the current cost and current distancing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import OutOfRangeError, ScheduleError, ValidationError
from .model import EpidemicParams, SystemState

INTERPOLATIONS = ("constant_right", "linear")

# kernel codes
KIND_CONSTANT = 0
KIND_LINEAR = 1
KIND_FATIGUE = 2
ACT_NONE = 0
ACT_JUMP = 1
ACT_SNAP = 2


@dataclass(frozen=True)
class Constant:
    c: Optional[float] = None


@dataclass(frozen=True)
class LinearInTime:
    c0: Optional[float] = None
    k: float = 0.0


@dataclass(frozen=True)
class Fatigue:
    """Cost driven by accumulated distancing: ``dc = k*d - r*(c - c0)``."""

    c0: float
    k: float
    r: float = 0.0


@dataclass(frozen=True)
class Segment:
    t_start: float
    jump_to: Optional[float] = None
    inner: "CostModel" = field(default_factory=Constant)


@dataclass(frozen=True)
class PiecewiseSchedule:
    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))


@dataclass(frozen=True)
class Tabulated:
    knots: tuple
    interpolation: str = "constant_right"

    def __post_init__(self):
        object.__setattr__(self, "knots", tuple((float(t), float(c)) for t, c in self.knots))

    @property
    def domain(self):
        return self.knots[0][0], self.knots[-1][0]


CostModel = Union[Constant, LinearInTime, Fatigue, PiecewiseSchedule, Tabulated]
SEGMENT_LAWS = (Constant, LinearInTime, Fatigue)


def _finite_pos(v):
    return v is not None and math.isfinite(v) and v > 0


def model_problems(model, where="cost"):
    """Return a list of invariant violations (empty when valid)."""
    out = []
    if isinstance(model, Constant):
        if model.c is not None and not _finite_pos(model.c):
            out.append(f"{where}.c must be finite and > 0, got {model.c}")
    elif isinstance(model, LinearInTime):
        if model.c0 is not None and not _finite_pos(model.c0):
            out.append(f"{where}.c0 must be finite and > 0, got {model.c0}")
        if not math.isfinite(model.k):
            out.append(f"{where}.k must be finite, got {model.k}")
    elif isinstance(model, Fatigue):
        if not _finite_pos(model.c0):
            out.append(f"{where}.c0 must be finite and > 0, got {model.c0}")
        if not _finite_pos(model.k):
            out.append(f"{where}.k must be finite and > 0, got {model.k}")
        if not (math.isfinite(model.r) and model.r >= 0):
            out.append(f"{where}.r must be finite and >= 0, got {model.r}")
    elif isinstance(model, PiecewiseSchedule):
        segs = model.segments
        if not segs:
            out.append(f"{where}.segments must not be empty")
        for n, seg in enumerate(segs):
            w = f"{where}.segments[{n}]"
            if not math.isfinite(seg.t_start):
                out.append(f"{w}.t_start must be finite, got {seg.t_start}")
            if seg.jump_to is not None and not _finite_pos(seg.jump_to):
                out.append(f"{w}.jump_to must be finite and > 0, got {seg.jump_to}")
            if not isinstance(seg.inner, SEGMENT_LAWS):
                out.append(f"{w}.inner must be constant, linear_in_time or fatigue")
            else:
                out.extend(model_problems(seg.inner, f"{w}.inner"))
        if segs and segs[0].t_start != 0:
            out.append(f"{where}.segments[0].t_start must be 0, got {segs[0].t_start}")
        for n in range(1, len(segs)):
            a, b = segs[n - 1].t_start, segs[n].t_start
            if not b > a:
                out.append(f"{where}.segments: jump times out of order: "
                           f"t_start={b} (segment {n}) does not follow t_start={a} (segment {n - 1})")
    elif isinstance(model, Tabulated):
        if model.interpolation not in INTERPOLATIONS:
            out.append(f"{where}.interpolation must be one of {INTERPOLATIONS}, got {model.interpolation!r}")
        k = model.knots
        if len(k) < 1 or (model.interpolation == "linear" and len(k) < 2):
            out.append(f"{where}.knots has too few entries")
        for n, (t, c) in enumerate(k):
            if not math.isfinite(t):
                out.append(f"{where}.knots[{n}] time must be finite, got {t}")
            if not _finite_pos(c):
                out.append(f"{where}.knots[{n}] cost must be finite and > 0, got {c}")
        for n in range(1, len(k)):
            a, b = k[n - 1][0], k[n][0]
            dup_ok = model.interpolation == "linear" and b == a and (n < 2 or k[n - 2][0] != a)
            if not (b > a or dup_ok):
                out.append(f"{where}.knots: times out of order: t={b} (knot {n}) after t={a} (knot {n - 1})")
    else:
        out.append(f"{where}: unknown cost model {type(model).__name__}")
    return out


def validate(model, c_lower=None):
    problems = model_problems(model)
    if not problems and c_lower is not None:
        lo = scheduled_floor(model)
        if lo is not None and lo < c_lower:
            problems.append(f"scheduled cost {lo} is below c_lower={c_lower}")
    if problems:
        raise ScheduleError(problems)
    return model


def initial_cost(model) -> Optional[float]:
    """Cost at t = 0 implied by the model itself, or None."""
    if isinstance(model, Constant):
        return model.c
    if isinstance(model, (LinearInTime, Fatigue)):
        return model.c0
    if isinstance(model, PiecewiseSchedule):
        first = model.segments[0]
        if first.jump_to is not None:
            return first.jump_to
        return initial_cost(first.inner)
    if isinstance(model, Tabulated):
        return tabulated_value(model, 0.0)
    raise TypeError(type(model))


def scheduled_floor(model) -> Optional[float]:
    """Smallest cost level named by the model (levels, jump targets, knots)."""
    vals = []
    if isinstance(model, PiecewiseSchedule):
        for seg in model.segments:
            if seg.jump_to is not None:
                vals.append(seg.jump_to)
            v = scheduled_floor(seg.inner)
            if v is not None:
                vals.append(v)
    elif isinstance(model, Tabulated):
        vals.extend(c for _, c in model.knots)
    else:
        v = initial_cost(model)
        if v is not None:
            vals.append(v)
    return min(vals) if vals else None


def resolve_params(params: EpidemicParams, model) -> EpidemicParams:
    """Fill ``c0`` and ``c_lower`` from the cost model.

    A schedule jump at t = 0 overrides ``params.c0``; otherwise a level
    named by both must agree.
    """
    validate(model)
    implied = initial_cost(model)
    overrides = isinstance(model, PiecewiseSchedule) and model.segments[0].jump_to is not None
    c0 = params.c0
    if implied is not None:
        if c0 is not None and not overrides and not math.isclose(c0, implied, rel_tol=1e-12):
            raise ValidationError(f"params.c0={c0} conflicts with the cost model's initial cost {implied}")
        c0 = implied
    if c0 is None:
        raise ValidationError("initial cost is undefined: set params.c0 or a cost level")
    c_lower = params.c_lower
    if c_lower is None:
        floor = scheduled_floor(model)
        c_lower = c0 if floor is None else min(c0, floor)
    if c0 < c_lower:
        raise ScheduleError(f"initial cost {c0} is below c_lower={c_lower}")
    validate(model, c_lower)
    return params.with_(c0=c0, c_lower=c_lower)


# -- tabulated helpers ------------------------------------------------------

def _knot_arrays(model: Tabulated):
    k = np.asarray(model.knots, dtype=float)
    return k[:, 0], k[:, 1]


def _check_domain(model: Tabulated, t):
    lo, hi = model.domain
    if not lo <= t <= hi:
        raise OutOfRangeError(f"t={t} outside tabulated domain [{lo}, {hi}]")


def tabulated_value(model: Tabulated, t: float) -> float:
    """Right-continuous value of the interpolant."""
    _check_domain(model, t)
    ts, cs = _knot_arrays(model)
    j = int(np.searchsorted(ts, t, side="right")) - 1
    if model.interpolation == "constant_right" or j == len(ts) - 1:
        return float(cs[j])
    t0, t1, c0, c1 = ts[j], ts[j + 1], cs[j], cs[j + 1]
    return float(c0 + (c1 - c0) * (t - t0) / (t1 - t0))


def tabulated_slope(model: Tabulated, t: float) -> float:
    _check_domain(model, t)
    if model.interpolation == "constant_right":
        return 0.0
    ts, cs = _knot_arrays(model)
    j = int(np.searchsorted(ts, t, side="right")) - 1
    if j >= len(ts) - 1:
        j = len(ts) - 2
        while j > 0 and ts[j + 1] == ts[j]:
            j -= 1
    return float((cs[j + 1] - cs[j]) / (ts[j + 1] - ts[j]))


# -- slope and jumps --------------------------------------------------------

def _law_rate(law, c, d):
    if isinstance(law, Constant):
        return 0.0
    if isinstance(law, LinearInTime):
        return float(law.k)
    if isinstance(law, Fatigue):
        return law.k * d - law.r * (c - law.c0)
    raise TypeError(type(law))


def active_segment(model: PiecewiseSchedule, t: float) -> Segment:
    starts = [s.t_start for s in model.segments]
    j = int(np.searchsorted(starts, t, side="right")) - 1
    if j < 0:
        raise OutOfRangeError(f"t={t} precedes the first schedule segment")
    return model.segments[j]


def cost_rate(model, t: float, c: float, d: float) -> float:
    """Slope of the cost path at ``t`` given cost ``c`` and distancing ``d``."""
    if isinstance(model, SEGMENT_LAWS):
        return _law_rate(model, c, d)
    if isinstance(model, PiecewiseSchedule):
        return _law_rate(active_segment(model, t).inner, c, d)
    if isinstance(model, Tabulated):
        return tabulated_slope(model, t)
    raise TypeError(type(model))


def jump_table(model):
    """Declared jump nodes as ``{t: post-jump cost}``."""
    if isinstance(model, PiecewiseSchedule):
        return {s.t_start: s.jump_to for s in model.segments if s.jump_to is not None}
    if isinstance(model, Tabulated):
        if model.interpolation == "constant_right":
            return {t: c for t, c in model.knots}
        out = {}
        for n in range(1, len(model.knots)):
            if model.knots[n][0] == model.knots[n - 1][0]:
                out[model.knots[n][0]] = model.knots[n][1]
        return out
    return {}


def jump_times(model):
    return sorted(jump_table(model))


def apply_jump(model, t_n: float, state: SystemState, c_lower: Optional[float] = None) -> float:
    """Post-jump cost at a declared jump node; compartments are untouched."""
    table = jump_table(model)
    if t_n not in table:
        raise ValueError(f"t={t_n} is not a declared jump node")
    new_c = table[t_n]
    if c_lower is not None and new_c < c_lower:
        raise ScheduleError(f"jump at t={t_n} to {new_c} is below c_lower={c_lower}")
    return float(new_c)


# -- closed forms -----------------------------------------------------------

def fatigue_closed_form(times, eps, k: float, r: float, c0: float) -> float:
    """Cost at ``times[-1]`` from the exposure history, by trapezoid quadrature.

    Evaluates ``c0 + k * int_0^t exp(-r (t - tau)) (1 - eps(tau)) dtau``.
    """
    times = np.asarray(times, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if times.size < 2:
        return float(c0)
    w = np.exp(-r * (times[-1] - times)) * (1.0 - eps)
    return float(c0 + k * np.trapezoid(w, times))


def lemma1_escape_cost(c0: float, eta: float, t):
    """Cost path whose growth rate equals ``c/eta``; it blows up at ``t = eta/c0``."""
    t_arr = np.asarray(t, dtype=float)
    t_end = eta / c0
    if np.any(t_arr < 0) or np.any(t_arr >= t_end):
        raise ValueError(f"t must lie in [0, {t_end}) (escape time eta/c0)")
    out = c0 / (1.0 - c0 * t_arr / eta)
    return float(out) if np.ndim(out) == 0 else out


# -- kernel plan ------------------------------------------------------------

@dataclass
class Plan:
    """Flat per-segment arrays consumed by the integration kernel."""

    c_init: float
    seg_t: np.ndarray
    kind: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    act: np.ndarray
    val: np.ndarray
    t_domain_end: float = math.inf

    @property
    def node_times(self):
        return self.seg_t[1:]


def _law_code(law):
    if isinstance(law, Constant):
        return KIND_CONSTANT, 0.0, 0.0, 0.0
    if isinstance(law, LinearInTime):
        return KIND_LINEAR, float(law.k), 0.0, 0.0
    if isinstance(law, Fatigue):
        return KIND_FATIGUE, float(law.c0), float(law.k), float(law.r)
    raise TypeError(type(law))


def _plan_from_rows(c_init, rows, t_end=math.inf):
    arr = np.array(rows, dtype=float).reshape(-1, 7)
    return Plan(
        c_init=float(c_init),
        seg_t=arr[:, 0].copy(),
        kind=arr[:, 1].astype(np.int64),
        p0=arr[:, 2].copy(), p1=arr[:, 3].copy(), p2=arr[:, 4].copy(),
        act=arr[:, 5].astype(np.int64),
        val=arr[:, 6].copy(),
        t_domain_end=t_end,
    )


def compile_plan(model, c0: float) -> Plan:
    """Flatten a cost model into kernel segments starting at t = 0."""
    validate(model)
    if isinstance(model, SEGMENT_LAWS):
        kd, a, b, c = _law_code(model)
        return _plan_from_rows(c0, [(0.0, kd, a, b, c, ACT_NONE, 0.0)])
    if isinstance(model, PiecewiseSchedule):
        rows = []
        c_init = c0
        for n, seg in enumerate(model.segments):
            kd, a, b, c = _law_code(seg.inner)
            if n == 0:
                if seg.jump_to is not None:
                    c_init = seg.jump_to
                rows.append((0.0, kd, a, b, c, ACT_NONE, 0.0))
            elif seg.jump_to is not None:
                rows.append((seg.t_start, kd, a, b, c, ACT_JUMP, seg.jump_to))
            else:
                rows.append((seg.t_start, kd, a, b, c, ACT_NONE, 0.0))
        return _plan_from_rows(c_init, rows)
    if isinstance(model, Tabulated):
        return _compile_tabulated(model)
    raise TypeError(type(model))


def _compile_tabulated(model: Tabulated) -> Plan:
    ts, cs = _knot_arrays(model)
    lo, hi = ts[0], ts[-1]
    if lo > 0:
        raise OutOfRangeError(f"tabulated domain starts at {lo} > 0")
    c_init = tabulated_value(model, 0.0)
    if model.interpolation == "constant_right":
        rows = [(0.0, KIND_CONSTANT, 0, 0, 0, ACT_NONE, 0.0)]
        for t, c in zip(ts, cs):
            if t > 0:
                rows.append((t, KIND_CONSTANT, 0, 0, 0, ACT_JUMP, c))
        return _plan_from_rows(c_init, rows, hi)

    # distinct knot times with left/right values (a duplicated time is a jump)
    uniq, first = np.unique(ts, return_index=True)
    last = np.append(first[1:] - 1, len(ts) - 1)
    left, right = cs[first], cs[last]
    slopes = (left[1:] - right[:-1]) / np.diff(uniq)
    rows = []
    for m in range(len(uniq) - 1):
        u = uniq[m]
        if uniq[m + 1] <= 0:
            continue
        if u <= 0:
            rows.append((0.0, KIND_LINEAR, slopes[m], 0, 0, ACT_NONE, 0.0))
        elif left[m] != right[m]:
            rows.append((u, KIND_LINEAR, slopes[m], 0, 0, ACT_JUMP, right[m]))
        else:
            rows.append((u, KIND_LINEAR, slopes[m], 0, 0, ACT_SNAP, right[m]))
    if not rows:
        rows.append((0.0, KIND_LINEAR, slopes[-1], 0, 0, ACT_NONE, 0.0))
    return _plan_from_rows(c_init, rows, hi)
