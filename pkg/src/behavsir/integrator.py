"""Jump-aligned fixed-step integration producing :class:`Trajectory` objects."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import kernels
from .costs import compile_plan, jump_times, resolve_params, Tabulated
from .errors import NumericalError, OutOfRangeError, ValidationError
from .model import EpidemicParams, SystemState


@dataclass(frozen=True)
class SimConfig:
    t_max: float
    dt: float = 0.01
    output_every: int = 1
    stop_when_i_below: float = 1e-12

    def problems(self):
        out = []
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            out.append(f"sim.t_max must be finite and > 0, got {self.t_max}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            out.append(f"sim.dt must be finite and > 0, got {self.dt}")
        elif not out and self.dt > self.t_max:
            out.append(f"sim.dt={self.dt} exceeds sim.t_max={self.t_max}")
        if isinstance(self.output_every, bool) or not isinstance(self.output_every, (int, np.integer)) \
                or self.output_every < 1:
            out.append(f"sim.output_every must be a positive integer, got {self.output_every!r}")
        if not (math.isfinite(self.stop_when_i_below) and self.stop_when_i_below >= 0):
            out.append(f"sim.stop_when_i_below must be >= 0, got {self.stop_when_i_below}")
        return out

    def validate(self):
        p = self.problems()
        if p:
            raise ValidationError(p)
        return self


@dataclass
class Trajectory:
    """Sampled solution. Jump times appear twice: left limit first, then right limit.

    ``transmission`` is the effective transmission rate ``beta*eps`` (or the
    imposed target rate for reduced-form runs); ``i_dot`` and ``c_dot`` come
    from the right-hand side at each sample.
    """

    t: np.ndarray
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    c: np.ndarray
    eps: np.ndarray
    i_dot: np.ndarray
    c_dot: np.ndarray
    transmission: np.ndarray
    tag: np.ndarray
    params: EpidemicParams
    model: Any
    cfg: SimConfig
    stopped_early: bool = False
    reduced: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.t.shape[0]

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def state(self, j: int) -> SystemState:
        return SystemState(float(self.t[j]), float(self.s[j]), float(self.i[j]),
                           float(self.r[j]), float(self.c[j]))

    def index_at(self, t: float, side: str = "right") -> int:
        """Index of the sample at time ``t``; at a jump, ``side`` picks the limit."""
        lo = int(np.searchsorted(self.t, t, side="left"))
        hi = int(np.searchsorted(self.t, t, side="right")) - 1
        if lo > hi:
            raise ValueError(f"t={t} is not a sample node")
        return hi if side == "right" else lo

    def r_effective(self, behavioral: bool = True) -> np.ndarray:
        if behavioral:
            return self.transmission * self.s / self.params.gamma
        return self.params.beta * self.s / self.params.gamma


def _run(mode, params, plan, cfg, node_times):
    grid = kernels.build_grid(cfg.t_max, cfg.dt, node_times)
    seg_of_point = np.searchsorted(plan.seg_t, grid, side="right") - 1
    status, t_fail, n, out = kernels.integrate(
        mode, float(params.beta), float(params.gamma), float(params.eta),
        float(params.s0), float(params.i0), 0.0, float(plan.c_init),
        float(params.c_lower) if mode == kernels.MODE_BEHAVIORAL else 0.0,
        grid, seg_of_point.astype(np.int64), plan.seg_t, plan.kind,
        plan.p0, plan.p1, plan.p2, plan.act, plan.val,
        int(cfg.output_every), float(cfg.stop_when_i_below))
    if status == kernels.STATUS_NONFINITE:
        raise NumericalError("non-finite state", t_fail)
    if status == kernels.STATUS_BOUNDS:
        raise NumericalError("compartment left [0, 1] beyond tolerance (dt too large?)", t_fail)
    if status == kernels.STATUS_COST_FLOOR:
        raise NumericalError(f"distancing cost fell below c_lower={params.c_lower}", t_fail)
    out = out[:n]
    stopped = out[-1, 0] < grid[-1]
    return out, bool(stopped)


def _trajectory(out, params, model, cfg, stopped, reduced=False, meta=None):
    trans = out[:, 5].copy()
    return Trajectory(
        t=out[:, 0].copy(), s=out[:, 1].copy(), i=out[:, 2].copy(), r=out[:, 3].copy(),
        c=out[:, 4].copy(), eps=trans / params.beta, i_dot=out[:, 6].copy(),
        c_dot=out[:, 7].copy(), transmission=trans, tag=out[:, 8].astype(np.int8),
        params=params, model=model, cfg=cfg, stopped_early=stopped, reduced=reduced,
        meta=meta or {})


def simulate(params: EpidemicParams, model, cfg: SimConfig) -> Trajectory:
    """Integrate the equilibrium system from ``(1 - i0, i0, 0, c0)``."""
    cfg.validate()
    params = resolve_params(params, model)
    jt = jump_times(model)
    late = [t for t in jt if not 0 <= t <= cfg.t_max]
    if late and not isinstance(model, Tabulated):
        raise ValidationError([f"jump time {t} outside [0, t_max={cfg.t_max}]" for t in late])
    plan = compile_plan(model, params.c0)
    if cfg.t_max > plan.t_domain_end:
        raise OutOfRangeError(f"t_max={cfg.t_max} exceeds tabulated domain end {plan.t_domain_end}")
    out, stopped = _run(kernels.MODE_BEHAVIORAL, params, plan, cfg, plan.node_times)
    return _trajectory(out, params, model, cfg, stopped)


@dataclass(frozen=True)
class TerminalSummary:
    s_inf: float
    i_final: float
    eps_final: float
    herd_threshold: float
    t_end: float
    converged: bool


def terminal_summary(traj: Trajectory, params: Optional[EpidemicParams] = None,
                     i_tol: Optional[float] = None) -> TerminalSummary:
    """End-of-run record; ``converged`` says whether long-run limits can be read off.

    Converged means ``I`` is below ``i_tol`` (default: the larger of the
    early-stop threshold and 1e-6) and exposure exceeds 0.999.
    """
    params = params or traj.params
    if i_tol is None:
        i_tol = max(traj.cfg.stop_when_i_below, 1e-6)
    i_final = float(traj.i[-1])
    eps_final = float(traj.eps[-1])
    return TerminalSummary(
        s_inf=float(traj.s[-1]), i_final=i_final, eps_final=eps_final,
        herd_threshold=params.gamma / params.beta, t_end=traj.t_end,
        converged=bool(i_final < i_tol and eps_final > 0.999))
