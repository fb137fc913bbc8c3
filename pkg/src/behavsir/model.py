"""Parameters, state and the pointwise equilibrium formulas.

Myopic susceptibles choose exposure ``eps = max(0, 1 - beta*eta*I/c)``;
plugging that into the SIR equations gives the equilibrium dynamics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional


@dataclass(frozen=True)
class EpidemicParams:
    """Disease and preference constants.

    ``c0`` and ``c_lower`` may be left as ``None``; they are then resolved
    from the cost model (see :func:`behavsir.costs.resolve_params`).
    """

    beta: float
    gamma: float
    eta: float
    i0: float
    c0: Optional[float] = None
    pi_s: float = 0.0
    c_lower: Optional[float] = None

    def __post_init__(self):
        for name in ("beta", "gamma", "eta", "i0", "pi_s"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not self.beta > self.gamma:
            raise ValueError(f"beta must exceed gamma (beta={self.beta}, gamma={self.gamma})")
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        # i0 = 0 is admitted so the disease-free fixed point can be exercised
        if not 0 <= self.i0 < 1:
            raise ValueError(f"i0 must lie in [0, 1), got {self.i0}")
        if self.c0 is not None and not (math.isfinite(self.c0) and self.c0 > 0):
            raise ValueError(f"c0 must be finite and > 0, got {self.c0}")
        if self.c_lower is not None:
            if not (math.isfinite(self.c_lower) and self.c_lower > 0):
                raise ValueError(f"c_lower must be finite and > 0, got {self.c_lower}")
            if self.c0 is not None and self.c0 < self.c_lower:
                raise ValueError(f"c0={self.c0} is below c_lower={self.c_lower}")

    @property
    def s0(self) -> float:
        return 1.0 - self.i0

    @property
    def herd_threshold(self) -> float:
        """Susceptible share ``gamma/beta`` below which prevalence cannot grow."""
        return self.gamma / self.beta

    def with_(self, **changes) -> "EpidemicParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class SystemState:
    t: float
    s: float
    i: float
    r: float
    c: float


def _check_finite(**values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


def exposure(i: float, c: float, params: EpidemicParams) -> float:
    """Equilibrium exposure level, clamped to ``[0, 1]``."""
    _check_finite(i=i, c=c)
    if c <= 0:
        raise ValueError(f"distancing cost must be > 0, got {c}")
    if i < 0 or i > 1:
        raise ValueError(f"infected share must lie in [0, 1], got {i}")
    return max(0.0, 1.0 - params.beta * params.eta * i / c)


def derivatives(state: SystemState, cost_rate: float, params: EpidemicParams):
    """Time derivative ``(dS, dI, dR, dc)`` of the coupled system.

    ``cost_rate`` is the cost slope supplied by the cost model. The three
    compartment slopes are built from two flows so that ``(dS + dR) + dI``
    is exactly zero in floating point.
    """
    _check_finite(s=state.s, i=state.i, r=state.r, cost_rate=cost_rate)
    eps = exposure(state.i, state.c, params)
    infection = params.beta * eps * state.i * state.s
    recovery = params.gamma * state.i
    return -infection, infection - recovery, recovery, float(cost_rate)


def initial_growth_check(params: EpidemicParams, c0: Optional[float] = None) -> bool:
    """Take-off condition: True iff prevalence is increasing at t = 0."""
    c0 = params.c0 if c0 is None else c0
    if c0 is None:
        raise ValueError("initial cost c0 is required")
    eps0 = exposure(params.i0, c0, params)
    return params.beta * params.s0 * eps0 - params.gamma > 0


def r_effective(state: SystemState, params: EpidemicParams, behavioral: bool = True) -> float:
    """Effective reproduction number; ``behavioral=False`` drops distancing."""
    if behavioral:
        eps = exposure(state.i, state.c, params)
        return params.beta * eps * state.s / params.gamma
    return params.beta * state.s / params.gamma
