"""Wave detection, single-peak conditions and the threshold distancing cost."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import EpidemicParams, SystemState, derivatives

STATIONARY_TOL = 1e-12
PROMINENCE_TOL = 1e-10


@dataclass
class PeakReport:
    peaks: list
    troughs: list
    c_peaks: list
    c_troughs: list = field(default_factory=list)

    @property
    def wave_count(self) -> int:
        return len(self.peaks)

    def to_dict(self):
        pair = lambda xs: [{"t": float(t), "value": float(v)} for t, v in xs]
        return {"wave_count": self.wave_count, "peaks": pair(self.peaks),
                "troughs": pair(self.troughs), "c_peaks": pair(self.c_peaks),
                "c_troughs": pair(self.c_troughs)}


def _extrema(t, x, slope, tol=STATIONARY_TOL, prominence=PROMINENCE_TOL):
    """Strict local extrema from sign changes of the stored slope.

    Samples with ``|slope| <= tol`` are treated as stationary and merged
    into the surrounding crossing. Returns (peaks, troughs) as index lists.
    """
    sign = np.where(slope > tol, 1, np.where(slope < -tol, -1, 0))
    nz = np.flatnonzero(sign)
    if nz.size < 2:
        return [], []
    sg = sign[nz]
    change = np.flatnonzero(sg[1:] != sg[:-1])
    ext = []  # (index, +1 peak / -1 trough)
    for a in change:
        j1, j2 = nz[a], nz[a + 1]
        seg = x[j1:j2 + 1]
        if sg[a] > 0:
            ext.append([j1 + int(np.argmax(seg)), 1])
        else:
            ext.append([j1 + int(np.argmin(seg)), -1])
    # drop adjacent peak/trough pairs that differ by less than the prominence floor
    while len(ext) >= 2:
        gaps = [abs(x[ext[n][0]] - x[ext[n + 1][0]]) for n in range(len(ext) - 1)]
        n = int(np.argmin(gaps))
        if gaps[n] >= prominence:
            break
        del ext[n:n + 2]
    peaks = [j for j, kind in ext if kind > 0]
    troughs = [j for j, kind in ext if kind < 0]
    return peaks, troughs


def detect_waves(traj) -> PeakReport:
    """Peaks and troughs of prevalence (and of the cost path)."""
    if len(traj) < 3:
        raise ValueError("need at least 3 samples")
    pk, tr = _extrema(traj.t, traj.i, traj.i_dot)
    if traj.reduced:
        cpk, ctr = [], []
    else:
        cpk, ctr = _extrema(traj.t, traj.c, traj.c_dot)
    at = lambda idx, x: [(float(traj.t[j]), float(x[j])) for j in idx]
    return PeakReport(peaks=at(pk, traj.i), troughs=at(tr, traj.i),
                      c_peaks=at(cpk, traj.c), c_troughs=at(ctr, traj.c))


@dataclass
class SinglePeakResult:
    holds: np.ndarray          # strict inequality per sample
    applicable: np.ndarray     # exposure > 0 and t > 0
    sufficient_holds: np.ndarray
    lhs: np.ndarray            # c_dot / c^2
    rhs: np.ndarray            # eps^2 / eta

    @property
    def verdict(self) -> bool:
        return bool(np.all(self.holds[self.applicable]))

    @property
    def sufficient_verdict(self) -> bool:
        return bool(np.all(self.sufficient_holds[self.applicable]))


def single_peak_condition(traj, params: EpidemicParams = None) -> SinglePeakResult:
    """Evaluate ``c_dot/c^2 < eps^2/eta`` and the coarser bound at every sample.

    Samples with zero exposure (and t = 0) are marked not applicable and are
    ignored by the verdict. With ``eta == 0`` the condition holds trivially.
    """
    params = params or traj.params
    c, cd, eps = traj.c, traj.c_dot, traj.eps
    lhs = cd / (c * c)
    applicable = (eps > 0) & (traj.t > 0)
    if params.eta == 0:
        ones = np.ones(len(traj), dtype=bool)
        return SinglePeakResult(ones, applicable, ones, lhs, np.full(len(traj), np.inf))
    rhs = eps * eps / params.eta
    bound = params.gamma ** 2 / (params.eta * params.beta ** 2 * params.s0 ** 2)
    return SinglePeakResult(holds=lhs < rhs, applicable=applicable,
                            sufficient_holds=lhs < bound, lhs=lhs, rhs=rhs)


def curvature_at_stationary(state: SystemState, cost_rate: float, params: EpidemicParams) -> float:
    """Second derivative of prevalence at a stationary point.

    Negative means a local maximum, positive a local minimum.
    """
    eps = 1.0 - params.beta * params.eta * state.i / state.c
    if eps <= 0:
        raise ValueError("curvature identity requires positive exposure")
    b = params.beta
    # eta factored into the bracket so eta = 0 needs no special case
    return b * b * state.i ** 2 * state.s * (params.eta * cost_rate / state.c ** 2 - eps * eps)


def threshold_cost(state: SystemState, params: EpidemicParams) -> float:
    """Largest instantaneous cost keeping prevalence decreasing; inf past herd immunity."""
    b = params.beta
    if state.s <= params.gamma / b:
        return math.inf
    return b * b * state.i * state.s * params.eta / (b * state.s - params.gamma)


def threshold_values(s, i, params: EpidemicParams) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    i = np.asarray(i, dtype=float)
    b = params.beta
    out = np.full(s.shape, np.inf)
    live = s > params.gamma / b
    out[live] = b * b * i[live] * s[live] * params.eta / (b * s[live] - params.gamma)
    return out


@dataclass
class ThresholdSeries:
    t: np.ndarray
    c_bar: np.ndarray
    headroom: np.ndarray
    crossings: list

    def finite(self):
        return np.isfinite(self.c_bar)


def _crossing_times(t, h):
    """Times where ``h`` changes sign (zeros merged), linearly interpolated."""
    sign = np.sign(h)
    nz = np.flatnonzero(np.isfinite(h) & (sign != 0))
    out = []
    for a, b in zip(nz[:-1], nz[1:]):
        if sign[a] != sign[b]:
            if b == a + 1 and t[b] > t[a]:
                out.append(float(t[a] - h[a] * (t[b] - t[a]) / (h[b] - h[a])))
            else:
                out.append(float(t[b]))
    return out


def threshold_series(traj, params: EpidemicParams = None) -> ThresholdSeries:
    params = params or traj.params
    c_bar = threshold_values(traj.s, traj.i, params)
    with np.errstate(invalid="ignore"):
        headroom = c_bar - traj.c
    return ThresholdSeries(t=traj.t, c_bar=c_bar, headroom=headroom,
                           crossings=_crossing_times(traj.t, headroom))


def perturbation_sign_test(traj, t_tilde: float, c2_value: float, params: EpidemicParams = None) -> int:
    """Sign of the prevalence slope right after switching the cost to ``c2_value`` at ``t_tilde``."""
    params = params or traj.params
    if not (math.isfinite(c2_value) and c2_value > 0):
        raise ValueError(f"counterfactual cost must be > 0, got {c2_value}")
    if params.c_lower is not None and c2_value < params.c_lower:
        raise ValueError(f"counterfactual cost {c2_value} is below c_lower={params.c_lower}")
    j = traj.index_at(t_tilde, side="right")
    st = traj.state(j)
    _, di, _, _ = derivatives(SystemState(st.t, st.s, st.i, st.r, c2_value), 0.0, params)
    return int(np.sign(di))
