"""Fixed-step RK4 kernels for the coupled (S, I, R, c) system.

Every function here is numba-compiled unless ``BEHAVSIR_DISABLE_JIT`` is
set, in which case the same source runs as plain Python.

Output buffer columns: t, S, I, R, c, transmission (beta*eps or the target
rate), I_dot, c_dot, tag (0 regular, 1 left limit at a jump, 2 right limit).
"""
import math

import numpy as np

from ._accel import maybe_njit

MODE_BEHAVIORAL = 0
MODE_REDUCED = 1

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_BOUNDS = 2
STATUS_COST_FLOOR = 3

NCOL = 9
BOUND_TOL = 1e-12


@maybe_njit
def rates(mode, t, s, i, c, beta, gamma, eta, kind, q0, q1, q2, seg_t0):
    """Right-hand side at one point; returns (dS, dI, dR, dc, transmission)."""
    if mode == 0:
        eps = 1.0 - beta * eta * i / c
        if eps < 0.0:
            eps = 0.0
        trans = beta * eps
        if kind == 0:
            dc = 0.0
        elif kind == 1:
            dc = q0
        else:
            dc = q1 * (1.0 - eps) - q2 * (c - q0)
    else:
        if kind == 0:
            trans = q0
        else:
            trans = q0 + q1 * (t - seg_t0)
        dc = 0.0
    infection = trans * i * s
    recovery = gamma * i
    return -infection, infection - recovery, recovery, dc, trans


@maybe_njit
def _record(out, j, mode, t, s, i, r, c, beta, gamma, eta, kind, q0, q1, q2, seg_t0, tag):
    ds, di, dr, dc, trans = rates(mode, t, s, i, c, beta, gamma, eta, kind, q0, q1, q2, seg_t0)
    out[j, 0] = t
    out[j, 1] = s
    out[j, 2] = i
    out[j, 3] = r
    out[j, 4] = c
    out[j, 5] = trans
    out[j, 6] = di
    out[j, 7] = dc
    out[j, 8] = tag


@maybe_njit
def _guard(x):
    """Clamp tiny undershoot/overshoot; flag anything larger."""
    if x < 0.0:
        if x >= -BOUND_TOL:
            return 0.0, True
        return x, False
    if x > 1.0:
        if x <= 1.0 + BOUND_TOL:
            return 1.0, True
        return x, False
    return x, True


@maybe_njit
def integrate(mode, beta, gamma, eta, s0, i0, r0, c_init, c_floor,
              grid, seg_of_point, seg_t, kind, p0, p1, p2, act, val,
              every, stop_below):
    """Integrate over ``grid``; the segment of each point governs the outgoing step.

    A point where the segment index changes is a segment start: its action
    is applied there (1 = jump with left/right samples, 2 = reset ``c`` to a
    knot value without an extra sample).

    Returns ``(status, t_fail, n_rows, out)``.
    """
    npts = grid.shape[0]
    njump = 0
    for m in range(act.shape[0]):
        if act[m] == 1:
            njump += 1
    out = np.empty((npts + njump + 1, 9))
    floor = c_floor * (1.0 - 1e-12)

    s = s0
    i = i0
    r = r0
    c = c_init
    m = seg_of_point[0]
    _record(out, 0, mode, grid[0], s, i, r, c, beta, gamma, eta,
            kind[m], p0[m], p1[m], p2[m], seg_t[m], 0.0)
    n = 1

    for k in range(npts - 1):
        t = grid[k]
        h = grid[k + 1] - t
        m = seg_of_point[k]
        kd = kind[m]
        a0 = p0[m]
        a1 = p1[m]
        a2 = p2[m]
        st = seg_t[m]
        hh = 0.5 * h

        k1s, k1i, k1r, k1c, _ = rates(mode, t, s, i, c, beta, gamma, eta, kd, a0, a1, a2, st)
        k2s, k2i, k2r, k2c, _ = rates(mode, t + hh, s + hh * k1s, i + hh * k1i, c + hh * k1c,
                                      beta, gamma, eta, kd, a0, a1, a2, st)
        k3s, k3i, k3r, k3c, _ = rates(mode, t + hh, s + hh * k2s, i + hh * k2i, c + hh * k2c,
                                      beta, gamma, eta, kd, a0, a1, a2, st)
        k4s, k4i, k4r, k4c, _ = rates(mode, t + h, s + h * k3s, i + h * k3i, c + h * k3c,
                                      beta, gamma, eta, kd, a0, a1, a2, st)
        w = h / 6.0
        s = s + w * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
        i = i + w * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
        r = r + w * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
        if mode == 0:
            c = c + w * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)

        t_new = grid[k + 1]
        if not (math.isfinite(s) and math.isfinite(i) and math.isfinite(r)):
            return STATUS_NONFINITE, t_new, n, out
        if mode == 0 and not math.isfinite(c):
            return STATUS_NONFINITE, t_new, n, out
        s, ok_s = _guard(s)
        i, ok_i = _guard(i)
        r, ok_r = _guard(r)
        if not (ok_s and ok_i and ok_r):
            return STATUS_BOUNDS, t_new, n, out

        m_next = seg_of_point[k + 1]
        last = k + 2 == npts
        stop = stop_below > 0.0 and i < stop_below
        if m_next != m:
            if act[m_next] == 1:
                if mode == 0 and c < floor:
                    return STATUS_COST_FLOOR, t_new, n, out
                _record(out, n, mode, t_new, s, i, r, c, beta, gamma, eta,
                        kd, a0, a1, a2, st, 1.0)
                n += 1
                if mode == 0:
                    c = val[m_next]
                tag = 2.0
            else:
                if act[m_next] == 2 and mode == 0:
                    c = val[m_next]
                tag = 0.0
            mm = m_next
            if mode == 0 and c < floor:
                return STATUS_COST_FLOOR, t_new, n, out
            _record(out, n, mode, t_new, s, i, r, c, beta, gamma, eta,
                    kind[mm], p0[mm], p1[mm], p2[mm], seg_t[mm], tag)
            n += 1
        else:
            if mode == 0 and c < floor:
                return STATUS_COST_FLOOR, t_new, n, out
            if (k + 1) % every == 0 or last or stop:
                _record(out, n, mode, t_new, s, i, r, c, beta, gamma, eta,
                        kd, a0, a1, a2, st, 0.0)
                n += 1
        if stop:
            break

    return STATUS_OK, 0.0, n, out


def build_grid(t_max, dt, nodes):
    """Uniform grid with every node time inserted exactly.

    Regular points within ``1e-9*dt`` of a node are replaced by the node.
    """
    n = int(math.floor(t_max / dt + 1e-9))
    reg = np.arange(n + 1, dtype=float) * dt
    tol = 1e-9 * dt
    if t_max - reg[-1] > tol:
        reg = np.append(reg, t_max)
    else:
        reg[-1] = t_max
    nodes = np.asarray(nodes, dtype=float)
    nodes = np.unique(nodes[(nodes > 0) & (nodes <= t_max)])
    if nodes.size:
        pos = np.searchsorted(nodes, reg)
        lo = np.abs(reg - nodes[np.clip(pos - 1, 0, nodes.size - 1)])
        hi = np.abs(reg - nodes[np.clip(pos, 0, nodes.size - 1)])
        keep = np.minimum(lo, hi) > tol
        keep[0] = True
        reg = np.union1d(reg[keep], nodes)
    return reg
