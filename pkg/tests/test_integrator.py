import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st, HealthCheck

from behavsir import (Constant, EpidemicParams, Fatigue, LinearInTime, PiecewiseSchedule, Segment,
                      SimConfig, Tabulated, simulate, terminal_summary)
from behavsir.errors import NumericalError, OutOfRangeError, ValidationError
from oracles import classical_sir_rk4

FROZEN = json.loads(Path(__file__).with_name("frozen_oracles.json").read_text())
B, G = 0.3 + 1 / 7, 1 / 7
EX1 = EpidemicParams(beta=B, gamma=G, eta=2761.63, i0=1e-4)


@st.composite
def fatigue_cases(draw):
    gamma = draw(st.floats(1 / 14, 1 / 4))
    beta = gamma * draw(st.floats(1.2, 3.0))
    p = EpidemicParams(beta=beta, gamma=gamma, eta=draw(st.floats(0.0, 3000.0)),
                       i0=draw(st.floats(1e-6, 1e-2)))
    m = Fatigue(c0=draw(st.floats(0.05, 5.0)), k=draw(st.floats(1e-3, 0.1)), r=draw(st.floats(0.0, 0.5)))
    return p, m


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(fatigue_cases())
def test_conservation_and_monotonicity(case):
    p, m = case
    traj = simulate(p, m, SimConfig(t_max=300.0, dt=0.01, output_every=5))
    assert np.max(np.abs(traj.s + traj.i + traj.r - 1.0)) <= 1e-9
    assert np.all(np.diff(traj.s) <= 0)
    assert np.all(np.diff(traj.r) >= 0)
    assert np.all(np.diff(traj.t) > 0)
    assert np.all((traj.eps >= 0) & (traj.eps <= 1))
    # once exposure is positive it stays positive under fatigue
    pos = np.flatnonzero(traj.eps > 0)
    if pos.size:
        assert np.all(traj.eps[pos[0]:] > 0)


def test_i_dot_from_right_hand_side():
    traj = simulate(EX1, LinearInTime(0.05, 0.005), SimConfig(t_max=50.0))
    expect = traj.i * (B * traj.eps * traj.s - G)
    assert np.allclose(traj.i_dot, expect, rtol=1e-13, atol=1e-20)


@pytest.mark.parametrize("model", [Constant(2.0), Fatigue(c0=1.0, k=0.05, r=0.1)])
def test_dt_halving(model):
    p = EX1.with_(eta=500.0)
    a = simulate(p, model, SimConfig(t_max=300.0, dt=0.01))
    b = simulate(p, model, SimConfig(t_max=300.0, dt=0.005, output_every=2))
    assert np.array_equal(np.round(a.t, 9), np.round(b.t, 9))
    assert np.max(np.abs(a.i - b.i)) <= 1e-8


def test_eta_zero_matches_classical_rk4():
    p = EpidemicParams(beta=0.5, gamma=0.2, eta=0.0, i0=1e-3)
    traj = simulate(p, Constant(1.0), SimConfig(t_max=200.0, dt=0.01, stop_when_i_below=0.0))
    ref = classical_sir_rk4(0.5, 0.2, 1e-3, 0.01, 20000)
    assert len(traj) == len(ref)
    assert np.max(np.abs(traj.s - ref[:, 0])) <= 1e-12
    assert np.max(np.abs(traj.i - ref[:, 1])) <= 1e-12


def test_disease_free():
    p = EX1.with_(i0=0.0)
    traj = simulate(p, Constant(2.0), SimConfig(t_max=10.0, dt=0.1, stop_when_i_below=0.0))
    assert np.all(traj.s == 1.0) and np.all(traj.i == 0.0) and np.all(traj.r == 0.0)
    summ = terminal_summary(traj)
    assert summ.s_inf == 1.0 and summ.converged


def test_terminal_summary_no_behavior():
    p = EpidemicParams(beta=0.4, gamma=0.2, eta=0.0, i0=1e-3)
    traj = simulate(p, Constant(1.0), SimConfig(t_max=2000.0, dt=0.05, output_every=20))
    summ = terminal_summary(traj)
    assert summ.s_inf < 0.5 == summ.herd_threshold
    assert summ.converged


def test_early_stop_and_thinning():
    p = EpidemicParams(beta=0.4, gamma=0.2, eta=0.0, i0=1e-3)
    traj = simulate(p, Constant(1.0), SimConfig(t_max=5000.0, dt=0.05, output_every=10))
    assert traj.stopped_early and traj.t_end < 5000.0
    assert traj.i[-1] < 1e-12 <= traj.i[-2]
    assert np.allclose(np.diff(traj.t[:-1]), 0.5)


def test_output_every_keeps_jump_samples():
    sched = PiecewiseSchedule((Segment(0.0, 2.0), Segment(10.005, 2.5)))
    traj = simulate(EX1, sched, SimConfig(t_max=20.0, dt=0.01, output_every=100))
    j = traj.index_at(10.005, "left")
    assert traj.c[j] == 2.0 and traj.c[j + 1] == 2.5


def test_numba_matches_pure_python():
    code = ("import numpy as np, sys; from behavsir import *;"
            "t = simulate(EpidemicParams(beta=0.44, gamma=0.14, eta=500.0, i0=1e-4),"
            " PiecewiseSchedule((Segment(0.0, None, Fatigue(c0=1.0, k=0.05, r=0.1)), Segment(40.0, 1.5))),"
            " SimConfig(t_max=80.0, dt=0.01));"
            "np.save(sys.argv[1], np.stack([t.s, t.i, t.c]))")
    out = Path(os.environ.get("TMPDIR", "/tmp")) / f"behavsir_py_{os.getpid()}.npy"
    env = dict(os.environ, BEHAVSIR_DISABLE_JIT="1")
    subprocess.run([sys.executable, "-c", code, str(out)], env=env, check=True)
    py = np.load(out)
    out.unlink()
    p = EpidemicParams(beta=0.44, gamma=0.14, eta=500.0, i0=1e-4)
    m = PiecewiseSchedule((Segment(0.0, None, Fatigue(c0=1.0, k=0.05, r=0.1)), Segment(40.0, 1.5)))
    t = simulate(p, m, SimConfig(t_max=80.0, dt=0.01))
    assert np.max(np.abs(np.stack([t.s, t.i, t.c]) - py)) <= 1e-14


def test_step_too_large_is_reported():
    p = EpidemicParams(beta=50.0, gamma=1.0, eta=0.0, i0=0.5)
    with pytest.raises(NumericalError) as exc:
        simulate(p, Constant(1.0), SimConfig(t_max=10.0, dt=1.0))
    assert exc.value.t is not None


def test_cost_floor_breach_is_reported():
    with pytest.raises(NumericalError):
        simulate(EX1.with_(c_lower=0.01), LinearInTime(0.05, -0.01), SimConfig(t_max=10.0))


@pytest.mark.parametrize("cfg", [dict(t_max=0.0), dict(t_max=10.0, dt=20.0), dict(t_max=1.0, output_every=0),
                                 dict(t_max=1.0, stop_when_i_below=-1.0), dict(t_max=float("nan"))])
def test_config_validation(cfg):
    with pytest.raises(ValidationError):
        simulate(EX1, Constant(2.0), SimConfig(**cfg))


def test_jump_beyond_horizon_rejected():
    sched = PiecewiseSchedule((Segment(0.0, 2.0), Segment(50.0, 2.2)))
    with pytest.raises(ValidationError):
        simulate(EX1, sched, SimConfig(t_max=40.0))


def test_tabulated_domain_shorter_than_horizon():
    tab = Tabulated(((0.0, 2.0), (10.0, 2.0)), interpolation="linear")
    with pytest.raises(OutOfRangeError):
        simulate(EX1, tab, SimConfig(t_max=20.0))


def test_against_frozen_reference():
    ex1 = simulate(EX1, LinearInTime(0.05, 0.005), SimConfig(t_max=60.0))
    for t, v in FROZEN["example1"]["I"].items():
        assert ex1.i[ex1.index_at(float(t))] == pytest.approx(v, rel=1e-7)
    fz = FROZEN["fatigue"]
    fp = fz["params"]
    traj = simulate(EX1.with_(eta=fp["eta"]), Fatigue(c0=fp["c0"], k=fp["k"], r=fp["r"]),
                    SimConfig(t_max=300.0))
    for t, v in fz["c"].items():
        assert traj.c[traj.index_at(float(t))] == pytest.approx(v, rel=1e-9)
    for t, v in fz["I"].items():
        assert traj.i[traj.index_at(float(t))] == pytest.approx(v, rel=1e-7)
    hol = simulate(EX1, PiecewiseSchedule((Segment(0.0, 2.0), Segment(80.0, 2.2), Segment(139.0, 2.0))),
                   SimConfig(t_max=200.0))
    for t, v in FROZEN["holiday"]["I"].items():
        assert hol.i[hol.index_at(float(t))] == pytest.approx(v, rel=1e-7)
