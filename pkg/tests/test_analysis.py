import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from behavsir import (Constant, EpidemicParams, Fatigue, LinearInTime, PiecewiseSchedule, Segment,
                      SimConfig, SystemState, Tabulated, curvature_at_stationary, detect_waves,
                      lemma1_escape_cost, perturbation_sign_test, simulate, single_peak_condition,
                      threshold_cost, threshold_series)
from behavsir.analysis import _extrema
from behavsir.model import derivatives

FROZEN = json.loads(Path(__file__).with_name("frozen_oracles.json").read_text())
B, G = 0.3 + 1 / 7, 1 / 7
EX1 = EpidemicParams(beta=B, gamma=G, eta=2761.63, i0=1e-4)
HOLIDAY = PiecewiseSchedule((Segment(0.0, 2.0), Segment(80.0, 2.2), Segment(139.0, 2.0)))
LOCKDOWN = PiecewiseSchedule((Segment(0.0, 2.0), Segment(30.0, 1.8), Segment(90.0, 2.0)))


@pytest.fixture(scope="module")
def baseline():
    return simulate(EX1, Constant(2.0), SimConfig(t_max=150.0))


def test_extrema_plateau_and_noise():
    t = np.arange(9.0)
    x = np.array([0, 1, 2, 2, 2, 1, 0, 0, 0], dtype=float)
    slope = np.array([1, 1, 0, 0, 0, -1, -1, 0, 0], dtype=float)
    pk, tr = _extrema(t, x, slope)
    assert len(pk) == 1 and x[pk[0]] == 2 and tr == []
    # a peak/trough pair smaller than the prominence floor is dropped
    x = np.array([0, 1, 1 + 1e-12, 1, 2, 1], dtype=float)
    slope = np.array([1, 1e-6, -1e-6, 1, -1, -1], dtype=float)
    pk, tr = _extrema(t[:6], x, slope)
    assert [x[j] for j in pk] == [2.0] and tr == []


def test_monotone_decay_has_no_wave():
    p = EX1.with_(eta=2761.63)
    traj = simulate(p, Constant(0.05), SimConfig(t_max=100.0))
    assert np.all(traj.i_dot < 0)
    assert detect_waves(traj).wave_count == 0


def test_baseline_single_peak_near_day_35(baseline):
    rep = detect_waves(baseline)
    assert rep.wave_count == 1
    t_ref = FROZEN["constant_c2"]["idot_roots"][0][0]
    assert rep.peaks[0][0] == pytest.approx(t_ref, abs=0.01)
    assert 30 <= rep.peaks[0][0] <= 40


def test_holiday_two_waves():
    traj = simulate(EX1, HOLIDAY, SimConfig(t_max=200.0))
    rep = detect_waves(traj)
    assert rep.wave_count == 2
    refs = [t for t, _ in FROZEN["holiday"]["idot_roots"]]
    assert [pk[0] for pk in rep.peaks] == pytest.approx(refs, abs=0.01)
    assert 95 <= rep.peaks[1][0] <= 105
    assert len(rep.troughs) == 1 and rep.peaks[0][0] < rep.troughs[0][0] < rep.peaks[1][0]
    d = rep.to_dict()
    assert d["wave_count"] == 2 and len(d["peaks"]) == 2


def test_curvature_examples():
    p = EpidemicParams(beta=0.4, gamma=0.1, eta=100.0, i0=0.01)
    # eps = 0.6 needs beta*eta*I/c = 0.4 with I = 0.01, so c = 1
    state = SystemState(0.0, 0.5, 0.01, 0.49, 1.0)
    assert curvature_at_stationary(state, 0.02, p) == pytest.approx(1.312e-5, rel=1e-12)
    assert curvature_at_stationary(state, 0.0, p) < 0
    assert curvature_at_stationary(state, 0.36 / 100.0, p) == pytest.approx(0.0, abs=1e-20)


def test_single_peak_condition_cases(baseline):
    res = single_peak_condition(baseline)
    assert res.verdict and res.sufficient_verdict
    lin = simulate(EX1, LinearInTime(0.05, 0.005), SimConfig(t_max=200.0))
    r = single_peak_condition(lin)
    assert np.all(np.diff(r.lhs) <= 0)
    assert not r.applicable[0]          # eps(0) = 0
    eta0 = simulate(EX1.with_(eta=0.0), LinearInTime(0.05, 0.5), SimConfig(t_max=10.0))
    assert single_peak_condition(eta0).verdict


def test_single_peak_condition_fails_on_escape_path():
    c0, eta = 1.0, 50.0
    # one knot per grid sample: a coarser chord sits above the convex path
    ts = np.linspace(0.0, 45.0, 4501)
    tab = Tabulated(tuple(zip(ts, lemma1_escape_cost(c0, eta, ts))), interpolation="linear")
    p = EpidemicParams(beta=0.5, gamma=0.2, eta=eta, i0=1e-4)
    traj = simulate(p, tab, SimConfig(t_max=45.0, dt=0.01))
    res = single_peak_condition(traj)
    assert res.applicable[1:].all()
    assert not res.holds[res.applicable].any()


def test_threshold_cost_examples():
    inf_state = SystemState(0.0, G / B, 0.01, 1 - G / B - 0.01, 1.0)
    assert threshold_cost(inf_state, EX1) == math.inf
    c_bar0 = threshold_cost(SystemState(0.0, 1 - 1e-4, 1e-4, 0.0, 0.05), EX1)
    assert c_bar0 == pytest.approx(0.1805, abs=5e-4)
    assert c_bar0 > 0.05


def test_threshold_equals_cost_at_peak(baseline):
    j = int(np.argmax(baseline.i))
    ts = threshold_series(baseline)
    assert ts.c_bar[j] == pytest.approx(2.0, rel=1e-3)
    assert len(ts.crossings) == 1
    assert ts.crossings[0] == pytest.approx(FROZEN["constant_c2"]["idot_roots"][0][0], abs=0.01)


def test_threshold_landmarks(baseline):
    ts = threshold_series(baseline)
    j = baseline.index_at(15.0)
    assert ts.c_bar[j] == pytest.approx(FROZEN["constant_c2"]["c_bar_15"], rel=1e-6)
    assert 1.7 < ts.c_bar[j] < 1.9
    lock = simulate(EX1, LOCKDOWN, SimConfig(t_max=150.0))
    lts = threshold_series(lock)
    h30, h50 = lts.headroom[lock.index_at(30.0)], lts.headroom[lock.index_at(50.0)]
    assert 0 < h50 < h30 and h50 < 0.01


def test_threshold_infinite_past_herd_immunity():
    p = EX1.with_(eta=10.0)
    traj = simulate(p, Constant(2.0), SimConfig(t_max=400.0))
    ts = threshold_series(traj)
    below = traj.s <= G / B
    assert below.any() and np.all(np.isinf(ts.c_bar[below]))
    assert np.all(np.isfinite(ts.c_bar[~below])) and np.all(ts.c_bar[~below] > 0)


def test_perturbation_examples(baseline):
    params = baseline.params.with_(c_lower=1e-3)
    for t in (5.0, 20.0, 60.0):
        j = baseline.index_at(t)
        c_bar = threshold_cost(baseline.state(j), params)
        assert perturbation_sign_test(baseline, t, c_bar * (1 - 1e-3), params) == -1
        assert perturbation_sign_test(baseline, t, c_bar * (1 + 1e-3), params) == 1


def test_perturbation_past_herd_immunity():
    p = EX1.with_(eta=10.0)
    traj = simulate(p, Constant(2.0), SimConfig(t_max=400.0))
    late = traj.t[traj.s <= G / B][5]
    for c2 in (0.01, 1.0, 100.0):
        assert perturbation_sign_test(traj, late, c2, p.with_(c_lower=1e-3, c0=2.0)) <= 0


def test_perturbation_rejects_low_cost(baseline):
    with pytest.raises(ValueError):
        perturbation_sign_test(baseline, 10.0, 1.0)   # below c_lower = 2
    with pytest.raises(ValueError):
        perturbation_sign_test(baseline, 10.0, -1.0, baseline.params.with_(c_lower=1e-3))


@settings(max_examples=200)
@given(st.floats(0.35, 0.999), st.floats(1e-6, 0.2), st.floats(1.0, 5000.0),
       st.floats(1e-3, 10.0))
def test_threshold_sign_equivalence(s, i, eta, c):
    """Pointwise: I' < 0 exactly when c is below the threshold."""
    p = EpidemicParams(beta=B, gamma=G, eta=eta, i0=1e-4)
    if s + i > 1:
        return
    state = SystemState(0.0, s, i, 1 - s - i, c)
    c_bar = threshold_cost(state, p)
    _, di, _, _ = derivatives(state, 0.0, p)
    if abs(c - c_bar) > 1e-9 * c_bar:
        assert (di < 0) == (c < c_bar)


def test_fatigue_cost_peaks_near_stationary_prevalence():
    p = EX1.with_(eta=500.0)
    traj = simulate(p, Fatigue(c0=1.0, k=0.05, r=0.1), SimConfig(t_max=800.0))
    rep = detect_waves(traj)
    assert rep.wave_count == 1 and len(rep.c_peaks) == 1
    tc, ti = rep.c_peaks[0][0], rep.peaks[0][0]
    assert tc >= ti - traj.cfg.dt
    j = traj.index_at(tc)
    assert traj.i_dot[j] <= 1e-9
