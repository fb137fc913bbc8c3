import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from behavsir import (Constant, EpidemicParams, SimConfig, TransmissionPath, implement_transmission,
                      reproduction_constraint_check, simulate, simulate_reduced, threshold_series)
from behavsir.errors import InfeasiblePathError, OutOfRangeError, ValidationError

B, G = 0.3 + 1 / 7, 1 / 7
EX1 = EpidemicParams(beta=B, gamma=G, eta=2761.63, i0=1e-4)


def flat(value, t_end=100.0):
    return TransmissionPath(((0.0, value),), t_end=t_end)


def test_reduced_matches_no_behavior_run():
    p = EX1.with_(eta=0.0)
    cfg = SimConfig(t_max=100.0, stop_when_i_below=0.0)
    red = simulate_reduced(p, flat(B), cfg)
    ref = simulate(p, Constant(1.0), cfg)
    assert np.max(np.abs(red.i - ref.i)) <= 1e-10
    assert np.all(np.isnan(red.c))


def test_reduced_pure_recovery():
    red = simulate_reduced(EX1, flat(0.0), SimConfig(t_max=50.0, stop_when_i_below=0.0))
    assert np.all(red.s == EX1.s0)
    assert np.allclose(red.i, 1e-4 * np.exp(-G * red.t), rtol=1e-9)


def test_reduced_stationary_start():
    red = simulate_reduced(EX1, flat(G / EX1.s0), SimConfig(t_max=5.0))
    assert abs(red.i_dot[0]) < 1e-20


def test_reduced_domain_too_short():
    with pytest.raises(OutOfRangeError):
        simulate_reduced(EX1, flat(0.2, t_end=50.0), SimConfig(t_max=60.0))


def test_zero_target_cost_is_clamp_boundary():
    res = implement_transmission(EX1, flat(0.0, 60.0), SimConfig(t_max=60.0, dt=0.01))
    assert np.allclose(res.c_tilde, B * EX1.eta * res.reduced_traj.i, rtol=1e-14)
    assert np.all(res.feasibility)


@pytest.mark.parametrize("path", [
    TransmissionPath(((0.0, 0.3), (40.0, B)), t_end=80.0),
    TransmissionPath(((0.0, 0.3), (40.0, 0.9)), t_end=80.0),
    TransmissionPath(((0.0, 0.1), (80.0, B)), interpolation="linear"),
])
def test_infeasible_rejected(path):
    with pytest.raises(InfeasiblePathError) as exc:
        implement_transmission(EX1, path, SimConfig(t_max=80.0))
    assert exc.value.intervals and exc.value.intervals[0][1] >= 40.0


def test_negative_target_rejected():
    with pytest.raises(ValidationError):
        implement_transmission(EX1, flat(-0.1), SimConfig(t_max=10.0))


def test_eta_zero_cannot_implement():
    with pytest.raises(ValidationError):
        implement_transmission(EX1.with_(eta=0.0), flat(0.2), SimConfig(t_max=10.0))


def test_two_level_roundtrip():
    path = TransmissionPath(((0.0, 0.3), (60.0, 0.15)), t_end=200.0)
    res = implement_transmission(EX1, path, SimConfig(t_max=200.0, dt=0.005))
    assert res.roundtrip_error <= 1e-6
    assert np.all(res.c_tilde > 0)
    assert np.array_equal(res.t, res.behavioral_traj.t)


def test_low_implementing_cost_warns():
    p = EX1.with_(c_lower=10.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = implement_transmission(p, flat(0.3, 20.0), SimConfig(t_max=20.0, dt=0.01))
    assert res.warnings and any(issubclass(w.category, RuntimeWarning) for w in caught)


@settings(max_examples=100)
@given(st.floats(1e-8, 0.5), st.floats(1e-8, 0.5), st.floats(0.0, 0.99))
def test_implementing_cost_increasing_in_prevalence(i1, i2, frac):
    bt = frac * B
    lo, hi = sorted((i1, i2))
    c = lambda i: B * B * EX1.eta * i / (B - bt)
    if hi > lo:
        assert c(hi) > c(lo)


def test_reproduction_constraint_matches_growth_sign():
    traj = simulate(EX1, Constant(2.0), SimConfig(t_max=150.0))
    ok = reproduction_constraint_check(traj)
    live = (traj.s > G / B) & (traj.i > 0) & (np.abs(traj.i_dot) > 1e-12)
    assert np.array_equal(ok[live], traj.i_dot[live] < 0)
    assert not ok[traj.index_at(10.0)]
    re = traj.r_effective()
    assert np.array_equal(ok[live], re[live] <= 1)


def test_reproduction_constraint_past_herd_immunity():
    p = EX1.with_(eta=10.0)
    traj = simulate(p, Constant(2.0), SimConfig(t_max=400.0))
    ok = reproduction_constraint_check(traj)
    assert np.all(ok[traj.s <= G / B])
    j = int(np.argmax(traj.i))
    assert threshold_series(traj).c_bar[j] == pytest.approx(2.0, rel=1e-2)


def test_path_value_and_validation():
    lin = TransmissionPath(((0.0, 0.1), (10.0, 0.3)), interpolation="linear", t_end=20.0)
    assert lin.value(5.0) == pytest.approx(0.2)
    assert lin.value(15.0) == pytest.approx(0.3)
    step = TransmissionPath(((0.0, 0.1), (10.0, 0.3)))
    assert step.value(9.999) == 0.1 and step.value(10.0) == 0.3
    with pytest.raises(OutOfRangeError):
        step.value(11.0)
    bad = TransmissionPath(((0.0, 0.1), (10.0, 0.3), (5.0, 0.2)), interpolation="bogus")
    assert len(bad.problems()) == 2
