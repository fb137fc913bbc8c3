"""Behavioral SIR dynamics with a time-varying cost of social distancing."""
from .analysis import (PeakReport, SinglePeakResult, ThresholdSeries, curvature_at_stationary,
                       detect_waves, perturbation_sign_test, single_peak_condition,
                       threshold_cost, threshold_series)
from .costs import (Constant, Fatigue, LinearInTime, PiecewiseSchedule, Segment, Tabulated,
                    apply_jump, cost_rate, fatigue_closed_form, lemma1_escape_cost)
from .errors import (BehavsirError, InfeasiblePathError, NumericalError, OutOfRangeError,
                     ScheduleError, ValidationError)
from .integrator import SimConfig, Trajectory, simulate, terminal_summary
from .io import write_trajectory_csv
from .model import EpidemicParams, SystemState, derivatives, exposure, initial_growth_check, r_effective
from .policy import (ImplementationResult, TransmissionPath, implement_transmission,
                     reproduction_constraint_check, simulate_reduced)
from .scenario import Scenario, dump_scenario, load_scenario, parse_scenario

__version__ = "0.1.0"
