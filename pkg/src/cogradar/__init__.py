"""Cognitive MIMO radar toolkit: robust detection, max-min beamforming and SARSA control."""

from .agent import ActionSet, AgentConfig, QTable, RewardMode, build_action_set, extract_state, reward, sarsa_update, select_action
from .array import ArrayConfig, beampattern, omni_weights, scale_to_power, steering, transmit_power, virtual_channel
from .beamformer import BeamProblem, ConvergenceError, IcaState, linearize, pattern_value, solve_subproblem, synthesize
from .detector import BinDecisions, CellDecision, alpha_hat, decide, detect_bins, marcum_q1, threshold, wald_statistic
from .disturbance import (
    BandedCovariance,
    DisturbanceSpec,
    autocovariance,
    covariance_matrix,
    default_lag,
    estimate_banded_cov,
    generate,
    marginal_power,
    psd,
    six_pole_clutter,
)
from .simulator import Policy, PulseRecord, Report, Scenario, TargetEvent, run_episode, run_monte_carlo, synthesize_return
from .scenario_file import PRESETS, emit_scenario, parse_scenario, preset, scenario_from_text

__version__ = "0.1.0"

__all__ = [
    "PRESETS", "ActionSet", "AgentConfig", "ArrayConfig", "BandedCovariance", "BeamProblem", "BinDecisions",
    "CellDecision", "ConvergenceError", "DisturbanceSpec", "IcaState", "Policy", "PulseRecord",
    "QTable", "Report", "RewardMode", "Scenario", "TargetEvent", "alpha_hat", "autocovariance",
    "beampattern", "build_action_set", "covariance_matrix", "decide", "default_lag", "detect_bins", "emit_scenario",
    "estimate_banded_cov", "extract_state", "generate", "linearize", "marcum_q1", "marginal_power",
    "omni_weights", "parse_scenario", "pattern_value", "preset", "psd", "reward", "run_episode", "run_monte_carlo",
    "sarsa_update", "scale_to_power", "scenario_from_text", "select_action", "six_pole_clutter", "solve_subproblem",
    "steering", "synthesize", "synthesize_return", "threshold", "transmit_power", "virtual_channel",
    "wald_statistic",
]
