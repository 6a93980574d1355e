"""Decentralized fictitious play in near-potential games."""
from .game import (
    CapacityError,
    Game,
    PotentialFit,
    PotentialFunction,
    coordination_game,
    enumerate_pure_ne,
    expected_utility,
    expected_utility_pure,
    fit_closest_potential,
    is_epsilon_ne,
    is_exact_potential,
    mpd,
    psi,
)
from .network import NetworkSchedule, WeightRule, neighbors, validate_connectivity, weight_row
from .dynamics import DfpState, RunConfig, TraceRecord, best_response, run, step_dfp, step_fp

__version__ = "0.1.0"
