"""Cooperative rate-splitting for a two-user MISO broadcast channel with a
user relay: rate expressions, a WMMSE-based optimizer, baseline schemes and
rate-region tooling."""

__version__ = "0.1.0"

from .ao import ao_solve, initialize_precoders, theta_search
from .design import DesignPoint, InfeasibleError
from .kernel import CommonRateSplit, PrecoderSet, rate_report
from .region import RateRegion, hypervolume, region_dominates, solve_regions, sweep_weights
from .scenario import (ChannelGeometry, Scenario, build_parametric_scenario,
                       build_random_scenario, load_scenario, save_scenario)
from .schemes import SCHEME_NAMES, SCHEMES, SchemeSpec, scheme_constraints, solve_scheme

__all__ = [
    "ao_solve", "initialize_precoders", "theta_search", "DesignPoint", "InfeasibleError",
    "CommonRateSplit", "PrecoderSet", "rate_report", "RateRegion", "hypervolume",
    "region_dominates", "solve_regions", "sweep_weights", "ChannelGeometry", "Scenario",
    "build_parametric_scenario", "build_random_scenario", "load_scenario", "save_scenario",
    "SCHEME_NAMES", "SCHEMES", "SchemeSpec", "scheme_constraints", "solve_scheme",
]
