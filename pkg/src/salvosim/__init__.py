"""Deterministic simulator for cooperative simultaneous interception of a
stationary target by a heterogeneous interceptor team.

Only a subset of interceptors carries a seeker; the rest reconstruct the
target position through a distributed observer running over a directed
sensing graph.  A time-to-go consensus law coordinates a common interception
time over a directed actuation graph, and an optional canard autopilot
realizes the commanded lateral acceleration through sliding-mode fin
deflection commands.  Observer, consensus, and autopilot all converge within
horizons that are chosen up front as design parameters.
"""

from salvosim.graph import DirectedGraph
from salvosim.scenario import ScenarioConfig, load_scenario, parse_scenario
from salvosim.simulator import Simulation, run_scenario

__all__ = [
    "DirectedGraph",
    "ScenarioConfig",
    "Simulation",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
]

__version__ = "0.1.0"
