"""Petri nets with amplitude-valued tokens and marking-dependent arc weights.

Simulation, analysis and verification of quantum communication protocols
modeled as Petri nets: measurement, entanglement, interference, the quantum
Zeno effect, and the SLAZ2013 direct counterfactual communication protocol.
"""

from .errors import QpnError
from .expr import WeightExpr, evaluate, format_expr, free_places, parse
from .net import (
    Arc,
    ArcKind,
    FinalState,
    Marking,
    PetriNet,
    PlaceDecl,
    PlaceKind,
    Policy,
    RunConfig,
    TerminalStatus,
    Trace,
    TransitionDecl,
    conflict_groups,
    fire,
    is_enabled,
    run,
    run_final,
    step,
)
from .quantum import QuantumMapping, StateVector, amplitudes, measure, probabilities, superpose

__all__ = [
    "QpnError",
    "WeightExpr",
    "parse",
    "evaluate",
    "format_expr",
    "free_places",
    "Arc",
    "ArcKind",
    "FinalState",
    "Marking",
    "PetriNet",
    "PlaceDecl",
    "PlaceKind",
    "Policy",
    "RunConfig",
    "TerminalStatus",
    "Trace",
    "TransitionDecl",
    "conflict_groups",
    "fire",
    "is_enabled",
    "run",
    "run_final",
    "step",
    "QuantumMapping",
    "StateVector",
    "amplitudes",
    "measure",
    "probabilities",
    "superpose",
]

__version__ = "0.1.0"
