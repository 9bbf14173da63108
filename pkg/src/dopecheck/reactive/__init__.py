"""Reactive models: transition systems, traces and temporal logic."""
from .ltl import Monitor, UnsupportedFragment, parse_ltl
from .ts import Builder, Lasso, ModelError, OutputSet, Signal, TransitionSystem, as_function, dump_model, load_model, project

__all__ = [
    "Builder", "Lasso", "ModelError", "Monitor", "OutputSet", "Signal", "TransitionSystem",
    "UnsupportedFragment", "as_function", "dump_model", "load_model", "parse_ltl", "project",
]
